#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace mlgcn {

// Dense row-major matrix of doubles. Node data Z (nodes x channels), weights,
// biases (1 x C) and scalars (1 x 1) all use this one type.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Tensor(std::size_t rows, std::size_t cols, std::vector<double> values);

    // Row-wise literal, e.g. Tensor::from_rows({{1, 2}, {3, 4}}).
    static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor column(std::span<const double> values);
    static Tensor identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    std::vector<double> col_values(std::size_t c) const;

    bool same_shape(const Tensor& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    bool all_finite() const;
    void fill(double v);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// out = a * b
Tensor matmul(const Tensor& a, const Tensor& b);
// out = a^T * b
Tensor matmul_tn(const Tensor& a, const Tensor& b);
// out = a * b^T
Tensor matmul_nt(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
// Column-wise concatenation [a | b]; row counts must match.
Tensor hconcat(const Tensor& a, const Tensor& b);
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace mlgcn
