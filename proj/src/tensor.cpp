#include "mlgcn/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "mlgcn/error.hpp"

namespace mlgcn {

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
    if (data_.size() != rows_ * cols_) throw InputError("tensor value count does not match shape");
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    Tensor t(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
        if (row.size() != c) throw InputError("ragged tensor literal");
        std::size_t j = 0;
        for (double v : row) t(i, j++) = v;
        ++i;
    }
    return t;
}

Tensor Tensor::column(std::span<const double> values) {
    return Tensor(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t(n, n);
    for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
}

std::vector<double> Tensor::col_values(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
}

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows()) throw InputError("matmul shape mismatch");
    Tensor out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto o = out.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            auto br = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) o[j] += aik * br[j];
        }
    }
    return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows()) throw InputError("matmul_tn shape mismatch");
    Tensor out(a.cols(), b.cols());
    for (std::size_t k = 0; k < a.rows(); ++k) {
        auto ar = a.row(k);
        auto br = b.row(k);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double aki = ar[i];
            if (aki == 0.0) continue;
            auto o = out.row(i);
            for (std::size_t j = 0; j < b.cols(); ++j) o[j] += aki * br[j];
        }
    }
    return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.cols()) throw InputError("matmul_nt shape mismatch");
    Tensor out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto ar = a.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            auto br = b.row(j);
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += ar[k] * br[k];
            out(i, j) = s;
        }
    }
    return out;
}

Tensor transpose(const Tensor& a) {
    Tensor out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

Tensor hconcat(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows()) throw InputError("hconcat row mismatch");
    Tensor out(a.rows(), a.cols() + b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto o = out.row(i);
        std::copy(a.row(i).begin(), a.row(i).end(), o.begin());
        std::copy(b.row(i).begin(), b.row(i).end(), o.begin() + static_cast<std::ptrdiff_t>(a.cols()));
    }
    return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw InputError("max_abs_diff shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

}  // namespace mlgcn
