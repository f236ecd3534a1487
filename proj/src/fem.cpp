#include "mlgcn/fem.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "mlgcn/error.hpp"

namespace mlgcn {

namespace {

struct CsrMatrix {
    std::vector<std::size_t> row_ptr;
    std::vector<std::size_t> cols;
    std::vector<double> values;

    std::size_t rows() const { return row_ptr.size() - 1; }

    void multiply(const std::vector<double>& x, std::vector<double>& y) const {
        for (std::size_t i = 0; i < rows(); ++i) {
            double s = 0.0;
            for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) s += values[p] * x[cols[p]];
            y[i] = s;
        }
    }
};

struct ElementGradients {
    // Shape function gradients, one (dx, dy) per local vertex.
    std::array<std::array<double, 2>, 3> grad;
    double area;
};

ElementGradients shape_gradients(const Microstructure& m, const Element& e) {
    const Vec2& a = m.vertices[e.vertices[0]];
    const Vec2& b = m.vertices[e.vertices[1]];
    const Vec2& c = m.vertices[e.vertices[2]];
    const double twice_area = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    if (!(std::abs(twice_area) > 0.0)) throw StructuralError("degenerate element in FEM assembly");
    const double inv = 1.0 / twice_area;
    ElementGradients g;
    g.grad[0] = {(b.y - c.y) * inv, (c.x - b.x) * inv};
    g.grad[1] = {(c.y - a.y) * inv, (a.x - c.x) * inv};
    g.grad[2] = {(a.y - b.y) * inv, (b.x - a.x) * inv};
    g.area = 0.5 * std::abs(twice_area);
    return g;
}

// Dirichlet value per vertex, empty for free vertices.
std::vector<std::optional<double>> dirichlet_values(const Microstructure& m, double tol) {
    std::vector<std::optional<double>> bc(m.vertices.size());
    bool left = false, right = false;
    for (std::size_t v = 0; v < m.vertices.size(); ++v) {
        if (m.vertices[v].x <= tol) {
            bc[v] = 0.0;
            left = true;
        } else if (m.vertices[v].x >= 1.0 - tol) {
            bc[v] = 1.0;
            right = true;
        }
    }
    if (!left || !right) {
        throw StructuralError("no Dirichlet vertices found on the " + std::string(left ? "right" : "left") +
                              " boundary");
    }
    return bc;
}

// Full (unconstrained) stiffness matrix in CSR form.
CsrMatrix assemble_stiffness(const Microstructure& m) {
    const std::size_t n = m.vertices.size();
    std::vector<std::vector<std::pair<std::size_t, double>>> rows(n);
    for (const Element& e : m.elements) {
        const ElementGradients g = shape_gradients(m, e);
        const ConductivityTensor k = conductivity_tensor(e.orientation);
        for (int a = 0; a < 3; ++a) {
            const double qx = k.xx * g.grad[a][0] + k.xy * g.grad[a][1];
            const double qy = k.xy * g.grad[a][0] + k.yy * g.grad[a][1];
            for (int b = 0; b < 3; ++b) {
                const double kab = g.area * (qx * g.grad[b][0] + qy * g.grad[b][1]);
                rows[e.vertices[a]].emplace_back(e.vertices[b], kab);
            }
        }
    }
    CsrMatrix a;
    a.row_ptr.push_back(0);
    for (auto& r : rows) {
        std::sort(r.begin(), r.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
        for (std::size_t p = 0; p < r.size();) {
            std::size_t col = r[p].first;
            double sum = 0.0;
            while (p < r.size() && r[p].first == col) sum += r[p++].second;
            a.cols.push_back(col);
            a.values.push_back(sum);
        }
        a.row_ptr.push_back(a.cols.size());
    }
    return a;
}

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

ConductivityTensor conductivity_tensor(double phi) {
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    return {kKappaMajor * c * c + kKappaMinor * s * s, (kKappaMajor - kKappaMinor) * c * s,
            kKappaMajor * s * s + kKappaMinor * c * c};
}

TemperatureField solve_temperature(const Microstructure& m, const SolverOptions& options) {
    const auto bc = dirichlet_values(m, options.boundary_tolerance);
    CsrMatrix a = assemble_stiffness(m);
    const std::size_t n = a.rows();

    // Symmetric elimination: move known values to the right-hand side, then
    // zero the constrained rows and columns and put 1 on their diagonal.
    std::vector<double> rhs(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (bc[i]) continue;
        for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
            if (const auto& known = bc[a.cols[p]]) rhs[i] -= a.values[p] * *known;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
            const std::size_t j = a.cols[p];
            if (bc[i] || bc[j]) a.values[p] = (i == j) ? 1.0 : 0.0;
        }
        if (bc[i]) rhs[i] = *bc[i];
    }

    std::vector<double> inv_diag(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p)
            if (a.cols[p] == i) inv_diag[i] = 1.0 / a.values[p];
    }

    TemperatureField field;
    std::vector<double>& x = field.theta;
    x.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        if (bc[i]) x[i] = *bc[i];

    std::vector<double> r(n), z(n), p(n), q(n);
    a.multiply(x, q);
    for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - q[i];
    // Constrained rows start with zero residual, so this matches free_residual_norm.
    double rhs_norm = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (!bc[i]) rhs_norm += rhs[i] * rhs[i];
    rhs_norm = rhs_norm > 0.0 ? std::sqrt(rhs_norm) : 1.0;
    double res = norm2(r) / rhs_norm;
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    p = z;
    double rz = dot(r, z);
    std::size_t it = 0;
    while (res > options.relative_tolerance && it < options.max_iterations) {
        a.multiply(p, q);
        const double alpha = rz / dot(p, q);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        res = norm2(r) / rhs_norm;
        ++it;
        if (res <= options.relative_tolerance) break;
        for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
        const double rz_next = dot(r, z);
        const double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    if (!(res <= options.relative_tolerance)) {
        throw NumericalError("conjugate gradients did not converge after " + std::to_string(it) +
                             " iterations, relative residual " + std::to_string(res));
    }
    // Constrained entries are exact by construction; restore them bit-exactly.
    for (std::size_t i = 0; i < n; ++i)
        if (bc[i]) x[i] = *bc[i];
    field.iterations = it;
    field.relative_residual = res;
    return field;
}

std::vector<std::array<double, 2>> element_flux(const Microstructure& m, const TemperatureField& t) {
    if (t.theta.size() != m.vertices.size()) throw InputError("temperature field does not match the mesh");
    std::vector<std::array<double, 2>> flux;
    flux.reserve(m.elements.size());
    for (const Element& e : m.elements) {
        const ElementGradients g = shape_gradients(m, e);
        double gx = 0.0, gy = 0.0;
        for (int a = 0; a < 3; ++a) {
            gx += g.grad[a][0] * t.theta[e.vertices[a]];
            gy += g.grad[a][1] * t.theta[e.vertices[a]];
        }
        const ConductivityTensor k = conductivity_tensor(e.orientation);
        flux.push_back({-(k.xx * gx + k.xy * gy), -(k.xy * gx + k.yy * gy)});
    }
    return flux;
}

double effective_conductivity(const Microstructure& m, const TemperatureField& t) {
    if (t.theta.size() != m.vertices.size()) throw InputError("temperature field has not been solved on this mesh");
    const auto flux = element_flux(m, t);
    constexpr double length = 1.0, volume = 1.0, delta_theta = 1.0;
    double mean_qx = 0.0;
    for (std::size_t e = 0; e < m.elements.size(); ++e) mean_qx += m.elements[e].area * flux[e][0];
    const double kappa = -(length / (volume * delta_theta)) * mean_qx;
    if (!(kappa > 0.0)) throw NumericalError("effective conductivity is not positive");
    return kappa;
}

double free_residual_norm(const Microstructure& m, const TemperatureField& t, double boundary_tolerance) {
    const auto bc = dirichlet_values(m, boundary_tolerance);
    const CsrMatrix a = assemble_stiffness(m);
    std::vector<double> r(a.rows());
    a.multiply(t.theta, r);
    // Reference scale: the load generated by the Dirichlet data on free rows.
    std::vector<double> lifted(a.rows(), 0.0), load(a.rows());
    for (std::size_t i = 0; i < lifted.size(); ++i)
        if (bc[i]) lifted[i] = *bc[i];
    a.multiply(lifted, load);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (bc[i]) continue;
        num += r[i] * r[i];
        den += load[i] * load[i];
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

double label_sample(const Microstructure& m, const SolverOptions& options) {
    return effective_conductivity(m, solve_temperature(m, options));
}

}  // namespace mlgcn
