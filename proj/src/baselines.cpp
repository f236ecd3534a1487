#include "mlgcn/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "mlgcn/error.hpp"
#include "mlgcn/fem.hpp"

namespace mlgcn {

double crystal_scalar_conductivity(double phi) {
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    return kKappaMajor * c * c + kKappaMinor * s * s;
}

MixtureEstimates mixture_estimates(std::span<const double> fractions, std::span<const double> kappa) {
    if (fractions.size() != kappa.size() || fractions.empty()) {
        throw InputError("mixture_estimates: fractions and conductivities must be non-empty and equal length");
    }
    double total = 0.0;
    for (double chi : fractions) {
        if (chi < 0.0) throw InputError("mixture_estimates: negative volume fraction");
        total += chi;
    }
    if (std::abs(total - 1.0) > 1e-12) throw InputError("mixture_estimates: volume fractions do not sum to 1");
    double arithmetic = 0.0, compliance = 0.0;
    for (std::size_t k = 0; k < kappa.size(); ++k) {
        if (!(kappa[k] > 0.0)) throw InputError("mixture_estimates: conductivity must be positive");
        arithmetic += fractions[k] * kappa[k];
        compliance += fractions[k] / kappa[k];
    }
    MixtureEstimates est;
    est.arithmetic = arithmetic;
    est.harmonic = 1.0 / compliance;
    est.hill = 0.5 * (est.arithmetic + est.harmonic);
    return est;
}

CrystalSummary crystal_summary(const Microstructure& m) {
    CrystalSummary s;
    s.fractions.assign(m.cluster_count, 0.0);
    s.orientations.assign(m.cluster_count, 0.0);
    double total = 0.0;
    for (const Element& e : m.elements) {
        s.fractions[e.cluster] += e.area;
        s.orientations[e.cluster] = e.orientation;
        total += e.area;
    }
    for (double& chi : s.fractions) chi /= total;
    return s;
}

MixtureEstimates sample_mixtures(const Microstructure& m) {
    const CrystalSummary s = crystal_summary(m);
    std::vector<double> kappa(s.orientations.size());
    std::transform(s.orientations.begin(), s.orientations.end(), kappa.begin(), crystal_scalar_conductivity);
    return mixture_estimates(s.fractions, kappa);
}

double mean_orientation(const Microstructure& m) {
    const CrystalSummary s = crystal_summary(m);
    double phi = 0.0;
    for (std::size_t k = 0; k < s.fractions.size(); ++k) phi += s.fractions[k] * s.orientations[k];
    return phi;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw InputError("pearson: series lengths differ");
    if (x.size() < 2) throw InputError("pearson: need at least two values");
    auto constant = [](std::span<const double> v) {
        return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
    };
    if (constant(x) || constant(y)) return std::nullopt;
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace mlgcn
