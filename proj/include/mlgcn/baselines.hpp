#pragma once

#include <optional>
#include <span>
#include <vector>

#include "mlgcn/mesh.hpp"

namespace mlgcn {

// xx component of the rotated crystal conductivity, the per-crystal scalar
// used by the mixture rules (loading is along x).
double crystal_scalar_conductivity(double phi);

struct MixtureEstimates {
    double arithmetic = 0.0;  // homogeneous gradient
    double harmonic = 0.0;    // homogeneous flux
    double hill = 0.0;        // mean of the two
};

// Throws InputError when fractions are negative or do not sum to 1 within
// 1e-12, when conductivities are not positive, or on a length mismatch.
MixtureEstimates mixture_estimates(std::span<const double> fractions, std::span<const double> kappa);

// Per-crystal volume fractions and orientations of a sample.
struct CrystalSummary {
    std::vector<double> fractions;
    std::vector<double> orientations;
};

CrystalSummary crystal_summary(const Microstructure& m);

MixtureEstimates sample_mixtures(const Microstructure& m);

// Volume-averaged orientation sum_K chi_K phi_K.
double mean_orientation(const Microstructure& m);

// Pearson correlation. nullopt is the degenerate flag: either series has
// zero variance. Throws InputError for unequal lengths or fewer than 2 values.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

}  // namespace mlgcn
