#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "mlgcn/mesh.hpp"

namespace mlgcn {

// Principal conductivities of the crystal, W/m-K.
inline constexpr double kKappaMajor = 1.0;
inline constexpr double kKappaMinor = 0.25;

// Symmetric 2x2 tensor stored as {xx, xy, yy}.
struct ConductivityTensor {
    double xx = 0.0;
    double xy = 0.0;
    double yy = 0.0;
};

// R(phi) diag(kappa_major, kappa_minor) R(phi)^T.
ConductivityTensor conductivity_tensor(double phi);

struct TemperatureField {
    std::vector<double> theta;  // one value per mesh vertex
    std::size_t iterations = 0;
    double relative_residual = 0.0;
};

struct SolverOptions {
    double relative_tolerance = 1e-10;
    std::size_t max_iterations = 20000;
    double boundary_tolerance = 1e-12;
};

// Steady conduction div(kappa grad theta) = 0 with linear triangles,
// theta = 0 on x = 0, theta = 1 on x = 1 and zero flux elsewhere. Dirichlet
// rows and columns are eliminated symmetrically and the system is solved by
// Jacobi-preconditioned conjugate gradients.
//
// Throws StructuralError when no boundary vertices are found on either side
// and NumericalError when CG does not converge within the iteration cap.
TemperatureField solve_temperature(const Microstructure& m, const SolverOptions& options = {});

// Per-element flux q = -kappa_e grad theta_e.
std::vector<std::array<double, 2>> element_flux(const Microstructure& m, const TemperatureField& t);

// kappa_eff = -(L / (V dtheta)) sum_e area_e q_x with L = V = dtheta = 1.
double effective_conductivity(const Microstructure& m, const TemperatureField& t);

// Norm of the weak-form residual over the free (non-Dirichlet) vertices,
// relative to the norm of the Dirichlet load vector.
double free_residual_norm(const Microstructure& m, const TemperatureField& t,
                          double boundary_tolerance = 1e-12);

// solve_temperature followed by effective_conductivity.
double label_sample(const Microstructure& m, const SolverOptions& options = {});

}  // namespace mlgcn
