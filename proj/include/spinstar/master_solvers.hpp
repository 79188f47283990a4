// master_solvers.hpp: second-order TCL and NZ dynamics under correlated projections
//
// Two correlated projections are supported:
//   Projection::m   bath sectors of fixed J_3 eigenvalue m,
//   Projection::jm  bath sectors of fixed (J^2, J_3),
// plus the closed-form population of the standard product projection.
//
// Sector coherences obey decoupled scalar equations with the two-term kernel
//   B_+ e^{i Omega_+ tau} + B_- e^{-i Omega_- tau}.
// Populations couple P^m_+ with P^{m+1}_-; the pair sum is conserved, which
// closes each pair into one scalar equation with a cosine kernel.
// Sector results live in the interaction picture of H_0 and are mapped to the
// rotating frame of the central spin by to_rotating_frame before summation.

#pragma once

#include <span>
#include <vector>

#include "spinstar/trajectory.hpp"
#include "spinstar/volterra.hpp"

namespace spinstar {

/// Complex decay exponent of a TCL2 sector coherence.
cplx lambda_coh(double rate_plus, double omega_plus, double rate_minus, double omega_minus, double t);

/// Real decay exponent coeff (1 - cos(omega t)) / omega^2 of a TCL2 sector population.
double lambda_pop(double coeff, double omega, double t);

/// Unnormalized data of one bath sector: P^s_+, P^s_-, rho^s_{+-}.
struct SectorTrajectory {
    int two_j{-1};  // -1 for the m projection
    int two_m{0};
    std::vector<double> times;
    std::vector<double> p_plus;
    std::vector<double> p_minus;
    std::vector<cplx> coh;
};

/// Multiplies coherences by e^{-4iAmt}; populations are untouched.
SectorTrajectory to_rotating_frame(SectorTrajectory s, double A);

Trajectory tcl2_coherence_m(const SystemParams& p, std::span<const double> times);
Trajectory tcl2_population_m(const SystemParams& p, std::span<const double> times);
Trajectory nz2_coherence_m(const SystemParams& p, std::span<const double> times, const SolveOptions& opts = {});
Trajectory nz2_population_m(const SystemParams& p, std::span<const double> times, const SolveOptions& opts = {});

/// Populations and coherences together.
Trajectory tcl2_m(const SystemParams& p, std::span<const double> times);
Trajectory nz2_m(const SystemParams& p, std::span<const double> times, const SolveOptions& opts = {});
Trajectory tcl2_jm(const SystemParams& p, std::span<const double> times);
Trajectory nz2_jm(const SystemParams& p, std::span<const double> times, const SolveOptions& opts = {});

/// Product projection with a maximally mixed bath; requires initial_p_plus == 1.
Trajectory standard_projection_population(const SystemParams& p, std::span<const double> times);

/// Sector-resolved rotating-frame data for method tcl2/nz2 and projection m/jm,
/// ascending (two_j, two_m). Intended for diagnostics at modest N.
std::vector<SectorTrajectory> sector_trajectories(Method method, Projection projection, const SystemParams& p,
                                                  std::span<const double> times, const SolveOptions& opts = {});

} // namespace spinstar
