// exact_solution.hpp: closed-form central-spin dynamics for uniform couplings
//
// The Hamiltonian leaves invariant the two-dimensional subspaces spanned by
// |+> (x) |j,m> and |-> (x) |j,m+1>, so the reduced dynamics is a weighted sum
// of Rabi oscillations over all bath (j,m) sectors. Sums run in ascending
// (two_j, two_m) order; only time points are evaluated in parallel.

#pragma once

#include <span>

#include "spinstar/trajectory.hpp"

namespace spinstar {

struct RabiBlock {
    double stay;  // probability of remaining in the initial state
    double flip;  // 1 - stay, evaluated without cancellation
};

/// Two-level block dynamics of |+,j,m> (Branch::plus) or |-,j,m> (Branch::minus).
RabiBlock exact_rabi_block(const SystemParams& p, SectorJM s, Branch br, double t);

/// Rotating-frame coherence factor of sector (j,m): rho^{jm}_{+-}(t) / rho^{jm}_{+-}(0).
cplx exact_coherence_factor(const SystemParams& p, SectorJM s, double t);

/// P_+(t), P_-(t) for the state rho_S(0) (x) I/2^N. Coherence left at zero.
Trajectory exact_population_plus(const SystemParams& p, std::span<const double> times);

/// rho_{+-}(t) in the rotating frame. Populations left at zero.
Trajectory exact_coherence(const SystemParams& p, std::span<const double> times);

/// Populations and coherence together.
Trajectory exact_trajectory(const SystemParams& p, std::span<const double> times);

} // namespace spinstar
