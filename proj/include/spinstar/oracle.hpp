// oracle.hpp: brute-force propagation of the full central spin + bath state
//
// Basis index: bit k (k < N) is bath spin k (1 = up), bit N the central spin
// (1 = |+>). H = (omega0/2) sigma_3 + sum_k A_k sigma . sigma^(k) conserves the
// total number of up spins, so each popcount sector is propagated separately.
//
// The unpolarized bath is realized as the uniform mixture of the 2^N bath
// basis states: rho(t) = 2^-N sum_b sum_{s,s'} rho_S0[s,s'] U|s,b><s',b|U^+.
// Columns U|s,b> are propagated in fixed chunks and all reductions run in
// chunk order, so results do not depend on the thread count.

#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "spinstar/trajectory.hpp"

namespace spinstar {

inline constexpr int kOracleMaxN = 14;

using SparseH = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Full 2^(N+1) Hamiltonian. Empty couplings means uniform A_k = p.A.
/// Throws CapacityError for N > kOracleMaxN.
SparseH build_hamiltonian(const SystemParams& p, std::span<const double> couplings = {});

/// Bath basis states (bit patterns) with the given number of up spins, ascending.
std::vector<unsigned> bath_states(int N, int popcount);

/// Bath J^2 restricted to one popcount sector, rows ordered as bath_states.
Eigen::MatrixXd bath_j_squared(int N, int popcount);

/// Orthonormal basis of the (j, m = popcount - N/2) subspace, columns
/// ordered as bath_states. Empty matrix when j is absent.
Eigen::MatrixXd bath_jm_basis(int N, int popcount, int two_j);

struct OracleOptions {
    double tolerance{1e-10};  // local error per unit time, relative
    bool jm_blocks{false};    // also resolve (j,m) sectors (dense J^2 eigenproblems)
};

/// tr_E{Pi rho(t)} for one bath sector, rotating frame.
struct SectorBlockSeries {
    int two_j{-1};  // -1 for m sectors
    int two_m{0};
    std::vector<Eigen::Matrix2cd> rho;
};

struct OracleResult {
    Trajectory trajectory;               // method oracle, trace and j3tot filled
    std::vector<double> energy;          // <H>
    std::vector<double> j_squared;       // tr{J^2 rho}, only with jm_blocks
    std::vector<SectorBlockSeries> m_blocks;   // ascending two_m
    std::vector<SectorBlockSeries> jm_blocks;  // ascending (two_j, two_m)
};

/// rho_S0 must be Hermitian with unit trace; positivity is not required.
OracleResult propagate(const SystemParams& p, std::span<const double> couplings, const Eigen::Matrix2cd& rho_S0,
                       std::span<const double> times, const OracleOptions& opts = {});

/// Uses the initial state stored in p.
OracleResult propagate(const SystemParams& p, std::span<const double> couplings, std::span<const double> times,
                       const OracleOptions& opts = {});

Eigen::Matrix2cd initial_density(const SystemParams& p);

} // namespace spinstar
