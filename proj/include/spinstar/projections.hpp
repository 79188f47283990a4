// projections.hpp: numerical verification of the correlated projection superoperators
//
//   P rho = sum_i tr_E{A_i rho} (x) B_i,   A_i = Pi_i,   B_i = Pi_i / tr Pi_i
//
// with Pi_i the bath projectors onto fixed m (family m) or fixed (j,m)
// (family jm). The product family is tr_E{rho} (x) rho_0 with rho_0 a
// product of identical single-spin states.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spinstar/sector_model.hpp"

namespace spinstar {

enum class ProjectionFamily { m, jm, product };

inline constexpr int kProjectionCheckMaxN = 10;
inline constexpr int kPlpCheckMaxN = 8;

struct CheckItem {
    std::string name;
    double residual{0.0};
    double tolerance{0.0};
    bool passed{false};
    std::string note;
};

struct ProjectionReport {
    ProjectionFamily family{ProjectionFamily::m};
    int N{0};
    std::vector<CheckItem> checks;

    bool all_passed() const;
    /// Names of failed checks.
    std::vector<std::string> violations() const;
    const CheckItem* find(const std::string& name) const;
};

struct ProjectionCheckOptions {
    double tolerance{1e-12};
    bool corrupt_normalization{false};  // negative control: B_i = Pi_i
    int random_samples{4};
    std::uint64_t seed{12345};
    std::size_t max_positivity_block{4096};  // larger blocks are skipped and noted
};

/// Families m and jm only. Throws CapacityError for N > kProjectionCheckMaxN.
ProjectionReport check_projection_conditions(int N, ProjectionFamily family, const ProjectionCheckOptions& opts = {});

struct PlpOptions {
    int samples{10};
    std::uint64_t seed{2024};
    double t_max{20.0};
    // Negative control: interaction = H - (omega0/2) sigma_3, i.e. sigma_3 J_3 moved out of H_0.
    bool full_coupling{false};
    // Product family only: up-probability of each bath spin in rho_0.
    double bath_polarization{0.5};
};

/// max over samples of ||P L(t) P X||_F / ||P X||_F for random X and t in [0, t_max].
/// Throws CapacityError for N > kPlpCheckMaxN.
double check_plp_zero(const SystemParams& p, ProjectionFamily family, const PlpOptions& opts = {});

} // namespace spinstar
