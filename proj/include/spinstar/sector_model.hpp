// sector_model.hpp: model parameters and angular-momentum combinatorics of the spin-star model
//
// Half-integer quantum numbers are carried as doubled integers (two_j, two_m)
// so that sector identity is exact. Degeneracies are returned pre-divided by
// 2^N: exact 128-bit integer arithmetic for N <= 60, extended-precision
// log-gamma above that.

#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace spinstar {

using cplx = std::complex<double>;

/// Central spin-1/2 with splitting omega0, uniformly coupled (constant A) to N bath spins.
struct SystemParams {
    int N{1};
    double A{0.0};
    double omega0{1.0};
    double initial_p_plus{1.0};  // <+|rho_S(0)|+>
    cplx initial_coh{0.0, 0.0};  // <+|rho_S(0)|->

    /// Throws DomainError if any invariant is violated.
    void validate() const;
};

/// Bath J_3 eigenvalue m = two_m / 2.
struct SectorM {
    int two_m{0};
    double m() const { return 0.5 * two_m; }
};

/// Bath (J^2, J_3) eigenvalues j(j+1) and m.
struct SectorJM {
    int two_j{0};
    int two_m{0};
    double j() const { return 0.5 * two_j; }
    double m() const { return 0.5 * two_m; }
};

enum class Branch { plus, minus };

inline int sign_of(Branch b) { return b == Branch::plus ? 1 : -1; }

bool is_valid(int N, SectorM s);
bool is_valid(int N, SectorJM s);
bool is_valid_j(int N, int two_j);

/// N_m / 2^N with N_m = C(N, N/2 + m).
double weight_m(int N, SectorM s);
inline double weight_m(const SystemParams& p, SectorM s) { return weight_m(p.N, s); }

/// p(j) = (2j+1) N_j / 2^N, with N_j the multiplicity of spin j in the bath.
double prob_j(int N, int two_j);
inline double prob_j(const SystemParams& p, int two_j) { return prob_j(p.N, two_j); }

/// N_j / 2^N, the initial weight of each single (j,m) sector.
double weight_jm(int N, int two_j);

struct Frequencies {
    double plus;   // Omega_+(m)
    double minus;  // Omega_-(m)
};

/// Omega_+-(m) = +-omega0 + 4A(+-m + 1/2).
double omega(double A, double omega0, int two_m, Branch br);
Frequencies sector_frequencies(const SystemParams& p, SectorM s);

/// b(j, +-m) = j(j+1) - m(m +- 1).
double b_coeff(SectorJM s, Branch br);

/// mu_+-(j,m) = sqrt(Omega_+-^2/4 + 4A^2 b(j, +-m)).
double mu(const SystemParams& p, SectorJM s, Branch br);

/// alpha = 2AN / omega0.
double alpha(const SystemParams& p);
double coupling_from_alpha(int N, double omega0, double alpha);

/// Immutable per-N table of sector weights, iterated in ascending (two_j, two_m) order.
class SectorTable {
public:
    explicit SectorTable(int N);

    int N() const { return N_; }
    int min_two_j() const { return N_ % 2; }

    /// Indexed by (two_m + N) / 2.
    const std::vector<double>& weights_m() const { return weights_m_; }
    double weight_m(int two_m) const { return weights_m_[static_cast<std::size_t>((two_m + N_) / 2)]; }

    /// Indexed by (two_j - min_two_j) / 2.
    const std::vector<double>& prob_j() const { return prob_j_; }
    double prob_j(int two_j) const { return prob_j_[static_cast<std::size_t>((two_j - min_two_j()) / 2)]; }
    double weight_jm(int two_j) const { return weight_jm_[static_cast<std::size_t>((two_j - min_two_j()) / 2)]; }

    /// All (j,m) sectors, ascending two_j then two_m.
    const std::vector<SectorJM>& jm_sectors() const { return jm_sectors_; }

private:
    int N_;
    std::vector<double> weights_m_;
    std::vector<double> prob_j_;
    std::vector<double> weight_jm_;
    std::vector<SectorJM> jm_sectors_;
};

} // namespace spinstar
