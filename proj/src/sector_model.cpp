#include "spinstar/sector_model.hpp"

#include <cmath>
#include <string>

#include "spinstar/errors.hpp"

namespace spinstar {

namespace {

constexpr int kExactBinomialMaxN = 60;

using u128 = unsigned __int128;

u128 binomial_exact(int n, int k) {
    if (k < 0 || k > n) return 0;
    if (k > n - k) k = n - k;
    u128 c = 1;
    for (int i = 0; i < k; ++i) {
        c = c * static_cast<u128>(n - i) / static_cast<u128>(i + 1);
    }
    return c;
}

double u128_over_pow2(u128 value, int n) {
    return std::ldexp(static_cast<double>(value), -n);
}

long double log_binomial_over_pow2(int n, int k) {
    const long double nl = n;
    return std::lgamma(nl + 1.0L) - std::lgamma(static_cast<long double>(k) + 1.0L) -
           std::lgamma(static_cast<long double>(n - k) + 1.0L) - nl * std::log(2.0L);
}

void require(bool ok, const std::string& what) {
    if (!ok) throw DomainError(what);
}

} // namespace

void SystemParams::validate() const {
    require(N >= 1, "N must be >= 1 (got " + std::to_string(N) + ")");
    require(std::isfinite(A), "coupling A must be finite");
    require(std::isfinite(omega0) && omega0 > 0.0, "omega0 must be finite and > 0");
    require(std::isfinite(initial_p_plus) && initial_p_plus >= 0.0 && initial_p_plus <= 1.0,
            "initial_p_plus must lie in [0,1]");
    require(std::isfinite(initial_coh.real()) && std::isfinite(initial_coh.imag()),
            "initial coherence must be finite");
    const double bound = initial_p_plus * (1.0 - initial_p_plus);
    require(std::norm(initial_coh) <= bound * (1.0 + 1e-12) + 1e-15,
            "initial state is not a valid qubit density matrix (|coh|^2 > p(1-p))");
}

bool is_valid(int N, SectorM s) {
    return N >= 1 && s.two_m >= -N && s.two_m <= N && ((s.two_m + N) % 2 == 0);
}

bool is_valid_j(int N, int two_j) {
    return N >= 1 && two_j >= 0 && two_j <= N && ((two_j + N) % 2 == 0);
}

bool is_valid(int N, SectorJM s) {
    return is_valid_j(N, s.two_j) && s.two_m >= -s.two_j && s.two_m <= s.two_j &&
           ((s.two_m + s.two_j) % 2 == 0);
}

double weight_m(int N, SectorM s) {
    require(is_valid(N, s), "invalid m sector two_m=" + std::to_string(s.two_m) +
                                " for N=" + std::to_string(N));
    const int k = (N + s.two_m) / 2;
    if (N <= kExactBinomialMaxN) return u128_over_pow2(binomial_exact(N, k), N);
    return static_cast<double>(std::exp(log_binomial_over_pow2(N, k)));
}

double prob_j(int N, int two_j) {
    require(is_valid_j(N, two_j), "invalid j: two_j=" + std::to_string(two_j) +
                                      " for N=" + std::to_string(N));
    const int k = (N + two_j) / 2;  // N/2 + j
    if (N <= kExactBinomialMaxN) {
        const u128 nj = binomial_exact(N, k) - binomial_exact(N, k + 1);
        return u128_over_pow2(nj * static_cast<u128>(two_j + 1), N);
    }
    // N_j = C(N,k) (2j+1) / (k+1): the binomial difference without cancellation.
    const long double dim = two_j + 1;
    const long double lg = log_binomial_over_pow2(N, k) + 2.0L * std::log(dim) -
                           std::log(static_cast<long double>(k) + 1.0L);
    return static_cast<double>(std::exp(lg));
}

double weight_jm(int N, int two_j) {
    require(is_valid_j(N, two_j), "invalid j: two_j=" + std::to_string(two_j));
    const int k = (N + two_j) / 2;
    if (N <= kExactBinomialMaxN) {
        return u128_over_pow2(binomial_exact(N, k) - binomial_exact(N, k + 1), N);
    }
    const long double lg = log_binomial_over_pow2(N, k) +
                           std::log(static_cast<long double>(two_j + 1)) -
                           std::log(static_cast<long double>(k) + 1.0L);
    return static_cast<double>(std::exp(lg));
}

double omega(double A, double omega0, int two_m, Branch br) {
    const int s = sign_of(br);
    // +-omega0 + 2A(+-two_m + 1); the integer factor is exact, so
    // Omega_-(m+1) == -Omega_+(m) holds bit for bit.
    return s * omega0 + 2.0 * A * static_cast<double>(s * two_m + 1);
}

Frequencies sector_frequencies(const SystemParams& p, SectorM s) {
    require(is_valid(p.N, s), "invalid m sector");
    return {omega(p.A, p.omega0, s.two_m, Branch::plus), omega(p.A, p.omega0, s.two_m, Branch::minus)};
}

double b_coeff(SectorJM s, Branch br) {
    // 4 b = two_j(two_j+2) - two_m(two_m + 2 sign), exact in integers.
    const long long tj = s.two_j;
    const long long tm = sign_of(br) * static_cast<long long>(s.two_m);
    return static_cast<double>(tj * (tj + 2) - tm * (tm + 2)) / 4.0;
}

double mu(const SystemParams& p, SectorJM s, Branch br) {
    require(is_valid(p.N, s), "invalid (j,m) sector");
    const double half_omega = 0.5 * omega(p.A, p.omega0, s.two_m, br);
    const double b = b_coeff(s, br);
    if (b == 0.0) return std::abs(half_omega);
    return std::hypot(half_omega, 2.0 * std::abs(p.A) * std::sqrt(b));
}

double alpha(const SystemParams& p) {
    require(p.omega0 > 0.0, "omega0 must be > 0");
    return 2.0 * p.A * p.N / p.omega0;
}

double coupling_from_alpha(int N, double omega0, double alpha_value) {
    require(N >= 1 && omega0 > 0.0, "coupling_from_alpha needs N >= 1 and omega0 > 0");
    return alpha_value * omega0 / (2.0 * N);
}

SectorTable::SectorTable(int N) : N_(N) {
    require(N >= 1, "SectorTable needs N >= 1");
    weights_m_.reserve(static_cast<std::size_t>(N) + 1);
    for (int two_m = -N; two_m <= N; two_m += 2) weights_m_.push_back(spinstar::weight_m(N, SectorM{two_m}));
    for (int two_j = N % 2; two_j <= N; two_j += 2) {
        prob_j_.push_back(spinstar::prob_j(N, two_j));
        weight_jm_.push_back(spinstar::weight_jm(N, two_j));
        for (int two_m = -two_j; two_m <= two_j; two_m += 2) jm_sectors_.push_back({two_j, two_m});
    }
}

} // namespace spinstar
