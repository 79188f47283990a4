// Test-only reference implementations, written independently of the library:
// exact Pascal-triangle binomials and a dense Kronecker-product propagator.

#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace ref {

using u128 = unsigned __int128;
using cplx = std::complex<double>;

// C(n, k) for n <= nmax; exact up to nmax = 125.
inline std::vector<std::vector<u128>> pascal(int nmax) {
    std::vector<std::vector<u128>> c(static_cast<std::size_t>(nmax) + 1);
    for (int n = 0; n <= nmax; ++n) {
        auto& row = c[static_cast<std::size_t>(n)];
        row.assign(static_cast<std::size_t>(n) + 1, 1);
        for (int k = 1; k < n; ++k) {
            row[static_cast<std::size_t>(k)] = c[static_cast<std::size_t>(n - 1)][static_cast<std::size_t>(k - 1)] +
                                               c[static_cast<std::size_t>(n - 1)][static_cast<std::size_t>(k)];
        }
    }
    return c;
}

inline u128 binom(const std::vector<std::vector<u128>>& c, int n, int k) {
    if (k < 0 || k > n) return 0;
    return c[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
}

// Multiplicity of spin j = two_j/2 among N spins-1/2: C(N, N/2-j) - C(N, N/2-j-1).
inline u128 multiplicity(const std::vector<std::vector<u128>>& c, int N, int two_j) {
    const int k = (N - two_j) / 2;
    return binom(c, N, k) - binom(c, N, k - 1);
}

inline double to_double(u128 v) { return static_cast<double>(v); }

// Pauli matrix on one of N+1 sites; site 0 is the central spin, kron order central first.
inline Eigen::MatrixXcd site_op(int N, int site, const Eigen::Matrix2cd& op) {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(1, 1);
    for (int s = 0; s <= N; ++s) {
        const Eigen::Matrix2cd f = s == site ? op : Eigen::Matrix2cd::Identity();
        // kron(out, f): earlier sites are the more significant index
        Eigen::MatrixXcd next(out.rows() * 2, out.cols() * 2);
        for (Eigen::Index i = 0; i < out.rows(); ++i) {
            for (Eigen::Index j = 0; j < out.cols(); ++j) next.block(2 * i, 2 * j, 2, 2) = out(i, j) * f;
        }
        out = next;
    }
    return out;
}

inline Eigen::Matrix2cd pauli(int which) {
    Eigen::Matrix2cd m;
    if (which == 1) m << 0, 1, 1, 0;
    if (which == 2) m << 0, cplx(0, -1), cplx(0, 1), 0;
    if (which == 3) m << 1, 0, 0, -1;
    return m;
}

// (omega0/2) sigma_3 + sum_k A_k sigma . sigma^(k)
inline Eigen::MatrixXcd hamiltonian(int N, const std::vector<double>& a, double omega0) {
    Eigen::MatrixXcd h = 0.5 * omega0 * site_op(N, 0, pauli(3));
    for (int k = 0; k < N; ++k) {
        for (int s = 1; s <= 3; ++s) h += a[static_cast<std::size_t>(k)] * site_op(N, 0, pauli(s)) * site_op(N, k + 1, pauli(s));
    }
    return h;
}

// rho_S(t) in the rotating frame for rho_S0 (x) I / 2^N, via full diagonalization.
inline Eigen::Matrix2cd reduced_state(int N, double A, double omega0, const Eigen::Matrix2cd& rho_s0, double t) {
    const Eigen::MatrixXcd h = hamiltonian(N, std::vector<double>(static_cast<std::size_t>(N), A), omega0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    Eigen::VectorXcd phase(h.rows());
    for (Eigen::Index i = 0; i < h.rows(); ++i) phase[i] = std::polar(1.0, -es.eigenvalues()[i] * t);
    const Eigen::MatrixXcd u = es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
    const Eigen::Index d = Eigen::Index{1} << N;
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(2 * d, 2 * d);
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) rho.block(a * d, b * d, d, d) = Eigen::MatrixXcd::Identity(d, d) * rho_s0(a, b) / double(d);
    }
    const Eigen::MatrixXcd r = u * rho * u.adjoint();
    Eigen::Matrix2cd out;
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) out(a, b) = r.block(a * d, b * d, d, d).trace();
    }
    out(0, 1) *= std::polar(1.0, omega0 * t);
    out(1, 0) *= std::polar(1.0, -omega0 * t);
    return out;
}

} // namespace ref
