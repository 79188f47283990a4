// volterra.hpp: linear Volterra integro-differential equations with exponential-sum kernels
//
//   x'(t) = -int_0^t k(t-s) (x(s) - level) ds + drive(t),   k(tau) = sum_i a_i exp(r_i tau)
//
// Two independent solution paths:
//  * aux_ode: one auxiliary variable per kernel term, u_i' = r_i u_i + (x - level),
//    x' = -sum_i a_i u_i + drive, integrated by integrate_linear_ode. O(T) per solve.
//  * quadrature: trapezoidal rule for both the memory integral and the outer
//    ODE on a uniform grid. O(T^2), second order.

#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "spinstar/sector_model.hpp"

namespace spinstar {

struct ExpTerm {
    cplx amplitude;
    cplx rate;
};

struct KernelSpec {
    std::vector<ExpTerm> terms;
    cplx level{0.0, 0.0};  // constant inhomogeneity inside the memory integral

    cplx operator()(double tau) const;
    /// int_0^t k(tau) dtau.
    cplx integral(double t) const;
    void validate() const;

    /// coeff * cos(omega tau) as the two-term sum (coeff/2)(e^{i omega tau} + e^{-i omega tau}).
    static KernelSpec cosine(double coeff, double omega, cplx level = {0.0, 0.0});
};

enum class VolterraMethod { aux_ode, quadrature };

struct SolveOptions {
    double step{0.1};         // maximum (aux_ode) or grid (quadrature) step
    VolterraMethod method{VolterraMethod::aux_ode};
    double tolerance{1e-10};  // local error per unit time, relative to the initial state; +inf = fixed step
    bool richardson{false};   // quadrature only: combine grids h and h/2

    void validate() const;
};

using Drive = std::function<cplx(double)>;

/// x at each requested time; the initial value x0 is imposed at t = 0.
std::vector<cplx> solve_volterra(cplx x0, const KernelSpec& kernel, const Drive& drive,
                                 std::span<const double> times, const SolveOptions& opts);

/// z' = G(t) z. Either a fixed matrix or a callback filling G(t).
class LinearGenerator {
public:
    using Fill = std::function<void(double, Eigen::MatrixXcd&)>;

    static LinearGenerator constant(Eigen::MatrixXcd g);
    static LinearGenerator time_dependent(Eigen::Index dim, Fill fill);

    Eigen::Index dim() const { return dim_; }
    bool is_constant() const { return !fill_; }
    const Eigen::MatrixXcd& matrix() const { return constant_; }
    void at(double t, Eigen::MatrixXcd& out) const;

private:
    Eigen::Index dim_{0};
    Eigen::MatrixXcd constant_;
    Fill fill_;
};

/// Classical RK4 with step-halving error control. The initial state is
/// imposed at times[0]; returns the state at every entry of times.
std::vector<Eigen::VectorXcd> integrate_linear_ode(const Eigen::VectorXcd& z0,
                                                   const LinearGenerator& gen,
                                                   std::span<const double> times,
                                                   const SolveOptions& opts);

} // namespace spinstar
