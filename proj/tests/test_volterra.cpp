#include <doctest.h>

#include <cmath>
#include <limits>

#include "spinstar/errors.hpp"
#include "spinstar/trajectory.hpp"
#include "spinstar/volterra.hpp"

using namespace spinstar;

namespace {

double sup_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
    return s;
}

template <class F>
double sup_err(const std::vector<cplx>& x, const std::vector<double>& t, F&& exact) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) s = std::max(s, std::abs(x[i] - exact(t[i])));
    return s;
}

KernelSpec constant_kernel(double b) {
    KernelSpec k;
    k.terms = {{cplx{b, 0.0}, cplx{0.0, 0.0}}};
    return k;
}

SolveOptions fixed(double step, VolterraMethod m) {
    SolveOptions o;
    o.step = step;
    o.method = m;
    o.tolerance = std::numeric_limits<double>::infinity();
    return o;
}

} // namespace

TEST_SUITE("volterra") {

TEST_CASE("no memory and no drive keeps the initial value") {
    const auto t = uniform_grid(10.0, 0.5);
    for (auto m : {VolterraMethod::aux_ode, VolterraMethod::quadrature}) {
        SolveOptions o;
        o.method = m;
        const auto x = solve_volterra(1.0, KernelSpec{}, {}, t, o);
        for (const auto& v : x) CHECK(v == cplx(1.0, 0.0));
    }
}

TEST_CASE("constant kernel gives cos(sqrt(B) t)") {
    const double b = 0.7;
    const auto t = uniform_grid(30.0, 0.1);
    const auto exact = [&](double s) { return cplx(std::cos(std::sqrt(b) * s), 0.0); };
    CHECK(sup_err(solve_volterra(1.0, constant_kernel(b), {}, t, {}), t, exact) <= 1e-8);
    SolveOptions q;
    q.method = VolterraMethod::quadrature;
    q.step = 0.01;
    q.richardson = true;
    CHECK(sup_err(solve_volterra(1.0, constant_kernel(b), {}, t, q), t, exact) <= 1e-6);
}

TEST_CASE("convergence order under step halving") {
    const double b = 2.0;
    const auto t = uniform_grid(10.0, 0.4);
    const auto exact = [&](double s) { return cplx(std::cos(std::sqrt(b) * s), 0.0); };
    for (auto m : {VolterraMethod::quadrature, VolterraMethod::aux_ode}) {
        double h = 0.2;
        double prev = sup_err(solve_volterra(1.0, constant_kernel(b), {}, t, fixed(h, m)), t, exact);
        for (int r = 0; r < 3; ++r) {
            h *= 0.5;
            const double err = sup_err(solve_volterra(1.0, constant_kernel(b), {}, t, fixed(h, m)), t, exact);
            CHECK(prev / err >= 3.7);
            prev = err;
        }
    }
}

TEST_CASE("cosine kernel against its Laplace-inverted solution") {
    // k = c cos(Omega tau):  y(t) = y0 [Omega^2 + c cos(sqrt(Omega^2 + c) t)] / (Omega^2 + c)
    const double c = 0.09, w = 1.3, level = 0.2, x0 = 0.9;
    const double w2 = w * w + c;
    const auto exact = [&](double s) {
        return cplx(level + (x0 - level) * (w * w + c * std::cos(std::sqrt(w2) * s)) / w2, 0.0);
    };
    const auto t = uniform_grid(200.0, 0.25);
    const auto k = KernelSpec::cosine(c, w, level);
    CHECK(sup_err(solve_volterra(x0, k, {}, t, {}), t, exact) <= 1e-8);
    SolveOptions q;
    q.method = VolterraMethod::quadrature;
    q.step = 0.0125;
    q.richardson = true;
    CHECK(sup_err(solve_volterra(x0, k, {}, t, q), t, exact) <= 1e-6);
}

TEST_CASE("cosine kernel helper") {
    const auto k = KernelSpec::cosine(0.3, 0.7);
    for (double tau : {0.0, 0.4, 3.3}) {
        CHECK(std::abs(k(tau) - 0.3 * std::cos(0.7 * tau)) <= 1e-15);
        CHECK(std::abs(k.integral(tau) - 0.3 * std::sin(0.7 * tau) / 0.7) <= 1e-14);
    }
    CHECK(std::abs(constant_kernel(2.0).integral(1.5) - 3.0) <= 1e-15);
}

TEST_CASE("two-term complex kernel: aux-ode and quadrature agree") {
    KernelSpec k;
    k.terms = {{cplx{0.04, 0.0}, cplx{0.0, 1.1}}, {cplx{0.02, 0.0}, cplx{0.0, 0.9}}};
    const auto t = uniform_grid(5.0, 0.05);
    const auto a = solve_volterra({0.3, 0.1}, k, {}, t, {});
    SolveOptions q;
    q.method = VolterraMethod::quadrature;
    q.step = 0.005;
    q.richardson = true;
    CHECK(sup_diff(a, solve_volterra({0.3, 0.1}, k, {}, t, q)) <= 1e-6);
}

TEST_CASE("linearity in the initial value") {
    KernelSpec k;
    k.terms = {{cplx{0.5, 0.0}, cplx{-0.1, 2.0}}, {cplx{0.25, 0.0}, cplx{0.0, -1.0}}};
    const auto t = uniform_grid(20.0, 0.5);
    SolveOptions o;
    o.tolerance = std::numeric_limits<double>::infinity();
    o.step = 0.05;
    const auto x1 = solve_volterra(1.0, k, {}, t, o);
    const cplx s{2.5, -1.0};
    const auto xs = solve_volterra(s, k, {}, t, o);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(std::abs(xs[i] - s * x1[i]) <= 1e-14 * std::abs(s));
}

TEST_CASE("drive term") {
    const auto t = uniform_grid(12.0, 0.3);
    const auto x = solve_volterra(0.5, KernelSpec{}, [](double s) { return cplx(std::cos(s), 0.0); }, t, {});
    CHECK(sup_err(x, t, [](double s) { return cplx(0.5 + std::sin(s), 0.0); }) <= 1e-9);
}

TEST_CASE("times without t = 0 still start from x0 at t = 0") {
    const double b = 1.0;
    const double ts[] = {0.5, 1.0, 2.0};
    const auto x = solve_volterra(1.0, constant_kernel(b), {}, ts, {});
    for (int i = 0; i < 3; ++i) CHECK(std::abs(x[static_cast<std::size_t>(i)] - std::cos(ts[i])) <= 1e-9);
}

TEST_CASE("linear ODE: constant and rotating solutions") {
    const auto t = uniform_grid(5.0, 1.0);
    Eigen::VectorXcd z0(2);
    z0 << 1.0, cplx(0.0, 2.0);
    const auto zs = integrate_linear_ode(z0, LinearGenerator::constant(Eigen::MatrixXcd::Zero(2, 2)), t, {});
    for (const auto& z : zs) CHECK((z - z0).cwiseAbs().maxCoeff() == 0.0);

    const double w = 1.0;
    const auto tl = uniform_grid(2000.0 * M_PI, 2.0 * M_PI);
    Eigen::MatrixXcd g(1, 1);
    g(0, 0) = cplx(0.0, w);
    Eigen::VectorXcd one(1);
    one(0) = 1.0;
    SolveOptions tight;
    tight.tolerance = 1e-13;
    const auto rot = integrate_linear_ode(one, LinearGenerator::constant(g), tl, tight);
    double modulus = 0.0, phase = 0.0;
    for (std::size_t i = 0; i < tl.size(); ++i) {
        modulus = std::max(modulus, std::abs(std::abs(rot[i](0)) - 1.0));
        phase = std::max(phase, std::abs(rot[i](0) - std::polar(1.0, w * tl[i])));
    }
    CHECK(modulus <= 1e-10);
    // phase error accumulates linearly over 1000 periods
    CHECK(phase <= 1e-6);
}

TEST_CASE("linear ODE: time-dependent rotation") {
    // z' = f(t) [[0,-1],[1,0]] z with f = cos t: rotation by angle sin t
    const auto gen = LinearGenerator::time_dependent(2, [](double s, Eigen::MatrixXcd& out) {
        out << 0.0, -std::cos(s), std::cos(s), 0.0;
    });
    Eigen::VectorXcd z0(2);
    z0 << 1.0, 0.0;
    const auto t = uniform_grid(30.0, 0.5);
    const auto zs = integrate_linear_ode(z0, gen, t, {});
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(std::abs(zs[i](0) - std::cos(std::sin(t[i]))) <= 1e-9);
        CHECK(std::abs(zs[i](1) - std::sin(std::sin(t[i]))) <= 1e-9);
    }
}

TEST_CASE("failures") {
    const auto t = uniform_grid(5.0, 0.5);
    SolveOptions tiny;
    tiny.tolerance = 1e-300;
    CHECK_THROWS_AS(solve_volterra(1.0, constant_kernel(1.0), {}, t, tiny), NumericFailure);
    const Drive nan_drive = [](double) { return cplx(std::nan(""), 0.0); };
    CHECK_THROWS_AS(solve_volterra(1.0, KernelSpec{}, nan_drive, t, {}), NumericFailure);
    SolveOptions q;
    q.method = VolterraMethod::quadrature;
    CHECK_THROWS_AS(solve_volterra(1.0, KernelSpec{}, nan_drive, t, q), NumericFailure);
    SolveOptions bad;
    bad.step = 0.0;
    CHECK_THROWS_AS(solve_volterra(1.0, KernelSpec{}, {}, t, bad), DomainError);
    const double uneven[] = {0.0, 0.3, 0.35, 1.0 / 3.0 + 1.0};
    CHECK_THROWS_AS(solve_volterra(1.0, KernelSpec{}, {}, uneven, q), DomainError);
    const double backwards[] = {1.0, 0.5};
    CHECK_THROWS_AS(solve_volterra(1.0, KernelSpec{}, {}, backwards, {}), DomainError);
}

}
