#include "spinstar/volterra.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "spinstar/errors.hpp"
#include "spinstar/trajectory.hpp"

namespace spinstar {

namespace {

bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

// (e^{r t} - 1) / r, continuous at r = 0.
cplx expm1_over(cplx r, double t) {
    const cplx z = r * t;
    if (std::abs(z) < 1e-3) {
        return t * (1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0);
    }
    return (std::exp(z) - 1.0) / r;
}

// RK4 stepping matrices for a constant generator, cached by step length.
class Rk4Cache {
public:
    explicit Rk4Cache(const Eigen::MatrixXcd& g) : g_(g) {}

    const Eigen::MatrixXcd& get(double h) {
        for (auto& e : slots_) {
            if (e.valid && e.h == h) return e.m;
        }
        Slot& s = slots_[next_];
        next_ = (next_ + 1) % slots_.size();
        const Eigen::Index n = g_.rows();
        const Eigen::MatrixXcd hg = h * g_;
        Eigen::MatrixXcd term = Eigen::MatrixXcd::Identity(n, n);
        s.m = term;
        for (int k = 1; k <= 4; ++k) {
            term = (hg * term) / static_cast<double>(k);
            s.m += term;
        }
        s.h = h;
        s.valid = true;
        return s.m;
    }

private:
    struct Slot {
        double h{0.0};
        bool valid{false};
        Eigen::MatrixXcd m;
    };
    Eigen::MatrixXcd g_;
    std::array<Slot, 6> slots_{};
    std::size_t next_{0};
};

class Rk4Stepper {
public:
    explicit Rk4Stepper(const LinearGenerator& gen) : gen_(gen) {
        if (gen.is_constant()) cache_.emplace(gen.matrix());
        g_.resize(gen.dim(), gen.dim());
    }

    Eigen::VectorXcd step(const Eigen::VectorXcd& z, double t, double h) {
        if (cache_) return cache_->get(h) * z;
        gen_.at(t, g_);
        const Eigen::VectorXcd k1 = g_ * z;
        gen_.at(t + 0.5 * h, g_);
        const Eigen::VectorXcd k2 = g_ * (z + 0.5 * h * k1);
        const Eigen::VectorXcd k3 = g_ * (z + 0.5 * h * k2);
        gen_.at(t + h, g_);
        const Eigen::VectorXcd k4 = g_ * (z + h * k3);
        return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }

private:
    const LinearGenerator& gen_;
    std::optional<Rk4Cache> cache_;
    Eigen::MatrixXcd g_;
};

std::vector<cplx> solve_aux_ode(cplx x0, const KernelSpec& kernel, const Drive& drive,
                                std::span<const double> times, const SolveOptions& opts) {
    // State layout: [x, u_1..u_K, level, (unit)]
    const auto n_terms = static_cast<Eigen::Index>(kernel.terms.size());
    const Eigen::Index ix = 0;
    const Eigen::Index ic = 1 + n_terms;
    const Eigen::Index ie = ic + 1;
    const Eigen::Index dim = drive ? ie + 1 : ic + 1;

    Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(dim, dim);
    for (Eigen::Index i = 0; i < n_terms; ++i) {
        const ExpTerm& term = kernel.terms[static_cast<std::size_t>(i)];
        g(ix, 1 + i) = -term.amplitude;
        g(1 + i, 1 + i) = term.rate;
        g(1 + i, ix) = 1.0;
        g(1 + i, ic) = -1.0;
    }
    Eigen::VectorXcd z0 = Eigen::VectorXcd::Zero(dim);
    z0(ix) = x0;
    z0(ic) = kernel.level;
    if (drive) z0(ie) = 1.0;

    const LinearGenerator gen =
        drive ? LinearGenerator::time_dependent(dim,
                                                [g, drive, ix, ie](double t, Eigen::MatrixXcd& out) {
                                                    out = g;
                                                    out(ix, ie) = drive(t);
                                                })
              : LinearGenerator::constant(g);

    std::vector<double> grid;
    grid.reserve(times.size() + 1);
    const bool prepend = times.empty() || times.front() > 0.0;
    if (prepend) grid.push_back(0.0);
    grid.insert(grid.end(), times.begin(), times.end());

    const auto states = integrate_linear_ode(z0, gen, grid, opts);
    std::vector<cplx> out;
    out.reserve(times.size());
    for (std::size_t i = prepend ? 1 : 0; i < states.size(); ++i) out.push_back(states[i](ix));
    return out;
}

// Grid step dividing every requested time, no larger than the requested step.
double quadrature_step(std::span<const double> times, double max_step) {
    auto fits = [&](double h) {
        for (double t : times) {
            const double q = t / h;
            if (std::abs(q - std::round(q)) > 1e-7 * std::max(1.0, q)) return false;
        }
        return true;
    };
    if (fits(max_step)) return max_step;
    if (times.size() >= 2) {
        const double spacing = times[1] - times[0];
        const double h = spacing / std::ceil(spacing / max_step * (1.0 - 1e-12));
        if (fits(h)) return h;
    }
    throw DomainError("quadrature path needs output times on a uniform grid");
}

std::vector<cplx> solve_quadrature_grid(cplx x0, const KernelSpec& kernel, const Drive& drive,
                                        std::span<const double> times, double h) {
    const double t_end = times.empty() ? 0.0 : times.back();
    const auto n = static_cast<std::size_t>(std::llround(t_end / h));
    std::vector<cplx> k(n + 1), f(n + 1, cplx{0.0, 0.0}), y(n + 1), x(n + 1);
    for (std::size_t l = 0; l <= n; ++l) {
        k[l] = kernel(static_cast<double>(l) * h);
        if (drive) f[l] = drive(static_cast<double>(l) * h);
    }
    const cplx c = kernel.level;
    x[0] = x0;
    y[0] = x0 - c;
    cplx memory_n{0.0, 0.0};  // I_n
    const cplx implicit = 1.0 + 0.25 * h * h * k[0];
    for (std::size_t step = 0; step < n; ++step) {
        const std::size_t np1 = step + 1;
        // S_{n+1}: trapezoid sum for I_{n+1} without the j = n+1 endpoint.
        cplx s = 0.5 * k[np1] * y[0];
        for (std::size_t j = 1; j <= step; ++j) s += k[np1 - j] * y[j];
        s *= h;
        x[np1] = (x[step] + 0.5 * h * (-memory_n + f[step] + f[np1] - s) + 0.25 * h * h * k[0] * c) /
                 implicit;
        y[np1] = x[np1] - c;
        memory_n = s + 0.5 * h * k[0] * y[np1];
        if (!finite(x[np1])) {
            std::ostringstream msg;
            msg << "quadrature diverged at t=" << static_cast<double>(np1) * h << " (step " << h << ")";
            throw NumericFailure(msg.str());
        }
    }
    std::vector<cplx> out;
    out.reserve(times.size());
    for (double t : times) out.push_back(x[static_cast<std::size_t>(std::llround(t / h))]);
    return out;
}

std::vector<cplx> solve_quadrature(cplx x0, const KernelSpec& kernel, const Drive& drive,
                                   std::span<const double> times, const SolveOptions& opts) {
    const double h = quadrature_step(times, opts.step);
    auto coarse = solve_quadrature_grid(x0, kernel, drive, times, h);
    if (!opts.richardson) return coarse;
    const auto fine = solve_quadrature_grid(x0, kernel, drive, times, 0.5 * h);
    for (std::size_t i = 0; i < coarse.size(); ++i) coarse[i] = (4.0 * fine[i] - coarse[i]) / 3.0;
    return coarse;
}

} // namespace

cplx KernelSpec::operator()(double tau) const {
    cplx sum{0.0, 0.0};
    for (const auto& t : terms) sum += t.amplitude * std::exp(t.rate * tau);
    return sum;
}

cplx KernelSpec::integral(double t) const {
    cplx sum{0.0, 0.0};
    for (const auto& term : terms) sum += term.amplitude * expm1_over(term.rate, t);
    return sum;
}

void KernelSpec::validate() const {
    for (const auto& t : terms) {
        if (!finite(t.amplitude) || !finite(t.rate)) throw DomainError("kernel terms must be finite");
    }
    if (!finite(level)) throw DomainError("kernel level must be finite");
}

KernelSpec KernelSpec::cosine(double coeff, double omega_, cplx level) {
    KernelSpec k;
    k.terms = {{cplx{0.5 * coeff, 0.0}, cplx{0.0, omega_}}, {cplx{0.5 * coeff, 0.0}, cplx{0.0, -omega_}}};
    k.level = level;
    return k;
}

void SolveOptions::validate() const {
    if (!(step > 0.0) || !std::isfinite(step)) throw DomainError("solver step must be finite and > 0");
    if (!(tolerance > 0.0)) throw DomainError("solver tolerance must be > 0");
}

LinearGenerator LinearGenerator::constant(Eigen::MatrixXcd g) {
    if (g.rows() != g.cols()) throw DomainError("generator must be square");
    LinearGenerator out;
    out.dim_ = g.rows();
    out.constant_ = std::move(g);
    return out;
}

LinearGenerator LinearGenerator::time_dependent(Eigen::Index dim, Fill fill) {
    LinearGenerator out;
    out.dim_ = dim;
    out.fill_ = std::move(fill);
    return out;
}

void LinearGenerator::at(double t, Eigen::MatrixXcd& out) const {
    if (fill_) {
        out.resize(dim_, dim_);
        fill_(t, out);
    } else {
        out = constant_;
    }
}

std::vector<Eigen::VectorXcd> integrate_linear_ode(const Eigen::VectorXcd& z0,
                                                   const LinearGenerator& gen,
                                                   std::span<const double> times,
                                                   const SolveOptions& opts) {
    opts.validate();
    validate_times(times);
    if (z0.size() != gen.dim()) throw DomainError("initial state and generator dimensions differ");
    std::vector<Eigen::VectorXcd> out;
    if (times.empty()) return out;
    out.reserve(times.size());
    out.push_back(z0);

    Rk4Stepper stepper(gen);
    const double norm0 = z0.cwiseAbs().maxCoeff();
    const double scale = norm0 > 0.0 ? norm0 : 1.0;
    const double h_max = opts.step;
    const double h_min = 1e-13 * std::max(1.0, times.back());
    constexpr double kRichardson = 15.0;  // 2^4 - 1

    Eigen::VectorXcd z = z0;
    double t = times.front();
    double h = h_max;
    for (std::size_t k = 1; k < times.size(); ++k) {
        const double target = times[k];
        while (t < target) {
            const double remaining = target - t;
            const bool clipped = remaining <= h * (1.0 + 1e-6);  // no round-off slivers
            const double hh = clipped ? remaining : h;
            const Eigen::VectorXcd full = stepper.step(z, t, hh);
            const Eigen::VectorXcd mid = stepper.step(z, t, 0.5 * hh);
            const Eigen::VectorXcd half = stepper.step(mid, t + 0.5 * hh, 0.5 * hh);
            const double err = (half - full).cwiseAbs().maxCoeff() / kRichardson;
            if (!std::isfinite(err) || !half.allFinite()) {
                std::ostringstream msg;
                msg << "linear ODE integration produced non-finite values at t=" << t << " (step " << hh << ")";
                throw NumericFailure(msg.str());
            }
            const double allowed = opts.tolerance * scale * hh;
            if (err <= allowed) {
                z = half;
                t = clipped ? target : t + hh;
                if (!clipped && err * 64.0 < allowed) h = std::min(h_max, 2.0 * h);
            } else {
                h = 0.5 * hh;
                if (h < h_min) {
                    std::ostringstream msg;
                    msg << "step size underflow at t=" << t << " (step " << h << ", error estimate " << err
                        << ", allowed " << allowed << ")";
                    throw NumericFailure(msg.str());
                }
            }
        }
        out.push_back(z);
    }
    return out;
}

std::vector<cplx> solve_volterra(cplx x0, const KernelSpec& kernel, const Drive& drive,
                                 std::span<const double> times, const SolveOptions& opts) {
    opts.validate();
    kernel.validate();
    validate_times(times);
    if (!finite(x0)) throw DomainError("initial value must be finite");
    if (opts.method == VolterraMethod::quadrature) return solve_quadrature(x0, kernel, drive, times, opts);
    return solve_aux_ode(x0, kernel, drive, times, opts);
}

} // namespace spinstar
