#include "spinstar/master_solvers.hpp"

#include <cmath>

#include "spinstar/errors.hpp"
#include "spinstar/numeric.hpp"
#include "spinstar/parallel.hpp"

namespace spinstar {

namespace {

enum class Order { tcl2, nz2 };

struct Wanted {
    bool populations;
    bool coherence;
};

// One bath sector and the pair (P^s_+, P^{s+1}_-) it heads.
struct SectorPlan {
    int two_j;  // -1 for the m projection
    int two_m;
    // coherence
    cplx coh0;
    double rate_plus, rate_minus;
    double omega_plus, omega_minus;
    // population pair
    double plus0;          // P^s_+(0)
    double pair_total;     // P^s_+ + P^{s+1}_-, conserved
    bool has_partner;
    double kernel_coeff;   // k(tau) = kernel_coeff cos(omega_plus tau)
    double level;          // stationary value of P^s_+
    // P^s_- when sector s heads no incoming pair (lowest m of its manifold)
    double frozen_minus;
    bool minus_frozen;
};

std::vector<SectorPlan> plan_m(const SystemParams& p) {
    const SectorTable table(p.N);
    const double a2 = p.A * p.A;
    const double n = p.N;
    const double p0 = p.initial_p_plus;
    std::vector<SectorPlan> out;
    for (int two_m = -p.N; two_m <= p.N; two_m += 2) {
        const double m = 0.5 * two_m;
        const double w = table.weight_m(two_m);
        SectorPlan s{};
        s.two_j = -1;
        s.two_m = two_m;
        s.coh0 = w * p.initial_coh;
        s.rate_plus = 4.0 * a2 * (0.5 * n - m);
        s.rate_minus = 4.0 * a2 * (0.5 * n + m);
        s.omega_plus = omega(p.A, p.omega0, two_m, Branch::plus);
        s.omega_minus = omega(p.A, p.omega0, two_m, Branch::minus);
        s.plus0 = w * p0;
        s.has_partner = two_m < p.N;
        const double partner0 = s.has_partner ? table.weight_m(two_m + 2) * (1.0 - p0) : 0.0;
        s.pair_total = s.plus0 + partner0;
        if (s.has_partner) {
            s.kernel_coeff = 8.0 * a2 * (n + 1.0);
            s.level = s.pair_total * (0.5 * n + m + 1.0) / (n + 1.0);
        } else {
            s.kernel_coeff = 0.0;
            s.level = s.plus0;
        }
        s.minus_frozen = two_m == -p.N;
        s.frozen_minus = s.minus_frozen ? w * (1.0 - p0) : 0.0;
        out.push_back(s);
    }
    return out;
}

std::vector<SectorPlan> plan_jm(const SystemParams& p) {
    const SectorTable table(p.N);
    const double a2 = p.A * p.A;
    const double p0 = p.initial_p_plus;
    std::vector<SectorPlan> out;
    out.reserve(table.jm_sectors().size());
    for (const SectorJM sec : table.jm_sectors()) {
        const double w = table.weight_jm(sec.two_j);
        SectorPlan s{};
        s.two_j = sec.two_j;
        s.two_m = sec.two_m;
        s.coh0 = w * p.initial_coh;
        const double b_plus = b_coeff(sec, Branch::plus);
        s.rate_plus = 4.0 * a2 * b_plus;
        s.rate_minus = 4.0 * a2 * b_coeff(sec, Branch::minus);
        s.omega_plus = omega(p.A, p.omega0, sec.two_m, Branch::plus);
        s.omega_minus = omega(p.A, p.omega0, sec.two_m, Branch::minus);
        s.plus0 = w * p0;
        s.has_partner = sec.two_m < sec.two_j;
        const double partner0 = s.has_partner ? w * (1.0 - p0) : 0.0;
        s.pair_total = s.plus0 + partner0;
        if (s.has_partner) {
            s.kernel_coeff = 16.0 * a2 * b_plus;
            s.level = 0.5 * s.pair_total;
        } else {
            s.kernel_coeff = 0.0;
            s.level = s.plus0;
        }
        s.minus_frozen = sec.two_m == -sec.two_j;
        s.frozen_minus = s.minus_frozen ? w * (1.0 - p0) : 0.0;
        out.push_back(s);
    }
    return out;
}

std::vector<double> pair_plus_series(const SectorPlan& s, Order order, std::span<const double> times,
                                     const SolveOptions& opts) {
    std::vector<double> out(times.size(), s.plus0);
    if (s.kernel_coeff == 0.0 || s.plus0 == s.level) return out;
    if (order == Order::tcl2) {
        for (std::size_t i = 0; i < times.size(); ++i) {
            out[i] = s.level + (s.plus0 - s.level) * std::exp(-lambda_pop(s.kernel_coeff, s.omega_plus, times[i]));
        }
        return out;
    }
    const auto x = solve_volterra(s.plus0, KernelSpec::cosine(s.kernel_coeff, s.omega_plus, s.level), {}, times, opts);
    for (std::size_t i = 0; i < times.size(); ++i) out[i] = x[i].real();
    return out;
}

// Rotating-frame sector coherence.
std::vector<cplx> coherence_series(const SectorPlan& s, Order order, double A, std::span<const double> times,
                                   const SolveOptions& opts) {
    std::vector<cplx> out(times.size(), s.coh0);
    if (s.coh0 == cplx{0.0, 0.0}) return out;
    if (order == Order::tcl2) {
        for (std::size_t i = 0; i < times.size(); ++i) {
            out[i] = s.coh0 * std::exp(-lambda_coh(s.rate_plus, s.omega_plus, s.rate_minus, s.omega_minus, times[i]));
        }
    } else {
        KernelSpec k;
        k.terms = {{cplx{s.rate_plus, 0.0}, cplx{0.0, s.omega_plus}},
                   {cplx{s.rate_minus, 0.0}, cplx{0.0, -s.omega_minus}}};
        out = solve_volterra(s.coh0, k, {}, times, opts);
    }
    SectorTrajectory tmp;
    tmp.two_m = s.two_m;
    tmp.times.assign(times.begin(), times.end());
    tmp.coh = std::move(out);
    return to_rotating_frame(std::move(tmp), A).coh;
}

struct Partial {
    std::vector<double> p_plus, p_minus, j3;
    std::vector<cplx> coh;
};

constexpr std::size_t kSectorChunk = 32;

Trajectory run(const SystemParams& p, std::span<const double> times, Order order, Projection projection,
               Wanted wanted, const SolveOptions& opts) {
    p.validate();
    validate_times(times);
    opts.validate();
    const auto plan = projection == Projection::m ? plan_m(p) : plan_jm(p);
    const std::size_t nt = times.size();
    const std::size_t n_chunks = (plan.size() + kSectorChunk - 1) / kSectorChunk;
    std::vector<Partial> partials(n_chunks);

    detail::parallel_chunks(n_chunks, [&](std::size_t c) {
        Partial& acc = partials[c];
        if (wanted.populations) {
            acc.p_plus.assign(nt, 0.0);
            acc.p_minus.assign(nt, 0.0);
            acc.j3.assign(nt, 0.0);
        }
        if (wanted.coherence) acc.coh.assign(nt, cplx{0.0, 0.0});
        const std::size_t end = std::min(plan.size(), (c + 1) * kSectorChunk);
        for (std::size_t k = c * kSectorChunk; k < end; ++k) {
            const SectorPlan& s = plan[k];
            if (wanted.populations) {
                const auto x = pair_plus_series(s, order, times, opts);
                const double m_half = 0.5 * s.two_m + 0.5;  // J_3^tot of |+,m> and of |-,m+1>
                for (std::size_t i = 0; i < nt; ++i) {
                    acc.p_plus[i] += x[i];
                    double pair_minus = 0.0;
                    if (s.has_partner) {
                        pair_minus = s.pair_total - x[i];
                        acc.p_minus[i] += pair_minus;
                    }
                    acc.j3[i] += m_half * (x[i] + pair_minus);
                    if (s.minus_frozen) {
                        acc.p_minus[i] += s.frozen_minus;
                        acc.j3[i] += (0.5 * s.two_m - 0.5) * s.frozen_minus;
                    }
                }
            }
            if (wanted.coherence) {
                const auto coh = coherence_series(s, order, p.A, times, opts);
                for (std::size_t i = 0; i < nt; ++i) acc.coh[i] += coh[i];
            }
        }
    });

    Trajectory tr;
    tr.resize(nt);
    tr.times.assign(times.begin(), times.end());
    tr.method = order == Order::tcl2 ? Method::tcl2 : Method::nz2;
    tr.projection = projection;
    tr.params = p;
    if (wanted.populations) {
        tr.trace.assign(nt, 0.0);
        tr.j3tot.assign(nt, 0.0);
    }
    for (const Partial& part : partials) {
        for (std::size_t i = 0; i < nt; ++i) {
            if (wanted.populations) {
                tr.p_plus[i] += part.p_plus[i];
                tr.p_minus[i] += part.p_minus[i];
                tr.j3tot[i] += part.j3[i];
            }
            if (wanted.coherence) tr.coh[i] += part.coh[i];
        }
    }
    for (std::size_t i = 0; i < nt; ++i) {
        if (wanted.populations) {
            if (times[i] == 0.0) {
                tr.p_plus[i] = p.initial_p_plus;
                tr.p_minus[i] = 1.0 - p.initial_p_plus;
            }
            tr.trace[i] = tr.p_plus[i] + tr.p_minus[i];
        }
        if (wanted.coherence && times[i] == 0.0) tr.coh[i] = p.initial_coh;
    }
    return tr;
}

Projection require_correlated(Projection projection) {
    if (projection != Projection::m && projection != Projection::jm) {
        throw DomainError("sector solvers need projection m or jm");
    }
    return projection;
}

} // namespace

cplx lambda_coh(double rate_plus, double omega_plus, double rate_minus, double omega_minus, double t) {
    return rate_plus * exp_double_integral(omega_plus, t) + rate_minus * exp_double_integral(-omega_minus, t);
}

double lambda_pop(double coeff, double omega_, double t) { return coeff * one_minus_cos_over_sq(omega_, t); }

SectorTrajectory to_rotating_frame(SectorTrajectory s, double A) {
    if (s.coh.size() != s.times.size()) throw DomainError("sector coherence and time grid sizes differ");
    for (std::size_t i = 0; i < s.coh.size(); ++i) {
        if (s.two_m == 0) break;
        s.coh[i] *= std::polar(1.0, -2.0 * A * s.two_m * s.times[i]);
    }
    return s;
}

Trajectory tcl2_coherence_m(const SystemParams& p, std::span<const double> times) {
    return run(p, times, Order::tcl2, Projection::m, {false, true}, {});
}

Trajectory tcl2_population_m(const SystemParams& p, std::span<const double> times) {
    return run(p, times, Order::tcl2, Projection::m, {true, false}, {});
}

Trajectory nz2_coherence_m(const SystemParams& p, std::span<const double> times, const SolveOptions& opts) {
    return run(p, times, Order::nz2, Projection::m, {false, true}, opts);
}

Trajectory nz2_population_m(const SystemParams& p, std::span<const double> times, const SolveOptions& opts) {
    return run(p, times, Order::nz2, Projection::m, {true, false}, opts);
}

Trajectory tcl2_m(const SystemParams& p, std::span<const double> times) {
    return run(p, times, Order::tcl2, Projection::m, {true, true}, {});
}

Trajectory nz2_m(const SystemParams& p, std::span<const double> times, const SolveOptions& opts) {
    return run(p, times, Order::nz2, Projection::m, {true, true}, opts);
}

Trajectory tcl2_jm(const SystemParams& p, std::span<const double> times) {
    return run(p, times, Order::tcl2, Projection::jm, {true, true}, {});
}

Trajectory nz2_jm(const SystemParams& p, std::span<const double> times, const SolveOptions& opts) {
    return run(p, times, Order::nz2, Projection::jm, {true, true}, opts);
}

Trajectory standard_projection_population(const SystemParams& p, std::span<const double> times) {
    p.validate();
    validate_times(times);
    if (p.initial_p_plus != 1.0) {
        throw DomainError("standard projection population is defined for initial_p_plus = 1 only");
    }
    Trajectory tr;
    tr.resize(times.size());
    tr.times.assign(times.begin(), times.end());
    tr.method = Method::standard;
    tr.projection = Projection::product;
    tr.params = p;
    tr.trace.assign(times.size(), 0.0);
    const double coeff = 8.0 * p.A * p.A * p.N / (p.omega0 * p.omega0);
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double decay = std::exp(-coeff * (1.0 - std::cos(p.omega0 * times[i])));
        tr.p_plus[i] = 0.5 * (1.0 + decay);
        tr.p_minus[i] = 0.5 * (1.0 - decay);
        tr.trace[i] = tr.p_plus[i] + tr.p_minus[i];
    }
    return tr;
}

std::vector<SectorTrajectory> sector_trajectories(Method method, Projection projection, const SystemParams& p,
                                                  std::span<const double> times, const SolveOptions& opts) {
    p.validate();
    validate_times(times);
    if (method != Method::tcl2 && method != Method::nz2) throw DomainError("sector data exists for tcl2/nz2 only");
    const Order order = method == Method::tcl2 ? Order::tcl2 : Order::nz2;
    const auto plan = require_correlated(projection) == Projection::m ? plan_m(p) : plan_jm(p);
    std::vector<SectorTrajectory> out(plan.size());
    std::vector<double> pending_minus;  // pair partner of the previous sector
    for (std::size_t k = 0; k < plan.size(); ++k) {
        const SectorPlan& s = plan[k];
        SectorTrajectory& st = out[k];
        st.two_j = s.two_j;
        st.two_m = s.two_m;
        st.times.assign(times.begin(), times.end());
        st.p_plus = pair_plus_series(s, order, times, opts);
        st.coh = coherence_series(s, order, p.A, times, opts);
        if (s.minus_frozen) {
            st.p_minus.assign(times.size(), s.frozen_minus);
        } else {
            st.p_minus = std::move(pending_minus);
        }
        pending_minus.assign(times.size(), 0.0);
        if (s.has_partner) {
            for (std::size_t i = 0; i < times.size(); ++i) pending_minus[i] = s.pair_total - st.p_plus[i];
        }
    }
    return out;
}

} // namespace spinstar
