#include "spinstar/exact_solution.hpp"

#include <cmath>
#include <vector>

#include "spinstar/numeric.hpp"
#include "spinstar/parallel.hpp"

namespace spinstar {

namespace {

struct SectorConstants {
    double weight;
    double omega_plus, mu_plus, flip_amp_plus;    // flip_amp = 2|A| sqrt(b)
    double omega_minus, mu_minus, flip_amp_minus;
};

std::vector<SectorConstants> sector_constants(const SystemParams& p) {
    const SectorTable table(p.N);
    std::vector<SectorConstants> out;
    out.reserve(table.jm_sectors().size());
    for (const SectorJM s : table.jm_sectors()) {
        SectorConstants c{};
        c.weight = table.weight_jm(s.two_j);
        c.omega_plus = omega(p.A, p.omega0, s.two_m, Branch::plus);
        c.mu_plus = mu(p, s, Branch::plus);
        c.flip_amp_plus = 2.0 * std::abs(p.A) * std::sqrt(b_coeff(s, Branch::plus));
        c.omega_minus = omega(p.A, p.omega0, s.two_m, Branch::minus);
        c.mu_minus = mu(p, s, Branch::minus);
        c.flip_amp_minus = 2.0 * std::abs(p.A) * std::sqrt(b_coeff(s, Branch::minus));
        out.push_back(c);
    }
    return out;
}

RabiBlock rabi(double omega_, double mu_, double flip_amp, double t) {
    const double c = std::cos(mu_ * t);
    const double sn = sinc(mu_ * t) * t;  // sin(mu t) / mu
    const double detune = 0.5 * omega_ * sn;
    const double flip = flip_amp * sn;
    return {c * c + detune * detune, flip * flip};
}

// cos(mu t) - i sign (Omega/(2 mu)) sin(mu t)
cplx rabi_amplitude(double omega_, double mu_, double t, double sign) {
    return {std::cos(mu_ * t), -sign * 0.5 * omega_ * t * sinc(mu_ * t)};
}

constexpr std::size_t kTimeChunk = 64;

template <class PerTime>
void for_each_time(std::size_t n, PerTime&& fn) {
    const std::size_t n_chunks = (n + kTimeChunk - 1) / kTimeChunk;
    detail::parallel_chunks(n_chunks, [&](std::size_t c) {
        const std::size_t end = std::min(n, (c + 1) * kTimeChunk);
        for (std::size_t i = c * kTimeChunk; i < end; ++i) fn(i);
    });
}

Trajectory make_trajectory(const SystemParams& p, std::span<const double> times) {
    p.validate();
    validate_times(times);
    Trajectory tr;
    tr.resize(times.size());
    tr.times.assign(times.begin(), times.end());
    tr.method = Method::exact;
    tr.projection = Projection::none;
    tr.params = p;
    return tr;
}

void fill_populations(Trajectory& tr, const std::vector<SectorConstants>& sc) {
    const double p0 = tr.params.initial_p_plus;
    tr.trace.assign(tr.size(), 0.0);
    for_each_time(tr.size(), [&](std::size_t i) {
        const double t = tr.times[i];
        if (t == 0.0) {
            tr.p_plus[i] = p0;
            tr.p_minus[i] = 1.0 - p0;
            tr.trace[i] = 1.0;
            return;
        }
        double stay_p = 0.0, flip_p = 0.0, stay_m = 0.0, flip_m = 0.0;
        for (const auto& c : sc) {
            const RabiBlock bp = rabi(c.omega_plus, c.mu_plus, c.flip_amp_plus, t);
            const RabiBlock bm = rabi(c.omega_minus, c.mu_minus, c.flip_amp_minus, t);
            stay_p += c.weight * bp.stay;
            flip_p += c.weight * bp.flip;
            stay_m += c.weight * bm.stay;
            flip_m += c.weight * bm.flip;
        }
        tr.p_plus[i] = p0 * stay_p + (1.0 - p0) * flip_m;
        tr.p_minus[i] = p0 * flip_p + (1.0 - p0) * stay_m;
        tr.trace[i] = tr.p_plus[i] + tr.p_minus[i];
    });
}

void fill_coherence(Trajectory& tr, const std::vector<SectorConstants>& sc) {
    const cplx c0 = tr.params.initial_coh;
    const double w0 = tr.params.omega0;
    for_each_time(tr.size(), [&](std::size_t i) {
        const double t = tr.times[i];
        if (t == 0.0) {
            tr.coh[i] = c0;
            return;
        }
        cplx sum{0.0, 0.0};
        for (const auto& c : sc) {
            sum += c.weight * rabi_amplitude(c.omega_plus, c.mu_plus, t, 1.0) *
                   rabi_amplitude(c.omega_minus, c.mu_minus, t, -1.0);
        }
        tr.coh[i] = c0 * std::polar(1.0, w0 * t) * sum;
    });
}

} // namespace

RabiBlock exact_rabi_block(const SystemParams& p, SectorJM s, Branch br, double t) {
    const double om = omega(p.A, p.omega0, s.two_m, br);
    const double flip_amp = 2.0 * std::abs(p.A) * std::sqrt(b_coeff(s, br));
    return rabi(om, mu(p, s, br), flip_amp, t);
}

cplx exact_coherence_factor(const SystemParams& p, SectorJM s, double t) {
    const double op = omega(p.A, p.omega0, s.two_m, Branch::plus);
    const double om = omega(p.A, p.omega0, s.two_m, Branch::minus);
    return std::polar(1.0, p.omega0 * t) * rabi_amplitude(op, mu(p, s, Branch::plus), t, 1.0) *
           rabi_amplitude(om, mu(p, s, Branch::minus), t, -1.0);
}

Trajectory exact_population_plus(const SystemParams& p, std::span<const double> times) {
    Trajectory tr = make_trajectory(p, times);
    fill_populations(tr, sector_constants(p));
    return tr;
}

Trajectory exact_coherence(const SystemParams& p, std::span<const double> times) {
    Trajectory tr = make_trajectory(p, times);
    fill_coherence(tr, sector_constants(p));
    return tr;
}

Trajectory exact_trajectory(const SystemParams& p, std::span<const double> times) {
    Trajectory tr = make_trajectory(p, times);
    const auto sc = sector_constants(p);
    fill_populations(tr, sc);
    fill_coherence(tr, sc);
    return tr;
}

} // namespace spinstar
