#include "spinstar/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>

#include "spinstar/errors.hpp"
#include "spinstar/parallel.hpp"

namespace spinstar {

namespace {

using SparseC = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

constexpr int kTaylorOrder = 24;
constexpr std::size_t kMaxColumnsPerChunk = 32;
constexpr std::size_t kChunkEntries = 1u << 16;  // bounds the stored Taylor terms per chunk

void check_capacity(int N) {
    if (N > kOracleMaxN) {
        std::ostringstream msg;
        msg << "oracle supports N <= " << kOracleMaxN << ", got N = " << N;
        throw CapacityError(msg.str());
    }
}

std::vector<double> resolve_couplings(const SystemParams& p, std::span<const double> couplings) {
    if (couplings.empty()) return std::vector<double>(static_cast<std::size_t>(p.N), p.A);
    if (couplings.size() != static_cast<std::size_t>(p.N)) {
        std::ostringstream msg;
        msg << "expected " << p.N << " couplings, got " << couplings.size();
        throw DomainError(msg.str());
    }
    for (double a : couplings) {
        if (!std::isfinite(a)) throw DomainError("couplings must be finite");
    }
    return {couplings.begin(), couplings.end()};
}

// sum_k A_k s_k with s_k = +-1 the bath sigma_3 eigenvalue of spin k.
double zz_field(const std::vector<double>& a, unsigned bath) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (bath >> k & 1u) ? a[k] : -a[k];
    return s;
}

struct BathIndex {
    std::vector<std::vector<unsigned>> states;  // by popcount
    std::vector<std::size_t> rank;              // position within its popcount list

    explicit BathIndex(int N) : states(static_cast<std::size_t>(N) + 1), rank(std::size_t{1} << N) {
        for (unsigned b = 0; b < (1u << N); ++b) {
            auto& list = states[static_cast<std::size_t>(std::popcount(b))];
            rank[b] = list.size();
            list.push_back(b);
        }
    }
    std::size_t count(int q) const {
        if (q < 0 || q >= static_cast<int>(states.size())) return 0;
        return states[static_cast<std::size_t>(q)].size();
    }
};

// Sector of K up spins in total: rows |+,b> with popcount(b) = K-1 first, then |-,b> with popcount(b) = K.
SparseC sector_hamiltonian(const BathIndex& idx, const std::vector<double>& a, double omega0, int K) {
    const std::size_t n_up = idx.count(K - 1);
    const std::size_t n_dn = idx.count(K);
    const auto dim = static_cast<Eigen::Index>(n_up + n_dn);
    std::vector<Eigen::Triplet<cplx>> trip;
    const int N = static_cast<int>(a.size());
    if (n_up > 0) {
        for (unsigned b : idx.states[static_cast<std::size_t>(K - 1)]) {
            const auto row = static_cast<Eigen::Index>(idx.rank[b]);
            trip.emplace_back(row, row, 0.5 * omega0 + zz_field(a, b));
            for (int k = 0; k < N; ++k) {
                if (b >> k & 1u) continue;
                const unsigned partner = b | (1u << k);
                const auto col = static_cast<Eigen::Index>(n_up + idx.rank[partner]);
                trip.emplace_back(row, col, 2.0 * a[static_cast<std::size_t>(k)]);
                trip.emplace_back(col, row, 2.0 * a[static_cast<std::size_t>(k)]);
            }
        }
    }
    if (n_dn > 0) {
        for (unsigned b : idx.states[static_cast<std::size_t>(K)]) {
            const auto row = static_cast<Eigen::Index>(n_up + idx.rank[b]);
            trip.emplace_back(row, row, -0.5 * omega0 - zz_field(a, b));
        }
    }
    SparseC h(dim, dim);
    h.setFromTriplets(trip.begin(), trip.end());
    return h;
}

double row_norm_bound(const SparseC& h) {
    double best = 0.0;
    for (Eigen::Index r = 0; r < h.outerSize(); ++r) {
        double s = 0.0;
        for (SparseC::InnerIterator it(h, r); it; ++it) s += std::abs(it.value());
        best = std::max(best, s);
    }
    return best;
}

// Taylor coefficients T_n = (-iH)^n x / n!, so that exp(-iH tau) x ~ sum_n T_n tau^n.
void taylor_terms(const SparseC& h_mat, const Eigen::MatrixXcd& x, std::vector<Eigen::MatrixXcd>& terms) {
    terms.resize(kTaylorOrder + 1);
    terms[0] = x;
    for (int n = 1; n <= kTaylorOrder; ++n) {
        terms[static_cast<std::size_t>(n)] = (h_mat * terms[static_cast<std::size_t>(n - 1)]) * cplx(0.0, -1.0 / n);
    }
}

void taylor_eval(const std::vector<Eigen::MatrixXcd>& terms, double tau, Eigen::MatrixXcd& out) {
    out = terms[kTaylorOrder];
    for (int n = kTaylorOrder - 1; n >= 0; --n) out = out * tau + terms[static_cast<std::size_t>(n)];
}

double max_abs(const Eigen::MatrixXcd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

// Propagates x through times, calling observe(i, x(t_i)) at every output time.
// Steps are independent of the output grid: each accepted step of length h is
// covered by two half-step Taylor polynomials, which also give the output
// values inside the step. The full step serves as the error reference.
template <class Observe>
void propagate_columns(const SparseC& h_mat, Eigen::MatrixXcd x, std::span<const double> times, double tol,
                       Observe&& observe) {
    const double hnorm = row_norm_bound(h_mat);
    const double h_max = hnorm > 0.0 ? 6.0 / hnorm : std::numeric_limits<double>::infinity();
    double h = hnorm > 0.0 ? 2.0 / hnorm : 1.0;
    const double t_end = times.empty() ? 0.0 : times.back();
    const double h_min = 1e-13 * std::max(1.0, t_end);
    std::vector<Eigen::MatrixXcd> first, second;
    Eigen::MatrixXcd full, mid, end, out;
    double t = 0.0;
    std::size_t i = 0;
    while (i < times.size()) {
        if (times[i] <= t) {
            observe(i, x);
            ++i;
            continue;
        }
        const double remaining = t_end - t;
        const double hh = remaining <= h * (1.0 + 1e-6) ? remaining : h;
        taylor_terms(h_mat, x, first);
        taylor_eval(first, hh, full);
        taylor_eval(first, 0.5 * hh, mid);
        taylor_terms(h_mat, mid, second);
        taylor_eval(second, 0.5 * hh, end);
        const double err = max_abs(end - full);
        const double allowed = tol * hh;
        if (!std::isfinite(err)) throw NumericFailure("oracle propagation produced non-finite values");
        if (err > allowed) {
            h = 0.5 * hh;
            if (h < h_min) {
                std::ostringstream msg;
                msg << "oracle step size underflow at t = " << t << " (h = " << h << ")";
                throw NumericFailure(msg.str());
            }
            continue;
        }
        const double t_mid = t + 0.5 * hh;
        const double t_next = hh == remaining ? t_end : t + hh;
        for (; i < times.size() && times[i] < t_next; ++i) {
            if (times[i] <= t_mid) {
                taylor_eval(first, times[i] - t, out);
            } else {
                taylor_eval(second, times[i] - t_mid, out);
            }
            observe(i, out);
        }
        x.swap(end);
        t = t_next;
        if (hh == h && err * 1024.0 < allowed) h = std::min(h_max, 2.0 * h);
    }
}

struct JmBasis {
    int two_j;
    Eigen::MatrixXd v;  // columns span the (j, m) subspace of one popcount sector
    std::size_t block;  // index into jm_blocks
};

std::vector<std::pair<int, Eigen::MatrixXd>> jm_decomposition(int N, int q) {
    const Eigen::MatrixXd j2 = bath_j_squared(N, q);
    std::vector<std::pair<int, Eigen::MatrixXd>> out;
    if (j2.rows() == 0) return out;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j2);
    const Eigen::VectorXd& ev = es.eigenvalues();
    Eigen::Index start = 0;
    while (start < ev.size()) {
        const int two_j = static_cast<int>(std::lround(std::sqrt(4.0 * ev[start] + 1.0) - 1.0));
        Eigen::Index end = start;
        while (end < ev.size() &&
               static_cast<int>(std::lround(std::sqrt(4.0 * ev[end] + 1.0) - 1.0)) == two_j) {
            ++end;
        }
        out.emplace_back(two_j, es.eigenvectors().middleCols(start, end - start));
        start = end;
    }
    return out;
}

struct Partial {
    // indexed [time * n_q + q]
    std::vector<double> pp, mm;
    std::vector<cplx> pm;
    std::vector<double> energy;
    // indexed [time * n_jm + block]
    std::vector<double> jpp, jmm;
    std::vector<cplx> jpm;
};

} // namespace

SparseH build_hamiltonian(const SystemParams& p, std::span<const double> couplings) {
    p.validate();
    check_capacity(p.N);
    const auto a = resolve_couplings(p, couplings);
    const int N = p.N;
    const unsigned n_bath = 1u << N;
    const auto dim = static_cast<Eigen::Index>(2 * n_bath);
    std::vector<Eigen::Triplet<double>> trip;
    for (unsigned b = 0; b < n_bath; ++b) {
        const double zz = zz_field(a, b);
        const auto up = static_cast<Eigen::Index>(n_bath | b);
        const auto dn = static_cast<Eigen::Index>(b);
        trip.emplace_back(up, up, 0.5 * p.omega0 + zz);
        trip.emplace_back(dn, dn, -0.5 * p.omega0 - zz);
        for (int k = 0; k < N; ++k) {
            if (b >> k & 1u) continue;
            // |+, b> <-> |-, b with spin k raised>
            const auto partner = static_cast<Eigen::Index>(b | (1u << k));
            trip.emplace_back(up, partner, 2.0 * a[static_cast<std::size_t>(k)]);
            trip.emplace_back(partner, up, 2.0 * a[static_cast<std::size_t>(k)]);
        }
    }
    SparseH h(dim, dim);
    h.setFromTriplets(trip.begin(), trip.end());
    return h;
}

std::vector<unsigned> bath_states(int N, int popcount) {
    if (N < 0 || N > 30) throw DomainError("bath size out of range");
    std::vector<unsigned> out;
    if (popcount < 0 || popcount > N) return out;
    for (unsigned b = 0; b < (1u << N); ++b) {
        if (std::popcount(b) == popcount) out.push_back(b);
    }
    return out;
}

Eigen::MatrixXd bath_j_squared(int N, int popcount) {
    const auto states = bath_states(N, popcount);
    const auto n = static_cast<Eigen::Index>(states.size());
    Eigen::MatrixXd j2 = Eigen::MatrixXd::Zero(n, n);
    if (n == 0) return j2;
    std::vector<Eigen::Index> pos(std::size_t{1} << N, -1);
    for (Eigen::Index i = 0; i < n; ++i) pos[states[static_cast<std::size_t>(i)]] = i;
    // J^2 = 3N/4 - N(N-1)/4 + sum_{k<l} Swap_kl
    const double diag = 0.75 * N - 0.25 * N * (N - 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const unsigned b = states[static_cast<std::size_t>(i)];
        j2(i, i) += diag;
        for (int k = 0; k < N; ++k) {
            for (int l = k + 1; l < N; ++l) {
                const bool bk = b >> k & 1u;
                const bool bl = b >> l & 1u;
                if (bk == bl) {
                    j2(i, i) += 1.0;
                } else {
                    j2(pos[b ^ ((1u << k) | (1u << l))], i) += 1.0;
                }
            }
        }
    }
    return j2;
}

Eigen::MatrixXd bath_jm_basis(int N, int popcount, int two_j) {
    for (auto& [tj, v] : jm_decomposition(N, popcount)) {
        if (tj == two_j) return v;
    }
    return Eigen::MatrixXd(static_cast<Eigen::Index>(bath_states(N, popcount).size()), 0);
}

Eigen::Matrix2cd initial_density(const SystemParams& p) {
    Eigen::Matrix2cd r;
    r << p.initial_p_plus, p.initial_coh, std::conj(p.initial_coh), 1.0 - p.initial_p_plus;
    return r;
}

OracleResult propagate(const SystemParams& p, std::span<const double> couplings, std::span<const double> times,
                       const OracleOptions& opts) {
    return propagate(p, couplings, initial_density(p), times, opts);
}

OracleResult propagate(const SystemParams& p, std::span<const double> couplings, const Eigen::Matrix2cd& rho_S0,
                       std::span<const double> times, const OracleOptions& opts) {
    p.validate();
    check_capacity(p.N);
    validate_times(times);
    if (!(opts.tolerance > 0.0) || !std::isfinite(opts.tolerance)) {
        throw DomainError("oracle tolerance must be positive and finite");
    }
    if (!rho_S0.allFinite() || (rho_S0 - rho_S0.adjoint()).cwiseAbs().maxCoeff() > 1e-12 ||
        std::abs(rho_S0.trace() - 1.0) > 1e-12) {
        throw DomainError("initial central-spin state must be Hermitian with unit trace");
    }
    const auto a = resolve_couplings(p, couplings);
    const int N = p.N;
    const BathIndex idx(N);
    const std::size_t n_q = static_cast<std::size_t>(N) + 1;
    const std::size_t nt = times.size();

    std::vector<SparseC> sector_h;
    for (int K = 0; K <= N + 1; ++K) sector_h.push_back(sector_hamiltonian(idx, a, p.omega0, K));

    // (j,m) bases per popcount, and the ascending (two_j, two_m) block list
    std::vector<std::vector<JmBasis>> jm_by_q(n_q);
    std::vector<SectorBlockSeries> jm_blocks;
    if (opts.jm_blocks) {
        std::vector<std::pair<int, int>> labels;  // (two_j, q)
        for (int q = 0; q <= N; ++q) {
            for (auto& [tj, v] : jm_decomposition(N, q)) {
                jm_by_q[static_cast<std::size_t>(q)].push_back({tj, std::move(v), 0});
                labels.emplace_back(tj, q);
            }
        }
        std::sort(labels.begin(), labels.end());
        for (std::size_t i = 0; i < labels.size(); ++i) {
            SectorBlockSeries s;
            s.two_j = labels[i].first;
            s.two_m = 2 * labels[i].second - N;
            jm_blocks.push_back(std::move(s));
            for (auto& jb : jm_by_q[static_cast<std::size_t>(labels[i].second)]) {
                if (jb.two_j == labels[i].first) jb.block = i;
            }
        }
    }
    const std::size_t n_jm = jm_blocks.size();

    struct Chunk {
        int k;
        std::size_t first, count;
    };
    std::vector<Chunk> chunks;
    for (int k = 0; k <= N; ++k) {
        const std::size_t n = idx.count(k);
        const std::size_t dim = std::max(idx.count(k - 1) + idx.count(k), idx.count(k) + idx.count(k + 1));
        const std::size_t width = std::clamp<std::size_t>(kChunkEntries / dim, 4, kMaxColumnsPerChunk);
        for (std::size_t f = 0; f < n; f += width) chunks.push_back({k, f, std::min(width, n - f)});
    }

    const double r_pp = rho_S0(0, 0).real();
    const double r_mm = rho_S0(1, 1).real();
    const cplx r_pm = rho_S0(0, 1);

    auto run_chunk = [&](const Chunk& c, Partial& out) {
        out.pp.assign(nt * n_q, 0.0);
        out.mm.assign(nt * n_q, 0.0);
        out.pm.assign(nt * n_q, cplx{});
        out.energy.assign(nt, 0.0);
        out.jpp.assign(nt * n_jm, 0.0);
        out.jmm.assign(nt * n_jm, 0.0);
        out.jpm.assign(nt * n_jm, cplx{});
        const int k = c.k;
        const auto cols = static_cast<Eigen::Index>(c.count);
        const auto& hp = sector_h[static_cast<std::size_t>(k + 1)];  // |+,b>
        const auto& hm = sector_h[static_cast<std::size_t>(k)];      // |-,b>
        const auto up_p = static_cast<Eigen::Index>(idx.count(k));      // rows of |+,.> in sector k+1
        const auto up_m = static_cast<Eigen::Index>(idx.count(k - 1));  // rows of |+,.> in sector k
        const auto qk = static_cast<std::size_t>(k);

        // Plus columns: needed for rho_++ (and rho_+- through the overlap with minus columns).
        std::vector<Eigen::MatrixXcd> plus_at;
        const bool need_plus = r_pp != 0.0 || r_pm != cplx{};
        const bool need_minus = r_mm != 0.0 || r_pm != cplx{};
        if (need_plus) {
            Eigen::MatrixXcd x0 = Eigen::MatrixXcd::Zero(hp.rows(), cols);
            for (Eigen::Index j = 0; j < cols; ++j) x0(static_cast<Eigen::Index>(c.first) + j, j) = 1.0;
            if (r_pm != cplx{}) plus_at.resize(nt);
            propagate_columns(hp, std::move(x0), times, opts.tolerance, [&](std::size_t i, const Eigen::MatrixXcd& x) {
                const auto y_up = x.topRows(up_p);
                const auto y_dn = x.bottomRows(x.rows() - up_p);
                out.pp[i * n_q + qk] += r_pp * y_up.squaredNorm();
                if (y_dn.rows() > 0) out.mm[i * n_q + qk + 1] += r_pp * y_dn.squaredNorm();
                out.energy[i] += r_pp * (x.adjoint() * (hp * x)).trace().real();
                for (const auto& jb : jm_by_q[qk]) out.jpp[i * n_jm + jb.block] += r_pp * (jb.v.transpose() * y_up).squaredNorm();
                if (y_dn.rows() > 0) {
                    for (const auto& jb : jm_by_q[qk + 1]) out.jmm[i * n_jm + jb.block] += r_pp * (jb.v.transpose() * y_dn).squaredNorm();
                }
                if (!plus_at.empty()) plus_at[i] = y_up;
            });
        }
        if (need_minus) {
            Eigen::MatrixXcd x0 = Eigen::MatrixXcd::Zero(hm.rows(), cols);
            for (Eigen::Index j = 0; j < cols; ++j) x0(up_m + static_cast<Eigen::Index>(c.first) + j, j) = 1.0;
            propagate_columns(hm, std::move(x0), times, opts.tolerance, [&](std::size_t i, const Eigen::MatrixXcd& x) {
                const auto y_up = x.topRows(up_m);
                const auto y_dn = x.bottomRows(x.rows() - up_m);
                if (y_up.rows() > 0) out.pp[i * n_q + qk - 1] += r_mm * y_up.squaredNorm();
                out.mm[i * n_q + qk] += r_mm * y_dn.squaredNorm();
                out.energy[i] += r_mm * (x.adjoint() * (hm * x)).trace().real();
                if (y_up.rows() > 0) {
                    for (const auto& jb : jm_by_q[qk - 1]) out.jpp[i * n_jm + jb.block] += r_mm * (jb.v.transpose() * y_up).squaredNorm();
                }
                for (const auto& jb : jm_by_q[qk]) out.jmm[i * n_jm + jb.block] += r_mm * (jb.v.transpose() * y_dn).squaredNorm();
                if (!plus_at.empty()) {
                    // sum_b sum_e <+,e|psi_{+,b}> conj(<-,e|psi_{-,b}>)
                    const Eigen::MatrixXcd& yp = plus_at[i];
                    out.pm[i * n_q + qk] += r_pm * (yp.cwiseProduct(y_dn.conjugate())).sum();
                    for (const auto& jb : jm_by_q[qk]) {
                        const Eigen::MatrixXcd zp = jb.v.transpose() * yp;
                        const Eigen::MatrixXcd zm = jb.v.transpose() * y_dn;
                        out.jpm[i * n_jm + jb.block] += r_pm * (zp.cwiseProduct(zm.conjugate())).sum();
                    }
                }
            });
        }
    };

    std::vector<double> pp(nt * n_q, 0.0), mm(nt * n_q, 0.0), energy(nt, 0.0);
    std::vector<cplx> pm(nt * n_q, cplx{});
    std::vector<double> jpp(nt * n_jm, 0.0), jmm(nt * n_jm, 0.0);
    std::vector<cplx> jpm(nt * n_jm, cplx{});
    const std::size_t wave = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    std::vector<Partial> partials;
    for (std::size_t start = 0; start < chunks.size(); start += wave) {
        const std::size_t n = std::min(wave, chunks.size() - start);
        partials.assign(n, Partial{});
        detail::parallel_chunks(n, [&](std::size_t c) { run_chunk(chunks[start + c], partials[c]); });
        for (const Partial& part : partials) {
            for (std::size_t i = 0; i < pp.size(); ++i) {
                pp[i] += part.pp[i];
                mm[i] += part.mm[i];
                pm[i] += part.pm[i];
            }
            for (std::size_t i = 0; i < nt; ++i) energy[i] += part.energy[i];
            for (std::size_t i = 0; i < jpp.size(); ++i) {
                jpp[i] += part.jpp[i];
                jmm[i] += part.jmm[i];
                jpm[i] += part.jpm[i];
            }
        }
    }

    const double norm = std::ldexp(1.0, -N);
    OracleResult res;
    Trajectory& tr = res.trajectory;
    tr.resize(nt);
    tr.times.assign(times.begin(), times.end());
    tr.method = Method::oracle;
    tr.projection = Projection::none;
    tr.params = p;
    tr.params.initial_p_plus = r_pp;
    tr.params.initial_coh = r_pm;
    tr.trace.assign(nt, 0.0);
    tr.j3tot.assign(nt, 0.0);
    res.energy.resize(nt);
    res.m_blocks.resize(n_q);
    for (std::size_t q = 0; q < n_q; ++q) {
        res.m_blocks[q].two_m = 2 * static_cast<int>(q) - N;
        res.m_blocks[q].rho.resize(nt);
    }
    res.jm_blocks = std::move(jm_blocks);
    for (auto& b : res.jm_blocks) b.rho.resize(nt);
    if (opts.jm_blocks) res.j_squared.assign(nt, 0.0);

    auto block = [](double ppv, double mmv, cplx pmv) {
        Eigen::Matrix2cd r;
        r << ppv, pmv, std::conj(pmv), mmv;
        return r;
    };
    for (std::size_t i = 0; i < nt; ++i) {
        const cplx phase = std::polar(1.0, p.omega0 * times[i]);  // rotating frame
        double sp = 0.0, sm = 0.0, j3 = 0.0;
        cplx sc{};
        for (std::size_t q = 0; q < n_q; ++q) {
            const double bp = norm * pp[i * n_q + q];
            const double bm = norm * mm[i * n_q + q];
            const cplx bc = norm * pm[i * n_q + q] * phase;
            res.m_blocks[q].rho[i] = block(bp, bm, bc);
            const double m = 0.5 * res.m_blocks[q].two_m;
            sp += bp;
            sm += bm;
            sc += bc;
            j3 += (m + 0.5) * bp + (m - 0.5) * bm;
        }
        for (std::size_t b = 0; b < n_jm; ++b) {
            const double bp = norm * jpp[i * n_jm + b];
            const double bm = norm * jmm[i * n_jm + b];
            res.jm_blocks[b].rho[i] = block(bp, bm, norm * jpm[i * n_jm + b] * phase);
            const double j = 0.5 * res.jm_blocks[b].two_j;
            res.j_squared[i] += j * (j + 1.0) * (bp + bm);
        }
        tr.p_plus[i] = sp;
        tr.p_minus[i] = sm;
        tr.coh[i] = sc;
        tr.trace[i] = sp + sm;
        tr.j3tot[i] = j3;
        res.energy[i] = norm * energy[i];
    }
    return res;
}

} // namespace spinstar
