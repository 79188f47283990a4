#include "spinstar/projections.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "spinstar/errors.hpp"
#include "spinstar/oracle.hpp"

namespace spinstar {

namespace {

// A bath operator living on a subset of basis states.
struct LocalOp {
    std::vector<unsigned> support;  // ascending bath basis states
    Eigen::MatrixXd local;          // indexed by position in support

    bool diagonal() const {
        return (local - Eigen::MatrixXd(local.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
    }
};

struct Term {
    int two_j{-1};
    int two_m{0};
    LocalOp a;  // traced against rho
    LocalOp b;  // attached state
};

std::vector<Term> build_terms(int N, ProjectionFamily family, bool corrupt, double polarization) {
    std::vector<Term> terms;
    if (family == ProjectionFamily::product) {
        const unsigned D = 1u << N;
        std::vector<unsigned> all(D);
        std::iota(all.begin(), all.end(), 0u);
        Term t;
        t.a = {all, Eigen::MatrixXd::Identity(D, D)};
        Eigen::VectorXd rho0(D);
        for (unsigned e = 0; e < D; ++e) {
            const int up = std::popcount(e);
            rho0[e] = std::pow(polarization, up) * std::pow(1.0 - polarization, N - up);
        }
        t.b = {all, Eigen::MatrixXd(rho0.asDiagonal())};
        terms.push_back(std::move(t));
        return terms;
    }
    for (int q = 0; q <= N; ++q) {
        const auto states = bath_states(N, q);
        const auto d = static_cast<Eigen::Index>(states.size());
        if (family == ProjectionFamily::m) {
            Term t;
            t.two_m = 2 * q - N;
            t.a = {states, Eigen::MatrixXd::Identity(d, d)};
            t.b = {states, corrupt ? t.a.local : Eigen::MatrixXd(t.a.local / static_cast<double>(d))};
            terms.push_back(std::move(t));
        } else {
            for (int two_j = std::abs(2 * q - N); two_j <= N; two_j += 2) {
                const Eigen::MatrixXd v = bath_jm_basis(N, q, two_j);
                if (v.cols() == 0) continue;
                Term t;
                t.two_j = two_j;
                t.two_m = 2 * q - N;
                t.a = {states, v * v.transpose()};
                t.b = {states, corrupt ? t.a.local : Eigen::MatrixXd(t.a.local / static_cast<double>(v.cols()))};
                terms.push_back(std::move(t));
            }
        }
    }
    return terms;
}

// tr{X Y} = sum_{a,b} X(a,b) Y(b,a) over common support.
double trace_product(const LocalOp& x, const LocalOp& y) {
    std::vector<std::pair<Eigen::Index, Eigen::Index>> common;  // (pos in x, pos in y)
    std::size_t i = 0, j = 0;
    while (i < x.support.size() && j < y.support.size()) {
        if (x.support[i] == y.support[j]) {
            common.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            ++i;
            ++j;
        } else if (x.support[i] < y.support[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    double s = 0.0;
    for (const auto& [xa, ya] : common) {
        for (const auto& [xb, yb] : common) s += x.local(xa, xb) * y.local(yb, ya);
    }
    return s;
}

void add_into(Eigen::MatrixXd& dense, const LocalOp& op, double scale) {
    for (std::size_t r = 0; r < op.support.size(); ++r) {
        for (std::size_t c = 0; c < op.support.size(); ++c) {
            dense(op.support[r], op.support[c]) += scale * op.local(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        }
    }
}

// tr_E{A X_{ss'}} for a bath-block accessor.
template <class Block>
cplx partial_trace(const LocalOp& a, Block&& x) {
    cplx s{};
    for (std::size_t r = 0; r < a.support.size(); ++r) {
        for (std::size_t c = 0; c < a.support.size(); ++c) {
            const double v = a.local(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
            if (v != 0.0) s += v * x(a.support[c], a.support[r]);
        }
    }
    return s;
}

CheckItem item(std::string name, double residual, double tol, std::string note = {}) {
    CheckItem c;
    c.name = std::move(name);
    c.residual = residual;
    c.tolerance = tol;
    c.passed = std::isfinite(residual) && residual <= tol;
    c.note = std::move(note);
    return c;
}

// Groups of terms whose supports overlap.
std::vector<std::vector<std::size_t>> support_groups(const std::vector<Term>& terms, unsigned D) {
    std::vector<std::size_t> parent(terms.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::vector<long> owner(D, -1);
    for (std::size_t i = 0; i < terms.size(); ++i) {
        for (const LocalOp* op : {&terms[i].a, &terms[i].b}) {
            for (unsigned e : op->support) {
                if (owner[e] < 0) {
                    owner[e] = static_cast<long>(i);
                } else {
                    parent[find(i)] = find(static_cast<std::size_t>(owner[e]));
                }
            }
        }
    }
    std::vector<std::vector<std::size_t>> groups;
    std::vector<long> slot(terms.size(), -1);
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const std::size_t r = find(i);
        if (slot[r] < 0) {
            slot[r] = static_cast<long>(groups.size());
            groups.emplace_back();
        }
        groups[static_cast<std::size_t>(slot[r])].push_back(i);
    }
    return groups;
}

// Smallest eigenvalue of sum_i A_i^T (x) B_i, block by block.
CheckItem positivity(const std::vector<Term>& terms, unsigned D, const ProjectionCheckOptions& opts) {
    double worst = 0.0;
    std::size_t skipped = 0;
    for (const auto& group : support_groups(terms, D)) {
        std::vector<unsigned> u;
        bool all_diag = true;
        for (std::size_t i : group) {
            u.insert(u.end(), terms[i].a.support.begin(), terms[i].a.support.end());
            u.insert(u.end(), terms[i].b.support.begin(), terms[i].b.support.end());
            all_diag = all_diag && terms[i].a.diagonal() && terms[i].b.diagonal();
        }
        std::sort(u.begin(), u.end());
        u.erase(std::unique(u.begin(), u.end()), u.end());
        const auto n = static_cast<Eigen::Index>(u.size());
        auto embed = [&](const LocalOp& op) {
            Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
            std::vector<Eigen::Index> pos(op.support.size());
            for (std::size_t k = 0; k < op.support.size(); ++k) {
                pos[k] = std::lower_bound(u.begin(), u.end(), op.support[k]) - u.begin();
            }
            for (std::size_t r = 0; r < pos.size(); ++r) {
                for (std::size_t c = 0; c < pos.size(); ++c) {
                    m(pos[r], pos[c]) = op.local(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
                }
            }
            return m;
        };
        if (all_diag) {
            Eigen::MatrixXd diag = Eigen::MatrixXd::Zero(n, n);  // (a, c) -> A(a,a) B(c,c)
            for (std::size_t i : group) {
                const Eigen::VectorXd a = embed(terms[i].a).diagonal();
                const Eigen::VectorXd b = embed(terms[i].b).diagonal();
                diag += a * b.transpose();
            }
            worst = std::min(worst, diag.minCoeff());
            continue;
        }
        if (static_cast<std::size_t>(n * n) > opts.max_positivity_block) {
            ++skipped;
            continue;
        }
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n * n, n * n);
        for (std::size_t i : group) {
            const Eigen::MatrixXd at = embed(terms[i].a).transpose();
            const Eigen::MatrixXd b = embed(terms[i].b);
            for (Eigen::Index r1 = 0; r1 < n; ++r1) {
                for (Eigen::Index c1 = 0; c1 < n; ++c1) {
                    if (at(r1, c1) != 0.0) m.block(r1 * n, c1 * n, n, n) += at(r1, c1) * b;
                }
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
        worst = std::min(worst, es.eigenvalues().minCoeff());
    }
    std::string note;
    if (skipped > 0) {
        std::ostringstream msg;
        msg << skipped << " block(s) above " << opts.max_positivity_block << " entries not diagonalized";
        note = msg.str();
    }
    return item("complete_positivity", std::max(0.0, -worst), opts.tolerance, note);
}

} // namespace

bool ProjectionReport::all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckItem& c) { return c.passed; });
}

std::vector<std::string> ProjectionReport::violations() const {
    std::vector<std::string> out;
    for (const auto& c : checks) {
        if (!c.passed) out.push_back(c.name);
    }
    return out;
}

const CheckItem* ProjectionReport::find(const std::string& name) const {
    for (const auto& c : checks) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

ProjectionReport check_projection_conditions(int N, ProjectionFamily family, const ProjectionCheckOptions& opts) {
    if (N < 1) throw DomainError("N must be positive");
    if (N > kProjectionCheckMaxN) {
        std::ostringstream msg;
        msg << "projection checks support N <= " << kProjectionCheckMaxN << ", got N = " << N;
        throw CapacityError(msg.str());
    }
    if (family == ProjectionFamily::product) throw DomainError("projection checks cover families m and jm");
    const double tol = opts.tolerance;
    const auto terms = build_terms(N, family, opts.corrupt_normalization, 0.5);
    const unsigned D = 1u << N;
    const std::size_t n = terms.size();

    ProjectionReport rep;
    rep.family = family;
    rep.N = N;

    // tr{B_i A_j} = delta_ij
    double bio = 0.0;
    Eigen::MatrixXd ab(n, n);  // tr{A_j B_i} stored at (j, i)
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double v = trace_product(terms[i].b, terms[j].a);
            ab(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
            bio = std::max(bio, std::abs(v - (i == j ? 1.0 : 0.0)));
        }
    }
    rep.checks.push_back(item("biorthogonality", bio, tol));

    // sum_i (tr B_i) A_i = I
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(D, D);
    for (const Term& t : terms) add_into(sum, t.a, t.b.local.trace());
    rep.checks.push_back(item("trace_preservation", (sum - Eigen::MatrixXd::Identity(D, D)).cwiseAbs().maxCoeff(), tol));

    rep.checks.push_back(positivity(terms, D, opts));

    // Pi_i = A_i
    double herm = 0.0, idem = 0.0, orth = 0.0;
    Eigen::MatrixXd complete = Eigen::MatrixXd::Zero(D, D);
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::MatrixXd& p = terms[i].a.local;
        herm = std::max(herm, (p - p.transpose()).cwiseAbs().maxCoeff());
        idem = std::max(idem, (p * p - p).cwiseAbs().maxCoeff());
        add_into(complete, terms[i].a, 1.0);
        for (std::size_t j = 0; j < n; ++j) {
            // supports are either identical (same m) or disjoint
            if (i != j && terms[i].a.support == terms[j].a.support) {
                orth = std::max(orth, (p * terms[j].a.local).cwiseAbs().maxCoeff());
            }
        }
    }
    rep.checks.push_back(item("projector_hermitian", herm, tol));
    rep.checks.push_back(item("projector_idempotent", idem, tol));
    rep.checks.push_back(item("projector_orthogonal", orth, tol));
    rep.checks.push_back(item("projector_complete", (complete - Eigen::MatrixXd::Identity(D, D)).cwiseAbs().maxCoeff(), tol));

    // P^dagger X = sum_i tr_E{(I (x) B_i) X} (x) A_i, X = sigma_3/2 (x) I + I (x) J_3
    {
        double worst = 0.0;
        for (int s : {1, -1}) {
            Eigen::MatrixXd got = Eigen::MatrixXd::Zero(D, D);
            for (const Term& t : terms) {
                double tr_bj3 = 0.0;
                for (std::size_t k = 0; k < t.b.support.size(); ++k) {
                    tr_bj3 += t.b.local(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) *
                              (std::popcount(t.b.support[k]) - 0.5 * N);
                }
                add_into(got, t.a, 0.5 * s * t.b.local.trace() + tr_bj3);
            }
            for (unsigned e = 0; e < D; ++e) got(e, e) -= 0.5 * s + (std::popcount(e) - 0.5 * N);
            worst = std::max(worst, got.cwiseAbs().maxCoeff());
        }
        rep.checks.push_back(item("invariant_j3tot", worst, tol));
    }
    if (family == ProjectionFamily::jm) {
        Eigen::MatrixXd j2 = Eigen::MatrixXd::Zero(D, D);
        for (int q = 0; q <= N; ++q) {
            const auto states = bath_states(N, q);
            const Eigen::MatrixXd blk = bath_j_squared(N, q);
            add_into(j2, LocalOp{states, blk}, 1.0);
        }
        Eigen::MatrixXd got = Eigen::MatrixXd::Zero(D, D);
        for (const Term& t : terms) {
            const Eigen::MatrixXd blk = bath_j_squared(N, (t.two_m + N) / 2);
            add_into(got, t.a, trace_product(t.b, LocalOp{t.b.support, blk}));
        }
        rep.checks.push_back(item("invariant_j_squared", (got - j2).cwiseAbs().maxCoeff(), tol));
    }

    // P P X = P X on random X = sum_r s_r (x) E_r
    {
        std::mt19937_64 rng(opts.seed);
        std::normal_distribution<double> g;
        Eigen::MatrixXd gram(n, n);  // tr{B_i B_j}
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = trace_product(terms[i].b, terms[j].b);
            }
        }
        auto norm2 = [&](const std::vector<Eigen::Matrix2cd>& c) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    s += (c[i].adjoint() * c[j]).trace().real() * gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                }
            }
            return s;
        };
        double worst = 0.0;
        for (int sample = 0; sample < opts.random_samples; ++sample) {
            std::vector<Eigen::Matrix2cd> c(n, Eigen::Matrix2cd::Zero());
            for (int r = 0; r < 3; ++r) {
                Eigen::Matrix2cd s;
                for (int k = 0; k < 4; ++k) s(k / 2, k % 2) = cplx(g(rng), g(rng));
                Eigen::MatrixXd er(D, D), ei(D, D);
                for (Eigen::Index k = 0; k < er.size(); ++k) er.data()[k] = g(rng);
                for (Eigen::Index k = 0; k < ei.size(); ++k) ei.data()[k] = g(rng);
                for (std::size_t i = 0; i < n; ++i) {
                    const cplx tr = partial_trace(terms[i].a, [&](unsigned x, unsigned y) { return cplx(er(x, y), ei(x, y)); });
                    c[i] += tr * s;
                }
            }
            std::vector<Eigen::Matrix2cd> cc(n, Eigen::Matrix2cd::Zero());
            for (std::size_t j = 0; j < n; ++j) {
                for (std::size_t i = 0; i < n; ++i) cc[j] += ab(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) * c[i];
            }
            std::vector<Eigen::Matrix2cd> diff(n);
            for (std::size_t i = 0; i < n; ++i) diff[i] = cc[i] - c[i];
            const double base = std::sqrt(norm2(c));
            worst = std::max(worst, base > 0.0 ? std::sqrt(std::max(0.0, norm2(diff))) / base : 0.0);
        }
        rep.checks.push_back(item("superoperator_idempotent", worst, tol));
    }
    return rep;
}

double check_plp_zero(const SystemParams& p, ProjectionFamily family, const PlpOptions& opts) {
    p.validate();
    if (p.N > kPlpCheckMaxN) {
        std::ostringstream msg;
        msg << "PLP check supports N <= " << kPlpCheckMaxN << ", got N = " << p.N;
        throw CapacityError(msg.str());
    }
    if (opts.samples < 1 || !(opts.t_max >= 0.0) || !(opts.bath_polarization >= 0.0 && opts.bath_polarization <= 1.0)) {
        throw DomainError("invalid PLP check options");
    }
    const int N = p.N;
    const unsigned D = 1u << N;
    const auto terms = build_terms(N, family, false, opts.bath_polarization);
    const std::size_t n = terms.size();
    const SparseH h = build_hamiltonian(p);
    const auto dim = static_cast<Eigen::Index>(2 * D);

    // H_0 diagonal; H_I = H - H_0
    Eigen::VectorXd e0(dim);
    for (Eigen::Index x = 0; x < dim; ++x) {
        const double central = (x >> N & 1) ? 0.5 * p.omega0 : -0.5 * p.omega0;
        e0[x] = opts.full_coupling ? central : h.coeff(x, x);
    }
    std::vector<Eigen::Triplet<double>> hi_trip;
    for (Eigen::Index r = 0; r < h.outerSize(); ++r) {
        for (SparseH::InnerIterator it(h, r); it; ++it) {
            const double v = it.row() == it.col() ? it.value() - e0[it.row()] : it.value();
            if (v != 0.0) hi_trip.emplace_back(it.row(), it.col(), v);
        }
    }

    Eigen::MatrixXd gram(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = trace_product(terms[i].b, terms[j].b);
        }
    }
    auto norm = [&](const std::vector<Eigen::Matrix2cd>& c) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                s += (c[i].adjoint() * c[j]).trace().real() * gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            }
        }
        return std::sqrt(std::max(0.0, s));
    };
    // system index 0 = |+> (central bit set), 1 = |->
    auto full_index = [&](int s, unsigned e) { return static_cast<Eigen::Index>(s == 0 ? (D | e) : e); };

    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> ut(0.0, opts.t_max);
    double worst = 0.0;
    for (int sample = 0; sample < opts.samples; ++sample) {
        const double t = ut(rng);
        std::vector<Eigen::Matrix2cd> c(n);
        for (auto& ci : c) {
            for (int k = 0; k < 4; ++k) ci(k / 2, k % 2) = cplx(g(rng), g(rng));
        }
        Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(dim, dim);
        for (std::size_t i = 0; i < n; ++i) {
            const LocalOp& b = terms[i].b;
            for (int s = 0; s < 2; ++s) {
                for (int s2 = 0; s2 < 2; ++s2) {
                    for (std::size_t r = 0; r < b.support.size(); ++r) {
                        for (std::size_t q = 0; q < b.support.size(); ++q) {
                            y(full_index(s, b.support[r]), full_index(s2, b.support[q])) +=
                                c[i](s, s2) * b.local(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(q));
                        }
                    }
                }
            }
        }
        std::vector<Eigen::Triplet<cplx>> trip;
        trip.reserve(hi_trip.size());
        for (const auto& tr : hi_trip) {
            trip.emplace_back(tr.row(), tr.col(), tr.value() * std::polar(1.0, (e0[tr.row()] - e0[tr.col()]) * t));
        }
        Eigen::SparseMatrix<cplx, Eigen::RowMajor> hit(dim, dim);
        hit.setFromTriplets(trip.begin(), trip.end());
        const Eigen::MatrixXcd z = cplx(0.0, -1.0) * (hit * y - y * hit);
        std::vector<Eigen::Matrix2cd> out(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (int s = 0; s < 2; ++s) {
                for (int s2 = 0; s2 < 2; ++s2) {
                    out[i](s, s2) = partial_trace(terms[i].a, [&](unsigned a, unsigned b) {
                        return z(full_index(s, a), full_index(s2, b));
                    });
                }
            }
        }
        const double base = norm(c);
        worst = std::max(worst, base > 0.0 ? norm(out) / base : 0.0);
    }
    return worst;
}

} // namespace spinstar
