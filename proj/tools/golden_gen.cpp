// Measures the regression quantities stored in tests/golden/golden_values.txt.
// Prints key=value lines; thresholds in the golden file add margins on top.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>

#include "spinstar/exact_solution.hpp"
#include "spinstar/master_solvers.hpp"
#include "spinstar/scenario.hpp"

using namespace spinstar;

namespace {

SystemParams params(int N, double alpha, double p0, cplx coh) {
    SystemParams p;
    p.N = N;
    p.omega0 = 1.0;
    p.A = coupling_from_alpha(N, 1.0, alpha);
    p.initial_p_plus = p0;
    p.initial_coh = coh;
    return p;
}

double sup_coh(const Trajectory& a, const Trajectory& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a.coh[i] - b.coh[i]));
    return s;
}

double sup_pop(const Trajectory& a, const Trajectory& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a.p_plus[i] - b.p_plus[i]));
    return s;
}

void emit(const char* key, double v) { std::printf("%s=%.17g\n", key, v); }

} // namespace

int main() {
    const auto start = std::chrono::steady_clock::now();
    const cplx half{0.5, 0.0};

    {
        const auto p = params(101, 0.1, 0.5, half);
        const auto t = uniform_grid(600.0, 0.1);
        const auto ex = exact_coherence(p, t);
        const auto tcl = tcl2_coherence_m(p, t);
        const auto nz = nz2_coherence_m(p, t);
        emit("fig2_nz2_vs_tcl2_coh_sup", sup_coh(nz, tcl));
        emit("fig2_nz2_vs_exact_coh_sup", sup_coh(nz, ex));
        emit("fig3_tcl2_vs_exact_coh_sup", sup_coh(tcl, ex));
    }
    {
        const auto p = params(101, 0.1, 0.5, half);
        const auto t = uniform_grid(8000.0, 0.5);
        const auto ex = exact_coherence(p, t);
        const auto tcl = tcl2_coherence_m(p, t);
        const auto jm = tcl2_jm(p, t);
        const auto r_ex = first_revival_time(ex);
        const auto r_tcl = first_revival_time(tcl);
        emit("revival_exact", r_ex.value_or(-1.0));
        emit("revival_tcl2_m", r_tcl.value_or(-1.0));
        emit("revival_abs_diff", r_ex && r_tcl ? std::abs(*r_ex - *r_tcl) : -1.0);
        emit("fig4_tcl2_vs_exact_coh_sup", sup_coh(tcl, ex));
        emit("fig7_tcl2_jm_vs_exact_coh_sup", sup_coh(jm, ex));
    }
    {
        const auto p = params(101, 0.5, 1.0, {});
        const auto t = uniform_grid(300.0, 0.1);
        const auto ex = exact_population_plus(p, t);
        emit("fig5_tcl2_vs_exact_pop_sup", sup_pop(tcl2_population_m(p, t), ex));
        emit("fig5_standard_vs_exact_pop_sup", sup_pop(standard_projection_population(p, t), ex));
        const auto p1 = params(101, 0.1, 1.0, {});
        emit("alpha01_tcl2_vs_exact_pop_sup", sup_pop(tcl2_population_m(p1, t), exact_population_plus(p1, t)));
    }
    {
        const auto p = params(101, 0.5, 1.0, {});
        const auto t = uniform_grid(8000.0, 0.5);
        emit("fig6_tcl2_vs_exact_pop_sup", sup_pop(tcl2_population_m(p, t), exact_population_plus(p, t)));
    }
    {
        SystemParams p;
        p.N = 21;
        p.A = 0.02;
        const auto t = uniform_grid(200.0, 0.1);
        emit("n21_nz2_vs_tcl2_pop_sup", sup_pop(nz2_population_m(p, t), tcl2_population_m(p, t)));
    }
    emit("elapsed_seconds",
         std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    return 0;
}
