// trajectory.hpp: reduced central-spin dynamics on a time grid

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spinstar/sector_model.hpp"

namespace spinstar {

enum class Method { exact, tcl2, nz2, standard, oracle };
enum class Projection { m, jm, product, none };

std::string_view to_string(Method m);
std::string_view to_string(Projection p);
Method parse_method(std::string_view s);          // throws DomainError
Projection parse_projection(std::string_view s);  // throws DomainError

/// Populations and coherence of the central spin in the rotating frame of
/// (omega0/2) sigma_3. Times are absolute (inverse units of omega0).
struct Trajectory {
    std::vector<double> times;
    std::vector<double> p_plus;
    std::vector<double> p_minus;
    std::vector<cplx> coh;
    Method method{Method::exact};
    Projection projection{Projection::none};
    SystemParams params{};

    // Optional conservation diagnostics, empty when the method does not track them.
    std::vector<double> trace;  // tr rho_S(t)
    std::vector<double> j3tot;  // tr{J_3^tot P rho(t)}

    std::size_t size() const { return times.size(); }
    void resize(std::size_t n);
};

/// Throws DomainError unless times are finite, >= 0 and strictly increasing.
void validate_times(std::span<const double> times);

/// t0, t0 + dt, ..., up to and including t_max (within dt/1e9).
std::vector<double> uniform_grid(double t_max, double dt, double t0 = 0.0);

} // namespace spinstar
