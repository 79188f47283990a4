#include "spinstar/trajectory.hpp"

#include <cmath>
#include <string>

#include "spinstar/errors.hpp"

namespace spinstar {

std::string_view to_string(Method m) {
    switch (m) {
        case Method::exact: return "exact";
        case Method::tcl2: return "tcl2";
        case Method::nz2: return "nz2";
        case Method::standard: return "standard";
        case Method::oracle: return "oracle";
    }
    return "?";
}

std::string_view to_string(Projection p) {
    switch (p) {
        case Projection::m: return "m";
        case Projection::jm: return "jm";
        case Projection::product: return "product";
        case Projection::none: return "none";
    }
    return "?";
}

Method parse_method(std::string_view s) {
    for (Method m : {Method::exact, Method::tcl2, Method::nz2, Method::standard, Method::oracle}) {
        if (s == to_string(m)) return m;
    }
    throw DomainError("unknown method '" + std::string(s) + "'");
}

Projection parse_projection(std::string_view s) {
    for (Projection p : {Projection::m, Projection::jm, Projection::product, Projection::none}) {
        if (s == to_string(p)) return p;
    }
    throw DomainError("unknown projection '" + std::string(s) + "'");
}

void Trajectory::resize(std::size_t n) {
    times.resize(n);
    p_plus.assign(n, 0.0);
    p_minus.assign(n, 0.0);
    coh.assign(n, cplx{0.0, 0.0});
}

void validate_times(std::span<const double> times) {
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!std::isfinite(times[i]) || times[i] < 0.0) {
            throw DomainError("time points must be finite and >= 0");
        }
        if (i > 0 && !(times[i] > times[i - 1])) {
            throw DomainError("time points must be strictly increasing");
        }
    }
}

std::vector<double> uniform_grid(double t_max, double dt, double t0) {
    if (!(dt > 0.0) || !std::isfinite(dt) || !std::isfinite(t_max) || t_max < t0) {
        throw DomainError("uniform_grid needs dt > 0 and t_max >= t0");
    }
    const auto n = static_cast<std::size_t>(std::floor((t_max - t0) / dt * (1.0 + 1e-12) + 1e-9));
    std::vector<double> grid(n + 1);
    for (std::size_t i = 0; i <= n; ++i) grid[i] = t0 + static_cast<double>(i) * dt;
    return grid;
}

} // namespace spinstar
