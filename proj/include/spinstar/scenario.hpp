// scenario.hpp: config ingestion, method dispatch, CSV and report output
//
// Config files are line oriented: `key = value`, one key per line, '#'
// starts a comment. Lists (methods, couplings) are comma separated.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spinstar/errors.hpp"
#include "spinstar/trajectory.hpp"
#include "spinstar/volterra.hpp"

namespace spinstar {

/// Malformed or inconsistent configuration (CLI exit code 2).
class ConfigError : public DomainError {
public:
    using DomainError::DomainError;
};

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_numeric = 3, exit_capacity = 4 };

struct ScenarioConfig {
    int N{0};
    double omega0{1.0};
    std::optional<double> A;
    std::optional<double> alpha;
    double t_max{0.0};
    double dt{0.0};
    std::vector<Method> methods;
    Projection projection{Projection::m};
    double initial_p_plus{1.0};
    double coh_re{0.0};
    double coh_im{0.0};
    std::vector<double> couplings;  // oracle only
    SolveOptions solver{};
    double oracle_tolerance{1e-10};
    std::string output_dir{"."};

    /// Throws ConfigError (or CapacityError for an oversized oracle request).
    void validate() const;
    SystemParams params() const;
    double coupling() const;
    std::vector<double> times() const;
    /// Projection tag used for a method's output (exact/oracle: none, standard: product).
    Projection projection_for(Method m) const;
    /// Every accepted key with its resolved value, in a fixed order.
    std::vector<std::pair<std::string, std::string>> resolved() const;
};

ScenarioConfig parse_config(std::istream& in);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Shortest decimal string that reads back to the same double.
std::string format_double(double v);

std::string csv_name(Method m, Projection p);
void write_csv(std::ostream& out, const Trajectory& tr);

/// Populations and coherence of one method on the config's grid.
Trajectory run_method(const ScenarioConfig& cfg, Method m);

struct ErrorReport {
    std::string reference;
    std::string method;
    double sup_err_pop{0.0};
    double l2_err_pop{0.0};
    double sup_err_coh{0.0};
    double l2_err_coh{0.0};
    double trace_drift{0.0};
    double j3tot_drift{0.0};
};

/// Errors of `other` against `reference` on their common grid (grids must match).
ErrorReport compare_trajectories(const Trajectory& reference, const Trajectory& other);
void write_report(std::ostream& out, const ScenarioConfig& cfg, const std::vector<ErrorReport>& rows);

/// Time of the first partial revival of |coh|: the argmax of |coh| after it
/// has first dropped below `drop` * |coh(0)|. Returns nullopt if none.
std::optional<double> first_revival_time(const Trajectory& tr, double drop = 0.1);

struct FigurePreset {
    int number;
    double alpha;
    std::vector<Method> methods;
    Projection projection;
    double t_max;
    double dt;
    const char* summary;
};

/// Presets 2..7; throws ConfigError otherwise.
FigurePreset figure_preset(int number);
ScenarioConfig figure_config(const FigurePreset& preset);

// Commands. Each returns a process exit code and reports errors on `err`.
int run_command(const std::filesystem::path& config, const std::optional<std::filesystem::path>& out_dir,
                std::ostream& log, std::ostream& err);
int compare_command(const std::filesystem::path& config, std::ostream& log, std::ostream& err);
int figure_command(int number, std::optional<double> t_max, std::optional<double> dt,
                   const std::optional<std::filesystem::path>& out_dir, std::ostream& log, std::ostream& err);

} // namespace spinstar
