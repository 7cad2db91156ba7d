#pragma once

#include "kovtop/error.hpp"
#include "kovtop/euler_poisson.hpp"
#include "kovtop/realization.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace kovtop {

using ojson = nlohmann::ordered_json;

const std::vector<std::string>& commands();

struct Targets {
    double l1 = 0, l = 0, k = 0;
};

struct QuarticSpec {
    double l1 = 0, k0 = 0, l0 = 0;
};

/// Pass thresholds for the check commands.
struct CheckTolerances {
    double identity = 1e-9;
    double quadrature = 1e-6;
    double round_trip = 1e-6;
    double margin = 1e-3;
    double theta_identity = 1e-8;
    double theta_p = 1e-6;
    double abel_fit = 1e-6;
    double fraction = 0.99;
    double drift = 1e-8;
};

struct RunConfig {
    std::string command;
    bool reduced = true;  ///< body given by c0 alone
    double c0 = 1.0;
    BodyParameters body = BodyParameters::kovalevskaya(1.0);
    std::optional<MotionState> state;
    std::optional<Targets> target;
    double t_end = 10.0;
    double tol = 1e-10;
    double sample_step = 1e-3;
    bool exact_sampling = true;
    bool orientation = false;
    bool renormalize = false;
    std::uint64_t seed = 0;
    std::optional<QuarticSpec> quartic;
    std::optional<InertiaTriple> mount;
    double int_tol = 1e-6;
    int generic_samples = 0;
    int identity_samples = 10000;
    int theta_samples = 100;
    int abel_stride = 50;
    int quad_min_nodes = 16;
    int quad_max_nodes = 1024;
    double quad_tol = 1e-12;
    CheckTolerances checks;
    std::string csv, report, plot;
    bool report_wall_time = false;
};

/// Validates JSON config text; `command` and `seed` from the command line take precedence.
RunConfig parse_config(const std::string& text, const std::string& command,
                       std::optional<std::uint64_t> seed = std::nullopt);

/// The config with every default filled in, as embedded in reports.
ojson echo(const RunConfig& cfg);

struct RunReport {
    int exit_code = 0;
    ojson report;
    std::vector<std::filesystem::path> artifacts;
};

/// Runs the command and writes CSV, report and plot script under `out_dir`.
RunReport run(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// 0 success, 2 config, 3 numerical failure, 4 inadmissible regime.
int exit_code(Errc code) noexcept;

/// 17 significant digits, '.' separator, independent of the global locale.
std::string format_number(double v);

/// Worker count bounded by KOVTOP_THREADS.
unsigned worker_count();

/// Runs body(i) for i in [0, n) on worker_count() threads.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

std::string tool_version();

}  // namespace kovtop
