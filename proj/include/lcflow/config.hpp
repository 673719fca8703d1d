#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lcflow/cascade.hpp"
#include "lcflow/flow.hpp"
#include "lcflow/reference.hpp"

namespace lcflow {

/// Parse or schema violation; `line` is 0 when not tied to one line.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& field, std::size_t line, const std::string& message);
    const std::string& field() const noexcept { return field_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string field_;
    std::size_t line_;
};

enum class OuterMode { Initial, Value, CuspKE, ConeKE };
enum class StepGrid { Adaptive, Geometric };

struct GridConfig {
    double s_min = -50.0;
    double s_max = -2.0;
    std::size_t n_nodes = 2048;
    BoundaryKind inner = BoundaryKind::NeumannZero;
    double inner_value = 0.0;
    OuterMode outer = OuterMode::Initial;
    double outer_value = 0.0;  // OuterMode::Value
    double outer_beta = 0.5;   // OuterMode::ConeKE

    bool operator==(const GridConfig&) const = default;
};

struct BackgroundConfig {
    double u = 0.0;
    double v = 0.0;
    double eta = 0.0;
    double delta = 0.1;
    double theta_scale = 1.0;
    double omega0_scale = 1.0;  // flat Kähler background, so the all-default run is non-degenerate
    std::optional<std::size_t> stilde;

    bool operator==(const BackgroundConfig&) const = default;
};

struct FlowConfig {
    bool normalized = false;
    double t_end = 1.0;
    double dt_init = 1e-3;
    double dt_max = 0.1;
    double newton_tol = 1e-10;
    int max_newton = 50;
    int target_newton = 8;
    int l_index = 1;
    InitialKind initial = InitialKind::Zero;
    double pole_c = 3.0;
    double smooth_amplitude = 1.0;  // φ₀ = a e^s
    std::vector<double> output_times;
    StepGrid step_grid = StepGrid::Adaptive;

    bool operator==(const FlowConfig&) const = default;
};

struct CascadeConfig {
    std::vector<double> v_seq{0.1, 0.05, 0.025, 0.0125};
    std::vector<double> epsj_seq{0.1, 0.05, 0.025, 0.0125};
    std::vector<double> epsk_seq{0.1, 0.05, 0.025, 0.0125};
    std::vector<double> u_seq{0.1, 0.05, 0.025, 0.0125};
    std::vector<int> l_seq{2, 4, 8};
    std::vector<double> snapshot_times{0.01, 0.1, 0.5, 1.0};

    bool operator==(const CascadeConfig&) const = default;
    CascadeSchedule schedule() const;
};

struct AuditConfig {
    std::vector<std::string> audits;  // upper lower time_derivative trace l1_continuity normalized maximality
    double delta = 0.1;
    double tolerance = 2e-10;
    double rate_fit_time = 1e-3;
    double trace_fit_time = 0.05;
    std::vector<double> l1_times;  // empty: every snapshot
    double l1_threshold = 1e-2;
    double l1_threshold_time = 1e-3;
    double normalized_fit_time = 1.0;

    bool operator==(const AuditConfig&) const = default;
};

struct ReferenceConfig {
    ReferenceKind kind = ReferenceKind::CuspKE;
    double beta = 0.5;
    double window_lo = -40.0;  // compare_metrics window
    double window_hi = -5.0;

    bool operator==(const ReferenceConfig&) const = default;
};

struct ExperimentConfig {
    GridConfig grid;
    BackgroundConfig background;
    std::vector<DivisorSpec> divisors;
    FlowConfig flow;
    CascadeConfig cascade;
    AuditConfig audit;
    ReferenceConfig reference;
    std::string output_directory = "out";

    bool operator==(const ExperimentConfig&) const = default;
};

/// Strict INI-style parser: [section] headers, key = value lines, '#' or ';'
/// comments. Unknown sections or keys, duplicates and bad values throw ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string emit_config(const ExperimentConfig& config);

/// FNV-1a 64 of emit_config with the output directory cleared, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

/// cusp-ke, cone-ke, lemma41, pole-envelope, smooth. Throws ConfigError otherwise.
ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

/// Everything a single run needs, derived from a config.
struct RunSetup {
    FlowParams params;
    InitialData data;
    RadialGrid grid;     // with the outer Dirichlet value resolved
    Field initial;       // on `grid`
};

/// Throws ConfigError (field "config") when the derived objects are invalid.
RunSetup build_run(const ExperimentConfig& config);

}  // namespace lcflow
