#pragma once

#include <optional>
#include <ostream>
#include <string>

namespace lcflow::cli {

enum ExitCode : int {
    kOk = 0,
    kConfigError = 2,
    kStepFailure = 3,
    kMissingArtifact = 4,
};

struct Options {
    std::string config_path;  // empty: preset or built-in defaults
    std::string preset;
    std::string out_dir;      // empty: [output] directory of the config
    unsigned threads = 1;     // 0: hardware concurrency
    // reference subcommand overrides
    std::string kind;
    std::optional<double> beta;
    std::optional<std::size_t> nodes;
};

/// Single flow run: fields.csv, rates.csv, metric.csv, diagnostics.csv, summary.json, config.ini.
int cmd_run(const Options& opts, std::ostream& out, std::ostream& err);

/// Cascade: monotonicity_margins.json, stage_<param>.csv, cascade_audits.json, and the
/// terminal member written as for cmd_run.
int cmd_cascade(const Options& opts, std::ostream& out, std::ostream& err);

/// Configured audits over the recorded run in the output directory; writes audits.json.
int cmd_audit(const Options& opts, std::ostream& out, std::ostream& err);

/// Reference metric and its curvature: reference.csv, reference.json.
int cmd_reference(const Options& opts, std::ostream& out, std::ostream& err);

/// argv front end for the four subcommands.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lcflow::cli
