#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "lcflow/error.hpp"
#include "lcflow/flow.hpp"

namespace lcflow {

/**
 * Parameter sequences of the regularization cascade. Real sequences are meant
 * to decrease and l_seq to increase; validate() only requires positive reals
 * and l >= 1, so an inverted sequence runs and shows up as a failed ordering.
 * Equal consecutive values give identical runs.
 */
struct CascadeSchedule {
    std::vector<double> v_seq{0.1, 0.05, 0.025, 0.0125};
    std::vector<double> epsj_seq{0.1, 0.05, 0.025, 0.0125};
    std::vector<double> epsk_seq{0.1, 0.05, 0.025, 0.0125};
    std::vector<double> u_seq{0.1, 0.05, 0.025, 0.0125};
    std::vector<int> l_seq{2, 4, 8};
    std::vector<double> snapshot_times{0.01, 0.1, 0.5, 1.0};

    void validate(double t_end) const;
    std::size_t run_count() const;
};

enum class Ordering { V, EpsJ, EpsK, U, L };
inline constexpr std::array<Ordering, 5> kOrderings{Ordering::V, Ordering::EpsJ, Ordering::EpsK,
                                                    Ordering::U, Ordering::L};
std::string to_string(Ordering o);

/// Position of one run in the schedule.
struct CascadeTuple {
    std::array<std::size_t, 5> index{};  // v, eps_j, eps_k, u, l
    double v = 0.0;
    double eps_j = 0.0;
    double eps_k = 0.0;
    double u = 0.0;
    int l = 1;

    std::string describe() const;
};

struct CascadeRun {
    CascadeTuple tuple;
    FlowParams params;
    FlowState state;    // snapshots at the schedule times (t = 0 included)
    Field conic_shift;  // η Σ F(|S_j|^2, 1−b_j, ε_j^2), added to φ′ for the ε_j ordering
};

struct CascadeResult {
    CascadeSchedule schedule;
    std::vector<double> times;  // snapshot times, t = 0 first
    std::vector<CascadeRun> runs;
    std::vector<Field> limit_estimate;  // terminal run, one per time
    std::array<double, 5> monotonicity_margins{};
    /// Per parameter: sup-norm differences between consecutive members with all
    /// other parameters at their terminal values, maximized over snapshot times.
    std::array<std::vector<double>, 5> stage_differences;

    std::size_t flat_index(const std::array<std::size_t, 5>& idx) const;
    const CascadeRun& run_at(const std::array<std::size_t, 5>& idx) const;
    const CascadeRun& terminal() const;
    std::size_t time_index(double t) const;  // throws std::out_of_range
};

/// StepFailure raised inside a cascade member, with its parameter tuple.
class CascadeStepFailure : public StepFailure {
public:
    CascadeStepFailure(const StepFailure& inner, const CascadeTuple& tuple);
    const CascadeTuple& tuple() const noexcept { return tuple_; }

private:
    CascadeTuple tuple_;
};

/// t_end·2^{k−levels} for k < levels − 4, then a uniform grid of 16 steps
/// on [t_end/16, t_end], merged with `extra`.
std::vector<double> cascade_time_grid(double t_end, int levels, const std::vector<double>& extra);

/**
 * Runs the full tensor product of the schedule. Each member starts from
 * make_initial(data, l, ·) with the outer Dirichlet value pinned to its own
 * initial data, and all members share one prescribed time grid (the one in
 * base.step_times, or cascade_time_grid when that is empty).
 */
CascadeResult run_cascade(const CascadeSchedule& schedule, const FlowParams& base,
                          const InitialData& data, const RadialGrid& grid, unsigned threads = 1);

/// Minimal signed margin of the ordering (≥ 0 when it holds), over all
/// adjacent pairs in that parameter, all nodes and all snapshot times.
/// Returns 0 when the parameter has a single value.
double check_monotone(const CascadeResult& result, Ordering ordering);

struct LimitEstimate {
    Field field;
    double error;  // +inf for a single-stage cascade
};

/// Terminal field at time t and the largest sup-norm change from moving any
/// one parameter back to its penultimate value.
LimitEstimate limit_extract(const CascadeResult& result, double t);

}  // namespace lcflow
