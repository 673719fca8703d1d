#include "lcflow/cascade.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace lcflow {

namespace {

void check_real_sequence(const std::vector<double>& seq, const char* name) {
    if (seq.empty()) throw std::invalid_argument(std::string(name) + " must not be empty");
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (!(seq[i] > 0.0) || !std::isfinite(seq[i])) {
            throw std::invalid_argument(std::string(name) + " entries must be positive");
        }
    }
}

double sup_diff(const Field& a, const Field& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.values[i] - b.values[i]));
    return d;
}

std::size_t axis_length(const CascadeSchedule& s, std::size_t axis) {
    switch (axis) {
    case 0: return s.v_seq.size();
    case 1: return s.epsj_seq.size();
    case 2: return s.epsk_seq.size();
    case 3: return s.u_seq.size();
    default: return s.l_seq.size();
    }
}

}  // namespace

void CascadeSchedule::validate(double t_end) const {
    check_real_sequence(v_seq, "v_seq");
    check_real_sequence(epsj_seq, "epsj_seq");
    check_real_sequence(epsk_seq, "epsk_seq");
    check_real_sequence(u_seq, "u_seq");
    if (l_seq.empty()) throw std::invalid_argument("l_seq must not be empty");
    for (std::size_t i = 0; i < l_seq.size(); ++i) {
        if (l_seq[i] < 1) throw std::invalid_argument("l_seq entries must be >= 1");
    }
    for (double t : snapshot_times) {
        if (!(t > 0.0 && t <= t_end)) throw std::invalid_argument("snapshot times must lie in (0, t_end]");
    }
}

std::size_t CascadeSchedule::run_count() const {
    return v_seq.size() * epsj_seq.size() * epsk_seq.size() * u_seq.size() * l_seq.size();
}

std::string to_string(Ordering o) {
    switch (o) {
    case Ordering::V: return "v";
    case Ordering::EpsJ: return "eps_j";
    case Ordering::EpsK: return "eps_k";
    case Ordering::U: return "u";
    case Ordering::L: return "l";
    }
    return "?";
}

std::string CascadeTuple::describe() const {
    std::ostringstream os;
    os.precision(17);
    os << "(v=" << v << ", eps_j=" << eps_j << ", eps_k=" << eps_k << ", u=" << u << ", l=" << l << ")";
    return os.str();
}

std::size_t CascadeResult::flat_index(const std::array<std::size_t, 5>& idx) const {
    std::size_t k = 0;
    for (std::size_t a = 0; a < 5; ++a) {
        const std::size_t len = axis_length(schedule, a);
        if (idx[a] >= len) throw std::out_of_range("cascade index out of range");
        k = k * len + idx[a];
    }
    return k;
}

const CascadeRun& CascadeResult::run_at(const std::array<std::size_t, 5>& idx) const {
    return runs.at(flat_index(idx));
}

const CascadeRun& CascadeResult::terminal() const { return runs.back(); }

std::size_t CascadeResult::time_index(double t) const {
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (std::abs(times[k] - t) <= 1e-12 * std::max(1.0, std::abs(t))) return k;
    }
    std::ostringstream msg;
    msg << "no cascade snapshot at t = " << t;
    throw std::out_of_range(msg.str());
}

CascadeStepFailure::CascadeStepFailure(const StepFailure& inner, const CascadeTuple& tuple)
    : StepFailure(std::string(inner.what()) + " in cascade member " + tuple.describe(),
                  inner.time(), inner.node()),
      tuple_(tuple) {}

std::vector<double> cascade_time_grid(double t_end, int levels, const std::vector<double>& extra) {
    std::set<double> t;
    for (int k = 0; k < levels - 4; ++k) t.insert(t_end * std::ldexp(1.0, k - levels));
    for (int k = 1; k <= 16; ++k) t.insert(t_end * k / 16.0);
    for (double x : extra) {
        if (x > 0.0 && x <= t_end) t.insert(x);
    }
    return {t.begin(), t.end()};
}

CascadeResult run_cascade(const CascadeSchedule& schedule, const FlowParams& base,
                          const InitialData& data, const RadialGrid& grid, unsigned threads) {
    schedule.validate(base.t_end);
    base.validate();

    CascadeResult result;
    result.schedule = schedule;
    result.times.push_back(0.0);
    {
        std::set<double> ts(schedule.snapshot_times.begin(), schedule.snapshot_times.end());
        result.times.insert(result.times.end(), ts.begin(), ts.end());
    }

    FlowParams shared = base;
    shared.output_times.assign(result.times.begin() + 1, result.times.end());
    if (shared.step_times.empty()) {
        shared.step_times = cascade_time_grid(base.t_end, 14, shared.output_times);
    }

    // Enumerate the tensor product in row-major order, l fastest.
    const std::size_t total = schedule.run_count();
    result.runs.reserve(total);
    for (std::size_t iv = 0; iv < schedule.v_seq.size(); ++iv)
    for (std::size_t ij = 0; ij < schedule.epsj_seq.size(); ++ij)
    for (std::size_t ik = 0; ik < schedule.epsk_seq.size(); ++ik)
    for (std::size_t iu = 0; iu < schedule.u_seq.size(); ++iu)
    for (std::size_t il = 0; il < schedule.l_seq.size(); ++il) {
        CascadeTuple tp;
        tp.index = {iv, ij, ik, iu, il};
        tp.v = schedule.v_seq[iv];
        tp.eps_j = schedule.epsj_seq[ij];
        tp.eps_k = schedule.epsk_seq[ik];
        tp.u = schedule.u_seq[iu];
        tp.l = schedule.l_seq[il];
        FlowParams p = shared;
        p.background.v = tp.v;
        p.background.u = tp.u;
        p.l_index = tp.l;
        for (auto& d : p.background.divisors) {
            if (d.kind == DivisorKind::Conic) d.epsilon = tp.eps_j;
            if (d.kind == DivisorKind::Canonical) d.epsilon = tp.eps_k;
        }
        result.runs.push_back(CascadeRun{tp, p, FlowState{Field(grid), 0.0, 0, {}, {}}, Field(grid)});
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&]() {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= total) return;
            {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (failure) return;
            }
            CascadeRun& run = result.runs[k];
            try {
                const BackgroundSpec spec = run.params.background_spec();
                const Field initial = make_initial(data, run.params.l_index, spec, grid);
                const RadialGrid pinned = pin_outer_to(initial);
                const MaFlow flow(run.params, pinned);
                run.state = flow.run(Field(pinned, initial.values));
                run.state.diagnostics.clear();
                run.state.diagnostics.shrink_to_fit();
                run.conic_shift = conic_potential(spec, grid);
            } catch (const StepFailure& e) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::make_exception_ptr(CascadeStepFailure(e, run.tuple));
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const unsigned n_threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(total)));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    for (const double t : result.times) {
        const Snapshot* snap = result.terminal().state.snapshot_at(t);
        if (!snap) throw std::logic_error("cascade member is missing a snapshot");
        result.limit_estimate.push_back(snap->u);
    }
    for (Ordering o : kOrderings) {
        result.monotonicity_margins[static_cast<std::size_t>(o)] = check_monotone(result, o);
    }
    std::array<std::size_t, 5> last{};
    for (std::size_t a = 0; a < 5; ++a) last[a] = axis_length(schedule, a) - 1;
    for (std::size_t a = 0; a < 5; ++a) {
        for (std::size_t k = 0; k + 1 < axis_length(schedule, a); ++k) {
            auto i0 = last;
            auto i1 = last;
            i0[a] = k;
            i1[a] = k + 1;
            const auto& r0 = result.run_at(i0).state;
            const auto& r1 = result.run_at(i1).state;
            double d = 0.0;
            for (double t : result.times) {
                if (t == 0.0) continue;
                d = std::max(d, sup_diff(r0.snapshot_at(t)->u, r1.snapshot_at(t)->u));
            }
            result.stage_differences[a].push_back(d);
        }
    }
    return result;
}

double check_monotone(const CascadeResult& result, Ordering ordering) {
    const std::size_t axis = static_cast<std::size_t>(ordering);
    const std::size_t len = axis_length(result.schedule, axis);
    if (len < 2) return 0.0;
    double margin = std::numeric_limits<double>::infinity();
    for (const CascadeRun& run : result.runs) {
        if (run.tuple.index[axis] + 1 >= len) continue;
        auto idx = run.tuple.index;
        ++idx[axis];
        const CascadeRun& later = result.run_at(idx);
        // "larger" is the member the ordering puts on top.
        const bool earlier_on_top = ordering != Ordering::EpsK;
        const CascadeRun& top = earlier_on_top ? run : later;
        const CascadeRun& bottom = earlier_on_top ? later : run;
        for (double t : result.times) {
            const Field& a = top.state.snapshot_at(t)->u;
            const Field& b = bottom.state.snapshot_at(t)->u;
            for (std::size_t i = 0; i < a.size(); ++i) {
                double d = a.values[i] - b.values[i];
                if (ordering == Ordering::EpsJ) {
                    d += top.conic_shift.values[i] - bottom.conic_shift.values[i];
                }
                margin = std::min(margin, d);
            }
        }
    }
    return margin;
}

LimitEstimate limit_extract(const CascadeResult& result, double t) {
    const std::size_t k = result.time_index(t);
    LimitEstimate est{result.limit_estimate[k], std::numeric_limits<double>::infinity()};
    std::array<std::size_t, 5> last{};
    for (std::size_t a = 0; a < 5; ++a) last[a] = axis_length(result.schedule, a) - 1;
    bool any = false;
    double err = 0.0;
    for (std::size_t a = 0; a < 5; ++a) {
        if (last[a] == 0) continue;
        auto idx = last;
        --idx[a];
        err = std::max(err, sup_diff(est.field, result.run_at(idx).state.snapshot_at(t)->u));
        any = true;
    }
    if (any) est.error = err;
    return est;
}

}  // namespace lcflow
