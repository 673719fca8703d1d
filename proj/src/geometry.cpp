#include "lcflow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "lcflow/error.hpp"

namespace lcflow {

void DivisorSpec::validate() const {
    if (!(hermitian_scale > 0.0) || !std::isfinite(hermitian_scale)) {
        throw std::invalid_argument("hermitian_scale must be positive");
    }
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
        throw std::invalid_argument("divisor epsilon must be >= 0");
    }
    switch (kind) {
    case DivisorKind::Cusp:
        break;
    case DivisorKind::Conic:
        if (!(coefficient > 0.0 && coefficient < 1.0)) {
            throw std::invalid_argument("conic coefficient b must lie in (0,1)");
        }
        break;
    case DivisorKind::Canonical:
        if (!(coefficient >= 0.0) || !std::isfinite(coefficient)) {
            throw std::invalid_argument("canonical coefficient a must be >= 0");
        }
        break;
    }
}

double DivisorSpec::log_norm2(double s) const { return s + std::log(hermitian_scale); }

void BackgroundSpec::validate() const {
    for (double p : {t, u, v, delta, theta_scale, omega0_scale}) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
            throw std::invalid_argument("background parameters must be finite and non-negative");
        }
    }
    if (!(eta >= 0.0) || !std::isfinite(eta)) {
        throw std::invalid_argument("eta must be finite and non-negative");
    }
    for (const auto& d : divisors) d.validate();
    if (stilde_index && *stilde_index >= divisors.size()) {
        throw std::invalid_argument("stilde index names no divisor");
    }
}

double BackgroundSpec::cusp_coefficient() const {
    return normalized ? 1.0 + v - std::exp(-t) : t + v;
}

double BackgroundSpec::omega0_weight() const { return normalized ? std::exp(-t) : 1.0; }

// ---------------------------------------------------------------------------
// Conic regularizer

double conic_regularizer(double t, double beta, double epsilon) {
    if (!(beta > 0.0 && beta <= 1.0)) {
        throw std::invalid_argument("conic_regularizer: beta must lie in (0,1]");
    }
    if (!(t >= 0.0)) throw std::invalid_argument("conic_regularizer: t must be >= 0");
    if (!(epsilon >= 0.0)) throw std::invalid_argument("conic_regularizer: epsilon must be >= 0");
    if (t == 0.0) return 0.0;

    // r = t x^{1/β}:  F = (1/β²) ∫_0^1 ((t x^{1/β} + ε)^β − ε^β) / x dx.
    // The integrand is continuous on [0,1]; its value at x = 0 is t^β when ε = 0,
    // t when β = 1, and 0 otherwise.
    const double eps_b = std::pow(epsilon, beta);
    const double inv_beta = 1.0 / beta;
    auto integrand = [=](double x) {
        if (x <= 0.0) {
            if (epsilon == 0.0) return std::pow(t, beta);
            return beta == 1.0 ? t : 0.0;
        }
        const double r = t * std::pow(x, inv_beta);
        // (r+ε)^β − ε^β without cancellation when r << ε.
        const double diff = epsilon > 0.0
            ? eps_b * std::expm1(beta * std::log1p(r / epsilon))
            : std::pow(r, beta);
        return diff / x;
    };
    double err = 0.0;
    const double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        integrand, 0.0, 1.0, 20, 1e-13, &err);
    return value / (beta * beta);
}

double conic_regularizer_ds(double t, double beta, double epsilon) {
    if (epsilon == 0.0) return std::pow(t, beta) / beta;
    return std::pow(epsilon, beta) * std::expm1(beta * std::log1p(t / epsilon)) / beta;
}

double conic_regularizer_dss(double t, double beta, double epsilon) {
    return t * std::pow(t + epsilon, beta - 1.0);
}

// ---------------------------------------------------------------------------
// Carlson–Griffiths potential

namespace {
double cg_log_norm(double s, double hermitian_scale) {
    const double l = s + std::log(hermitian_scale);
    if (!(l < 0.0)) {
        throw std::invalid_argument("cg_potential: requires hermitian_scale * e^s < 1");
    }
    return l;
}
}  // namespace

double cg_potential(double s, double hermitian_scale) {
    const double l = cg_log_norm(s, hermitian_scale);
    return -std::log(l * l);
}

double cg_potential_ss(double s, double hermitian_scale) {
    const double l = cg_log_norm(s, hermitian_scale);
    return 2.0 / (l * l);
}

// ---------------------------------------------------------------------------
// Weights and background

WeightTable weight_table(std::span<const DivisorSpec> divisors, const RadialGrid& grid,
                         std::optional<std::size_t> stilde_choice, double delta) {
    if (stilde_choice) {
        if (divisors.empty()) {
            throw std::invalid_argument("weight_table: barrier requested but no divisors given");
        }
        if (*stilde_choice >= divisors.size()) {
            throw std::invalid_argument("weight_table: stilde choice out of range");
        }
    }
    for (const auto& d : divisors) d.validate();

    WeightTable w{Field(grid), Field(grid)};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double s = grid.node(i);
        double lw = 0.0;
        for (const auto& d : divisors) {
            const double norm2 = d.hermitian_scale * std::exp(s);
            const double eps2 = d.epsilon * d.epsilon;
            switch (d.kind) {
            case DivisorKind::Cusp: {
                const double l = d.log_norm2(s);
                if (!(l < 0.0)) throw std::invalid_argument("weight_table: |S|^2 must be < 1");
                lw += l + std::log(l * l);
                break;
            }
            case DivisorKind::Conic:
                lw += d.coefficient * (eps2 > 0.0 ? std::log(norm2 + eps2) : d.log_norm2(s));
                break;
            case DivisorKind::Canonical:
                lw -= d.coefficient * (eps2 > 0.0 ? std::log(norm2 + eps2) : d.log_norm2(s));
                break;
            }
        }
        w.log_weight.values[i] = lw;
        if (stilde_choice) {
            w.barrier.values[i] = delta * divisors[*stilde_choice].log_norm2(s);
        }
    }
    return w;
}

WeightTable weight_table(const BackgroundSpec& spec, const RadialGrid& grid) {
    return weight_table(spec.divisors, grid, spec.stilde_index, spec.delta);
}

Field conic_potential(const BackgroundSpec& spec, const RadialGrid& grid) {
    Field f(grid);
    if (spec.eta == 0.0) return f;
    for (const auto& d : spec.divisors) {
        if (d.kind != DivisorKind::Conic) continue;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double norm2 = d.hermitian_scale * std::exp(grid.node(i));
            f.values[i] += spec.eta * conic_regularizer(norm2, d.beta(), d.epsilon * d.epsilon);
        }
    }
    return f;
}

BackgroundFamily::BackgroundFamily(const BackgroundSpec& spec, const RadialGrid& grid)
    : spec_(spec), grid_(grid), exp_s_(grid.size()), cusp_(grid.size(), 0.0),
      cusp_ss_(grid.size(), 0.0), conic_(conic_potential(spec, grid)), conic_ss_(grid.size(), 0.0) {
    spec.validate();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double s = grid.node(i);
        exp_s_[i] = std::exp(s);
        for (const auto& d : spec.divisors) {
            if (d.kind == DivisorKind::Cusp) {
                cusp_[i] += cg_potential(s, d.hermitian_scale);
                cusp_ss_[i] += cg_potential_ss(s, d.hermitian_scale);
            }
        }
    }
    // Discrete, so that it cancels exactly against the −ηF shift of the initial data.
    if (spec.eta > 0.0) conic_ss_ = second_derivative(conic_).values;
}

Background BackgroundFamily::at(double t) const {
    const BackgroundSpec spec = spec_.at_time(t);
    const double flat = spec.theta_scale * spec.u + spec.omega0_weight() * spec.omega0_scale;
    const double cusp = spec.cusp_coefficient();
    Background bg{conic_, Field(grid_)};
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        bg.potential.values[i] += flat * exp_s_[i] + cusp * cusp_[i];
    }
    second_at(t, bg.second.values);
    return bg;
}

void BackgroundFamily::second_at(double t, std::vector<double>& out) const {
    const BackgroundSpec spec = spec_.at_time(t);
    const double flat = spec.theta_scale * spec.u + spec.omega0_weight() * spec.omega0_scale;
    const double cusp = spec.cusp_coefficient();
    out.resize(grid_.size());
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        out[i] = flat * exp_s_[i] + cusp * cusp_ss_[i] + conic_ss_[i];
    }
}

Background assemble_background(const BackgroundSpec& spec, const RadialGrid& grid) {
    Background bg = BackgroundFamily(spec, grid).at(spec.t);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(bg.second.values[i] > 0.0)) {
            throw PositivityError("background is not Kaehler: A_ss = " +
                                  std::to_string(bg.second.values[i]) +
                                  " at s = " + std::to_string(grid.node(i)));
        }
    }
    return bg;
}

LocalModelEnvelope check_local_model(const BackgroundSpec& spec, const RadialGrid& grid) {
    const Background bg = assemble_background(spec, grid);
    const double flat = spec.theta_scale * spec.u + spec.omega0_weight() * spec.omega0_scale;
    const double cusp = spec.cusp_coefficient();
    LocalModelEnvelope env{std::numeric_limits<double>::infinity(),
                           -std::numeric_limits<double>::infinity()};
    const std::size_t deep = spec.divisors.empty() ? grid.size() : grid.size() / 2;
    for (std::size_t i = 0; i < deep; ++i) {
        const double s = grid.node(i);
        const double es = std::exp(s);
        double model = flat * es;
        for (const auto& d : spec.divisors) {
            if (d.kind == DivisorKind::Cusp) {
                model += cusp / (s * s);
            } else if (d.kind == DivisorKind::Conic) {
                const double norm2 = d.hermitian_scale * es;
                model += spec.eta * norm2 / std::pow(norm2 + d.epsilon * d.epsilon, 1.0 - d.beta());
            }
        }
        const double ratio = bg.second.values[i] / model;
        env.c_low = std::min(env.c_low, ratio);
        env.c_high = std::max(env.c_high, ratio);
    }
    return env;
}

bool zero_lelong_check(const Field& f, std::span<const DivisorSpec> divisors,
                       std::span<const double> eps_list) {
    for (std::size_t k = 0; k < eps_list.size(); ++k) {
        if (!(eps_list[k] > 0.0)) throw std::invalid_argument("zero_lelong_check: eps must be > 0");
        if (k > 0 && !(eps_list[k] < eps_list[k - 1])) {
            throw std::invalid_argument("zero_lelong_check: eps_list must be decreasing");
        }
    }
    const auto& g = f.grid;
    const std::size_t n = g.size();
    for (double eps : eps_list) {
        std::vector<double> slack(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double s = g.node(i);
            double log_s = 0.0;
            if (divisors.empty()) {
                log_s = s;
            } else {
                for (const auto& d : divisors) log_s += d.log_norm2(s);
            }
            slack[i] = f.values[i] - eps * log_s;
        }
        // C_ε is the grid minimum of the slack; it certifies the bound only if
        // the slack does not trend downward into the truncated puncture.
        // Trend = least-squares slope over the inner half of the grid.
        const std::size_t m = std::max<std::size_t>(n / 2, 2);
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double x = g.node(i);
            sx += x;
            sy += slack[i];
            sxx += x * x;
            sxy += x * slack[i];
        }
        const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        if (slope > 1e-12 * (1.0 + eps)) return false;
    }
    return true;
}

}  // namespace lcflow
