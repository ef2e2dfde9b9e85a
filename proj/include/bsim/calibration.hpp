#pragma once

// Nelder-Mead calibration of model parameters against tape-measure targets.

#include "bsim/pipeline.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

namespace bsim {

inline const std::vector<std::string>& calibratable_parameters() {
    static const std::vector<std::string> names{"sigma", "w_b", "K", "V0", "support_srg", "d_table"};
    return names;
}

struct FreeParameter {
    std::string name;
    double lower = 0;
    double upper = 0;
};

struct CalibrationProblem {
    std::vector<FreeParameter> free;
    StageTargets targets;
    std::map<std::string, double> weights; // "STAGE.quantity" -> weight, default 1
    double tolerance = 0.02;
    int max_evaluations = 200;

    double weight(StageId stage, const std::string& quantity) const {
        auto it = weights.find(to_string(stage) + "." + quantity);
        return it == weights.end() ? 1.0 : it->second;
    }

    void check() const {
        std::vector<std::string> seen;
        for (const FreeParameter& p : free) {
            const auto& names = calibratable_parameters();
            if (std::find(names.begin(), names.end(), p.name) == names.end())
                fail_usage("parameter " + p.name + " cannot be calibrated");
            if (std::find(seen.begin(), seen.end(), p.name) != seen.end()) fail_usage("parameter " + p.name + " listed twice");
            seen.push_back(p.name);
            if (!std::isfinite(p.lower) || !std::isfinite(p.upper) || !(p.lower < p.upper))
                fail_usage("bounds of " + p.name + " must be finite with lower < upper");
        }
        std::size_t count = 0;
        for (const auto& [stage, values] : targets) {
            count += values.size();
            for (const auto& [name, value] : values) {
                if (std::find(target_quantities().begin(), target_quantities().end(), name) == target_quantities().end())
                    fail_usage("unknown target quantity " + to_string(stage) + "." + name);
                if (!(value > 0)) fail_usage("target " + to_string(stage) + "." + name + " must be > 0");
            }
        }
        if (count == 0) fail_usage("calibration needs at least one target");
        for (const auto& [key, w] : weights)
            if (!(w >= 0) || !std::isfinite(w)) fail_usage("weight " + key + " must be >= 0");
        if (!(tolerance > 0)) fail_usage("calibration tolerance must be > 0");
        if (max_evaluations < 1) fail_usage("max_evaluations must be >= 1");
    }
};

inline void set_parameter(PipelineInput& in, const std::string& name, double value) {
    if (name == "sigma") in.energy.sigma = value;
    else if (name == "w_b") in.energy.w_b = value;
    else if (name == "K") in.energy.K = value;
    else if (name == "V0") in.energy.V0 = value;
    else if (name == "support_srg") in.stage_options.support_srg = value;
    else if (name == "d_table") in.stage_options.d_table = value;
    else fail_usage("parameter " + name + " cannot be calibrated");
}

// Penalty for a target the reports cannot provide, and for a failed run.
inline constexpr double missing_target_penalty = 1e3;
inline constexpr double failed_run_residual = 1e30;

inline double residual(const std::vector<MeasurementReport>& reports, const CalibrationProblem& problem) {
    CompensatedSum<> sum;
    for (const auto& [stage, values] : problem.targets) {
        const MeasurementReport* rep = nullptr;
        for (const auto& r : reports)
            if (r.stage == stage) rep = &r;
        for (const auto& [name, target] : values) {
            const double w = problem.weight(stage, name);
            const auto measured = rep ? rep->quantity(name) : std::nullopt;
            if (!measured) {
                sum += w * missing_target_penalty;
                continue;
            }
            const double rel = (*measured - target) / target;
            sum += w * rel * rel;
        }
    }
    return sum.value();
}

struct CalibrationResult {
    PipelineInput input; // with the best parameters applied
    std::map<std::string, double> values;
    std::vector<MeasurementReport> reports;
    double residual = 0;
    int evaluations = 0;
    bool converged = false;
};

using CalibrationObserver = std::function<void(int evaluation, const std::map<std::string, double>&, double)>;

// Nelder-Mead in coordinates normalized to the bounds, clamped to [0, 1].
// The initial simplex is the bound midpoint plus 10% of the range along each
// axis. Stops when the residual reaches tolerance^2 (converged), when the
// simplex shrinks below 1e-4 of the range, or when the evaluation budget is
// spent; the last two report converged only if the residual bound holds.
inline CalibrationResult calibrate(const PipelineInput& base, const CalibrationProblem& problem,
                                   const CalibrationObserver& observer = {}) {
    problem.check();
    const int n = static_cast<int>(problem.free.size());
    CalibrationResult best;
    best.residual = std::numeric_limits<double>::infinity();

    auto evaluate = [&](const std::vector<double>& u) {
        PipelineInput in = base;
        std::map<std::string, double> values;
        for (int i = 0; i < n; ++i) {
            const FreeParameter& p = problem.free[i];
            const double x = p.lower + std::clamp(u[i], 0.0, 1.0) * (p.upper - p.lower);
            set_parameter(in, p.name, x);
            values[p.name] = x;
        }
        double r = failed_run_residual;
        std::vector<MeasurementReport> reports;
        try {
            const PipelineResult out = run_pipeline(in);
            for (const auto& s : out.stages) reports.push_back(s.report);
            r = residual(reports, problem);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::numerical) throw;
        }
        ++best.evaluations;
        if (observer) observer(best.evaluations, values, r);
        if (r < best.residual) {
            best.residual = r;
            best.input = in;
            best.values = values;
            best.reports = std::move(reports);
        }
        return r;
    };
    const double goal = problem.tolerance * problem.tolerance;
    auto finish = [&] {
        best.converged = best.residual <= goal;
        return best;
    };

    std::vector<std::vector<double>> simplex(n + 1, std::vector<double>(n, 0.5));
    for (int i = 0; i < n; ++i) simplex[i + 1][i] += 0.1;
    std::vector<double> f;
    for (const auto& u : simplex) {
        f.push_back(evaluate(u));
        if (best.residual <= goal || best.evaluations >= problem.max_evaluations) return finish();
    }
    if (n == 0) return finish();

    auto clamp01 = [](std::vector<double> u) {
        for (double& x : u) x = std::clamp(x, 0.0, 1.0);
        return u;
    };
    auto along = [&](const std::vector<double>& c, const std::vector<double>& w, double t) {
        std::vector<double> u(n);
        for (int i = 0; i < n; ++i) u[i] = c[i] + t * (w[i] - c[i]);
        return clamp01(u);
    };

    while (best.evaluations < problem.max_evaluations) {
        std::vector<int> order(n + 1);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return f[a] < f[b]; });
        std::vector<std::vector<double>> s2;
        std::vector<double> f2;
        for (int i : order) {
            s2.push_back(simplex[i]);
            f2.push_back(f[i]);
        }
        simplex.swap(s2);
        f.swap(f2);

        double diameter = 0;
        for (int k = 1; k <= n; ++k)
            for (int i = 0; i < n; ++i) diameter = std::max(diameter, std::abs(simplex[k][i] - simplex[0][i]));
        if (diameter < 1e-4) break;

        std::vector<double> c(n, 0.0);
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i) c[i] += simplex[k][i] / n;
        const auto& worst = simplex[n];

        auto budget_left = [&] { return best.evaluations < problem.max_evaluations && best.residual > goal; };
        const auto xr = along(c, worst, -1.0);
        const double fr = evaluate(xr);
        if (!budget_left()) break;
        if (fr < f[0]) {
            const auto xe = along(c, worst, -2.0);
            const double fe = evaluate(xe);
            if (fe < fr) {
                simplex[n] = xe;
                f[n] = fe;
            } else {
                simplex[n] = xr;
                f[n] = fr;
            }
            continue;
        }
        if (fr < f[n - 1]) {
            simplex[n] = xr;
            f[n] = fr;
            continue;
        }
        bool shrink = false;
        if (fr < f[n]) {
            const auto xc = along(c, worst, -0.5);
            const double fc = evaluate(xc);
            if (fc <= fr) {
                simplex[n] = xc;
                f[n] = fc;
            } else {
                shrink = true;
            }
        } else {
            const auto xc = along(c, worst, 0.5);
            const double fc = evaluate(xc);
            if (fc < f[n]) {
                simplex[n] = xc;
                f[n] = fc;
            } else {
                shrink = true;
            }
        }
        if (!budget_left()) break;
        if (shrink) {
            for (int k = 1; k <= n && budget_left(); ++k) {
                simplex[k] = along(simplex[0], simplex[k], 0.5);
                f[k] = evaluate(simplex[k]);
            }
        }
    }
    return finish();
}

} // namespace bsim
