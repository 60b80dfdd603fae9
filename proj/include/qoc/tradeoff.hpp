#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qoc/optimizer.hpp"

namespace qoc {

/// Every duration scaled by (1 + kappa); controls unchanged.
inline ControlSequence uniform_extend(const ControlSequence& seq, double kappa) {
    if (!(std::abs(kappa) <= 0.5))
        throw ContractViolation("uniform_extend: |kappa| must be at most 0.5");
    std::vector<double> dts = seq.grid.durations();
    for (double& dt : dts) dt *= 1.0 + kappa;
    return ControlSequence(seq.controls, TimeGrid(std::move(dts)));
}

/// Duration-preserving redistribution dt_j -> dt_j (1 + mu_j) with
/// mu_j = eps (nu_j - <nu>_T); the total duration is renormalized exactly.
inline ControlSequence redistribute(const ControlSequence& seq, const GridSeries& nu,
                                    double eps) {
    if (!same_grid(seq.grid, nu.grid))
        throw ContractViolation("redistribute: weights on a different grid");
    const double nu_mean = time_average(nu);
    std::vector<double> dts = seq.grid.durations();
    double mu_max = 0.0;
    for (std::size_t j = 0; j < dts.size(); ++j) {
        const double mu = eps * (nu.values[j] - nu_mean);
        mu_max = std::max(mu_max, std::abs(mu));
        dts[j] *= 1.0 + mu;
    }
    if (mu_max > 0.5)
        throw ContractViolation("redistribute: |mu| exceeds 0.5; shrink eps or nu");
    double total = 0.0;
    for (double dt : dts) {
        if (!(dt > 0.0))
            throw ContractViolation("redistribute: nonpositive duration produced");
        total += dt;
    }
    const double fix = seq.grid.total() / total;
    for (double& dt : dts) dt *= fix;
    return ControlSequence(seq.controls, TimeGrid(std::move(dts)));
}

/// T2 = T1 + [arcsin sqrt(F2) - arcsin sqrt(F1)] / Qopt1. Empty when Qopt1
/// gives no usable estimate.
inline std::optional<double> estimate_t2(double t1, double f1, double f2, double qopt1) {
    if (f1 < 0.0 || f1 > 1.0 || f2 < 0.0 || f2 > 1.0)
        throw ContractViolation("estimate_t2: fidelities must lie in [0, 1]");
    if (!(qopt1 > 0.0)) return std::nullopt;
    return t1 + (std::asin(std::sqrt(f2)) - std::asin(std::sqrt(f1))) / qopt1;
}

struct ToFidelityResult {
    OptimizationReport report;
    bool hit_target = false;
    int outer_iterations = 0;  // duration adjustments taken
};

/// Shortest-duration search at fixed target fidelity within the seed's
/// family: optimize at the current T, step T by the arcsin estimate, and
/// re-optimize until |F - F_target| < tol. Overshoot steps T back down, so
/// the result lands on the trade-off curve from either side.
inline ToFidelityResult optimize_to_fidelity(const ControlSequence& seq,
                                             const HamiltonianModel& model,
                                             const OptimizerConfig& cfg, double f_target,
                                             double tol = 1e-4, int max_outer = 20) {
    if (!(f_target > 0.0) || f_target > 1.0)
        throw ContractViolation("optimize_to_fidelity: target must lie in (0, 1]");
    if (!(tol > 0.0)) throw ContractViolation("optimize_to_fidelity: tolerance must be positive");
    ToFidelityResult res{optimize(seq, model, cfg), false, 0};
    double best_gap = std::abs(res.report.final_fidelity - f_target);
    OptimizationReport best = res.report;
    for (int it = 0; it < max_outer; ++it) {
        const double f = res.report.final_fidelity;
        if (std::abs(f - f_target) < tol) {
            res.hit_target = true;
            return res;
        }
        const double t = res.report.seq.grid.total();
        const auto t2 = estimate_t2(t, f, f_target, res.report.q_mean);
        if (!t2) break;  // no usable speed; cannot steer the duration
        double kappa = *t2 / t - 1.0;
        kappa = std::clamp(kappa, -0.3, 0.3);
        if (std::abs(kappa) < 1e-15) break;
        res.report = optimize(uniform_extend(res.report.seq, kappa), model, cfg);
        res.outer_iterations = it + 1;
        const double gap = std::abs(res.report.final_fidelity - f_target);
        if (gap < best_gap) {
            best_gap = gap;
            best = res.report;
        }
    }
    if (std::abs(res.report.final_fidelity - f_target) < tol) {
        res.hit_target = true;
        return res;
    }
    res.report = best;
    res.hit_target = best_gap < tol;
    return res;
}

/// Normalized-time control distance: both sequences resampled as piecewise
/// constants onto `points` midpoints of t/T, RMS over points and components.
inline double family_distance(const ControlSequence& a, const ControlSequence& b,
                              int points = 64) {
    if (points < 1) throw ContractViolation("family_distance: need at least one point");
    if (a.controls.front().size() != b.controls.front().size())
        throw ContractViolation("family_distance: control dimension mismatch");
    const double ta = a.grid.total(), tb = b.grid.total();
    double acc = 0.0;
    const auto nc = a.controls.front().size();
    for (int p = 0; p < points; ++p) {
        const double x = (p + 0.5) / points;
        const RealVector& ua = a.controls[a.grid.segment_at(x * ta)];
        const RealVector& ub = b.controls[b.grid.segment_at(x * tb)];
        acc += (ua - ub).squaredNorm();
    }
    return std::sqrt(acc / (points * static_cast<double>(nc)));
}

inline bool same_family(const ControlSequence& a, const ControlSequence& b,
                        double threshold = 0.15, int points = 64) {
    return family_distance(a, b, points) < threshold;
}

struct TraceSample {
    double t = 0.0;
    double f = 0.0;
    double q_opt = 0.0;
    std::optional<double> sigma_q;
    ControlSequence seq;
    int class_id = 0;
    int slipped_from = -1;
};

struct SlipEvent {
    double t = 0.0;
    int from_class = 0;
    int to_class = 0;
};

struct ClassTrace {
    std::vector<TraceSample> samples;  // in trace order; sort by t for curves
    std::vector<SlipEvent> slips;
    std::string stop_up;    // why the upward leg ended
    std::string stop_down;  // why the downward leg ended
};

struct TraceConfig {
    double f_step = 0.05;
    double f_step_fine = 0.01;   // floor once a slip needs localizing
    double f_max = 0.9999;
    double f_min = 0.05;
    double fid_tol = 1e-4;       // optimize_to_fidelity tolerance
    int outer_cap = 20;
    double family_threshold = 0.15;
    int resample_points = 64;
    bool go_up = true;
    bool go_down = false;
};

namespace detail {

inline TraceSample make_sample(const OptimizationReport& rep, int class_id, int slipped_from) {
    return TraceSample{rep.seq.grid.total(), rep.final_fidelity, rep.q_mean,
                       rep.sigma_q,          rep.seq,            class_id,
                       slipped_from};
}

}  // namespace detail

/// Maps one optimum class by continuation in duration: the target fidelity is
/// moved in small steps, each step re-optimized from the previous optimum.
/// Near unit fidelity the upward step switches to infidelity halving so the
/// approach to F = 1 is resolved. A jump of the normalized control profile
/// past family_threshold between neighboring samples is recorded as a slip
/// into a new class; downward steps are halved near a detected slip to
/// localize it before it is accepted.
inline ClassTrace trace_class(const ControlSequence& seed, const HamiltonianModel& model,
                              const OptimizerConfig& ocfg, const TraceConfig& tcfg) {
    ClassTrace trace;
    int next_class = 0;
    OptimizationReport base = optimize(seed, model, ocfg);
    trace.samples.push_back(detail::make_sample(base, next_class, -1));

    auto extend_trace = [&](bool upward) -> std::string {
        OptimizationReport cur = base;
        int cur_class = trace.samples.front().class_id;
        double step = tcfg.f_step;
        while (true) {
            double f_next;
            if (upward) {
                const double gap = 1.0 - cur.final_fidelity;
                if (cur.final_fidelity >= tcfg.f_max - tcfg.fid_tol) return "reached f_max";
                if (gap < 2.0 * tcfg.f_step)
                    f_next = std::min(tcfg.f_max, 1.0 - 0.5 * gap);
                else
                    f_next = std::min(tcfg.f_max, cur.final_fidelity + tcfg.f_step);
            } else {
                f_next = cur.final_fidelity - step;
                if (f_next < tcfg.f_min) return "reached f_min";
            }
            auto res = optimize_to_fidelity(cur.seq, model, ocfg, f_next,
                                            tcfg.fid_tol, tcfg.outer_cap);
            if (!res.hit_target) {
                trace.samples.push_back(detail::make_sample(res.report, cur_class, -1));
                return upward ? "stalled before f_max" : "stalled before f_min";
            }
            const bool slipped = family_distance(res.report.seq, cur.seq,
                                                 tcfg.resample_points) > tcfg.family_threshold;
            if (slipped && !upward && step > tcfg.f_step_fine) {
                step = std::max(step * 0.5, tcfg.f_step_fine);
                continue;  // localize the slip with a finer target step
            }
            int slipped_from = -1;
            if (slipped) {
                slipped_from = cur_class;
                ++next_class;
                trace.slips.push_back({res.report.seq.grid.total(), cur_class, next_class});
                cur_class = next_class;
                step = tcfg.f_step;
            }
            trace.samples.push_back(detail::make_sample(res.report, cur_class, slipped_from));
            cur = res.report;
            if (upward && cur.final_fidelity >= tcfg.f_max - tcfg.fid_tol)
                return "reached f_max";
        }
    };

    if (tcfg.go_up) trace.stop_up = extend_trace(true);
    if (tcfg.go_down) trace.stop_down = extend_trace(false);
    return trace;
}

/// T_QSL from the sample nearest f_from: T1 + [pi/2 - arcsin sqrt(F1)] / Qopt1.
struct QslEstimate {
    double t_qsl = 0.0;
    double t1 = 0.0;
    double f1 = 0.0;
    double q1 = 0.0;
};

/// Bare trade-off curve point, enough for speed-limit extrapolation.
struct CurvePoint {
    double t = 0.0;
    double f = 0.0;
    double q = 0.0;
};

inline std::vector<CurvePoint> curve_points(const ClassTrace& trace) {
    std::vector<CurvePoint> pts;
    pts.reserve(trace.samples.size());
    for (const auto& s : trace.samples) pts.push_back({s.t, s.f, s.q_opt});
    return pts;
}

inline std::optional<QslEstimate> extrapolate_tqsl(const std::vector<CurvePoint>& points,
                                                   double f_from) {
    const CurvePoint* pick = nullptr;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : points) {
        if (p.f >= 1.0 - kFidelityEps) return QslEstimate{p.t, p.t, p.f, p.q};
        if (!(p.q > 0.0)) continue;
        const double gap = std::abs(p.f - f_from);
        if (gap < best) {
            best = gap;
            pick = &p;
        }
    }
    if (!pick) return std::nullopt;
    const double t_qsl = pick->t + (std::asin(1.0) - std::asin(std::sqrt(pick->f))) / pick->q;
    return QslEstimate{t_qsl, pick->t, pick->f, pick->q};
}

inline std::optional<QslEstimate> extrapolate_tqsl(const ClassTrace& trace, double f_from) {
    return extrapolate_tqsl(curve_points(trace), f_from);
}

/// Residual of [arcsin sqrt(F)] between the trace endpoints against the
/// trapezoidal integral of Q_opt(T) over the samples inside [t1, t2].
inline double integral_tradeoff_check(const ClassTrace& trace, double t1, double t2) {
    if (t2 < t1) throw ContractViolation("integral_tradeoff_check: need t1 <= t2");
    std::vector<const TraceSample*> in;
    for (const auto& s : trace.samples)
        if (s.t >= t1 - 1e-15 && s.t <= t2 + 1e-15) in.push_back(&s);
    std::sort(in.begin(), in.end(),
              [](const TraceSample* a, const TraceSample* b) { return a->t < b->t; });
    if (in.size() < 2) return 0.0;
    const double lhs =
        std::asin(std::sqrt(in.back()->f)) - std::asin(std::sqrt(in.front()->f));
    double rhs = 0.0;
    for (std::size_t i = 0; i + 1 < in.size(); ++i)
        rhs += 0.5 * (in[i]->q_opt + in[i + 1]->q_opt) * (in[i + 1]->t - in[i]->t);
    return lhs - rhs;
}

}  // namespace qoc
