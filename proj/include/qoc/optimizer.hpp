#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "qoc/dynamics.hpp"

namespace qoc {

struct OptimizerConfig {
    double step_alpha = 0.1;      // dimensionless step; update is alpha * g / scale
    int max_sweeps = 2000;
    double fidelity_tol = 1e-10;  // per-sweep fidelity gain below this counts as a stall tick
    double sigma_q_tol = 1e-2;    // reported against, never asserted
    enum class Direction { forward, backward, alternating };
    Direction direction = Direction::forward;
    bool line_search = true;
    double shrink = 0.5;
    enum class Sampling { midpoint, endpoint };
    Sampling sampling = Sampling::midpoint;
    int stall_sweeps = 5;
    bool record_history = true;
};

enum class StopReason { converged, sweep_budget, target_reached, stalled };

inline const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::converged: return "converged";
        case StopReason::sweep_budget: return "sweep_budget";
        case StopReason::target_reached: return "target_reached";
        case StopReason::stalled: return "stalled";
    }
    return "unknown";
}

struct OptimizationReport {
    ControlSequence seq;
    double final_fidelity = 0.0;
    std::vector<double> fidelity_history;   // after each accepted sweep, [0] = seed
    std::vector<double> sigma_q_history;    // NaN rows where sigma_q is undefined
    GridSeries q;                           // per-segment Q at the final iterate
    double q_mean = 0.0;                    // <Q>_T
    std::optional<double> sigma_q;
    int sweeps = 0;
    StopReason reason = StopReason::converged;
};

/// Ascent direction of the per-segment distance decrease:
/// g_k = Im<xi|dH/du_k|psi>. Away from F in {0,1} this is the xi-form
/// gradient; the Pontryagin form 2 Im[<chi|dH/du_k|psi><psi|chi>] equals
/// 2 sqrt(F(1-F)) g_k, the same direction. At F ~ 0 the arbitrary xi phase is
/// aligned with the motion generated by H(u), so the update climbs the
/// approach speed |<chi|psidot>|; at F ~ 1 the gradient is zero.
inline RealVector control_gradient(const QuantumState& chi, const QuantumState& psi,
                                   const RealVector& u, const HamiltonianModel& model) {
    model.require_in_bounds(u, "control_gradient");
    require_same_dim(chi, psi, "control_gradient");
    const Complex z = inner(chi, psi);
    const double f = std::min(std::norm(z), 1.0);
    const int nc = model.control_count();
    RealVector g = RealVector::Zero(nc);
    if (f > 1.0 - kFidelityEps) return g;
    if (f >= kFidelityEps) {
        Vector xi = chi.amplitudes() * z - f * psi.amplitudes();
        xi /= xi.norm();
        for (int k = 0; k < nc; ++k)
            g[k] = xi.dot(model.gradient(u, k) * psi.amplitudes()).imag();
        return g;
    }
    std::vector<Complex> m(static_cast<std::size_t>(nc));
    for (int k = 0; k < nc; ++k)
        m[static_cast<std::size_t>(k)] =
            chi.amplitudes().dot(model.gradient(u, k) * psi.amplitudes());
    Complex c = Complex(0.0, -1.0) * chi.amplitudes().dot(model.build(u) * psi.amplitudes());
    if (std::abs(c) == 0.0) {
        Complex msum = 0.0;
        for (const Complex& mk : m) msum += mk;
        c = Complex(0.0, -1.0) * msum;
    }
    const Complex conj_phase = std::abs(c) > 0.0 ? std::conj(c / std::abs(c)) : Complex(1.0, 0.0);
    for (int k = 0; k < nc; ++k) g[k] = (conj_phase * m[static_cast<std::size_t>(k)]).imag();
    return g;
}

/// Magnitude scale of the control couplings: the largest spectral norm of
/// dH/du_k at the bounds midpoint, used to make steps dimensionless.
inline double control_scale(const HamiltonianModel& model) {
    RealVector umid(model.control_count());
    for (int k = 0; k < model.control_count(); ++k) {
        const ControlBounds b = model.bounds(k);
        umid[k] = 0.5 * (b.lo + b.hi);
    }
    double s = 0.0;
    for (int k = 0; k < model.control_count(); ++k) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(model.gradient(umid, k),
                                                 Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success)
            throw NumericalFailure("control_scale: eigensolver failed");
        s = std::max(s, std::max(std::abs(es.eigenvalues().minCoeff()),
                                 std::abs(es.eigenvalues().maxCoeff())));
    }
    return s > 0.0 ? s : 1.0;
}

namespace detail {

struct SegmentCache {
    Matrix full;  // exp(-i H dt)
    Matrix half;  // exp(-i H dt/2)
};

inline SegmentCache make_cache(const Matrix& h, double dt) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    if (es.info() != Eigen::Success)
        throw NumericalFailure("optimizer: eigensolver failed on a segment Hamiltonian");
    const Eigen::Index d = h.rows();
    Vector pf(d), ph(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        pf[i] = std::exp(Complex(0.0, -es.eigenvalues()[i] * dt));
        ph[i] = std::exp(Complex(0.0, -es.eigenvalues()[i] * dt * 0.5));
    }
    const Matrix& v = es.eigenvectors();
    return {v * pf.asDiagonal() * v.adjoint(), v * ph.asDiagonal() * v.adjoint()};
}

/// Krotov sweep state: per-segment propagator caches plus boundary states
/// consistent with the current controls.
class SweepEngine {
public:
    SweepEngine(ControlSequence seq, const HamiltonianModel& model, OptimizerConfig cfg)
        : model_(model),
          cfg_(cfg),
          u_(std::move(seq.controls)),
          grid_(std::move(seq.grid)),
          scale_(control_scale(model)),
          target_(model.target_state().amplitudes()) {
        const std::size_t n = grid_.segments();
        for (const auto& uj : u_) model_.require_in_bounds(uj, "optimize");
        cache_.reserve(n);
        for (std::size_t j = 0; j < n; ++j)
            cache_.push_back(make_cache(model_.build(u_[j]), grid_.dt(j)));
        psi_.resize(n + 1);
        chi_.resize(n + 1);
        psi_[0] = model_.initial_state().amplitudes();
        rebuild_forward(0);
        rebuild_backward();
    }

    OptimizationReport run() {
        const std::size_t n = grid_.segments();
        double f_cur = fidelity_now();
        bool forward_dir = cfg_.direction != OptimizerConfig::Direction::backward;
        double step = cfg_.step_alpha;
        const double step_floor = cfg_.step_alpha * 1e-8;
        int stall = 0;
        int sweeps = 0;
        StopReason reason = StopReason::sweep_budget;

        std::vector<double> f_hist{f_cur};
        std::vector<double> s_hist;
        if (cfg_.record_history) s_hist.push_back(sigma_now());

        if (f_cur > 1.0 - kFidelityEps) {
            reason = StopReason::target_reached;
        } else {
            while (sweeps < cfg_.max_sweeps) {
                double f_new = 0.0;
                bool accepted = false;
                if (cfg_.line_search) {
                    for (int tries = 0; tries < 200 && step >= step_floor; ++tries) {
                        f_new = sweep_once(step, forward_dir);
                        if (f_new >= f_cur) {
                            accepted = true;
                            commit(forward_dir);
                            step = std::min(step * 2.0, cfg_.step_alpha * 8.0);
                            break;
                        }
                        step *= cfg_.shrink;
                    }
                    if (!accepted) {
                        reason = StopReason::stalled;
                        break;
                    }
                } else {
                    f_new = sweep_once(step, forward_dir);
                    commit(forward_dir);
                    accepted = true;
                }
                ++sweeps;
                const double gain = f_new - f_cur;
                f_cur = f_new;
                f_hist.push_back(f_cur);
                if (cfg_.record_history) s_hist.push_back(sigma_now());
                if (cfg_.direction == OptimizerConfig::Direction::alternating)
                    forward_dir = !forward_dir;
                if (f_cur > 1.0 - kFidelityEps) {
                    reason = StopReason::target_reached;
                    break;
                }
                if (gain < cfg_.fidelity_tol) {
                    if (++stall >= cfg_.stall_sweeps) {
                        reason = StopReason::converged;
                        break;
                    }
                } else {
                    stall = 0;
                }
            }
        }

        GridSeries q = q_series();
        OptimizationReport rep{ControlSequence(u_, grid_),
                               f_cur,
                               std::move(f_hist),
                               std::move(s_hist),
                               q,
                               time_average(q),
                               sigma_q(q),
                               sweeps,
                               reason};
        return rep;
    }

private:
    double fidelity_now() const {
        return std::min(std::norm(chi_[0].dot(psi_[0])), 1.0);
    }

    double sigma_now() const {
        const auto s = sigma_q(q_series());
        return s ? *s : std::numeric_limits<double>::quiet_NaN();
    }

    GridSeries q_series() const {
        const std::size_t n = grid_.segments();
        std::vector<double> q(n);
        for (std::size_t j = 0; j < n; ++j)
            q[j] = direct_velocity(QuantumState::normalized(chi_[j + 1]),
                                   QuantumState::normalized(psi_[j + 1]),
                                   model_.build(u_[j]))
                       .q;
        return GridSeries(std::move(q), grid_);
    }

    void rebuild_forward(std::size_t from) {
        for (std::size_t j = from; j < grid_.segments(); ++j)
            psi_[j + 1] = cache_[j].full * psi_[j];
    }

    void rebuild_backward() {
        const std::size_t n = grid_.segments();
        chi_[n] = target_;
        for (std::size_t j = n; j-- > 0;) chi_[j] = cache_[j].full.adjoint() * chi_[j + 1];
    }

    // One Krotov pass over all segments with the given step; gradient samples
    // use the pre-update segment propagator, controls update immediately and
    // the segment is re-propagated before moving on. Results land in the
    // trial_* members; commit() adopts them.
    double sweep_once(double step, bool forward_dir) {
        const std::size_t n = grid_.segments();
        trial_u_ = u_;
        trial_cache_ = cache_;
        const double gain = step / scale_;
        if (forward_dir) {
            trial_psi_ = psi_;
            Vector running = psi_[0];
            for (std::size_t j = 0; j < n; ++j) {
                update_segment(j, running, chi_[j + 1], gain);
                running = trial_cache_[j].full * running;
                trial_psi_[j + 1] = running;
            }
            return std::min(std::norm(target_.dot(running)), 1.0);
        }
        trial_chi_ = chi_;
        Vector running = target_;
        trial_chi_[n] = running;
        for (std::size_t j = n; j-- > 0;) {
            update_segment(j, psi_[j], running, gain);
            running = trial_cache_[j].full.adjoint() * running;
            trial_chi_[j] = running;
        }
        return std::min(std::norm(running.dot(psi_[0])), 1.0);
    }

    // left: psi at the segment's left boundary; right: chi at its right
    // boundary, both consistent with the current trial state.
    void update_segment(std::size_t j, const Vector& left, const Vector& right, double gain) {
        Vector s_psi, s_chi;
        if (cfg_.sampling == OptimizerConfig::Sampling::midpoint) {
            s_psi = trial_cache_[j].half * left;
            s_chi = trial_cache_[j].half.adjoint() * right;
        } else {
            s_psi = left;
            s_chi = right;
        }
        const RealVector g = control_gradient(QuantumState::normalized(s_chi),
                                              QuantumState::normalized(s_psi), trial_u_[j],
                                              model_);
        const RealVector unew = project_bounds(trial_u_[j] + gain * g, model_);
        if ((unew - trial_u_[j]).cwiseAbs().maxCoeff() > 0.0) {
            trial_u_[j] = unew;
            trial_cache_[j] = make_cache(model_.build(unew), grid_.dt(j));
        }
    }

    void commit(bool forward_dir) {
        u_ = std::move(trial_u_);
        cache_ = std::move(trial_cache_);
        if (forward_dir) {
            psi_ = std::move(trial_psi_);
            rebuild_backward();
        } else {
            chi_ = std::move(trial_chi_);
            rebuild_forward(0);
        }
    }

    const HamiltonianModel& model_;
    OptimizerConfig cfg_;
    std::vector<RealVector> u_;
    TimeGrid grid_;
    double scale_;
    Vector target_;
    std::vector<SegmentCache> cache_;
    std::vector<Vector> psi_, chi_;
    std::vector<RealVector> trial_u_;
    std::vector<SegmentCache> trial_cache_;
    std::vector<Vector> trial_psi_, trial_chi_;
};

}  // namespace detail

/// Sequential sweeps until the per-sweep fidelity gain stays below
/// fidelity_tol, the sweep budget runs out, the target is reached, or the
/// line search cannot find a non-decreasing step.
inline OptimizationReport optimize(const ControlSequence& seq, const HamiltonianModel& model,
                                   const OptimizerConfig& cfg = {}) {
    if (!(cfg.step_alpha > 0.0) || !(cfg.fidelity_tol > 0.0) || !(cfg.sigma_q_tol > 0.0))
        throw ContractViolation("optimize: step and tolerances must be positive");
    if (cfg.max_sweeps < 0 || cfg.stall_sweeps < 1)
        throw ContractViolation("optimize: invalid sweep limits");
    detail::SweepEngine engine(seq, model, cfg);
    return engine.run();
}

/// One sweep with the configured step and no line search; the building block
/// optimize() iterates.
inline ControlSequence sweep(const ControlSequence& seq, const HamiltonianModel& model,
                             const OptimizerConfig& cfg = {}) {
    OptimizerConfig one = cfg;
    one.max_sweeps = 1;
    one.line_search = false;
    one.record_history = false;
    detail::SweepEngine engine(seq, model, one);
    return engine.run().seq;
}

}  // namespace qoc
