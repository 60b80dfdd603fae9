#pragma once

#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "qoc/geometry.hpp"
#include "qoc/model.hpp"
#include "qoc/time_grid.hpp"

namespace qoc {

/// Piecewise-constant schedule: one control vector per grid segment.
struct ControlSequence {
    std::vector<RealVector> controls;
    TimeGrid grid;

    ControlSequence(std::vector<RealVector> c, TimeGrid g)
        : controls(std::move(c)), grid(std::move(g)) {
        if (controls.size() != grid.segments())
            throw ContractViolation("ControlSequence: control count does not match grid");
    }
};

inline ControlSequence constant_controls(const RealVector& u, const TimeGrid& grid) {
    return ControlSequence(std::vector<RealVector>(grid.segments(), u), grid);
}

/// exp(-i H dt) through the eigendecomposition of H; exact for constant H.
inline Matrix segment_propagator(const Matrix& h, double dt) {
    require_hermitian(h, "segment_propagator");
    if (dt < 0.0)
        throw ContractViolation("segment_propagator: negative duration");
    if (dt == 0.0) return Matrix::Identity(h.rows(), h.cols());
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    if (es.info() != Eigen::Success)
        throw NumericalFailure("segment_propagator: eigensolver failed");
    Vector phases(h.rows());
    for (Eigen::Index i = 0; i < h.rows(); ++i)
        phases[i] = std::exp(Complex(0.0, -es.eigenvalues()[i] * dt));
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

namespace detail {
inline void require_propagation_inputs(const QuantumState& state, const ControlSequence& seq,
                                       const HamiltonianModel& model, const char* op) {
    if (state.dim() != model.dim())
        throw ContractViolation(std::string(op) + ": state dimension does not match model");
    for (const auto& u : seq.controls) model.require_in_bounds(u, op);
}
}  // namespace detail

/// psi(t_j) at every grid boundary, length N + 1 with [0] = psi0.
inline std::vector<QuantumState> propagate_forward(const QuantumState& psi0,
                                                   const ControlSequence& seq,
                                                   const HamiltonianModel& model) {
    detail::require_propagation_inputs(psi0, seq, model, "propagate_forward");
    std::vector<QuantumState> states;
    states.reserve(seq.grid.segments() + 1);
    states.push_back(psi0);
    Vector v = psi0.amplitudes();
    for (std::size_t j = 0; j < seq.grid.segments(); ++j) {
        v = segment_propagator(model.build(seq.controls[j]), seq.grid.dt(j)) * v;
        states.emplace_back(v);
    }
    return states;
}

/// chi(t_j) = U_{j+1}' ... U_N' chi(T) at every boundary, length N + 1 with
/// [N] = chiT.
inline std::vector<QuantumState> propagate_backward(const QuantumState& chiT,
                                                    const ControlSequence& seq,
                                                    const HamiltonianModel& model) {
    detail::require_propagation_inputs(chiT, seq, model, "propagate_backward");
    const std::size_t n = seq.grid.segments();
    std::vector<QuantumState> states(n + 1, chiT);
    Vector v = chiT.amplitudes();
    for (std::size_t j = n; j-- > 0;) {
        v = segment_propagator(model.build(seq.controls[j]), seq.grid.dt(j)).adjoint() * v;
        states[j] = QuantumState(v);
    }
    return states;
}

/// Forward and backward trajectories with the per-segment diagnostics;
/// Q_j, dE_j and F_j are sampled at the segment's right boundary t_j with the
/// segment's own Hamiltonian H(u_j), so that dD/d(dt_j) = -Q_j holds exactly.
struct TrajectoryRecord {
    std::vector<QuantumState> forward;
    std::vector<QuantumState> backward;
    GridSeries q;
    GridSeries delta_e;
    GridSeries fid;
    bool target_reached = false;
};

inline TrajectoryRecord record_diagnostics(std::vector<QuantumState> fwd,
                                           std::vector<QuantumState> bwd,
                                           const ControlSequence& seq,
                                           const HamiltonianModel& model) {
    const std::size_t n = seq.grid.segments();
    if (fwd.size() != n + 1 || bwd.size() != n + 1)
        throw ContractViolation("record_diagnostics: trajectory length does not match grid");
    std::vector<double> q(n), de(n), f(n);
    bool reached = false;
    for (std::size_t j = 0; j < n; ++j) {
        const Matrix h = model.build(seq.controls[j]);
        const Velocity v = direct_velocity(bwd[j + 1], fwd[j + 1], h);
        q[j] = v.q;
        reached = reached || v.target_reached;
        de[j] = energy_uncertainty(fwd[j + 1], h);
        f[j] = fidelity(bwd[j + 1], fwd[j + 1]);
    }
    return TrajectoryRecord{std::move(fwd), std::move(bwd),
                            GridSeries(std::move(q), seq.grid),
                            GridSeries(std::move(de), seq.grid),
                            GridSeries(std::move(f), seq.grid), reached};
}

inline TrajectoryRecord record_diagnostics(const QuantumState& psi0, const QuantumState& chiT,
                                           const ControlSequence& seq,
                                           const HamiltonianModel& model) {
    return record_diagnostics(propagate_forward(psi0, seq, model),
                              propagate_backward(chiT, seq, model), seq, model);
}

/// C = sum dE_j dt_j from a recorded trajectory.
inline double trajectory_length(const TrajectoryRecord& rec) {
    double c = 0.0;
    for (std::size_t j = 0; j < rec.delta_e.values.size(); ++j)
        c += rec.delta_e.values[j] * rec.delta_e.grid.dt(j);
    return c;
}

}  // namespace qoc
