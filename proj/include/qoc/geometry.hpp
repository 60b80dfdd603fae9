#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "qoc/state.hpp"
#include "qoc/time_grid.hpp"

namespace qoc {

/// Fidelity branch width around the singular points F = 0 and F = 1.
constexpr double kFidelityEps = 1e-12;

/// D(alpha, beta) = arccos|<alpha|beta>|, in [0, pi/2].
inline double distance(const QuantumState& alpha, const QuantumState& beta) {
    require_same_dim(alpha, beta, "distance");
    // round-off can push the overlap past 1 by ~1e-16
    const double ov = std::min(std::abs(inner(alpha, beta)), 1.0);
    return std::acos(ov);
}

/// F = |<chi|psi>|^2 = cos^2 D.
inline double fidelity(const QuantumState& chi, const QuantumState& psi) {
    require_same_dim(chi, psi, "fidelity");
    return std::min(std::norm(inner(chi, psi)), 1.0);
}

/// Perpendicular speed of |psi> under H: sqrt(<H^2> - <H>^2), rad/s.
inline double energy_uncertainty(const QuantumState& psi, const Matrix& h) {
    require_hermitian(h, "energy_uncertainty");
    if (h.rows() != psi.dim())
        throw ContractViolation("energy_uncertainty: dimension mismatch");
    const Vector hpsi = h * psi.amplitudes();
    const double h2 = hpsi.squaredNorm();
    const double h1 = psi.amplitudes().dot(hpsi).real();
    return std::sqrt(std::max(h2 - h1 * h1, 0.0));
}

/// The part of chi absent from psi: (|chi><chi| - F)|psi> / sqrt(F(1-F)),
/// normalized and orthogonal to psi. At F < eps the formula degenerates and
/// chi itself is returned with the global phase fixed (largest-magnitude
/// amplitude real positive). Empty result signals the target was reached
/// (F > 1 - eps).
inline std::optional<QuantumState> xi_state(const QuantumState& chi, const QuantumState& psi) {
    require_same_dim(chi, psi, "xi_state");
    const Complex z = inner(chi, psi);
    const double f = std::min(std::norm(z), 1.0);
    if (f > 1.0 - kFidelityEps) return std::nullopt;
    if (f < kFidelityEps) return QuantumState(fix_global_phase(chi.amplitudes()));
    Vector xi = chi.amplitudes() * z - f * psi.amplitudes();
    return QuantumState::normalized(std::move(xi));
}

struct Velocity {
    double q = 0.0;
    bool target_reached = false;
};

/// Direct Hilbert velocity Q = Re<xi|psidot> = Im<xi|H|psi>, rad/s.
/// At F < eps the arbitrary xi phase is aligned with the motion, so the
/// returned value is the full approach speed |<chi|H|psi>|.
inline Velocity direct_velocity(const QuantumState& chi, const QuantumState& psi,
                                const Matrix& h) {
    require_same_dim(chi, psi, "direct_velocity");
    require_hermitian(h, "direct_velocity");
    if (h.rows() != psi.dim())
        throw ContractViolation("direct_velocity: dimension mismatch");
    const Complex z = inner(chi, psi);
    const double f = std::min(std::norm(z), 1.0);
    if (f > 1.0 - kFidelityEps) return {0.0, true};
    const Vector hpsi = h * psi.amplitudes();
    if (f < kFidelityEps) return {std::abs(chi.amplitudes().dot(hpsi)), false};
    Vector xi = chi.amplitudes() * z - f * psi.amplitudes();
    xi /= xi.norm();
    return {xi.dot(hpsi).imag(), false};
}

/// 2 Im[<chi|H|psi><psi|chi>]; equals 2 sqrt(F(1-F)) Q away from F in {0,1}
/// and stays finite there.
inline double pontryagin_hamiltonian(const QuantumState& chi, const QuantumState& psi,
                                     const Matrix& h) {
    require_same_dim(chi, psi, "pontryagin_hamiltonian");
    require_hermitian(h, "pontryagin_hamiltonian");
    if (h.rows() != psi.dim())
        throw ContractViolation("pontryagin_hamiltonian: dimension mismatch");
    const Complex z = inner(chi, psi);
    const Complex m = chi.amplitudes().dot(h * psi.amplitudes());
    return 2.0 * (m * std::conj(z)).imag();
}

struct TrajectorySegment {
    QuantumState psi;
    Matrix h;
    double dt;
};

/// C = sum dE_j dt_j, the Hilbert-space path length in radians.
inline double trajectory_length(const std::vector<TrajectorySegment>& segments) {
    if (segments.empty())
        throw ContractViolation("trajectory_length: empty trajectory");
    double c = 0.0;
    for (const auto& s : segments) c += energy_uncertainty(s.psi, s.h) * s.dt;
    return c;
}

}  // namespace qoc
