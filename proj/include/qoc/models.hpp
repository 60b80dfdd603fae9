#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "qoc/model.hpp"

namespace qoc {

/// Two-level transfer |0> -> |1> under H(u) = u * Omega * sigma_x / 2,
/// u in [0,1]. Analytic solution for constant u: F(T) = sin^2(u Omega T / 2).
inline LinearModel two_level_model(double omega_max) {
    if (!(omega_max > 0.0))
        throw ContractViolation("two_level_model: omega_max must be positive");
    Matrix sx(2, 2);
    sx << 0.0, 1.0, 1.0, 0.0;
    return LinearModel({0.5 * omega_max * sx}, {{0.0, 1.0}},
                       QuantumState::basis_state(2, 0), QuantumState::basis_state(2, 1));
}

/// Collective state of N three-level atoms: n1 in |1>, n2 in |2>, nr excited
/// to the blockaded Rydberg level (nr <= 1).
struct SymmetricBasisState {
    int n1 = 0;
    int n2 = 0;
    int nr = 0;
};

/// All symmetric states with n1 + n2 + nr = N, nr <= 1, ordered by nr then n2
/// ascending; 2N + 1 states.
inline std::vector<SymmetricBasisState> build_symmetric_basis(int n_atoms) {
    if (n_atoms < 1)
        throw ContractViolation("build_symmetric_basis: need at least one atom");
    std::vector<SymmetricBasisState> basis;
    basis.reserve(static_cast<std::size_t>(2 * n_atoms + 1));
    for (int nr = 0; nr <= 1; ++nr)
        for (int n2 = 0; n2 + nr <= n_atoms; ++n2)
            basis.push_back({n_atoms - n2 - nr, n2, nr});
    return basis;
}

namespace detail {

inline std::map<std::tuple<int, int, int>, Eigen::Index> basis_index(
    const std::vector<SymmetricBasisState>& basis) {
    std::map<std::tuple<int, int, int>, Eigen::Index> idx;
    for (std::size_t i = 0; i < basis.size(); ++i)
        idx[{basis[i].n1, basis[i].n2, basis[i].nr}] = static_cast<Eigen::Index>(i);
    return idx;
}

// J_x exchange 1<->2 at unit Omega_1: <n1+1, n2-1, nr|.|n1, n2, nr> = sqrt((n1+1) n2)/2
inline Matrix jx_term(const std::vector<SymmetricBasisState>& basis) {
    const auto idx = basis_index(basis);
    const auto d = static_cast<Eigen::Index>(basis.size());
    Matrix h = Matrix::Zero(d, d);
    for (std::size_t i = 0; i < basis.size(); ++i) {
        const auto& s = basis[i];
        if (s.n2 == 0) continue;
        const auto it = idx.find({s.n1 + 1, s.n2 - 1, s.nr});
        if (it == idx.end()) continue;
        const double elem = 0.5 * std::sqrt(static_cast<double>((s.n1 + 1) * s.n2));
        h(it->second, static_cast<Eigen::Index>(i)) += elem;
        h(static_cast<Eigen::Index>(i), it->second) += elem;
    }
    return h;
}

// Rydberg coupling 2<->r at unit Omega_r: <n1, n2-1, 1|.|n1, n2, 0> = sqrt(n2)/2
inline Matrix jc_term(const std::vector<SymmetricBasisState>& basis) {
    const auto idx = basis_index(basis);
    const auto d = static_cast<Eigen::Index>(basis.size());
    Matrix h = Matrix::Zero(d, d);
    for (std::size_t i = 0; i < basis.size(); ++i) {
        const auto& s = basis[i];
        if (s.nr != 0 || s.n2 == 0) continue;
        const auto it = idx.find({s.n1, s.n2 - 1, 1});
        if (it == idx.end()) continue;
        const double elem = 0.5 * std::sqrt(static_cast<double>(s.n2));
        h(it->second, static_cast<Eigen::Index>(i)) += elem;
        h(static_cast<Eigen::Index>(i), it->second) += elem;
    }
    return h;
}

}  // namespace detail

/// |N, 0, 0>: every atom in |1>.
inline QuantumState rydberg_initial(int n_atoms) {
    const auto basis = build_symmetric_basis(n_atoms);
    for (std::size_t i = 0; i < basis.size(); ++i)
        if (basis[i].n1 == n_atoms && basis[i].n2 == 0 && basis[i].nr == 0)
            return QuantumState::basis_state(static_cast<Eigen::Index>(basis.size()),
                                             static_cast<Eigen::Index>(i));
    throw NumericalFailure("rydberg_initial: basis state missing");
}

/// Zero eigenvector of the collective J_x restricted to the nr = 0 block for
/// even N, nr = 1 for odd N; global phase fixed so the lowest-index
/// largest-magnitude amplitude is real positive. For N = 3 this is
/// (|2,0,1> - |0,2,1>)/sqrt(2).
inline QuantumState rydberg_target(int n_atoms) {
    const auto basis = build_symmetric_basis(n_atoms);
    const int nr_block = (n_atoms % 2 == 1) ? 1 : 0;
    std::vector<Eigen::Index> block;
    for (std::size_t i = 0; i < basis.size(); ++i)
        if (basis[i].nr == nr_block) block.push_back(static_cast<Eigen::Index>(i));

    const Matrix jx = detail::jx_term(basis);
    const auto b = static_cast<Eigen::Index>(block.size());
    Matrix jx_block(b, b);
    for (Eigen::Index r = 0; r < b; ++r)
        for (Eigen::Index c = 0; c < b; ++c) jx_block(r, c) = jx(block[r], block[c]);

    Eigen::SelfAdjointEigenSolver<Matrix> es(jx_block);
    if (es.info() != Eigen::Success)
        throw NumericalFailure("rydberg_target: eigensolver failed");
    Eigen::Index zi = 0;
    double best = std::abs(es.eigenvalues()[0]);
    double second = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 1; i < b; ++i) {
        const double a = std::abs(es.eigenvalues()[i]);
        if (a < best) {
            second = best;
            best = a;
            zi = i;
        } else if (a < second) {
            second = a;
        }
    }
    if (best > 1e-10)
        throw NumericalFailure("rydberg_target: no zero eigenvalue in the target block");
    if (second < 1e-6)
        throw NumericalFailure("rydberg_target: zero eigenvalue of J_x is degenerate");

    Vector full = Vector::Zero(static_cast<Eigen::Index>(basis.size()));
    for (Eigen::Index r = 0; r < b; ++r) full[block[r]] = es.eigenvectors().col(zi)[r];
    return QuantumState::normalized(fix_global_phase(full));
}

/// Blockaded ensemble of the entanglement problem: H(u1, ur) =
/// u1 Omega_max J_x + ur Omega_max (a2' s- + a2 s+)/2 on the symmetric basis,
/// both controls in [0, 1].
class RydbergModel : public LinearModel {
public:
    RydbergModel(int n_atoms, double omega_max)
        : LinearModel({omega_max * detail::jx_term(build_symmetric_basis(n_atoms)),
                       omega_max * detail::jc_term(build_symmetric_basis(n_atoms))},
                      {{0.0, 1.0}, {0.0, 1.0}}, rydberg_initial(n_atoms),
                      rydberg_target(n_atoms)),
          n_atoms_(n_atoms),
          omega_max_(omega_max),
          basis_(build_symmetric_basis(n_atoms)) {
        if (!(omega_max > 0.0))
            throw ContractViolation("RydbergModel: omega_max must be positive");
    }

    int atom_count() const { return n_atoms_; }
    double omega_max() const { return omega_max_; }
    const std::vector<SymmetricBasisState>& basis() const { return basis_; }

private:
    int n_atoms_;
    double omega_max_;
    std::vector<SymmetricBasisState> basis_;
};

}  // namespace qoc
