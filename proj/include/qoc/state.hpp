#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace qoc {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

/// Thrown when an input breaks an operation's contract (dimension mismatch,
/// non-Hermitian matrix, out-of-bounds control, malformed grid).
class ContractViolation : public std::invalid_argument {
public:
    explicit ContractViolation(const std::string& what) : std::invalid_argument(what) {}
};

/// Thrown when a numerical routine fails outright (eigensolver breakdown,
/// non-finite values where finite ones are required).
class NumericalFailure : public std::runtime_error {
public:
    explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {
constexpr double kNormTolerance = 1e-10;
constexpr double kHermiticityTolerance = 1e-10;
}

/// Unit-norm complex amplitude vector in a fixed orthonormal basis.
class QuantumState {
public:
    explicit QuantumState(Vector amplitudes) : amps_(std::move(amplitudes)) {
        if (amps_.size() < 2)
            throw ContractViolation("QuantumState: dimension must be >= 2");
        const double n = amps_.norm();
        if (std::abs(n - 1.0) > detail::kNormTolerance)
            throw ContractViolation("QuantumState: norm deviates from 1 by " +
                                    std::to_string(std::abs(n - 1.0)));
        // renormalize residual round-off so downstream products stay clean
        amps_ /= n;
    }

    /// Basis vector |k> in dimension dim.
    static QuantumState basis_state(Eigen::Index dim, Eigen::Index k) {
        if (dim < 2 || k < 0 || k >= dim)
            throw ContractViolation("basis_state: index out of range");
        Vector v = Vector::Zero(dim);
        v[k] = 1.0;
        return QuantumState(std::move(v));
    }

    /// Normalizes an arbitrary nonzero vector into a state.
    static QuantumState normalized(Vector amplitudes) {
        const double n = amplitudes.norm();
        if (n <= 0.0)
            throw ContractViolation("QuantumState::normalized: zero vector");
        return QuantumState(amplitudes / n);
    }

    const Vector& amplitudes() const { return amps_; }
    Eigen::Index dim() const { return amps_.size(); }
    Complex operator[](Eigen::Index i) const { return amps_[i]; }

private:
    Vector amps_;
};

/// <a|b>
inline Complex inner(const QuantumState& a, const QuantumState& b) {
    if (a.dim() != b.dim())
        throw ContractViolation("inner: dimension mismatch");
    return a.amplitudes().dot(b.amplitudes());
}

inline void require_same_dim(const QuantumState& a, const QuantumState& b, const char* op) {
    if (a.dim() != b.dim())
        throw ContractViolation(std::string(op) + ": dimension mismatch");
}

/// Max-norm check of H - H^dagger; throws beyond tolerance.
inline void require_hermitian(const Matrix& h, const char* op) {
    if (h.rows() != h.cols())
        throw ContractViolation(std::string(op) + ": matrix not square");
    const double dev = (h - h.adjoint()).cwiseAbs().maxCoeff();
    if (dev > detail::kHermiticityTolerance)
        throw ContractViolation(std::string(op) + ": matrix not Hermitian (max deviation " +
                                std::to_string(dev) + ")");
}

/// Fixes the global phase so the largest-magnitude amplitude is real positive.
/// Ties (within 1e-12 of the max) resolve to the lowest index.
inline Vector fix_global_phase(const Vector& v) {
    const double maxmag = v.cwiseAbs().maxCoeff();
    Eigen::Index pivot = 0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) >= maxmag - 1e-12) {
            pivot = i;
            break;
        }
    }
    const Complex a = v[pivot];
    if (std::abs(a) == 0.0) return v;
    return v * (std::conj(a) / std::abs(a));
}

}  // namespace qoc
