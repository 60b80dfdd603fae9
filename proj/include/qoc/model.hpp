#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "qoc/state.hpp"

namespace qoc {

struct ControlBounds {
    double lo = 0.0;
    double hi = 1.0;
};

/// Controlled Hamiltonian H(u) with per-control bounds and the transfer
/// endpoints. build and gradient return Hermitian matrices in rad/s.
class HamiltonianModel {
public:
    virtual ~HamiltonianModel() = default;

    virtual Eigen::Index dim() const = 0;
    virtual int control_count() const = 0;
    virtual ControlBounds bounds(int k) const = 0;
    virtual Matrix build(const RealVector& u) const = 0;
    virtual Matrix gradient(const RealVector& u, int k) const = 0;
    virtual QuantumState initial_state() const = 0;
    virtual QuantumState target_state() const = 0;

    bool in_bounds(const RealVector& u, double slack = 1e-12) const {
        if (u.size() != control_count()) return false;
        for (int k = 0; k < control_count(); ++k) {
            const ControlBounds b = bounds(k);
            if (u[k] < b.lo - slack || u[k] > b.hi + slack) return false;
        }
        return true;
    }

    void require_in_bounds(const RealVector& u, const char* op) const {
        if (u.size() != control_count())
            throw ContractViolation(std::string(op) + ": control vector has " +
                                    std::to_string(u.size()) + " components, model expects " +
                                    std::to_string(control_count()));
        if (!in_bounds(u))
            throw ContractViolation(std::string(op) + ": control out of bounds");
    }
};

/// H(u) = sum_k u_k T_k with constant Hermitian terms T_k; gradients are the
/// terms themselves.
class LinearModel : public HamiltonianModel {
public:
    LinearModel(std::vector<Matrix> terms, std::vector<ControlBounds> bounds,
                QuantumState initial, QuantumState target)
        : terms_(std::move(terms)),
          bounds_(std::move(bounds)),
          initial_(std::move(initial)),
          target_(std::move(target)) {
        if (terms_.empty())
            throw ContractViolation("LinearModel: need at least one control term");
        if (terms_.size() != bounds_.size())
            throw ContractViolation("LinearModel: bounds count does not match terms");
        const Eigen::Index d = terms_.front().rows();
        for (const auto& t : terms_) {
            require_hermitian(t, "LinearModel");
            if (t.rows() != d)
                throw ContractViolation("LinearModel: control terms of unequal dimension");
        }
        if (initial_.dim() != d || target_.dim() != d)
            throw ContractViolation("LinearModel: state dimension does not match terms");
    }

    Eigen::Index dim() const override { return terms_.front().rows(); }
    int control_count() const override { return static_cast<int>(terms_.size()); }
    ControlBounds bounds(int k) const override { return bounds_.at(static_cast<std::size_t>(k)); }

    Matrix build(const RealVector& u) const override {
        require_in_bounds(u, "LinearModel::build");
        Matrix h = Matrix::Zero(dim(), dim());
        for (int k = 0; k < control_count(); ++k) h += u[k] * terms_[static_cast<std::size_t>(k)];
        return h;
    }

    Matrix gradient(const RealVector& u, int k) const override {
        if (k < 0 || k >= control_count())
            throw ContractViolation("LinearModel::gradient: control index out of range");
        (void)u;
        return terms_[static_cast<std::size_t>(k)];
    }

    QuantumState initial_state() const override { return initial_; }
    QuantumState target_state() const override { return target_; }

private:
    std::vector<Matrix> terms_;
    std::vector<ControlBounds> bounds_;
    QuantumState initial_;
    QuantumState target_;
};

inline RealVector project_bounds(const RealVector& u, const std::vector<ControlBounds>& bounds) {
    if (u.size() != static_cast<Eigen::Index>(bounds.size()))
        throw ContractViolation("project_bounds: bounds count does not match control vector");
    RealVector r = u;
    for (Eigen::Index k = 0; k < r.size(); ++k) {
        const auto& b = bounds[static_cast<std::size_t>(k)];
        r[k] = std::clamp(r[k], b.lo, b.hi);
    }
    return r;
}

inline RealVector project_bounds(const RealVector& u, const HamiltonianModel& model) {
    std::vector<ControlBounds> b;
    b.reserve(static_cast<std::size_t>(model.control_count()));
    for (int k = 0; k < model.control_count(); ++k) b.push_back(model.bounds(k));
    return project_bounds(u, b);
}

}  // namespace qoc
