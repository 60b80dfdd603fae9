#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

#include "qoc/dynamics.hpp"
#include "qoc/models.hpp"
#include "qoc/rng.hpp"

using namespace qoc;

namespace {

const double kPi = std::acos(-1.0);
const double kOmega = 2.0 * kPi * 1e7;

Matrix random_hermitian(SplitMix64& rng, Eigen::Index dim, double scale = 1.0) {
    Matrix a(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j) a(i, j) = Complex(rng.normal(), rng.normal());
    return scale * 0.5 * (a + a.adjoint());
}

LinearModel random_linear_model(SplitMix64& rng, Eigen::Index dim, int controls,
                                double scale = 1.0) {
    std::vector<Matrix> terms;
    std::vector<ControlBounds> bounds;
    for (int k = 0; k < controls; ++k) {
        terms.push_back(random_hermitian(rng, dim, scale));
        bounds.push_back({-2.0, 2.0});
    }
    Vector v0(dim), v1(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        v0[i] = Complex(rng.normal(), rng.normal());
        v1[i] = Complex(rng.normal(), rng.normal());
    }
    return LinearModel(std::move(terms), std::move(bounds), QuantumState::normalized(v0),
                       QuantumState::normalized(v1));
}

}  // namespace

TEST_CASE("segment propagator matches the matrix exponential") {
    SplitMix64 rng(10);
    for (int i = 0; i < 40; ++i) {
        const Eigen::Index dim = 2 + (i % 6);
        const Matrix h = random_hermitian(rng, dim);
        const double dt = 0.3 + rng.uniform01();
        const Matrix u = segment_propagator(h, dt);
        const Matrix oracle = (Complex(0.0, -dt) * h).exp();
        REQUIRE((u - oracle).cwiseAbs().maxCoeff() < 1e-12);
        REQUIRE((u.adjoint() * u - Matrix::Identity(dim, dim)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("segment propagator edge cases") {
    Matrix h(2, 2);
    h << 1.0, 0.0, 0.0, -1.0;
    CHECK(segment_propagator(h, 0.0).isIdentity(1e-15));
    CHECK_THROWS_AS(segment_propagator(h, -0.1), ContractViolation);
    Matrix bad(2, 2);
    bad << 0.0, 1.0, 0.0, 0.0;
    CHECK_THROWS_AS(segment_propagator(bad, 0.1), ContractViolation);
}

TEST_CASE("resonant pulse areas reproduce the analytic transfer") {
    const LinearModel model = two_level_model(kOmega);
    RealVector u1(1);
    u1 << 1.0;
    // pi pulse
    {
        const auto grid = TimeGrid::uniform(kPi / kOmega, 50);
        const auto states = propagate_forward(model.initial_state(), constant_controls(u1, grid),
                                              model);
        CHECK(fidelity(model.target_state(), states.back()) ==
              Catch::Approx(1.0).margin(1e-9));
    }
    // half pulse
    {
        const auto grid = TimeGrid::uniform(0.5 * kPi / kOmega, 50);
        const auto states = propagate_forward(model.initial_state(), constant_controls(u1, grid),
                                              model);
        CHECK(fidelity(model.target_state(), states.back()) ==
              Catch::Approx(0.5).margin(1e-9));
    }
    // scan against sin^2
    for (double frac : {0.1, 0.35, 0.8, 1.7}) {
        const double t = frac * kPi / kOmega;
        const auto grid = TimeGrid::uniform(t, 64);
        const auto states = propagate_forward(model.initial_state(), constant_controls(u1, grid),
                                              model);
        const double expect = std::pow(std::sin(0.5 * kOmega * t), 2);
        CHECK(fidelity(model.target_state(), states.back()) ==
              Catch::Approx(expect).margin(1e-9));
    }
}

TEST_CASE("norm is preserved over many segments") {
    SplitMix64 rng(11);
    const Eigen::Index dim = 4;
    LinearModel model = random_linear_model(rng, dim, 2);
    const auto grid = TimeGrid::uniform(100.0, 10000);
    std::vector<RealVector> u;
    u.reserve(grid.segments());
    for (std::size_t j = 0; j < grid.segments(); ++j) {
        RealVector v(2);
        v << rng.uniform_in(-1.0, 1.0), rng.uniform_in(-1.0, 1.0);
        u.push_back(v);
    }
    const auto states =
        propagate_forward(model.initial_state(), ControlSequence(std::move(u), grid), model);
    double drift = 0.0;
    for (const auto& s : states)
        drift = std::max(drift, std::abs(s.amplitudes().norm() - 1.0));
    CHECK(drift < 1e-8);
}

TEST_CASE("backward propagation is the exact adjoint of forward") {
    SplitMix64 rng(12);
    LinearModel model = random_linear_model(rng, 5, 2);
    const auto grid = TimeGrid::uniform(2.0, 30);
    std::vector<RealVector> u;
    for (std::size_t j = 0; j < grid.segments(); ++j) {
        RealVector v(2);
        v << rng.uniform_in(-1.5, 1.5), rng.uniform_in(-1.5, 1.5);
        u.push_back(v);
    }
    const ControlSequence seq(std::move(u), grid);
    const auto fwd = propagate_forward(model.initial_state(), seq, model);
    const auto bwd = propagate_backward(model.target_state(), seq, model);
    REQUIRE(fwd.size() == seq.grid.segments() + 1);
    REQUIRE(bwd.size() == seq.grid.segments() + 1);
    // the overlap <chi(t)|psi(t)> is an invariant of the pair
    const Complex z = inner(bwd.back(), fwd.back());
    for (std::size_t j = 0; j < fwd.size(); ++j)
        REQUIRE(std::abs(inner(bwd[j], fwd[j]) - z) < 1e-12);
    // evolving the final forward state backward retraces the trajectory
    const auto retrace = propagate_backward(fwd.back(), seq, model);
    for (std::size_t j = 0; j < fwd.size(); ++j)
        REQUIRE((retrace[j].amplitudes() - fwd[j].amplitudes()).norm() < 1e-10);
}

TEST_CASE("diagnostics use the segment right edge so dD/ddt_j = -Q_j") {
    SplitMix64 rng(13);
    LinearModel model = random_linear_model(rng, 3, 2, 1.0);
    const std::size_t n = 6;
    std::vector<double> dts(n, 0.11);
    std::vector<RealVector> u;
    for (std::size_t j = 0; j < n; ++j) {
        RealVector v(2);
        v << rng.uniform_in(-1.0, 1.0), rng.uniform_in(-1.0, 1.0);
        u.push_back(v);
    }
    const ControlSequence seq(u, TimeGrid(dts));
    const auto rec = record_diagnostics(model.initial_state(), model.target_state(), seq, model);

    auto dist_with = [&](std::size_t j, double dt) {
        std::vector<double> d2 = dts;
        d2[j] = dt;
        const auto fwd =
            propagate_forward(model.initial_state(), ControlSequence(u, TimeGrid(d2)), model);
        return distance(model.target_state(), fwd.back());
    };
    const double h = 1e-6 * 0.11;
    for (std::size_t j = 0; j < n; ++j) {
        const double fd = (dist_with(j, 0.11 + h) - dist_with(j, 0.11 - h)) / (2.0 * h);
        REQUIRE(fd == Catch::Approx(-rec.q.values[j]).margin(1e-4 * std::abs(rec.q.values[j]) +
                                                             1e-9));
    }
}

TEST_CASE("constant drive gives a time-independent Q") {
    SplitMix64 rng(14);
    // two-level at the bound
    {
        const LinearModel model = two_level_model(kOmega);
        RealVector u(1);
        u << 1.0;
        const auto grid = TimeGrid::uniform(0.6 * kPi / kOmega, 128);
        const auto rec = record_diagnostics(model.initial_state(), model.target_state(),
                                            constant_controls(u, grid), model);
        double lo = rec.q.values[0], hi = rec.q.values[0];
        for (double q : rec.q.values) {
            lo = std::min(lo, q);
            hi = std::max(hi, q);
        }
        CHECK((hi - lo) <= 1e-10 * std::abs(rec.q.values[0]));
        // on the geodesic the speed saturates the uncertainty bound
        for (std::size_t j = 0; j < rec.q.values.size(); ++j)
            REQUIRE(rec.q.values[j] == Catch::Approx(rec.delta_e.values[j]).epsilon(1e-9));
        CHECK(rec.q.values[0] == Catch::Approx(0.5 * kOmega).epsilon(1e-9));
    }
    // random model, random constant control
    {
        LinearModel model = random_linear_model(rng, 5, 2);
        RealVector u(2);
        u << 0.7, -0.4;
        const auto grid = TimeGrid::uniform(1.7, 97);
        const auto rec = record_diagnostics(model.initial_state(), model.target_state(),
                                            constant_controls(u, grid), model);
        double lo = rec.q.values[0], hi = rec.q.values[0];
        for (double q : rec.q.values) {
            lo = std::min(lo, q);
            hi = std::max(hi, q);
        }
        CHECK((hi - lo) <= 1e-10 * (std::abs(rec.q.values[0]) + 1e-30));
    }
}

TEST_CASE("reaching the target is flagged") {
    const LinearModel model = two_level_model(kOmega);
    RealVector u(1);
    u << 0.0;
    const auto grid = TimeGrid::uniform(1e-8, 4);
    const auto rec = record_diagnostics(model.initial_state(), model.initial_state(),
                                        constant_controls(u, grid), model);
    CHECK(rec.target_reached);
}

TEST_CASE("propagation validates inputs") {
    const LinearModel model = two_level_model(kOmega);
    RealVector bad(1);
    bad << 1.5;  // outside [0, 1]
    const auto grid = TimeGrid::uniform(1e-8, 4);
    CHECK_THROWS_AS(propagate_forward(model.initial_state(), constant_controls(bad, grid), model),
                    ContractViolation);
    const auto wrong_dim = QuantumState::basis_state(3, 0);
    RealVector u(1);
    u << 1.0;
    CHECK_THROWS_AS(propagate_forward(wrong_dim, constant_controls(u, grid), model),
                    ContractViolation);
}
