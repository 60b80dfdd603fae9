#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "qoc/geometry.hpp"
#include "qoc/models.hpp"

using namespace qoc;

namespace {

const double kPi = std::acos(-1.0);
const double kOmega = 2.0 * kPi * 1e7;

// Spin-j J_x in the |m = -j .. j> basis: the independent closed form for the
// two-mode exchange block.
Matrix spin_jx(int twoj) {
    const double j = 0.5 * twoj;
    const Eigen::Index d = twoj + 1;
    Matrix m = Matrix::Zero(d, d);
    for (Eigen::Index i = 0; i + 1 < d; ++i) {
        const double mm = -j + static_cast<double>(i);
        const double elem = 0.5 * std::sqrt(j * (j + 1.0) - mm * (mm + 1.0));
        m(i + 1, i) += elem;
        m(i, i + 1) += elem;
    }
    return m;
}

Eigen::Index index_of(const std::vector<SymmetricBasisState>& basis, int n1, int n2, int nr) {
    for (std::size_t i = 0; i < basis.size(); ++i)
        if (basis[i].n1 == n1 && basis[i].n2 == n2 && basis[i].nr == nr)
            return static_cast<Eigen::Index>(i);
    FAIL("basis state not found");
    return -1;
}

}  // namespace

TEST_CASE("two-level model pieces") {
    const LinearModel m = two_level_model(kOmega);
    CHECK(m.dim() == 2);
    CHECK(m.control_count() == 1);
    CHECK(m.bounds(0).lo == 0.0);
    CHECK(m.bounds(0).hi == 1.0);
    RealVector u(1);
    u << 0.6;
    const Matrix h = m.build(u);
    CHECK(std::abs(h(0, 1) - Complex(0.3 * kOmega, 0.0)) < 1e-6);
    CHECK(std::abs(h(0, 0)) == 0.0);
    CHECK((m.gradient(u, 0) - m.build([] {
              RealVector one(1);
              one << 1.0;
              return one;
          }())).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(fidelity(m.initial_state(), m.target_state()) == 0.0);
    CHECK_THROWS_AS(two_level_model(-1.0), ContractViolation);
}

TEST_CASE("symmetric basis enumerates blockaded states in order") {
    const auto b1 = build_symmetric_basis(1);
    REQUIRE(b1.size() == 3);
    const auto b3 = build_symmetric_basis(3);
    REQUIRE(b3.size() == 7);
    const int expect[7][3] = {{3, 0, 0}, {2, 1, 0}, {1, 2, 0}, {0, 3, 0},
                              {2, 0, 1}, {1, 1, 1}, {0, 2, 1}};
    for (int i = 0; i < 7; ++i) {
        CHECK(b3[static_cast<std::size_t>(i)].n1 == expect[i][0]);
        CHECK(b3[static_cast<std::size_t>(i)].n2 == expect[i][1]);
        CHECK(b3[static_cast<std::size_t>(i)].nr == expect[i][2]);
    }
    for (const auto& s : b3) {
        CHECK(s.n1 + s.n2 + s.nr == 3);
        CHECK(s.nr <= 1);
    }
}

TEST_CASE("exchange coupling reproduces the spin block structure") {
    for (int n : {2, 3, 5}) {
        const RydbergModel model(n, 1.0);  // unit Omega_max isolates the couplings
        RealVector u(2);
        u << 1.0, 0.0;
        const Matrix h = model.build(u);
        const auto& basis = model.basis();

        // nr = 0 block is spin N/2, nr = 1 block is spin (N-1)/2
        for (int nr = 0; nr <= 1; ++nr) {
            const int twoj = n - nr;
            const Matrix oracle = spin_jx(twoj);
            for (int a = 0; a <= twoj; ++a)
                for (int b = 0; b <= twoj; ++b) {
                    // m ascending corresponds to n2 ascending
                    const Eigen::Index r = index_of(basis, n - a - nr, a, nr);
                    const Eigen::Index c = index_of(basis, n - b - nr, b, nr);
                    REQUIRE(std::abs(h(r, c) - oracle(a, b)) < 1e-12);
                }
        }
        // no exchange between the blocks
        for (std::size_t i = 0; i < basis.size(); ++i)
            for (std::size_t j = 0; j < basis.size(); ++j)
                if (basis[i].nr != basis[j].nr)
                    REQUIRE(std::abs(h(static_cast<Eigen::Index>(i),
                                       static_cast<Eigen::Index>(j))) == 0.0);
    }
}

TEST_CASE("first exchange element matches the closed form") {
    const RydbergModel model(3, kOmega);
    RealVector u(2);
    u << 1.0, 0.0;
    const Matrix h = model.build(u);
    const auto& basis = model.basis();
    const auto from = index_of(basis, 3, 0, 0);
    const auto to = index_of(basis, 2, 1, 0);
    CHECK(std::abs(h(to, from)) == Catch::Approx(0.5 * kOmega * std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("Rydberg coupling links the blocks with sqrt(n2)/2") {
    const RydbergModel model(3, kOmega);
    RealVector u(2);
    u << 0.0, 1.0;
    const Matrix h = model.build(u);
    const auto& basis = model.basis();
    struct Link {
        int n1, n2;
        double amp;  // in units of Omega/2
    };
    // hand-worked N = 3 elements
    const Link links[] = {{2, 1, 1.0}, {1, 2, std::sqrt(2.0)}, {0, 3, std::sqrt(3.0)}};
    double off_block = 0.0;
    for (const auto& l : links) {
        const auto from = index_of(basis, l.n1, l.n2, 0);
        const auto to = index_of(basis, l.n1, l.n2 - 1, 1);
        CHECK(std::abs(h(to, from)) ==
              Catch::Approx(0.5 * kOmega * l.amp).epsilon(1e-12));
        CHECK(std::abs(h(from, to) - std::conj(h(to, from))) < 1e-9);
        off_block += std::abs(h(to, from));
    }
    CHECK(off_block > 0.0);
    // the coupling moves exactly one atom from |2> to |r>
    const auto i300 = index_of(basis, 3, 0, 0);
    for (std::size_t j = 0; j < basis.size(); ++j)
        REQUIRE(std::abs(h(i300, static_cast<Eigen::Index>(j))) == 0.0);
}

TEST_CASE("model build is linear in the controls") {
    const RydbergModel model(3, kOmega);
    RealVector u(2), e1(2), e2(2);
    u << 0.3, 0.7;
    e1 << 1.0, 0.0;
    e2 << 0.0, 1.0;
    const Matrix combo = model.build(u);
    const Matrix rebuilt = 0.3 * model.build(e1) + 0.7 * model.build(e2);
    CHECK((combo - rebuilt).cwiseAbs().maxCoeff() < 1e-9);
    // gradients are the unit-control terms, independent of u
    CHECK((model.gradient(u, 0) - model.build(e1)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((model.gradient(u, 1) - model.build(e2)).cwiseAbs().maxCoeff() < 1e-12);
    RealVector zero(2);
    zero << 0.0, 0.0;
    CHECK(model.build(zero).cwiseAbs().maxCoeff() == 0.0);
    RealVector bad(2);
    bad << 1.2, 0.0;
    CHECK_THROWS_AS(model.build(bad), ContractViolation);
}

TEST_CASE("initial and target states of the entanglement problem") {
    const RydbergModel m3(3, kOmega);
    const auto& basis = m3.basis();
    // |3,0,0>
    CHECK(std::abs(m3.initial_state()[index_of(basis, 3, 0, 0)] - Complex(1.0, 0.0)) < 1e-12);
    // (|2,0,1> - |0,2,1>)/sqrt(2) with the leading amplitude real positive
    const auto target = m3.target_state();
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(target[index_of(basis, 2, 0, 1)] - Complex(r, 0.0)) < 1e-9);
    CHECK(std::abs(target[index_of(basis, 0, 2, 1)] - Complex(-r, 0.0)) < 1e-9);
    CHECK(std::abs(target[index_of(basis, 1, 1, 1)]) < 1e-9);
    for (int i = 0; i < 4; ++i)
        CHECK(std::abs(target[i]) < 1e-12);  // no nr = 0 support
    CHECK(std::abs(inner(m3.initial_state(), target)) < 1e-12);
    // the target is annihilated by the exchange coupling
    RealVector e1(2);
    e1 << 1.0, 0.0;
    CHECK((m3.build(e1) * target.amplitudes()).norm() < 1e-9 * kOmega);

    // even atom number targets the nr = 0 block
    const RydbergModel m2(2, kOmega);
    const auto& b2 = m2.basis();
    const auto t2 = m2.target_state();
    CHECK(std::abs(t2[index_of(b2, 2, 0, 0)] - Complex(r, 0.0)) < 1e-9);
    CHECK(std::abs(t2[index_of(b2, 0, 2, 0)] - Complex(-r, 0.0)) < 1e-9);
    CHECK((m2.build(e1) * t2.amplitudes()).norm() < 1e-9 * kOmega);
}

TEST_CASE("bound projection clamps componentwise") {
    const RydbergModel model(3, kOmega);
    RealVector u(2);
    u << -0.3, 1.8;
    const RealVector p = project_bounds(u, model);
    CHECK(p[0] == 0.0);
    CHECK(p[1] == 1.0);
    RealVector ok(2);
    ok << 0.2, 0.9;
    CHECK((project_bounds(ok, model) - ok).cwiseAbs().maxCoeff() == 0.0);
}
