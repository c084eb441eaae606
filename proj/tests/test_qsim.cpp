#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hqcm/qsim.hpp"
#include "hqcm/rng.hpp"
#include "support/dense_circuit.hpp"
#include "support/finite_diff.hpp"

using namespace hqcm;
using namespace hqcm::qsim;
using testsupport::rel_err;

namespace {

constexpr double kPi = 3.14159265358979323846;

CircuitParams random_ring_circuit(int qubits, int layers, Pcg32& rng) {
    CircuitParams p = CircuitParams::ring(qubits, layers);
    for (auto& a : p.angles) a = rng.uniform(0.0, 2.0 * kPi);
    return p;
}

std::vector<double> random_input(int qubits, Pcg32& rng) {
    std::vector<double> v(std::size_t(1) << qubits);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

double weighted(const std::vector<double>& expectations, const std::vector<double>& upstream) {
    double s = 0;
    for (std::size_t i = 0; i < upstream.size(); ++i) s += upstream[i] * expectations[i];
    return s;
}

}  // namespace

TEST_CASE("amplitude embedding") {
    SUBCASE("basis state") {
        auto r = amplitude_embed({1, 0, 0, 0});
        CHECK(!r.degenerate);
        CHECK(r.state.amps[0] == cdouble(1, 0));
        CHECK(r.state.amps[1] == cdouble(0, 0));
    }
    SUBCASE("normalization q=1") {
        auto r = amplitude_embed({3, 4});
        CHECK(r.state.amps[0].real() == doctest::Approx(0.6).epsilon(1e-12));
        CHECK(r.state.amps[1].real() == doctest::Approx(0.8).epsilon(1e-12));
    }
    SUBCASE("uniform q=2") {
        auto r = amplitude_embed({1, 1, 1, 1});
        for (auto a : r.state.amps) CHECK(a.real() == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("degenerate fallback") {
        auto r = amplitude_embed({0, 0, 0, 0});
        CHECK(r.degenerate);
        CHECK(r.state.amps[0] == cdouble(1, 0));
        CHECK(r.state.norm() == doctest::Approx(1.0));
    }
    SUBCASE("non power of two rejected") {
        CHECK_THROWS_AS(amplitude_embed({1, 2, 3}), std::invalid_argument);
    }
}

TEST_CASE("single-qubit rotations") {
    SUBCASE("zero angles are the identity") {
        Statevector s(2);
        s.amps = {cdouble(0.5, 0), cdouble(0.5, 0), cdouble(0.5, 0), cdouble(0.5, 0)};
        apply_rot(s, 1, 0, 0, 0);
        for (auto a : s.amps) CHECK(std::abs(a - cdouble(0.5, 0)) < 1e-15);
    }
    SUBCASE("Ry(pi) flips |0> to |1> up to global phase") {
        Statevector s(1);
        apply_rot(s, 0, 0, kPi, 0);
        CHECK(std::abs(s.amps[0]) < 1e-15);
        CHECK(std::abs(std::abs(s.amps[1]) - 1.0) < 1e-15);
    }
    SUBCASE("matches a dense 2x2 product") {
        Statevector s(1);
        apply_rot(s, 0, kPi / 2, kPi / 2, kPi / 3);
        // Rz(pi/2) Ry(pi/2) Rz(pi/3) |0>
        auto m = testsupport::dense_mul(
            testsupport::dense_rz(1, 0, kPi / 2),
            testsupport::dense_mul(testsupport::dense_ry(1, 0, kPi / 2),
                                   testsupport::dense_rz(1, 0, kPi / 3)));
        std::vector<testsupport::cd> expect = testsupport::dense_apply(m, {cdouble(1, 0), cdouble(0, 0)});
        CHECK(std::abs(s.amps[0] - expect[0]) < 1e-14);
        CHECK(std::abs(s.amps[1] - expect[1]) < 1e-14);
    }
    SUBCASE("out of range qubit") {
        Statevector s(1);
        CHECK_THROWS_AS(apply_rot(s, 1, 0.1, 0.2, 0.3), std::out_of_range);
    }
}

TEST_CASE("cnot") {
    // |q1 q0>: amps index = q0 + 2*q1 (little-endian)
    Statevector s(2);
    SUBCASE("|10> -> |11> with control=qubit0, target=qubit1") {
        s.amps = {0, cdouble(1, 0), 0, 0};  // q0=1, q1=0
        apply_cnot(s, 0, 1);
        CHECK(std::abs(s.amps[3] - cdouble(1, 0)) < 1e-15);
    }
    SUBCASE("|00> unchanged") {
        apply_cnot(s, 0, 1);
        CHECK(std::abs(s.amps[0] - cdouble(1, 0)) < 1e-15);
    }
    SUBCASE("builds a Bell state") {
        const double r = 1.0 / std::sqrt(2.0);
        s.amps = {cdouble(r, 0), cdouble(r, 0), 0, 0};
        apply_cnot(s, 0, 1);
        CHECK(std::abs(s.amps[0] - cdouble(r, 0)) < 1e-15);
        CHECK(std::abs(s.amps[3] - cdouble(r, 0)) < 1e-15);
        CHECK(std::abs(s.amps[1]) < 1e-15);
    }
    SUBCASE("control == target rejected") { CHECK_THROWS_AS(apply_cnot(s, 1, 1), std::invalid_argument); }
}

TEST_CASE("run_circuit: all-real circuits have zero Pauli-Y expectations") {
    Pcg32 rng(11, 0);
    for (int qubits = 1; qubits <= 4; ++qubits) {
        CircuitParams p = CircuitParams::ring(qubits, 2);  // all angles zero
        auto out = run_circuit(random_input(qubits, rng), p);
        for (double e : out.expectations) CHECK(std::abs(e) < 1e-12);
    }
    // Ry keeps the state real as well
    CircuitParams p = CircuitParams::ring(3, 2);
    for (int l = 0; l < 2; ++l)
        for (int q = 0; q < 3; ++q) p.angle(l, q, 1) = rng.uniform(0, 2 * kPi);
    auto out = run_circuit(random_input(3, rng), p);
    for (double e : out.expectations) CHECK(std::abs(e) < 1e-12);
}

TEST_CASE("run_circuit: q=1 closed form <Y> = sin(t1) sin(t2)") {
    CircuitParams p(1, 1);
    SUBCASE("peak value 1 at (pi/2, pi/2)") {
        p.angle(0, 0, 0) = kPi / 2;
        p.angle(0, 0, 1) = kPi / 2;
        auto out = run_circuit({1, 0}, p);
        CHECK(out.expectations[0] == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("20x20 angle grid") {
        for (int i = 0; i < 20; ++i)
            for (int j = 0; j < 20; ++j) {
                const double t1 = -kPi + i * (2 * kPi / 19);
                const double t2 = -kPi + j * (2 * kPi / 19);
                p.angle(0, 0, 0) = t1;
                p.angle(0, 0, 1) = t2;
                auto out = run_circuit({1, 0}, p);
                CHECK(std::abs(out.expectations[0] - std::sin(t1) * std::sin(t2)) < 1e-12);
            }
    }
}

TEST_CASE("run_circuit matches the dense unitary oracle") {
    Pcg32 rng(23, 0);
    for (int trial = 0; trial < 10; ++trial) {
        const int qubits = 1 + static_cast<int>(rng.next_below(3));  // 1..3
        const int layers = 1 + static_cast<int>(rng.next_below(3));
        CircuitParams p = random_ring_circuit(qubits, layers, rng);
        auto input = random_input(qubits, rng);
        auto got = run_circuit(input, p).expectations;
        auto expect = testsupport::dense_run_circuit(input, p);
        for (int j = 0; j < qubits; ++j) {
            CHECK(std::abs(got[static_cast<std::size_t>(j)] - expect[static_cast<std::size_t>(j)]) < 1e-10);
            CHECK(got[static_cast<std::size_t>(j)] >= -1.0 - 1e-12);
            CHECK(got[static_cast<std::size_t>(j)] <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("norm is conserved across long gate sequences") {
    Pcg32 rng(5, 0);
    Statevector s(4);
    auto embed = amplitude_embed(random_input(4, rng));
    s = embed.state;
    for (int g = 0; g < 1000; ++g) {
        const int q = static_cast<int>(rng.next_below(4));
        if (g % 5 == 4) {
            int t = static_cast<int>(rng.next_below(4));
            if (t == q) t = (t + 1) % 4;
            apply_cnot(s, q, t);
        } else {
            apply_rot(s, q, rng.uniform(0, 2 * kPi), rng.uniform(0, 2 * kPi), rng.uniform(0, 2 * kPi));
        }
    }
    CHECK(std::abs(s.norm() - 1.0) < 1e-10);
}

TEST_CASE("unitarity: inner products of evolved orthonormal inputs are preserved") {
    Pcg32 rng(31, 0);
    for (int qubits = 2; qubits <= 3; ++qubits) {
        CircuitParams p = random_ring_circuit(qubits, 2, rng);
        auto u = testsupport::dense_circuit_unitary(p);
        const std::size_t n = std::size_t(1) << qubits;
        // orthonormal pair |0...0> and |0...1>
        std::vector<testsupport::cd> e0(n, 0), e1(n, 0);
        e0[0] = 1;
        e1[1] = 1;
        auto u0 = testsupport::dense_apply(u, e0);
        auto u1 = testsupport::dense_apply(u, e1);
        testsupport::cd dot(0, 0);
        double n0 = 0, n1 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            dot += std::conj(u0[i]) * u1[i];
            n0 += std::norm(u0[i]);
            n1 += std::norm(u1[i]);
        }
        CHECK(std::abs(dot) < 1e-12);
        CHECK(n0 == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(n1 == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("grad_circuit: trivial cases") {
    Pcg32 rng(7, 0);
    CircuitParams p = random_ring_circuit(3, 2, rng);
    auto input = random_input(3, rng);
    SUBCASE("zero upstream gives zero gradients") {
        auto g = grad_circuit(input, p, {0, 0, 0});
        for (double v : g.grad_angles) CHECK(v == 0.0);
        for (double v : g.grad_input) CHECK(v == 0.0);
    }
    SUBCASE("degenerate embedding gives zero input gradient") {
        auto g = grad_circuit({0, 0, 0, 0, 0, 0, 0, 0}, p, {1, 1, 1});
        CHECK(g.degenerate_embed);
        for (double v : g.grad_input) CHECK(v == 0.0);
    }
}

TEST_CASE("grad_circuit: q=1 closed-form angle gradient") {
    // <Y> = sin(t1) sin(t2) for input (1,0), third angle free
    CircuitParams p(1, 1);
    p.angle(0, 0, 0) = 0.7;
    p.angle(0, 0, 1) = 1.2;
    p.angle(0, 0, 2) = 0.4;
    auto g = grad_circuit({1, 0}, p, {1.0});
    CHECK(g.grad_angles[0] == doctest::Approx(std::cos(0.7) * std::sin(1.2)).epsilon(1e-12));
    CHECK(g.grad_angles[1] == doctest::Approx(std::sin(0.7) * std::cos(1.2)).epsilon(1e-12));
    CHECK(g.grad_angles[2] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("parameter shift: zero upstream gives zero gradients") {
    Pcg32 rng(40, 0);
    CircuitParams p = random_ring_circuit(2, 2, rng);
    auto g = parameter_shift_grad(random_input(2, rng), p, {0, 0});
    for (double v : g) CHECK(v == 0.0);
}

TEST_CASE("gradient consistency: adjoint vs parameter shift vs finite differences") {
    Pcg32 rng(42, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const int qubits = 1 + static_cast<int>(rng.next_below(4));  // 1..4
        const int layers = 1 + static_cast<int>(rng.next_below(3));  // 1..3
        CircuitParams p = random_ring_circuit(qubits, layers, rng);
        auto input = random_input(qubits, rng);
        std::vector<double> upstream(static_cast<std::size_t>(qubits));
        for (auto& u : upstream) u = rng.uniform(-1.0, 1.0);

        auto adjoint = grad_circuit(input, p, upstream);
        auto shift = parameter_shift_grad(input, p, upstream);
        REQUIRE(adjoint.grad_angles.size() == shift.size());
        for (std::size_t k = 0; k < shift.size(); ++k)
            CHECK(std::abs(adjoint.grad_angles[k] - shift[k]) < 1e-8);

        auto loss = [&]() { return weighted(run_circuit(input, p).expectations, upstream); };
        for (std::size_t k = 0; k < p.angles.size(); ++k) {
            const double fd = testsupport::central_diff(loss, &p.angles[k], 1e-5);
            CHECK(std::abs(adjoint.grad_angles[k] - fd) < 1e-6);
        }
        for (std::size_t i = 0; i < input.size(); ++i) {
            const double fd = testsupport::central_diff(loss, &input[i], 1e-5);
            CHECK(std::abs(adjoint.grad_input[i] - fd) < 1e-6);
        }
    }
}

TEST_CASE("determinism: identical inputs give bit-identical outputs") {
    Pcg32 rng(3, 0);
    CircuitParams p = random_ring_circuit(4, 2, rng);
    auto input = random_input(4, rng);
    auto a = run_circuit(input, p);
    auto b = run_circuit(input, p);
    for (std::size_t j = 0; j < a.expectations.size(); ++j)
        CHECK(a.expectations[j] == b.expectations[j]);
}

TEST_CASE("circuit parameter validation") {
    CircuitParams p = CircuitParams::ring(2, 1);
    SUBCASE("self-loop entangler") {
        p.entanglers[0][0] = {1, 1};
        CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    }
    SUBCASE("angle array resized") {
        p.angles.pop_back();
        CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    }
    SUBCASE("wrong input length") {
        CHECK_THROWS_AS(run_circuit({1, 0}, p), std::invalid_argument);
    }
}
