#include "hqcm/qsim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hqcm::qsim {

namespace {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

int log2_exact(std::size_t n) {
    int q = 0;
    while ((std::size_t(1) << q) < n) ++q;
    return q;
}

// 2x2 complex matrix, row-major.
struct Mat2 {
    cdouble m00, m01, m10, m11;
};

Mat2 rz_matrix(double theta) {
    cdouble e0 = std::exp(cdouble(0, -theta / 2));
    cdouble e1 = std::exp(cdouble(0, theta / 2));
    return {e0, 0, 0, e1};
}

Mat2 ry_matrix(double theta) {
    double c = std::cos(theta / 2), s = std::sin(theta / 2);
    return {c, -s, s, c};
}

// d/dtheta of the rotation matrices: (-i/2) * Pauli * R(theta).
Mat2 rz_derivative(double theta) {
    cdouble e0 = std::exp(cdouble(0, -theta / 2));
    cdouble e1 = std::exp(cdouble(0, theta / 2));
    return {cdouble(0, -0.5) * e0, 0, 0, cdouble(0, 0.5) * e1};
}

Mat2 ry_derivative(double theta) {
    double c = 0.5 * std::cos(theta / 2), s = 0.5 * std::sin(theta / 2);
    return {-s, -c, c, -s};
}

Mat2 adjoint(const Mat2& m) {
    return {std::conj(m.m00), std::conj(m.m10), std::conj(m.m01), std::conj(m.m11)};
}

void apply_mat2(std::vector<cdouble>& amps, int qubit, const Mat2& m) {
    const std::size_t n = amps.size();
    const std::size_t mask = std::size_t(1) << qubit;
    for (std::size_t i = 0; i < n; ++i) {
        if (i & mask) continue;
        const std::size_t j = i | mask;
        const cdouble a = amps[i], b = amps[j];
        amps[i] = m.m00 * a + m.m01 * b;
        amps[j] = m.m10 * a + m.m11 * b;
    }
}

// Result of apply_mat2 into a fresh vector (used for derivative insertions).
std::vector<cdouble> apply_mat2_copy(const std::vector<cdouble>& amps, int qubit, const Mat2& m) {
    std::vector<cdouble> out(amps);
    apply_mat2(out, qubit, m);
    return out;
}

void check_qubit(const Statevector& state, int qubit, const char* what) {
    if (qubit < 0 || qubit >= state.qubits())
        throw std::out_of_range(std::string(what) + ": qubit " + std::to_string(qubit) +
                                " out of range for " + std::to_string(state.qubits()) + " qubits");
}

// Flattened gate tape for one circuit. Rotations are recorded per angle so
// the adjoint sweep can address each parameter individually.
enum class GateKind { Rz, Ry, Cnot };

struct Gate {
    GateKind kind;
    int qubit = 0;   // target
    int control = 0; // CNOT only
    int angle_index = -1;
};

std::vector<Gate> build_tape(const CircuitParams& p) {
    std::vector<Gate> tape;
    tape.reserve(static_cast<std::size_t>(p.layers) * p.qubits * 3 + p.layers * p.qubits);
    for (int l = 0; l < p.layers; ++l) {
        for (int q = 0; q < p.qubits; ++q) {
            const int base = (l * p.qubits + q) * 3;
            // operator product Rz(t1) Ry(t2) Rz(t3): t3 acts first
            tape.push_back({GateKind::Rz, q, 0, base + 2});
            tape.push_back({GateKind::Ry, q, 0, base + 1});
            tape.push_back({GateKind::Rz, q, 0, base + 0});
        }
        for (auto [ctrl, tgt] : p.entanglers[static_cast<std::size_t>(l)])
            tape.push_back({GateKind::Cnot, tgt, ctrl, -1});
    }
    return tape;
}

void apply_gate(std::vector<cdouble>& amps, const Gate& g, const CircuitParams& p) {
    switch (g.kind) {
        case GateKind::Rz:
            apply_mat2(amps, g.qubit, rz_matrix(p.angles[static_cast<std::size_t>(g.angle_index)]));
            break;
        case GateKind::Ry:
            apply_mat2(amps, g.qubit, ry_matrix(p.angles[static_cast<std::size_t>(g.angle_index)]));
            break;
        case GateKind::Cnot: {
            const std::size_t cmask = std::size_t(1) << g.control;
            const std::size_t tmask = std::size_t(1) << g.qubit;
            for (std::size_t i = 0; i < amps.size(); ++i)
                if ((i & cmask) && !(i & tmask)) std::swap(amps[i], amps[i | tmask]);
            break;
        }
    }
}

void apply_gate_adjoint(std::vector<cdouble>& amps, const Gate& g, const CircuitParams& p) {
    switch (g.kind) {
        case GateKind::Rz:
            apply_mat2(amps, g.qubit,
                       adjoint(rz_matrix(p.angles[static_cast<std::size_t>(g.angle_index)])));
            break;
        case GateKind::Ry:
            apply_mat2(amps, g.qubit,
                       adjoint(ry_matrix(p.angles[static_cast<std::size_t>(g.angle_index)])));
            break;
        case GateKind::Cnot:
            apply_gate(amps, g, p);  // CNOT is self-inverse
            break;
    }
}

// O|psi| for O = sum_j upstream[j] * Y_j.
std::vector<cdouble> apply_observable(const std::vector<cdouble>& amps, const std::vector<double>& upstream) {
    std::vector<cdouble> out(amps.size(), cdouble(0, 0));
    const int q = log2_exact(amps.size());
    for (int j = 0; j < q; ++j) {
        const double u = upstream[static_cast<std::size_t>(j)];
        if (u == 0.0) continue;
        const std::size_t mask = std::size_t(1) << j;
        for (std::size_t i = 0; i < amps.size(); ++i) {
            if (i & mask) continue;
            const std::size_t k = i | mask;
            // Y|0> = i|1>, Y|1> = -i|0>
            out[i] += u * cdouble(0, -1) * amps[k];
            out[k] += u * cdouble(0, 1) * amps[i];
        }
    }
    return out;
}

}  // namespace

int Statevector::qubits() const {
    if (!is_power_of_two(amps.size()))
        throw std::logic_error("statevector: amplitude count is not a power of two");
    return log2_exact(amps.size());
}

double Statevector::norm() const {
    double s = 0;
    for (const auto& a : amps) s += std::norm(a);
    return std::sqrt(s);
}

CircuitParams::CircuitParams(int qubits_, int layers_) : qubits(qubits_), layers(layers_) {
    if (qubits < 1 || layers < 1) throw std::invalid_argument("circuit: qubits and layers must be >= 1");
    angles.assign(static_cast<std::size_t>(layers) * qubits * 3, 0.0);
    entanglers.assign(static_cast<std::size_t>(layers), {});
}

CircuitParams CircuitParams::ring(int qubits, int layers) {
    CircuitParams p(qubits, layers);
    if (qubits >= 2)
        for (int l = 0; l < layers; ++l)
            for (int j = 0; j < qubits; ++j)
                p.entanglers[static_cast<std::size_t>(l)].push_back({j, (j + 1) % qubits});
    return p;
}

void CircuitParams::validate() const {
    if (angles.size() != static_cast<std::size_t>(layers) * qubits * 3)
        throw std::invalid_argument("circuit: angle array does not match (layers, qubits, 3)");
    for (double a : angles)
        if (!std::isfinite(a)) throw std::invalid_argument("circuit: non-finite angle");
    if (entanglers.size() != static_cast<std::size_t>(layers))
        throw std::invalid_argument("circuit: entangler pattern must list every layer");
    for (const auto& layer : entanglers)
        for (auto [c, t] : layer) {
            if (c == t) throw std::invalid_argument("circuit: CNOT control equals target");
            if (c < 0 || c >= qubits || t < 0 || t >= qubits)
                throw std::invalid_argument("circuit: CNOT qubit out of range");
        }
}

EmbedResult amplitude_embed(const std::vector<double>& v) {
    if (!is_power_of_two(v.size()))
        throw std::invalid_argument("amplitude_embed: input length " + std::to_string(v.size()) +
                                    " is not a power of two");
    EmbedResult r;
    double sq = 0;
    for (double x : v) sq += x * x;
    r.input_norm = std::sqrt(sq);
    r.state.amps.assign(v.size(), cdouble(0, 0));
    if (r.input_norm <= kEmbedNormFloor) {
        r.state.amps[0] = cdouble(1, 0);
        r.degenerate = true;
        return r;
    }
    for (std::size_t i = 0; i < v.size(); ++i) r.state.amps[i] = cdouble(v[i] / r.input_norm, 0);
    return r;
}

void apply_rot(Statevector& state, int qubit, double t1, double t2, double t3) {
    check_qubit(state, qubit, "apply_rot");
    apply_mat2(state.amps, qubit, rz_matrix(t3));
    apply_mat2(state.amps, qubit, ry_matrix(t2));
    apply_mat2(state.amps, qubit, rz_matrix(t1));
}

void apply_cnot(Statevector& state, int control, int target) {
    check_qubit(state, control, "apply_cnot");
    check_qubit(state, target, "apply_cnot");
    if (control == target) throw std::invalid_argument("apply_cnot: control equals target");
    const std::size_t cmask = std::size_t(1) << control;
    const std::size_t tmask = std::size_t(1) << target;
    for (std::size_t i = 0; i < state.amps.size(); ++i)
        if ((i & cmask) && !(i & tmask)) std::swap(state.amps[i], state.amps[i | tmask]);
}

std::vector<double> pauli_y_expectations(const Statevector& state) {
    const int q = state.qubits();
    std::vector<double> out(static_cast<std::size_t>(q), 0.0);
    for (int j = 0; j < q; ++j) {
        const std::size_t mask = std::size_t(1) << j;
        double acc = 0;
        for (std::size_t i = 0; i < state.amps.size(); ++i) {
            if (i & mask) continue;
            // <psi|Y_j|psi> pairwise: 2 Im(conj(a_0) a_1)
            acc += 2.0 * std::imag(std::conj(state.amps[i]) * state.amps[i | mask]);
        }
        out[static_cast<std::size_t>(j)] = acc;
    }
    return out;
}

CircuitOutput run_circuit(const std::vector<double>& input, const CircuitParams& params) {
    params.validate();
    if (input.size() != std::size_t(1) << params.qubits)
        throw std::invalid_argument("run_circuit: input length must be 2^qubits");

    EmbedResult embed = amplitude_embed(input);
    Statevector state = std::move(embed.state);
    for (const Gate& g : build_tape(params)) apply_gate(state.amps, g, params);

    CircuitOutput out;
    out.expectations = pauli_y_expectations(state);
    out.degenerate_embed = embed.degenerate;
    return out;
}

CircuitGradient grad_circuit(const std::vector<double>& input, const CircuitParams& params,
                             const std::vector<double>& upstream) {
    params.validate();
    if (input.size() != std::size_t(1) << params.qubits)
        throw std::invalid_argument("grad_circuit: input length must be 2^qubits");
    if (upstream.size() != static_cast<std::size_t>(params.qubits))
        throw std::invalid_argument("grad_circuit: upstream length must equal qubit count");

    CircuitGradient grad;
    grad.grad_angles.assign(params.num_angles(), 0.0);
    grad.grad_input.assign(input.size(), 0.0);

    EmbedResult embed = amplitude_embed(input);
    grad.degenerate_embed = embed.degenerate;

    const std::vector<Gate> tape = build_tape(params);

    // Forward sweep, keeping the state before every gate. States are tiny
    // (2^q complex values), so storing all of them is the simplest exact
    // scheme.
    std::vector<std::vector<cdouble>> pre(tape.size() + 1);
    pre[0] = embed.state.amps;
    for (std::size_t k = 0; k < tape.size(); ++k) {
        pre[k + 1] = pre[k];
        apply_gate(pre[k + 1], tape[k], params);
    }

    // Adjoint sweep. Invariant: before processing gate k (from the back),
    // b = U_{k+1}^dag ... U_G^dag O psi_final, so
    // dL/dtheta_k = 2 Re <b | dU_k/dtheta | psi_before_k>.
    std::vector<cdouble> b = apply_observable(pre.back(), upstream);
    for (std::size_t k = tape.size(); k-- > 0;) {
        const Gate& g = tape[k];
        if (g.kind != GateKind::Cnot) {
            const double theta = params.angles[static_cast<std::size_t>(g.angle_index)];
            const Mat2 d = g.kind == GateKind::Rz ? rz_derivative(theta) : ry_derivative(theta);
            const std::vector<cdouble> dpsi = apply_mat2_copy(pre[k], g.qubit, d);
            double acc = 0;
            for (std::size_t i = 0; i < b.size(); ++i)
                acc += std::real(std::conj(b[i]) * dpsi[i]);
            grad.grad_angles[static_cast<std::size_t>(g.angle_index)] = 2.0 * acc;
        }
        apply_gate_adjoint(b, g, params);
    }

    // Fallback embedding is constant in the input.
    if (embed.degenerate) return grad;

    // b now equals M psi_0 with M = U^dag O U; for real psi_0 the gradient
    // wrt the normalized amplitudes is 2 Re(b), then the normalization
    // Jacobian (I - vhat vhat^T) / ||v|| maps it back to the raw input.
    const double nrm = embed.input_norm;
    std::vector<double> g_hat(input.size());
    for (std::size_t i = 0; i < input.size(); ++i) g_hat[i] = 2.0 * std::real(b[i]);
    double dot = 0;
    for (std::size_t i = 0; i < input.size(); ++i)
        dot += (input[i] / nrm) * g_hat[i];
    for (std::size_t i = 0; i < input.size(); ++i)
        grad.grad_input[i] = (g_hat[i] - (input[i] / nrm) * dot) / nrm;
    return grad;
}

std::vector<double> parameter_shift_grad(const std::vector<double>& input, const CircuitParams& params,
                                         const std::vector<double>& upstream) {
    params.validate();
    if (upstream.size() != static_cast<std::size_t>(params.qubits))
        throw std::invalid_argument("parameter_shift_grad: upstream length must equal qubit count");

    auto weighted = [&upstream](const CircuitOutput& out) {
        double s = 0;
        for (std::size_t j = 0; j < upstream.size(); ++j) s += upstream[j] * out.expectations[j];
        return s;
    };

    const double half_pi = 3.14159265358979323846 / 2.0;
    std::vector<double> grad(params.num_angles(), 0.0);
    CircuitParams shifted = params;
    for (std::size_t k = 0; k < params.num_angles(); ++k) {
        shifted.angles[k] = params.angles[k] + half_pi;
        const double plus = weighted(run_circuit(input, shifted));
        shifted.angles[k] = params.angles[k] - half_pi;
        const double minus = weighted(run_circuit(input, shifted));
        shifted.angles[k] = params.angles[k];
        grad[k] = 0.5 * (plus - minus);
    }
    return grad;
}

}  // namespace hqcm::qsim
