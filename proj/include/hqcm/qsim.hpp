#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace hqcm::qsim {

using cdouble = std::complex<double>;

/// Exact statevector of a q-qubit register, little-endian (qubit 0 is the
/// least significant bit of the basis index). All arithmetic is complex
/// double regardless of the network dtype.
struct Statevector {
    std::vector<cdouble> amps;

    Statevector() = default;
    explicit Statevector(int qubits) : amps(std::size_t(1) << qubits, cdouble(0, 0)) {
        amps[0] = cdouble(1, 0);
    }

    int qubits() const;
    double norm() const;
};

/// Rotation angles for one circuit: angles[layer][qubit] = (theta1, theta2,
/// theta3) applied as Rz(theta3) first, then Ry(theta2), then Rz(theta1),
/// i.e. the operator product Rz(t1) Ry(t2) Rz(t3). The entangler pattern is
/// a per-layer list of (control, target) CNOT pairs.
struct CircuitParams {
    int qubits = 0;
    int layers = 0;
    std::vector<double> angles;  // layers * qubits * 3, row-major
    std::vector<std::vector<std::pair<int, int>>> entanglers;

    CircuitParams() = default;
    CircuitParams(int qubits, int layers);

    /// Ring pattern: in every layer, CNOT(j -> (j+1) mod q); no entanglers
    /// when q == 1.
    static CircuitParams ring(int qubits, int layers);

    double& angle(int layer, int qubit, int k) {
        return angles[(static_cast<std::size_t>(layer) * qubits + qubit) * 3 + k];
    }
    double angle(int layer, int qubit, int k) const {
        return angles[(static_cast<std::size_t>(layer) * qubits + qubit) * 3 + k];
    }
    std::size_t num_angles() const { return angles.size(); }

    void validate() const;
};

struct EmbedResult {
    Statevector state;
    bool degenerate = false;  // input norm below the floor; |0...0> substituted
    double input_norm = 0.0;
};

/// Norm floor under which amplitude embedding falls back to |0...0>.
inline constexpr double kEmbedNormFloor = 1e-12;

/// v / ||v|| as real amplitudes; length of v must be a power of two.
EmbedResult amplitude_embed(const std::vector<double>& v);

/// Rz(t1) Ry(t2) Rz(t3) on one qubit (rightmost factor applied first).
void apply_rot(Statevector& state, int qubit, double t1, double t2, double t3);
void apply_cnot(Statevector& state, int control, int target);

/// <Y_j> for every qubit j; each value in [-1, 1], exactly 0 for real states.
std::vector<double> pauli_y_expectations(const Statevector& state);

struct CircuitOutput {
    std::vector<double> expectations;  // q values
    bool degenerate_embed = false;
};

/// Embed, run all layers (per layer: rotations on every qubit, then that
/// layer's CNOTs), measure <Y_j>.
CircuitOutput run_circuit(const std::vector<double>& input, const CircuitParams& params);

struct CircuitGradient {
    std::vector<double> grad_angles;  // same layout as CircuitParams::angles
    std::vector<double> grad_input;   // wrt the raw (pre-normalization) input
    bool degenerate_embed = false;
};

/// Exact reverse-mode gradient of sum_j upstream[j] * <Y_j> with respect to
/// every angle and every raw input component. Cost is O(gates * 2^q): one
/// forward sweep storing intermediate states, then one adjoint sweep. The
/// input gradient includes the Jacobian of v -> v/||v|| and is zero for the
/// degenerate-embed fallback.
CircuitGradient grad_circuit(const std::vector<double>& input, const CircuitParams& params,
                             const std::vector<double>& upstream);

/// Parameter-shift gradient for the angles only: (f(t + pi/2) - f(t - pi/2))/2
/// per angle, valid because Ry/Rz generators have eigenvalues +-1/2. Two
/// circuit evaluations per angle; kept as an independent gradient route.
std::vector<double> parameter_shift_grad(const std::vector<double>& input, const CircuitParams& params,
                                         const std::vector<double>& upstream);

}  // namespace hqcm::qsim
