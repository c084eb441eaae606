#pragma once

#include <complex>
#include <vector>

#include "hqcm/qsim.hpp"

// Dense-matrix reference for the statevector simulator: builds the full
// 2^q x 2^q unitary by explicit matrix products and measures by literal
// psi^dag Y_j psi. Deliberately naive; only the gate contract (little-endian
// qubits, Rz(t1) Ry(t2) Rz(t3) per rotation block, per-layer CNOT list) is
// shared with the implementation.
namespace testsupport {

using cd = std::complex<double>;
using Mat = std::vector<std::vector<cd>>;

inline Mat dense_identity(std::size_t n) {
    Mat m(n, std::vector<cd>(n, cd(0, 0)));
    for (std::size_t i = 0; i < n; ++i) m[i][i] = cd(1, 0);
    return m;
}

inline Mat dense_mul(const Mat& a, const Mat& b) {
    const std::size_t n = a.size();
    Mat out(n, std::vector<cd>(n, cd(0, 0)));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) {
            const cd v = a[i][k];
            if (v == cd(0, 0)) continue;
            for (std::size_t j = 0; j < n; ++j) out[i][j] += v * b[k][j];
        }
    return out;
}

// Single-qubit gate g (2x2, row-major) embedded on `target` of a q-qubit
// register, qubit 0 = least significant bit.
inline Mat dense_single(int qubits, int target, const cd g[2][2]) {
    const std::size_t n = std::size_t(1) << qubits;
    Mat m(n, std::vector<cd>(n, cd(0, 0)));
    const std::size_t mask = std::size_t(1) << target;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if ((i & ~mask) != (j & ~mask)) continue;
            m[i][j] = g[(i & mask) ? 1 : 0][(j & mask) ? 1 : 0];
        }
    return m;
}

inline Mat dense_rz(int qubits, int target, double theta) {
    const cd g[2][2] = {{std::exp(cd(0, -theta / 2)), 0}, {0, std::exp(cd(0, theta / 2))}};
    return dense_single(qubits, target, g);
}

inline Mat dense_ry(int qubits, int target, double theta) {
    const double c = std::cos(theta / 2), s = std::sin(theta / 2);
    const cd g[2][2] = {{c, -s}, {s, c}};
    return dense_single(qubits, target, g);
}

inline Mat dense_cnot(int qubits, int control, int target) {
    const std::size_t n = std::size_t(1) << qubits;
    Mat m(n, std::vector<cd>(n, cd(0, 0)));
    const std::size_t cmask = std::size_t(1) << control;
    const std::size_t tmask = std::size_t(1) << target;
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t i = (j & cmask) ? (j ^ tmask) : j;
        m[i][j] = cd(1, 0);
    }
    return m;
}

inline Mat dense_circuit_unitary(const hqcm::qsim::CircuitParams& p) {
    Mat u = dense_identity(std::size_t(1) << p.qubits);
    for (int l = 0; l < p.layers; ++l) {
        for (int q = 0; q < p.qubits; ++q) {
            // operator product Rz(t1) Ry(t2) Rz(t3), rightmost first
            u = dense_mul(dense_rz(p.qubits, q, p.angle(l, q, 2)), u);
            u = dense_mul(dense_ry(p.qubits, q, p.angle(l, q, 1)), u);
            u = dense_mul(dense_rz(p.qubits, q, p.angle(l, q, 0)), u);
        }
        for (auto [c, t] : p.entanglers[static_cast<std::size_t>(l)])
            u = dense_mul(dense_cnot(p.qubits, c, t), u);
    }
    return u;
}

inline std::vector<cd> dense_apply(const Mat& m, const std::vector<cd>& v) {
    std::vector<cd> out(v.size(), cd(0, 0));
    for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t j = 0; j < v.size(); ++j) out[i] += m[i][j] * v[j];
    return out;
}

inline double dense_pauli_y_expectation(const std::vector<cd>& psi, int qubit) {
    const std::size_t n = psi.size();
    const std::size_t mask = std::size_t(1) << qubit;
    // (Y psi)_i literally, then <psi|Y psi>
    std::vector<cd> ypsi(n, cd(0, 0));
    for (std::size_t i = 0; i < n; ++i) {
        if (i & mask)
            ypsi[i ^ mask] += cd(0, -1) * psi[i];  // Y|1> = -i|0>
        else
            ypsi[i ^ mask] += cd(0, 1) * psi[i];  // Y|0> = i|1>
    }
    cd acc(0, 0);
    for (std::size_t i = 0; i < n; ++i) acc += std::conj(psi[i]) * ypsi[i];
    return acc.real();
}

// run_circuit via the dense route, including the same normalization step
inline std::vector<double> dense_run_circuit(const std::vector<double>& input,
                                             const hqcm::qsim::CircuitParams& p) {
    double nrm = 0;
    for (double v : input) nrm += v * v;
    nrm = std::sqrt(nrm);
    std::vector<cd> psi(input.size(), cd(0, 0));
    if (nrm <= 1e-12) {
        psi[0] = cd(1, 0);
    } else {
        for (std::size_t i = 0; i < input.size(); ++i) psi[i] = cd(input[i] / nrm, 0);
    }
    psi = dense_apply(dense_circuit_unitary(p), psi);
    std::vector<double> out;
    for (int j = 0; j < p.qubits; ++j) out.push_back(dense_pauli_y_expectation(psi, j));
    return out;
}

}  // namespace testsupport
