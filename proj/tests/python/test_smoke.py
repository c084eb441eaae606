"""Smoke tests for the python bindings: a few exact values per operation."""

import math

import numpy as np
import pytest

import hqcm


def test_run_circuit_zero_angles_is_real():
    out, degenerate = hqcm.run_circuit(np.array([1.0, 0.0, 0.0, 0.0]), qubits=2, layers=1,
                                       angles=np.zeros(6))
    assert not degenerate
    assert out == [0.0, 0.0]


def test_run_circuit_closed_form():
    t1, t2 = 0.7, 1.2
    angles = np.array([t1, t2, 0.0])
    out, _ = hqcm.run_circuit(np.array([1.0, 0.0]), qubits=1, layers=1, angles=angles)
    assert abs(out[0] - math.sin(t1) * math.sin(t2)) < 1e-12


def test_gradients_agree():
    rng = np.random.default_rng(3)
    angles = rng.uniform(0, 2 * math.pi, size=2 * 2 * 3)  # layers * qubits * 3
    x = rng.uniform(-1, 1, size=4)
    upstream = [0.3, -0.8]
    g_adj, _ = hqcm.grad_circuit(x, qubits=2, layers=2, angles=angles, upstream=upstream)
    g_shift = hqcm.parameter_shift_grad(x, qubits=2, layers=2, angles=angles, upstream=upstream)
    assert np.allclose(g_adj, g_shift, atol=1e-8)


def test_amplitude_embed_normalizes():
    amps, degenerate = hqcm.amplitude_embed(np.array([3.0, 4.0]))
    assert not degenerate
    assert amps[0] == pytest.approx(0.6)
    assert amps[1] == pytest.approx(0.8)


def test_uniform_cross_entropy_is_ln_k():
    logits = np.zeros((2, 4), dtype=np.float32)
    value, grad = hqcm.cross_entropy(logits, [0, 3], [1.0, 1.0, 1.0, 1.0])
    assert value == pytest.approx(math.log(4.0), abs=1e-7)
    assert grad.shape == (2, 4)


def test_dice_perfect_overlap_is_zero():
    t = np.array([[[[1, 0], [1, 0]]]], dtype=np.float32)
    value, _ = hqcm.dice_loss(t, t, 1e-6)
    assert value == 0.0


def test_bce_half_is_ln2():
    a = np.full((1, 1, 2, 2), 0.5, dtype=np.float32)
    t = np.array([[[[1, 0], [0, 1]]]], dtype=np.float32)
    value, _ = hqcm.bce_attention(a, t)
    assert value == pytest.approx(math.log(2.0), abs=1e-7)


def test_wilcoxon_exact_case():
    r = hqcm.wilcoxon_signed_rank([1, 2, 3, 4, 5, 6], [0, 0, 0, 0, 0, 0])
    assert r["exact"]
    assert r["statistic"] == 0.0
    assert r["p_value"] == 0.03125


def test_jaccard_overlap():
    attn = np.zeros((4, 4), dtype=np.float32)
    attn[0:2, 0:2] = 1.0
    mask = np.zeros((4, 4), dtype=np.float32)
    mask[1:3, 1:3] = 1.0
    score, flagged = hqcm.jaccard_at(attn, mask, 0.9)
    assert not flagged
    assert score == pytest.approx(1.0 / 7.0)


def test_generate_synthetic_and_model_forward(tmp_path):
    summary = hqcm.generate_synthetic(40, 16, 5, str(tmp_path / "data"))
    assert summary["class_counts"] == [10, 10, 10, 10]

    model = hqcm.Model(input_size=16, num_classes=4, qubits=2, depth=1, circuits=2,
                       reduction_ratio=2, seed=7)
    images = np.random.default_rng(0).random((2, 1, 16, 16), dtype=np.float32)
    out = model.forward(images)
    assert out["logits"].shape == (2, 4)
    assert out["attention"].shape == (2, 1, 16, 16)
    assert out["quantum_out"].shape == (2, 4)
    assert np.all(out["quantum_out"] >= -1.0) and np.all(out["quantum_out"] <= 1.0)


def test_model_checkpoint_roundtrip(tmp_path):
    model = hqcm.Model(input_size=16, num_classes=2, qubits=2, depth=1, circuits=2,
                       reduction_ratio=2, seed=11)
    images = np.random.default_rng(1).random((1, 1, 16, 16), dtype=np.float32)
    before = model.forward(images)["logits"]
    path = str(tmp_path / "m.ckpt")
    model.save(path)
    loaded = hqcm.Model.load(path)
    after = loaded.forward(images)["logits"]
    assert np.array_equal(before, after)
