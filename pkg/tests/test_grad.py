import numpy as np
import pytest

from layersim.bench import build_circuit
from layersim.circuits import Circuit, Layer, Role, all_qubits, chain_pairs, ring_pairs
from layersim.core import apply_circuit
from layersim.gates import GateKind
from layersim.grad import backward_sweep, fd_gradient, gradient
from layersim.planner import TimingStats, build_plan
from layersim.states import expectation_z_sum, zero_state


def check_against_fd(c, tr, enc, batch=1, tol=1e-6):
    adj = gradient(c, tr, enc, batch=batch)
    fd = fd_gradient(c, tr, enc, batch=batch)
    np.testing.assert_allclose(adj.value, fd.value, atol=1e-12)
    scale = np.maximum(1.0, np.abs(fd.grads)) if fd.grads.size else 1.0
    assert np.abs(adj.grads - fd.grads).max(initial=0.0) <= tol * np.max(scale, initial=1.0)
    if c.encoding_count:
        escale = np.maximum(1.0, np.abs(fd.encoding_grads))
        assert np.abs(adj.encoding_grads - fd.encoding_grads).max() <= tol * escale.max()


def test_single_ry_analytic():
    """<Z> after Ry(theta) on |0> is cos(theta); d/dtheta is -sin(theta)."""
    c = Circuit(1, [Layer(GateKind.RY, all_qubits(), role=Role.TRAINABLE)])
    for theta in (0.3, np.pi / 2, 2.1):
        res = gradient(c, np.array([theta]))
        assert res.value[0] == pytest.approx(np.cos(theta), abs=1e-12)
        assert res.grads[0, 0] == pytest.approx(-np.sin(theta), abs=1e-12)
    at_half_pi = gradient(c, np.array([np.pi / 2]))
    assert at_half_pi.grads[0, 0] == pytest.approx(-1.0, abs=1e-12)


def test_rz_on_basis_state_has_zero_gradient():
    c = Circuit(2, [Layer(GateKind.RZ, all_qubits(), role=Role.TRAINABLE)])
    res = gradient(c, np.array([0.4, -1.1]))
    np.testing.assert_allclose(res.grads, 0.0, atol=1e-14)
    assert res.value[0] == pytest.approx(2.0)


def test_value_matches_forward_expectation():
    rng = np.random.default_rng(5)
    c = build_circuit("qdi", 4, blocks=2)
    tr = rng.uniform(-np.pi, np.pi, c.trainable_count)
    enc = rng.uniform(-np.pi, np.pi, (3, c.encoding_count))
    res = gradient(c, tr, enc, batch=3)
    out = apply_circuit(c, tr, enc, state=zero_state(4, batch=3))
    np.testing.assert_allclose(res.value, expectation_z_sum(out), atol=1e-12)


def test_qdi_circuit_matches_finite_differences():
    rng = np.random.default_rng(11)
    c = build_circuit("qdi", 4, blocks=2)
    tr = rng.uniform(-np.pi, np.pi, c.trainable_count)
    enc = rng.uniform(-np.pi, np.pi, (1, c.encoding_count))
    check_against_fd(c, tr, enc)


@pytest.mark.parametrize("family", ["vq", "qdi", "ibm", "ionq"])
@pytest.mark.parametrize("n,blocks", [(3, 1), (5, 2), (6, 3)])
def test_families_match_finite_differences(family, n, blocks):
    rng = np.random.default_rng(hash((family, n, blocks)) % 2**31)
    c = build_circuit(family, n, blocks=blocks)
    tr = rng.uniform(-np.pi, np.pi, c.trainable_count)
    enc = rng.uniform(-np.pi, np.pi, (1, c.encoding_count))
    check_against_fd(c, tr, enc)


def test_random_mixed_circuits_match_finite_differences():
    rng = np.random.default_rng(77)
    pool = [
        lambda: Layer(GateKind.RY, all_qubits(), role=Role.TRAINABLE),
        lambda: Layer(GateKind.RX, all_qubits(), role=Role.TRAINABLE),
        lambda: Layer(GateKind.RZ, all_qubits(), role=Role.ENCODING),
        lambda: Layer(GateKind.CNOT, ring_pairs()),
        lambda: Layer(GateKind.H, all_qubits()),
        lambda: Layer(GateKind.RZZ, chain_pairs(), role=Role.TRAINABLE),
        lambda: Layer(GateKind.GPI2, all_qubits(), role=Role.TRAINABLE),
        lambda: Layer(GateKind.S, all_qubits()),
    ]
    for trial in range(8):
        n = int(rng.integers(2, 5))
        depth = int(rng.integers(2, 6))
        layers = [pool[i]() for i in rng.integers(0, len(pool), depth)]
        c = Circuit(n, layers)
        tr = rng.uniform(-np.pi, np.pi, c.trainable_count)
        enc = rng.uniform(-np.pi, np.pi, (1, c.encoding_count))
        check_against_fd(c, tr, enc)


def test_ms_ring_matches_finite_differences():
    """Shared-wire two-qubit layer exercises the non-commuting sweep."""
    rng = np.random.default_rng(3)
    c = Circuit(3, [
        Layer(GateKind.RY, all_qubits(), role=Role.TRAINABLE),
        Layer(GateKind.MS, ring_pairs(), role=Role.TRAINABLE),
        Layer(GateKind.RX, all_qubits(), role=Role.TRAINABLE),
    ])
    tr = rng.uniform(-0.4, 0.4, c.trainable_count)
    check_against_fd(c, tr, None)


def test_batched_rows_are_independent():
    rng = np.random.default_rng(8)
    c = build_circuit("vq", 3, blocks=2)
    tr = rng.uniform(-np.pi, np.pi, c.trainable_count)
    enc = rng.uniform(-np.pi, np.pi, (3, c.encoding_count))
    full = gradient(c, tr, enc, batch=3)
    for b in range(3):
        row = gradient(c, tr, enc[b : b + 1], batch=1)
        np.testing.assert_allclose(full.value[b], row.value[0], atol=1e-12)
        np.testing.assert_allclose(full.grads[b], row.grads[0], atol=1e-12)
        np.testing.assert_allclose(
            full.encoding_grads[b], row.encoding_grads[0], atol=1e-12
        )


def test_gradient_is_plan_independent():
    rng = np.random.default_rng(14)
    c = build_circuit("vq", 4, blocks=2)
    tr = rng.uniform(-np.pi, np.pi, c.trainable_count)
    enc = rng.uniform(-np.pi, np.pi, (1, c.encoding_count))

    def slowest(layer, kernel):
        return TimingStats(1e-6 * (1 + kernel.value.count("_")), 0.0, 3, 1)

    plan_a = build_plan(c, batch=1, measure=lambda l, k: TimingStats(1.0, 0.0, 3, 1))
    plan_b = build_plan(c, batch=1, measure=slowest)
    res_a = gradient(c, tr, enc, plan=plan_a)
    res_b = gradient(c, tr, enc, plan=plan_b)
    res_default = gradient(c, tr, enc)
    np.testing.assert_allclose(res_a.grads, res_default.grads, atol=1e-9)
    np.testing.assert_allclose(res_b.grads, res_default.grads, atol=1e-9)


def test_constant_circuit_yields_empty_gradients():
    c = Circuit(2, [
        Layer(GateKind.H, all_qubits()),
        Layer(GateKind.CNOT, ring_pairs()),
    ])
    res = gradient(c)
    assert res.grads.shape == (1, 0)
    assert res.encoding_grads.shape == (1, 0)
    assert np.isfinite(res.value).all()


def test_fixed_layer_consumes_no_slots():
    c = Circuit(2, [
        Layer(GateKind.RY, all_qubits(), role=Role.TRAINABLE),
        Layer(GateKind.GPI, all_qubits(), role=Role.FIXED, values=[[0.2], [0.7]]),
        Layer(GateKind.RX, all_qubits(), role=Role.TRAINABLE),
    ])
    assert c.trainable_count == 4
    rng = np.random.default_rng(2)
    tr = rng.uniform(-np.pi, np.pi, 4)
    check_against_fd(c, tr, None)


def test_gradients_are_finite():
    rng = np.random.default_rng(19)
    c = build_circuit("ionq", 5, blocks=3)
    tr = rng.uniform(-np.pi, np.pi, c.trainable_count)
    enc = rng.uniform(-np.pi, np.pi, (4, c.encoding_count))
    res = gradient(c, tr, enc, batch=4)
    assert np.isfinite(res.value).all()
    assert np.isfinite(res.grads).all()
    assert np.isfinite(res.encoding_grads).all()


def test_fd_gradient_rejects_bad_step():
    c = Circuit(1, [Layer(GateKind.RY, all_qubits(), role=Role.TRAINABLE)])
    with pytest.raises(ValueError):
        fd_gradient(c, np.array([0.1]), h=0.0)
    with pytest.raises(ValueError):
        fd_gradient(c, np.array([0.1]), h=-1e-6)


def test_backward_sweep_requires_final_state():
    c = Circuit(1, [Layer(GateKind.RY, all_qubits(), role=Role.TRAINABLE)])
    with pytest.raises(ValueError):
        backward_sweep(c, np.array([0.1]), final_state=None)
