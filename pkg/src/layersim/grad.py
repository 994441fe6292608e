"""Adjoint-mode gradients of the batched observable sum_k <Z_k>.

One forward pass, then a reverse sweep holding two state-sized vectors:
lambda starts as O|psi_final> and both vectors step down one layer at a
time through inverse applications. Couplings 2*Re<lambda|dU|psi> give
the per-parameter gradients. A central finite-difference oracle is
included for verification.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._pyops import _split_1q, _split_2q, apply_1q_batched, apply_2q_batched
from .backend import ops
from .circuits import Circuit, Layer, Role, positions
from .core import apply_circuit, plan_kernels
from .gates import GATE_TRAITS, gate_matrix, gate_matrix_derivative
from .kernels import prepare
from .states import StateBatch, expectation_z_sum, z_weights, zero_state


@dataclass(frozen=True)
class GradResult:
    """Batched expectation values and their parameter gradients.

    value has shape (batch,). grads has shape (batch, trainable_count):
    row b holds d value[b] / d theta for the shared trainable vector.
    encoding_grads has shape (batch, encoding_count): row b holds the
    derivatives with respect to row b's own encoding inputs.
    """

    value: np.ndarray
    grads: np.ndarray
    encoding_grads: np.ndarray


def _derivative_stack(gate, params):
    """Stack of analytic partials dE/dtheta_k, k-axis before (d, d)."""
    count = GATE_TRAITS[gate].param_count
    return np.stack(
        [gate_matrix_derivative(gate, params, k) for k in range(count)],
        axis=-3,
    )


def _coupling_1q(lam, psi, bit):
    lv = _split_1q(lam, bit)
    pv = _split_1q(psi, bit)
    return np.einsum("bxiy,bxjy->bij", lv.conj(), pv)


def _coupling_2q(lam, psi, pa, pb):
    lv, first_is_hi = _split_2q(lam, pa, pb)
    pv, _ = _split_2q(psi, pa, pb)
    m4 = np.einsum("bwiyjz,bwkylz->bijkl", lv.conj(), pv)
    if not first_is_hi:
        m4 = m4.transpose(0, 2, 1, 4, 3)
    return m4.reshape(m4.shape[0], 4, 4)


def _coupling(lam, psi, bits):
    if len(bits) == 1:
        return _coupling_1q(lam, psi, bits[0])
    return _coupling_2q(lam, psi, bits[0], bits[1])


def _contract(block, m):
    """2*Re sum_ij block[..., k, i, j] * m[b, i, j] -> (batch, k)."""
    sub = "kij,bij->bk" if block.ndim == 3 else "bkij,bij->bk"
    return 2.0 * np.real(np.einsum(sub, block, m))


def _disjoint(pos):
    seen = set()
    for p in pos:
        for w in p:
            if w in seen:
                return False
            seen.add(w)
    return True


def _local_inverse(buf, u, bits):
    """Apply the adjoint of one local gate matrix in place."""
    if u.ndim == 2:
        uh = np.ascontiguousarray(u.conj().T)
        if len(bits) == 1:
            ops().apply_1q(buf, uh, bits[0])
        else:
            ops().apply_2q(buf, uh, bits[0], bits[1])
    else:
        uh = np.ascontiguousarray(u.conj().transpose(0, 2, 1))
        if len(bits) == 1:
            apply_1q_batched(buf, uh, bits[0])
        else:
            apply_2q_batched(buf, uh, bits[0], bits[1])


def _commuting_backward(layer, applier, psi, lam, params, bits):
    """Couplings when the layer's gates all commute with each other.

    Both vectors are stepped down first; with commuting factors
    dU/dtheta_p = U E_p^dag dE_p, so each position contributes
    2*Re<lambda_prev| E_p^dag dE_p |psi_prev> through its local block.
    """
    applier.inverse(psi, params)
    applier.inverse(lam, params)
    e = gate_matrix(layer.gate, params)
    de = _derivative_stack(layer.gate, params)
    v = np.einsum("...ji,...kjl->...kil", e.conj(), de)
    batch = psi.shape[0]
    out = np.empty((batch, len(bits), de.shape[-3]))
    for i, b in enumerate(bits):
        vp = v[i] if v.ndim == 4 else v[:, i]
        out[:, i, :] = _contract(vp, _coupling(lam, psi, b))
    return out


def _descending_backward(layer, psi, lam, params, bits):
    """Couplings for overlapping non-commuting positions (MS rings).

    Walk positions from last applied to first, peeling one local gate
    off the psi side, contracting <lambda|dE_p|psi>, then peeling the
    lambda side. After the loop both vectors sit one layer down.
    """
    e = gate_matrix(layer.gate, params)
    de = _derivative_stack(layer.gate, params)
    batch = psi.shape[0]
    out = np.empty((batch, len(bits), de.shape[-3]))
    for i in range(len(bits) - 1, -1, -1):
        b = bits[i]
        ei = e[i] if e.ndim == 3 else e[:, i]
        dei = de[i] if de.ndim == 4 else de[:, i]
        _local_inverse(psi, ei, b)
        out[:, i, :] = _contract(dei, _coupling(lam, psi, b))
        _local_inverse(lam, ei, b)
    return out


def layer_backward(
    layer: Layer,
    n: int,
    applier,
    psi: np.ndarray,
    lam: np.ndarray,
    params: np.ndarray | None,
    need_grads: bool,
) -> np.ndarray | None:
    """Step both sweep vectors down one layer, in place.

    Returns the layer's couplings with shape (batch, positions,
    params_per_gate), or None when need_grads is false or the layer has
    no parameters.
    """
    if not need_grads or GATE_TRAITS[layer.gate].param_count == 0:
        applier.inverse(psi, params)
        applier.inverse(lam, params)
        return None
    pos = positions(layer, n)
    bits = [tuple(n - 1 - w for w in p) for p in pos]
    if GATE_TRAITS[layer.gate].diagonal or _disjoint(pos):
        return _commuting_backward(layer, applier, psi, lam, params, bits)
    return _descending_backward(layer, psi, lam, params, bits)


def backward_sweep(
    circuit: Circuit,
    trainable: np.ndarray | None = None,
    encoding: np.ndarray | None = None,
    final_state: StateBatch | None = None,
    plan=None,
) -> GradResult:
    """Reverse pass from a finished forward state.

    Exposed separately so timing harnesses can measure the backward
    phase alone; gradient() is a forward pass plus this sweep.
    """
    if final_state is None:
        raise ValueError("backward_sweep needs the forward-pass final state")
    n = circuit.n
    batch = final_state.batch
    psi = final_state.amplitudes.copy()
    lam = psi * z_weights(n)[None, :]
    kinds = plan_kernels(circuit, plan)
    grads = np.zeros((batch, circuit.trainable_count))
    egrads = np.zeros((batch, circuit.encoding_count))
    for i in range(len(circuit.layers) - 1, -1, -1):
        layer = circuit.layers[i]
        slot = circuit.layer_slot(i)
        params = circuit.layer_params(i, trainable, encoding)
        need = slot is not None and slot.role in (Role.TRAINABLE, Role.ENCODING)
        applier = prepare(kinds[i], layer, n)
        gl = layer_backward(layer, n, applier, psi, lam, params, need)
        if gl is None:
            continue
        flat = gl.reshape(batch, -1)
        if slot.role is Role.TRAINABLE:
            grads[:, slot.start : slot.start + slot.count] = flat
        else:
            egrads[:, slot.start : slot.start + slot.count] = flat
    return GradResult(expectation_z_sum(final_state), grads, egrads)


def gradient(
    circuit: Circuit,
    trainable: np.ndarray | None = None,
    encoding: np.ndarray | None = None,
    batch: int = 1,
    plan=None,
) -> GradResult:
    """Expectation values and adjoint-mode gradients from the zero state."""
    final = apply_circuit(
        circuit, trainable, encoding, state=zero_state(circuit.n, batch), plan=plan
    )
    return backward_sweep(circuit, trainable, encoding, final, plan=plan)


def fd_gradient(
    circuit: Circuit,
    trainable: np.ndarray | None = None,
    encoding: np.ndarray | None = None,
    batch: int = 1,
    h: float = 1e-6,
    plan=None,
) -> GradResult:
    """Central-difference gradients, (f(t+h) - f(t-h)) / 2h per scalar.

    Encoding inputs only influence their own batch row, so each encoding
    column is perturbed across all rows at once (two evaluations per
    column instead of per element).
    """
    if h <= 0:
        raise ValueError("step size must be positive")

    def value_at(tr, enc):
        st = apply_circuit(
            circuit, tr, enc, state=zero_state(circuit.n, batch), plan=plan
        )
        return expectation_z_sum(st)

    value = value_at(trainable, encoding)
    grads = np.zeros((batch, circuit.trainable_count))
    if circuit.trainable_count:
        tr = np.asarray(trainable, dtype=np.float64)
        for t in range(circuit.trainable_count):
            up = tr.copy()
            up[t] += h
            dn = tr.copy()
            dn[t] -= h
            grads[:, t] = (value_at(up, encoding) - value_at(dn, encoding)) / (2 * h)
    egrads = np.zeros((batch, circuit.encoding_count))
    if circuit.encoding_count:
        enc = np.asarray(encoding, dtype=np.float64)
        for c in range(circuit.encoding_count):
            up = enc.copy()
            up[:, c] += h
            dn = enc.copy()
            dn[:, c] -= h
            egrads[:, c] = (value_at(trainable, up) - value_at(trainable, dn)) / (
                2 * h
            )
    return GradResult(value, grads, egrads)
