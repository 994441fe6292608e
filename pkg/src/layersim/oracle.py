"""Dense layer unitaries, used as the correctness reference for kernels.

Built from Kronecker products and explicit pair embeddings only, so it
stays independent of the state-update paths it is used to check.
"""

from __future__ import annotations

import numpy as np

from .circuits import Layer, positions
from .errors import CapacityError
from .gates import gate_matrix, gate_traits

ORACLE_MAX_QUBITS = 12


def _identity(n_qubits: int) -> np.ndarray:
    return np.eye(2**n_qubits, dtype=np.complex128)


def embed_pair(u4: np.ndarray, a: int, b: int, n: int) -> np.ndarray:
    """Embed a two-qubit unitary acting on wires (a, b) into n qubits.

    The 4x4 matrix is indexed with wire a's bit more significant.
    """
    if u4.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got {u4.shape}")
    if a == b:
        raise ValueError("pair wires must be distinct")
    rest = [q for q in range(n) if q not in (a, b)]
    full = np.kron(u4, _identity(n - 2))
    # Row/column axes of `full` are ordered (a, b, rest...); permute each
    # side back to natural qubit order.
    order = [a, b] + rest
    perm = [order.index(q) for q in range(n)]
    tensor = full.reshape([2] * (2 * n))
    tensor = np.transpose(tensor, perm + [n + p for p in perm])
    return np.ascontiguousarray(tensor.reshape(2**n, 2**n))


def layer_unitary(
    layer: Layer,
    n: int,
    params: np.ndarray | None = None,
    max_qubits: int = ORACLE_MAX_QUBITS,
) -> np.ndarray:
    """Full 2^n x 2^n unitary of one layer.

    ``params`` has shape (positions, param_count) and must be None for
    unparametrized gates. Gates at later positions multiply from the
    left, i.e. the first listed position is applied to the state first.
    """
    if n > max_qubits:
        raise CapacityError(
            f"layer_unitary limited to {max_qubits} qubits, got n={n}"
        )
    traits = gate_traits(layer.gate)
    pos = positions(layer, n)
    if traits.param_count:
        params = np.asarray(params, dtype=np.float64)
        if params.shape != (len(pos), traits.param_count):
            raise ValueError(
                f"params shape {params.shape} != ({len(pos)}, {traits.param_count})"
            )
        mats = [gate_matrix(layer.gate, params[i]) for i in range(len(pos))]
    else:
        if params is not None:
            raise ValueError(f"gate {layer.gate.value} takes no parameters")
        mats = [gate_matrix(layer.gate)] * len(pos)

    if traits.arity == 1:
        per_qubit = [np.eye(2, dtype=np.complex128)] * n
        seen: set[int] = set()
        for (wire,), mat in zip(pos, mats):
            if wire in seen:
                raise ValueError(f"wire {wire} used twice in one layer")
            seen.add(wire)
            per_qubit[wire] = mat
        full = per_qubit[0]
        for mat in per_qubit[1:]:
            full = np.kron(full, mat)
        return full

    full = _identity(n)
    for (a, b), mat in zip(pos, mats):
        full = embed_pair(mat, a, b, n) @ full
    return full
