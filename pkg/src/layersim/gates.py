"""Gate matrices, trait flags, and analytic parameter derivatives.

Conventions used throughout the package:

* qubit 0 is the most significant bit of a basis-state index;
* two-qubit matrices are indexed with the first wire's bit more
  significant, i.e. local basis order |00>, |01>, |10>, |11>;
* R-family angles (rz, rzz, rx, ry, rot) are radians; gpi, gpi2 and ms
  take turns (one turn = 2*pi radians).

``gate_matrix`` accepts parameter arrays of shape (..., param_count) and
returns matrices of shape (..., d, d), so per-position and per-batch-row
matrices can be built in one call.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class GateKind(Enum):
    Z = "z"
    CZ = "cz"
    RZ = "rz"
    RZZ = "rzz"
    GPI = "gpi"
    S = "s"
    CNOT = "cnot"
    X = "x"
    H = "h"
    RY = "ry"
    RX = "rx"
    ROT = "rot"
    GPI2 = "gpi2"
    MS = "ms"
    SX = "sx"
    ECR = "ecr"
    SWAP = "swap"


@dataclass(frozen=True)
class TraitFlags:
    """Structural properties of a gate, used for kernel applicability."""

    diagonal: bool
    antidiagonal: bool
    permutation: bool
    real: bool
    parametrized: bool
    arity: int
    param_count: int


# One row per supported gate. The ``parametrized`` flag mirrors the
# published trait table (gpi is listed unparametrized there even though
# it takes a phase argument; param_count carries the real arity).
GATE_TRAITS: dict[GateKind, TraitFlags] = {
    GateKind.Z: TraitFlags(True, False, False, True, False, 1, 0),
    GateKind.CZ: TraitFlags(True, False, False, True, False, 2, 0),
    GateKind.RZ: TraitFlags(True, False, False, False, True, 1, 1),
    GateKind.RZZ: TraitFlags(True, False, False, False, True, 2, 1),
    GateKind.GPI: TraitFlags(False, True, False, False, False, 1, 1),
    GateKind.S: TraitFlags(True, False, False, False, False, 1, 0),
    GateKind.CNOT: TraitFlags(False, False, True, True, False, 2, 0),
    GateKind.X: TraitFlags(False, False, True, True, False, 1, 0),
    GateKind.H: TraitFlags(False, False, False, True, False, 1, 0),
    GateKind.RY: TraitFlags(False, False, False, True, True, 1, 1),
    GateKind.RX: TraitFlags(False, False, False, False, True, 1, 1),
    GateKind.ROT: TraitFlags(False, False, False, False, True, 1, 3),
    GateKind.GPI2: TraitFlags(False, False, False, False, True, 1, 1),
    GateKind.MS: TraitFlags(False, False, False, False, True, 2, 3),
    GateKind.SX: TraitFlags(False, False, False, False, False, 1, 0),
    GateKind.ECR: TraitFlags(False, False, False, False, False, 2, 0),
    GateKind.SWAP: TraitFlags(False, False, True, True, False, 2, 0),
}

TWO_PI = 2.0 * np.pi
_INV_SQRT2 = 1.0 / np.sqrt(2.0)

_CONST_MATRICES: dict[GateKind, np.ndarray] = {
    GateKind.Z: np.array([[1, 0], [0, -1]], dtype=np.complex128),
    GateKind.CZ: np.diag([1, 1, 1, -1]).astype(np.complex128),
    GateKind.S: np.array([[1, 0], [0, 1j]], dtype=np.complex128),
    GateKind.CNOT: np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
        dtype=np.complex128,
    ),
    GateKind.X: np.array([[0, 1], [1, 0]], dtype=np.complex128),
    GateKind.H: _INV_SQRT2 * np.array([[1, 1], [1, -1]], dtype=np.complex128),
    GateKind.SX: 0.5
    * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]], dtype=np.complex128),
    # Standard echoed cross-resonance unitary, (IX - XY)/sqrt(2). Printed
    # variants of this matrix with rows (0,0,i,0)/(-i,0,0,1) are not
    # unitary; this is the unitary form.
    GateKind.ECR: _INV_SQRT2
    * np.array(
        [[0, 1, 0, 1j], [1, 0, -1j, 0], [0, 1j, 0, 1], [-1j, 0, 1, 0]],
        dtype=np.complex128,
    ),
    GateKind.SWAP: np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]],
        dtype=np.complex128,
    ),
}

_PAULI_X = _CONST_MATRICES[GateKind.X]
_PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
_PAULI_Z = _CONST_MATRICES[GateKind.Z]
_ZZ = np.diag([1, -1, -1, 1]).astype(np.complex128)


def gate_traits(kind: GateKind) -> TraitFlags:
    return GATE_TRAITS[kind]


def _check_params(kind: GateKind, params) -> np.ndarray | None:
    count = GATE_TRAITS[kind].param_count
    if count == 0:
        if params is not None and np.size(params) != 0:
            raise ValueError(f"gate {kind.value} takes no parameters")
        return None
    if params is None:
        raise ValueError(f"gate {kind.value} needs {count} parameter(s)")
    arr = np.asarray(params, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.shape[-1] != count:
        raise ValueError(
            f"gate {kind.value} needs {count} parameter(s), got shape {arr.shape}"
        )
    return arr


def _stack(shape: tuple[int, ...], dim: int, entries: dict) -> np.ndarray:
    out = np.zeros(shape + (dim, dim), dtype=np.complex128)
    for (i, j), val in entries.items():
        out[..., i, j] = val
    return out


def _rz(theta: np.ndarray) -> np.ndarray:
    e = np.exp(-0.5j * theta)
    return _stack(theta.shape, 2, {(0, 0): e, (1, 1): np.conj(e)})


def _ry(theta: np.ndarray) -> np.ndarray:
    c = np.cos(theta / 2)
    s = np.sin(theta / 2)
    return _stack(theta.shape, 2, {(0, 0): c, (0, 1): -s, (1, 0): s, (1, 1): c})


def _rx(theta: np.ndarray) -> np.ndarray:
    c = np.cos(theta / 2)
    s = -1j * np.sin(theta / 2)
    return _stack(theta.shape, 2, {(0, 0): c, (0, 1): s, (1, 0): s, (1, 1): c})


def _rzz(theta: np.ndarray) -> np.ndarray:
    e = np.exp(-0.5j * theta)
    return _stack(
        theta.shape,
        4,
        {(0, 0): e, (1, 1): np.conj(e), (2, 2): np.conj(e), (3, 3): e},
    )


def _gpi(phi: np.ndarray) -> np.ndarray:
    e = np.exp(2j * np.pi * phi)
    return _stack(phi.shape, 2, {(0, 1): np.conj(e), (1, 0): e})


def _gpi2(phi: np.ndarray) -> np.ndarray:
    e = np.exp(2j * np.pi * phi)
    one = np.full(phi.shape, _INV_SQRT2, dtype=np.complex128)
    return _stack(
        phi.shape,
        2,
        {
            (0, 0): one,
            (0, 1): -1j * _INV_SQRT2 * np.conj(e),
            (1, 0): -1j * _INV_SQRT2 * e,
            (1, 1): one,
        },
    )


def _ms(phi0: np.ndarray, phi1: np.ndarray, theta: np.ndarray) -> np.ndarray:
    # Fully general Molmer-Sorensen interaction, all arguments in turns.
    # The corner entries form a conjugate pair; printing e^{-i...} in both
    # corners would break unitarity.
    c = np.cos(np.pi * theta).astype(np.complex128)
    s = np.sin(np.pi * theta)
    esum = np.exp(2j * np.pi * (phi0 + phi1))
    edif = np.exp(2j * np.pi * (phi0 - phi1))
    return _stack(
        np.broadcast(phi0, phi1, theta).shape,
        4,
        {
            (0, 0): c,
            (1, 1): c,
            (2, 2): c,
            (3, 3): c,
            (0, 3): -1j * s * np.conj(esum),
            (1, 2): -1j * s * edif,
            (2, 1): -1j * s * np.conj(edif),
            (3, 0): -1j * s * esum,
        },
    )


def gate_matrix(kind: GateKind, params=None) -> np.ndarray:
    """Unitary matrix of a gate; broadcasts over leading parameter axes."""
    arr = _check_params(kind, params)
    if arr is None:
        return _CONST_MATRICES[kind].copy()
    if kind is GateKind.RZ:
        return _rz(arr[..., 0])
    if kind is GateKind.RY:
        return _ry(arr[..., 0])
    if kind is GateKind.RX:
        return _rx(arr[..., 0])
    if kind is GateKind.RZZ:
        return _rzz(arr[..., 0])
    if kind is GateKind.GPI:
        return _gpi(arr[..., 0])
    if kind is GateKind.GPI2:
        return _gpi2(arr[..., 0])
    if kind is GateKind.ROT:
        phi, theta, omega = arr[..., 0], arr[..., 1], arr[..., 2]
        return _rz(omega) @ _ry(theta) @ _rz(phi)
    if kind is GateKind.MS:
        return _ms(arr[..., 0], arr[..., 1], arr[..., 2])
    raise ValueError(f"unhandled gate kind {kind!r}")


def gate_matrix_derivative(kind: GateKind, params, index: int) -> np.ndarray:
    """d(gate_matrix)/d(params[..., index]), broadcast like gate_matrix."""
    traits = GATE_TRAITS[kind]
    if traits.param_count == 0:
        raise ValueError(f"gate {kind.value} has no parameters to differentiate")
    arr = _check_params(kind, params)
    if not 0 <= index < traits.param_count:
        raise ValueError(f"parameter index {index} out of range for {kind.value}")
    if kind is GateKind.RZ:
        return -0.5j * (_PAULI_Z @ _rz(arr[..., 0]))
    if kind is GateKind.RY:
        return -0.5j * (_PAULI_Y @ _ry(arr[..., 0]))
    if kind is GateKind.RX:
        return -0.5j * (_PAULI_X @ _rx(arr[..., 0]))
    if kind is GateKind.RZZ:
        return -0.5j * (_ZZ @ _rzz(arr[..., 0]))
    if kind is GateKind.GPI:
        e = np.exp(2j * np.pi * arr[..., 0])
        return _stack(
            arr.shape[:-1],
            2,
            {(0, 1): -TWO_PI * 1j * np.conj(e), (1, 0): TWO_PI * 1j * e},
        )
    if kind is GateKind.GPI2:
        e = np.exp(2j * np.pi * arr[..., 0])
        return _stack(
            arr.shape[:-1],
            2,
            {
                (0, 1): -TWO_PI * _INV_SQRT2 * np.conj(e),
                (1, 0): TWO_PI * _INV_SQRT2 * e,
            },
        )
    if kind is GateKind.ROT:
        phi, theta, omega = arr[..., 0], arr[..., 1], arr[..., 2]
        if index == 0:
            return _rz(omega) @ _ry(theta) @ (-0.5j * (_PAULI_Z @ _rz(phi)))
        if index == 1:
            return _rz(omega) @ (-0.5j * (_PAULI_Y @ _ry(theta))) @ _rz(phi)
        return (-0.5j * (_PAULI_Z @ _rz(omega))) @ _ry(theta) @ _rz(phi)
    if kind is GateKind.MS:
        phi0, phi1, theta = arr[..., 0], arr[..., 1], arr[..., 2]
        c = np.cos(np.pi * theta)
        s = np.sin(np.pi * theta)
        esum = np.exp(2j * np.pi * (phi0 + phi1))
        edif = np.exp(2j * np.pi * (phi0 - phi1))
        shape = np.broadcast(phi0, phi1, theta).shape
        if index == 2:
            return _stack(
                shape,
                4,
                {
                    (0, 0): -np.pi * s + 0j,
                    (1, 1): -np.pi * s + 0j,
                    (2, 2): -np.pi * s + 0j,
                    (3, 3): -np.pi * s + 0j,
                    (0, 3): -1j * np.pi * c * np.conj(esum),
                    (1, 2): -1j * np.pi * c * edif,
                    (2, 1): -1j * np.pi * c * np.conj(edif),
                    (3, 0): -1j * np.pi * c * esum,
                },
            )
        sign = 1.0 if index == 0 else -1.0
        return _stack(
            shape,
            4,
            {
                (0, 3): -TWO_PI * s * np.conj(esum),
                (1, 2): sign * TWO_PI * s * edif,
                (2, 1): -sign * TWO_PI * s * np.conj(edif),
                (3, 0): TWO_PI * s * esum,
            },
        )
    raise ValueError(f"gate {kind.value} has no parameters to differentiate")
