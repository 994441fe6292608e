"""The nine layer-application techniques and their applicability rules.

Every technique transforms a StateBatch in place and returns it. The
module exposes standalone operations on explicit representations (dense
unitary, permutation vector, diagonal, eigenphase coefficient matrix)
plus, via ``prepare``, per-layer applier objects used by the circuit
executor, the autotuner, and the gradient sweep. Appliers support
forward and inverse application; the inverse path is what makes the
reverse gradient sweep and forward-plus-backward timing possible
without dense matrix inversion.

Parameter arrays follow the circuit convention: shape (positions,
param_count) for shared parameters, (batch, positions, param_count) for
per-row encoding parameters. Per-row updates always run through the
numpy primitives, since they reduce to batched broadcasting either way;
the compiled backend accelerates the shared-parameter paths.

Constant pieces (gate matrices, permutation vectors, K matrices,
Hadamard layers, fixed diagonals) are cached at module level keyed by
(tag, gate, pattern, n), so repeated circuit executions pay only for
parameter-dependent work.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from . import _pyops
from .backend import ops
from .circuits import Layer, PatternKind, positions
from .errors import PlanMismatchError
from .gates import GateKind, gate_matrix, gate_traits
from .oracle import ORACLE_MAX_QUBITS, layer_unitary
from .states import StateBatch, z_weights


class KernelKind(Enum):
    """The application techniques; declaration order is the tie-break order."""

    FULL_UNITARY = "full_unitary"
    REAL_UNITARY = "real_unitary"
    EINSUM = "einsum"
    PERMUTATION = "permutation"
    EIGENPHASE = "eigenphase"
    DIAG_TP = "diag_tp"
    DIAG_EINSUM = "diag_einsum"
    HRZ_EXPANSION = "hrz_expansion"
    FHWT = "fhwt"


KERNEL_ORDER: tuple[KernelKind, ...] = tuple(KernelKind)
_KERNEL_RANK = {kind: i for i, kind in enumerate(KERNEL_ORDER)}

_HRZ_GATES = frozenset(
    {GateKind.RX, GateKind.RY, GateKind.ROT, GateKind.GPI2}
)

DEFAULT_FULL_UNITARY_MAX = 9


def kernel_rank(kind: KernelKind) -> int:
    """Position in the fixed tie-break order."""
    return _KERNEL_RANK[kind]


def applicable_kernels(
    layer: Layer, n: int, max_unitary_qubits: int = ORACLE_MAX_QUBITS
) -> tuple[KernelKind, ...]:
    """Kernels that can execute this layer, in tie-break order.

    Dense (full/real) unitaries are capped at ``max_unitary_qubits``;
    einsum always applies; the others follow the gate's trait flags, with
    the H-Rz expansion and the FHWT additionally requiring an all-qubits
    pattern.
    """
    traits = gate_traits(layer.gate)
    out: list[KernelKind] = []
    if n <= max_unitary_qubits:
        out.append(KernelKind.FULL_UNITARY)
        if traits.real:
            out.append(KernelKind.REAL_UNITARY)
    out.append(KernelKind.EINSUM)
    if traits.permutation:
        out.append(KernelKind.PERMUTATION)
    if traits.diagonal or traits.antidiagonal:
        out.extend(
            (KernelKind.EIGENPHASE, KernelKind.DIAG_TP, KernelKind.DIAG_EINSUM)
        )
    all_pattern = layer.pattern.kind is PatternKind.ALL_QUBITS
    if layer.gate in _HRZ_GATES and all_pattern:
        out.append(KernelKind.HRZ_EXPANSION)
    if layer.gate is GateKind.H and all_pattern:
        out.append(KernelKind.FHWT)
    return tuple(out)


def default_kernel(layer: Layer, n: int) -> KernelKind:
    """Kernel used when no plan is supplied: dense matmul while it is
    cheap, einsum beyond that."""
    if n <= DEFAULT_FULL_UNITARY_MAX:
        return KernelKind.FULL_UNITARY
    return KernelKind.EINSUM


# ---------------------------------------------------------------------------
# representations


@dataclass(frozen=True)
class PermVector:
    """Index permutation of one layer: psi'[j] = psi[sigma[j]]."""

    n: int
    sigma: np.ndarray

    def __post_init__(self):
        sig = np.ascontiguousarray(self.sigma, dtype=np.int64)
        if sig.shape != (1 << self.n,):
            raise ValueError(f"sigma shape {sig.shape} != (2^{self.n},)")
        sig.setflags(write=False)
        object.__setattr__(self, "sigma", sig)


@dataclass(frozen=True)
class DiagVector:
    """Full diagonal of one layer, with an optional basis-index xor flip.

    Diagonal layers have flip_mask 0. Antidiagonal layers factor into a
    diagonal followed by bit flips on the touched wires; flip_mask holds
    those bit positions.
    """

    n: int
    d: np.ndarray
    flip_mask: int = 0

    def __post_init__(self):
        d = np.asarray(self.d, dtype=np.complex128)
        dim = 1 << self.n
        if d.shape != (dim,) and (d.ndim != 2 or d.shape[1] != dim):
            raise ValueError(f"diagonal shape {d.shape} != (2^{self.n},)")
        object.__setattr__(self, "d", d)


@dataclass(frozen=True)
class KMatrix:
    """Eigenphase coefficient matrix: diag = exp(i K theta')."""

    n: int
    kind: GateKind
    k: np.ndarray


@lru_cache(maxsize=128)
def _j_matrix(n: int) -> np.ndarray:
    """Binary counting matrix: J[i, w] = bit of wire w in index i (wire 0
    is the most significant bit)."""
    idx = np.arange(1 << n, dtype=np.int64)
    shifts = np.array([n - 1 - w for w in range(n)], dtype=np.int64)
    j = ((idx[:, None] >> shifts[None, :]) & 1).astype(np.float64)
    j.setflags(write=False)
    return j


@lru_cache(maxsize=128)
def build_k_matrix(kind: GateKind, n: int) -> KMatrix:
    """+/-1 coefficient matrix for rz, rzz (ring pairing), or gpi."""
    if kind not in (GateKind.RZ, GateKind.RZZ, GateKind.GPI):
        raise ValueError(f"no K matrix for gate {kind.value}")
    if n < 1:
        raise ValueError("need at least one qubit")
    base = 1.0 - 2.0 * _j_matrix(n)
    if kind is GateKind.RZZ:
        if n < 2:
            raise ValueError("rzz K matrix needs at least 2 qubits")
        k = base * np.roll(base, -1, axis=1)
    else:
        k = base.copy()
    k.setflags(write=False)
    return KMatrix(n=n, kind=kind, k=k)


# per-gate eigenphase coefficient: diag entries are exp(i * K @ theta')
_THETA_SCALE = {
    GateKind.RZ: -0.5,
    GateKind.RZZ: -0.5,
    GateKind.GPI: 2.0 * np.pi,
}


# ---------------------------------------------------------------------------
# module-level cache for constant per-layer data


_CONST_CACHE: dict[tuple, object] = {}


def _cached(key: tuple, build):
    try:
        return _CONST_CACHE[key]
    except KeyError:
        value = _CONST_CACHE[key] = build()
        return value


def _layer_key(layer: Layer, n: int) -> tuple:
    return (layer.gate, layer.pattern.kind, layer.pattern.wires, n)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# standalone operations


def apply_full_unitary(
    u: np.ndarray, state: StateBatch, real_mode: bool = False
) -> StateBatch:
    """psi <- U psi per batch row, one dense matmul.

    With real_mode, U must have exactly zero imaginary part; the update
    runs as two real matmuls on the state's real and imaginary parts.
    """
    u = np.asarray(u)
    dim = state.dim
    if u.shape != (dim, dim):
        raise ValueError(f"unitary shape {u.shape} != ({dim}, {dim})")
    amps = state.amplitudes
    if real_mode:
        if np.iscomplexobj(u):
            if u.imag.any():
                raise ValueError("real_mode requires a real matrix")
            u = u.real
        ur = np.ascontiguousarray(u, dtype=np.float64)
        amps[:, :] = amps.real @ ur.T + 1j * (amps.imag @ ur.T)
    else:
        amps[:, :] = amps @ np.asarray(u, dtype=np.complex128).T
    return state


def apply_einsum(
    local_u: np.ndarray, wires: tuple[int, ...], state: StateBatch
) -> StateBatch:
    """Contract a 1- or 2-qubit matrix against the wire axes of the state."""
    wires = tuple(wires)
    n = state.n
    if len(set(wires)) != len(wires):
        raise ValueError(f"repeated wire in {wires}")
    if any(not 0 <= w < n for w in wires):
        raise ValueError(f"wire out of range in {wires} for n={n}")
    u = np.ascontiguousarray(local_u, dtype=np.complex128)
    if len(wires) == 1:
        if u.shape != (2, 2):
            raise ValueError(f"expected a 2x2 matrix, got {u.shape}")
        ops().apply_1q(state.amplitudes, u, n - 1 - wires[0])
    elif len(wires) == 2:
        if u.shape != (4, 4):
            raise ValueError(f"expected a 4x4 matrix, got {u.shape}")
        ops().apply_2q(state.amplitudes, u, n - 1 - wires[0], n - 1 - wires[1])
    else:
        raise ValueError("einsum supports 1- and 2-qubit gates only")
    return state


def _position_sigma(sigma_loc: np.ndarray, wires: tuple[int, ...], n: int):
    """Full-index source permutation of one gate application."""
    idx = np.arange(1 << n, dtype=np.int64)
    if len(wires) == 1:
        p = n - 1 - wires[0]
        src = sigma_loc[(idx >> p) & 1]
        return (idx & ~(1 << p)) | (src << p)
    pa, pb = n - 1 - wires[0], n - 1 - wires[1]
    loc = ((idx >> pa) & 1) << 1 | ((idx >> pb) & 1)
    src = sigma_loc[loc]
    cleared = idx & ~((1 << pa) | (1 << pb))
    return cleared | ((src >> 1) & 1) << pa | (src & 1) << pb


def compose_permutation(layer: Layer, n: int) -> PermVector:
    """Single permutation vector equal to the whole layer's action."""
    if not gate_traits(layer.gate).permutation:
        raise ValueError(f"gate {layer.gate.value} is not a permutation")
    sigma_loc = np.argmax(gate_matrix(layer.gate), axis=1).astype(np.int64)
    sigma = np.arange(1 << n, dtype=np.int64)
    for wires in positions(layer, n):
        sigma = sigma[_position_sigma(sigma_loc, wires, n)]
    return PermVector(n=n, sigma=sigma)


def apply_permutation(perm: PermVector, state: StateBatch) -> StateBatch:
    """psi'[j] = psi[sigma[j]] per batch row; pure data movement."""
    if perm.n != state.n:
        raise ValueError(f"permutation is for n={perm.n}, state has n={state.n}")
    ops().permute(state.amplitudes, perm.sigma)
    return state


def apply_eigenphase(kmat: KMatrix, theta, state: StateBatch) -> StateBatch:
    """Multiply by exp(i K theta') elementwise.

    theta holds the gate's own parameters (radians for rz/rzz, turns for
    gpi); the eigenphase coefficient conversion happens here. Shape (n,)
    or (batch, n); an rzz ring on 2 qubits degenerates to one pair, so a
    single angle is padded with a zero for the duplicate K column. For
    gpi the phased vector is additionally written in reversed index
    order, which is the xor flip of every bit.
    """
    if kmat.n != state.n:
        raise ValueError(f"K matrix is for n={kmat.n}, state has n={state.n}")
    arr = np.asarray(theta, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if kmat.kind is GateKind.RZZ and kmat.n == 2 and arr.shape[-1] == 1:
        arr = np.concatenate([arr, np.zeros_like(arr)], axis=-1)
    if arr.shape[-1] != kmat.n:
        raise ValueError(f"theta last axis {arr.shape[-1]} != n={kmat.n}")
    scaled = arr * _THETA_SCALE[kmat.kind]
    amps = state.amplitudes
    if scaled.ndim == 1:
        ops().phase_mult(amps, kmat.k @ scaled)
    elif scaled.ndim == 2:
        if scaled.shape[0] != state.batch:
            raise ValueError(
                f"theta rows {scaled.shape[0]} != batch {state.batch}"
            )
        ops().phase_mult_rows(amps, scaled @ kmat.k.T)
    else:
        raise ValueError(f"theta must be 1- or 2-d, got shape {arr.shape}")
    if kmat.kind is GateKind.GPI:
        ops().xor_gather(amps, (1 << kmat.n) - 1)
    return state


class MultCounter:
    """Tallies the scalar multiplications spent building diagonals."""

    def __init__(self):
        self.mults = 0

    def add(self, count: int) -> None:
        self.mults += count


_CONST_DIAG_1Q = {
    GateKind.Z: np.array([1.0, -1.0], dtype=np.complex128),
    GateKind.S: np.array([1.0, 1.0j], dtype=np.complex128),
}
_CONST_DIAG_2Q = {
    GateKind.CZ: np.array([1.0, 1.0, 1.0, -1.0], dtype=np.complex128),
}


def _diag_entries(kind: GateKind, theta: np.ndarray) -> np.ndarray:
    """Local diagonal of a parametrized diagonal gate; theta (...) -> (..., d)."""
    if kind is GateKind.RZ:
        e = np.exp(-0.5j * theta)
        return np.stack([e, np.conj(e)], axis=-1)
    if kind is GateKind.RZZ:
        e = np.exp(-0.5j * theta)
        ec = np.conj(e)
        return np.stack([e, ec, ec, e], axis=-1)
    raise ValueError(f"gate {kind.value} has no parametrized diagonal")


def _gpi_diag_entries(phi: np.ndarray) -> np.ndarray:
    """Diagonal factor of gpi = flip * diag; phi in turns."""
    e = np.exp(2j * np.pi * phi)
    return np.stack([e, np.conj(e)], axis=-1)


def _gpi_antidiag_entries(phi: np.ndarray) -> np.ndarray:
    """Direct antidiagonal (upper, lower) entries of gpi."""
    e = np.exp(2j * np.pi * phi)
    return np.stack([np.conj(e), e], axis=-1)


@lru_cache(maxsize=256)
def _pair_locations(pa: int, pb: int, n: int) -> np.ndarray:
    """Local 4-diag index of every basis index for a wire pair."""
    idx = np.arange(1 << n, dtype=np.int64)
    loc = ((idx >> pa) & 1) << 1 | ((idx >> pb) & 1)
    loc.setflags(write=False)
    return loc


def _flip_mask(pos, n: int) -> int:
    mask = 0
    for (w,) in pos:
        mask |= 1 << (n - 1 - w)
    return mask


def diag_tensor_product(
    layer: Layer,
    n: int,
    params: np.ndarray | None = None,
    counter: MultCounter | None = None,
) -> DiagVector:
    """Full 2^n diagonal of a (anti)diagonal layer.

    Single-qubit layers build the diagonal as a chain of Kronecker
    products over per-qubit 2-vectors (identity on untouched wires); an
    all-qubits layer costs exactly 2^{n+1} - 4 scalar multiplications,
    reported through ``counter``. Pair layers compose by elementwise
    product of embedded 4-diagonals. Antidiagonal layers (gpi) return
    their diagonal factor plus the xor flip mask of the touched wires.
    """
    traits = gate_traits(layer.gate)
    if not (traits.diagonal or traits.antidiagonal):
        raise ValueError(f"gate {layer.gate.value} has no diagonal form")
    pos = positions(layer, n)
    if traits.param_count:
        params = np.asarray(params, dtype=np.float64)
        if params.shape != (len(pos), traits.param_count):
            raise ValueError(
                f"params shape {params.shape} != ({len(pos)}, {traits.param_count})"
            )
    elif params is not None:
        raise ValueError(f"gate {layer.gate.value} takes no parameters")

    if traits.arity == 1:
        if len({w for (w,) in pos}) != len(pos):
            raise ValueError("repeated wire in one layer")
        rows = np.ones((n, 2), dtype=np.complex128)
        wire_list = [w for (w,) in pos]
        if layer.gate is GateKind.GPI:
            rows[wire_list] = _gpi_diag_entries(params[:, 0])
        elif traits.param_count:
            rows[wire_list] = _diag_entries(layer.gate, params[:, 0])
        else:
            rows[wire_list] = _CONST_DIAG_1Q[layer.gate]
        d, mults = ops().kron_chain(rows)
        if counter is not None:
            counter.add(int(mults))
        mask = _flip_mask(pos, n) if traits.antidiagonal else 0
        return DiagVector(n=n, d=np.asarray(d), flip_mask=mask)

    out = None
    for i, (a, b) in enumerate(pos):
        if traits.param_count:
            d4 = _diag_entries(layer.gate, params[i, 0])
        else:
            d4 = _CONST_DIAG_2Q[layer.gate]
        emb = d4[_pair_locations(n - 1 - a, n - 1 - b, n)]
        if out is None:
            out = emb.copy()
        else:
            out *= emb
            if counter is not None:
                counter.add(out.size)
    return DiagVector(n=n, d=out, flip_mask=0)


def apply_diag(d: DiagVector, state: StateBatch) -> StateBatch:
    """Elementwise multiply; antidiagonal layers flip basis bits after."""
    if d.n != state.n:
        raise ValueError(f"diagonal is for n={d.n}, state has n={state.n}")
    amps = state.amplitudes
    if d.d.ndim == 1:
        ops().diag_mult(amps, d.d)
    else:
        if d.d.shape[0] != state.batch:
            raise ValueError(f"diagonal rows {d.d.shape[0]} != batch {state.batch}")
        ops().diag_mult_rows(amps, d.d)
    if d.flip_mask:
        ops().xor_gather(amps, d.flip_mask)
    return state


def apply_diag_einsum(
    local_diag: np.ndarray, wires: tuple[int, ...], state: StateBatch
) -> StateBatch:
    """Broadcast a local gate diagonal over the wire axes and multiply."""
    wires = tuple(wires)
    n = state.n
    if len(set(wires)) != len(wires):
        raise ValueError(f"repeated wire in {wires}")
    if any(not 0 <= w < n for w in wires):
        raise ValueError(f"wire out of range in {wires} for n={n}")
    d = np.ascontiguousarray(local_diag, dtype=np.complex128)
    if len(wires) == 1:
        if d.shape != (2,):
            raise ValueError(f"expected a 2-vector, got shape {d.shape}")
        ops().diag_1q(state.amplitudes, d, n - 1 - wires[0])
    elif len(wires) == 2:
        if d.shape != (4,):
            raise ValueError(f"expected a 4-vector, got shape {d.shape}")
        ops().diag_2q(state.amplitudes, d, n - 1 - wires[0], n - 1 - wires[1])
    else:
        raise ValueError("diagonal einsum supports 1- and 2-qubit gates only")
    return state


def apply_hrz_expansion(layer: Layer, params, state: StateBatch) -> StateBatch:
    """Run a rotation layer through its exact Hadamard/Rz factorization."""
    applier = _Hrz(layer, state.n)
    k = gate_traits(layer.gate).param_count
    arr = np.asarray(params, dtype=np.float64)
    if arr.shape[-2:] != (state.n, k) or arr.ndim not in (2, 3):
        raise ValueError(
            f"params shape {arr.shape} != ({state.n}, {k}) or (batch, {state.n}, {k})"
        )
    applier.apply(state.amplitudes, arr)
    return state


def fhwt(state: StateBatch) -> StateBatch:
    """Fast Hadamard-Walsh transform: H on every qubit in O(n 2^n)."""
    ops().fhwt(state.amplitudes)
    return state


# ---------------------------------------------------------------------------
# per-layer appliers


class _FullUnitary:
    """Dense 2^n matmul; the parametrized path rebuilds the matrix per call."""

    kernel = KernelKind.FULL_UNITARY
    _real = False

    def __init__(self, layer: Layer, n: int):
        self._layer = layer
        self._n = n
        self._const = gate_traits(layer.gate).param_count == 0
        if self._const:
            tag = "layer_u_real" if self._real else "layer_u"
            self._u = _cached(
                (tag,) + _layer_key(layer, n), lambda: _frozen(self._build(None))
            )

    def _build(self, params):
        u = layer_unitary(self._layer, self._n, params)
        if self._real:
            # exact for real-trait gates: every factor has zero imaginary part
            return np.ascontiguousarray(u.real)
        return u

    def _rmul(self, psi, right):
        if self._real:
            psi[:, :] = psi.real @ right + 1j * (psi.imag @ right)
        else:
            psi[:, :] = psi @ right

    def apply(self, psi, params=None):
        if self._const:
            self._rmul(psi, self._u.T)
        elif params.ndim == 3:
            for b in range(psi.shape[0]):
                self._rmul(psi[b : b + 1], self._build(params[b]).T)
        else:
            self._rmul(psi, self._build(params).T)

    def inverse(self, psi, params=None):
        if self._const:
            self._rmul(psi, self._u if self._real else self._u.conj())
        elif params.ndim == 3:
            for b in range(psi.shape[0]):
                u = self._build(params[b])
                self._rmul(psi[b : b + 1], u if self._real else u.conj())
        else:
            u = self._build(params)
            self._rmul(psi, u if self._real else u.conj())


class _RealUnitary(_FullUnitary):
    kernel = KernelKind.REAL_UNITARY
    _real = True


class _Einsum:
    """Per-position local contraction on the wire axes."""

    kernel = KernelKind.EINSUM

    def __init__(self, layer: Layer, n: int):
        self._gate = layer.gate
        self._arity = gate_traits(layer.gate).arity
        self._const = gate_traits(layer.gate).param_count == 0
        pos = positions(layer, n)
        self._bits = tuple(tuple(n - 1 - w for w in ws) for ws in pos)
        if self._const:
            self._u = _cached(
                ("gate_u", layer.gate), lambda: _frozen(gate_matrix(layer.gate))
            )
            self._uh = _cached(
                ("gate_uh", layer.gate),
                lambda: _frozen(np.ascontiguousarray(self._u.conj().T)),
            )

    def _one(self, psi, u, bits):
        if self._arity == 1:
            ops().apply_1q(psi, u, bits[0])
        else:
            ops().apply_2q(psi, u, bits[0], bits[1])

    def _one_batched(self, psi, u, bits):
        if self._arity == 1:
            _pyops.apply_1q_batched(psi, u, bits[0])
        else:
            _pyops.apply_2q_batched(psi, u, bits[0], bits[1])

    def apply(self, psi, params=None):
        if self._const:
            for bits in self._bits:
                self._one(psi, self._u, bits)
        elif params.ndim == 2:
            mats = gate_matrix(self._gate, params)
            for i, bits in enumerate(self._bits):
                self._one(psi, mats[i], bits)
        else:
            mats = gate_matrix(self._gate, params)
            for i, bits in enumerate(self._bits):
                self._one_batched(psi, mats[:, i], bits)

    def inverse(self, psi, params=None):
        if self._const:
            for bits in reversed(self._bits):
                self._one(psi, self._uh, bits)
        elif params.ndim == 2:
            mats = gate_matrix(self._gate, params)
            for i in range(len(self._bits) - 1, -1, -1):
                u = np.ascontiguousarray(mats[i].conj().T)
                self._one(psi, u, self._bits[i])
        else:
            mats = gate_matrix(self._gate, params)
            for i in range(len(self._bits) - 1, -1, -1):
                u = mats[:, i].conj().transpose(0, 2, 1)
                self._one_batched(psi, u, self._bits[i])


class _Permutation:
    """Single composed index permutation; zero arithmetic at apply time."""

    kernel = KernelKind.PERMUTATION

    def __init__(self, layer: Layer, n: int):
        key = _layer_key(layer, n)
        self._sigma = _cached(
            ("perm",) + key, lambda: compose_permutation(layer, n).sigma
        )
        self._inv = _cached(
            ("perm_inv",) + key,
            lambda: _frozen(
                np.ascontiguousarray(np.argsort(self._sigma).astype(np.int64))
            ),
        )

    def apply(self, psi, params=None):
        ops().permute(psi, self._sigma)

    def inverse(self, psi, params=None):
        ops().permute(psi, self._inv)


def _build_phase_columns(layer: Layer, n: int):
    """(alpha0, cols) so that alpha = alpha0 or cols @ theta'."""
    pos = positions(layer, n)
    gate = layer.gate
    j = _j_matrix(n)
    if gate is GateKind.Z:
        return np.pi * sum(j[:, w] for (w,) in pos), None
    if gate is GateKind.S:
        return 0.5 * np.pi * sum(j[:, w] for (w,) in pos), None
    if gate is GateKind.CZ:
        return np.pi * sum(j[:, a] * j[:, b] for (a, b) in pos), None
    k = build_k_matrix(GateKind.RZ, n).k
    if gate in (GateKind.RZ, GateKind.GPI):
        cols = np.ascontiguousarray(k[:, [w for (w,) in pos]])
    elif gate is GateKind.RZZ:
        cols = np.stack([k[:, a] * k[:, b] for (a, b) in pos], axis=1)
    else:
        raise ValueError(f"gate {gate.value} has no eigenphase form")
    return None, cols


class _Eigenphase:
    """Phase multiply by exp(i alpha), alpha from the K-matrix columns."""

    kernel = KernelKind.EIGENPHASE

    def __init__(self, layer: Layer, n: int):
        key = _layer_key(layer, n)
        alpha0, cols = _cached(
            ("eig_cols",) + key,
            lambda: tuple(
                _frozen(x) if x is not None else None
                for x in _build_phase_columns(layer, n)
            ),
        )
        self._alpha0 = alpha0
        self._cols = cols
        self._scale = _THETA_SCALE.get(layer.gate, 0.0)
        traits = gate_traits(layer.gate)
        self._mask = (
            _flip_mask(positions(layer, n), n) if traits.antidiagonal else 0
        )

    def _alpha(self, params, sign):
        if self._alpha0 is not None:
            return sign * self._alpha0
        th = params[..., 0] * (sign * self._scale)
        if th.ndim == 1:
            return self._cols @ th
        return th @ self._cols.T

    def apply(self, psi, params=None):
        alpha = self._alpha(params, 1.0)
        if alpha.ndim == 1:
            ops().phase_mult(psi, alpha)
        else:
            ops().phase_mult_rows(psi, alpha)
        if self._mask:
            ops().xor_gather(psi, self._mask)

    def inverse(self, psi, params=None):
        if self._mask:
            ops().xor_gather(psi, self._mask)
        alpha = self._alpha(params, -1.0)
        if alpha.ndim == 1:
            ops().phase_mult(psi, alpha)
        else:
            ops().phase_mult_rows(psi, alpha)


class _DiagTP:
    """Build the layer's full diagonal by tensor product, then multiply."""

    kernel = KernelKind.DIAG_TP

    def __init__(self, layer: Layer, n: int):
        self._layer = layer
        self._n = n
        traits = gate_traits(layer.gate)
        self._const = traits.param_count == 0
        pos = positions(layer, n)
        self._wire_list = [w for (w,) in pos] if traits.arity == 1 else None
        self._pair_bits = (
            [(n - 1 - a, n - 1 - b) for (a, b) in pos]
            if traits.arity == 2
            else None
        )
        self._mask = _flip_mask(pos, n) if traits.antidiagonal else 0
        if self._const:
            dv = _cached(
                ("diag_tp",) + _layer_key(layer, n),
                lambda: _frozen(diag_tensor_product(layer, n).d),
            )
            self._d = dv

    def _diag(self, params):
        if self._const:
            return self._d
        if params.ndim == 2:
            return diag_tensor_product(self._layer, self._n, params).d
        # per-row encoding parameters: broadcast the chain over the batch
        batch = params.shape[0]
        if self._wire_list is not None:
            if self._layer.gate is GateKind.GPI:
                entries = _gpi_diag_entries(params[..., 0])
            else:
                entries = _diag_entries(self._layer.gate, params[..., 0])
            rows = np.ones((batch, self._n, 2), dtype=np.complex128)
            rows[:, self._wire_list] = entries
            out = np.ascontiguousarray(rows[:, 0, :])
            for w in range(1, self._n):
                out = (out[:, :, None] * rows[:, w, None, :]).reshape(batch, -1)
            return out
        d4s = _diag_entries(self._layer.gate, params[..., 0])
        out = None
        for i, (pa, pb) in enumerate(self._pair_bits):
            # np.take keeps the result C-ordered; fancy indexing here does not.
            emb = np.take(d4s[:, i, :], _pair_locations(pa, pb, self._n), axis=1)
            out = emb if out is None else out * emb
        return out

    def apply(self, psi, params=None):
        d = self._diag(params)
        if d.ndim == 1:
            ops().diag_mult(psi, d)
        else:
            ops().diag_mult_rows(psi, d)
        if self._mask:
            ops().xor_gather(psi, self._mask)

    def inverse(self, psi, params=None):
        if self._mask:
            ops().xor_gather(psi, self._mask)
        d = np.conj(self._diag(params))
        if d.ndim == 1:
            ops().diag_mult(psi, d)
        else:
            ops().diag_mult_rows(psi, d)


class _DiagEinsum:
    """Per-position local diagonal (or antidiagonal) broadcast multiply."""

    kernel = KernelKind.DIAG_EINSUM

    def __init__(self, layer: Layer, n: int):
        self._gate = layer.gate
        traits = gate_traits(layer.gate)
        self._arity = traits.arity
        self._antidiag = traits.antidiagonal
        self._const = traits.param_count == 0
        pos = positions(layer, n)
        self._bits = tuple(tuple(n - 1 - w for w in ws) for ws in pos)
        if self._const:
            table = _CONST_DIAG_1Q if traits.arity == 1 else _CONST_DIAG_2Q
            self._d = table[layer.gate]
            self._dh = np.conj(self._d)

    def _entries(self, params):
        if self._antidiag:
            return _gpi_antidiag_entries(params[..., 0])
        return _diag_entries(self._gate, params[..., 0])

    def _one(self, psi, d, bits):
        if self._antidiag:
            ops().antidiag_1q(psi, d, bits[0])
        elif self._arity == 1:
            ops().diag_1q(psi, d, bits[0])
        else:
            ops().diag_2q(psi, d, bits[0], bits[1])

    def _one_batched(self, psi, d, bits):
        if self._antidiag:
            _pyops.antidiag_1q_batched(psi, d, bits[0])
        elif self._arity == 1:
            _pyops.diag_1q_batched(psi, d, bits[0])
        else:
            _pyops.diag_2q_batched(psi, d, bits[0], bits[1])

    def _sweep(self, psi, params, conj):
        if self._const:
            d = self._dh if conj else self._d
            for bits in self._bits:
                self._one(psi, d, bits)
            return
        entries = self._entries(params)
        if self._antidiag and conj:
            # gpi is self-adjoint: the inverse is the same antidiagonal
            conj = False
        if conj:
            entries = np.conj(entries)
        if params.ndim == 2:
            for i, bits in enumerate(self._bits):
                self._one(psi, np.ascontiguousarray(entries[i]), bits)
        else:
            for i, bits in enumerate(self._bits):
                self._one_batched(psi, entries[:, i], bits)

    def apply(self, psi, params=None):
        self._sweep(psi, params, conj=False)

    def inverse(self, psi, params=None):
        self._sweep(psi, params, conj=True)


_H_MATMUL_MAX = 10


def _h_layer_matrix(n: int) -> np.ndarray:
    """Real 2^n x 2^n matrix of H on every qubit (symmetric)."""

    def build():
        h = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
        full = np.array([[1.0]])
        for _ in range(n):
            full = np.kron(full, h)
        return _frozen(np.ascontiguousarray(full))

    return _cached(("h_matrix", n), build)


def _apply_h_layer(psi: np.ndarray, n: int) -> None:
    """H on every qubit: real-split matmul while the matrix is small,
    the butterfly transform beyond that."""
    if n > _H_MATMUL_MAX:
        ops().fhwt(psi)
    else:
        hm = _h_layer_matrix(n)
        psi[:, :] = psi.real @ hm + 1j * (psi.imag @ hm)


def _quarter_diag(n: int, sign: int) -> np.ndarray:
    """exp(sign * i pi/4 * (n - 2 popcount)): the phase layer of a
    constant +/- pi/2 z-rotation on every qubit."""
    return _cached(
        ("quarter_diag", n, sign),
        lambda: _frozen(np.exp(0.25j * np.pi * sign * z_weights(n))),
    )


class _Hrz:
    """Exact phase/Hadamard/phase/Hadamard/phase factorization of a
    rotation layer.

    Per qubit: rx(t) = h rz(t) h; ry(t) = rz(pi/2) h rz(t) h rz(-pi/2);
    rot(p,t,w) = rz(w+pi/2) h rz(t) h rz(p-pi/2); gpi2(f) = rz(2 pi f) h
    rz(pi/2) h rz(-2 pi f). The constant +/- pi/2 phase layers are cached
    per qubit count.
    """

    kernel = KernelKind.HRZ_EXPANSION

    def __init__(self, layer: Layer, n: int):
        if layer.pattern.kind is not PatternKind.ALL_QUBITS:
            raise PlanMismatchError(
                "the H-Rz expansion requires an all-qubits pattern"
            )
        if layer.gate not in _HRZ_GATES:
            raise PlanMismatchError(
                f"gate {layer.gate.value} has no H-Rz expansion"
            )
        self._gate = layer.gate
        self._n = n
        self._k = build_k_matrix(GateKind.RZ, n).k
        signs = {
            GateKind.RX: (0, 0, 0),
            GateKind.RY: (1, 0, -1),
            GateKind.ROT: (0, 0, 0),
            GateKind.GPI2: (0, -1, 0),
        }
        self._signs = signs[layer.gate]

    def _angles(self, params):
        gate = self._gate
        if gate in (GateKind.RX, GateKind.RY):
            return None, params[..., 0], None
        if gate is GateKind.ROT:
            return (
                params[..., 0] - 0.5 * np.pi,
                params[..., 1],
                params[..., 2] + 0.5 * np.pi,
            )
        turns = 2.0 * np.pi * params[..., 0]
        return -turns, None, turns

    def _slot(self, psi, angles, sign, negate):
        if sign:
            ops().diag_mult(psi, _quarter_diag(self._n, -sign if negate else sign))
        elif angles is not None:
            th = angles * (0.5 if negate else -0.5)
            if th.ndim == 1:
                ops().phase_mult(psi, self._k @ th)
            else:
                ops().phase_mult_rows(psi, th @ self._k.T)

    def apply(self, psi, params=None):
        pre, mid, post = self._angles(params)
        s_pre, s_mid, s_post = self._signs
        self._slot(psi, pre, s_pre, False)
        _apply_h_layer(psi, self._n)
        self._slot(psi, mid, s_mid, False)
        _apply_h_layer(psi, self._n)
        self._slot(psi, post, s_post, False)

    def inverse(self, psi, params=None):
        pre, mid, post = self._angles(params)
        s_pre, s_mid, s_post = self._signs
        self._slot(psi, post, s_post, True)
        _apply_h_layer(psi, self._n)
        self._slot(psi, mid, s_mid, True)
        _apply_h_layer(psi, self._n)
        self._slot(psi, pre, s_pre, True)


class _Fhwt:
    """The butterfly transform itself; an involution."""

    kernel = KernelKind.FHWT

    def __init__(self, layer: Layer, n: int):
        pass

    def apply(self, psi, params=None):
        ops().fhwt(psi)

    def inverse(self, psi, params=None):
        ops().fhwt(psi)


_APPLIERS = {
    KernelKind.FULL_UNITARY: _FullUnitary,
    KernelKind.REAL_UNITARY: _RealUnitary,
    KernelKind.EINSUM: _Einsum,
    KernelKind.PERMUTATION: _Permutation,
    KernelKind.EIGENPHASE: _Eigenphase,
    KernelKind.DIAG_TP: _DiagTP,
    KernelKind.DIAG_EINSUM: _DiagEinsum,
    KernelKind.HRZ_EXPANSION: _Hrz,
    KernelKind.FHWT: _Fhwt,
}


def prepare(
    kernel: KernelKind,
    layer: Layer,
    n: int,
    max_unitary_qubits: int = ORACLE_MAX_QUBITS,
):
    """Applier object for one layer under one kernel.

    The result has ``apply(psi, params)`` and ``inverse(psi, params)``
    methods mutating the raw (batch, 2^n) amplitude array. Raises
    PlanMismatchError when the kernel cannot execute the layer.
    """
    if kernel not in applicable_kernels(layer, n, max_unitary_qubits):
        raise PlanMismatchError(
            f"kernel {kernel.value} is not applicable to a "
            f"{layer.gate.value}/{layer.pattern.kind.value} layer at n={n}"
        )
    return _APPLIERS[kernel](layer, n)
