"""Batched state vectors and the observable used throughout the package.

A state batch is a ``(batch, 2**n)`` complex128 array, C-contiguous, one
normalized state per row.  Basis index convention: qubit 0 is the most
significant bit of the index, so wire ``w`` sits at bit position
``n - 1 - w``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .backend import ops
from .errors import CapacityError

DEFAULT_MAX_ELEMENTS = 2**27


def _check_capacity(n: int, batch: int, max_elements: int) -> None:
    if n < 1:
        raise ValueError(f"need at least one qubit, got n={n}")
    if batch < 1:
        raise ValueError(f"batch must be positive, got {batch}")
    total = batch << n
    if total > max_elements:
        raise CapacityError(
            f"state batch of {batch} x 2^{n} = {total} amplitudes exceeds "
            f"the budget of {max_elements} elements"
        )


@dataclass
class StateBatch:
    """A batch of ``batch`` state vectors on ``n`` qubits."""

    n: int
    batch: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        a = self.amplitudes
        if a.dtype != np.complex128:
            raise ValueError(f"amplitudes must be complex128, got {a.dtype}")
        if a.shape != (self.batch, 1 << self.n):
            raise ValueError(
                f"amplitudes shape {a.shape} does not match "
                f"(batch={self.batch}, 2^n={1 << self.n})"
            )
        if not a.flags["C_CONTIGUOUS"]:
            raise ValueError("amplitudes must be C-contiguous")

    @property
    def dim(self) -> int:
        return 1 << self.n

    def copy(self) -> "StateBatch":
        return StateBatch(self.n, self.batch, self.amplitudes.copy())


def zero_state(
    n: int, batch: int = 1, max_elements: int = DEFAULT_MAX_ELEMENTS
) -> StateBatch:
    """All rows |0...0>."""
    _check_capacity(n, batch, max_elements)
    amps = np.zeros((batch, 1 << n), dtype=np.complex128)
    amps[:, 0] = 1.0
    return StateBatch(n, batch, amps)


def random_state(
    n: int,
    batch: int = 1,
    seed: int | np.random.Generator | None = 0,
    max_elements: int = DEFAULT_MAX_ELEMENTS,
) -> StateBatch:
    """Haar-ish random rows: complex gaussian entries, normalized per row."""
    _check_capacity(n, batch, max_elements)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    dim = 1 << n
    amps = rng.standard_normal((batch, dim)) + 1j * rng.standard_normal((batch, dim))
    amps /= np.linalg.norm(amps, axis=1, keepdims=True)
    return StateBatch(n, batch, np.ascontiguousarray(amps, dtype=np.complex128))


@lru_cache(maxsize=64)
def z_weights(n: int) -> np.ndarray:
    """Eigenvalues of sum_k Z_k per basis index: n minus twice the popcount."""
    idx = np.arange(1 << n, dtype=np.uint64)
    pop = np.zeros(1 << n, dtype=np.int64)
    for b in range(n):
        pop += ((idx >> np.uint64(b)) & np.uint64(1)).astype(np.int64)
    w = (n - 2 * pop).astype(np.float64)
    w.setflags(write=False)
    return w


def expectation_z_sum(state: StateBatch) -> np.ndarray:
    """<psi| sum_k Z_k |psi> for each row, shape ``(batch,)``."""
    return ops().zsum(state.amplitudes, z_weights(state.n))
