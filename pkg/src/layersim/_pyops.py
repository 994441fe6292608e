"""Pure-numpy state-update primitives.

This is the fallback implementation behind layersim.backend; the compiled
module layersim._fastops mirrors the same signatures. All functions
mutate ``psi`` (shape [batch, 2**n], complex128, C-contiguous) in place.

Single-qubit/two-qubit updates use reshape plus axis transposition to
bring the target axes adjacent, then one small batched matrix multiply;
the compiled backend implements the same updates with index arithmetic.
Bit positions count from the least significant bit, so a gate on wire w
of an n-qubit register acts at bit position n - 1 - w.
"""

from __future__ import annotations

import numpy as np

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


def phase_mult(psi: np.ndarray, alpha: np.ndarray) -> None:
    """psi[b, i] *= exp(1j * alpha[i]); alpha may also be (batch, dim)."""
    psi *= np.exp(1j * alpha)


phase_mult_rows = phase_mult


def diag_mult(psi: np.ndarray, diag: np.ndarray) -> None:
    """psi[b, i] *= diag[i]; diag may also be (batch, dim)."""
    psi *= diag


diag_mult_rows = diag_mult


def xor_gather(psi: np.ndarray, mask: int) -> None:
    """psi[b, j] <- psi[b, j ^ mask]."""
    if mask == 0:
        return
    idx = np.arange(psi.shape[1]) ^ mask
    psi[:, :] = psi[:, idx]


def permute(psi: np.ndarray, sigma: np.ndarray) -> None:
    """psi[b, j] <- psi[b, sigma[j]]."""
    psi[:, :] = psi[:, sigma]


def fhwt(psi: np.ndarray) -> None:
    """In-place fast Hadamard-Walsh transform of every batch row.

    One butterfly stage per qubit: amplitude pairs at stride 2**s are
    combined into ((a + b), (a - b)) / sqrt(2).
    """
    batch, dim = psi.shape
    stride = 1
    while stride < dim:
        view = psi.reshape(batch, -1, 2, stride)
        upper = view[:, :, 0, :].copy()
        lower = view[:, :, 1, :]
        view[:, :, 0, :] = (upper + lower) * _INV_SQRT2
        view[:, :, 1, :] = (upper - lower) * _INV_SQRT2
        stride *= 2


def _split_1q(psi: np.ndarray, bitpos: int) -> np.ndarray:
    batch, dim = psi.shape
    low = 1 << bitpos
    return psi.reshape(batch, dim // (2 * low), 2, low)


def apply_1q(psi: np.ndarray, u: np.ndarray, bitpos: int) -> None:
    """Apply a 2x2 matrix to the qubit at bit position ``bitpos``."""
    view = _split_1q(psi, bitpos)
    moved = np.ascontiguousarray(view.transpose(0, 1, 3, 2))
    shape = moved.shape
    out = moved.reshape(-1, 2) @ u.T
    view[:, :, :, :] = out.reshape(shape).transpose(0, 1, 3, 2)


def apply_1q_batched(psi: np.ndarray, u: np.ndarray, bitpos: int) -> None:
    """Per-row 2x2 matrices, u of shape (batch, 2, 2)."""
    view = _split_1q(psi, bitpos)
    batch = psi.shape[0]
    moved = np.ascontiguousarray(view.transpose(0, 1, 3, 2)).reshape(batch, -1, 2)
    out = moved @ u.transpose(0, 2, 1)
    shape = view.shape
    view[:, :, :, :] = out.reshape(
        shape[0], shape[1], shape[3], shape[2]
    ).transpose(0, 1, 3, 2)


def _split_2q(psi: np.ndarray, pa: int, pb: int) -> tuple[np.ndarray, bool]:
    """Reshape to axes (batch, hi-rest, bit_hi, mid, bit_lo, lo-rest)."""
    batch, dim = psi.shape
    hi, lo = (pa, pb) if pa > pb else (pb, pa)
    view = psi.reshape(
        batch,
        dim >> (hi + 1),
        2,
        1 << (hi - lo - 1) if hi - lo > 1 else 1,
        2,
        1 << lo,
    )
    return view, pa > pb


def _local_order(u: np.ndarray, first_is_hi: bool) -> np.ndarray:
    """Reorder a 4x4 local matrix so index bit 1 is the higher position."""
    if first_is_hi:
        return u
    swap = u.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2).reshape(4, 4)
    return np.ascontiguousarray(swap)


def apply_2q(psi: np.ndarray, u: np.ndarray, pa: int, pb: int) -> None:
    """Apply a 4x4 matrix; local index order is (bit at pa, bit at pb)."""
    view, first_is_hi = _split_2q(psi, pa, pb)
    mat = _local_order(u, first_is_hi)
    moved = np.ascontiguousarray(view.transpose(0, 1, 3, 5, 2, 4))
    shape = moved.shape
    out = moved.reshape(-1, 4) @ mat.T
    view[:, :, :, :, :, :] = out.reshape(shape).transpose(0, 1, 4, 2, 5, 3)


def apply_2q_batched(psi: np.ndarray, u: np.ndarray, pa: int, pb: int) -> None:
    """Per-row 4x4 matrices, u of shape (batch, 4, 4)."""
    view, first_is_hi = _split_2q(psi, pa, pb)
    if not first_is_hi:
        u = np.ascontiguousarray(
            u.reshape(-1, 2, 2, 2, 2).transpose(0, 2, 1, 4, 3).reshape(-1, 4, 4)
        )
    batch = psi.shape[0]
    moved = np.ascontiguousarray(view.transpose(0, 1, 3, 5, 2, 4))
    shape = moved.shape
    out = moved.reshape(batch, -1, 4) @ u.transpose(0, 2, 1)
    view[:, :, :, :, :, :] = out.reshape(shape).transpose(0, 1, 4, 2, 5, 3)


def diag_1q(psi: np.ndarray, d2: np.ndarray, bitpos: int) -> None:
    """Multiply by a local diagonal (d2[0], d2[1]) on one qubit."""
    view = _split_1q(psi, bitpos)
    view *= d2.reshape(1, 1, 2, 1)


def diag_1q_batched(psi: np.ndarray, d2: np.ndarray, bitpos: int) -> None:
    """Per-row local diagonals, d2 of shape (batch, 2)."""
    view = _split_1q(psi, bitpos)
    view *= d2.reshape(-1, 1, 2, 1)


def diag_2q(psi: np.ndarray, d4: np.ndarray, pa: int, pb: int) -> None:
    """Local two-qubit diagonal; d4 indexed by (bit at pa)<<1 | bit at pb."""
    view, first_is_hi = _split_2q(psi, pa, pb)
    mat = d4.reshape(2, 2) if first_is_hi else d4.reshape(2, 2).T
    view *= mat.reshape(1, 1, 2, 1, 2, 1)


def diag_2q_batched(psi: np.ndarray, d4: np.ndarray, pa: int, pb: int) -> None:
    view, first_is_hi = _split_2q(psi, pa, pb)
    mat = d4.reshape(-1, 2, 2)
    if not first_is_hi:
        mat = mat.transpose(0, 2, 1)
    view *= mat.reshape(-1, 1, 2, 1, 2, 1)


def antidiag_1q(psi: np.ndarray, d2: np.ndarray, bitpos: int) -> None:
    """Apply [[0, d2[0]], [d2[1], 0]] on one qubit."""
    view = _split_1q(psi, bitpos)
    upper = view[:, :, 0, :].copy()
    view[:, :, 0, :] = d2[0] * view[:, :, 1, :]
    view[:, :, 1, :] = d2[1] * upper


def antidiag_1q_batched(psi: np.ndarray, d2: np.ndarray, bitpos: int) -> None:
    view = _split_1q(psi, bitpos)
    upper = view[:, :, 0, :].copy()
    view[:, :, 0, :] = d2[:, 0].reshape(-1, 1, 1) * view[:, :, 1, :]
    view[:, :, 1, :] = d2[:, 1].reshape(-1, 1, 1) * upper


def kron_chain(diags: np.ndarray) -> tuple[np.ndarray, int]:
    """Tensor product of per-qubit diagonals (shape (m, 2)).

    Returns the 2**m diagonal and the number of scalar multiplications
    actually performed while building it.
    """
    out = np.asarray(diags[0], dtype=np.complex128)
    mults = 0
    for row in diags[1:]:
        out = np.multiply.outer(out, row).ravel()
        mults += out.size
    return out, mults


def zsum(psi: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Per-row sum of |amplitude|^2 * weights."""
    prob = psi.real**2 + psi.imag**2
    return prob @ weights
