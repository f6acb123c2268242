"""Hilbert-Schmidt linear algebra on finite truncations.

A :class:`TruncatedMatrix` is the N x N section ``<e_m, A e_n>`` of an
operator on the first N basis vectors.  Indices are 1-based in all
documentation; storage is an ordinary 0-based numpy array.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ShapeError",
    "StateError",
    "TruncatedMatrix",
    "DensityMatrix",
    "as_truncated",
    "hs_inner",
    "hs_norm",
    "operator_norm",
    "trace_norm",
    "adjoint",
    "finite_rank_project",
    "basis_matrix",
]

HERMITIAN_TOL = 1e-12


class ShapeError(ValueError):
    """Operands have incompatible truncation dimensions."""


class StateError(ValueError):
    """A matrix violates the density-matrix invariants."""


@dataclass(frozen=True, eq=False)
class TruncatedMatrix:
    """Complex N x N section of an operator.

    ``pad_dim`` records the inner dimension used when the matrix came out
    of a product of truncations; it equals ``dim`` for native sections.
    """

    entries: np.ndarray
    pad_dim: int | None = None
    dim: int = field(init=False)

    def __post_init__(self):
        arr = np.array(self.entries, dtype=np.complex128, copy=True)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
            raise ShapeError(f"expected a nonempty square matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("matrix entries must be finite")
        arr.flags.writeable = False
        n = arr.shape[0]
        pad = n if self.pad_dim is None else int(self.pad_dim)
        if pad < n:
            raise ShapeError(f"pad_dim {pad} is smaller than dim {n}")
        object.__setattr__(self, "entries", arr)
        object.__setattr__(self, "dim", n)
        object.__setattr__(self, "pad_dim", pad)

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.entries
        return self.entries.astype(dtype)

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim}, pad_dim={self.pad_dim})"

    def block(self, n: int) -> "TruncatedMatrix":
        """Top-left n x n section."""
        if not 1 <= n <= self.dim:
            raise ShapeError(f"block size {n} outside 1..{self.dim}")
        return TruncatedMatrix(self.entries[:n, :n])

    def embed(self, n: int) -> "TruncatedMatrix":
        """Zero-pad (or crop) to an n x n section."""
        out = np.zeros((n, n), dtype=np.complex128)
        k = min(n, self.dim)
        out[:k, :k] = self.entries[:k, :k]
        return TruncatedMatrix(out)

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return bool(np.max(np.abs(self.entries - self.entries.conj().T)) <= tol)

    def allclose(self, other: "TruncatedMatrix", atol: float = 1e-12) -> bool:
        _check_dims(self, other)
        return bool(np.max(np.abs(self.entries - other.entries)) <= atol)


@dataclass(frozen=True, eq=False)
class DensityMatrix(TruncatedMatrix):
    """Hermitian, positive, unit-trace truncation.

    Renormalized sections of infinite-rank states are only approximately
    normalized; ``trace_tolerance`` carries the slack they were built with
    and bounds both the trace defect and negative eigenvalues.
    """

    trace_tolerance: float = HERMITIAN_TOL

    def __post_init__(self):
        super().__post_init__()
        tol = float(self.trace_tolerance)
        if tol < 0:
            raise StateError("trace_tolerance must be nonnegative")
        object.__setattr__(self, "trace_tolerance", tol)
        if not self.is_hermitian(HERMITIAN_TOL):
            raise StateError("density matrix is not Hermitian within 1e-12")
        herm = 0.5 * (self.entries + self.entries.conj().T)
        lowest = float(np.linalg.eigvalsh(herm)[0])
        if lowest < -tol:
            raise StateError(f"eigenvalue {lowest:.3e} below -{tol:.3e}")
        tr = complex(np.trace(self.entries))
        if abs(tr - 1.0) > tol:
            raise StateError(f"trace {tr.real:.15g} differs from 1 by more than {tol:.3e}")

    @property
    def base(self) -> TruncatedMatrix:
        return TruncatedMatrix(self.entries, pad_dim=self.pad_dim)

    @classmethod
    def from_matrix(cls, a: TruncatedMatrix, trace_tolerance: float = HERMITIAN_TOL) -> "DensityMatrix":
        return cls(a.entries, pad_dim=a.pad_dim, trace_tolerance=trace_tolerance)


def as_truncated(a) -> TruncatedMatrix:
    if isinstance(a, TruncatedMatrix):
        return a
    return TruncatedMatrix(np.asarray(a))


def basis_matrix(dim: int, m: int, n: int) -> TruncatedMatrix:
    """Matrix unit e_{mn} = <e_n, .> e_m (1-based indices)."""
    if not (1 <= m <= dim and 1 <= n <= dim):
        raise ShapeError(f"basis index ({m}, {n}) outside 1..{dim}")
    out = np.zeros((dim, dim), dtype=np.complex128)
    out[m - 1, n - 1] = 1.0
    return TruncatedMatrix(out)


def _check_dims(a: TruncatedMatrix, b: TruncatedMatrix):
    if a.dim != b.dim:
        raise ShapeError(f"dimension mismatch: {a.dim} vs {b.dim}")


def hs_inner(a: TruncatedMatrix, b: TruncatedMatrix) -> complex:
    """<A, B>_HS = sum_{m,n} conj(a_mn) b_mn, antilinear in the first slot."""
    _check_dims(a, b)
    return complex(np.vdot(a.entries, b.entries))


def hs_norm(a: TruncatedMatrix) -> float:
    # Summing the sorted squared moduli makes the result independent of storage
    # order, so ||A*||_HS == ||A||_HS holds bit for bit.
    sq = np.sort(np.abs(a.entries).ravel() ** 2)
    return float(np.sqrt(np.sum(sq)))


def operator_norm(a: TruncatedMatrix) -> float:
    return float(np.linalg.svd(a.entries, compute_uv=False)[0])


def trace_norm(a: TruncatedMatrix) -> float:
    return float(np.sum(np.linalg.svd(a.entries, compute_uv=False)))


def adjoint(a: TruncatedMatrix) -> TruncatedMatrix:
    return TruncatedMatrix(a.entries.conj().T, pad_dim=a.pad_dim)


def finite_rank_project(a: TruncatedMatrix, n: int) -> tuple[TruncatedMatrix, float]:
    """Return ``(P_n A, ||A - P_n A||_HS)``.

    ``P_n`` projects onto span(e_1..e_n), so rows past n are zeroed.  The
    squared tail is the sum of ``||A* e_m||^2`` over the removed rows m > n.
    """
    if not 1 <= n <= a.dim:
        raise ValueError(f"projection rank {n} outside 1..{a.dim}")
    kept = np.array(a.entries)
    kept[n:, :] = 0.0
    tail = hs_norm(TruncatedMatrix(a.entries - kept))
    return TruncatedMatrix(kept, pad_dim=a.pad_dim), tail
