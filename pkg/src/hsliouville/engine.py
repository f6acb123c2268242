"""Propagators, the Liouville superoperator, and state evolution.

Vectorization convention: ``vec`` stacks ROWS (numpy C order), so the rank-one
operator phi psi^* maps to ``kron(phi, conj(psi))``.  Under this convention

    vec(H A) = (H (x) I) vec(A),    vec(A H) = (I (x) H^T) vec(A),

and the Liouvillian is ``H (x) I - I (x) conj(H)`` for Hermitian H, while the
conjugation A -> U A U^* is ``U (x) conj(U)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .core_ops import DensityMatrix, ShapeError, StateError, TruncatedMatrix, hs_norm
from .models import DiagonalHamiltonian, HamiltonianModel, realize_hamiltonian

log = logging.getLogger(__name__)

__all__ = [
    "ResourceBudgetError",
    "PreflightError",
    "Propagator",
    "VectorizedLiouvillian",
    "EvolutionTrajectory",
    "StoneResult",
    "CourbageResult",
    "METHODS",
    "default_pad",
    "vec",
    "unvec",
    "commutator_apply",
    "liouvillian_squared_apply",
    "superpropagator_apply",
    "vectorized_liouvillian",
    "evolve",
    "stone_probe",
    "courbage_probe",
]

METHODS = ("spectral-exact", "vectorized-expm", "rk4")
DEFAULT_MAX_VEC_DIM = 96


class ResourceBudgetError(RuntimeError):
    """A requested computation exceeds the configured memory budget."""


class PreflightError(RuntimeError):
    """The initial operator shows divergent evidence for Dom H."""

    def __init__(self, message: str, verdict=None):
        super().__init__(message)
        self.verdict = verdict


def _is_diagonal(h) -> bool:
    return isinstance(h, DiagonalHamiltonian)


def default_pad(h: HamiltonianModel, dim: int) -> int:
    # diagonal commutators are edge-exact; other products use twice the size
    return dim if _is_diagonal(h) else 2 * dim


def _differences(lam: np.ndarray) -> np.ndarray:
    return lam[:, None] - lam[None, :]


def vec(a: TruncatedMatrix) -> np.ndarray:
    return np.asarray(a.entries).reshape(-1)


def unvec(v: np.ndarray, dim: int | None = None) -> TruncatedMatrix:
    n = dim if dim is not None else math.isqrt(v.size)
    if n * n != v.size:
        raise ShapeError(f"vector of length {v.size} is not a vectorized square matrix")
    return TruncatedMatrix(np.asarray(v).reshape(n, n))


# Propagators ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Propagator:
    """U(t) = V diag(exp(-i lambda t)) V^* for a truncated Hamiltonian."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    time: float = 0.0
    diagonal: bool = False

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    @classmethod
    def from_hamiltonian(cls, h: HamiltonianModel, dim: int, time: float = 0.0) -> "Propagator":
        if _is_diagonal(h):
            return cls(h.spectrum(dim), np.eye(dim, dtype=np.complex128), float(time), diagonal=True)
        lam, v = np.linalg.eigh(realize_hamiltonian(h, dim).entries)
        return cls(lam, v, float(time))

    def at(self, t: float) -> "Propagator":
        return Propagator(self.eigenvalues, self.eigenvectors, float(t), self.diagonal)

    def matrix(self) -> TruncatedMatrix:
        phases = np.exp(-1j * self.eigenvalues * self.time)
        if self.diagonal:
            return TruncatedMatrix(np.diag(phases))
        v = self.eigenvectors
        return TruncatedMatrix((v * phases) @ v.conj().T)

    def to_eigenbasis(self, a: np.ndarray) -> np.ndarray:
        if self.diagonal:
            return a
        v = self.eigenvectors
        return v.conj().T @ a @ v

    def from_eigenbasis(self, a: np.ndarray) -> np.ndarray:
        if self.diagonal:
            return a
        v = self.eigenvectors
        return v @ a @ v.conj().T


def _same_kind(template: TruncatedMatrix, entries: np.ndarray, pad_dim: int | None = None) -> TruncatedMatrix:
    pad = template.pad_dim if pad_dim is None else pad_dim
    if isinstance(template, DensityMatrix):
        return DensityMatrix(entries, pad_dim=pad, trace_tolerance=template.trace_tolerance)
    return TruncatedMatrix(entries, pad_dim=pad)


def superpropagator_apply(p: Propagator, a: TruncatedMatrix) -> TruncatedMatrix:
    """U(t) A U(t)^*; density matrices stay density matrices."""
    if p.dim != a.dim:
        raise ShapeError(f"propagator dim {p.dim} vs operator dim {a.dim}")
    if p.time == 0.0:
        return _same_kind(a, a.entries)
    phase = np.exp(-1j * _differences(p.eigenvalues) * p.time)
    out = p.from_eigenbasis(phase * p.to_eigenbasis(a.entries))
    return _same_kind(a, out)


# Commutators ---------------------------------------------------------------


def _commutator(hm: np.ndarray, am: np.ndarray) -> np.ndarray:
    return hm @ am - am @ hm


def commutator_apply(h: HamiltonianModel, a: TruncatedMatrix, pad: int | None = None) -> TruncatedMatrix:
    """[H, A] on the first a.dim basis vectors.

    The product is formed at inner dimension ``pad`` with A zero-padded; for
    a diagonal H the entry (m, n) is (lambda_m - lambda_n) a_mn and no padding
    is needed.
    """
    n = a.dim
    m = default_pad(h, n) if pad is None else int(pad)
    if m < n:
        raise ShapeError(f"pad {m} smaller than dim {n}")
    if _is_diagonal(h):
        lam = h.spectrum(n)
        return TruncatedMatrix(_differences(lam) * a.entries, pad_dim=n)
    hm = realize_hamiltonian(h, m).entries
    q = _commutator(hm, a.embed(m).entries)
    return TruncatedMatrix(q[:n, :n], pad_dim=m)


def liouvillian_squared_apply(h: HamiltonianModel, a: TruncatedMatrix, pad: int | None = None) -> TruncatedMatrix:
    """[H, [H, A]] with both commutators at a shared inner dimension."""
    n = a.dim
    m = default_pad(h, n) if pad is None else int(pad)
    if m < n:
        raise ShapeError(f"pad {m} smaller than dim {n}")
    if _is_diagonal(h):
        lam = h.spectrum(n)
        return TruncatedMatrix(_differences(lam) ** 2 * a.entries, pad_dim=n)
    hm = realize_hamiltonian(h, m).entries
    q = _commutator(hm, _commutator(hm, a.embed(m).entries))
    return TruncatedMatrix(q[:n, :n], pad_dim=m)


# Vectorized form -----------------------------------------------------------


def _check_budget(dim: int, max_dim: int | None, budget_mb: float | None):
    need_mb = 16.0 * dim**4 / 2**20
    if budget_mb is not None:
        if need_mb > budget_mb:
            raise ResourceBudgetError(
                f"vectorized Liouvillian at N={dim} needs {need_mb:.1f} MB, budget is {budget_mb:.1f} MB"
            )
    elif dim > (max_dim or DEFAULT_MAX_VEC_DIM):
        raise ResourceBudgetError(
            f"vectorized Liouvillian limited to N <= {max_dim or DEFAULT_MAX_VEC_DIM}, requested N={dim}"
        )


@dataclass(frozen=True, eq=False)
class VectorizedLiouvillian:
    """N^2 x N^2 matrix H (x) I - I (x) conj(H) acting on row-stacked operators."""

    dim: int
    matrix: np.ndarray
    _spectrum: list = field(default_factory=list, repr=False)

    def apply(self, a: TruncatedMatrix) -> TruncatedMatrix:
        if a.dim != self.dim:
            raise ShapeError(f"Liouvillian dim {self.dim} vs operator dim {a.dim}")
        return unvec(self.matrix @ vec(a), self.dim)

    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        if not self._spectrum:
            self._spectrum.extend(np.linalg.eigh(self.matrix))
        return self._spectrum[0], self._spectrum[1]

    def eigenvalues(self) -> np.ndarray:
        return self.eigh()[0]

    def propagate(self, a: TruncatedMatrix, t: float) -> TruncatedMatrix:
        """exp(-i t L) vec(A) through the Hermitian eigendecomposition of L."""
        w, v = self.eigh()
        coeff = v.conj().T @ vec(a)
        return unvec(v @ (np.exp(-1j * w * t) * coeff), self.dim)


def vectorized_liouvillian(h: HamiltonianModel, dim: int, max_dim: int | None = None,
                           budget_mb: float | None = None) -> VectorizedLiouvillian:
    _check_budget(dim, max_dim, budget_mb)
    hm = realize_hamiltonian(h, dim).entries
    eye = np.eye(dim, dtype=np.complex128)
    mat = np.kron(hm, eye) - np.kron(eye, hm.conj())
    return VectorizedLiouvillian(dim, mat)


# Evolution -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EvolutionTrajectory:
    times: np.ndarray
    states: tuple
    method: str
    step: float | None
    hs_drift: np.ndarray
    trace_drift: np.ndarray
    invariant_violations: int = 0

    @property
    def label(self) -> str:
        return f"rk4(h={self.step:g})" if self.method == "rk4" else self.method


def _rk4_rhs(h: HamiltonianModel, dim: int):
    if _is_diagonal(h):
        d = _differences(h.spectrum(dim))
        return lambda a: -1j * d * a
    hm = realize_hamiltonian(h, dim).entries
    return lambda a: -1j * _commutator(hm, a)


def _rk4_advance(f, a: np.ndarray, span: float, step: float) -> np.ndarray:
    nsteps = max(1, math.ceil(span / step - 1e-9))
    dt = span / nsteps
    for _ in range(nsteps):
        k1 = f(a)
        k2 = f(a + 0.5 * dt * k1)
        k3 = f(a + 0.5 * dt * k2)
        k4 = f(a + dt * k3)
        a = a + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return a


def preflight(h: HamiltonianModel, a0: TruncatedMatrix, model=None, ladder=None, tolerances=None):
    """Dom-H evidence for an initial operator, or None when undecidable.

    With an operator ``model`` the full Dom-H diagnostics run on its ladder;
    for a bare matrix the comm series runs over its own leading sections.
    """
    from . import diagnostics as dg

    tol = tolerances or dg.Tolerances()
    if model is not None:
        lad = ladder or dg.TruncationLadder()
        report = dg.diagnose(h, model, lad, tol, include_h2=False, include_eigenbasis=False)
        return report.dom_H
    dims = sorted({max(1, round(a0.dim * f)) for f in (0.125, 0.25, 0.375, 0.5, 0.75, 1.0)})
    if len(dims) < 4:
        return None
    lad = dg.TruncationLadder(tuple(dims), pad_factor=1.0)
    series = dg.matrix_partial_sums(h, a0, "comm", lad)
    return dg.classify(series, tol.conv_tol, tol.fit_tol)


def evolve(h: HamiltonianModel, a0: TruncatedMatrix, times, method: str = "spectral-exact",
           step: float | None = None, force: bool = False, model=None, ladder=None,
           tolerances=None, max_dim: int | None = None, budget_mb: float | None = None) -> EvolutionTrajectory:
    """Solve i dA/dt = [H, A] from A(0) = a0 at the requested times.

    ``spectral-exact`` conjugates by U(t) directly and is the reference;
    ``vectorized-expm`` exponentiates the N^2 x N^2 Liouvillian; ``rk4`` is
    fixed-step classical Runge-Kutta and refuses (unless ``force``) initial
    operators with divergent Dom-H evidence.
    """
    times = np.asarray(times, dtype=np.float64)
    if times.ndim != 1 or times.size == 0 or times[0] != 0.0:
        raise ValueError("times must be a nonempty vector starting at 0")
    if np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")
    if method == "rk4":
        if step is None or not step > 0:
            raise ValueError(f"rk4 needs a positive step, got {step!r}")
        if not force:
            verdict = preflight(h, a0, model=model, ladder=ladder, tolerances=tolerances)
            if verdict is not None and verdict.classification == "divergent-evidence":
                raise PreflightError(
                    "initial operator shows divergent evidence for Dom H "
                    f"({verdict.summary()}); rerun with force to override",
                    verdict,
                )

    n = a0.dim
    raw = [np.array(a0.entries)]
    if method == "spectral-exact":
        p = Propagator.from_hamiltonian(h, n)
        raw += [superpropagator_apply(p.at(t), TruncatedMatrix(a0.entries)).entries for t in times[1:]]
    elif method == "vectorized-expm":
        lv = vectorized_liouvillian(h, n, max_dim=max_dim, budget_mb=budget_mb)
        raw += [lv.propagate(a0, t).entries for t in times[1:]]
    else:
        f = _rk4_rhs(h, n)
        cur = raw[0]
        for t0, t1 in zip(times[:-1], times[1:]):
            cur = _rk4_advance(f, cur, t1 - t0, step)
            raw.append(cur)

    states = [a0]
    violations = 0
    for entries in raw[1:]:
        if isinstance(a0, DensityMatrix):
            try:
                states.append(DensityMatrix(entries, trace_tolerance=a0.trace_tolerance))
                continue
            except StateError as exc:
                violations += 1
                log.warning("evolved state left the density-matrix set: %s", exc)
        states.append(TruncatedMatrix(entries))
    norm0 = hs_norm(a0)
    tr0 = complex(np.trace(a0.entries))
    hs_drift = np.array([abs(hs_norm(s) - norm0) for s in states])
    trace_drift = np.array([abs(complex(np.trace(s.entries)) - tr0) for s in states])
    return EvolutionTrajectory(times, tuple(states), method, step if method == "rk4" else None,
                               hs_drift, trace_drift, violations)


# Probes --------------------------------------------------------------------


def _loglog_slope(t: np.ndarray, r: np.ndarray) -> float:
    ok = r > 0
    if np.count_nonzero(ok) < 2:
        return float("nan")
    slope, _ = np.polyfit(np.log(t[ok]), np.log(r[ok]), 1)
    return float(slope)


@dataclass(frozen=True)
class StoneResult:
    times: tuple
    residuals: tuple
    slope: float  # nan when fewer than two residuals are nonzero


def stone_probe(h: HamiltonianModel, a: TruncatedMatrix, t_ladder) -> StoneResult:
    """Residual of the difference quotient i(U(t)A - A)/t against [H, A]."""
    ts = np.asarray(t_ladder, dtype=np.float64)
    if np.any(ts <= 0):
        raise ValueError("probe times must be positive")
    p = Propagator.from_hamiltonian(h, a.dim)
    target = commutator_apply(h, a).entries
    res = []
    for t in ts:
        quotient = 1j * (superpropagator_apply(p.at(t), a).entries - a.entries) / t
        res.append(hs_norm(TruncatedMatrix(quotient - target)))
    res = np.array(res)
    return StoneResult(tuple(ts.tolist()), tuple(res.tolist()), _loglog_slope(ts, res))


@dataclass(frozen=True)
class CourbageResult:
    times: tuple
    ratios: tuple
    max_ratio: float
    bound: float  # ||[H, A]||_HS
    violated: bool


def courbage_probe(h: HamiltonianModel, a: TruncatedMatrix, t_grid, slack: float = 1e-8) -> CourbageResult:
    """Check ||U(t)A - A||_HS <= |t| ||[H, A]||_HS on a time grid.

    Violations are reported rather than raised; at finite truncation they
    point at truncation bias.
    """
    ts = np.asarray(t_grid, dtype=np.float64)
    p = Propagator.from_hamiltonian(h, a.dim)
    bound = hs_norm(commutator_apply(h, a))
    ratios = []
    for t in ts:
        lhs = hs_norm(TruncatedMatrix(superpropagator_apply(p.at(t), a).entries - a.entries))
        if lhs == 0.0:
            ratios.append(0.0)
        elif bound == 0.0 or t == 0.0:
            ratios.append(float("inf"))
        else:
            ratios.append(lhs / (abs(t) * bound))
    top = max(ratios) if ratios else 0.0
    return CourbageResult(tuple(ts.tolist()), tuple(ratios), top, bound, top > 1.0 + slack)
