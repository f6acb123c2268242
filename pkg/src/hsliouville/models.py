"""Hamiltonian and operator descriptions, their finite sections, and fixtures.

A model is an immutable rule; ``realize_*`` turns it into the N x N section
on span(e_1..e_N).  Diagonal, element-rule and rank-sum sections nest: the
section at N is the top-left block of the section at N' > N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np

from .core_ops import DensityMatrix, TruncatedMatrix, basis_matrix
from .dsl import Expr, Num, evaluate_grid, parse

__all__ = [
    "ModelError",
    "DiagonalHamiltonian",
    "HermitianHamiltonian",
    "HamiltonianModel",
    "ElementRule",
    "RankTerm",
    "RankSum",
    "Explicit",
    "Gibbs",
    "InverseHamiltonian",
    "OperatorModel",
    "realize_hamiltonian",
    "realize_operator",
    "gibbs_partition",
    "Expectation",
    "Fixture",
    "oracle_catalog",
    "fixture",
    "FIXTURE_NAMES",
]

DEFAULT_REFERENCE_DIM = 256
GIBBS_TAIL_TOL = 1e-12


class ModelError(ValueError):
    """A model cannot be realized at the requested truncation."""


def _expr(src, vars) -> Expr:
    return parse(src, vars) if isinstance(src, str) else src


def _indices(dim: int) -> np.ndarray:
    if dim < 1:
        raise ModelError(f"truncation dimension must be positive, got {dim}")
    return np.arange(1, dim + 1, dtype=np.float64)


# Hamiltonians --------------------------------------------------------------


@dataclass(frozen=True)
class DiagonalHamiltonian:
    """H e_n = lambda(n) e_n."""

    eigenvalues: Expr
    descriptor: str = ""

    @classmethod
    def from_source(cls, source: str, descriptor: str | None = None) -> "DiagonalHamiltonian":
        return cls(parse(source, {"n"}), descriptor if descriptor is not None else f"lambda(n) = {source}")

    def spectrum(self, dim: int) -> np.ndarray:
        lam = evaluate_grid(self.eigenvalues, n=_indices(dim))
        if not np.all(np.isfinite(lam)):
            bad = int(np.argmin(np.isfinite(lam))) + 1
            raise ModelError(f"eigenvalue lambda({bad}) is not finite")
        return lam


@dataclass(frozen=True)
class HermitianHamiltonian:
    """Matrix-element rule a(m, n), symmetrized as (G + G*)/2."""

    a_re: Expr
    a_im: Expr = Num(0.0)
    descriptor: str = ""

    @classmethod
    def from_source(cls, re: str, im: str = "0", descriptor: str | None = None) -> "HermitianHamiltonian":
        return cls(parse(re, {"m", "n"}), parse(im, {"m", "n"}),
                   descriptor if descriptor is not None else f"a(m, n) = {re} + i*({im})")


HamiltonianModel = Union[DiagonalHamiltonian, HermitianHamiltonian]


def _element_grid(a_re: Expr, a_im: Expr, dim: int) -> np.ndarray:
    idx = _indices(dim)
    m, n = idx[:, None], idx[None, :]
    out = evaluate_grid(a_re, m=m, n=n) + 1j * evaluate_grid(a_im, m=m, n=n)
    if not np.all(np.isfinite(out)):
        r, c = np.argwhere(~np.isfinite(out))[0] + 1
        raise ModelError(f"matrix element a({r}, {c}) is not finite")
    return out


def realize_hamiltonian(h: HamiltonianModel, dim: int) -> TruncatedMatrix:
    if isinstance(h, DiagonalHamiltonian):
        return TruncatedMatrix(np.diag(h.spectrum(dim)).astype(np.complex128))
    if isinstance(h, HermitianHamiltonian):
        g = _element_grid(h.a_re, h.a_im, dim)
        return TruncatedMatrix(0.5 * (g + g.conj().T))
    raise TypeError(f"not a Hamiltonian model: {h!r}")


# Operators -----------------------------------------------------------------


@dataclass(frozen=True)
class ElementRule:
    """<e_m, A e_n> = a_re(m, n) + i a_im(m, n)."""

    a_re: Expr
    a_im: Expr = Num(0.0)
    descriptor: str = ""

    @classmethod
    def from_source(cls, re: str, im: str = "0", descriptor: str | None = None) -> "ElementRule":
        return cls(parse(re, {"m", "n"}), parse(im, {"m", "n"}),
                   descriptor if descriptor is not None else f"a(m, n) = {re} + i*({im})")


@dataclass(frozen=True)
class RankTerm:
    """alpha <psi, .> phi with real sequences psi(n), phi(n)."""

    alpha: complex
    psi: Expr
    phi: Expr

    @classmethod
    def from_source(cls, alpha: complex, psi: str, phi: str) -> "RankTerm":
        return cls(complex(alpha), parse(psi, {"n"}), parse(phi, {"n"}))


@dataclass(frozen=True)
class RankSum:
    """Finite sum of rank-one terms; vectors are truncated, not renormalized."""

    terms: tuple
    descriptor: str = ""

    def __post_init__(self):
        if not self.terms:
            raise ModelError("rank sum needs at least one term")
        object.__setattr__(self, "terms", tuple(self.terms))

    def vectors(self, dim: int) -> list[tuple[complex, np.ndarray, np.ndarray]]:
        idx = _indices(dim)
        out = []
        for j, t in enumerate(self.terms, start=1):
            psi = evaluate_grid(t.psi, n=idx)
            phi = evaluate_grid(t.phi, n=idx)
            if not (np.all(np.isfinite(psi)) and np.all(np.isfinite(phi))):
                raise ModelError(f"rank term {j} has a non-finite vector entry")
            out.append((complex(t.alpha), psi, phi))
        return out


@dataclass(frozen=True)
class Explicit:
    """A fixed finite matrix, zero-extended (or cropped) to any truncation."""

    matrix: TruncatedMatrix
    descriptor: str = ""


@dataclass(frozen=True)
class Gibbs:
    """exp(-beta H) / Z over a diagonal Hamiltonian."""

    beta: float
    hamiltonian: DiagonalHamiltonian
    descriptor: str = ""

    def __post_init__(self):
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ModelError(f"Gibbs state needs a positive finite beta, got {self.beta}")


@dataclass(frozen=True)
class InverseHamiltonian:
    """H^{-1} for a diagonal H with strictly positive spectrum."""

    hamiltonian: DiagonalHamiltonian
    descriptor: str = ""


OperatorModel = Union[ElementRule, RankSum, Explicit, Gibbs, InverseHamiltonian]


def gibbs_partition(g: Gibbs, dim: int, shift: float = 0.0) -> np.ndarray:
    """Unnormalized weights exp(-beta (lambda(n) - shift)) for n <= dim."""
    lam = g.hamiltonian.spectrum(dim)
    with np.errstate(over="ignore"):
        w = np.exp(-g.beta * (lam - shift))
    if not np.all(np.isfinite(w)):
        raise ModelError("Gibbs weights overflow; spectrum unbounded below on the probed range")
    return w


def _realize_gibbs(g: Gibbs, dim: int, reference_dim: int | None) -> DensityMatrix:
    ref = max(dim, reference_dim or DEFAULT_REFERENCE_DIM)
    lam_ref = g.hamiltonian.spectrum(ref)
    shift = float(np.min(lam_ref))
    w_ref = gibbs_partition(g, ref, shift)
    z_ref = float(np.sum(w_ref))
    if w_ref[-1] / z_ref >= GIBBS_TAIL_TOL:
        raise ModelError(
            f"partition function not converged at N'={ref}: last relative increment "
            f"{w_ref[-1] / z_ref:.3e} >= {GIBBS_TAIL_TOL:.0e}"
        )
    w = w_ref[:dim]
    z_n = float(np.sum(w))
    tol = max(1.0 - z_n / z_ref, 1e-12)
    return DensityMatrix(np.diag(w / z_n).astype(np.complex128), trace_tolerance=tol)


def realize_operator(a: OperatorModel, dim: int, reference_dim: int | None = None) -> TruncatedMatrix:
    """N x N section of an operator model.

    Gibbs states come back as :class:`DensityMatrix` normalized by the
    truncated partition function Z_N, with ``trace_tolerance = 1 - Z_N/Z_N'``
    where N' is ``reference_dim`` (default 256, the default ladder top).
    """
    if isinstance(a, ElementRule):
        return TruncatedMatrix(_element_grid(a.a_re, a.a_im, dim))
    if isinstance(a, RankSum):
        out = np.zeros((dim, dim), dtype=np.complex128)
        for alpha, psi, phi in a.vectors(dim):
            out += alpha * np.outer(phi, psi.conj())
        return TruncatedMatrix(out)
    if isinstance(a, Explicit):
        return a.matrix.embed(dim)
    if isinstance(a, Gibbs):
        return _realize_gibbs(a, dim, reference_dim)
    if isinstance(a, InverseHamiltonian):
        lam = a.hamiltonian.spectrum(dim)
        if np.min(lam) <= 0:
            bad = int(np.argmin(lam)) + 1
            raise ModelError(f"inverse needs a positive spectrum; lambda({bad}) = {lam[bad - 1]!r}")
        return TruncatedMatrix(np.diag(1.0 / lam).astype(np.complex128))
    raise TypeError(f"not an operator model: {a!r}")


# Fixture catalog -----------------------------------------------------------


@dataclass(frozen=True)
class Expectation:
    """Analytically known outcome for one membership entry."""

    classification: str
    growth: str | None = None
    limits: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class Fixture:
    name: str
    hamiltonian: HamiltonianModel
    operator: OperatorModel
    expected: Mapping[str, Expectation]
    in_d0: bool = False
    notes: str = ""


CONVERGENT = "convergent-evidence"
DIVERGENT = "divergent-evidence"


def gibbs_left_limit(beta: float) -> float:
    """sum_n n^2 e^{-2 beta n} / Z^2 for lambda(n) = n."""
    x = math.exp(-2 * beta)
    z = math.exp(-beta) / (1 - math.exp(-beta))
    return x * (1 + x) / (1 - x) ** 3 / z**2


def _catalog() -> dict[str, Fixture]:
    h = DiagonalHamiltonian.from_source("n")
    inverse = InverseHamiltonian(h, "H^-1 for lambda(n) = n")
    slow = RankSum((RankTerm.from_source(1.0, "1/n", "1/n"),), "rank one, v(n) = 1/n")
    gibbs = Gibbs(1.0, h, "Gibbs state, beta = 1")
    decay = RankSum((RankTerm.from_source(1.0, "exp(-n)", "exp(-n)"),), "rank one, v(n) = exp(-n)")
    identity = InverseHamiltonian(DiagonalHamiltonian.from_source("1"), "identity")
    e12 = Explicit(basis_matrix(2, 1, 2), "matrix unit e_12")
    two_term = RankSum(
        (
            RankTerm.from_source(1.0, "exp(-n)", "n*exp(-n)"),
            RankTerm.from_source(0.5 - 0.25j, "exp(-0.5*n)", "exp(-n^2/8)"),
        ),
        "two-term finite rank",
    )
    left = gibbs_left_limit(1.0)
    all_div = {k: Expectation(DIVERGENT) for k in ("dom_H", "core_D", "core_D0", "dom_H2")}
    all_conv = {k: Expectation(CONVERGENT) for k in ("dom_H", "core_D", "core_D0", "dom_H2")}
    fixtures = [
        Fixture(
            "inverse-hamiltonian", h, inverse,
            {
                "dom_H": Expectation(CONVERGENT, "bounded", {"comm": 0.0}),
                "core_D": Expectation(DIVERGENT, "linear"),
                "core_D0": Expectation(DIVERGENT),
                "dom_H2": Expectation(CONVERGENT),
            },
            notes="[H, H^-1] = 0 but H H^-1 = I is not Hilbert-Schmidt: S_N = N",
        ),
        Fixture(
            "slow-rank-one", h, slow,
            {**all_div, "dom_H": Expectation(DIVERGENT, "linear")},
            notes="comm series 2N H_2(N) - 2 H_1(N)^2 grows like 2 zeta(2) N",
        ),
        Fixture(
            "gibbs", h, gibbs,
            {
                "hilbert_schmidt": Expectation(CONVERGENT),
                "dom_H": Expectation(CONVERGENT, "bounded", {"comm": 0.0}),
                "core_D": Expectation(CONVERGENT, "bounded", {"left": left, "right": left}),
                "dom_H2": Expectation(CONVERGENT),
            },
            notes="left limit x(1+x)/(1-x)^3 / Z^2 with x = exp(-2 beta)",
        ),
        Fixture("exp-decay", h, decay, dict(all_conv), in_d0=True,
                notes="sum n^2 exp(-2n) converges"),
        Fixture(
            "identity", h, identity,
            {"hilbert_schmidt": Expectation(DIVERGENT, "linear"), **all_div},
            notes="the identity is not compact; ||I||_HS^2 = N",
        ),
        Fixture("basis-e12", h, e12, dict(all_conv), in_d0=True, notes="[H, e_12] = -e_12"),
        Fixture("two-term", h, two_term, dict(all_conv), in_d0=True,
                notes="complex coefficients, distinct left and right vectors"),
    ]
    return {f.name: f for f in fixtures}


FIXTURE_NAMES = ("inverse-hamiltonian", "slow-rank-one", "gibbs", "exp-decay", "identity", "basis-e12", "two-term")


def oracle_catalog() -> list[Fixture]:
    """The mandatory fixtures with their analytically known memberships."""
    cat = _catalog()
    return [cat[name] for name in FIXTURE_NAMES]


def fixture(name: str) -> Fixture:
    cat = _catalog()
    try:
        return cat[name]
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; known: {', '.join(FIXTURE_NAMES)}") from None
