"""Partial-sum ladders and membership evidence for Dom H, its cores and Dom H^2.

Every diagnostic is a partial sum ``S_N = sum_{n<=N} ||Q e_n||^2`` over a
truncation ladder, where Q is one of

    hs           A
    comm         [H, A]
    left         H A
    right        H A^*
    double-comm  [H, [H, A]]
    column(j)    single column  ||H A e_j||^2      (rows m <= N)
    comm-column(j)              ||H [H, A] e_j||^2 (rows m <= N)

Products are formed at inner dimension ceil(pad_factor * N) from sections of
the models realized once at the padded ladder top, then restricted to the
leading N x N block.  For a diagonal H this restriction is edge-exact, so the
comm series is the box sum over m, n <= N of (lambda_m - lambda_n)^2 |a_mn|^2.

A series is classified as convergent, divergent, or inconclusive evidence.
It is evidence, not proof: a desk-scale ladder cannot separate logarithmic
divergence from slow convergence, and the classifier says so.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

import numpy as np

from .core_ops import TruncatedMatrix
from .models import (
    DiagonalHamiltonian,
    Explicit,
    HamiltonianModel,
    OperatorModel,
    RankSum,
    realize_hamiltonian,
    realize_operator,
)

log = logging.getLogger(__name__)

__all__ = [
    "Classification",
    "TruncationLadder",
    "Tolerances",
    "PartialSumSeries",
    "ModelFit",
    "DomainVerdict",
    "Membership",
    "MembershipReport",
    "partial_sums",
    "matrix_partial_sums",
    "classify",
    "diagnose",
    "probe_columns",
    "DEFAULT_DIMS",
]

DEFAULT_DIMS = (16, 24, 32, 48, 64, 96, 128, 192, 256)
MAX_LADDER_DIM = 4096
DIP_TOL = 1e-10
_EPS = 1e-300

_BOUNDED_GAMMAS = np.geomspace(0.25, 8.0, 61)
_POWER_GAMMAS = np.linspace(0.05, 1.0, 20)


class Classification(str, Enum):
    CONVERGENT = "convergent-evidence"
    DIVERGENT = "divergent-evidence"
    INCONCLUSIVE = "inconclusive"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class TruncationLadder:
    dims: tuple = DEFAULT_DIMS
    pad_factor: float = 2.0

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if len(dims) < 4:
            raise ValueError(f"ladder needs at least 4 dimensions, got {len(dims)}")
        if dims[0] < 1 or any(b <= a for a, b in zip(dims, dims[1:])):
            raise ValueError(f"ladder dimensions must be positive and strictly increasing: {dims}")
        if not self.pad_factor >= 1.0:
            raise ValueError(f"pad_factor must be >= 1, got {self.pad_factor}")
        if self.padded_top > MAX_LADDER_DIM:
            raise ValueError(f"padded ladder top {self.padded_top} exceeds the budget {MAX_LADDER_DIM}")

    def pad(self, n: int) -> int:
        return max(n, math.ceil(self.pad_factor * n - 1e-9))

    @property
    def top(self) -> int:
        return self.dims[-1]

    @property
    def padded_top(self) -> int:
        return self.pad(self.dims[-1])


@dataclass(frozen=True)
class Tolerances:
    conv_tol: float = 1e-6
    fit_tol: float = 5e-2
    tie_ratio: float = 1.25


@dataclass(frozen=True, eq=False)
class PartialSumSeries:
    ladder: TruncationLadder
    values: tuple
    quantity: str
    pads: tuple = ()
    basis: str = "specification"
    max_dip: float = 0.0  # largest relative decrease between consecutive points

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) != len(self.ladder.dims):
            raise ValueError("series length does not match the ladder")
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"series {self.quantity} has non-finite values")
        object.__setattr__(self, "values", vals)
        if not self.pads:
            object.__setattr__(self, "pads", self.ladder.dims)

    @property
    def dims(self) -> tuple:
        return self.ladder.dims

    def to_dict(self) -> dict:
        return {"quantity": self.quantity, "basis": self.basis, "dims": list(self.dims),
                "pads": list(self.pads), "values": list(self.values), "max_dip": self.max_dip}


@dataclass(frozen=True)
class ModelFit:
    model: str  # bounded | log | power | linear
    params: Mapping[str, float]
    residual: float

    @property
    def label(self) -> str:
        if self.model == "power":
            g = self.params["gamma"]
            return "linear" if abs(g - 1.0) < 1e-12 else f"power({g:.3g})"
        return self.model

    def to_dict(self) -> dict:
        return {"model": self.model, "label": self.label, "params": dict(self.params), "residual": self.residual}


@dataclass(frozen=True, eq=False)
class DomainVerdict:
    classification: Classification
    limit_estimate: float | None
    growth_model: str
    fit_residual: float
    series: PartialSumSeries
    last_increment: float = 0.0
    fit_params: Mapping[str, float] = field(default_factory=dict)
    fits: tuple = ()

    def summary(self) -> str:
        head = f"{self.series.quantity}: {self.classification.value}, growth {self.growth_model}"
        if self.limit_estimate is not None:
            head += f", limit {self.limit_estimate:.6g}"
        return f"{head}, S_N = {self.series.values[-1]:.6g} at N = {self.series.dims[-1]}"

    def to_dict(self) -> dict:
        return {
            "quantity": self.series.quantity,
            "basis": self.series.basis,
            "classification": self.classification.value,
            "growth_model": self.growth_model,
            "limit_estimate": self.limit_estimate,
            "fit_residual": self.fit_residual,
            "last_relative_increment": self.last_increment,
            "fit_params": dict(self.fit_params),
            "fits": [f.to_dict() for f in self.fits],
            "series": self.series.to_dict(),
        }


# Realized sections ---------------------------------------------------------


class _Sections:
    """Models realized once at the padded ladder top, sliced per ladder point."""

    def __init__(self, h: HamiltonianModel, a: OperatorModel | TruncatedMatrix, ladder: TruncationLadder):
        self.ladder = ladder
        self.diagonal = isinstance(h, DiagonalHamiltonian)
        top = ladder.padded_top
        if self.diagonal:
            self.lam = h.spectrum(top)
        else:
            self.h = realize_hamiltonian(h, top).entries
        if isinstance(a, TruncatedMatrix):
            self.a = a.embed(top).entries
        else:
            self.a = realize_operator(a, top, reference_dim=top).entries
        self._cache: dict = {}

    def pad(self, n: int) -> int:
        return n if self.diagonal else self.ladder.pad(n)

    def _products(self, m: int):
        if m not in self._cache:
            hm, am = self.h[:m, :m], self.a[:m, :m]
            ha = hm @ am
            ah = am @ hm
            q = ha - ah
            self._cache = {m: {"H": hm, "A": am, "HA": ha, "Q": q}}
        return self._cache[m]

    def _comm_product(self, m: int, key: str):
        p = self._products(m)
        if key not in p:
            hm, q = p["H"], p["Q"]
            if key == "HQ":
                p[key] = hm @ q
            elif key == "QQ":
                p[key] = p.get("HQ", hm @ q) - q @ hm
            elif key == "HAs":
                p[key] = hm @ p["A"].conj().T
        return p[key]

    def value(self, quantity: str, n: int) -> float:
        if self.diagonal:
            return self._diag_value(quantity, n)
        m = self.pad(n)
        if quantity == "hs":
            blk = self.a[:n, :n]
        elif quantity == "comm":
            blk = self._products(m)["Q"][:n, :n]
        elif quantity == "left":
            blk = self._products(m)["HA"][:n, :n]
        elif quantity == "right":
            blk = self._comm_product(m, "HAs")[:n, :n]
        elif quantity == "double-comm":
            blk = self._comm_product(m, "QQ")[:n, :n]
        elif quantity.startswith("column("):
            j = _column_index(quantity)
            blk = self._products(m)["HA"][:n, j - 1]
        elif quantity.startswith("comm-column("):
            j = _column_index(quantity)
            blk = self._comm_product(m, "HQ")[:n, j - 1]
        else:
            raise ValueError(f"unknown quantity {quantity!r}")
        return float(np.sum(np.abs(blk) ** 2))

    def _diag_weights(self, quantity: str, n: int) -> np.ndarray:
        lam = self.lam[:n]
        a2 = np.abs(self.a[:n, :n]) ** 2
        d = lam[:, None] - lam[None, :]
        if quantity == "hs":
            return a2
        if quantity == "comm":
            return d**2 * a2
        if quantity == "left":
            return lam[:, None] ** 2 * a2
        if quantity == "right":
            return lam[None, :] ** 2 * a2
        if quantity == "double-comm":
            return d**4 * a2
        w = np.zeros_like(a2)
        if quantity.startswith("column("):
            j = _column_index(quantity)
            w[:, j - 1] = lam**2 * a2[:, j - 1]
            return w
        if quantity.startswith("comm-column("):
            j = _column_index(quantity)
            w[:, j - 1] = lam**2 * d[:, j - 1] ** 2 * a2[:, j - 1]
            return w
        raise ValueError(f"unknown quantity {quantity!r}")

    def _diag_value(self, quantity: str, n: int) -> float:
        return float(np.sum(self._diag_weights(quantity, n)))

    def diag_series(self, quantity: str) -> list[float]:
        """Box sums accumulated shell by shell, so the series is monotone bit for bit."""
        w = self._diag_weights(quantity, self.ladder.top)
        out, total, prev = [], 0.0, 0
        for n in self.ladder.dims:
            total += float(np.sum(w[prev:n, :n])) + float(np.sum(w[:prev, prev:n]))
            out.append(total)
            prev = n
        return out

    def eigenbasis_comm(self) -> list[float]:
        """comm series with A rotated into the eigenbasis of the top section of H."""
        lam, v = np.linalg.eigh(self.h)
        rot = v.conj().T @ self.a @ v
        out = []
        for n in self.ladder.dims:
            d = lam[:n, None] - lam[None, :n]
            out.append(float(np.sum(d**2 * np.abs(rot[:n, :n]) ** 2)))
        return out

    def vector_sums(self, vec: np.ndarray, energy: bool) -> list[float]:
        out = []
        for n in self.ladder.dims:
            if not energy:
                out.append(float(np.sum(np.abs(vec[:n]) ** 2)))
            elif self.diagonal:
                out.append(float(np.sum((self.lam[:n] * np.abs(vec[:n])) ** 2)))
            else:
                m = self.pad(n)
                out.append(float(np.sum(np.abs(self.h[:n, :m] @ vec[:m]) ** 2)))
        return out


def _column_index(quantity: str) -> int:
    return int(quantity[quantity.index("(") + 1 : -1])


def _make_series(ladder, values, quantity, pads, basis="specification", exact=True) -> PartialSumSeries:
    vals = np.asarray(values, dtype=np.float64)
    dip = 0.0
    for prev, cur in zip(vals[:-1], vals[1:]):
        if cur < prev:
            dip = max(dip, (prev - cur) / max(abs(prev), _EPS))
    if dip > (0.0 if exact else DIP_TOL) and dip > 1e-15:
        log.warning("series %s decreases by %.3e relative along the ladder", quantity, dip)
    return PartialSumSeries(ladder, tuple(vals.tolist()), quantity, tuple(pads), basis, dip)


def _series(sec: _Sections, quantity: str) -> PartialSumSeries:
    dims = sec.ladder.dims
    values = sec.diag_series(quantity) if sec.diagonal else [sec.value(quantity, n) for n in dims]
    pads = [sec.pad(n) for n in dims]
    return _make_series(sec.ladder, values, quantity, pads, exact=sec.diagonal)


def partial_sums(h: HamiltonianModel, a: OperatorModel, quantity: str,
                 ladder: TruncationLadder | None = None) -> PartialSumSeries:
    """Partial sums of ||Q e_n||^2 for one quantity over the ladder."""
    ladder = ladder or TruncationLadder()
    return _series(_Sections(h, a, ladder), quantity)


def matrix_partial_sums(h: HamiltonianModel, a: TruncatedMatrix, quantity: str,
                        ladder: TruncationLadder) -> PartialSumSeries:
    """Partial sums for a fixed finite matrix, zero-extended past its size."""
    return _series(_Sections(h, a, ladder), quantity)


# Classification ------------------------------------------------------------


def _rel_residual(fit: np.ndarray, y: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(y))), _EPS)
    return float(np.sqrt(np.mean((fit - y) ** 2)) / scale)


def _fit_bounded(x, y) -> ModelFit:
    best = None
    for g in _BOUNDED_GAMMAS:
        design = np.column_stack([np.ones_like(x), -(x ** -g)])
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        res = _rel_residual(design @ coef, y)
        if best is None or res < best.residual:
            best = ModelFit("bounded", {"c": float(coef[0]), "b": float(coef[1]), "gamma": float(g)}, res)
    return best


def _fit_log(x, y) -> ModelFit:
    design = np.column_stack([np.ones_like(x), np.log(x)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return ModelFit("log", {"a": float(coef[0]), "b": float(coef[1])}, _rel_residual(design @ coef, y))


def _fit_power(x, y, gammas) -> ModelFit:
    best = None
    for g in gammas:
        basis = x**g
        b = float(basis @ y / (basis @ basis))
        res = _rel_residual(b * basis, y)
        if best is None or res < best.residual:
            best = ModelFit("power", {"b": b, "gamma": float(g)}, res)
    return best


def _fit_linear(x, y) -> ModelFit:
    b = float(x @ y / (x @ x))
    return ModelFit("linear", {"b": b}, _rel_residual(b * x, y))


def _fit_loglog_power(x, y) -> ModelFit:
    gamma, logb = np.polyfit(np.log(x), np.log(y), 1)
    b = float(np.exp(logb))
    return ModelFit("power", {"b": b, "gamma": float(gamma)}, _rel_residual(b * x**gamma, y))


def classify(series: PartialSumSeries, conv_tol: float = 1e-6, fit_tol: float = 5e-2,
             tie_ratio: float = 1.25) -> DomainVerdict:
    """Classify a partial-sum series as convergent, divergent or inconclusive.

    Fits ``c - b N^-g`` (bounded), ``a + b log N``, ``b N^g`` with g in (0, 1]
    and ``b N`` by least squares on the last max(4, k - 2) points; residuals are
    RMS errors relative to the largest value in the window.

    * all-zero series: convergent with limit 0, no fit;
    * last relative increment below ``conv_tol``: convergent;
    * S_N / N nondecreasing over the window: divergent (at least linear);
    * otherwise divergent only if the best divergent model fits within
      ``fit_tol`` and beats the bounded model by more than ``tie_ratio``;
    * anything else is inconclusive.
    """
    vals = np.asarray(series.values, dtype=np.float64)
    dims = np.asarray(series.dims, dtype=np.float64)
    k = len(vals)
    if k < 4:
        raise ValueError("classification needs at least 4 ladder points")
    if np.all(vals == 0.0):
        return DomainVerdict(Classification.CONVERGENT, 0.0, "bounded", 0.0, series, 0.0, {"c": 0.0})

    w = max(4, k - 2)
    x, y = dims[-w:], vals[-w:]
    incr = float((vals[-1] - vals[-2]) / max(abs(vals[-1]), _EPS))
    bounded = _fit_bounded(x, y)
    fits = [bounded, _fit_log(x, y), _fit_power(x, y, _POWER_GAMMAS), _fit_linear(x, y)]

    if incr < conv_tol:
        limit = bounded.params["c"] if bounded.residual <= fit_tol else float(vals[-1])
        return DomainVerdict(Classification.CONVERGENT, float(limit), "bounded", bounded.residual,
                             series, incr, dict(bounded.params), tuple(fits))

    linear = fits[3]
    ratio = y / x
    if np.all(y > 0) and np.all(np.diff(ratio) >= -1e-12 * ratio[1:]):
        # S_N >= c N with c > 0 along the whole window
        chosen = linear if linear.residual < fit_tol else _fit_loglog_power(x, y)
        fits.append(chosen) if chosen is not linear else None
        if chosen.residual < fit_tol:
            return DomainVerdict(Classification.DIVERGENT, None, chosen.label, chosen.residual,
                                 series, incr, dict(chosen.params), tuple(fits))

    divergent = min(fits[1:4], key=lambda f: (f.residual, f.model != "linear"))
    if divergent.residual < fit_tol and bounded.residual > tie_ratio * divergent.residual:
        return DomainVerdict(Classification.DIVERGENT, None, divergent.label, divergent.residual,
                             series, incr, dict(divergent.params), tuple(fits))

    best = min(fits[:4], key=lambda f: f.residual)
    limit = bounded.params["c"] if best is bounded else None
    return DomainVerdict(Classification.INCONCLUSIVE, limit, best.label, best.residual,
                         series, incr, dict(best.params), tuple(fits))


# Membership ----------------------------------------------------------------


_RANK = {Classification.CONVERGENT: 0, Classification.INCONCLUSIVE: 1, Classification.DIVERGENT: 2}


def _combine(classes) -> Classification:
    classes = list(classes)
    if any(c is Classification.DIVERGENT for c in classes):
        return Classification.DIVERGENT
    if classes and all(c is Classification.CONVERGENT for c in classes):
        return Classification.CONVERGENT
    return Classification.INCONCLUSIVE


def _worst(verdicts) -> DomainVerdict:
    return max(verdicts, key=lambda v: _RANK[v.classification])


@dataclass(frozen=True, eq=False)
class Membership:
    classification: Classification
    components: Mapping[str, DomainVerdict]
    notes: tuple = ()

    def to_dict(self) -> dict:
        return {"classification": self.classification.value,
                "components": {k: v.to_dict() for k, v in self.components.items()},
                "notes": list(self.notes)}

    def summary(self) -> str:
        parts = [v.summary() for v in self.components.values()
                 if v.classification is self.classification] or list(self.notes)
        return f"{self.classification.value}: " + "; ".join(parts)

    def with_divergence(self, note: str) -> "Membership":
        extra = [note]
        if self.classification is Classification.CONVERGENT:
            extra.append("own series looked convergent; overridden by the enclosing set")
        return Membership(Classification.DIVERGENT, self.components, self.notes + tuple(extra))


SET_NAMES = ("hilbert_schmidt", "invariance", "dom_H", "core_D", "core_D0", "dom_H2")


@dataclass(frozen=True, eq=False)
class MembershipReport:
    hamiltonian: str
    operator: str
    ladder: TruncationLadder
    tolerances: Tolerances
    hilbert_schmidt: Membership
    invariance: Membership
    dom_H: Membership
    core_D: Membership
    core_D0: Membership
    dom_H2: Membership | None
    caveats: tuple = ()

    def memberships(self) -> dict:
        return {name: getattr(self, name) for name in SET_NAMES if getattr(self, name) is not None}

    def all_series(self) -> list[PartialSumSeries]:
        seen, out = set(), []
        for m in self.memberships().values():
            for v in m.components.values():
                key = (v.series.quantity, v.series.basis)
                if key not in seen:
                    seen.add(key)
                    out.append(v.series)
        return out

    def to_dict(self) -> dict:
        return {
            "hamiltonian": self.hamiltonian,
            "operator": self.operator,
            "ladder": {"dims": list(self.ladder.dims), "pad_factor": self.ladder.pad_factor},
            "tolerances": {"conv_tol": self.tolerances.conv_tol, "fit_tol": self.tolerances.fit_tol,
                           "tie_ratio": self.tolerances.tie_ratio},
            "memberships": {k: m.to_dict() for k, m in self.memberships().items()},
            "caveats": list(self.caveats),
        }


def probe_columns(n1: int, exhaustive: bool = False) -> tuple:
    """Columns 1, 2, 4, 8, ... up to the first ladder dimension."""
    if exhaustive:
        return tuple(range(1, n1 + 1))
    cols, j = [], 1
    while j <= n1:
        cols.append(j)
        j *= 2
    return tuple(cols)


def _describe(model) -> str:
    return getattr(model, "descriptor", "") or type(model).__name__


def diagnose(h: HamiltonianModel, a: OperatorModel, ladder: TruncationLadder | None = None,
             tolerances: Tolerances | None = None, include_h2: bool = True,
             include_eigenbasis: bool = True, exhaustive_columns: bool = False) -> MembershipReport:
    """Run every diagnostic series for (H, A) and assemble the membership report."""
    ladder = ladder or TruncationLadder()
    tol = tolerances or Tolerances()
    sec = _Sections(h, a, ladder)

    def verdict(quantity: str) -> DomainVerdict:
        return classify(_series(sec, quantity), tol.conv_tol, tol.fit_tol, tol.tie_ratio)

    def membership(components: dict, notes=()) -> Membership:
        return Membership(_combine(v.classification for v in components.values()), components, tuple(notes))

    caveats = []
    hs = membership({"hs": verdict("hs")})

    cols = probe_columns(ladder.dims[0], exhaustive_columns)
    col_verdicts = {f"column({j})": verdict(f"column({j})") for j in cols}
    invariance = Membership(_worst(col_verdicts.values()).classification, col_verdicts,
                            (f"worst of columns {list(cols)}",))

    comm = verdict("comm")
    dom_parts = {"invariance": _worst(col_verdicts.values()), "comm": comm}
    dom_notes = []
    if not sec.diagonal and include_eigenbasis:
        eig_series = _make_series(ladder, sec.eigenbasis_comm(), "comm", [ladder.padded_top] * len(ladder.dims),
                                  basis="eigenbasis", exact=False)
        eig = classify(eig_series, tol.conv_tol, tol.fit_tol, tol.tie_ratio)
        dom_parts["comm-eigenbasis"] = eig
        # one basis in Dom H with a convergent sum suffices
        effective = min((comm, eig), key=lambda v: _RANK[v.classification])
        dom_H = Membership(_combine([dom_parts["invariance"].classification, effective.classification]),
                           dom_parts, ("comm evidence taken from the better of the two bases",))
    else:
        dom_H = membership(dom_parts, dom_notes)
    if comm.classification is Classification.DIVERGENT and dom_H.classification is Classification.DIVERGENT:
        caveats.append("divergent comm evidence holds for the checked bases only; membership needs the "
                       "sum to diverge in every orthonormal basis lying in Dom H")

    core_D = membership({"left": verdict("left"), "right": verdict("right")})

    if isinstance(a, RankSum):
        parts = {}
        for j, (_, psi, phi) in enumerate(a.vectors(ladder.padded_top), start=1):
            for name, v in (("psi", psi), ("phi", phi)):
                for energy in (False, True):
                    q = f"{name}({j})-{'energy' if energy else 'norm'}"
                    s = _make_series(ladder, sec.vector_sums(v, energy), q, ladder.dims, exact=sec.diagonal)
                    parts[q] = classify(s, tol.conv_tol, tol.fit_tol, tol.tie_ratio)
        core_D0 = membership(parts, ("finite rank; every vector must have ||H v|| finite",))
    elif isinstance(a, Explicit):
        core_D0 = Membership(Classification.CONVERGENT, {},
                             ("explicit finite matrix: finitely supported vectors lie in Dom H",))
    else:
        core_D0 = Membership(Classification.INCONCLUSIVE, {},
                             ("not given as a finite-rank sum; structural check not applicable",))

    dom_H2 = None
    if include_h2:
        comm_cols = {f"comm-column({j})": verdict(f"comm-column({j})") for j in cols}
        dom_H2 = Membership(
            _combine([dom_H.classification, verdict("double-comm").classification,
                      _worst(comm_cols.values()).classification]),
            {**dom_H.components, "double-comm": verdict("double-comm"),
             "comm-invariance": _worst(comm_cols.values())},
        )

    # Enforce D0 in D in Dom H in L(H), and Dom H^2 in Dom H.
    def implied(parent: Membership, parent_name: str, child: Membership | None):
        if child is None or parent.classification is not Classification.DIVERGENT:
            return child
        if child.classification is Classification.DIVERGENT:
            return child
        return child.with_divergence(f"implied by {parent_name} divergent evidence")

    dom_H = implied(hs, "hilbert_schmidt", dom_H)
    dom_H = implied(invariance, "invariance", dom_H)
    core_D = implied(hs, "hilbert_schmidt", core_D)
    core_D = implied(dom_H, "dom_H", core_D)
    core_D0 = implied(core_D, "core_D", core_D0)
    dom_H2 = implied(dom_H, "dom_H", dom_H2)

    return MembershipReport(_describe(h), _describe(a), ladder, tol, hs, invariance, dom_H, core_D,
                            core_D0, dom_H2, tuple(caveats))
