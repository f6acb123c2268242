"""TOML spec files describing a Hamiltonian, an operator and run settings.

Example::

    [hamiltonian]
    kind = "diagonal"            # or "hermitian" with a_re / a_im
    lambda = "n"

    [operator]
    kind = "rank-sum"            # element-rule | explicit | gibbs | inverse-hamiltonian

    [[operator.term]]
    alpha = [1.0, 0.0]           # real and imaginary parts
    psi = "exp(-n)"
    phi = "exp(-n)"

    [ladder]
    dims = [16, 24, 32, 48]
    pad_factor = 2.0

    [tolerances]
    conv_tol = 1e-6
    fit_tol = 5e-2

    [evolution]
    dim = 32
    t_max = 1.0
    steps = 10                   # or: times = [0.0, 0.5, 1.0]
    methods = ["spectral-exact", "vectorized-expm", "rk4"]
    step = 0.05

Expressions use the arithmetic language of :mod:`hsliouville.dsl`.  Unknown
sections or keys are rejected before anything is computed.
"""

from __future__ import annotations

import hashlib
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .core_ops import TruncatedMatrix
from .diagnostics import Tolerances, TruncationLadder
from .dsl import DslError
from .engine import METHODS
from .models import (
    DiagonalHamiltonian,
    ElementRule,
    Explicit,
    Gibbs,
    HamiltonianModel,
    HermitianHamiltonian,
    InverseHamiltonian,
    ModelError,
    OperatorModel,
    RankSum,
    RankTerm,
)

__all__ = ["SpecError", "EvolutionSettings", "RunSpec", "load_spec", "parse_spec"]


class SpecError(ValueError):
    """Invalid spec file; the message names the offending location."""


@dataclass(frozen=True)
class EvolutionSettings:
    dim: int
    times: tuple
    methods: tuple = ("spectral-exact",)
    step: float | None = None


@dataclass(frozen=True)
class RunSpec:
    hamiltonian: HamiltonianModel
    operator: OperatorModel
    ladder: TruncationLadder = field(default_factory=TruncationLadder)
    tolerances: Tolerances = field(default_factory=Tolerances)
    evolution: EvolutionSettings | None = None
    digest: str = ""


_SECTIONS = {
    "hamiltonian": {"kind", "lambda", "a_re", "a_im", "descriptor"},
    "operator": {"kind", "a_re", "a_im", "entries", "entries_im", "beta", "term", "descriptor"},
    "ladder": {"dims", "pad_factor"},
    "tolerances": {"conv_tol", "fit_tol", "tie_ratio"},
    "evolution": {"dim", "times", "t_max", "steps", "methods", "method", "step"},
}
_TERM_KEYS = {"alpha", "psi", "phi"}


def _strict(table: dict, allowed: set, where: str):
    for key in table:
        if key not in allowed:
            raise SpecError(f"{where}: unknown key '{key}' (allowed: {', '.join(sorted(allowed))})")


def _get(table: dict, key: str, where: str, kind=None, default=...):
    if key not in table:
        if default is ...:
            raise SpecError(f"{where}: missing key '{key}'")
        return default
    value = table[key]
    if kind is not None:
        kinds = kind if isinstance(kind, tuple) else (kind,)
        if isinstance(value, bool) or not isinstance(value, kinds):
            names = " or ".join(k.__name__ for k in kinds)
            raise SpecError(f"{where}.{key}: expected {names}, got {type(value).__name__}")
    return value


def _expr(build, where: str):
    try:
        return build()
    except DslError as exc:
        raise SpecError(f"{where}: {exc}") from exc


def _hamiltonian(t: dict) -> HamiltonianModel:
    w = "[hamiltonian]"
    kind = _get(t, "kind", w, str)
    desc = _get(t, "descriptor", w, str, None)
    if kind == "diagonal":
        _strict(t, {"kind", "lambda", "descriptor"}, w)
        src = _get(t, "lambda", w, str)
        return _expr(lambda: DiagonalHamiltonian.from_source(src, desc), f"{w}.lambda")
    if kind == "hermitian":
        _strict(t, {"kind", "a_re", "a_im", "descriptor"}, w)
        re, im = _get(t, "a_re", w, str), _get(t, "a_im", w, str, "0")
        return _expr(lambda: HermitianHamiltonian.from_source(re, im, desc), f"{w}.a_re/a_im")
    raise SpecError(f"{w}.kind: expected 'diagonal' or 'hermitian', got {kind!r}")


def _matrix(t: dict, w: str) -> np.ndarray:
    rows = _get(t, "entries", w, list)
    im_rows = _get(t, "entries_im", w, list, None)
    try:
        re = np.array(rows, dtype=np.float64)
        im = np.zeros_like(re) if im_rows is None else np.array(im_rows, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"{w}.entries: not a rectangular numeric array ({exc})") from exc
    if re.ndim != 2 or re.shape[0] != re.shape[1] or re.shape != im.shape:
        raise SpecError(f"{w}.entries: expected matching square arrays, got {re.shape} and {im.shape}")
    return re + 1j * im


def _alpha(value, where: str) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, list) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value):
        return complex(value[0], value[1])
    raise SpecError(f"{where}: alpha must be a number or [re, im]")


def _operator(t: dict, h: HamiltonianModel) -> OperatorModel:
    w = "[operator]"
    kind = _get(t, "kind", w, str)
    desc = _get(t, "descriptor", w, str, "")
    allowed = {
        "element-rule": {"a_re", "a_im"},
        "explicit": {"entries", "entries_im"},
        "rank-sum": {"term"},
        "gibbs": {"beta"},
        "inverse-hamiltonian": set(),
    }
    if kind not in allowed:
        raise SpecError(f"{w}.kind: expected one of {', '.join(allowed)}, got {kind!r}")
    _strict(t, allowed[kind] | {"kind", "descriptor"}, w)
    if kind in ("gibbs", "inverse-hamiltonian") and not isinstance(h, DiagonalHamiltonian):
        raise SpecError(f"{w}: {kind} needs a diagonal hamiltonian")
    try:
        if kind == "element-rule":
            re, im = _get(t, "a_re", w, str), _get(t, "a_im", w, str, "0")
            return _expr(lambda: ElementRule.from_source(re, im, desc or None), f"{w}.a_re/a_im")
        if kind == "explicit":
            return Explicit(TruncatedMatrix(_matrix(t, w)), desc or "explicit matrix")
        if kind == "gibbs":
            return Gibbs(float(_get(t, "beta", w, (int, float))), h, desc or "Gibbs state")
        if kind == "inverse-hamiltonian":
            return InverseHamiltonian(h, desc or "inverse Hamiltonian")
        terms = _get(t, "term", w, list)
        built = []
        for j, term in enumerate(terms, start=1):
            tw = f"[[operator.term]] #{j}"
            if not isinstance(term, dict):
                raise SpecError(f"{tw}: expected a table")
            _strict(term, _TERM_KEYS, tw)
            alpha = _alpha(_get(term, "alpha", tw, None, 1.0), f"{tw}.alpha")
            psi, phi = _get(term, "psi", tw, str), _get(term, "phi", tw, str)
            built.append(_expr(lambda: RankTerm.from_source(alpha, psi, phi), f"{tw}.psi/phi"))
        return RankSum(tuple(built), desc or f"rank-{len(built)} sum")
    except ModelError as exc:
        raise SpecError(f"{w}: {exc}") from exc


def _ladder(t: dict) -> TruncationLadder:
    w = "[ladder]"
    _strict(t, _SECTIONS["ladder"], w)
    dims = _get(t, "dims", w, list, list(TruncationLadder().dims))
    pad = float(_get(t, "pad_factor", w, (int, float), 2.0))
    if not all(isinstance(d, int) and not isinstance(d, bool) for d in dims):
        raise SpecError(f"{w}.dims: expected a list of integers")
    try:
        return TruncationLadder(tuple(dims), pad)
    except ValueError as exc:
        raise SpecError(f"{w}: {exc}") from exc


def _tolerances(t: dict) -> Tolerances:
    w = "[tolerances]"
    _strict(t, _SECTIONS["tolerances"], w)
    d = Tolerances()
    vals = {k: float(_get(t, k, w, (int, float), getattr(d, k))) for k in ("conv_tol", "fit_tol", "tie_ratio")}
    if vals["conv_tol"] <= 0 or vals["fit_tol"] <= 0 or vals["tie_ratio"] < 1:
        raise SpecError(f"{w}: tolerances must be positive and tie_ratio >= 1")
    return Tolerances(**vals)


def _evolution(t: dict) -> EvolutionSettings:
    w = "[evolution]"
    _strict(t, _SECTIONS["evolution"], w)
    dim = _get(t, "dim", w, int)
    if dim < 1:
        raise SpecError(f"{w}.dim: must be positive")
    if "times" in t:
        if "t_max" in t or "steps" in t:
            raise SpecError(f"{w}: give either times or (t_max, steps), not both")
        times = [float(x) for x in _get(t, "times", w, list)]
    else:
        t_max = float(_get(t, "t_max", w, (int, float)))
        steps = _get(t, "steps", w, int)
        if steps < 1 or t_max <= 0:
            raise SpecError(f"{w}: need t_max > 0 and steps >= 1")
        times = np.linspace(0.0, t_max, steps + 1).tolist()
    if not times or times[0] != 0.0 or any(b <= a for a, b in zip(times, times[1:])):
        raise SpecError(f"{w}.times: must start at 0 and increase strictly")
    if "method" in t and "methods" in t:
        raise SpecError(f"{w}: give either method or methods")
    methods = _get(t, "methods", w, list, [_get(t, "method", w, str, "spectral-exact")])
    for m in methods:
        if m not in METHODS:
            raise SpecError(f"{w}.methods: unknown method {m!r}; expected one of {', '.join(METHODS)}")
    step = _get(t, "step", w, (int, float), None)
    if "rk4" in methods and (step is None or step <= 0):
        raise SpecError(f"{w}.step: rk4 needs a positive step")
    return EvolutionSettings(dim, tuple(times), tuple(methods), None if step is None else float(step))


def parse_spec(text: str) -> RunSpec:
    """Parse spec text; raises :class:`SpecError` with a location on any problem."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise SpecError(f"syntax error: {exc}") from exc
    _strict(doc, set(_SECTIONS), "spec")
    for name in ("hamiltonian", "operator"):
        if name not in doc:
            raise SpecError(f"spec: missing section [{name}]")
    for name, table in doc.items():
        if not isinstance(table, dict):
            raise SpecError(f"spec: '{name}' must be a section")
    h = _hamiltonian(doc["hamiltonian"])
    a = _operator(doc["operator"], h)
    return RunSpec(
        h, a,
        _ladder(doc.get("ladder", {})),
        _tolerances(doc.get("tolerances", {})),
        _evolution(doc["evolution"]) if "evolution" in doc else None,
        hashlib.sha256(text.encode("utf-8")).hexdigest(),
    )


def load_spec(path: str | Path) -> RunSpec:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SpecError(f"cannot read spec file {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise SpecError(f"spec file {path} is not UTF-8: {exc}") from exc
    return parse_spec(text)
