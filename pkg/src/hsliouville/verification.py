"""Self-check suites run by ``hsliouville verify``.

Each check returns a :class:`CheckResult`; every matrix a check produces is
also passed through a norm-ordering audit (operator <= HS <= trace norm).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import diagnostics as dg
from . import engine as eng
from .core_ops import TruncatedMatrix, basis_matrix, finite_rank_project, hs_norm, operator_norm, trace_norm
from .models import (
    DIVERGENT,
    DiagonalHamiltonian,
    Expectation,
    HermitianHamiltonian,
    fixture,
    oracle_catalog,
    realize_hamiltonian,
    realize_operator,
)

__all__ = ["CheckResult", "NormAudit", "run_verify", "CHECK_NAMES"]

CHECK_NAMES = (
    "unitarity-group-law",
    "courbage-bound",
    "stone-slope",
    "tail-formula",
    "vectorized-representation",
    "h-squared-vs-commutator",
    "solver-consistency",
    "slow-rank-one-closed-form",
    "oracle-catalog",
    "set-ordering",
    "norm-ordering",
)

D0_FIXTURES = ("exp-decay", "basis-e12", "two-term")


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "detail": self.detail}


class NormAudit:
    """Collects the worst violation of operator <= HS <= trace norm."""

    def __init__(self, rel_slack: float = 1e-12):
        self.slack = rel_slack
        self.count = 0
        self.failures = 0
        self.worst = 0.0

    def see(self, a) -> None:
        if not isinstance(a, TruncatedMatrix):
            a = TruncatedMatrix(np.asarray(a))
        op, hs, tr = operator_norm(a), hs_norm(a), trace_norm(a)
        excess = max(op - hs, hs - tr, 0.0) / max(tr, 1e-300)
        self.count += 1
        self.worst = max(self.worst, excess)
        if excess > self.slack:
            self.failures += 1


def _random_matrix(rng, n: int) -> TruncatedMatrix:
    return TruncatedMatrix(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))


def _diff(a: TruncatedMatrix, b: TruncatedMatrix) -> float:
    return hs_norm(TruncatedMatrix(a.entries - b.entries))


def check_unitarity(rng, audit: NormAudit, n=64, samples=50) -> CheckResult:
    h = DiagonalHamiltonian.from_source("n")
    base = eng.Propagator.from_hamiltonian(h, n)
    worst_norm = worst_group = 0.0
    for _ in range(samples):
        a = _random_matrix(rng, n)
        t, s = rng.uniform(-2.0, 2.0, size=2)
        ua = eng.superpropagator_apply(base.at(t), a)
        uua = eng.superpropagator_apply(base.at(t), eng.superpropagator_apply(base.at(s), a))
        u_sum = eng.superpropagator_apply(base.at(t + s), a)
        audit.see(a)
        audit.see(ua)
        worst_norm = max(worst_norm, abs(hs_norm(ua) - hs_norm(a)) / hs_norm(a))
        worst_group = max(worst_group, _diff(uua, u_sum))
    ok = worst_norm <= 1e-10 and worst_group <= 1e-9
    return CheckResult("unitarity-group-law", ok,
                       {"max_relative_norm_change": worst_norm, "max_group_law_error": worst_group})


def check_courbage(audit: NormAudit, n=64) -> CheckResult:
    h = DiagonalHamiltonian.from_source("n")
    ts = [10.0**-k for k in range(5)]
    detail = {}
    ok = True
    for name in D0_FIXTURES:
        a = realize_operator(fixture(name).operator, n)
        audit.see(a)
        r = eng.courbage_probe(h, a, ts)
        detail[name] = r.max_ratio
        ok = ok and not r.violated
    return CheckResult("courbage-bound", ok, {"max_ratio": detail, "bound": 1 + 1e-8})


def check_stone(audit: NormAudit, n=64) -> CheckResult:
    h = DiagonalHamiltonian.from_source("n")
    a = realize_operator(fixture("exp-decay").operator, n)
    audit.see(a)
    r = eng.stone_probe(h, a, [1e-1, 1e-2, 1e-3, 1e-4])
    return CheckResult("stone-slope", bool(0.9 <= r.slope <= 1.1),
                       {"slope": r.slope, "residuals": list(r.residuals)})


def check_tail(rng, audit: NormAudit, n=32, samples=20) -> CheckResult:
    worst = 0.0
    for _ in range(samples):
        a = _random_matrix(rng, n)
        audit.see(a)
        row_sq = np.sum(np.abs(a.entries) ** 2, axis=1)  # ||A* e_m||^2
        for k in range(1, n + 1):
            proj, tail = finite_rank_project(a, k)
            worst = max(worst, abs(tail**2 - float(np.sum(row_sq[k:]))))
        audit.see(proj)
    return CheckResult("tail-formula", worst <= 1e-12, {"max_abs_error": worst})


def check_vectorized(rng, audit: NormAudit, n=8) -> CheckResult:
    detail = {}
    ok = True
    for label, h in (("diagonal", DiagonalHamiltonian.from_source("n")),
                     ("hermitian", HermitianHamiltonian.from_source("(m+n)/2*exp(-(m-n)^2)", "0.1*(m-n)"))):
        lv = eng.vectorized_liouvillian(h, n)
        act = 0.0
        for _ in range(20):
            a = _random_matrix(rng, n)
            act = max(act, _diff(lv.apply(a), eng.commutator_apply(h, a, pad=n)))
        lam = np.linalg.eigvalsh(realize_hamiltonian(h, n).entries)
        want = np.sort((lam[:, None] - lam[None, :]).ravel())
        eig = float(np.max(np.abs(np.sort(lv.eigenvalues()) - want)))
        audit.see(TruncatedMatrix(lv.matrix))
        detail[label] = {"max_action_error": act, "max_eigenvalue_error": eig}
        ok = ok and act <= 1e-10 and eig <= 1e-8
    return CheckResult("vectorized-representation", ok, detail)


def check_h_squared(audit: NormAudit, n=8) -> CheckResult:
    h = DiagonalHamiltonian.from_source("n")
    e13 = basis_matrix(n, 1, 3)
    sq = eng.liouvillian_squared_apply(h, e13)
    h2 = DiagonalHamiltonian.from_source("n^2")
    comm = eng.commutator_apply(h2, e13)
    audit.see(sq)
    audit.see(comm)
    ok = (_diff(sq, TruncatedMatrix(4 * e13.entries)) <= 1e-12
          and _diff(comm, TruncatedMatrix(-8 * e13.entries)) <= 1e-12)
    return CheckResult("h-squared-vs-commutator", ok,
                       {"liouvillian_squared_13": [sq.entries[0, 2].real, sq.entries[0, 2].imag],
                        "commutator_h2_13": [comm.entries[0, 2].real, comm.entries[0, 2].imag]})


def rk4_order_ratio(h, a0: TruncatedMatrix, t: float, step: float) -> tuple[float, float, float]:
    """Errors of rk4 at step and step/2 against the spectral solution, and their ratio."""
    ref = eng.evolve(h, a0, [0.0, t]).states[-1]
    e1 = _diff(eng.evolve(h, a0, [0.0, t], "rk4", step=step, force=True).states[-1], ref)
    e2 = _diff(eng.evolve(h, a0, [0.0, t], "rk4", step=step / 2, force=True).states[-1], ref)
    return e1, e2, (e1 / e2 if e2 > 0 else math.inf)


def exp_decay_state(n: int) -> TruncatedMatrix:
    a = realize_operator(fixture("exp-decay").operator, n)
    return TruncatedMatrix(a.entries / np.trace(a.entries).real)


def check_solvers(audit: NormAudit, n=32) -> CheckResult:
    rho = exp_decay_state(n)
    times = np.linspace(0.0, 1.0, 11)
    dist = {}
    for label, h in (("diagonal", DiagonalHamiltonian.from_source("n")),
                     ("hermitian", HermitianHamiltonian.from_source("(m+n)/2*exp(-(m-n)^2)"))):
        a = eng.evolve(h, rho, times)
        b = eng.evolve(h, rho, times, "vectorized-expm")
        dist[label] = max(_diff(x, y) for x, y in zip(a.states, b.states))
        audit.see(a.states[-1])
    e1, e2, ratio = rk4_order_ratio(DiagonalHamiltonian.from_source("n"), rho, 1.0, 0.05)
    ok = max(dist.values()) <= 1e-9 and 14.0 <= ratio <= 18.0
    return CheckResult("solver-consistency", ok,
                       {"max_hs_distance": dist, "rk4_errors": [e1, e2], "rk4_ratio": ratio})


def slow_rank_one_closed_form(n: int) -> float:
    k = np.arange(1, n + 1, dtype=np.float64)
    return 2 * n * math.fsum(1 / k**2) - 2 * math.fsum(1 / k) ** 2


def check_slow_rank_one(ladder: dg.TruncationLadder, tol: dg.Tolerances) -> CheckResult:
    f = fixture("slow-rank-one")
    s = dg.partial_sums(f.hamiltonian, f.operator, "comm", ladder)
    rel = max(abs(v - slow_rank_one_closed_form(n)) / slow_rank_one_closed_form(n)
              for n, v in zip(ladder.dims, s.values))
    v = dg.classify(s, tol.conv_tol, tol.fit_tol, tol.tie_ratio)
    ok = rel <= 1e-10 and v.classification is dg.Classification.DIVERGENT and v.growth_model == "linear"
    return CheckResult("slow-rank-one-closed-form", ok,
                       {"max_relative_error": rel, "classification": v.classification.value,
                        "growth_model": v.growth_model})


def _matches(exp: Expectation, mem: dg.Membership) -> list[str]:
    problems = []
    if mem.classification.value != exp.classification:
        problems.append(f"classification {mem.classification.value} != {exp.classification}")
    if exp.growth is not None:
        growths = {v.growth_model for v in mem.components.values()
                   if v.classification is mem.classification}
        if exp.growth not in growths:
            problems.append(f"growth {sorted(growths)} lacks {exp.growth}")
    for comp, want in exp.limits.items():
        got = mem.components[comp].limit_estimate
        if got is None or abs(got - want) > 1e-6 * abs(want) + (1e-12 if want == 0 else 0.0):
            problems.append(f"{comp} limit {got} != {want}")
    return problems


def check_catalog(ladder: dg.TruncationLadder, tol: dg.Tolerances, audit: NormAudit,
                  inject_fault: bool = False) -> tuple[CheckResult, CheckResult]:
    failures = {}
    ordering = []
    for f in oracle_catalog():
        expected = dict(f.expected)
        if inject_fault and f.name == "gibbs":
            expected["core_D"] = Expectation(DIVERGENT, "linear")
        report = dg.diagnose(f.hamiltonian, f.operator, ladder, tol)
        audit.see(realize_operator(f.operator, ladder.dims[0]))
        mems = report.memberships()
        for set_name, exp in expected.items():
            problems = _matches(exp, mems[set_name])
            if problems:
                failures[f"{f.name}/{set_name}"] = problems
        if mems["dom_H"].classification is dg.Classification.DIVERGENT:
            for small in ("core_D", "core_D0", "dom_H2"):
                if mems[small].classification is dg.Classification.CONVERGENT:
                    ordering.append(f"{f.name}: {small} convergent while dom_H divergent")
        if (mems["core_D0"].classification is dg.Classification.CONVERGENT
                and mems["core_D"].classification is dg.Classification.DIVERGENT):
            ordering.append(f"{f.name}: core_D0 convergent while core_D divergent")
    catalog = CheckResult("oracle-catalog", not failures,
                          {"fixtures": [f.name for f in oracle_catalog()], "failures": failures})
    return catalog, CheckResult("set-ordering", not ordering, {"violations": ordering})


def run_verify(seed: int = 0, ladder_top: int = 128, inject_fault: bool = False,
               tolerances: dg.Tolerances | None = None, pad_factor: float = 2.0) -> list[CheckResult]:
    """Run all suites; deterministic for a fixed seed."""
    rng = np.random.default_rng(seed)
    tol = tolerances or dg.Tolerances()
    dims = tuple(d for d in dg.DEFAULT_DIMS if d <= ladder_top)
    ladder = dg.TruncationLadder(dims, pad_factor)
    audit = NormAudit()
    results = [
        check_unitarity(rng, audit),
        check_courbage(audit),
        check_stone(audit),
        check_tail(rng, audit),
        check_vectorized(rng, audit),
        check_h_squared(audit),
        check_solvers(audit),
        check_slow_rank_one(ladder, tol),
        *check_catalog(ladder, tol, audit, inject_fault),
    ]
    results.append(CheckResult("norm-ordering", audit.failures == 0,
                               {"matrices_checked": audit.count, "worst_relative_excess": audit.worst}))
    return results
