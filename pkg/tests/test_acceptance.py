"""Acceptance criteria, one test each, with a PASS/FAIL line per criterion.

Run under pytest (lines appear in the terminal summary) or directly with
``python tests/test_acceptance.py``.
"""

import json
import math
import time

import numpy as np
import pytest

from hsliouville import cli
from hsliouville import diagnostics as dg
from hsliouville import engine as eng
from hsliouville.core_ops import TruncatedMatrix, basis_matrix, finite_rank_project, hs_norm
from hsliouville.models import DiagonalHamiltonian, fixture, realize_operator

RESULTS: dict = {}
H = DiagonalHamiltonian.from_source("n")
D0 = ("exp-decay", "basis-e12", "two-term")


def record(k: int, title: str, ok: bool, detail: str) -> None:
    RESULTS[k] = f"criterion {k:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    assert ok, RESULTS[k]


def _diff(a, b) -> float:
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)))


def _random(rng, n):
    return TruncatedMatrix(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))


def test_01_unitarity_and_group_law():
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    p = eng.Propagator.from_hamiltonian(H, 64)
    norm_err = group_err = 0.0
    for _ in range(50):
        a = _random(rng, 64)
        t, s = rng.uniform(-2, 2, 2)
        ua = eng.superpropagator_apply(p.at(t), a)
        norm_err = max(norm_err, abs(hs_norm(ua) - hs_norm(a)) / hs_norm(a))
        uus = eng.superpropagator_apply(p.at(t), eng.superpropagator_apply(p.at(s), a))
        group_err = max(group_err, _diff(uus, eng.superpropagator_apply(p.at(t + s), a)))
    elapsed = time.perf_counter() - start
    record(1, "unitarity and group law", norm_err <= 1e-10 and group_err <= 1e-9 and elapsed < 10,
           f"rel norm err {norm_err:.2e}, group err {group_err:.2e}, {elapsed:.2f} s")


def test_02_courbage_bound():
    worst = 0.0
    for name in D0:
        a = realize_operator(fixture(name).operator, 64)
        comm = hs_norm(eng.commutator_apply(H, a))
        for k in range(5):
            t = 10.0**-k
            lhs = _diff(eng.superpropagator_apply(eng.Propagator.from_hamiltonian(H, 64, t), a), a)
            worst = max(worst, lhs / (abs(t) * comm))
    record(2, "Courbage bound", worst <= 1 + 1e-8, f"max ratio {worst:.12f}")


def test_03_stone_slope():
    a = realize_operator(fixture("exp-decay").operator, 64)
    slope = eng.stone_probe(H, a, [1e-1, 1e-2, 1e-3, 1e-4]).slope
    record(3, "Stone difference-quotient slope", 0.9 <= slope <= 1.1, f"slope {slope:.4f}")


def test_04_tail_formula():
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(20):
        a = _random(rng, 32)
        adj_cols = np.sum(np.abs(a.entries.conj().T) ** 2, axis=0)  # ||A* e_m||^2
        for n in range(1, 33):
            _, tail = finite_rank_project(a, n)
            worst = max(worst, abs(tail**2 - math.fsum(adj_cols[n:])))
    record(4, "finite-rank tail formula", worst <= 1e-12, f"max abs err {worst:.2e}")


@pytest.fixture(scope="module")
def verify_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("verify")
    start = time.perf_counter()
    code = cli.main(["verify", "-o", str(out), "--ladder-top", "128", "--seed", "0"])
    elapsed = time.perf_counter() - start
    return code, elapsed, json.loads((out / "verify.json").read_text())


def test_05_norm_ordering(verify_run):
    _, _, doc = verify_run
    check = next(c for c in doc["checks"] if c["name"] == "norm-ordering")
    d = check["detail"]
    record(5, "norm ordering on verify matrices", check["passed"] and d["matrices_checked"] > 0,
           f"{d['matrices_checked']} matrices, worst excess {d['worst_relative_excess']:.1e}")


def test_06_inverse_hamiltonian_counterexample():
    f = fixture("inverse-hamiltonian")
    r = dg.diagnose(f.hamiltonian, f.operator)
    left = r.core_D.components["left"]
    b = left.fit_params.get("b", float("nan"))
    ok = (r.dom_H.classification is dg.Classification.CONVERGENT
          and r.dom_H.components["comm"].limit_estimate == 0.0
          and r.core_D.classification is dg.Classification.DIVERGENT
          and left.growth_model == "linear" and 0.99 <= b <= 1.01
          and left.series.values == tuple(float(n) for n in left.series.dims))
    record(6, "H^-1 in Dom but not in core", ok,
           f"dom_H {r.dom_H.classification.value}, core_D {left.classification.value}/{left.growth_model}, b={b:.6f}")


def test_07_slow_rank_one():
    f = fixture("slow-rank-one")
    lad = dg.TruncationLadder()
    s = dg.partial_sums(f.hamiltonian, f.operator, "comm", lad)
    worst = 0.0
    for n, got in zip(lad.dims, s.values):
        h1 = math.fsum(1.0 / k for k in range(1, n + 1))
        h2 = math.fsum(1.0 / k**2 for k in range(1, n + 1))
        want = 2 * n * h2 - 2 * h1**2
        worst = max(worst, abs(got - want) / want)
    v = dg.classify(s)
    ok = worst <= 1e-10 and v.classification is dg.Classification.DIVERGENT and v.growth_model == "linear"
    record(7, "slow-rank-one closed form and verdict", ok,
           f"max rel err {worst:.1e}, {v.classification.value}/{v.growth_model} (residual {v.fit_residual:.3f})")


def test_08_gibbs_core():
    beta = 1.0
    x = math.exp(-2 * beta)
    z = math.exp(-beta) / (1 - math.exp(-beta))
    oracle = x * (1 + x) / (1 - x) ** 3 / z**2
    f = fixture("gibbs")
    r = dg.diagnose(f.hamiltonian, f.operator)
    got = r.core_D.components["left"].limit_estimate
    rel = abs(got - oracle) / oracle
    ok = r.core_D.classification is dg.Classification.CONVERGENT and rel <= 1e-6
    record(8, "Gibbs state in core", ok, f"{r.core_D.classification.value}, limit rel err {rel:.1e}")


def test_09_representation_equivalence():
    rng = np.random.default_rng(9)
    lv = eng.vectorized_liouvillian(H, 8)
    act = max(_diff(lv.apply(a), eng.commutator_apply(H, a)) for a in (_random(rng, 8) for _ in range(20)))
    lam = np.arange(1, 9, dtype=float)
    eig = float(np.max(np.abs(np.sort(lv.eigenvalues()) - np.sort((lam[:, None] - lam[None, :]).ravel()))))
    record(9, "vectorized vs commutator action", act <= 1e-10 and eig <= 1e-8,
           f"action err {act:.1e}, eigenvalue err {eig:.1e}")


def test_10_h_squared_footnote():
    e13 = basis_matrix(8, 1, 3)
    sq = eng.liouvillian_squared_apply(H, e13)
    comm_h2 = eng.commutator_apply(DiagonalHamiltonian.from_source("n^2"), e13)
    ok = _diff(sq, 4 * e13.entries) == 0 and _diff(comm_h2, -8 * e13.entries) == 0
    record(10, "H^2 differs from [H^2, .]", ok,
           f"H^2 e13 = {sq.entries[0, 2].real:g} e13, [H^2, e13] = {comm_h2.entries[0, 2].real:g} e13")


def test_11_solver_consistency():
    a0 = realize_operator(fixture("exp-decay").operator, 32)
    rho = TruncatedMatrix(a0.entries / np.trace(a0.entries).real)
    times = np.linspace(0, 1, 11)
    spec = eng.evolve(H, rho, times)
    vec = eng.evolve(H, rho, times, "vectorized-expm")
    dist = max(_diff(x, y) for x, y in zip(spec.states, vec.states))
    ref = spec.states[-1]
    e1 = _diff(eng.evolve(H, rho, [0, 1], "rk4", step=0.05).states[-1], ref)
    e2 = _diff(eng.evolve(H, rho, [0, 1], "rk4", step=0.025).states[-1], ref)
    ratio = e1 / e2
    record(11, "solver consistency and rk4 order", dist <= 1e-9 and 14 <= ratio <= 18,
           f"max HS distance {dist:.1e}, rk4 ratio {ratio:.3f}")


def test_12_end_to_end_verify(verify_run):
    code, elapsed, doc = verify_run
    failed = [c["name"] for c in doc["checks"] if not c["passed"]]
    record(12, "end-to-end verify at ladder top 128", code == 0 and elapsed < 300 and not failed,
           f"exit {code}, {elapsed:.1f} s, {len(doc['checks'])} checks, failed {failed or 'none'}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
