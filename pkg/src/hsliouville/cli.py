"""Command-line front end.

Subcommands::

    hsliouville diagnose SPEC | --fixture NAME  -o OUT
    hsliouville evolve SPEC -o OUT [--method M ...] [--force]
    hsliouville verify -o OUT [--seed S] [--ladder-top N] [--inject-fault]
    hsliouville fixtures

Exit codes: 0 success, 1 internal error, 2 spec or parse error,
3 preflight refusal, 4 resource budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from . import diagnostics as dg
from . import engine as eng
from .core_ops import DensityMatrix, TruncatedMatrix, hs_norm
from .dsl import DslError
from .models import FIXTURE_NAMES, ModelError, fixture, oracle_catalog, realize_operator
from .specfile import RunSpec, SpecError, load_spec
from .verification import rk4_order_ratio, run_verify

log = logging.getLogger("hsliouville")

EXIT_OK, EXIT_INTERNAL, EXIT_SPEC, EXIT_PREFLIGHT, EXIT_BUDGET = 0, 1, 2, 3, 4

SERIES_COLUMNS = ("set", "component", "quantity", "basis", "N", "inner_dim", "S_N")
TRAJECTORY_COLUMNS = ("method", "t", "trace_re", "trace_im", "hs_norm", "purity", "distance_to_initial")
COMPARISON_COLUMNS = ("kind", "method", "reference", "step", "value")


# Output --------------------------------------------------------------------


def _jsonable(x):
    """Finite floats stay floats (repr round-trips); non-finite ones become strings."""
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _fmt(x) -> str:
    return format(float(x), ".17g")


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: Path, doc: dict) -> None:
    write_atomic(path, json.dumps(_jsonable(doc), indent=2, sort_keys=False, allow_nan=False) + "\n")


def write_csv(path: Path, columns, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    write_atomic(path, buf.getvalue())


def provenance(spec_digest: str | None, ladder: dg.TruncationLadder | None,
               tol: dg.Tolerances | None, **extra) -> dict:
    out = {"tool": "hsliouville", "version": __version__, "spec_sha256": spec_digest}
    if ladder is not None:
        out["ladder"] = {"dims": list(ladder.dims), "pad_factor": ladder.pad_factor}
    if tol is not None:
        out["tolerances"] = {"conv_tol": tol.conv_tol, "fit_tol": tol.fit_tol, "tie_ratio": tol.tie_ratio}
    out.update(extra)
    return out


# Flag handling -------------------------------------------------------------


def _parse_ladder(text: str) -> tuple:
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"ladder must be comma-separated integers: {text!r}") from exc


def _settings(args, ladder: dg.TruncationLadder, tol: dg.Tolerances):
    dims = args.ladder if args.ladder is not None else ladder.dims
    pad = args.pad if args.pad is not None else ladder.pad_factor
    try:
        ladder = dg.TruncationLadder(dims, pad)
    except ValueError as exc:
        raise SpecError(f"--ladder/--pad: {exc}") from exc
    tol = dg.Tolerances(
        args.tol_conv if args.tol_conv is not None else tol.conv_tol,
        args.tol_fit if args.tol_fit is not None else tol.fit_tol,
        tol.tie_ratio,
    )
    return ladder, tol


def _load(args) -> RunSpec:
    if getattr(args, "fixture", None):
        f = fixture(args.fixture)
        return RunSpec(f.hamiltonian, f.operator, digest=f"fixture:{f.name}")
    if not args.spec:
        raise SpecError("give a spec file or --fixture NAME")
    return load_spec(args.spec)


# Subcommands ---------------------------------------------------------------


def _series_rows(report: dg.MembershipReport):
    for set_name, mem in report.memberships().items():
        for comp, v in mem.components.items():
            s = v.series
            for n, pad, val in zip(s.dims, s.pads, s.values):
                yield (set_name, comp, s.quantity, s.basis, n, pad, _fmt(val))


def cmd_diagnose(args) -> int:
    spec = _load(args)
    ladder, tol = _settings(args, spec.ladder, spec.tolerances)
    report = dg.diagnose(spec.hamiltonian, spec.operator, ladder, tol,
                         exhaustive_columns=args.exhaustive_columns)
    out = Path(args.out)
    doc = {"provenance": provenance(spec.digest, ladder, tol), "report": report.to_dict()}
    write_json(out / "report.json", doc)
    write_csv(out / "series.csv", SERIES_COLUMNS, _series_rows(report))
    for name, mem in report.memberships().items():
        print(f"{name:16s} {mem.classification.value}")
    return EXIT_OK


def _observables(method: str, a0: TruncatedMatrix, traj: eng.EvolutionTrajectory):
    for t, s in zip(traj.times, traj.states):
        tr = complex(np.trace(s.entries))
        purity = complex(np.trace(s.entries @ s.entries)).real
        yield (method, _fmt(t), _fmt(tr.real), _fmt(tr.imag), _fmt(hs_norm(s)), _fmt(purity),
               _fmt(hs_norm(TruncatedMatrix(s.entries - a0.entries))))


def cmd_evolve(args) -> int:
    spec = _load(args)
    if spec.evolution is None:
        raise SpecError("spec has no [evolution] section")
    ladder, tol = _settings(args, spec.ladder, spec.tolerances)
    ev = spec.evolution
    methods = tuple(args.method) if args.method else ev.methods
    for m in methods:
        if m not in eng.METHODS:
            raise SpecError(f"--method: unknown method {m!r}")
    if "rk4" in methods and not ev.step:
        raise SpecError("[evolution].step: rk4 needs a positive step")

    a0 = realize_operator(spec.operator, ev.dim, reference_dim=max(ev.dim, ladder.top))
    preflight_doc = None
    if not args.force:
        verdict = eng.preflight(spec.hamiltonian, a0, model=spec.operator, ladder=ladder, tolerances=tol)
        preflight_doc = verdict.to_dict() if verdict is not None else None
        if verdict is not None and verdict.classification is dg.Classification.DIVERGENT:
            raise eng.PreflightError(
                f"initial operator fails the Dom H preflight: {verdict.summary()}; use --force to override",
                verdict)

    budget = args.budget_mb
    trajectories = {}
    for m in methods:
        trajectories[m] = eng.evolve(spec.hamiltonian, a0, ev.times, m, step=ev.step, force=True,
                                     budget_mb=budget)

    out = Path(args.out)
    rows = [row for m, tr in trajectories.items() for row in _observables(m, a0, tr)]
    write_csv(out / "trajectory.csv", TRAJECTORY_COLUMNS, rows)

    summary = {}
    comparison = []
    ref_name = methods[0]
    for m, tr in trajectories.items():
        summary[m] = {"label": tr.label, "max_hs_drift": float(np.max(tr.hs_drift)),
                      "max_trace_drift": float(np.max(tr.trace_drift)),
                      "invariant_violations": tr.invariant_violations}
        if m != ref_name:
            dist = max(hs_norm(TruncatedMatrix(x.entries - y.entries))
                       for x, y in zip(tr.states, trajectories[ref_name].states))
            summary[m]["max_hs_distance_to_" + ref_name] = dist
            comparison.append(("max-hs-distance", m, ref_name, _fmt(ev.step) if m == "rk4" else "", _fmt(dist)))
    order = None
    if "rk4" in methods:
        base = TruncatedMatrix(a0.entries)
        e1, e2, ratio = rk4_order_ratio(spec.hamiltonian, base, ev.times[-1], ev.step)
        order = {"step": ev.step, "error_step": e1, "error_half_step": e2, "ratio": ratio}
        comparison += [("rk4-error", "rk4", "spectral-exact", _fmt(ev.step), _fmt(e1)),
                       ("rk4-error", "rk4", "spectral-exact", _fmt(ev.step / 2), _fmt(e2)),
                       ("rk4-order-ratio", "rk4", "spectral-exact", _fmt(ev.step), _fmt(ratio))]
        print(f"rk4 error ratio under h -> h/2: {ratio:.4f}")
    if comparison:
        write_csv(out / "comparison.csv", COMPARISON_COLUMNS, comparison)
    write_json(out / "evolution.json", {
        "provenance": provenance(spec.digest, ladder, tol, dim=ev.dim),
        "times": list(ev.times),
        "initial_state_kind": "density-matrix" if isinstance(a0, DensityMatrix) else "operator",
        "preflight": preflight_doc,
        "forced": bool(args.force),
        "methods": summary,
        "rk4_order": order,
    })
    return EXIT_OK


def cmd_verify(args) -> int:
    tol = dg.Tolerances(args.tol_conv or 1e-6, args.tol_fit or 5e-2)
    results = run_verify(seed=args.seed, ladder_top=args.ladder_top, inject_fault=args.inject_fault,
                         tolerances=tol, pad_factor=args.pad or 2.0)
    ok = all(r.passed for r in results)
    dims = [d for d in dg.DEFAULT_DIMS if d <= args.ladder_top]
    write_json(Path(args.out) / "verify.json", {
        "provenance": provenance(None, dg.TruncationLadder(tuple(dims), args.pad or 2.0), tol,
                                 seed=args.seed, inject_fault=bool(args.inject_fault)),
        "all_passed": ok,
        "checks": [r.to_dict() for r in results],
    })
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}")
    return EXIT_OK if ok else EXIT_INTERNAL


def cmd_fixtures(args) -> int:
    for f in oracle_catalog():
        print(f"{f.name:20s} {f.operator.descriptor}  ({f.notes})")
    return EXIT_OK


# Entry point ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hsliouville", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log warnings from the library")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, spec=True):
        if spec:
            sp.add_argument("spec", nargs="?", help="TOML spec file")
            sp.add_argument("--fixture", choices=FIXTURE_NAMES, help="use a catalog fixture instead of a spec")
        sp.add_argument("-o", "--out", required=True, help="output directory")
        sp.add_argument("--ladder", type=_parse_ladder, help="comma-separated truncation dims")
        sp.add_argument("--pad", type=float, help="pad factor for padded products")
        sp.add_argument("--tol-conv", type=float, help="relative last-increment tolerance")
        sp.add_argument("--tol-fit", type=float, help="relative RMS fit tolerance")
        sp.add_argument("--seed", type=int, default=0, help="RNG seed")
        sp.add_argument("--budget-mb", type=float, help="memory budget for the vectorized Liouvillian")

    d = sub.add_parser("diagnose", help="membership diagnostics for an operator")
    common(d)
    d.add_argument("--exhaustive-columns", action="store_true", help="probe every column up to N1")
    d.set_defaults(func=cmd_diagnose)

    e = sub.add_parser("evolve", help="time evolution with several solvers")
    common(e)
    e.add_argument("--method", action="append", choices=eng.METHODS, help="solver (repeatable)")
    e.add_argument("--force", action="store_true", help="skip the Dom H preflight")
    e.set_defaults(func=cmd_evolve)

    v = sub.add_parser("verify", help="run the self-check suites")
    common(v, spec=False)
    v.add_argument("--ladder-top", type=int, default=128, help="largest ladder dimension")
    v.add_argument("--inject-fault", action="store_true", help="corrupt one fixture expectation")
    v.set_defaults(func=cmd_verify)

    f = sub.add_parser("fixtures", help="list the oracle fixtures")
    f.set_defaults(func=cmd_fixtures)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (SpecError, DslError, ModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except eng.PreflightError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_PREFLIGHT
    except eng.ResourceBudgetError as exc:
        print(f"resource budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
