import csv
import json
from pathlib import Path

import pytest

from hsliouville import cli
from hsliouville.models import gibbs_left_limit
from hsliouville.specfile import SpecError, parse_spec

SPECS = Path(__file__).resolve().parents[1] / "specs"

MINIMAL = """
[hamiltonian]
kind = "diagonal"
lambda = "n"

[operator]
kind = "gibbs"
beta = 1.0
"""


def run(*argv):
    return cli.main([str(a) for a in argv])


# Spec files ----------------------------------------------------------------


def test_parse_minimal_spec():
    spec = parse_spec(MINIMAL)
    assert spec.operator.beta == 1.0 and spec.evolution is None
    assert spec.ladder.dims[-1] == 256 and len(spec.digest) == 64


@pytest.mark.parametrize(
    "patch, fragment",
    [
        ('lambda = "1/(n"', "offset 4"),
        ('lambda = "n"\nfoo = 1', "unknown key 'foo'"),
        ('lambda = "k"', "unknown variable 'k'"),
        ('lambda = 3', "expected str"),
    ],
)
def test_hamiltonian_errors(patch, fragment):
    text = MINIMAL.replace('lambda = "n"', patch)
    with pytest.raises(SpecError, match=fragment.replace("(", r"\(")):
        parse_spec(text)


@pytest.mark.parametrize(
    "extra, fragment",
    [
        ("[bogus]\nx = 1", "unknown key 'bogus'"),
        ("[ladder]\ndims = [1, 2]", "at least 4"),
        ("[ladder]\ndims = [16, 32, 64, 128]\nwidth = 2", "unknown key 'width'"),
        ("[tolerances]\nconv_tol = -1", "positive"),
        ("[evolution]\ndim = 8\ntimes = [0.5, 1.0]", "start at 0"),
        ("[evolution]\ndim = 8\nt_max = 1\nsteps = 2\nmethod = \"rk4\"", "positive step"),
        ("[evolution]\ndim = 8\nt_max = 1\nsteps = 2\nmethod = \"euler\"", "unknown method"),
    ],
)
def test_section_errors(extra, fragment):
    with pytest.raises(SpecError, match=fragment):
        parse_spec(MINIMAL + "\n" + extra)


def test_toml_syntax_error_has_position():
    with pytest.raises(SpecError, match="line 1, column"):
        parse_spec("[hamiltonian\n")


def test_rank_sum_terms_and_strict_term_keys():
    text = """
[hamiltonian]
kind = "diagonal"
lambda = "n"
[operator]
kind = "rank-sum"
[[operator.term]]
alpha = [0.5, -0.25]
psi = "exp(-n)"
phi = "n*exp(-n)"
[[operator.term]]
psi = "1/n^2"
phi = "1/n^2"
"""
    spec = parse_spec(text)
    assert [t.alpha for t in spec.operator.terms] == [0.5 - 0.25j, 1.0]
    with pytest.raises(SpecError, match="unknown key 'beta'"):
        parse_spec(text + "beta = 1\n")


def test_gibbs_needs_diagonal():
    text = MINIMAL.replace('kind = "diagonal"\nlambda = "n"', 'kind = "hermitian"\na_re = "m+n"')
    with pytest.raises(SpecError, match="diagonal"):
        parse_spec(text)


@pytest.mark.parametrize("path", sorted(SPECS.glob("*.toml")), ids=lambda p: p.stem)
def test_shipped_specs_parse(path):
    parse_spec(path.read_text())


# Commands ------------------------------------------------------------------


def test_diagnose_fixture(tmp_path, capsys):
    assert run("diagnose", "--fixture", "inverse-hamiltonian", "-o", tmp_path) == 0
    doc = json.loads((tmp_path / "report.json").read_text())
    mem = doc["report"]["memberships"]
    assert mem["dom_H"]["classification"] == "convergent-evidence"
    left = mem["core_D"]["components"]["left"]
    assert left["classification"] == "divergent-evidence" and left["growth_model"] == "linear"
    assert doc["provenance"]["spec_sha256"] == "fixture:inverse-hamiltonian"
    with open(tmp_path / "series.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == list(cli.SERIES_COLUMNS)
    lefts = [r for r in rows if r["set"] == "core_D" and r["component"] == "left"]
    assert [float(r["S_N"]) for r in lefts] == [float(r["N"]) for r in lefts]


def test_diagnose_gibbs_spec(tmp_path):
    assert run("diagnose", SPECS / "gibbs.toml", "-o", tmp_path) == 0
    doc = json.loads((tmp_path / "report.json").read_text())
    got = doc["report"]["memberships"]["core_D"]["components"]["left"]["limit_estimate"]
    assert abs(got - gibbs_left_limit(1.0)) <= 1e-6 * gibbs_left_limit(1.0)


def test_json_floats_round_trip(tmp_path):
    run("diagnose", "--fixture", "gibbs", "-o", tmp_path)
    text = (tmp_path / "report.json").read_text()
    assert json.dumps(json.loads(text), indent=2) + "\n" == text


def test_flags_override_spec(tmp_path):
    assert run("diagnose", "--fixture", "exp-decay", "-o", tmp_path, "--ladder", "8,12,16,24",
               "--pad", "3", "--tol-fit", "0.01") == 0
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["provenance"]["ladder"] == {"dims": [8, 12, 16, 24], "pad_factor": 3.0}
    assert doc["provenance"]["tolerances"]["fit_tol"] == 0.01


def test_malformed_expression_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text(MINIMAL.replace('"n"', '"1/(n"'))
    assert run("diagnose", bad, "-o", tmp_path / "out") == 2
    assert "offset 4" in capsys.readouterr().err
    assert not (tmp_path / "out" / "report.json").exists()


def test_missing_spec_exit_2(tmp_path):
    assert run("diagnose", tmp_path / "nope.toml", "-o", tmp_path) == 2
    assert run("diagnose", "-o", tmp_path) == 2
    assert run("diagnose", "--fixture", "gibbs", "-o", tmp_path, "--ladder", "1,2") == 2


def test_evolve_writes_tables(tmp_path, capsys):
    assert run("evolve", SPECS / "exp_decay.toml", "-o", tmp_path) == 0
    with open(tmp_path / "trajectory.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == list(cli.TRAJECTORY_COLUMNS)
    assert {r["method"] for r in rows} == {"spectral-exact", "vectorized-expm", "rk4"}
    doc = json.loads((tmp_path / "evolution.json").read_text())
    assert 14 <= doc["rk4_order"]["ratio"] <= 18
    assert doc["methods"]["vectorized-expm"]["max_hs_distance_to_spectral-exact"] <= 1e-9
    with open(tmp_path / "comparison.csv") as fh:
        kinds = [r["kind"] for r in csv.DictReader(fh)]
    assert "rk4-order-ratio" in kinds


def test_evolve_gibbs_stationary(tmp_path):
    assert run("evolve", SPECS / "gibbs.toml", "-o", tmp_path) == 0
    with open(tmp_path / "trajectory.csv") as fh:
        rows = list(csv.DictReader(fh))
    first = rows[0]
    for r in rows:
        for col in ("trace_re", "hs_norm", "purity"):
            assert abs(float(r[col]) - float(first[col])) <= 1e-12
        assert float(r["distance_to_initial"]) <= 1e-12


def test_evolve_preflight_refusal_and_force(tmp_path, capsys):
    assert run("evolve", SPECS / "slow_rank_one.toml", "-o", tmp_path / "a") == 3
    err = capsys.readouterr().err
    assert "comm" in err and "--force" in err
    assert run("evolve", SPECS / "slow_rank_one.toml", "-o", tmp_path / "b", "--force") == 0
    assert json.loads((tmp_path / "b" / "evolution.json").read_text())["forced"] is True


def test_evolve_budget_exit_4(tmp_path):
    assert run("evolve", SPECS / "exp_decay.toml", "-o", tmp_path, "--method", "vectorized-expm",
               "--budget-mb", "1") == 4


def test_evolve_without_section(tmp_path):
    assert run("evolve", SPECS / "inverse_hamiltonian.toml", "-o", tmp_path) == 2


def test_verify_deterministic(tmp_path):
    assert run("verify", "-o", tmp_path / "a", "--seed", "5") == 0
    assert run("verify", "-o", tmp_path / "b", "--seed", "5") == 0
    a = (tmp_path / "a" / "verify.json").read_bytes()
    assert a == (tmp_path / "b" / "verify.json").read_bytes()
    doc = json.loads(a)
    assert doc["all_passed"] and all(c["passed"] for c in doc["checks"])


def test_verify_inject_fault(tmp_path, capsys):
    assert run("verify", "-o", tmp_path, "--inject-fault") != 0
    assert "FAIL  oracle-catalog" in capsys.readouterr().out
    doc = json.loads((tmp_path / "verify.json").read_text())
    failed = [c["name"] for c in doc["checks"] if not c["passed"]]
    assert failed == ["oracle-catalog"]


def test_fixtures_listing(capsys):
    assert run("fixtures") == 0
    out = capsys.readouterr().out
    assert "slow-rank-one" in out and "gibbs" in out


def test_atomic_write_leaves_no_temp_files(tmp_path):
    cli.write_atomic(tmp_path / "x.txt", "hello")
    assert [p.name for p in tmp_path.iterdir()] == ["x.txt"]
