import json

import numpy as np
import pytest

from mifpo.cli import EXIT_CHECK, EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from mifpo.core import MifpoInstance, two_point_instance
from mifpo.pipeline import load_csv, synthetic_generate


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture()
def separable_csv(tmp_path):
    path = tmp_path / "sep.csv"
    assert run("generate", "--n", 2000, "--seed", 1, "--kind", "separable", "--output", path) == EXIT_OK
    return path


class TestGenerate:
    def test_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run("generate", "--n", 1000, "--seed", 7, "--output", a) == EXIT_OK
        assert run("generate", "--n", 1000, "--seed", 7, "--output", b) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()

    def test_round_trip(self, tmp_path):
        path = tmp_path / "d.csv"
        run("generate", "--n", 300, "--seed", 2, "--output", path)
        ds, ref = load_csv(path), synthetic_generate(300, 2)
        assert np.array_equal(ds.X, ref.X) and np.array_equal(ds.y, ref.y) and np.array_equal(ds.a, ref.a)

    def test_usage_errors(self, tmp_path):
        assert run("generate", "--n", 0, "--seed", 1, "--output", tmp_path / "x.csv") == EXIT_USAGE
        assert run("generate", "--n", 10, "--output", tmp_path / "x.csv") == EXIT_USAGE

    def test_unwritable(self, tmp_path):
        assert run("generate", "--n", 10, "--seed", 1, "--output", tmp_path / "no" / "x.csv") == EXIT_DATA


class TestFront:
    def test_outputs_and_endpoints(self, tmp_path, separable_csv):
        out = tmp_path / "out"
        code = run("front", "--input", separable_csv, "--atoms", 2, "--gammas", "0,1", "--seed", 0,
                   "--output-dir", out)
        assert code == EXIT_OK
        front = json.loads((out / "front.json").read_text())
        assert [p["gamma"] for p in front["points"]] == [0.0, 1.0]
        errs = [p["error"] for p in front["points"]]
        inst = MifpoInstance.from_json((out / "instance.json").read_text())
        assert inst.k == 2
        # separable groups mixed into one atom: the error is the smaller group's share of the held-out rows
        assert errs[0] == pytest.approx(min(inst.alpha0, inst.alpha1), abs=1e-6)
        assert errs[1] == pytest.approx(front["baseline_error"], abs=1e-6)
        cal = json.loads((out / "calibration.json").read_text())
        assert cal["report"]["ece"] <= 0.05
        assert (out / "front.csv").read_text().splitlines()[0] == "gamma,error"

    def test_deterministic(self, tmp_path, separable_csv):
        texts = []
        for name in ("r1", "r2"):
            run("front", "--input", separable_csv, "--atoms", 2, "--gamma-count", 3, "--seed", 5,
                "--output-dir", tmp_path / name)
            texts.append((tmp_path / name / "front.json").read_text())
        assert texts[0] == texts[1]

    def test_instance_input(self, tmp_path):
        path = tmp_path / "inst.json"
        path.write_text(two_point_instance(k=2).to_json())
        assert run("front", "--instance", path, "--gammas", "0,0.5,1", "--seed", 0, "--output-dir", tmp_path / "o") == 0
        errs = [p["error"] for p in json.loads((tmp_path / "o" / "front.json").read_text())["points"]]
        np.testing.assert_allclose(errs, [0.5, 0.25, 0.0], atol=1e-3)
        assert not (tmp_path / "o" / "calibration.json").exists()

    def test_errors(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("f,a,y\n1,0,1\n2,2,0\n")
        assert run("front", "--input", bad, "--seed", 0, "--output-dir", tmp_path / "o") == EXIT_DATA
        assert run("front", "--seed", 0, "--output-dir", tmp_path / "o") == EXIT_USAGE
        assert run("front", "--input", bad, "--output-dir", tmp_path / "o") == EXIT_USAGE
        assert run("front", "--input", bad, "--seed", 0, "--gammas", "0,2", "--output-dir", tmp_path / "o") == EXIT_USAGE
        junk = tmp_path / "junk.json"
        junk.write_text("{}")
        assert run("front", "--instance", junk, "--seed", 0, "--output-dir", tmp_path / "o") == EXIT_DATA


class TestCheck:
    def test_single_suite(self, capsys):
        assert run("check", "--suite", "tv-witness", "--instances", 20, "--seed", 3) == EXIT_OK
        assert capsys.readouterr().out.startswith("PASS tv-witness: 20/20")

    def test_oracle_deterministic(self, capsys):
        run("check", "--suite", "oracle", "--instances", 3, "--seed", 3)
        first = capsys.readouterr().out
        run("check", "--suite", "oracle", "--instances", 3, "--seed", 3)
        assert capsys.readouterr().out == first

    def test_unknown_suite(self):
        assert run("check", "--suite", "nope", "--seed", 0) == EXIT_USAGE


class TestBaseline:
    def test_two_point(self, tmp_path):
        path = tmp_path / "inst.json"
        path.write_text(two_point_instance(k=2).to_json())
        out = tmp_path / "b"
        assert run("baseline", "--instance", path, "--gamma-count", 5, "--seed", 0, "--output-dir", out) == EXIT_OK
        dom = json.loads((out / "dominance.json").read_text())
        assert dom["ok"] and dom["violations"] == []
        pts = json.loads((out / "classifier_points.json").read_text())
        env = {(p["gamma"], p["error"]) for p in pts["envelope"]}
        assert {(0.0, 0.5), (1.0, 0.0)} <= env
        front = json.loads((out / "front.json").read_text())["points"]
        # endpoints coincide with the classifier envelope
        assert front[0]["error"] == pytest.approx(0.5, abs=1e-9) and front[-1]["error"] == pytest.approx(0.0, abs=1e-9)

    def test_flat_instance(self, tmp_path):
        inst = MifpoInstance(0.5, [0.2, 0.7], [0.5, 0.5], [0.2, 0.7], [0.5, 0.5], 2)
        path = tmp_path / "flat.json"
        path.write_text(inst.to_json())
        out = tmp_path / "f"
        assert run("baseline", "--instance", path, "--gamma-count", 3, "--seed", 0, "--output-dir", out) == EXIT_OK
        pts = json.loads((out / "classifier_points.json").read_text())["points"]
        assert min(p["error"] for p in pts) >= json.loads((out / "front.json").read_text())["baseline_error"] - 1e-9


class TestOracle:
    def test_random(self, tmp_path, capsys):
        code = run("oracle", "--L0", 2, "--L1", 1, "--atoms", 2, "--gammas", "0,0.5", "--seed", 4,
                   "--output-dir", tmp_path)
        assert code == EXIT_OK
        d = json.loads((tmp_path / "oracle.json").read_text())
        assert all(r["ok"] for r in d["results"])

    def test_budget(self):
        assert run("oracle", "--L0", 2, "--L1", 2, "--atoms", 2, "--gammas", "0.5", "--seed", 0) == EXIT_USAGE

    def test_detects_disagreement(self, tmp_path):
        # a negative tolerance cannot be met, so the command reports a check failure
        code = run("oracle", "--gammas", "0", "--seed", 0, "--tol", -1)
        assert code == EXIT_CHECK
