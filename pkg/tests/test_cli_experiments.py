"""Spec files, experiment harness, output files and the command-line interface."""
import csv

import numpy as np
import pytest
from hypothesis import given, strategies as st

from scaling_lab.cli import cli_main
from scaling_lab.config import ChainSpec, ExperimentSpec, SpecError, SweepSpec, TargetSpec
from scaling_lab.experiments import (build_environment, build_target, emit_table, provenance, run_experiment,
                                     run_sweep_experiment, spec_with, table_spec, version_string)
from scaling_lab.fbm_env import load_path_csv


def read_csv(path):
    lines = [l for l in open(path) if not l.startswith("#")]
    return list(csv.DictReader(lines))


def small_spec(tmp_path, **target):
    t = dict(kind="rwm_osc", a=0.25, b=30.0)
    t.update(target)
    return ExperimentSpec(name="small", target=TargetSpec(**t),
                          chain=ChainSpec(n=10, steps=2000, ell=1.0, seed=3),
                          sweep=SweepSpec(ell_list=(0.5, 2.0)))


class TestSpec:
    def test_round_trip_defaults(self):
        s = ExperimentSpec()
        assert ExperimentSpec.from_text(s.to_text()) == s

    @given(st.floats(1e-6, 1e6), st.integers(1, 10_000), st.lists(st.floats(0.01, 50), max_size=5),
           st.booleans(), st.one_of(st.none(), st.floats(0.01, 5)))
    def test_round_trip(self, ell, n, ells, traces, beta):
        s = ExperimentSpec(name="x", chain=ChainSpec(ell=ell, n=n, beta=beta),
                           sweep=SweepSpec(ell_list=tuple(ells)))
        s.output.emit_traces = traces
        assert ExperimentSpec.from_text(s.to_text()) == s

    def test_comments_and_partial(self):
        s = ExperimentSpec.from_text("name = t  # trailing\n[chain]\n# full line\nn = 5\n")
        assert s.name == "t" and s.chain.n == 5 and s.chain.steps == ChainSpec().steps

    @pytest.mark.parametrize("text", ["[bogus]\n", "[chain]\nwhat = 1\n", "[chain]\nn = five\n",
                                      "steps = 4\n", "[chain]\nno equals sign\n",
                                      "[target]\nkind = banana\n", "[output]\nemit_traces = maybe\n"])
    def test_errors(self, text):
        with pytest.raises(SpecError):
            ExperimentSpec.from_text(text)

    def test_save_load(self, tmp_path):
        s = table_spec("table3")
        s.save(tmp_path / "t.spec")
        assert ExperimentSpec.load(tmp_path / "t.spec") == s
        with pytest.raises(SpecError):
            ExperimentSpec.load(tmp_path / "missing.spec")

    @pytest.mark.parametrize("kind,algo,beta", [("rwm_rough", "rwm", 0.3), ("mala_rough", "mala", 2.3),
                                                ("rwm_osc", "rwm", 1.0), ("mala_osc", "mala", 3.0)])
    def test_defaults_from_target(self, kind, algo, beta):
        cfg = ChainSpec().to_config(TargetSpec(kind=kind, hurst=0.3))
        assert cfg.algo == algo and cfg.beta == pytest.approx(beta)


class TestPresets:
    def test_table1(self):
        s = table_spec("table1")
        assert s.target.kind == "rwm_rough" and s.target.grid_points == 200_001
        cfg = s.chain.to_config(s.target, ell=13.0)
        assert cfg.sigma == pytest.approx(13.0 / 200)

    def test_long_run(self):
        assert table_spec("table2", long_run=True).chain.steps == 1_000_000

    def test_unknown(self):
        with pytest.raises(SpecError):
            table_spec("table9")

    def test_spec_with_does_not_mutate(self):
        s = table_spec("table2")
        t = spec_with(s, chain={"steps": 10})
        assert s.chain.steps == 100_000 and t.chain.steps == 10


class TestHarness:
    def test_environment_deterministic(self):
        t = TargetSpec(kind="rwm_rough", grid_points=2001, env_seed=4)
        a, b = build_environment(t), build_environment(t)
        assert np.array_equal(a.values, b.values)
        assert build_environment(TargetSpec(kind="rwm_osc")) is None

    def test_cholesky_environment(self):
        p = build_environment(TargetSpec(kind="rwm_rough", grid_points=201, method="cholesky"))
        assert p.method == "cholesky"

    def test_mala_rough_target(self):
        t = build_target(TargetSpec(kind="mala_rough", grid_points=2001, c=0.2))
        assert t.params["c"] == 0.2 and t.is_normalized

    def test_run_experiment_outputs(self, tmp_path):
        s = small_spec(tmp_path)
        s.output.emit_traces = True
        summary, trace = run_experiment(s, out_dir=tmp_path)
        rows = read_csv(tmp_path / "small_summary.csv")
        assert float(rows[0]["acceptance"]) == summary.acceptance_rate
        assert (tmp_path / "small_trace.csv").exists() and (tmp_path / "small_trace_acf.csv").exists()
        assert (tmp_path / "small_trace.gp").exists()
        assert len(read_csv(tmp_path / "small_trace.csv")) == 2000

    def test_sweep_files_and_replicas(self, tmp_path):
        s = spec_with(small_spec(tmp_path), sweep={"replicas": 2})
        res = run_sweep_experiment(s, out_dir=tmp_path, workers=1)
        rows = read_csv(tmp_path / "small.csv")
        assert len(rows) == 4 and [float(r["ell"]) for r in rows] == [0.5, 0.5, 2.0, 2.0]
        agg = read_csv(tmp_path / "small_agg.csv")
        assert float(agg[1]["mean_acceptance"]) == res.mean_acceptance[1]
        assert "using 6:8" in (tmp_path / "small.gp").read_text()

    def test_outputs_byte_identical(self, tmp_path):
        s = small_spec(tmp_path)
        run_sweep_experiment(s, out_dir=tmp_path / "a", workers=1)
        run_sweep_experiment(s, out_dir=tmp_path / "b", workers=1)
        assert (tmp_path / "a" / "small.csv").read_bytes() == (tmp_path / "b" / "small.csv").read_bytes()

    def test_empty_sweep(self, tmp_path):
        with pytest.raises(SpecError):
            run_sweep_experiment(spec_with(small_spec(tmp_path), sweep={"ell_list": ()}), emit=False)

    def test_emit_table(self, tmp_path):
        with pytest.raises(ValueError):
            emit_table([], ("a",), tmp_path / "x.csv")
        out = emit_table([(0.1, 2), {"a": 0.3, "b": 4}], ("a", "b"), tmp_path / "x.csv", ["hello"])
        text = out.read_text().splitlines()
        assert text == ["# hello", "a,b", "0.1,2", "0.3,4"]

    def test_provenance(self):
        lines = provenance(table_spec("table2"))
        assert lines[0] == f"scaling_lab version={version_string()}"
        assert any("kind = rwm_osc" in l for l in lines)


class TestCli:
    def test_solve(self, capsys, tmp_path):
        assert cli_main(["solve", "--beta", "1", "--out", str(tmp_path / "s.csv")]) == 0
        out = capsys.readouterr().out
        print(out)
        assert "acceptance_star=0.2338" in out
        assert read_csv(tmp_path / "s.csv")[0]["beta"] == "1.0"

    def test_solve_theta(self, capsys):
        assert cli_main(["solve", "--beta", "0.5", "--theta", "0.9"]) == 0
        assert "ell_star=" in capsys.readouterr().out

    def test_fbm(self, tmp_path):
        f = tmp_path / "p.csv"
        assert cli_main(["fbm", "--hurst", "0.4", "--points", "1001", "--seed", "5", "--out", str(f)]) == 0
        first = f.read_bytes()
        assert cli_main(["fbm", "--hurst", "0.4", "--points", "1001", "--seed", "5", "--out", str(f)]) == 0
        assert f.read_bytes() == first
        p = load_path_csv(f)
        assert p.hurst == 0.4 and p.grid.num_points == 1001

    def test_figure1(self, tmp_path):
        assert cli_main(["figure1", "--out", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "figure1.csv")
        assert len(rows) == 198 and (tmp_path / "figure1.gp").exists()

    def test_run_with_spec_and_overrides(self, tmp_path, capsys):
        spec = small_spec(tmp_path)
        spec.save(tmp_path / "s.spec")
        code = cli_main(["run", "--spec", str(tmp_path / "s.spec"), "--ell", "0.7", "--steps", "1500",
                         "--out", str(tmp_path), "--trace"])
        assert code == 0
        row = read_csv(tmp_path / "small_summary.csv")[0]
        assert float(row["ell"]) == 0.7 and int(row["steps"]) == 1500
        assert (tmp_path / "small_trace.csv").exists()

    def test_rough_run_from_path_file(self, tmp_path):
        f = tmp_path / "p.csv"
        cli_main(["fbm", "--hurst", "0.5", "--points", "2001", "--seed", "1", "--out", str(f)])
        code = cli_main(["run", "--kind", "rwm_rough", "--path-file", str(f), "--dim", "20", "--ell", "3",
                         "--steps", "1000", "--out", str(tmp_path)])
        assert code == 0
        assert read_csv(tmp_path / "run_summary.csv")[0]["kind"] == "rwm_rough"

    def test_sweep(self, tmp_path, capsys):
        code = cli_main(["sweep", "--kind", "mala_osc", "--a", "0.9", "--b", "5", "--dim", "10",
                         "--ells", "1.0,1.5", "--steps", "1000", "--out", str(tmp_path)])
        assert code == 0
        assert "argmax" in capsys.readouterr().out
        assert len(read_csv(tmp_path / "sweep.csv")) == 2

    def test_table_preset_small(self, tmp_path):
        code = cli_main(["table2", "--steps", "1000", "--dim", "10", "--ells", "0.65,2.55",
                         "--out", str(tmp_path)])
        assert code == 0
        rows = read_csv(tmp_path / "table2.csv")
        assert [float(r["ell"]) for r in rows] == [0.65, 2.55]

    def test_checks_subset(self, capsys):
        assert cli_main(["checks", "--only", "solver_anchors", "kernel_integral"]) == 0
        assert "2/2 checks passed" in capsys.readouterr().out

    @pytest.mark.slow
    def test_all_checks(self, capsys):
        assert cli_main(["checks"]) == 0
        print(capsys.readouterr().out)

    def test_failed_check_exit_code(self, monkeypatch, capsys):
        from scaling_lab import checks

        monkeypatch.setitem(checks.CHECKS, "solver_anchors", lambda: (False, "forced"))
        assert cli_main(["checks", "--only", "solver_anchors"]) == 1

    @pytest.mark.parametrize("argv", [["bogus"], ["solve"], ["solve", "--beta", "-1"],
                                      ["run", "--path-file", "/nonexistent.csv", "--kind", "rwm_rough"],
                                      ["checks", "--only", "nope"], ["run", "--dim", "0"],
                                      ["run", "--spec", "/nonexistent.spec"]])
    def test_errors_exit_two(self, argv, capsys):
        assert cli_main(argv) == 2
        assert "error" in capsys.readouterr().err
