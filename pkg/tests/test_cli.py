import json
import subprocess
import sys

import numpy as np
import pytest

from stabgreedy.analysis import RateFit
from stabgreedy.cli import main
from stabgreedy.experiments import (FPAccuracyPreset, PointDistPreset, PowerDecayPreset,
                                    fp_accuracy, point_dist, power_decay, read_fp_table)
from stabgreedy.geometry import PointCloud, in_blob_with_hole
from stabgreedy.greedy import RunTrace, StopReason
from stabgreedy.interpolant import load_model


def files(root):
    return {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


class TestRunCommand:
    def test_p_greedy_run(self, tmp_path, capsys):
        rc = main(["run", "--kernel", "linear-matern", "--rule", "p", "--dim", "1",
                   "--candidates", "3000", "--max-n", "200", "--seed", "7", "--out", str(tmp_path)])
        assert rc == 0
        assert "N_max=200 stop_reason=MaxN" in capsys.readouterr().out
        stem = tmp_path / "run" / "linear-matern_d1_g1_s7"
        trace = RunTrace.from_csv(stem.with_suffix(".trace.csv"))
        assert len(trace) == 200 and trace.stop_reason is StopReason.MAX_N
        model = load_model(json.loads(stem.with_suffix(".model.json").read_text()))
        assert model.n == 200
        rate = RateFit.from_json(stem.with_suffix(".rate.json").read_text())
        assert len(rate.slopes) == 9

    def test_fp_cond_bound(self, tmp_path, capsys):
        rc = main(["run", "--rule", "fp", "--gamma", "0", "--target", "falpha:3.5",
                   "--cond-bound", "1e14", "--candidates", "5000", "--out", str(tmp_path)])
        assert rc == 0
        assert "stop_reason=CondBound" in capsys.readouterr().out

    def test_missing_target(self, tmp_path):
        assert main(["run", "--rule", "f", "--out", str(tmp_path)]) == 2

    def test_bad_flag_value(self):
        with pytest.raises(SystemExit) as exc:
            main(["run", "--gamma", "abc"])
        assert exc.value.code == 2

    def test_gamma_out_of_range(self, tmp_path):
        assert main(["run", "--gamma", "2", "--out", str(tmp_path)]) == 2

    def test_io_error(self, tmp_path):
        assert main(["run", "--candidates", str(tmp_path / "missing.csv"),
                     "--out", str(tmp_path)]) == 3

    def test_candidates_and_target_files(self, tmp_path, capsys):
        x = np.linspace(0, 1, 300)
        PointCloud(x).to_csv(tmp_path / "cand.csv")
        (tmp_path / "f.csv").write_text("f\n" + "\n".join(repr(float(v)) for v in np.sin(3 * x)))
        rc = main(["run", "--candidates", str(tmp_path / "cand.csv"), "--target",
                   str(tmp_path / "f.csv"), "--rule", "f", "--gamma", "0.1", "--max-n", "20",
                   "--format", "json", "--out", str(tmp_path)])
        assert rc == 0
        trace = RunTrace.from_json(tmp_path / "run" / "linear-matern_d1_g0.1_s0.trace.json")
        assert len(trace) == 20 and trace.rows[-1].r_max < 1e-3

    def test_byte_identical_rerun(self, tmp_path):
        args = ["run", "--rule", "random", "--gamma", "0.5", "--dim", "2", "--candidates", "1000",
                "--max-n", "40", "--seed", "3"]
        main(args + ["--out", str(tmp_path / "a")])
        main(args + ["--out", str(tmp_path / "b")])
        assert files(tmp_path / "a") == files(tmp_path / "b")

    def test_console_entry_point(self, tmp_path):
        out = subprocess.run([sys.executable, "-m", "stabgreedy.cli", "run", "--candidates", "200",
                              "--max-n", "5", "--out", str(tmp_path)],
                             capture_output=True, text=True)
        assert out.returncode == 0 and out.stdout.startswith("N_max=5")


class TestPresets:
    def test_power_decay_small_grid(self, tmp_path):
        p = PowerDecayPreset(kernels=("basic-matern",), dims=(1,), gammas=(0.5, 1.0), seeds=(0, 1),
                             n_candidates=2000, max_n=120)
        tables = power_decay(tmp_path, p)
        rows = tables[("basic-matern", 1)]
        assert [r[0] for r in rows] == [0.5, 1.0]
        root = tmp_path / "power-decay"
        assert (root / "rates_basic-matern_d1.csv").read_text().startswith("gamma,mean_slope")
        assert len(list(root.glob("*.trace.csv"))) == 4
        for path in root.glob("*.trace.csv"):
            assert len(RunTrace.from_csv(path)) == 120

    def test_power_decay_quick_profile(self):
        q = PowerDecayPreset.quick()
        assert q.dims == (1,) and len(q.seeds) == 3 and q.max_n == 400

    def test_power_decay_deterministic(self, tmp_path):
        p = PowerDecayPreset(kernels=("linear-matern",), dims=(2,), gammas=(0.3,), seeds=(5,),
                             n_candidates=800, max_n=40)
        power_decay(tmp_path / "a", p)
        power_decay(tmp_path / "b", p)
        assert files(tmp_path / "a") == files(tmp_path / "b")

    def test_pool_matches_serial(self, tmp_path, monkeypatch):
        import stabgreedy.experiments as ex
        p = PowerDecayPreset(kernels=("basic-matern",), dims=(1,), gammas=(0.5, 1.0), seeds=(0,),
                             n_candidates=500, max_n=60)
        monkeypatch.setenv("STABGREEDY_THREADS", "1")
        serial = power_decay(tmp_path / "a", p)
        monkeypatch.setattr(ex.os, "cpu_count", lambda: 2)
        monkeypatch.setenv("STABGREEDY_THREADS", "2")
        assert ex.worker_count() == 2
        pooled = power_decay(tmp_path / "b", p)
        assert pooled == serial
        assert files(tmp_path / "a") == files(tmp_path / "b")

    def test_fp_accuracy_layout(self, tmp_path):
        p = FPAccuracyPreset(n_train=1500, n_test=1500, cond_bound=1e10, cond_every=5)
        table = fp_accuracy(tmp_path, p)
        assert len(table) == 12
        rows = read_fp_table(tmp_path / "fp-accuracy" / "table.csv")
        assert len(rows) == 6
        assert list(rows[0]) == ["gamma", "n_max_a1.51", "r_max_a1.51", "n_max_a3.5", "r_max_a3.5"]
        assert all(stop in ("CondBound", "Exhausted") for _, _, stop in table.values())

    def test_point_dist(self, tmp_path):
        sel = point_dist(tmp_path, PointDistPreset())
        root = tmp_path / "point-dist"
        assert set(sel) == {0.0, 0.04, 0.15, 1.0}
        domain = PointCloud.from_csv(root / "domain.csv")
        assert len(domain) == 831 and np.all(in_blob_with_hole(domain))
        a = np.array([0.17, 0.17])
        for g in sel:
            pts = PointCloud.from_csv(root / f"selected_g{g:g}.csv")
            assert len(pts) == 50 and np.all(in_blob_with_hole(pts))
        mean_dist = {g: np.mean(np.linalg.norm(p - a, axis=1)) for g, p in sel.items()}
        assert mean_dist[0.0] < mean_dist[1.0]
