import json
import math
import subprocess
import sys

import numpy as np
import pytest
import yaml

from pinchcast import (
    ExperimentSpec,
    PinchcastError,
    SystemConfig,
    dbm_to_watts,
    emit,
    emit_traces,
    generate_topology,
    load_config,
    load_topology,
    preset_spec,
    run_experiment,
    save_topology,
    solve_tin,
    watts_to_dbm,
)
from pinchcast.experiments import ExperimentResult, spec_point_config


class TestUnits:
    def test_dbm_round_trip(self):
        assert dbm_to_watts(-10.0) == pytest.approx(1e-4, rel=1e-12)
        assert dbm_to_watts(-90.0) == pytest.approx(1e-12, rel=1e-12)
        assert watts_to_dbm(dbm_to_watts(7.3)) == pytest.approx(7.3, rel=1e-12)


class TestGenerateTopology:
    def test_deterministic_under_fixed_seed(self):
        cfg = SystemConfig()
        t1 = generate_topology("uniform_random", cfg, np.random.default_rng(5), num_groups=3, num_users=9)
        t2 = generate_topology("uniform_random", cfg, np.random.default_rng(5), num_groups=3, num_users=9)
        assert np.array_equal(t1.user_xyz_m, t2.user_xyz_m)
        assert t1.groups == t2.groups

    def test_heterogeneous_clusters_partition_aperture(self):
        cfg = SystemConfig(waveguide_length_m=20.0)
        topo = generate_topology(
            "heterogeneous_clusters", cfg, np.random.default_rng(0), num_groups=4, num_users=40
        )
        for gi, members in enumerate(topo.groups):
            xs = topo.user_xyz_m[list(members), 0]
            assert np.all(xs >= 5.0 * gi)
            assert np.all(xs < 5.0 * (gi + 1))

    def test_uniform_mean_near_center(self):
        cfg = SystemConfig(waveguide_length_m=20.0)
        topo = generate_topology(
            "uniform_random", cfg, np.random.default_rng(1), num_groups=2, num_users=100_000
        )
        assert topo.user_xyz_m[:, 0].mean() == pytest.approx(10.0, rel=0.01)
        assert topo.user_xyz_m[:, 1].mean() == pytest.approx(3.0, rel=0.01)

    def test_uneven_split_covers_all_users(self):
        cfg = SystemConfig()
        topo = generate_topology("uniform_random", cfg, np.random.default_rng(2), num_groups=3, num_users=10)
        sizes = sorted(len(g) for g in topo.groups)
        assert sizes == [3, 3, 4]

    def test_rejects_unknown_mode(self):
        cfg = SystemConfig()
        with pytest.raises(PinchcastError):
            generate_topology("gridded", cfg, np.random.default_rng(0), num_groups=2, num_users=4)


class TestFileIo:
    def test_config_round_trip(self, tmp_path):
        path = tmp_path / "config.yaml"
        path.write_text(
            "waveguide_length_m: 15.0\npower_budget_dbm: 0.0\nnoise_dbm: -80.0\n"
            "grid_points: 64\nnum_antennas: 4\n"
        )
        cfg = load_config(path)
        assert cfg.waveguide_length_m == 15.0
        assert cfg.power_budget_w == pytest.approx(1e-3, rel=1e-12)
        assert cfg.noise_w == pytest.approx(1e-11, rel=1e-12)
        assert cfg.grid_points == 64

    def test_config_rejects_unknown_keys(self, tmp_path):
        path = tmp_path / "config.yaml"
        path.write_text("wavelength: 0.01\n")
        with pytest.raises(Exception):
            load_config(path)

    def test_topology_file_with_noise_overrides(self, tmp_path):
        path = tmp_path / "topo.yaml"
        path.write_text(
            "groups:\n"
            "  - [[3.0, 1.0], [14.0, 5.0, -85.0]]\n"
            "  - [[8.0, 3.0]]\n"
            "noise_dbm: -92.0\n"
        )
        topo = load_topology(path)
        assert topo.num_users == 3
        assert topo.groups == ((0, 1), (2,))
        assert topo.noise_w[0] == pytest.approx(dbm_to_watts(-92.0), rel=1e-12)
        assert topo.noise_w[1] == pytest.approx(dbm_to_watts(-85.0), rel=1e-12)
        assert np.all(topo.user_xyz_m[:, 2] == 0.0)

    def test_topology_save_load_round_trip(self, tmp_path):
        cfg = SystemConfig()
        topo = generate_topology("uniform_random", cfg, np.random.default_rng(3), num_groups=2, num_users=6)
        path = tmp_path / "t.yaml"
        save_topology(topo, path)
        back = load_topology(path, cfg)
        assert np.allclose(back.user_xyz_m, topo.user_xyz_m, rtol=0, atol=1e-12)
        assert back.groups == topo.groups


class TestRunExperiment:
    def _tiny_spec(self, **over):
        base = dict(
            sweep="power_dbm", values=[-10.0, 0.0], schemes=["tin"],
            trials=3, seed=7, num_groups=2, num_users=4, num_antennas=2,
        )
        base.update(over)
        return ExperimentSpec(**base)

    def _tiny_config(self):
        return SystemConfig(waveguide_length_m=10.0, grid_points=30, num_antennas=2)

    def test_single_row_per_combination(self):
        spec = self._tiny_spec(values=[-10.0], trials=1)
        res = run_experiment(spec, self._tiny_config())
        assert len(res.rows) == 1
        summary = res.summary()
        assert len(summary) == 1
        assert summary[0]["trials_ok"] == 1
        assert summary[0]["trials_failed"] == 0

    def test_deterministic_under_seed(self):
        spec = self._tiny_spec()
        r1 = run_experiment(spec, self._tiny_config())
        r2 = run_experiment(spec, self._tiny_config())
        assert r1.rows == r2.rows

    def test_sweep_applies_config_overrides(self):
        spec = self._tiny_spec(sweep="num_antennas", values=[2.0, 3.0])
        cfg = spec_point_config(spec, self._tiny_config(), 3.0)
        assert cfg.num_antennas == 3
        spec2 = self._tiny_spec(sweep="region_dx", values=[10.0, 12.0])
        cfg2 = spec_point_config(spec2, self._tiny_config(), 12.0)
        assert cfg2.waveguide_length_m == 12.0

    def test_group_sweep_scales_users(self):
        spec = self._tiny_spec(sweep="num_groups", values=[2.0, 3.0], users_per_group=2)
        res = run_experiment(spec, self._tiny_config())
        assert {r["sweep_value"] for r in res.rows} == {2.0, 3.0}

    def test_baseline_runs_included(self):
        spec = self._tiny_spec(values=[-10.0], trials=1, baseline=True)
        res = run_experiment(spec, self._tiny_config())
        flags = {r["baseline"] for r in res.rows}
        assert flags == {False, True}

    def test_parallel_matches_serial(self):
        spec = self._tiny_spec(trials=4)
        serial = run_experiment(spec, self._tiny_config(), workers=1)
        parallel = run_experiment(spec, self._tiny_config(), workers=2)
        assert serial.rows == parallel.rows

    def test_failures_recorded_not_dropped(self):
        spec = self._tiny_spec(values=[-10.0], trials=2)
        # a config whose spacing cannot fit two antennas triggers per-trial failures
        bad = SystemConfig(
            waveguide_length_m=0.004, grid_points=4, num_antennas=2, min_spacing_m=0.01
        )
        res = run_experiment(spec, bad)
        summary = res.summary()
        assert summary[0]["trials_failed"] == 2
        assert summary[0]["trials_ok"] == 0
        assert math.isnan(summary[0]["mean_rate"])
        assert all(r["error"] for r in res.rows)


class TestEmit:
    def _result(self):
        spec = ExperimentSpec(
            sweep="power_dbm", values=[-10.0, 0.0, 10.0], schemes=["tin", "tdma-pm"],
            trials=2, seed=3, num_groups=2, num_users=4, num_antennas=2,
        )
        cfg = SystemConfig(waveguide_length_m=10.0, grid_points=30, num_antennas=2)
        return run_experiment(spec, cfg)

    def test_summary_schema_and_row_count(self, tmp_path):
        res = self._result()
        paths = emit(res, tmp_path, per_trial=True)
        lines = paths[0].read_text().strip().splitlines()
        assert lines[0] == "sweep_value,scheme,baseline,mean_rate,stderr,trials_ok,trials_failed"
        assert len(lines) == 1 + 3 * 2  # three values, two schemes
        trial_lines = paths[1].read_text().strip().splitlines()
        assert len(trial_lines) == 1 + 3 * 2 * 2

    def test_rerun_is_byte_identical(self, tmp_path):
        p1 = emit(self._result(), tmp_path / "a")[0]
        p2 = emit(self._result(), tmp_path / "b")[0]
        assert p1.read_bytes() == p2.read_bytes()

    def test_empty_results_rejected(self, tmp_path):
        res = ExperimentResult(spec=preset_spec("groups"), rows=[])
        with pytest.raises(PinchcastError):
            emit(res, tmp_path)

    def test_trace_emission(self, tmp_path):
        cfg = SystemConfig(waveguide_length_m=10.0, grid_points=30, num_antennas=2)
        topo = generate_topology("uniform_random", cfg, np.random.default_rng(0), num_groups=2, num_users=4)
        sol = solve_tin(topo, cfg, rng=np.random.default_rng(1)).to_solution()
        path = emit_traces([sol], tmp_path / "trace.csv")
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "scheme,baseline,trace,sweep,objective"
        assert len(lines) == 1 + len(sol.traces[0]["objective"])


class TestPresets:
    def test_known_presets_build(self):
        for name in ("power-uniform", "power-hetero", "region", "antennas", "groups"):
            spec = preset_spec(name, trials=5)
            assert spec.trials == 5
            assert spec.values

    def test_unknown_preset_rejected(self):
        with pytest.raises(PinchcastError):
            preset_spec("does-not-exist")


class TestCli:
    def _run(self, *args):
        return subprocess.run(
            [sys.executable, "-m", "pinchcast.cli", *args],
            capture_output=True, text=True, timeout=300,
        )

    def test_solve_and_json_output(self, tmp_path):
        topo_path = tmp_path / "topo.yaml"
        topo_path.write_text("groups:\n  - [[2.0, 1.0], [4.0, 5.0]]\n  - [[8.0, 3.0]]\n")
        cfg_path = tmp_path / "cfg.yaml"
        cfg_path.write_text("waveguide_length_m: 10.0\ngrid_points: 30\nnum_antennas: 2\n")
        out = tmp_path / "sol.json"
        r = self._run(
            "solve", "--topology", str(topo_path), "--config", str(cfg_path),
            "--scheme", "tin", "--seed", "3", "--out", str(out),
        )
        assert r.returncode == 0, r.stderr
        assert "mmf rate" in r.stdout
        data = json.loads(out.read_text())
        assert data["scheme"] == "tin"
        assert data["mmf_rate"] > 0

    def test_experiment_with_spec_file(self, tmp_path):
        spec_path = tmp_path / "spec.yaml"
        yaml.safe_dump(
            dict(sweep="power_dbm", values=[-10.0], schemes=["tin"], trials=2,
                 seed=1, num_groups=2, num_users=4, num_antennas=2),
            spec_path.open("w"),
        )
        cfg_path = tmp_path / "cfg.yaml"
        cfg_path.write_text("waveguide_length_m: 10.0\ngrid_points: 30\n")
        r = self._run(
            "experiment", "--spec", str(spec_path), "--config", str(cfg_path),
            "--out", str(tmp_path / "results"),
        )
        assert r.returncode == 0, r.stderr
        assert (tmp_path / "results" / "summary.csv").exists()

    def test_trace_verb(self, tmp_path):
        cfg_path = tmp_path / "cfg.yaml"
        cfg_path.write_text("waveguide_length_m: 10.0\ngrid_points: 30\nnum_antennas: 2\n")
        out = tmp_path / "trace.csv"
        r = self._run(
            "trace", "--config", str(cfg_path), "--schemes", "tin,tdma-pm",
            "--groups", "2", "--users", "4", "--seed", "2", "--out", str(out),
        )
        assert r.returncode == 0, r.stderr
        assert out.exists()

    def test_validate_verb(self):
        r = self._run("validate")
        assert r.returncode == 0, r.stdout + r.stderr
        assert "PASS" in r.stdout
        assert "FAIL" not in r.stdout
