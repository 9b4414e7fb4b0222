import json
from dataclasses import replace

import numpy as np
import pytest

from jade import (
    ArrayConfig,
    EstimationError,
    FadingModel,
    PathParam,
    PronyConfig,
    PulseConfig,
    ValidationError,
    default_scenario,
    load_config,
    monte_carlo,
    run_pipeline,
    scenario_from_dict,
)
from jade.pipeline import trial_seed


def small_scenario(**kw):
    base = default_scenario()
    fields = dict(
        array=ArrayConfig(16, 0.5),
        num_snapshots=20,
        seed=3,
    )
    fields.update(kw)
    return replace(base, **fields)


class TestRunPipeline:
    def test_default_scenario_seed1(self):
        report = run_pipeline(default_scenario())
        assert abs(report.angles_est_deg[0] - (-10.0)) < 0.05
        assert abs(report.angles_est_deg[1] - 20.0) < 0.05
        assert abs(report.slope_median[0] - (-3.0)) < 0.15
        assert abs(report.slope_median[1] - (-7.0)) < 0.15
        assert report.estimate_valid
        assert report.angles_true_deg == [-10.0, 20.0]
        assert report.delays_true == [3.0, 7.0]

    def test_single_deterministic_path_exact(self):
        cfg = replace(
            default_scenario(),
            paths=[PathParam(angle_deg=13.7, delay=2.5)],
            fading=FadingModel.deterministic(1.0),
            num_snapshots=4,
        )
        report = run_pipeline(cfg)
        assert abs(report.angles_est_deg[0] - 13.7) < 1e-4
        assert abs(report.delay_median[0] - 2.5) < 1e-6

    def test_rejects_empty_paths(self):
        cfg = replace(default_scenario(), paths=[])
        with pytest.raises(ValidationError):
            run_pipeline(cfg)

    def test_rejects_mode_count_mismatch(self):
        cfg = replace(default_scenario(), prony=PronyConfig(num_modes=3))
        with pytest.raises(ValidationError):
            run_pipeline(cfg)

    def test_stage_name_in_estimation_error(self, monkeypatch):
        def boom(*args, **kwargs):
            raise RuntimeError("synthetic numerical failure")

        monkeypatch.setattr("jade.pipeline.svd_prony", boom)
        with pytest.raises(EstimationError, match=r"\[prony\]"):
            run_pipeline(small_scenario())

    def test_byte_identical_reports(self):
        cfg = small_scenario()
        a = run_pipeline(cfg).to_json()
        b = run_pipeline(cfg).to_json()
        assert a == b

    def test_timing_excluded_by_default(self):
        report = run_pipeline(small_scenario())
        parsed = json.loads(report.to_json())
        assert "timing_s" not in parsed
        assert "timing_s" in json.loads(report.to_json(include_timing=True))
        assert report.timing_s > 0

    def test_config_echo_regenerates_run(self):
        report = run_pipeline(small_scenario())
        echoed = scenario_from_dict(json.loads(report.to_json())["config"])
        again = run_pipeline(echoed)
        assert again.to_json() == report.to_json()

    def test_artifacts_only_on_request(self):
        cfg = small_scenario()
        assert run_pipeline(cfg).artifacts is None
        report = run_pipeline(cfg, keep_artifacts=True)
        assert report.artifacts is not None
        assert report.artifacts.snapshots.num_snapshots == cfg.num_snapshots


class TestMonteCarlo:
    def test_single_trial_matches_direct_run(self):
        cfg = small_scenario()
        mc = monte_carlo(cfg, trials=1)
        # trials share the base config's resolved pulse bits; only the
        # fading/noise seed is re-derived per trial
        direct = run_pipeline(replace(cfg.resolved(), seed=trial_seed(cfg.seed, 0)))
        assert mc.trials[0]["angles_est_deg"] == direct.angles_est_deg
        assert mc.trials[0]["delay_median"] == direct.delay_median
        assert mc.num_failed == 0
        assert mc.angle_rmse_deg == [abs(e) for e in direct.angle_errors_deg]

    def test_four_trial_delay_table(self):
        mc = monte_carlo(small_scenario(), trials=4)
        table = np.array([t["slope_median"] for t in mc.trials])
        assert table.shape == (4, 2)
        assert np.abs(table - [-3.0, -7.0]).max() < 0.4

    def test_trial_seeds_differ_and_are_deterministic(self):
        seeds = [trial_seed(1, t) for t in range(6)]
        assert len(set(seeds)) == 6
        assert seeds == [trial_seed(1, t) for t in range(6)]

    def test_parallel_jobs_identical_output(self):
        cfg = small_scenario(num_snapshots=10)
        serial = monte_carlo(cfg, trials=4, jobs=1)
        parallel = monte_carlo(cfg, trials=4, jobs=3)
        assert serial.to_dict() == parallel.to_dict()

    def test_failed_trials_reported_and_excluded(self, monkeypatch):
        from jade.prony import svd_prony as real_svd_prony

        calls = {"n": 0}

        def flaky(corr, cfg):
            calls["n"] += 1
            if calls["n"] == 2:
                raise EstimationError("prony", "injected failure")
            return real_svd_prony(corr, cfg)

        monkeypatch.setattr("jade.pipeline.svd_prony", flaky)
        mc = monte_carlo(small_scenario(num_snapshots=10), trials=3)
        assert mc.num_failed == 1
        assert mc.trials[1]["ok"] is False
        assert "injected failure" in mc.trials[1]["error"]
        ok = [t for t in mc.trials if t["ok"]]
        assert len(ok) == 2
        err = np.array([t["angle_errors_deg"] for t in ok])
        assert mc.angle_rmse_deg == pytest.approx(np.sqrt((err**2).mean(axis=0)).tolist())

    def test_rmse_improves_with_snapshots(self):
        rmses = []
        for s_count in (100, 400):
            mc = monte_carlo(small_scenario(num_snapshots=s_count), trials=8)
            rmses.append(float(np.sqrt(np.mean(np.array(
                [t["angle_errors_deg"] for t in mc.trials]) ** 2))))
        assert rmses[1] < rmses[0]

    def test_rejects_bad_trial_count(self):
        with pytest.raises(ValidationError):
            monte_carlo(small_scenario(), trials=0)


class TestConfigHandling:
    def test_defaults_match_shipped_scenario(self):
        cfg = scenario_from_dict({})
        ref = default_scenario()
        assert cfg.to_dict() == ref.to_dict()

    def test_load_config_file(self, tmp_path):
        text = """
        # reference scenario with a smaller array
        schema = 1
        rolloff = 0.35
        carrier_freq = 0.25
        symbols = 32
        oversample = 4
        sensors = 32
        spacing = 0.5
        angles_deg = -10, 20
        delays = 3, 7
        fading = rayleigh
        sigma = 1.0
        snapshots = 50   # keep it quick
        seed = 7
        """
        path = tmp_path / "scenario.cfg"
        path.write_text("\n".join(line.strip() for line in text.strip().splitlines()))
        cfg = load_config(path)
        assert cfg.array.num_sensors == 32
        assert cfg.num_snapshots == 50
        assert cfg.seed == 7
        assert [p.angle_deg for p in cfg.paths] == [-10.0, 20.0]
        assert [p.delay for p in cfg.paths] == [3.0, 7.0]

    def test_explicit_bits_round_trip(self):
        bits = [0, 1] * 16
        cfg = replace(default_scenario(), pulse=PulseConfig(0.35, 0.25, 32, 4, bits=bits))
        echoed = scenario_from_dict(cfg.to_dict())
        assert list(echoed.pulse.bits) == bits

    def test_unknown_keys_rejected(self):
        with pytest.raises(ValidationError, match="unknown config keys"):
            scenario_from_dict({"carrier": 0.25})

    def test_unsupported_schema_rejected(self):
        with pytest.raises(ValidationError, match="schema"):
            scenario_from_dict({"schema": 2})

    def test_mismatched_path_lists_rejected(self):
        with pytest.raises(ValidationError):
            scenario_from_dict({"angles_deg": "-10,20", "delays": "3"})

    def test_malformed_line_rejected(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("rolloff 0.35\n")
        with pytest.raises(ValidationError):
            load_config(path)

    def test_fading_kinds_round_trip(self):
        for kind, extra in [
            ("deterministic", {"beta_re": 0.5, "beta_im": -0.5}),
            ("rician", {"nu": 1.2, "sigma": 0.4}),
            ("suzuki", {"sigma": 0.9, "mean_db": -1.0, "std_db": 4.0}),
        ]:
            raw = {"fading": kind, **extra}
            cfg = scenario_from_dict(raw)
            assert cfg.fading.kind == kind
            again = scenario_from_dict(cfg.to_dict())
            assert again.fading == cfg.fading

    def test_scenario_validation(self):
        cfg = replace(default_scenario(), num_snapshots=0)
        with pytest.raises(ValidationError):
            cfg.validate()
        cfg = replace(default_scenario(), band_threshold=1.0)
        with pytest.raises(ValidationError):
            cfg.validate()
        cfg = replace(default_scenario(), seed=-1)
        with pytest.raises(ValidationError):
            cfg.validate()
