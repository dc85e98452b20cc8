import json
import math

import pytest

from specpart.errors import ConfigError
from specpart.scenarios import (
    build_domain,
    build_potential,
    choose_halfstrip_width,
    parse_p,
    run_example,
    run_ims,
    run_persson,
    run_ring,
    run_solve,
    run_sweep,
    run_threshold,
    snap_window,
)

PI = math.pi


def interval_config(**over):
    cfg = {
        "domain": {"window": [[0.0, PI]], "h": PI / 64},
        "potential": {"kind": "zero"},
        "k": 2,
        "p": 2.0,
        "seed": 0,
        "optimizer": {"n_starts": 1},
    }
    cfg.update(over)
    return cfg


class TestConfigPlumbing:
    def test_snap_window(self):
        win = snap_window([(0.0, 1.04)], 0.25)
        assert win == [(0.0, 1.0)]

    def test_build_domain_full_window(self):
        dom = build_domain({"window": [[0.0, 1.0]], "h": 0.25})
        assert dom.interior_count == 3

    def test_build_domain_with_region(self):
        dom = build_domain({"window": [[-2.0, 2.0], [-2.0, 2.0]], "h": 0.25,
                            "region": {"ball": {"center": [0, 0], "radius": 1.5}}})
        assert 0 < dom.interior_count < 15 * 15

    def test_build_domain_requires_keys(self):
        with pytest.raises(ConfigError):
            build_domain({"h": 0.1})

    @pytest.mark.parametrize("cfg,kind", [
        (None, "zero"),
        ({"kind": "axial_step", "L": 1, "c": 5}, "axial_step"),
        ({"kind": "harmonic"}, "harmonic"),
    ])
    def test_build_potential(self, cfg, kind):
        assert build_potential(cfg).kind == kind

    def test_parse_p(self):
        assert parse_p("inf") == math.inf
        assert parse_p(2) == 2.0
        with pytest.raises(ConfigError):
            parse_p(0.2)


class TestModes:
    def test_solve_writes_artifacts(self, tmp_path):
        payload = run_solve(interval_config(), tmp_path)
        assert (tmp_path / "report.json").exists()
        assert (tmp_path / "cells.pgm").exists()
        assert (tmp_path / "cell_0.spfd").exists()
        # k=2, p=2 optimum of the interval: both halves at lambda = 4
        assert payload["energy_report"]["strong"] == pytest.approx(32**0.5, rel=0.05)

    def test_solve_p_inf(self, tmp_path):
        payload = run_solve(interval_config(p="inf"), tmp_path)
        assert payload["energy_report"]["p"] is None
        assert payload["energy_report"]["strong"] == pytest.approx(4.0, rel=0.05)

    def test_persson_mode(self, tmp_path):
        cfg = {
            "domain": {"window": [[0.0, 40.0]], "h": 0.05},
            "potential": {"kind": "axial_step", "L": 1.0, "c": 5.0},
            "radii": [4.0, 8.0, 12.0],
            "seed": 0,
        }
        payload = run_persson(cfg, tmp_path)
        assert (tmp_path / "sweep.csv").exists()
        assert payload["sigma"] == pytest.approx(5.0, abs=5e-2)
        assert all(payload["sweep"]["monotone_ok"])

    def test_threshold_mode(self, tmp_path):
        cfg = interval_config()
        cfg["domain"] = {"window": [[0.0, 30.0]], "h": 0.05}
        cfg["potential"] = {"kind": "axial_step", "L": 1.0, "c": 5.0}
        cfg["p"] = "inf"
        cfg["radii"] = [4.0, 8.0, 12.0]
        payload = run_threshold(cfg, tmp_path)
        rep = payload["threshold"]
        assert rep["k"] == 2
        assert rep["lambda_k"] <= rep["threshold"] + payload["sigma_uncertainty"] + 1e-6

    def test_ring_mode(self, tmp_path):
        cfg = {
            "domain": {"window": [[0.0, 60.0]], "h": 0.05},
            "potential": {"kind": "axial_step", "L": 1.0, "c": 5.0},
            "k": 2, "eps": 0.2, "sigma": 5.0, "seed": 0,
        }
        payload = run_ring(cfg, tmp_path)
        assert payload["certified_max"] <= 5.2 + 1e-8
        assert (tmp_path / "cells.pgm").exists()

    def test_ims_mode(self, tmp_path):
        cfg = {
            "domain": {"window": [[-12.0, 12.0]], "h": 0.02},
            "potential": {"kind": "radial_step", "r": 1.0, "c": 5.0},
            "n": 3.0, "seed": 0,
        }
        payload = run_ims(cfg, tmp_path)
        assert payload["residual"] <= payload["residual_bound"]
        assert (tmp_path / "inner.spfd").exists()


class TestExamples:
    def test_unknown_example(self, tmp_path):
        with pytest.raises(ConfigError):
            run_example("mystery", {}, {}, tmp_path)

    def test_watermelon_non_equipartition(self, tmp_path):
        params = {"k": 3, "r": 1.0, "c": 12.0, "h": 0.125}
        payload = run_example("watermelon", params, {"seed": 0}, tmp_path)
        assert payload["ball_lambda"] < 12.0 - 1.0
        for lam in payload["sector_lambdas"]:
            assert lam == pytest.approx(12.0, rel=0.05)
        assert not payload["equipartition"]

    def test_halfstrip_small(self, tmp_path):
        params = {"m": 2, "ny": 48, "x_count": 16.0, "x_sweep": 40.0, "x_opt": 10.0}
        payload = run_example("halfstrip", params, {"seed": 0}, tmp_path)
        assert payload["m_oracle"] == 2
        assert payload["count_below"] == 2
        assert payload["n_tilde_inf"] <= payload["count_bounds"]["N"]
        assert payload["sigma_estimate"] == pytest.approx(payload["sigma_true"], abs=5e-2)
        levels = payload["partition_levels"]
        assert levels["1"] <= levels["2"] <= levels["3"]
        # when the threshold condition is verified, every level below it sits
        # strictly under the Sigma estimate (ground states exist per cell)
        for t in payload["thresholds"]:
            if t["strict"]:
                assert t["lambda_k"] < payload["sigma_estimate"]

    def test_strip_energy_decreases_with_window(self, tmp_path):
        p8 = run_example("strip", {"R": 8.0, "ny": 24}, {"seed": 0}, tmp_path / "a")
        p16 = run_example("strip", {"R": 16.0, "ny": 24}, {"seed": 0}, tmp_path / "b")
        assert p16["energy_report"]["strong"] < p8["energy_report"]["strong"]

    def test_nopotential_rings_reach_sigma(self, tmp_path):
        params = {"W": 16.0, "h": 0.5, "k": 2, "eps": 0.25}
        payload = run_example("nopotential", params, {"seed": 0}, tmp_path)
        target = payload["sigma"] + 0.25
        assert all(lam <= target + 1e-8 for lam in payload["ring_lambdas"])

    def test_harmonic_compact_resolvent(self, tmp_path):
        params = {"W": 6.0, "h": 0.25, "k": 2, "p": 2.0}
        cfg = {"seed": 0, "optimizer": {"n_starts": 1}}
        payload = run_example("harmonic", params, cfg, tmp_path)
        assert payload["sigma"] == "inf" or math.isinf(payload["sigma"])
        assert payload["lambda_domain"] == pytest.approx(2.0, abs=5e-2)
        assert payload["threshold"]["strict"] is True

    def test_stripball_flags(self, tmp_path):
        payload = run_example("stripball", {"X": 16.0, "h": 0.125}, {"seed": 0}, tmp_path)
        flags = payload["ground_state_flags"]
        assert flags == [False, False, True]
        for lam in payload["cell_lambdas"]:
            assert lam == pytest.approx(1.0, rel=0.15)


class TestSweep:
    def test_h_sweep_second_order(self, tmp_path):
        cfg = {
            "domain": {"window": [[0.0, PI]], "h": PI / 16},
            "potential": {"kind": "zero"},
            "k": 1, "p": 2.0, "seed": 0,
        }
        payload = run_sweep(cfg, "h", [PI / 32, PI / 64, PI / 128], tmp_path)
        errs = [abs(row["energy"] - 1.0) for row in payload["rows"]]
        assert 3.5 < errs[0] / errs[1] < 4.5
        assert 3.5 < errs[1] / errs[2] < 4.5

    def test_row_failure_recorded(self, tmp_path):
        cfg = interval_config()
        payload = run_sweep(cfg, "k", [1, 10**6], tmp_path)
        assert payload["rows"][0]["error"] == ""
        assert payload["rows"][1]["error"] != ""

    def test_threads_do_not_change_results(self, tmp_path):
        cfg = interval_config()
        a = run_sweep(cfg, "p", [1.0, 2.0], tmp_path / "seq", threads=1)
        b = run_sweep(cfg, "p", [1.0, 2.0], tmp_path / "par", threads=2)
        assert a["rows"] == b["rows"]

    def test_bad_axis(self, tmp_path):
        with pytest.raises(ConfigError):
            run_sweep(interval_config(), "volume", [1.0], tmp_path)


def test_choose_halfstrip_width_brackets_m():
    from specpart.oracles import transcendental_root

    for m in (1, 2, 3):
        ell = choose_halfstrip_width(m, 1.0, 5.0)
        lam0 = transcendental_root(1.0, 5.0)
        assert (m**2 - 1) / ell**2 < 5.0 - lam0 < ((m + 1) ** 2 - 1) / ell**2


def test_reports_are_deterministic(tmp_path):
    cfg = interval_config()
    run_solve(cfg, tmp_path / "a")
    run_solve(cfg, tmp_path / "b")
    a = (tmp_path / "a" / "report.json").read_bytes()
    b = (tmp_path / "b" / "report.json").read_bytes()
    assert a == b
    assert json.loads(a)["config_hash"] == json.loads(b)["config_hash"]
