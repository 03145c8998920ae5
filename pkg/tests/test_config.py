from __future__ import annotations

import numpy as np
import pytest

from unbolt.config import Config, ConfigError


class TestDefaults:
    def test_cost_weights(self):
        w = Config().cost_weights()
        assert w.alpha == w.beta == w.gamma == 1.0
        assert np.allclose(w.joint, [0.1, 1, 1, 1, 1, 1, 1])

    def test_selection(self):
        s = Config().selection()
        assert s.gantry_range == 1.0 and s.gantry_step == 0.1
        assert s.min_plate_clearance == 0.65
        assert s.min_triangle_area == 1e-4

    def test_memory(self):
        m = Config().memory()
        assert m.iou_threshold == 0.3 and m.query_radius == 0.05

    def test_detector(self):
        d = Config().detector()
        assert (d.recall, d.fp_fraction, d.position_sigma) == (0.97, 0.08, 0.002)

    def test_servo(self):
        s = Config().servo()
        assert s.gain == 1.0 and s.dt == 0.05
        assert s.max_iterations == 200

    def test_engagement_presets(self):
        cfg = Config()
        assert cfg.engagement("long").capture_radius == 0.004
        assert cfg.engagement("short").capture_radius == 0.0015
        assert cfg.engagement("long").base_attempt_time == 6.0

    def test_planner(self):
        p = Config().planner()
        assert p["budget"] == 10.0
        assert p["half_width_y"] == 0.10 and p["half_width_z"] == 0.10
        assert p["densify_rad"] == 0.02 and p["densify_m"] == 0.005

    def test_sequencing(self):
        s = Config().sequencing()
        assert s["exact_node_limit"] == 16 and s["auto_exact_limit"] == 12

    def test_numeric_ik(self):
        n = Config().numeric_ik()
        assert n["damping"] == 0.05 and n["max_iterations"] == 200


class TestOverrides:
    def test_partial_override(self, tmp_path):
        user = tmp_path / "user.cfg"
        user.write_text("[selection]\nalpha = 2.5\n\n[memory]\niou_threshold = 0.4\n")
        cfg = Config(user)
        w = cfg.cost_weights()
        assert w.alpha == 2.5 and w.beta == 1.0  # untouched keys keep defaults
        assert cfg.memory().iou_threshold == 0.4
        assert cfg.selection().gantry_step == 0.1

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            Config(tmp_path / "nope.cfg")

    def test_bad_value(self, tmp_path):
        user = tmp_path / "user.cfg"
        user.write_text("[servo]\ngain = banana\n")
        with pytest.raises(ConfigError):
            Config(user).servo()

    def test_invalid_override_rejected_by_model(self, tmp_path):
        user = tmp_path / "user.cfg"
        user.write_text("[memory]\niou_threshold = 1.5\n")
        with pytest.raises(ValueError):
            Config(user).memory()
