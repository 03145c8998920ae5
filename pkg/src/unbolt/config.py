"""Plain-text key/value configuration shared by every module.

INI format via configparser.  The packaged ``data/default.cfg`` carries every
tunable default; a user file overrides individual keys section by section.
"""

from __future__ import annotations

import configparser
from pathlib import Path

import numpy as np

from .ibvs import ServoConfig
from .memory import DetectorRates, MemoryConfig
from .removal import EngagementModel
from .selection import CostWeights, SelectionConfig

DEFAULT_CFG = Path(__file__).parent / "data" / "default.cfg"


class ConfigError(ValueError):
    """Raised when a config file is missing or malformed."""


class Config:
    """Typed accessors over the merged default + user configuration."""

    def __init__(self, path=None):
        parser = configparser.ConfigParser()
        read = parser.read(DEFAULT_CFG)
        if not read:
            raise ConfigError(f"packaged defaults missing at {DEFAULT_CFG}")
        if path is not None:
            if not parser.read(path):
                raise ConfigError(f"cannot read config file {path}")
        self._p = parser

    def _f(self, section: str, key: str) -> float:
        try:
            return self._p.getfloat(section, key)
        except (configparser.Error, ValueError) as e:
            raise ConfigError(f"bad value for [{section}] {key}: {e}") from e

    def _i(self, section: str, key: str) -> int:
        try:
            return self._p.getint(section, key)
        except (configparser.Error, ValueError) as e:
            raise ConfigError(f"bad value for [{section}] {key}: {e}") from e

    def cost_weights(self) -> CostWeights:
        s = "selection"
        joint = np.array([self._f(s, f"w{i}") for i in range(1, 8)])
        return CostWeights(joint=joint, alpha=self._f(s, "alpha"),
                           beta=self._f(s, "beta"), gamma=self._f(s, "gamma"))

    def selection(self) -> SelectionConfig:
        s = "selection"
        return SelectionConfig(
            gantry_range=self._f(s, "gantry_range"),
            gantry_step=self._f(s, "gantry_step"),
            min_plate_clearance=self._f(s, "min_plate_clearance"),
            min_triangle_area=self._f(s, "min_triangle_area"),
        )

    def memory(self) -> MemoryConfig:
        return MemoryConfig(iou_threshold=self._f("memory", "iou_threshold"),
                            query_radius=self._f("memory", "query_radius"))

    def detector(self) -> DetectorRates:
        s = "detector"
        return DetectorRates(recall=self._f(s, "recall"),
                             fp_fraction=self._f(s, "fp_fraction"),
                             position_sigma=self._f(s, "position_sigma"))

    def servo(self) -> ServoConfig:
        s = "servo"
        return ServoConfig(gain=self._f(s, "gain"), dt=self._f(s, "dt"),
                           epsilon=self._f(s, "epsilon"),
                           max_iterations=self._i(s, "max_iterations"),
                           depth_sigma=self._f(s, "depth_sigma"))

    def engagement(self, extension: str = "long") -> EngagementModel:
        s = "removal"
        radius = self._f(s, f"capture_radius_{extension}")
        return EngagementModel(capture_radius=radius,
                               base_attempt_time=self._f(s, "base_attempt_time"),
                               move_time=self._f(s, "move_time"))

    def planner(self) -> dict:
        s = "planner"
        return {
            "budget": self._f(s, "budget"),
            "half_width_y": self._f(s, "corridor_half_width_y"),
            "half_width_z": self._f(s, "corridor_half_width_z"),
            "margin": self._f(s, "corridor_margin"),
            "densify_rad": self._f(s, "densify_rad"),
            "densify_m": self._f(s, "densify_m"),
        }

    def sequencing(self) -> dict:
        s = "sequencing"
        return {"exact_node_limit": self._i(s, "exact_node_limit"),
                "auto_exact_limit": self._i(s, "auto_exact_limit")}

    def numeric_ik(self) -> dict:
        s = "numeric_ik"
        return {
            "damping": self._f(s, "damping"),
            "max_iterations": self._i(s, "max_iterations"),
            "position_tol": self._f(s, "position_tol"),
            "rotation_tol": self._f(s, "rotation_tol"),
        }
