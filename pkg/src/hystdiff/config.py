"""Experiment configuration: flat key = value sections, archivable and diffable.

The built-in reference experiment is the depinning demo: bilinear initial
data with slope 2 left and 7 right of an interface at the origin, a height-2
jump, homogeneous Neumann walls at +-2, and step size eps**2 = 0.01.  Its
standing interface starts moving near t = 0.05.  Note the data dip below -2
on the far left, so the strict admissibility gate rejects them by design.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .profile import BOUNDED_NEUMANN, WHOLE_LINE, Grid, Profile, ProfileError, SimState, min_alpha

ANALYTIC = "analytic"
FD_NEUMANN = "fd-neumann"

__all__ = [
    "Segment",
    "Tolerances",
    "ExperimentConfig",
    "ConfigError",
    "reference_config",
    "parse_config",
    "render_config",
    "build_initial_state",
]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Segment:
    x_from: float
    x_to: float
    slope: float
    intercept: float

    def value(self, x: float) -> float:
        return self.slope * x + self.intercept


@dataclass(frozen=True)
class Tolerances:
    root: float = 1e-12
    admissibility: float | None = None  # None: 1e-8 analytic, 10 h**2 bounded
    quadrature: float = 1e-8

    def admissibility_for(self, backend: str, h: float) -> float:
        if self.admissibility is not None:
            return self.admissibility
        return 1e-8 if backend == ANALYTIC else 10.0 * h * h


@dataclass
class ExperimentConfig:
    eps2: float = 0.01
    backend: str = FD_NEUMANN
    left: float = -2.0
    right: float = 2.0
    h: float = 1.0 / 400.0
    t_final: float = 0.25
    snapshot_times: tuple[float, ...] = ()
    segments: tuple[Segment, ...] = ()
    xi0: float = 0.0
    alpha: float | None = None
    tolerances: Tolerances = field(default_factory=Tolerances)
    strict: bool = False
    sweep_eps2: tuple[float, ...] = (0.01, 0.005, 0.0025)
    sweep_gamma: float = 0.25
    comparison_times: tuple[float, ...] = (0.03, 0.06, 0.10, 0.15, 0.20)

    @property
    def eps(self) -> float:
        return math.sqrt(self.eps2)

    def validate(self) -> None:
        if self.eps2 <= 0:
            raise ConfigError("eps2 must be positive")
        if self.eps2 > self.t_final:
            raise ConfigError("eps2 must not exceed t_final")
        if self.backend not in (ANALYTIC, FD_NEUMANN):
            raise ConfigError(f"unknown backend {self.backend!r}")
        if not self.left < self.right:
            raise ConfigError("domain needs left < right")
        if not self.segments:
            raise ConfigError("initial data needs at least one segment")
        if not self.left <= self.xi0 <= self.right:
            raise ConfigError("xi0 must lie inside the domain")
        xs = self.left
        for seg in self.segments:
            if abs(seg.x_from - xs) > 1e-9:
                raise ConfigError(f"segments must be contiguous; gap at {seg.x_from}")
            if seg.x_to <= seg.x_from:
                raise ConfigError("segment needs x_from < x_to")
            xs = seg.x_to
        if abs(xs - self.right) > 1e-9:
            raise ConfigError("segments must cover the domain up to its right end")
        if self.h > self.eps / 4:
            raise ConfigError(f"grid spacing {self.h} too coarse; need h <= eps/4 = {self.eps / 4}")

    def grid(self) -> Grid:
        kind = WHOLE_LINE if self.backend == ANALYTIC else BOUNDED_NEUMANN
        return Grid.from_spacing(kind, self.left, self.right, self.h)


def reference_config() -> ExperimentConfig:
    """The bundled depinning experiment (see module docstring)."""
    return ExperimentConfig(
        eps2=0.01,
        backend=FD_NEUMANN,
        left=-2.0,
        right=2.0,
        h=1.0 / 400.0,
        t_final=0.25,
        snapshot_times=(0.01, 0.03, 0.05, 0.08, 0.15, 0.25),
        segments=(
            Segment(-2.0, 0.0, 2.0, -0.6),
            Segment(0.0, 2.0, 7.0, 1.4),
        ),
        xi0=0.0,
        alpha=7.0,
    )


def _segment_value(segments: tuple[Segment, ...], x: float, side: str) -> float:
    """One-sided segment value at x: 'left' reads the limit from below,
    'right' from above (they differ only at segment boundaries)."""
    if side == "left":
        for seg in segments:
            if seg.x_from < x <= seg.x_to:
                return seg.value(x)
        return segments[0].value(x)
    for seg in segments:
        if seg.x_from <= x < seg.x_to:
            return seg.value(x)
    return segments[-1].value(x)


def build_initial_state(cfg: ExperimentConfig) -> SimState:
    """Sample the configured segments on the grid, track the interface jump
    exactly, and attach the majorant slope (smallest valid one by default)."""
    cfg.validate()
    grid = cfg.grid()
    x = grid.x
    snap = grid.h * 1e-9

    vals = np.empty(grid.n_points)
    for i, xi_ in enumerate(x):
        if xi_ <= cfg.xi0:
            vals[i] = _segment_value(cfg.segments, float(xi_), "left")
        else:
            vals[i] = _segment_value(cfg.segments, float(xi_), "right")
    left_lim = _segment_value(cfg.segments, cfg.xi0, "left")
    right_lim = _segment_value(cfg.segments, cfg.xi0, "right")
    on_node = np.abs(x - cfg.xi0) <= snap
    vals[on_node] = 0.5 * (left_lim + right_lim)

    u = Profile(grid, vals, jump_pos=cfg.xi0, left_limit=left_lim, right_limit=right_lim)
    probe = SimState(u, cfg.xi0, alpha=1.0)
    alpha = cfg.alpha if cfg.alpha is not None else max(min_alpha(probe), 1e-6)
    return SimState(u, cfg.xi0, alpha=alpha)


def _floats(raw: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in raw.replace(",", " ").split())


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    cfg = ExperimentConfig()
    try:
        exp = cp["experiment"]
        cfg.eps2 = exp.getfloat("eps2", cfg.eps2)
        cfg.backend = exp.get("backend", cfg.backend).strip()
        cfg.t_final = exp.getfloat("t_final", cfg.t_final)
        if "snapshot_times" in exp:
            cfg.snapshot_times = _floats(exp["snapshot_times"])
        cfg.strict = exp.getboolean("strict", cfg.strict)

        dom = cp["domain"]
        cfg.left = dom.getfloat("left", cfg.left)
        cfg.right = dom.getfloat("right", cfg.right)
        cfg.h = dom.getfloat("h", cfg.h)

        ini = cp["init"]
        cfg.xi0 = ini.getfloat("xi0", cfg.xi0)
        if "alpha" in ini:
            cfg.alpha = ini.getfloat("alpha")
        segs = []
        for line in ini.get("segments", "").strip().splitlines():
            toks = _floats(line)
            if len(toks) != 4:
                raise ConfigError(f"segment line needs 4 numbers: {line!r}")
            segs.append(Segment(*toks))
        cfg.segments = tuple(segs)

        if cp.has_section("tolerances"):
            tol = cp["tolerances"]
            adm = tol.get("admissibility", "auto").strip()
            cfg.tolerances = Tolerances(
                root=tol.getfloat("root", 1e-12),
                admissibility=None if adm == "auto" else float(adm),
                quadrature=tol.getfloat("quadrature", 1e-8),
            )
        if cp.has_section("sweep"):
            sw = cp["sweep"]
            if "eps2_list" in sw:
                cfg.sweep_eps2 = _floats(sw["eps2_list"])
            cfg.sweep_gamma = sw.getfloat("gamma", cfg.sweep_gamma)
            if "comparison_times" in sw:
                cfg.comparison_times = _floats(sw["comparison_times"])
    except KeyError as exc:
        raise ConfigError(f"missing config section: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    cfg.validate()
    return cfg


def render_config(cfg: ExperimentConfig) -> str:
    cp = configparser.ConfigParser()
    cp["experiment"] = {
        "eps2": repr(cfg.eps2),
        "backend": cfg.backend,
        "t_final": repr(cfg.t_final),
        "snapshot_times": " ".join(repr(t) for t in cfg.snapshot_times),
        "strict": str(cfg.strict).lower(),
    }
    cp["domain"] = {"left": repr(cfg.left), "right": repr(cfg.right), "h": repr(cfg.h)}
    seg_lines = "\n" + "\n".join(
        f"{s.x_from!r} {s.x_to!r} {s.slope!r} {s.intercept!r}" for s in cfg.segments
    )
    init = {"xi0": repr(cfg.xi0), "segments": seg_lines}
    if cfg.alpha is not None:
        init["alpha"] = repr(cfg.alpha)
    cp["init"] = init
    cp["tolerances"] = {
        "root": repr(cfg.tolerances.root),
        "admissibility": "auto" if cfg.tolerances.admissibility is None
        else repr(cfg.tolerances.admissibility),
        "quadrature": repr(cfg.tolerances.quadrature),
    }
    cp["sweep"] = {
        "eps2_list": " ".join(repr(e) for e in cfg.sweep_eps2),
        "gamma": repr(cfg.sweep_gamma),
        "comparison_times": " ".join(repr(t) for t in cfg.comparison_times),
    }
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
