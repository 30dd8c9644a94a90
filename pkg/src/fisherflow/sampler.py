"""Sample generation: integrate the learned field from the prior and decode.

Two integrators are provided. ``velocity_euler`` takes geodesic Euler steps
exp_x(h v(t, x)), which keeps iterates on the manifold by construction.
``endpoint_geodesic`` reconstructs an endpoint estimate from the velocity
model, x1_hat = exp_x((1 - t) v(t, x)), and steps toward it along the
geodesic with a schedule-controlled fraction alpha'(t) dt / (1 - alpha(t)).

Coarse steps can overshoot the orthant; instead of failing, negative
coordinates are clipped to zero, the point is renormalised, and a diagnostic
counter is incremented.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import field_model as fm
from .geometry import simplex, sphere

# Samples are integrated in fixed-size chunks to bound peak memory; results
# are identical for any n because all randomness is drawn outside the loop.
_CHUNK = 8192

VELOCITY_EULER = "velocity_euler"
ENDPOINT_GEODESIC = "endpoint_geodesic"
DECODE_ARGMAX = "argmax"
DECODE_SAMPLE = "categorical_sample"

_FD_STEP = 1e-5


@dataclass(frozen=True)
class Schedule:
    """Monotone time reparameterisation alpha: [0,1] -> [0,1] with fixed endpoints."""

    name: str
    alpha: Callable[[float], float]
    alpha_prime: Callable[[float], float] | None = None

    def derivative(self, t: float) -> float:
        """Closed-form derivative when registered, else a clipped central difference."""
        if self.alpha_prime is not None:
            return float(self.alpha_prime(t))
        lo = max(0.0, t - _FD_STEP)
        hi = min(1.0, t + _FD_STEP)
        return (float(self.alpha(hi)) - float(self.alpha(lo))) / (hi - lo)


def _validate_schedule(schedule: Schedule, grid: int = 257) -> Schedule:
    ts = np.linspace(0.0, 1.0, grid)
    values = np.array([float(schedule.alpha(t)) for t in ts])
    if abs(values[0]) > 1e-9 or abs(values[-1] - 1.0) > 1e-9:
        raise ValueError(f"schedule {schedule.name!r} must satisfy alpha(0)=0, alpha(1)=1")
    if np.any(np.diff(values) < -1e-12):
        raise ValueError(f"schedule {schedule.name!r} must be monotone non-decreasing")
    return schedule


SCHEDULES: dict[str, Schedule] = {
    "identity": Schedule("identity", alpha=lambda t: t, alpha_prime=lambda t: 1.0),
    "cosine": Schedule("cosine", alpha=lambda t: 0.5 * (1.0 - np.cos(np.pi * t))),
}


def register_schedule(schedule: Schedule) -> Schedule:
    """Add a custom schedule to the registry after validating its invariants."""
    SCHEDULES[schedule.name] = _validate_schedule(schedule)
    return schedule


def get_schedule(name_or_schedule) -> Schedule:
    if isinstance(name_or_schedule, Schedule):
        return name_or_schedule
    try:
        return SCHEDULES[name_or_schedule]
    except KeyError:
        raise ValueError(
            f"unknown schedule {name_or_schedule!r}; registered: {sorted(SCHEDULES)}"
        ) from None


@dataclass(frozen=True)
class SamplerConfig:
    steps: int = 100
    scheme: str = VELOCITY_EULER
    schedule: str = "identity"
    decode: str = DECODE_ARGMAX
    seed: int = 0

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.scheme not in (VELOCITY_EULER, ENDPOINT_GEODESIC):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.decode not in (DECODE_ARGMAX, DECODE_SAMPLE):
            raise ValueError(f"unknown decode {self.decode!r}")
        get_schedule(self.schedule)


@dataclass
class Diagnostics:
    """Counters accumulated over one generation run."""

    orthant_exits: int = 0


@dataclass
class GenerateResult:
    sequences: np.ndarray  # (n, k) int64 decoded categories
    final_points: np.ndarray  # (n, k, K) sphere coordinates at t = 1
    diagnostics: Diagnostics = field(default_factory=Diagnostics)


def _clip_to_orthant(y: np.ndarray, diagnostics: Diagnostics | None) -> np.ndarray:
    if diagnostics is not None:
        exited = np.min(y, axis=-1) < -sphere.ORTHANT_TOL
        diagnostics.orthant_exits += int(np.count_nonzero(exited))
    return sphere.renormalize(np.maximum(y, 0.0))


def step_velocity(x, t: float, h: float, model, diagnostics: Diagnostics | None = None):
    """One geodesic Euler step along the learned field; renormalised output."""
    v = fm.forward(model, t, x)
    y = sphere.exp(x, h * v, check=False)
    return _clip_to_orthant(y, diagnostics)


def step_endpoint(
    x,
    t: float,
    delta: float,
    x1_hat,
    schedule="identity",
    diagnostics: Diagnostics | None = None,
):
    """One endpoint-parameterised step exp_x(alpha'(t) delta / (1 - alpha(t)) log_x(x1_hat)).

    Once alpha(t) is within 1e-9 of 1 the update is terminal and returns the
    (orthant-projected) endpoint estimate itself.
    """
    schedule = get_schedule(schedule)
    a = float(schedule.alpha(t))
    x1_hat = np.asarray(x1_hat, dtype=float)
    if a >= 1.0 - 1e-9:
        return _clip_to_orthant(x1_hat.copy(), diagnostics)
    rate = schedule.derivative(t) * delta / (1.0 - a)
    y = sphere.exp(x, rate * sphere.log(x, x1_hat), check=False)
    return _clip_to_orthant(y, diagnostics)


def _integrate(model, x, cfg: SamplerConfig, diagnostics: Diagnostics) -> np.ndarray:
    h = 1.0 / cfg.steps
    for i in range(cfg.steps):
        t = i * h
        if cfg.scheme == VELOCITY_EULER:
            x = step_velocity(x, t, h, model, diagnostics)
        else:
            v = fm.forward(model, t, x)
            x1_hat = _clip_to_orthant(sphere.exp(x, (1.0 - t) * v, check=False), None)
            x = step_endpoint(x, t, h, x1_hat, cfg.schedule, diagnostics)
    return x


def generate(
    model: fm.FieldModel,
    n: int,
    cfg: SamplerConfig,
    rng: np.random.Generator | None = None,
) -> GenerateResult:
    """Draw ``n`` priors, integrate t: 0 -> 1, and decode to category indices.

    Decoding maps the final point through the inverse square-root map and
    either takes the nearest vertex (argmax) or samples the resulting
    categorical distribution per position.
    """
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    k = model.config.positions
    dim = model.config.categories - 1
    diagnostics = Diagnostics()
    x0 = sphere.sample_uniform(dim, rng, size=(n, k))
    if n == 0:
        return GenerateResult(
            sequences=np.empty((0, k), dtype=np.int64),
            final_points=x0,
            diagnostics=diagnostics,
        )
    # decode randomness is drawn up front so chunking cannot affect it
    decode_uniforms = rng.random((n, k)) if cfg.decode == DECODE_SAMPLE else None

    final = np.empty_like(x0)
    for start in range(0, n, _CHUNK):
        stop = min(start + _CHUNK, n)
        final[start:stop] = _integrate(model, x0[start:stop], cfg, diagnostics)

    probs = simplex.inverse_sphere_map(final)
    if cfg.decode == DECODE_ARGMAX:
        sequences = sphere.nearest_vertex(final)
    else:
        norm = probs / probs.sum(axis=-1, keepdims=True)
        cdf = np.cumsum(norm, axis=-1)
        sequences = np.sum(decode_uniforms[..., np.newaxis] > cdf, axis=-1)
        sequences = np.minimum(sequences, model.config.categories - 1)
    return GenerateResult(
        sequences=sequences.astype(np.int64), final_points=final, diagnostics=diagnostics
    )
