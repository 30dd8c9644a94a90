"""Flow-matching training loop: coupling, interpolation, regression, updates.

One training step draws a prior batch and a data batch, optionally couples
them by minibatch optimal transport, samples a time, forms the geodesic
interpolant and its closed-form target velocity, and applies one AdamW update
to the vector-field network. The convention throughout is that data sits at
t = 1 and the prior at t = 0, so sampling integrates forward in time.

Training runs on either chart. On the sphere chart (default) everything is
computed with great-circle formulas on the unit-norm coordinates; on the
simplex chart the interpolant and target come from the Fisher-Rao exp/log
maps and the regression loss is weighted by the Fisher-Rao metric at the
interpolant. The transport coupling is always computed on sphere-chart
coordinates, where the squared geodesic cost is numerically stable.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import field_model as fm
from . import sampler as sampler_mod
from . import transport
from .errors import FisherFlowError, NonFiniteError
from .geometry import SIMPLEX_CHART, SPHERE_CHART, simplex, sphere
from .seeds import derive_seed

_RNG_LABELS = ("data", "prior", "time", "pairs", "init", "eval")

# Joint tables above this size are not materialised for held-out evaluation.
_MAX_EVAL_CELLS = 10_000_000


class TrainingAbort(FisherFlowError):
    """A numerical failure stopped training; carries the offending step."""

    def __init__(self, step: int, cause: Exception):
        super().__init__(f"training aborted at step {step}: {cause}")
        self.step = step
        self.cause = cause


@dataclass(frozen=True)
class TrainConfig:
    categories: int
    positions: int
    steps: int = 20_000
    batch_size: int = 256
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps_opt: float = 1e-8
    weight_decay: float = 1e-4
    ot_enabled: bool = True
    chart: str = SPHERE_CHART
    smoothing: float = 1e-2
    time_clamp: float = 1e-3
    seed: int = 0
    eval_interval: int = 1000
    eval_samples: int = 8192
    eval_integration_steps: int = 50
    holdout_fraction: float = 0.05
    sinkhorn_scale: float = 0.05
    sinkhorn_max_iters: int = 1000
    sinkhorn_tolerance: float = 1e-6
    hidden_dim: int = 256
    depth: int = 5
    time_embed_dim: int = 64

    def __post_init__(self):
        if self.categories < 2 or self.positions < 1:
            raise ValueError("need categories >= 2 and positions >= 1")
        if self.steps < 0 or self.batch_size < 1:
            raise ValueError("steps must be >= 0 and batch_size >= 1")
        for name in ("beta1", "beta2", "eps_opt", "smoothing", "time_clamp"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")
        if self.learning_rate < 0.0 or self.weight_decay < 0.0:
            raise ValueError("learning_rate and weight_decay must be non-negative")
        if self.chart not in (SPHERE_CHART, SIMPLEX_CHART):
            raise ValueError(f"unknown chart {self.chart!r}")
        if not 0.0 <= self.holdout_fraction < 1.0:
            raise ValueError("holdout_fraction must lie in [0, 1)")

    def field_config(self) -> fm.FieldConfig:
        return fm.FieldConfig(
            positions=self.positions,
            categories=self.categories,
            hidden_dim=self.hidden_dim,
            depth=self.depth,
            time_embed_dim=self.time_embed_dim,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        return cls(**data)


@dataclass
class TrainState:
    model: fm.FieldModel
    adam_m: dict[str, np.ndarray]
    adam_v: dict[str, np.ndarray]
    step: int
    rngs: dict[str, np.random.Generator]
    last_ot_cost: float = float("nan")


@dataclass
class MetricsRow:
    step: int
    loss: float
    wallclock_s: float
    eval_kl: float = float("nan")
    ot_cost: float = float("nan")


@dataclass
class Checkpoint:
    config: TrainConfig
    params: dict[str, np.ndarray]
    adam_m: dict[str, np.ndarray]
    adam_v: dict[str, np.ndarray]
    step: int
    rng_states: dict[str, dict]

    def model(self) -> fm.FieldModel:
        return fm.FieldModel(
            config=self.config.field_config(),
            params={k: v.copy() for k, v in self.params.items()},
        )


@dataclass
class FitResult:
    final: Checkpoint
    best: Checkpoint
    metrics: list[MetricsRow]
    best_eval_kl: float


def make_rngs(seed: int) -> dict[str, np.random.Generator]:
    return {label: np.random.default_rng(derive_seed(seed, label)) for label in _RNG_LABELS}


def init_state(config: TrainConfig) -> TrainState:
    rngs = make_rngs(config.seed)
    model = fm.init(config.field_config(), seed=derive_seed(config.seed, "init"))
    return TrainState(
        model=model,
        adam_m=fm.zeros_like_params(model),
        adam_v=fm.zeros_like_params(model),
        step=0,
        rngs=rngs,
    )


def update_params(params, grads, moments, config: TrainConfig, step: int):
    """Bias-corrected adaptive-moment update with decoupled weight decay.

    ``step`` is 1-based. Non-finite gradients reject the step.
    Returns (new params, new (m, v) moments); inputs are not mutated.
    """
    adam_m, adam_v = moments
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(f"non-finite gradient for parameter {name!r}")
    lr, b1, b2 = config.learning_rate, config.beta1, config.beta2
    new_params, new_m, new_v = {}, {}, {}
    for name, p in params.items():
        g = grads[name]
        m = b1 * adam_m[name] + (1.0 - b1) * g
        v = b2 * adam_v[name] + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1**step)
        v_hat = v / (1.0 - b2**step)
        new_params[name] = p * (1.0 - lr * config.weight_decay) - lr * m_hat / (
            np.sqrt(v_hat) + config.eps_opt
        )
        new_m[name] = m
        new_v[name] = v
    return new_params, (new_m, new_v)


def _data_to_simplex(batch, config: TrainConfig) -> np.ndarray:
    """Smoothed simplex coordinates for a batch of targets.

    Integer batches are vertex indices of shape (B, k); float batches are
    simplex points of shape (B, k, K) (continuous targets, e.g. densities on
    the 2-simplex).
    """
    batch = np.asarray(batch)
    if np.issubdtype(batch.dtype, np.integer):
        return simplex.smooth(simplex.one_hot(batch, config.categories), config.smoothing)
    return simplex.smooth(batch.astype(float), config.smoothing)


def train_step(state: TrainState, batch_targets, config: TrainConfig) -> float:
    """Run one optimisation step in place; returns the pre-update loss.

    On any numerical error the state is left untouched and the error
    propagates to the caller.
    """
    b = np.asarray(batch_targets).shape[0]
    p1 = _data_to_simplex(batch_targets, config)
    x1 = simplex.sphere_map(p1)
    dim = config.categories - 1
    x0 = sphere.sample_uniform(dim, state.rngs["prior"], size=(b, config.positions))

    ot_cost = float("nan")
    if config.ot_enabled:
        cost = transport.pairwise_cost(x0, x1)
        cfg = transport.SinkhornConfig(
            epsilon=transport.median_scaled_epsilon(cost, config.sinkhorn_scale),
            max_iters=config.sinkhorn_max_iters,
            tolerance=config.sinkhorn_tolerance,
        )
        coupling = transport.sinkhorn(cost, cfg)
        pairs = transport.sample_pairs(coupling, b, state.rngs["pairs"])
        x0 = x0[pairs[:, 0]]
        x1 = x1[pairs[:, 1]]
        p1 = p1[pairs[:, 1]]
        ot_cost = coupling.cost_value

    t = state.rngs["time"].uniform(0.0, 1.0 - config.time_clamp, size=b)
    t_pos = t[:, np.newaxis]  # one time per sample, shared across positions

    if config.chart == SPHERE_CHART:
        xt = sphere.exp(x0, t_pos[..., np.newaxis] * sphere.log(x0, x1))
        ut = sphere.target_field(xt, x1, np.broadcast_to(t_pos, xt.shape[:2]),
                                 time_clamp=config.time_clamp)
        points = xt
    else:
        p0 = simplex.inverse_sphere_map(x0)
        xt = simplex.exp(p0, t_pos[..., np.newaxis] * simplex.log(p0, p1))
        # metric evaluations need strict interiority; nudge exact zeros away
        xt = np.maximum(xt, simplex.INTERIOR_EPS)
        ut = simplex.log(xt, p1) / (1.0 - t_pos[..., np.newaxis])
        points = xt

    buf = fm.backward(state.model, t, points, ut, chart=config.chart)
    new_params, (new_m, new_v) = update_params(
        state.model.params, buf.grads, (state.adam_m, state.adam_v), config, state.step + 1
    )
    state.model.params = new_params
    state.adam_m, state.adam_v = new_m, new_v
    state.step += 1
    state.last_ot_cost = ot_cost
    return buf.loss


def _validate_dataset(dataset: np.ndarray, config: TrainConfig) -> np.ndarray:
    dataset = np.asarray(dataset)
    if np.issubdtype(dataset.dtype, np.integer):
        if dataset.ndim != 2 or dataset.shape[1] != config.positions:
            raise ValueError(
                f"dataset shape {dataset.shape} does not match positions={config.positions}"
            )
        if dataset.size and (dataset.min() < 0 or dataset.max() >= config.categories):
            raise ValueError(f"dataset indices must lie in [0, {config.categories})")
        return dataset
    if dataset.ndim == 2:
        dataset = dataset[:, np.newaxis, :]
    if dataset.ndim != 3 or dataset.shape[1:] != (config.positions, config.categories):
        raise ValueError(
            f"continuous dataset shape {dataset.shape} does not match "
            f"(N, {config.positions}, {config.categories})"
        )
    if np.max(np.abs(dataset.sum(axis=-1) - 1.0)) > 1e-6 or dataset.min() < -1e-9:
        raise ValueError("continuous dataset rows must be simplex points")
    return dataset


def _holdout_table(holdout: np.ndarray, config: TrainConfig) -> np.ndarray | None:
    """Smoothed empirical joint table of the held-out slice (categorical data only)."""
    if not np.issubdtype(holdout.dtype, np.integer) or holdout.shape[0] == 0:
        return None
    cells = config.categories**config.positions
    if cells > _MAX_EVAL_CELLS:
        return None
    flat = np.ravel_multi_index(holdout.T, (config.categories,) * config.positions)
    counts = np.bincount(flat, minlength=cells).astype(float) + 0.5
    return counts / counts.sum()


def _eval_kl(state: TrainState, table: np.ndarray | None, config: TrainConfig) -> float:
    """KL(model sample table || held-out table) on a fresh evaluation stream."""
    if table is None:
        return float("nan")
    rng = np.random.default_rng(
        derive_seed(config.seed, f"eval-{state.step}")
    )
    cfg = sampler_mod.SamplerConfig(steps=config.eval_integration_steps)
    result = sampler_mod.generate(state.model, config.eval_samples, cfg, rng=rng)
    flat = np.ravel_multi_index(result.sequences.T, (config.categories,) * config.positions)
    counts = np.bincount(flat, minlength=table.size).astype(float) + 0.5
    q = counts / counts.sum()
    return float(np.sum(q * np.log(q / table)))


def _snapshot(state: TrainState, config: TrainConfig) -> Checkpoint:
    return Checkpoint(
        config=config,
        params={k: v.copy() for k, v in state.model.params.items()},
        adam_m={k: v.copy() for k, v in state.adam_m.items()},
        adam_v={k: v.copy() for k, v in state.adam_v.items()},
        step=state.step,
        rng_states={k: g.bit_generator.state for k, g in state.rngs.items()},
    )


def fit(
    config: TrainConfig,
    dataset,
    metrics_sink=None,
    resume: Checkpoint | None = None,
) -> FitResult:
    """Train for ``config.steps`` optimisation steps over the dataset.

    The last ``holdout_fraction`` of the rows is excluded from training and
    used for evaluation-KL checkpoint selection. Metrics rows stream to
    ``metrics_sink`` (a callable) as they are produced; the loss recorded for
    step s is the pre-update loss at that step.

    Passing ``resume`` restores parameters, optimiser moments, the step
    counter and all random streams, and continues until ``config.steps``.
    """
    dataset = _validate_dataset(dataset, config)
    n = dataset.shape[0]
    if n == 0:
        raise ValueError("dataset is empty")
    n_holdout = int(config.holdout_fraction * n)
    train_rows = dataset[: n - n_holdout] if n_holdout else dataset
    if train_rows.shape[0] == 0:
        raise ValueError("holdout fraction leaves no training rows")
    holdout_table = _holdout_table(dataset[n - n_holdout :], config) if n_holdout else None

    if resume is not None:
        theirs, ours = resume.config.to_dict(), config.to_dict()
        theirs.pop("steps"), ours.pop("steps")  # resuming extends the step budget
        if theirs != ours:
            raise ValueError("resume checkpoint config does not match the requested config")
        state = TrainState(
            model=resume.model(),
            adam_m={k: v.copy() for k, v in resume.adam_m.items()},
            adam_v={k: v.copy() for k, v in resume.adam_v.items()},
            step=resume.step,
            rngs=make_rngs(config.seed),
        )
        for label, rng_state in resume.rng_states.items():
            state.rngs[label].bit_generator.state = rng_state
    else:
        state = init_state(config)

    metrics: list[MetricsRow] = []
    best = _snapshot(state, config)
    best_kl = _eval_kl(state, holdout_table, config) if config.steps > state.step else float("inf")
    started = time.perf_counter()

    while state.step < config.steps:
        batch_idx = state.rngs["data"].integers(0, train_rows.shape[0], size=config.batch_size)
        step_index = state.step
        try:
            loss = train_step(state, train_rows[batch_idx], config)
        except FisherFlowError as err:
            raise TrainingAbort(step_index, err) from err
        row = MetricsRow(
            step=state.step,
            loss=loss,
            wallclock_s=time.perf_counter() - started,
            ot_cost=getattr(state, "last_ot_cost", float("nan")),
        )
        if config.eval_interval and (
            state.step % config.eval_interval == 0 or state.step == config.steps
        ):
            row.eval_kl = _eval_kl(state, holdout_table, config)
            if not np.isnan(row.eval_kl) and row.eval_kl < best_kl:
                best_kl = row.eval_kl
                best = _snapshot(state, config)
        metrics.append(row)
        if metrics_sink is not None:
            metrics_sink(row)

    final = _snapshot(state, config)
    if np.isinf(best_kl) or (holdout_table is None):
        best = final
        best_kl = float("nan")
    return FitResult(final=final, best=best, metrics=metrics, best_eval_kl=best_kl)


# --- checkpoint container -------------------------------------------------------

_CKPT_MAGIC = "fisherflow-checkpoint v1"


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    """Write the documented container: text metadata block + raw f64 arrays.

    Layout: a magic line, one JSON line holding the config, step, seed, RNG
    states and an ordered shape table, a blank line, then the listed arrays
    concatenated as little-endian float64.
    """
    path = Path(path)
    order = []
    blobs = []
    for group, arrays in (("param", ckpt.params), ("adam_m", ckpt.adam_m), ("adam_v", ckpt.adam_v)):
        for name, arr in arrays.items():
            order.append({"name": f"{group}/{name}", "shape": list(arr.shape)})
            blobs.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    meta = {
        "format_version": 1,
        "step": ckpt.step,
        "seed": ckpt.config.seed,
        "config": ckpt.config.to_dict(),
        "rng_states": ckpt.rng_states,
        "arrays": order,
    }
    with open(path, "wb") as handle:
        handle.write(_CKPT_MAGIC.encode() + b"\n")
        handle.write(json.dumps(meta, sort_keys=True).encode() + b"\n\n")
        for blob in blobs:
            handle.write(blob)


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    raw = path.read_bytes()
    magic, _, rest = raw.partition(b"\n")
    if magic.decode(errors="replace") != _CKPT_MAGIC:
        raise ValueError(f"{path} is not a fisherflow checkpoint")
    meta_line, _, payload = rest.partition(b"\n\n")
    meta = json.loads(meta_line.decode())
    config = TrainConfig.from_dict(meta["config"])
    arrays: dict[str, np.ndarray] = {}
    offset = 0
    for entry in meta["arrays"]:
        size = int(np.prod(entry["shape"])) if entry["shape"] else 1
        chunk = np.frombuffer(payload, dtype="<f8", count=size, offset=offset)
        arrays[entry["name"]] = chunk.reshape(entry["shape"]).astype(float)
        offset += size * 8
    groups: dict[str, dict[str, np.ndarray]] = {"param": {}, "adam_m": {}, "adam_v": {}}
    for full_name, arr in arrays.items():
        group, _, name = full_name.partition("/")
        groups[group][name] = arr
    return Checkpoint(
        config=config,
        params=groups["param"],
        adam_m=groups["adam_m"],
        adam_v=groups["adam_v"],
        step=meta["step"],
        rng_states=meta["rng_states"],
    )
