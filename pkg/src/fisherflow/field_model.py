"""The learned vector field: a residual MLP with explicit reverse-mode gradients.

The network maps (time features, flattened product-point coordinates, optional
conditioning vector) through an input affine layer, ``depth`` residual tanh
blocks h <- h + tanh(W h + b), and a zero-initialised output affine layer. Raw
ambient outputs are orthogonally projected onto the tangent space at each
position of the input point, so the field is tangent by construction.

Forward, loss and gradient are hand-written in numpy: the backward pass is the
exact reverse-mode differential of the loss, including the path through the
tangent projection, and is pinned against central finite differences in the
test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteError
from .geometry import SIMPLEX_CHART, SPHERE_CHART

# Geometric ladder of time-feature frequencies; the highest resolves time
# differences at the 1e-3 scale of the sampler's finest grids.
_MIN_FREQ = 1.0
_MAX_FREQ = 1000.0


@dataclass(frozen=True)
class FieldConfig:
    """Shape of the vector-field network; parameter count is a pure function of these."""

    positions: int
    categories: int
    hidden_dim: int = 256
    depth: int = 5
    time_embed_dim: int = 64
    cond_dim: int = 0

    def __post_init__(self):
        if min(self.positions, self.categories, self.hidden_dim, self.time_embed_dim) < 1:
            raise ValueError("positions, categories, hidden_dim and time_embed_dim must be >= 1")
        if self.depth < 0 or self.cond_dim < 0:
            raise ValueError("depth and cond_dim must be non-negative")
        if self.time_embed_dim % 2:
            raise ValueError("time_embed_dim must be even (sin/cos pairs)")

    @property
    def point_dim(self) -> int:
        return self.positions * self.categories

    @property
    def input_dim(self) -> int:
        return self.point_dim + self.time_embed_dim + self.cond_dim


@dataclass
class FieldModel:
    """Network parameters plus their shape metadata."""

    config: FieldConfig
    params: dict[str, np.ndarray]

    def param_names(self) -> list[str]:
        return list(self.params)

    def num_params(self) -> int:
        return sum(p.size for p in self.params.values())


@dataclass(frozen=True)
class GradientBuffer:
    """Loss gradients, congruent in shape with a model's parameters."""

    grads: dict[str, np.ndarray]
    loss: float

    def check_congruent(self, model: FieldModel) -> None:
        if set(self.grads) != set(model.params) or any(
            self.grads[k].shape != model.params[k].shape for k in model.params
        ):
            raise ValueError("gradient buffer is not congruent with the model parameters")


def param_shapes(cfg: FieldConfig) -> dict[str, tuple[int, ...]]:
    shapes = {
        "w_in": (cfg.hidden_dim, cfg.input_dim),
        "b_in": (cfg.hidden_dim,),
    }
    for layer in range(cfg.depth):
        shapes[f"w{layer}"] = (cfg.hidden_dim, cfg.hidden_dim)
        shapes[f"b{layer}"] = (cfg.hidden_dim,)
    shapes["w_out"] = (cfg.point_dim, cfg.hidden_dim)
    shapes["b_out"] = (cfg.point_dim,)
    return shapes


def init(cfg: FieldConfig, seed: int) -> FieldModel:
    """Fan-in-scaled Gaussian weights; the output layer starts at exactly zero.

    Zero output weights make the initial vector field vanish everywhere, so an
    untrained flow is the identity map on the manifold.
    """
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    for name, shape in param_shapes(cfg).items():
        if name.startswith("b") or name == "w_out":
            params[name] = np.zeros(shape)
        else:
            fan_in = shape[1]
            params[name] = rng.standard_normal(shape) / np.sqrt(fan_in)
    return FieldModel(config=cfg, params=params)


def time_features(t, dim: int) -> np.ndarray:
    """Sinusoidal embedding of scalar time onto ``dim`` sin/cos features."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    half = dim // 2
    freqs = np.exp(np.linspace(np.log(_MIN_FREQ), np.log(_MAX_FREQ), half))
    angles = t[:, np.newaxis] * freqs[np.newaxis, :]
    return np.concatenate([np.sin(angles), np.cos(angles)], axis=-1)


def _flatten_batch(x: np.ndarray, cfg: FieldConfig) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    squeeze = x.ndim == 2
    if squeeze:
        x = x[np.newaxis]
    if x.ndim != 3 or x.shape[1:] != (cfg.positions, cfg.categories):
        raise ValueError(
            f"expected points of shape (batch, {cfg.positions}, {cfg.categories}), got {x.shape}"
        )
    return x


def _project(x: np.ndarray, raw: np.ndarray, chart: str) -> np.ndarray:
    """Projection onto the per-position tangent space (self-adjoint in both charts)."""
    if chart == SPHERE_CHART:
        return raw - np.sum(x * raw, axis=-1, keepdims=True) * x
    if chart == SIMPLEX_CHART:
        return raw - np.mean(raw, axis=-1, keepdims=True)
    raise ValueError(f"unknown chart {chart!r}")


def _forward_cached(model: FieldModel, t, x: np.ndarray, cond=None):
    cfg = model.config
    batch = x.shape[0]
    t = np.broadcast_to(np.atleast_1d(np.asarray(t, dtype=float)), (batch,))
    pieces = [x.reshape(batch, cfg.point_dim), time_features(t, cfg.time_embed_dim)]
    if cfg.cond_dim:
        if cond is None:
            raise ValueError("model expects a conditioning vector")
        pieces.append(np.broadcast_to(np.asarray(cond, dtype=float), (batch, cfg.cond_dim)))
    inp = np.concatenate(pieces, axis=1)

    p = model.params
    h = inp @ p["w_in"].T + p["b_in"]
    activations = []
    for layer in range(cfg.depth):
        z = h @ p[f"w{layer}"].T + p[f"b{layer}"]
        a = np.tanh(z)
        activations.append((h, a))
        h = h + a
    raw = h @ p["w_out"].T + p["b_out"]
    if not np.all(np.isfinite(raw)):
        raise NonFiniteError("non-finite activations in the vector-field network")
    cache = {"inp": inp, "activations": activations, "h_final": h}
    return raw.reshape(batch, cfg.positions, cfg.categories), cache


def forward(model: FieldModel, t, x, cond=None, chart: str = SPHERE_CHART) -> np.ndarray:
    """Tangent vector field at ``x``: raw network output projected per position.

    ``x`` has shape (batch, k, K) or (k, K); the output matches. ``t`` is a
    scalar or a per-sample vector.
    """
    x3 = _flatten_batch(x, model.config)
    raw, _ = _forward_cached(model, t, x3, cond)
    out = _project(x3, raw, chart)
    return out if np.asarray(x).ndim == 3 else out[0]


def _residual_and_weights(model, t, x, targets, cond, chart):
    x3 = _flatten_batch(x, model.config)
    u = np.asarray(targets, dtype=float)
    if u.shape != np.asarray(x).shape:
        raise ValueError(f"target shape {u.shape} does not match point shape {np.asarray(x).shape}")
    u3 = u.reshape(x3.shape)
    raw, cache = _forward_cached(model, t, x3, cond)
    v = _project(x3, raw, chart)
    residual = v - u3
    if chart == SPHERE_CHART:
        metric = np.ones_like(residual)
    else:
        probs = np.asarray(x3, dtype=float)
        metric = 1.0 / probs
    return x3, raw, cache, residual, metric


def cfm_loss(model: FieldModel, t, x, targets, cond=None, chart: str = SPHERE_CHART) -> float:
    """Flow-matching regression loss.

    Mean over the batch of the summed (over positions) squared Riemannian norm
    of the tangential residual v(t, x) - u. On the sphere chart the norm is
    Euclidean; on the simplex chart it is the Fisher-Rao norm at ``x``.
    """
    _, _, _, residual, metric = _residual_and_weights(model, t, x, targets, cond, chart)
    return float(np.sum(residual * residual * metric) / residual.shape[0])


def backward(model: FieldModel, t, x, targets, cond=None, chart: str = SPHERE_CHART) -> GradientBuffer:
    """Exact reverse-mode gradient of :func:`cfm_loss` for every parameter.

    The chain runs through the tangent projection (self-adjoint, so the
    adjoint is the projection itself) and the residual MLP. Returns the
    gradients together with the loss of the same pass.
    """
    cfg = model.config
    x3, raw, cache, residual, metric = _residual_and_weights(model, t, x, targets, cond, chart)
    batch = x3.shape[0]
    loss = float(np.sum(residual * residual * metric) / batch)

    d_proj = 2.0 * residual * metric / batch
    d_raw = _project(x3, d_proj, chart).reshape(batch, cfg.point_dim)

    p = model.params
    grads: dict[str, np.ndarray] = {}
    grads["w_out"] = d_raw.T @ cache["h_final"]
    grads["b_out"] = d_raw.sum(axis=0)
    dh = d_raw @ p["w_out"]
    for layer in reversed(range(cfg.depth)):
        h_prev, a = cache["activations"][layer]
        dz = dh * (1.0 - a * a)
        grads[f"w{layer}"] = dz.T @ h_prev
        grads[f"b{layer}"] = dz.sum(axis=0)
        dh = dh + dz @ p[f"w{layer}"]
    grads["w_in"] = dh.T @ cache["inp"]
    grads["b_in"] = dh.sum(axis=0)
    return GradientBuffer(grads={k: grads[k] for k in p}, loss=loss)


def zeros_like_params(model: FieldModel) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(p) for name, p in model.params.items()}
