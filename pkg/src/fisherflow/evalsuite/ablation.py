"""Chart x transport ablation harness: shared data and seeds across arms.

Each arm trains its own model on the same dataset with the same seed list,
generates evaluation samples from the final checkpoint, and scores KL against
the ground-truth table, together with the self-sampling floor at the same
sample count. Per-arm aggregation reports both the minimum and the mean over
seeds. A failing arm is recorded in its row and does not stop the grid.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .. import sampler as sampler_mod
from .. import trainer
from ..seeds import derive_seed
from .metrics import self_sampling_floor
from .toy import ToyDistribution
from . import metrics as metrics_mod

DEFAULT_ARMS = (
    ("sphere", True),
    ("sphere", False),
    ("simplex", True),
    ("simplex", False),
)


@dataclass(frozen=True)
class AblationRow:
    arm: str
    chart: str
    ot_enabled: bool
    seed: int
    kl: float
    floor_kl: float
    ot_cost_mean: float
    error: str = ""


@dataclass(frozen=True)
class ArmSummary:
    arm: str
    min_kl: float
    mean_kl: float
    se_kl: float
    seeds: int


def arm_name(chart: str, ot_enabled: bool) -> str:
    return f"{chart}+{'ot' if ot_enabled else 'indep'}"


def evaluate_arm_seed(
    base_config: trainer.TrainConfig,
    dist: ToyDistribution,
    dataset: np.ndarray,
    chart: str,
    ot_enabled: bool,
    seed: int,
    eval_samples: int,
    sampler_steps: int,
) -> AblationRow:
    """Train one (chart, transport, seed) cell and score it; exceptions become rows."""
    config = replace(base_config, chart=chart, ot_enabled=ot_enabled, seed=seed)
    name = arm_name(chart, ot_enabled)
    try:
        result = trainer.fit(config, dataset)
        rng = np.random.default_rng(derive_seed(seed, "eval-sample"))
        generated = sampler_mod.generate(
            result.final.model(),
            eval_samples,
            sampler_mod.SamplerConfig(steps=sampler_steps),
            rng=rng,
        )
        kl = metrics_mod.estimate_kl(dist, generated.sequences)
        floor = self_sampling_floor(dist, eval_samples, seed=derive_seed(seed, "floor"))
        ot_costs = [m.ot_cost for m in result.metrics if np.isfinite(m.ot_cost)]
        ot_mean = float(np.mean(ot_costs)) if ot_costs else float("nan")
        return AblationRow(
            arm=name,
            chart=chart,
            ot_enabled=ot_enabled,
            seed=seed,
            kl=kl,
            floor_kl=floor,
            ot_cost_mean=ot_mean,
        )
    except Exception as err:  # a failed arm is data, not a crash
        return AblationRow(
            arm=name,
            chart=chart,
            ot_enabled=ot_enabled,
            seed=seed,
            kl=float("nan"),
            floor_kl=float("nan"),
            ot_cost_mean=float("nan"),
            error=f"{type(err).__name__}: {err}",
        )


def run_ablation(
    base_config: trainer.TrainConfig,
    dist: ToyDistribution,
    dataset: np.ndarray,
    arms=DEFAULT_ARMS,
    seeds=(0,),
    eval_samples: int = 64_000,
    sampler_steps: int = 50,
    row_sink=None,
) -> list[AblationRow]:
    """Full grid of arms x seeds; rows stream to ``row_sink`` as they finish."""
    if not seeds:
        raise ValueError("need at least one seed")
    rows = []
    for chart, ot_enabled in arms:
        for seed in seeds:
            row = evaluate_arm_seed(
                base_config, dist, dataset, chart, ot_enabled, seed, eval_samples, sampler_steps
            )
            rows.append(row)
            if row_sink is not None:
                row_sink(row)
    return rows


def summarise(rows) -> list[ArmSummary]:
    """Per-arm min / mean / standard-error KL over seeds (NaN-aware)."""
    by_arm: dict[str, list[float]] = {}
    for row in rows:
        by_arm.setdefault(row.arm, []).append(row.kl)
    out = []
    for arm, kls in by_arm.items():
        values = np.asarray(kls, dtype=float)
        finite = values[np.isfinite(values)]
        if len(finite) == 0:
            out.append(ArmSummary(arm, float("nan"), float("nan"), float("nan"), 0))
            continue
        se = float(finite.std(ddof=1) / np.sqrt(len(finite))) if len(finite) > 1 else 0.0
        out.append(
            ArmSummary(
                arm=arm,
                min_kl=float(finite.min()),
                mean_kl=float(finite.mean()),
                se_kl=se,
                seeds=len(finite),
            )
        )
    return out
