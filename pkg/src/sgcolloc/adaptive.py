"""Greedy dimension-adaptive sparse-grid refinement."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .distributions import JointDistribution
from .sparse import SparseSurrogate, error_indicator, make_rules

log = logging.getLogger(__name__)


class RefinementError(RuntimeError):
    """The refinement could not continue (level cap hit)."""


class ModelEvaluationError(RuntimeError):
    """The model raised or returned a non-finite value."""

    def __init__(self, point, cause):
        self.point = [float(v) for v in point]
        super().__init__(f"model evaluation failed at y = {self.point}: {cause}")


@dataclass(frozen=True)
class AdaptiveConfig:
    """Stopping rules: budget ``B`` on model runs and tolerance on the indicator sum."""

    budget: Optional[int] = None
    tolerance: float = 0.0
    max_level: int = 30

    def __post_init__(self):
        if self.budget is not None and self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.tolerance < 0:
            raise ValueError("tolerance must be >= 0")
        if self.budget is None and not self.tolerance > 0:
            raise ValueError("need a finite budget or a positive tolerance")
        if self.max_level < 1:
            raise ValueError("max_level must be >= 1")


@dataclass
class RefinementRecord:
    step: int
    index: tuple
    indicator: float
    evaluations: int
    indicator_sum: float
    mean: float = math.nan
    variance: float = math.nan
    cv_error: float = math.nan


@dataclass
class AdaptiveResult:
    surrogate: SparseSurrogate
    records: list
    evaluations: int
    reason: str
    final_indicator_sum: float
    history_indices: list = field(default_factory=list)


@dataclass
class _Candidate:
    keys: np.ndarray
    points: np.ndarray
    values: np.ndarray
    surpluses: np.ndarray
    indicator: float


def _evaluate_batch(model: Callable, points: np.ndarray, pool) -> np.ndarray:
    def one(y):
        try:
            v = float(model(y))
        except Exception as exc:
            raise ModelEvaluationError(y, exc) from exc
        if not math.isfinite(v):
            raise ModelEvaluationError(y, f"non-finite value {v}")
        return v

    if pool is None or len(points) < 2:
        return np.array([one(y) for y in points], dtype=float)
    return np.array(list(pool.map(one, points)), dtype=float)


def adapt(
    model: Callable,
    joint: JointDistribution,
    family,
    config: AdaptiveConfig,
    threads: int = 1,
    track_moments: bool = False,
    cv_sample: Optional[tuple] = None,
    check_monotone: bool = False,
) -> AdaptiveResult:
    """Run the dimension-adaptive loop and return the final surrogate.

    Each step evaluates the model on the new points of every newly admissible
    index, computes their surpluses and mean-absolute-surplus indicators, and
    moves the index with the largest indicator into the active set
    (ties: lexicographically smallest). Indicators of indices not chosen are
    kept. The loop stops once the evaluated points reach ``config.budget`` or
    the indicator sum over the admissible set drops to ``config.tolerance``;
    the admissible margin is then merged into the surrogate.

    ``cv_sample`` is an optional ``(points, model_values)`` pair used to record
    the cross-validation error after every step.
    """
    rules = make_rules(family, joint)
    sur = SparseSurrogate(rules)
    budget = config.budget if config.budget is not None else math.inf
    pool = ThreadPoolExecutor(max_workers=threads) if threads and threads > 1 else None
    records: list = []
    chosen: list = []
    try:
        root = (0,) * joint.dim
        _, pts = sur.new_points(root)
        sur.add_index(root, _evaluate_batch(model, pts, pool))
        chosen.append(root)
        if cv_sample is not None:
            cv_y, cv_q = np.atleast_2d(cv_sample[0]), np.asarray(cv_sample[1], dtype=float)
            cv_pred = sur.block_value(root, cv_y)
        cache: dict = {}
        admissible = sur.index_set.admissible_set()
        step = 0
        while True:
            fresh = [a for a in admissible if a not in cache]
            for a in fresh:
                if max(a) > config.max_level:
                    raise RefinementError(
                        f"refinement would exceed max_level={config.max_level} (index {a})"
                    )
            if fresh:
                blocks = [sur.new_points(a) for a in fresh]
                allpts = np.concatenate([b[1] for b in blocks], axis=0)
                allq = _evaluate_batch(model, allpts, pool)
                splits = np.cumsum([b[1].shape[0] for b in blocks])[:-1]
                # all surpluses against the current interpolant, in one batch
                alls = sur.surpluses_for(None, allq, allpts)
                for a, (k, p), q, s in zip(fresh, blocks, np.split(allq, splits), np.split(alls, splits)):
                    cache[a] = _Candidate(k, p, q, s, error_indicator(s))
            evaluations = sur.num_points + sum(cache[a].points.shape[0] for a in admissible)
            eta_sum = float(sum(cache[a].indicator for a in admissible))
            if evaluations >= budget:
                reason = "budget"
                break
            if eta_sum <= config.tolerance:
                reason = "tolerance"
                break
            best = admissible[0]
            for a in admissible[1:]:
                if cache[a].indicator > cache[best].indicator:
                    best = a
            cand = cache.pop(best)
            sur.add_index(best, cand.values, cand.surpluses)
            chosen.append(best)
            admissible = sorted(set(admissible) - {best} | set(sur.index_set.newly_admissible(best)))
            if check_monotone and not sur.index_set.is_monotone():
                raise AssertionError("index set lost monotonicity")
            step += 1
            rec = RefinementRecord(step, best, cand.indicator, evaluations, eta_sum)
            if track_moments:
                w = sur.quadrature_weights()
                q = sur.values
                rec.mean = float(w @ q)
                rec.variance = float(w @ (q * q) - rec.mean**2)
            if cv_sample is not None:
                cv_pred += sur.block_value(best, cv_y)
                rec.cv_error = float(np.max(np.abs(cv_pred - cv_q)))
            records.append(rec)
            log.debug("step %d: index %s eta %.3e evals %d", step, best, cand.indicator, evaluations)
        # final approximation uses the active set plus its admissible margin
        for a in admissible:
            c = cache[a]
            sur.add_index(a, c.values, c.surpluses)
    finally:
        if pool is not None:
            pool.shutdown()
    return AdaptiveResult(sur, records, sur.num_points, reason, eta_sum, chosen)
