"""Moments, error metrics and variance-based sensitivity indices."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .distributions import JointDistribution

# variance below zero but above this is treated as round-off
VARIANCE_TOLERANCE = 1e-12
# indices below this are dropped from filtered reports
SOBOL_REPORT_THRESHOLD = 0.01


class MomentError(ArithmeticError):
    """Moments are inconsistent (e.g. a clearly negative variance)."""


@dataclass(frozen=True)
class MomentReport:
    mean: float
    variance: float
    skewness: float
    evaluations_used: int
    degenerate: bool = False

    def as_dict(self) -> dict:
        return {"mean": self.mean, "variance": self.variance, "skewness": self.skewness,
                "evaluations_used": self.evaluations_used, "degenerate": self.degenerate}


def moments_from_raw(m1: float, m2: float, m3: float, evaluations: int, shift: float = 0.0) -> MomentReport:
    """Mean, variance and skewness from the first three raw moments.

    The raw moments may be taken of ``q - shift``; variance and skewness do
    not depend on the shift, and choosing a representative value of ``q``
    avoids cancellation in ``m2 - m1^2``.
    """
    var = m2 - m1 * m1
    if var < -VARIANCE_TOLERANCE:
        raise MomentError(f"negative variance {var:.3e}; quadrature weights are inconsistent")
    var = max(var, 0.0)
    if var == 0.0:
        return MomentReport(shift + m1, 0.0, 0.0, evaluations, degenerate=True)
    skew = (m3 - 3.0 * m1 * var - m1**3) / var**1.5
    return MomentReport(shift + m1, var, skew, evaluations)


def _weighted_moments(w: np.ndarray, q: np.ndarray) -> MomentReport:
    shift = float(q[0]) if q.size else 0.0
    c = q - shift
    c2 = c * c
    return moments_from_raw(float(w @ c), float(w @ c2), float(w @ (c2 * c)), q.size, shift)


def moments_from_weights(surrogate, weights=None, values=None) -> MomentReport:
    """Moments from the collocation quadrature rule.

    Raw moments are ``sum_k w_k q_k^p``, i.e. the rule applied to the powered
    point values (computed about the first stored value for accuracy).
    ``weights``/``values`` default to the surrogate's own.
    """
    w = surrogate.quadrature_weights() if weights is None else np.asarray(weights, dtype=float)
    q = surrogate.values if values is None else np.asarray(values, dtype=float)
    if w.shape != q.shape:
        raise ValueError("need one weight per value")
    return _weighted_moments(w, q)


def quadrature_moments(nodes_values, weights) -> MomentReport:
    """Moments of point values under a plain quadrature rule."""
    q = np.asarray(nodes_values, dtype=float)
    w = np.asarray(weights, dtype=float)
    if w.shape != q.shape:
        raise ValueError("need one weight per value")
    return _weighted_moments(w, q)


def sample_moments(values) -> MomentReport:
    """Plug-in (biased) mean, variance and skewness of a sample."""
    q = np.asarray(values, dtype=float)
    mean = float(q.mean())
    c = q - mean
    var = float(np.mean(c * c))
    if var == 0.0:
        return MomentReport(mean, 0.0, 0.0, q.size, degenerate=True)
    return MomentReport(mean, var, float(np.mean(c**3)) / var**1.5, q.size)


def surrogate_mc(surrogate, joint: JointDistribution, M: int, seed: int, stream: int = 0) -> MomentReport:
    """Monte Carlo moments of the surrogate from ``M`` draws of ``joint``."""
    if M < 2:
        raise ValueError("surrogate Monte Carlo needs M >= 2")
    y = joint.sample(M, seed, stream)
    return sample_moments(surrogate.evaluate(y))


def standard_error(report: MomentReport) -> float:
    """Standard error of a sample mean."""
    return math.sqrt(report.variance / report.evaluations_used)


# --------------------------------------------------------------------------
# error metrics


@dataclass(frozen=True)
class ErrorMetrics:
    eps_cv: float
    eps_abs: float
    eps_rel: float


def absolute_error(estimate: float, reference: float) -> float:
    return abs(estimate - reference)


def relative_error(estimate: float, reference: float) -> float:
    """``|estimate - reference| / |reference|``; zero reference gives 0 or inf."""
    err = abs(estimate - reference)
    if reference == 0:
        return 0.0 if err == 0 else math.inf
    return err / abs(reference)


def error_metrics(estimate: float, reference: float, eps_cv: float = 0.0) -> ErrorMetrics:
    return ErrorMetrics(float(eps_cv), absolute_error(estimate, reference), relative_error(estimate, reference))


def draw_cv_sample(model: Callable, dist: JointDistribution, M: int, seed: int, stream: int = 1):
    """Points drawn from ``dist`` and the model values there.

    ``dist`` need not be the distribution the surrogate was built for, e.g.
    a uniform validation sample for a surrogate built on beta inputs.
    """
    y = dist.sample(M, seed, stream)
    return y, np.array([float(model(p)) for p in y])


def cross_validation_error(surrogate, model: Optional[Callable], sample) -> float:
    """``max_m |surrogate(y_m) - q(y_m)|`` over a validation sample.

    ``sample`` is an array of points (the model is evaluated there) or a
    ``(points, model_values)`` pair with precomputed values.
    """
    if isinstance(sample, tuple):
        y, q = sample
        y = np.atleast_2d(np.asarray(y, dtype=float))
        q = np.asarray(q, dtype=float)
    else:
        y = np.atleast_2d(np.asarray(sample, dtype=float))
        if model is None:
            raise ValueError("a model is needed when no model values are given")
        q = np.array([float(model(p)) for p in y]) if y.size else np.zeros(0)
    if y.size == 0 or q.size == 0:
        raise ValueError("cross-validation sample is empty")
    if q.shape != (y.shape[0],):
        raise ValueError("need one model value per sample point")
    return float(np.max(np.abs(surrogate.evaluate(y) - q)))


# --------------------------------------------------------------------------
# Sobol indices


@dataclass(frozen=True)
class SobolReport:
    first_order: tuple
    total_order: tuple
    sample_size: int
    evaluations: int
    variance: float
    names: tuple = field(default=())

    def significant(self, threshold: float = SOBOL_REPORT_THRESHOLD) -> list:
        """``(name, first, total)`` rows whose first-order index reaches ``threshold``."""
        names = self.names or tuple(f"y{n + 1}" for n in range(len(self.first_order)))
        return [(nm, s, t) for nm, s, t in zip(names, self.first_order, self.total_order) if s >= threshold]


class _Counted:
    def __init__(self, f):
        self.f = f
        self.count = 0

    def __call__(self, y):
        self.count += y.shape[0]
        return np.asarray(self.f(y), dtype=float)


def sobol_saltelli(surrogate, joint: JointDistribution, M: int, seed: int,
                   names: Sequence[str] = ()) -> SobolReport:
    """First- and total-order Sobol indices by the A/B matrix scheme.

    Two independent ``M x N`` samples ``A`` and ``B`` are drawn; ``A_B^i`` is
    ``A`` with column ``i`` from ``B`` and ``B_A^i`` the reverse, giving
    ``(2N + 2) M`` evaluations. First-order indices use the product estimator
    in difference form, ``mean(f(B) (f(A_B^i) - f(A)))``, which is exactly
    zero for inputs the output ignores; total-order indices use the
    squared-difference (Jansen) estimator. Both are averaged over the two
    pairings (A with A_B^i, B with B_A^i) and computed on centred outputs.
    """
    if M < 100:
        raise ValueError("Sobol estimation needs M >= 100")
    f = _Counted(surrogate.evaluate if hasattr(surrogate, "evaluate") else surrogate)
    a = joint.sample(M, seed, stream=0)
    b = joint.sample(M, seed, stream=1)
    fa, fb = f(a), f(b)
    f0 = 0.5 * (fa.mean() + fb.mean())
    ca, cb = fa - f0, fb - f0
    var = 0.5 * (np.mean(ca * ca) + np.mean(cb * cb))
    first, total = [], []
    for i in range(joint.dim):
        ab = a.copy()
        ab[:, i] = b[:, i]
        ba = b.copy()
        ba[:, i] = a[:, i]
        cab, cba = f(ab) - f0, f(ba) - f0
        if var > 0:
            # A_B^i shares only column i with B, B_A^i only column i with A
            s = 0.5 * (np.mean(cb * (cab - ca)) + np.mean(ca * (cba - cb))) / var
            t = 0.25 * (np.mean((ca - cab) ** 2) + np.mean((cb - cba) ** 2)) / var
        else:
            s = t = 0.0
        first.append(float(s))
        total.append(float(t))
    return SobolReport(tuple(first), tuple(total), M, f.count, float(var), tuple(names))
