"""Parametric models: the dielectric slab waveguide and analytic test functions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .distributions import BoundedDistribution, JointDistribution

C0 = 299_792_458.0
MU0 = 4e-7 * math.pi
EPS0 = 1.0 / (MU0 * C0 * C0)

WAVEGUIDE_FREQUENCY = 6e9

# name -> (nominal, lower, upper); lengths in mm
WAVEGUIDE_TABLE = {
    "w": (30.0, 27.0, 33.0),
    "h": (3.0, 2.7, 3.3),
    "l": (7.0, 6.3, 7.7),
    "d": (5.0, 4.5, 5.5),
    "eps_r": (2.0, 1.8, 2.2),
    "mu_r": (2.4, 2.16, 2.64),
}
WAVEGUIDE_PARAMS = tuple(WAVEGUIDE_TABLE)


class ModelError(RuntimeError):
    """A model could not be evaluated at the given parameter vector."""


@dataclass(frozen=True)
class WaveguideParams:
    """Waveguide geometry and material in SI units."""

    w: float
    h: float
    l: float
    d: float
    eps_r: float
    mu_r: float
    f: float = WAVEGUIDE_FREQUENCY

    @classmethod
    def from_table_units(cls, w, h, l, d, eps_r, mu_r, f_ghz: float = WAVEGUIDE_FREQUENCY / 1e9):
        """Build from millimetres and GHz."""
        return cls(w * 1e-3, h * 1e-3, l * 1e-3, d * 1e-3, eps_r, mu_r, f_ghz * 1e9)

    @classmethod
    def nominal(cls) -> "WaveguideParams":
        return cls.from_table_units(*(v[0] for v in WAVEGUIDE_TABLE.values()))

    def validate(self):
        if min(self.w, self.h, self.d) <= 0 or self.l < 0:
            raise ModelError(f"non-physical waveguide dimensions: {self}")
        if self.eps_r < 1 or self.mu_r < 1:
            raise ModelError(f"relative material constants must be >= 1: {self}")
        cutoff = C0 / (2.0 * self.w)
        if self.f <= cutoff:
            raise ModelError(
                f"TE10 mode is evanescent: f = {self.f:.6g} Hz <= cutoff {cutoff:.6g} Hz (w = {self.w} m)"
            )


def te10_cutoff(w: float) -> float:
    """Cutoff frequency (Hz) of the TE10 mode in an air-filled guide of width ``w`` (m)."""
    return C0 / (2.0 * w)


def waveguide_s11(p: WaveguideParams) -> complex:
    """Complex reflection coefficient at port 1 for a single propagating TE10 mode.

    Vacuum section ``d`` | dielectric slab ``l`` | vacuum section ``d`` into a
    matched guide. The slab transforms the matched load impedance, and the
    input vacuum section only rotates the phase of the result.
    """
    p.validate()
    omega = 2.0 * math.pi * p.f
    kc2 = (math.pi / p.w) ** 2
    beta1 = math.sqrt(omega * omega * MU0 * EPS0 - kc2)
    mu2 = MU0 * p.mu_r
    beta2 = math.sqrt(omega * omega * mu2 * EPS0 * p.eps_r - kc2)
    z1 = omega * MU0 / beta1
    z2 = omega * mu2 / beta2
    tn = math.tan(beta2 * p.l)
    z_in = z2 * (z1 + 1j * z2 * tn) / (z2 + 1j * z1 * tn)
    gamma = (z_in - z1) / (z_in + z1)
    return gamma * complex(math.cos(2.0 * beta1 * p.d), -math.sin(2.0 * beta1 * p.d))


def waveguide_s11_mag(p: WaveguideParams) -> float:
    """``|S11|`` of the dielectric slab waveguide."""
    return abs(waveguide_s11(p))


@dataclass(frozen=True)
class ParametricModel:
    """A scalar quantity of interest ``q(y)`` on a box of parameters.

    ``reference`` holds analytic statistics for the default uniform inputs
    when known (keys ``mean``, ``variance``, ``first_order``, ``total_order``).
    """

    name: str
    param_names: tuple
    bounds: tuple
    func: Callable = field(repr=False)
    reference: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return len(self.param_names)

    def __call__(self, y) -> float:
        y = np.asarray(y, dtype=float)
        if y.shape != (self.dim,):
            raise ValueError(f"{self.name} expects {self.dim} parameters, got shape {y.shape}")
        return float(self.func(y))

    def uniform_inputs(self) -> JointDistribution:
        return JointDistribution([BoundedDistribution.uniform(a, b) for a, b in self.bounds])


def waveguide_model(random: Sequence[str] = WAVEGUIDE_PARAMS, fixed: dict | None = None) -> ParametricModel:
    """``|S11|`` as a function of the parameters named in ``random``.

    Inputs are in Table-1 units (mm for lengths, dimensionless materials) in
    the given order; all other parameters are held at ``fixed`` or nominal.
    """
    random = tuple(random)
    for n in random:
        if n not in WAVEGUIDE_TABLE:
            raise ValueError(f"unknown waveguide parameter {n!r}; expected one of {WAVEGUIDE_PARAMS}")
    if len(set(random)) != len(random):
        raise ValueError("duplicate waveguide parameter")
    fixed = dict(fixed or {})
    frequency_ghz = float(fixed.pop("f_ghz", WAVEGUIDE_FREQUENCY / 1e9))
    base = {k: v[0] for k, v in WAVEGUIDE_TABLE.items()}
    for k, v in fixed.items():
        if k not in base:
            raise ValueError(f"unknown waveguide parameter {k!r}")
        base[k] = float(v)
    positions = [WAVEGUIDE_PARAMS.index(n) for n in random]
    template = [base[k] for k in WAVEGUIDE_PARAMS]

    def q(y):
        vals = list(template)
        for pos, v in zip(positions, y):
            vals[pos] = float(v)
        try:
            return waveguide_s11_mag(WaveguideParams.from_table_units(*vals, f_ghz=frequency_ghz))
        except (ModelError, ValueError) as exc:
            raise ModelError(f"waveguide evaluation failed at {list(map(float, y))}: {exc}") from exc

    bounds = tuple((WAVEGUIDE_TABLE[n][1], WAVEGUIDE_TABLE[n][2]) for n in random)
    return ParametricModel("waveguide", random, bounds, q)


def waveguide_inputs(random: Sequence[str] = WAVEGUIDE_PARAMS, kind: str = "uniform",
                     alpha: float = 3.0, beta: float = 6.0) -> JointDistribution:
    """Inputs on the Table-1 bounds, either uniform or beta with shared shapes."""
    out = []
    for n in random:
        _, a, b = WAVEGUIDE_TABLE[n]
        if kind == "uniform":
            out.append(BoundedDistribution.uniform(a, b))
        elif kind == "beta":
            out.append(BoundedDistribution.beta_dist(alpha, beta, a, b))
        else:
            raise ValueError(f"unknown input kind {kind!r}")
    return JointDistribution(out)


# --------------------------------------------------------------------------
# analytic test functions, default inputs uniform on the listed bounds


def _names(dim):
    return tuple(f"y{n + 1}" for n in range(dim))


def _constant(dim, value=3.7):
    return ParametricModel(
        "constant", _names(dim), ((-1.0, 1.0),) * dim, lambda y: value,
        {"mean": value, "variance": 0.0},
    )


def _additive_linear(dim):
    coef = np.arange(1, dim + 1, dtype=float)
    var_terms = coef**2 / 3.0
    var = float(var_terms.sum())
    s = (var_terms / var).tolist()
    return ParametricModel(
        "additive-linear", _names(dim), ((-1.0, 1.0),) * dim, lambda y: float(coef @ y),
        {"mean": 0.0, "variance": var, "first_order": s, "total_order": s},
    )


def _exp_sum(dim):
    mu = dim * math.sinh(1.0 / dim)  # E[exp(y/N)], y ~ U(-1, 1)
    nu = 0.5 * dim * math.sinh(2.0 / dim)  # E[exp(2y/N)]
    var = nu**dim - mu ** (2 * dim)
    first = [(nu - mu * mu) * mu ** (2 * (dim - 1)) / var] * dim
    total = [(nu - mu * mu) * nu ** (dim - 1) / var] * dim
    return ParametricModel(
        "exp-sum", _names(dim), ((-1.0, 1.0),) * dim, lambda y: math.exp(float(np.sum(y)) / dim),
        {"mean": mu**dim, "variance": var, "first_order": first, "total_order": total},
    )


def _single_exp(dim):
    var = 0.5 * math.sinh(2.0) - math.sinh(1.0) ** 2
    s = [1.0] + [0.0] * (dim - 1)
    return ParametricModel(
        "single-exp", _names(dim), ((-1.0, 1.0),) * dim, lambda y: math.exp(y[0]),
        {"mean": math.sinh(1.0), "variance": var, "first_order": s, "total_order": s},
    )


def _poly2(dim):
    def q(y):
        return 1.0 + float(np.sum(y + 0.5 * y * y)) + float(np.sum(y[:-1] * y[1:]))

    var = dim * (1.0 / 3.0 + 1.0 / 45.0) + (dim - 1) / 9.0
    return ParametricModel(
        "poly2", _names(dim), ((-1.0, 1.0),) * dim, q, {"mean": 1.0 + dim / 6.0, "variance": var},
    )


def _ishigami(dim=3, a=7.0, b=0.1):
    if dim != 3:
        raise ValueError("ishigami is three-dimensional")
    pi = math.pi
    v1 = 0.5 * (1.0 + b * pi**4 / 5.0) ** 2
    v2 = a * a / 8.0
    v13 = 8.0 * b * b * pi**8 / 225.0
    var = v1 + v2 + v13

    def q(y):
        return math.sin(y[0]) + a * math.sin(y[1]) ** 2 + b * y[2] ** 4 * math.sin(y[0])

    return ParametricModel(
        "ishigami", _names(3), ((-pi, pi),) * 3, q,
        {"mean": a / 2.0, "variance": var, "first_order": [v1 / var, v2 / var, 0.0],
         "total_order": [(v1 + v13) / var, v2 / var, v13 / var]},
    )


_REGISTRY = {
    "constant": _constant,
    "additive-linear": _additive_linear,
    "exp-sum": _exp_sum,
    "single-exp": _single_exp,
    "poly2": _poly2,
    "ishigami": _ishigami,
}


def test_function_registry() -> dict:
    """Name -> factory ``f(dim) -> ParametricModel`` for the analytic functions."""
    return dict(_REGISTRY)


test_function_registry.__test__ = False  # keep pytest from collecting it


def get_model(name: str, dim: int | None = None, **options) -> ParametricModel:
    """Look up a model by name; ``waveguide`` accepts ``random`` and ``fixed``."""
    if name == "waveguide":
        return waveguide_model(**options)
    try:
        factory = _REGISTRY[name]
    except KeyError:
        known = ", ".join(["waveguide", *_REGISTRY])
        raise KeyError(f"unknown model {name!r}; known models: {known}") from None
    if dim is None:
        dim = 3 if name == "ishigami" else 1
    return factory(dim, **options)
