"""Command-line study runner.

Each invocation runs one study described by a JSON config and writes a CSV
table, a JSON run report and, where a surrogate is built, the surrogate
document into the output directory. Exit codes: 0 success, 2 invalid config
(nothing written), 3 model or runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import re
import subprocess
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .adaptive import AdaptiveConfig, ModelEvaluationError, RefinementError, adapt
from .distributions import BoundedDistribution, JointDistribution
from .models import ModelError, ParametricModel, get_model
from .multiindex import MultiIndexSet
from .postproc import (MomentError, SOBOL_REPORT_THRESHOLD, cross_validation_error, draw_cv_sample,
                       moments_from_weights, quadrature_moments, sobol_saltelli, standard_error,
                       surrogate_mc)
from .rules import CLENSHAW_CURTIS, LEJA, UnivariateRule, gauss_rule, normalize_family
from .sparse import build_from_index_set

log = logging.getLogger(__name__)

STUDIES = ("nodes", "quad-1d", "interp-1d", "adapt", "moments", "sobol", "cv-error")
EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

# reference settings used when the config does not supply reference values
GAUSS_REFERENCE_POINTS = 30
ADAPTIVE_REFERENCE_TOLERANCE = 1e-14
ADAPTIVE_REFERENCE_BUDGET = 200_000

_KNOWN_KEYS = {
    "study", "model", "inputs", "family", "level", "max_nodes", "budget", "tolerance", "max_level",
    "samples", "cv_samples", "cv_inputs", "reference", "seed", "output",
}


class ConfigError(ValueError):
    """Invalid study configuration; ``line`` points into the config file."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message)


@dataclass
class StudyConfig:
    study: str
    model: ParametricModel
    model_spec: dict
    inputs: JointDistribution
    families: list
    seed: int = 0
    level: int | None = None
    max_nodes: int = 17
    budget: int | None = None
    tolerance: float = 0.0
    max_level: int = 30
    samples: int = 10_000
    cv_samples: int = 0
    cv_inputs: JointDistribution | None = None
    reference: dict | str | None = "auto"
    raw: dict = field(default_factory=dict)


# --------------------------------------------------------------------------
# config parsing


def _line_of(text: str, key: str) -> int | None:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _dist(d, where: str) -> BoundedDistribution:
    if not isinstance(d, dict):
        raise ValueError(f"{where}: expected an object with kind, a, b")
    unknown = set(d) - {"kind", "a", "b", "alpha", "beta"}
    if unknown:
        raise ValueError(f"{where}: unknown field(s) {sorted(unknown)}")
    try:
        return BoundedDistribution.from_dict(d)
    except KeyError as exc:
        raise ValueError(f"{where}: missing field {exc.args[0]!r}") from None


def _inputs(spec, model: ParametricModel, where: str) -> JointDistribution:
    """A list of marginals, or one object applied on the model's own bounds."""
    if spec is None:
        return model.uniform_inputs()
    if isinstance(spec, dict):
        if set(spec) - {"kind", "alpha", "beta"}:
            raise ValueError(f"{where}: shorthand form takes only kind, alpha, beta")
        margs = [_dist({**spec, "a": a, "b": b}, where) for a, b in model.bounds]
        return JointDistribution(margs)
    if not isinstance(spec, list):
        raise ValueError(f"{where}: expected a list of distributions or one shorthand object")
    joint = JointDistribution([_dist(d, f"{where}[{i}]") for i, d in enumerate(spec)])
    if joint.dim != model.dim:
        raise ValueError(f"{where}: {joint.dim} distributions for a {model.dim}-parameter model")
    return joint


def _int(raw, key, default, lo=None):
    v = raw.get(key, default)
    if v is None:
        return None
    if isinstance(v, bool) or not isinstance(v, int):
        raise ValueError(f"{key} must be an integer")
    if lo is not None and v < lo:
        raise ValueError(f"{key} must be >= {lo}")
    return v


def parse_config(text: str, study: str | None = None, seed: int | None = None) -> StudyConfig:
    """Validate a JSON study config; every failure raises :class:`ConfigError`."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object", 1)
    key = None
    try:
        for key in raw:
            if key not in _KNOWN_KEYS:
                raise ValueError(f"unknown key {key!r}")
        key = "study"
        name = raw.get("study", study)
        if study is not None and name != study:
            raise ValueError(f"config is for study {name!r} but {study!r} was requested")
        if name not in STUDIES:
            raise ValueError(f"unknown study {name!r}; expected one of {', '.join(STUDIES)}")

        key = "model"
        mspec = raw.get("model", {"name": "waveguide"})
        if isinstance(mspec, str):
            mspec = {"name": mspec}
        if not isinstance(mspec, dict) or "name" not in mspec:
            raise ValueError("model must be a name or an object with a name")
        opts = {k: v for k, v in mspec.items() if k != "name"}
        if mspec["name"] == "waveguide":
            opts.setdefault("random", ["w"] if name in ("nodes", "quad-1d", "interp-1d") else
                            ["w", "h", "l", "d", "eps_r", "mu_r"])
        try:
            model = get_model(mspec["name"], **opts)
        except (KeyError, TypeError) as exc:
            raise ValueError(str(exc).strip('"')) from None

        key = "inputs"
        inputs = _inputs(raw.get("inputs"), model, "inputs")
        if name in ("nodes", "quad-1d", "interp-1d") and inputs.dim != 1:
            raise ValueError(f"study {name} needs a one-parameter model, got {inputs.dim}")

        key = "family"
        fam = raw.get("family", [CLENSHAW_CURTIS, LEJA] if name in ("quad-1d", "interp-1d") else CLENSHAW_CURTIS)
        fams = fam if isinstance(fam, list) else [fam]
        if not fams:
            raise ValueError("family list is empty")
        fams = [normalize_family(f) for f in fams]
        if name not in ("quad-1d", "interp-1d") and len(fams) != 1:
            raise ValueError(f"study {name} takes a single rule family")

        key = "level"
        level = _int(raw, "level", 2 if name == "nodes" else None, 0)
        key = "max_nodes"
        max_nodes = _int(raw, "max_nodes", 17, 1)
        key = "budget"
        budget = _int(raw, "budget", None, 1)
        key = "tolerance"
        tol = raw.get("tolerance", 1e-8 if budget is None else 0.0)
        if isinstance(tol, bool) or not isinstance(tol, (int, float)) or not tol >= 0:
            raise ValueError("tolerance must be a number >= 0")
        key = "max_level"
        max_level = _int(raw, "max_level", 30, 1)
        key = "budget"
        AdaptiveConfig(budget, float(tol), max_level)
        key = "samples"
        samples = _int(raw, "samples", 2**14 if name == "sobol" else 10_000, 2)
        if name == "sobol" and samples < 100:
            raise ValueError("sobol needs samples >= 100")
        key = "cv_samples"
        cv_samples = _int(raw, "cv_samples", 1000 if name in ("interp-1d", "cv-error") else 0, 0)
        if name in ("interp-1d", "cv-error") and cv_samples < 1:
            raise ValueError(f"study {name} needs cv_samples >= 1")
        key = "cv_inputs"
        cv_inputs = _inputs(raw.get("cv_inputs"), model, "cv_inputs") if "cv_inputs" in raw else inputs
        if cv_inputs.dim != inputs.dim:
            raise ValueError("cv_inputs dimension does not match inputs")
        key = "reference"
        ref = raw.get("reference", "auto")
        if ref is not None and ref != "auto":
            if not isinstance(ref, dict) or set(ref) - {"mean", "variance", "skewness"} or not ref:
                raise ValueError('reference must be "auto", null, or an object with mean/variance/skewness')
            for k, v in ref.items():
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise ValueError(f"reference.{k} must be a number")
        key = "seed"
        cfg_seed = _int(raw, "seed", 0, 0)
        key = "output"
        if "output" in raw and not isinstance(raw["output"], str):
            raise ValueError("output must be a directory path")
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc), _line_of(text, key) if key else None) from None
    return StudyConfig(
        study=name, model=model, model_spec=mspec, inputs=inputs, families=fams,
        seed=cfg_seed if seed is None else seed, level=level, max_nodes=max_nodes, budget=budget,
        tolerance=float(tol), max_level=max_level, samples=samples, cv_samples=cv_samples,
        cv_inputs=cv_inputs, reference=ref, raw=raw,
    )


# --------------------------------------------------------------------------
# studies; each returns (csv header, rows, report extras, surrogate or None)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (tuple, list)):
        return ";".join(str(int(x)) for x in v)
    return "" if v is None else str(v)


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _levels_upto(rule: UnivariateRule, max_nodes: int):
    lev = 0
    while rule.count(lev) <= max_nodes:
        yield lev
        lev += 1


def _eval_points(model, pts) -> np.ndarray:
    out = []
    for p in np.atleast_2d(pts):
        try:
            v = float(model(p))
        except Exception as exc:
            raise ModelEvaluationError(p, exc) from exc
        if not math.isfinite(v):
            raise ModelEvaluationError(p, f"non-finite value {v}")
        out.append(v)
    return np.array(out)


def _reference_1d(cfg: StudyConfig) -> dict:
    if isinstance(cfg.reference, dict):
        return dict(cfg.reference)
    x, w = gauss_rule(cfg.inputs.marginals[0], GAUSS_REFERENCE_POINTS)
    rep = quadrature_moments(_eval_points(cfg.model, x[:, None]), w)
    return {"mean": rep.mean, "variance": rep.variance, "skewness": rep.skewness,
            "source": f"gauss-{GAUSS_REFERENCE_POINTS}"}


def _reference_nd(cfg: StudyConfig, threads: int) -> dict | None:
    if cfg.reference is None:
        return None
    if isinstance(cfg.reference, dict):
        return dict(cfg.reference)
    res = adapt(cfg.model, cfg.inputs, CLENSHAW_CURTIS,
                AdaptiveConfig(ADAPTIVE_REFERENCE_BUDGET, ADAPTIVE_REFERENCE_TOLERANCE, cfg.max_level),
                threads=threads)
    rep = moments_from_weights(res.surrogate)
    return {"mean": rep.mean, "variance": rep.variance, "skewness": rep.skewness,
            "source": f"adaptive-cc tolerance={ADAPTIVE_REFERENCE_TOLERANCE:g}",
            "evaluations": res.evaluations, "stop_reason": res.reason}


def _err(ref, key, value):
    if ref is None or key not in ref:
        return None
    return abs(value - ref[key])


def study_nodes(cfg: StudyConfig, threads: int):
    rule = UnivariateRule(cfg.families[0], cfg.inputs.marginals[0])
    nodes, w = rule.nodes(cfg.level), rule.weights(cfg.level)
    rows = [(i, float(x), float(wi)) for i, (x, wi) in enumerate(zip(nodes, w))]
    return ["index", "node", "weight"], rows, {"level": cfg.level, "family": rule.family}, None


def study_quad_1d(cfg: StudyConfig, threads: int):
    ref = _reference_1d(cfg)
    rows = []
    for fam in cfg.families:
        rule = UnivariateRule(fam, cfg.inputs.marginals[0])
        for lev in _levels_upto(rule, cfg.max_nodes):
            q = _eval_points(cfg.model, rule.nodes(lev)[:, None])
            rep = quadrature_moments(q, rule.weights(lev))
            rows.append((rule.family, lev, rep.evaluations_used, rep.mean, rep.variance, rep.skewness,
                         _err(ref, "mean", rep.mean), _err(ref, "variance", rep.variance),
                         _err(ref, "skewness", rep.skewness)))
    header = ["family", "level", "evaluations", "mean", "variance", "skewness",
              "abs_err_mean", "abs_err_variance", "abs_err_skewness"]
    return header, rows, {"reference": ref}, None


def study_interp_1d(cfg: StudyConfig, threads: int):
    cv = draw_cv_sample(cfg.model, cfg.cv_inputs, cfg.cv_samples, cfg.seed)
    rows = []
    for fam in cfg.families:
        rule = UnivariateRule(fam, cfg.inputs.marginals[0])
        for lev in _levels_upto(rule, cfg.max_nodes):
            sur = build_from_index_set([rule], MultiIndexSet(1, [(k,) for k in range(lev + 1)]), cfg.model)
            rows.append((rule.family, lev, sur.num_points, cross_validation_error(sur, None, cv)))
    return ["family", "level", "evaluations", "cv_error"], rows, {"cv_samples": cfg.cv_samples}, None


def _run_adapt(cfg: StudyConfig, threads: int, track: bool, cv=None):
    return adapt(cfg.model, cfg.inputs, cfg.families[0],
                 AdaptiveConfig(cfg.budget, cfg.tolerance, cfg.max_level),
                 threads=threads, track_moments=track, cv_sample=cv)


def _adapt_extras(res) -> dict:
    return {"evaluations": res.evaluations, "stop_reason": res.reason,
            "final_indicator_sum": res.final_indicator_sum,
            "final_index_set": res.surrogate.index_set.to_list()}


def study_adapt(cfg: StudyConfig, threads: int):
    ref = _reference_nd(cfg, threads)
    cv = draw_cv_sample(cfg.model, cfg.cv_inputs, cfg.cv_samples, cfg.seed) if cfg.cv_samples else None
    res = _run_adapt(cfg, threads, True, cv)
    rows = []
    for r in res.records:
        rows.append(("step", r.step, r.index, r.indicator, r.evaluations, r.mean, r.variance,
                     _err(ref, "mean", r.mean), _err(ref, "variance", r.variance),
                     r.cv_error if cv is not None else None))
    final = moments_from_weights(res.surrogate)
    fcv = cross_validation_error(res.surrogate, None, cv) if cv is not None else None
    rows.append(("final", len(res.records) + 1, None, res.final_indicator_sum, res.evaluations,
                 final.mean, final.variance, _err(ref, "mean", final.mean),
                 _err(ref, "variance", final.variance), fcv))
    header = ["stage", "step", "index", "indicator", "evaluations", "mean", "variance",
              "abs_err_mean", "abs_err_variance", "cv_error"]
    return header, rows, {**_adapt_extras(res), "reference": ref}, res.surrogate


def study_moments(cfg: StudyConfig, threads: int):
    ref = _reference_nd(cfg, threads)
    res = _run_adapt(cfg, threads, False)
    w = moments_from_weights(res.surrogate)
    mc = surrogate_mc(res.surrogate, cfg.inputs, cfg.samples, cfg.seed)
    rows = []
    for method, rep, se in (("collocation", w, None), ("surrogate-mc", mc, standard_error(mc))):
        rows.append((method, rep.evaluations_used, rep.mean, rep.variance, rep.skewness, rep.degenerate, se,
                     _err(ref, "mean", rep.mean), _err(ref, "variance", rep.variance),
                     _err(ref, "skewness", rep.skewness)))
    header = ["method", "evaluations", "mean", "variance", "skewness", "degenerate", "std_error_mean",
              "abs_err_mean", "abs_err_variance", "abs_err_skewness"]
    return header, rows, {**_adapt_extras(res), "reference": ref}, res.surrogate


def study_sobol(cfg: StudyConfig, threads: int):
    res = _run_adapt(cfg, threads, False)
    rep = sobol_saltelli(res.surrogate, cfg.inputs, cfg.samples, cfg.seed, cfg.model.param_names)
    rows = [(nm, s, t, s >= SOBOL_REPORT_THRESHOLD)
            for nm, s, t in zip(cfg.model.param_names, rep.first_order, rep.total_order)]
    extras = {**_adapt_extras(res), "sobol_samples": rep.sample_size,
              "surrogate_evaluations": rep.evaluations, "variance": rep.variance}
    return ["parameter", "first_order", "total_order", "reported"], rows, extras, res.surrogate


def study_cv_error(cfg: StudyConfig, threads: int):
    cv = draw_cv_sample(cfg.model, cfg.cv_inputs, cfg.cv_samples, cfg.seed)
    res = _run_adapt(cfg, threads, False, cv)
    rows = [("step", r.step, r.evaluations, r.cv_error) for r in res.records]
    rows.append(("final", len(res.records) + 1, res.evaluations, cross_validation_error(res.surrogate, None, cv)))
    extras = {**_adapt_extras(res), "cv_samples": cfg.cv_samples}
    return ["stage", "step", "evaluations", "cv_error"], rows, extras, res.surrogate


_RUNNERS = {
    "nodes": study_nodes, "quad-1d": study_quad_1d, "interp-1d": study_interp_1d, "adapt": study_adapt,
    "moments": study_moments, "sobol": study_sobol, "cv-error": study_cv_error,
}


def version_string() -> str:
    """Package version plus ``git describe`` when run from a checkout."""
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"],
                             cwd=Path(__file__).resolve().parent, capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def run_study(cfg: StudyConfig, out_dir: Path, threads: int = 1) -> dict:
    """Run one study and write its artifacts; returns the paths written."""
    t0 = time.perf_counter()
    header, rows, extras, sur = _RUNNERS[cfg.study](cfg, threads)
    elapsed = time.perf_counter() - t0
    report = {
        "study": cfg.study, "version": version_string(), "config": cfg.raw, "seed": cfg.seed,
        "threads": threads, "timings": {"total_seconds": elapsed}, **extras,
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"csv": out_dir / f"{cfg.study}.csv", "report": out_dir / "report.json"}
    paths["csv"].write_text(to_csv(header, rows))
    if sur is not None:
        paths["surrogate"] = out_dir / "surrogate.json"
        paths["surrogate"].write_text(json.dumps(sur.to_dict(), indent=1))
    paths["report"].write_text(json.dumps(report, indent=2, default=_json_default))
    return paths


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sgcolloc", description="Sparse-grid stochastic collocation studies.")
    sub = p.add_subparsers(dest="study", required=True)
    for name in STUDIES:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="JSON study config")
        s.add_argument("--out", default=None, help="output directory (default: config 'output' or .)")
        s.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        s.add_argument("--threads", type=int, default=1, help="model evaluation threads")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc.strerror}") from None
        cfg = parse_config(text, args.study, args.seed)
    except ConfigError as exc:
        where = f"{args.config}:{exc.line}: " if exc.line else f"{args.config}: "
        print(f"config error: {where}{exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out or cfg.raw.get("output", "."))
    try:
        paths = run_study(cfg, out, args.threads)
    except (ModelError, ModelEvaluationError, RefinementError, MomentError, ArithmeticError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for kind, path in paths.items():
        print(f"{kind}: {os.fspath(path)}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
