"""Scenario files: resolution of manifolds, fields and metrics, checks, reports.

A scenario is a JSON object with the keys ``manifold``, ``field``, ``metric``,
``sampling``, ``checks`` and ``tolerances``. ``manifold`` and ``metric`` may
be lists; the scenario then runs on every (manifold, metric) pair.
"""

from __future__ import annotations

import itertools
import json
import math
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import expr
from .dual import directional, values
from .expr import ParseError
from .gnatural import (
    NAMES,
    DegenerateConstruction,
    GeneratorSet,
    OutOfDomain,
    UnknownPreset,
    check_nondegenerate,
    construct_concircular_family,
    construct_recurrent_example,
    example_ode_residual,
    preset,
    random_polynomial_family,
)
from .manifold import (
    MANIFOLDS,
    AmbiguousClassification,
    ChartManifold,
    VectorField,
    as_field,
    as_scalar_field,
    classify_field,
    constant_field,
    nabla_matrix,
    riemann_at,
    sample_points,
    second_covariant,
)
from .submanifold import (
    ANALYTIC_TOL,
    ORACLE_TOL,
    ORTHO_TOL,
    SamplingConfig,
    _t_at,
    admissible,
    constant_length_converse,
    graph_frame,
    lifted_derivative_oracle,
    tau_fields,
    totally_geodesic_test,
    tw_tv_concircular,
    tw_tv_general,
    tw_tv_recurrent,
)

SCHEMA_VERSION = 1
TOP_KEYS = {"manifold", "field", "metric", "sampling", "checks", "tolerances"}
REQUIRED_KEYS = {"manifold", "field", "metric", "checks"}
SAMPLING_KEYS = {"n_points", "seed", "t_range", "boundary_margin"}
DEFAULT_TOLERANCES = {
    "sff": ANALYTIC_TOL,  # verdict threshold on |II|
    "oracle": ORACLE_TOL,
    "analytic": ANALYTIC_TOL,
    "strict": 1e-8,
    "ortho": ORTHO_TOL,
    "ode": 1e-8,
}
PRECHECK_T_MAX = 10.0


class ConfigError(Exception):
    """Anything wrong with a scenario before checks run (exit code 1)."""


class UnknownCheck(ConfigError):
    pass


class DegenerateMetric(ConfigError):
    pass


# ---------------------------------------------------------------------------
# manifolds


def resolve_manifold(spec) -> ChartManifold:
    if isinstance(spec, str):
        spec = {"name": spec}
    if not isinstance(spec, dict):
        raise ConfigError(f"manifold must be a name or an object, got {spec!r}")
    if "metric" in spec:
        return _inline_manifold(spec)
    spec = dict(spec)
    name = spec.pop("name", None)
    spec.pop("label", None)
    if name not in MANIFOLDS:
        raise ConfigError(f"unknown manifold {name!r}; known: {sorted(MANIFOLDS)}")
    try:
        return MANIFOLDS[name](**spec)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for manifold {name!r}: {exc}") from None


def _inline_manifold(spec: dict) -> ChartManifold:
    unknown = set(spec) - {"metric", "bounds", "name", "label", "flat"}
    if unknown:
        raise ConfigError(f"unknown inline manifold keys {sorted(unknown)}")
    rows = spec["metric"]
    n = len(rows)
    if n == 0 or any(not isinstance(r, list) or len(r) != n for r in rows):
        raise ConfigError("inline metric must be a square list of expressions")
    fns = [[expr.coordinate_fn(e, n, f"metric[{i}][{j}]") for j, e in enumerate(r)]
           for i, r in enumerate(rows)]
    bounds = spec.get("bounds", [[-1.0, 1.0]] * n)
    if len(bounds) != n:
        raise ConfigError("bounds must give one interval per coordinate")

    def g(x):
        return np.array([[f(x) for f in r] for r in fns])

    return ChartManifold(n, g, tuple(tuple(map(float, b)) for b in bounds),
                         name=spec.get("name", "inline"), flat=bool(spec.get("flat", False)))


# ---------------------------------------------------------------------------
# vector fields


@dataclass
class FieldSpec:
    u: VectorField
    alpha: Callable | None = None  # concircular / torse-forming factor
    rho: VectorField | None = None  # recurrent / torse-forming 1-form (components)
    name: str = ""


def _pad(v, n):
    v = [float(a) for a in v]
    if len(v) != n:
        raise ConfigError(f"vector {v} does not match dimension {n}")
    return v


def _f_constant(M, v=None):
    v = _pad(v if v is not None else [0.7, -0.4, 0.5][: M.dim], M.dim)
    return FieldSpec(constant_field(v), alpha=0.0, name="constant")


def _f_position(M):
    return FieldSpec(VectorField(lambda x: np.asarray(x) * 1.0, "position"), alpha=1.0, name="position")


def _f_rotation(M):
    if M.dim != 2:
        raise ConfigError("rotation field needs a 2-dimensional manifold")
    return FieldSpec(VectorField(lambda x: np.array([-x[1], x[0]]), "rotation"), name="rotation")


def _f_unit_twist(M, k=1.0):
    """(cos k x_n, sin k x_n, 0, ...): constant length, not parallel on flat charts."""
    n = M.dim
    if n < 2:
        raise ConfigError("unit_twist needs dimension >= 2")

    def comp(x):
        c, s = np.cos(k * x[n - 1]), np.sin(k * x[n - 1])
        return np.array([c, s] + [0 * c] * (n - 2))

    return FieldSpec(VectorField(comp, "unit_twist"), name="unit_twist")


def _f_recurrent_exp(M, lam=0.4, v=None, axis=0):
    """exp(lam x_axis) v; recurrent with rho = lam dx_axis."""
    n = M.dim
    v = np.array(_pad(v if v is not None else [0.6, 0.3, 0.2][:n], n))
    if not 0 <= axis < n:
        raise ConfigError(f"axis {axis} out of range for dimension {n}")

    def comp(x):
        return np.exp(lam * x[axis]) * v

    rho = constant_field([lam if i == axis else 0.0 for i in range(n)])
    return FieldSpec(VectorField(comp, "recurrent_exp"), alpha=0.0, rho=rho, name="recurrent_exp")


def _f_sphere_concircular(M):
    if M.dim != 2:
        raise ConfigError("sphere_concircular needs the sphere chart")
    return FieldSpec(
        VectorField(lambda x: np.array([np.sin(x[0]), 0 * x[0]]), "sin(theta) d_theta"),
        alpha=lambda x: np.cos(x[0]), name="sphere_concircular",
    )


def _f_cone_radial(M):
    if M.dim != 3:
        raise ConfigError("cone_radial needs the cone chart")
    return FieldSpec(VectorField(lambda x: np.array([x[0], 0 * x[0], 0 * x[0]]), "r d_r"),
                     alpha=1.0, name="cone_radial")


def _f_generic(M):
    n = M.dim

    def comp(x):
        return np.array([
            0.35 + 0.25 * np.sin(0.9 * x[k] + 0.6 * x[(k + 1) % n] + k)
            + 0.1 * np.cos(1.3 * x[(k + 1) % n] - 0.4 * k)
            for k in range(n)
        ])

    return FieldSpec(VectorField(comp, "generic"), name="generic")


FIELDS: dict[str, Callable[..., FieldSpec]] = {
    "constant": _f_constant,
    "position": _f_position,
    "rotation": _f_rotation,
    "unit_twist": _f_unit_twist,
    "recurrent_exp": _f_recurrent_exp,
    "sphere_concircular": _f_sphere_concircular,
    "cone_radial": _f_cone_radial,
    "generic": _f_generic,
}


def resolve_field(spec, M: ChartManifold) -> FieldSpec:
    if isinstance(spec, str):
        spec = {"name": spec}
    if not isinstance(spec, dict):
        raise ConfigError(f"field must be a name or an object, got {spec!r}")
    if "components" in spec:
        return _inline_field(spec, M)
    spec = dict(spec)
    name = spec.pop("name", None)
    if name not in FIELDS:
        raise ConfigError(f"unknown field {name!r}; known: {sorted(FIELDS)}")
    try:
        return FIELDS[name](M, **spec)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for field {name!r}: {exc}") from None


def _inline_field(spec: dict, M: ChartManifold) -> FieldSpec:
    unknown = set(spec) - {"components", "alpha", "rho", "name"}
    if unknown:
        raise ConfigError(f"unknown inline field keys {sorted(unknown)}")
    n = M.dim
    comps = spec["components"]
    if len(comps) != n:
        raise ConfigError(f"field has {len(comps)} components, manifold dimension is {n}")
    fns = [expr.coordinate_fn(c, n, f"field.components[{i}]") for i, c in enumerate(comps)]
    u = VectorField(lambda x: np.array([f(x) for f in fns]), spec.get("name", "inline"))
    alpha = rho = None
    if "alpha" in spec:
        alpha = expr.coordinate_fn(spec["alpha"], n, "field.alpha")
    if "rho" in spec:
        if len(spec["rho"]) != n:
            raise ConfigError("rho needs one component per coordinate")
        rf = [expr.coordinate_fn(c, n, f"field.rho[{i}]") for i, c in enumerate(spec["rho"])]
        rho = VectorField(lambda x: np.array([f(x) for f in rf]), "rho")
    return FieldSpec(u, alpha, rho, spec.get("name", "inline"))


# ---------------------------------------------------------------------------
# metrics


def parse_assignments(text: str) -> dict:
    """'a1=1,a2=1,a3=0' -> {'a1': '1', 'a2': '1', 'a3': '0'}."""
    out = {}
    for part in text.split(","):
        if "=" not in part:
            raise ParseError("expected name=expression", text, text.find(part))
        k, v = part.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def metric_label(spec) -> str:
    if isinstance(spec, str):
        return spec
    if isinstance(spec, dict):
        if "label" in spec:
            return str(spec["label"])
        if "preset" in spec:
            return str(spec["preset"])
        if "family" in spec:
            return str(spec["family"])
        return "generators"
    return repr(spec)


def resolve_metric(spec) -> GeneratorSet:
    if isinstance(spec, str):
        if "=" in spec:
            return _generators({"generators": parse_assignments(spec)})
        try:
            return preset(spec)
        except UnknownPreset:
            raise ConfigError(f"unknown metric preset {spec!r}") from None
    if not isinstance(spec, dict):
        raise ConfigError(f"metric must be a name or an object, got {spec!r}")
    spec = {k: v for k, v in spec.items() if k != "label"}
    try:
        if "preset" in spec:
            return resolve_metric(spec["preset"])
        if "generators" in spec:
            return _generators(spec)
        family = spec.pop("family", None)
        if family == "concircular":
            a1 = expr.scalar_fn(spec.pop("a1", 1.0), "metric.a1")
            return construct_concircular_family(
                float(spec.pop("alpha", 1.0)), a1, float(spec.pop("C", 1.0)),
                flat_variant=spec.pop("C1", None), **spec,
            )
        if family == "recurrent_example":
            a1 = expr.scalar_fn(spec.pop("a1", 1.0), "metric.a1")
            return construct_recurrent_example(
                float(spec.pop("K", 1.0)), a1, float(spec.pop("eps", 0.1)), float(spec.pop("A", 1.0)),
                **spec,
            )
        if family == "random_polynomial":
            return random_polynomial_family(**spec)
    except DegenerateConstruction as exc:
        raise DegenerateMetric(str(exc)) from None
    except TypeError as exc:
        raise ConfigError(f"bad metric parameters: {exc}") from None
    raise ConfigError(f"cannot interpret metric spec {spec!r}")


def _generators(spec: dict) -> GeneratorSet:
    unknown = set(spec) - {"generators", "t_min", "t_min_open", "name"}
    if unknown:
        raise ConfigError(f"unknown metric keys {sorted(unknown)}")
    gens = spec["generators"]
    bad = set(gens) - set(NAMES)
    if bad:
        raise ConfigError(f"unknown generator names {sorted(bad)}")
    if "a1" not in gens:
        raise ConfigError("generator a1 is required")
    fns = {k: expr.scalar_fn(v, f"metric.generators.{k}") for k, v in gens.items()}
    return GeneratorSet(**fns, t_min=float(spec.get("t_min", 0.0)),
                        t_min_open=bool(spec.get("t_min_open", False)),
                        name=spec.get("name", "custom"))


# ---------------------------------------------------------------------------
# checks


@dataclass
class Context:
    M: ChartManifold
    gen: GeneratorSet
    fs: FieldSpec
    points: np.ndarray
    sampling: SamplingConfig
    tol: dict
    _tg: Any = None

    def tg(self):
        if self._tg is None:
            self._tg = totally_geodesic_test(self.M, self.gen, self.fs.u, self.sampling,
                                             sff_tol=self.tol["sff"], oracle_tol=self.tol["oracle"],
                                             points=self.points)
        return self._tg


@dataclass
class Raw:
    """One sample-level outcome before the expectation is applied."""

    index: int
    point: list | None
    values: dict
    residual: float
    ok: bool


def _per_point(ctx: Context, fn) -> list[Raw]:
    out = []
    for k, p in enumerate(ctx.points):
        try:
            vals, res, ok = fn(p)
        except (ValueError, np.linalg.LinAlgError) as exc:
            vals, res, ok = {"error": str(exc)}, float("nan"), False
        out.append(Raw(k, p.tolist(), vals, float(res), bool(ok)))
    return out


def _from_tg(name: str, tol_key: str):
    def run(ctx: Context, params: dict):
        rep = ctx.tg()
        recs = [r for r in rep.records if r.check in (name, "error")]
        return [Raw(r.index, r.point, dict(r.values), r.residual,
                    r.check == name and r.residual <= ctx.tol[tol_key]) for r in recs], {}
    return run


def _check_totally_geodesic(ctx: Context, params: dict):
    raws, _ = _from_tg("sff_norm", "sff")(ctx, params)
    for r in raws:
        r.ok = r.ok and r.residual < ctx.tol["sff"]
    return raws, {"max_sff_norm": ctx.tg().max_sff_norm}


def _require(ctx: Context, attr: str, check: str):
    v = getattr(ctx.fs, attr)
    if v is None:
        raise ConfigError(f"check {check!r} needs a field with a known {attr}")
    return v


def _pair_residual(frame, g, A, B):
    """Largest relative gap between the normal pairings of two (T_W, T_V) pairs."""
    worst = 0.0
    for eta in frame.normal_basis:
        a = float(eta.hor @ g @ A[0] + eta.ver @ g @ A[1])
        b = float(eta.hor @ g @ B[0] + eta.ver @ g @ B[1])
        worst = max(worst, abs(a - b) / (1 + abs(b)))
    return worst


def _check_concircular_consistency(ctx: Context, params: dict):
    alpha = _require(ctx, "alpha", "concircular_consistency")
    M, gen, u = ctx.M, ctx.gen, ctx.fs.u

    def one(p):
        frame = graph_frame(M, gen, u, p)
        g = values(M.metric(p))
        res = max(
            _pair_residual(frame, g, tw_tv_concircular(M, gen, u, alpha, p, e, ctx.tol["analytic"]),
                           tw_tv_general(M, gen, u, p, e))
            for e in np.eye(M.dim)
        )
        return {}, res, res <= ctx.tol["analytic"]

    return _per_point(ctx, one), {}


def _check_sasaki_concircular_tw(ctx: Context, params: dict):
    alpha = as_scalar_field(_require(ctx, "alpha", "sasaki_concircular_tw"))
    M, gen, u = ctx.M, ctx.gen, ctx.fs.u

    def one(p):
        R = riemann_at(M, p)
        up = values(u(p))
        al = float(values(alpha(p)))
        res = 0.0
        for e in np.eye(M.dim):
            TW, _ = tw_tv_concircular(M, gen, u, alpha, p, e, ctx.tol["analytic"])
            res = max(res, float(np.linalg.norm(TW - al * R.vector(up, e, e))))
        return {"alpha": al}, res, res <= ctx.tol["analytic"]

    return _per_point(ctx, one), {}


def _check_sasaki_concircular_tv(ctx: Context, params: dict):
    alpha = _require(ctx, "alpha", "sasaki_concircular_tv")
    M, gen, u = ctx.M, ctx.gen, ctx.fs.u

    def one(p):
        af = as_scalar_field(alpha)
        res = 0.0
        grad = 0.0
        for e in np.eye(M.dim):
            _, TV = tw_tv_concircular(M, gen, u, alpha, p, e, ctx.tol["analytic"])
            res = max(res, float(np.linalg.norm(TV)))
            grad = max(grad, abs(float(values(directional(af, p, e, M.diff_mode)))))
        return {"max_X_alpha": grad}, res, res <= ctx.tol["strict"]

    return _per_point(ctx, one), {}


def _check_recurrent_consistency(ctx: Context, params: dict):
    rho = _require(ctx, "rho", "recurrent_consistency")
    M, gen, u = ctx.M, ctx.gen, ctx.fs.u

    def one(p):
        frame = graph_frame(M, gen, u, p)
        g = values(M.metric(p))
        res = max(
            _pair_residual(frame, g, tw_tv_recurrent(M, gen, u, rho, p, e, ctx.tol["analytic"]),
                           tw_tv_general(M, gen, u, p, e))
            for e in np.eye(M.dim)
        )
        return {}, res, res <= ctx.tol["analytic"]

    return _per_point(ctx, one), {}


def _check_sasaki_recurrent_tw(ctx: Context, params: dict):
    rho = _require(ctx, "rho", "sasaki_recurrent_tw")
    M, gen, u = ctx.M, ctx.gen, ctx.fs.u

    def one(p):
        res = max(float(np.linalg.norm(tw_tv_recurrent(M, gen, u, rho, p, e, ctx.tol["analytic"])[0]))
                  for e in np.eye(M.dim))
        return {}, res, res <= ctx.tol["strict"]

    return _per_point(ctx, one), {}


def _check_sasaki_recurrent_tv(ctx: Context, params: dict):
    rho = _require(ctx, "rho", "sasaki_recurrent_tv")
    M, gen, u = ctx.M, ctx.gen, ctx.fs.u

    def one(p):
        res = 0.0
        for e in np.eye(M.dim):
            _, TV = tw_tv_recurrent(M, gen, u, rho, p, e, ctx.tol["analytic"])
            ref = values(second_covariant(M, u, e, p))
            res = max(res, float(np.linalg.norm(TV - ref)))
        return {}, res, res <= ctx.tol["analytic"]

    return _per_point(ctx, one), {}


def _check_tw_tv_zero(ctx: Context, params: dict):
    M, gen, u = ctx.M, ctx.gen, ctx.fs.u

    def one(p):
        res = 0.0
        for e in np.eye(M.dim):
            TW, TV = tw_tv_general(M, gen, u, p, e)
            res = max(res, float(np.linalg.norm(TW)), float(np.linalg.norm(TV)))
        return {}, res, res <= ctx.tol["analytic"]

    return _per_point(ctx, one), {}


def _check_constant_length_converse(ctx: Context, params: dict):
    M, gen, u = ctx.M, ctx.gen, ctx.fs.u
    W, V = tau_fields(M, gen, u)
    is_sasaki = params.get("sasaki", gen.name == "sasaki")
    best = [0.0]

    def one(p):
        g = values(M.metric(p))
        J = nabla_matrix(M, u, p)
        res = 0.0
        vals = {}
        for i, e in enumerate(np.eye(M.dim)):
            closed = constant_length_converse(M, gen, u, p, e, ctx.tol["analytic"])
            orac = lifted_derivative_oracle(M, gen, u, p, e, W, V)
            res = max(res, abs(closed - orac) / (1 + abs(closed)))
            if is_sasaki:
                Y = J @ e
                res = max(res, abs(closed - float(Y @ g @ Y)))
            vals[f"value_{i}"] = closed
            best[0] = max(best[0], closed)
        return vals, res, res <= ctx.tol["oracle"]

    raws = _per_point(ctx, one)
    extra = {"max_value": best[0]}
    if params.get("require_positive", is_sasaki):
        extra["_ok"] = best[0] > ctx.tol["analytic"]
    return raws, extra


def _check_example_ode(ctx: Context, params: dict):
    lo, hi = params.get("t_range", ctx.sampling.t_range or [max(ctx.gen.t_min, 0.0) + 0.5, 10.0])
    out = []
    for k, t in enumerate(np.linspace(float(lo), float(hi), int(params.get("n", 50)))):
        try:
            r = abs(example_ode_residual(ctx.gen, float(t)))
            out.append(Raw(k, [float(t)], {}, r, r <= ctx.tol["ode"]))
        except OutOfDomain as exc:
            out.append(Raw(k, [float(t)], {"error": str(exc)}, float("nan"), False))
    return out, {}


def _check_nondegenerate(ctx: Context, params: dict):
    t_max = float(params.get("t_max", (ctx.sampling.t_range or [0, PRECHECK_T_MAX])[1]))
    t_min = params.get("t_min", (ctx.sampling.t_range or [None])[0])
    rep = check_nondegenerate(ctx.gen, t_max, int(params.get("n_samples", 1000)),
                              dim1=ctx.M.dim == 1, t_min=t_min)
    vals = {
        "t_max": t_max,
        "min_abs_a": float(np.min(np.abs(rep.a_values))),
        "min_abs_F": float(np.min(np.abs(rep.F_values))),
        "first_failure": rep.first_failure,
        "n_failing": len(rep.failing_t),
    }
    return [Raw(0, None, vals, 0.0, rep.passed)], {}


def _check_classify(ctx: Context, params: dict):
    try:
        c = classify_field(ctx.M, ctx.fs.u, ctx.points, tol=ctx.tol["analytic"])
        kind, res = c.kind, c.residual
    except AmbiguousClassification as exc:
        kind, res = f"ambiguous: {exc}", float("nan")
    return [Raw(0, None, {"kind": kind}, res, True)], {"kind": kind}


CHECKS: dict[str, Callable] = {
    "totally_geodesic": _check_totally_geodesic,
    "oracle_equivalence": _from_tg("lifted_derivative", "oracle"),
    "tw_tv_pairing": _from_tg("tw_tv_pairing", "oracle"),
    "normal_orthogonality": _from_tg("normal_orthogonality", "ortho"),
    "concircular_consistency": _check_concircular_consistency,
    "sasaki_concircular_tw": _check_sasaki_concircular_tw,
    "sasaki_concircular_tv": _check_sasaki_concircular_tv,
    "recurrent_consistency": _check_recurrent_consistency,
    "sasaki_recurrent_tw": _check_sasaki_recurrent_tw,
    "sasaki_recurrent_tv": _check_sasaki_recurrent_tv,
    "tw_tv_zero": _check_tw_tv_zero,
    "constant_length_converse": _check_constant_length_converse,
    "example_ode": _check_example_ode,
    "nondegenerate": _check_nondegenerate,
    "classify": _check_classify,
}
POINT_FREE = {"nondegenerate", "example_ode"}


@dataclass(frozen=True)
class CheckSpec:
    name: str
    expect: Any = True
    params: dict = field(default_factory=dict)

    def expected_for(self, label: str):
        if isinstance(self.expect, dict):
            if label not in self.expect:
                raise ConfigError(f"check {self.name!r} has no expectation for metric {label!r}")
            return self.expect[label]
        return self.expect


def parse_check(spec) -> CheckSpec:
    if isinstance(spec, str):
        spec = {"name": spec}
    if not isinstance(spec, dict) or "name" not in spec:
        raise ConfigError(f"check must be a name or an object with 'name', got {spec!r}")
    unknown = set(spec) - {"name", "expect", "params"}
    if unknown:
        raise ConfigError(f"unknown check keys {sorted(unknown)}")
    if spec["name"] not in CHECKS:
        raise UnknownCheck(f"unknown check {spec['name']!r}; known: {sorted(CHECKS)}")
    return CheckSpec(spec["name"], spec.get("expect", True), dict(spec.get("params", {})))


def apply_expectation(check: CheckSpec, expected, raws: list[Raw], extra: dict, run: str) -> list[dict]:
    """Turn sample outcomes into report records.

    With ``expect: true`` every sample must be within tolerance. With
    ``expect: false`` the check asserts the opposite: at least one sample
    falls outside tolerance, and sample records are informational. ``classify``
    compares the detected kind with a string expectation. Each check ends with
    an aggregate record at index -1.
    """
    all_ok = all(r.ok for r in raws) and bool(raws)
    extra = dict(extra)
    extra_ok = extra.pop("_ok", True)
    if check.name == "classify":
        verdict = extra.get("kind")
        passed = verdict == expected
    elif isinstance(expected, bool):
        verdict = all_ok
        passed = (all_ok == expected) and extra_ok
    else:
        raise ConfigError(f"check {check.name!r}: expect must be true or false")
    out = []
    for r in raws:
        rec_pass = r.ok if expected is True else True
        out.append(_record(check.name, run, r.index, r.point, {**r.values, "within_tol": r.ok},
                           r.residual, rec_pass))
    finite = [r.residual for r in raws if math.isfinite(r.residual)]
    agg = {**extra, "expect": expected, "observed": verdict, "n_samples": len(raws),
           "n_within_tol": sum(r.ok for r in raws)}
    out.append(_record(check.name, run, -1, None, agg, max(finite, default=0.0), passed))
    return out


def _record(check, run, index, point, vals, residual, passed) -> dict:
    return {"check": check, "run": run, "index": index, "point": point,
            "values": vals, "residual": residual, "pass": bool(passed)}


# ---------------------------------------------------------------------------
# scenario loading and running


@dataclass
class Scenario:
    raw: dict
    manifolds: list
    field: Any
    metrics: list
    sampling: SamplingConfig
    checks: list
    tolerances: dict


def preset_dir():
    return resources.files("tangeo") / "presets"


def list_presets() -> list[str]:
    return sorted(p.name[:-5] for p in preset_dir().iterdir() if p.name.endswith(".json"))


def load_text(path_or_name: str) -> tuple[str, str]:
    """Read a scenario from a file, or from the bundled presets by name."""
    p = Path(path_or_name)
    if p.is_file():
        return p.read_text(encoding="utf-8"), str(p)
    name = p.name[:-5] if p.name.endswith(".json") else p.name
    cand = preset_dir() / f"{name}.json"
    if cand.is_file():
        return cand.read_text(encoding="utf-8"), f"preset:{name}"
    raise ConfigError(f"no scenario file or preset named {path_or_name!r}")


def parse_json(text: str, source: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON ({exc.msg}) on line {exc.lineno}", source, exc.colno - 1) from None


def parse_scenario(obj) -> Scenario:
    if not isinstance(obj, dict):
        raise ConfigError("scenario must be a JSON object")
    unknown = set(obj) - TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown scenario keys {sorted(unknown)}")
    missing = REQUIRED_KEYS - set(obj)
    if missing:
        raise ConfigError(f"missing scenario keys {sorted(missing)}")
    samp = obj.get("sampling", {})
    bad = set(samp) - SAMPLING_KEYS
    if bad:
        raise ConfigError(f"unknown sampling keys {sorted(bad)}")
    t_range = samp.get("t_range")
    sampling = SamplingConfig(
        n_points=int(samp.get("n_points", 20)), seed=int(samp.get("seed", 0)),
        t_range=tuple(map(float, t_range)) if t_range is not None else None,
        boundary_margin=float(samp.get("boundary_margin", 0.1)),
    )
    tols = obj.get("tolerances", {})
    bad = set(tols) - set(DEFAULT_TOLERANCES)
    if bad:
        raise ConfigError(f"unknown tolerance keys {sorted(bad)}")
    checks = obj["checks"]
    if not isinstance(checks, list) or not checks:
        raise ConfigError("checks must be a non-empty list")

    def as_list(v):
        return v if isinstance(v, list) else [v]

    return Scenario(
        raw=obj, manifolds=as_list(obj["manifold"]), field=obj["field"],
        metrics=as_list(obj["metric"]), sampling=sampling,
        checks=[parse_check(c) for c in checks],
        tolerances={**DEFAULT_TOLERANCES, **{k: float(v) for k, v in tols.items()}},
    )


def apply_overrides(obj: dict, tol=None, samples=None, seed=None) -> dict:
    obj = json.loads(json.dumps(obj))
    if samples is not None or seed is not None:
        s = obj.setdefault("sampling", {})
        if samples is not None:
            s["n_points"] = int(samples)
        if seed is not None:
            s["seed"] = int(seed)
    if tol is not None:
        obj.setdefault("tolerances", {})["sff"] = float(tol)
    return obj


def manifold_label(spec) -> str:
    if isinstance(spec, str):
        return spec
    if isinstance(spec, dict):
        if "label" in spec:
            return str(spec["label"])
        extra = "".join(f",{k}={v}" for k, v in sorted(spec.items()) if k not in ("name", "metric", "bounds"))
        return f"{spec.get('name', 'inline')}{extra}"
    return repr(spec)


def _precheck(gen: GeneratorSet, M: ChartManifold, pts, fs: FieldSpec, sampling: SamplingConfig):
    if sampling.t_range is not None:
        lo, hi = sampling.t_range
    else:
        ts = [_t_at(M, fs.u, p) for p in pts]
        lo, hi = None, max([PRECHECK_T_MAX] + ts)
    rep = check_nondegenerate(gen, hi, 1000, dim1=M.dim == 1, t_min=lo)
    if not rep.passed:
        raise DegenerateMetric(
            f"metric {gen.name} is degenerate at t = {rep.first_failure:.17g} (checked up to {hi:g})"
        )


def run_scenario(sc: Scenario) -> dict:
    """Execute all runs and checks; returns the report body (no header)."""
    records = []
    only_point_free = all(c.name in POINT_FREE for c in sc.checks)
    needs_points = not only_point_free
    prepared = []
    # resolve everything first so configuration errors surface before any check runs
    for mspec, gspec in itertools.product(sc.manifolds, sc.metrics):
        M = resolve_manifold(mspec)
        gen = resolve_metric(gspec)
        fs = resolve_field(sc.field, M)
        pts = np.zeros((0, M.dim))
        if needs_points:
            try:
                pts = sample_points(M, sc.sampling.n_points, sc.sampling.seed,
                                    sc.sampling.boundary_margin, accept=admissible(M, gen, fs.u, sc.sampling))
            except RuntimeError as exc:
                raise ConfigError(str(exc)) from None
        if not all(c.name == "nondegenerate" for c in sc.checks):
            _precheck(gen, M, pts, fs, sc.sampling)
        label = f"{manifold_label(mspec)}|{metric_label(gspec)}"
        prepared.append((label, metric_label(gspec), Context(M, gen, fs, pts, sc.sampling, sc.tolerances)))
        for c in sc.checks:
            c.expected_for(metric_label(gspec))
    for label, mlabel, ctx in prepared:
        for c in sc.checks:
            raws, extra = CHECKS[c.name](ctx, c.params)
            records.extend(apply_expectation(c, c.expected_for(mlabel), raws, extra, label))
    records.sort(key=lambda r: (r["check"], r["run"], r["index"]))
    finite = [r["residual"] for r in records if math.isfinite(r["residual"])]
    checks = {}
    for r in records:
        if r["index"] == -1:
            checks.setdefault(r["check"], True)
            checks[r["check"]] = checks[r["check"]] and r["pass"]
    passed = all(r["pass"] for r in records)
    return {
        "schema_version": SCHEMA_VERSION,
        "scenario": sc.raw,
        "summary": {
            "max_residual": max(finite, default=0.0),
            "verdict": "pass" if passed else "fail",
            "checks": dict(sorted(checks.items())),
            "n_records": len(records),
            "n_failed": sum(not r["pass"] for r in records),
        },
        "records": records,
    }


def verify(path_or_name: str, tol=None, samples=None, seed=None) -> tuple[dict, dict]:
    """Load, run and time a scenario; returns (header, body)."""
    start = time.perf_counter()
    text, source = load_text(path_or_name)
    obj = apply_overrides(parse_json(text, source), tol, samples, seed)
    body = run_scenario(parse_scenario(obj))
    header = {
        "source": source,
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "wall_time": time.perf_counter() - start,
    }
    return header, body


# ---------------------------------------------------------------------------
# serialization


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with every float written using 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return format(x, ".17g") if math.isfinite(x) else "null"
    return json.dumps(str(obj))


def report_text(header: dict, body: dict) -> str:
    return dumps({"schema_version": body["schema_version"], "header": header,
                  **{k: v for k, v in body.items() if k != "schema_version"}}) + "\n"


def body_text(body: dict) -> str:
    """Serialized report without the header; what the determinism check compares."""
    return dumps(body) + "\n"
