"""Generator functions of g-natural metrics.

A g-natural metric on TM is fixed by six functions a1, a2, a3, b1, b2, b3 of
t = g(u, u). Every function here carries an analytic first derivative, so
the closed-form side of any comparison never differentiates numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import scipy.optimize

NONDEGENERACY_THRESHOLD = 1e-10
NAMES = ("a1", "a2", "a3", "b1", "b2", "b3")


class OutOfDomain(ValueError):
    pass


class UnknownPreset(KeyError):
    pass


class DegenerateConstruction(ValueError):
    pass


@dataclass(frozen=True)
class ScalarFn:
    """A function of t together with its derivative."""

    f: Callable[[float], float]
    df: Callable[[float], float]
    label: str = ""

    def __call__(self, t):
        return self.f(t)

    def __add__(self, other: ScalarFn) -> ScalarFn:
        other = _as_fn(other)
        return ScalarFn(lambda t: self.f(t) + other.f(t), lambda t: self.df(t) + other.df(t),
                        f"({self.label})+({other.label})")

    __radd__ = __add__

    def __neg__(self) -> ScalarFn:
        return ScalarFn(lambda t: -self.f(t), lambda t: -self.df(t), f"-({self.label})")

    def __sub__(self, other) -> ScalarFn:
        return self + (-_as_fn(other))

    def __rsub__(self, other) -> ScalarFn:
        return _as_fn(other) + (-self)

    def scale(self, c: float) -> ScalarFn:
        return ScalarFn(lambda t: c * self.f(t), lambda t: c * self.df(t), f"{c:g}*({self.label})")


def const(c: float) -> ScalarFn:
    c = float(c)
    return ScalarFn(lambda t: c + 0 * t, lambda t: 0 * t, f"{c:g}")


def _as_fn(obj) -> ScalarFn:
    return obj if isinstance(obj, ScalarFn) else const(obj)


ZERO = const(0.0)


@dataclass(frozen=True)
class GeneratorSet:
    a1: ScalarFn
    a2: ScalarFn = ZERO
    a3: ScalarFn = ZERO
    b1: ScalarFn = ZERO
    b2: ScalarFn = ZERO
    b3: ScalarFn = ZERO
    t_min: float = 0.0
    t_min_open: bool = False
    name: str = "custom"

    def contains(self, t: float) -> bool:
        return t > self.t_min if self.t_min_open else t >= self.t_min

    def without_b(self) -> GeneratorSet:
        """Same generators with b_j = 0 (what the metric uses when dim M = 1)."""
        return replace(self, b1=ZERO, b2=ZERO, b3=ZERO)

    def fns(self) -> dict[str, ScalarFn]:
        return {k: getattr(self, k) for k in NAMES}


@dataclass(frozen=True)
class DerivedScalars:
    t: float
    a1: float
    a2: float
    a3: float
    b1: float
    b2: float
    b3: float
    da1: float
    da2: float
    da3: float
    db1: float
    db2: float
    db3: float
    A: float
    B: float
    dA: float
    dB: float
    F1: float
    F2: float
    F3: float
    a: float
    F: float


def derived_at(gen: GeneratorSet, t: float) -> DerivedScalars:
    if not gen.contains(t):
        raise OutOfDomain(f"t = {t} outside generator domain of {gen.name}")
    v = {k: float(fn.f(t)) for k, fn in gen.fns().items()}
    d = {"d" + k: float(fn.df(t)) for k, fn in gen.fns().items()}
    A = v["a1"] + v["a3"]
    B = v["b1"] + v["b3"]
    F1 = v["a1"] + t * v["b1"]
    F2 = v["a2"] + t * v["b2"]
    F3 = v["a3"] + t * v["b3"]
    return DerivedScalars(
        t=t, **v, **d,
        A=A, B=B, dA=d["da1"] + d["da3"], dB=d["db1"] + d["db3"],
        F1=F1, F2=F2, F3=F3,
        a=v["a1"] * A - v["a2"] ** 2,
        F=F1 * (F1 + F3) - F2**2,
    )


@dataclass
class NondegeneracyReport:
    passed: bool
    t_values: np.ndarray
    a_values: np.ndarray
    F_values: np.ndarray
    failing_t: list[float] = field(default_factory=list)

    @property
    def first_failure(self) -> float | None:
        return self.failing_t[0] if self.failing_t else None


def check_nondegenerate(
    gen: GeneratorSet, t_max: float, n_samples: int = 1000, dim1: bool = False,
    t_min: float | None = None,
) -> NondegeneracyReport:
    """Sample a(t) and F(t) on [t_min, t_max] and require both to stay away from 0.

    With ``dim1`` only a(t) is tested.
    """
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    lo = gen.t_min if t_min is None else max(t_min, gen.t_min)
    ts = np.linspace(lo, t_max, n_samples)
    if gen.t_min_open and ts[0] <= gen.t_min:
        ts = np.linspace(lo, t_max, n_samples + 1)[1:]
    a_vals, F_vals, failing = [], [], []
    for t in ts:
        d = derived_at(gen, float(t))
        a_vals.append(d.a)
        F_vals.append(d.F)
        bad = abs(d.a) <= NONDEGENERACY_THRESHOLD or not math.isfinite(d.a)
        if not dim1:
            bad = bad or abs(d.F) <= NONDEGENERACY_THRESHOLD or not math.isfinite(d.F)
        if bad:
            failing.append(float(t))
    a_vals, F_vals = np.array(a_vals), np.array(F_vals)
    series = [("a", a_vals)] + ([] if dim1 else [("F", F_vals)])
    for key, vals in series:
        failing.extend(_zeros_between(gen, key, ts, vals))
    failing = sorted(set(failing))
    return NondegeneracyReport(not failing, ts, a_vals, F_vals, failing)


def _zeros_between(gen: GeneratorSet, key: str, ts, vals) -> list[float]:
    """Zeros the grid can miss: sign changes and (double-root) dips between samples."""
    f = lambda t: getattr(derived_at(gen, float(t)), key)
    out = []
    if not np.all(np.isfinite(vals)):
        return out
    for i in range(len(ts) - 1):
        if vals[i] * vals[i + 1] < 0:
            out.append(float(scipy.optimize.brentq(f, ts[i], ts[i + 1], xtol=1e-14)))
    mags = np.abs(vals)
    for i in range(1, len(ts) - 1):
        if mags[i] < mags[i - 1] and mags[i] <= mags[i + 1] and mags[i] > NONDEGENERACY_THRESHOLD:
            r = scipy.optimize.minimize_scalar(lambda t: abs(f(t)), bounds=(ts[i - 1], ts[i + 1]),
                                               method="bounded", options={"xatol": 1e-12})
            if r.fun <= NONDEGENERACY_THRESHOLD:
                out.append(float(r.x))
    return out


# ---------------------------------------------------------------------------
# presets


def sasaki() -> GeneratorSet:
    return GeneratorSet(a1=const(1.0), name="sasaki")


def cheeger_gromoll() -> GeneratorSet:
    h = ScalarFn(lambda t: 1 / (1 + t), lambda t: -1 / (1 + t) ** 2, "1/(1+t)")
    rest = 1 - h
    return GeneratorSet(a1=h, a3=rest, b1=h, b3=rest, name="cheeger_gromoll")


PRESETS: dict[str, Callable[[], GeneratorSet]] = {
    "sasaki": sasaki,
    "cheeger_gromoll": cheeger_gromoll,
}


def preset(name: str) -> GeneratorSet:
    try:
        return PRESETS[name]()
    except KeyError:
        raise UnknownPreset(name) from None


# ---------------------------------------------------------------------------
# constructed families


def construct_concircular_family(
    alpha: float, a1: ScalarFn | float, C: float, flat_variant: float | None = None,
    t_max: float = 10.0, n_samples: int = 200,
) -> GeneratorSet:
    """Generators that make a concircular field (factor ``alpha``) totally geodesic.

    a2 = -alpha a1 and A = alpha^2 a1 + C, b_j = 0. With ``flat_variant = C1``
    (flat bases only): a2 = -alpha a1 + C1 and A = alpha^2 a1 + C1 alpha + C.
    """
    if callable(alpha) and not isinstance(alpha, (int, float)):
        raise TypeError("only a constant alpha is supported for this construction")
    alpha = float(alpha)
    a1 = _as_fn(a1)
    C1 = 0.0 if flat_variant is None else float(flat_variant)
    if flat_variant is None and C == 0:
        raise DegenerateConstruction("C must be non-zero")
    a2 = a1.scale(-alpha) + C1
    A = a1.scale(alpha**2) + (C1 * alpha + C)
    gen = GeneratorSet(a1=a1, a2=a2, a3=A - a1, name=f"concircular(alpha={alpha:g})")
    if flat_variant is not None:
        ts = np.linspace(0.0, t_max, n_samples)
        if any(abs(C * a1(t) + C1) <= NONDEGENERACY_THRESHOLD for t in ts):
            raise DegenerateConstruction("C*a1 + C1 vanishes on the sampled range")
    rep = check_nondegenerate(gen, t_max, n_samples)
    if not rep.passed:
        raise DegenerateConstruction(f"a(t) or F(t) vanishes at t = {rep.first_failure:g}")
    return gen


def construct_recurrent_example(
    K: float, a1: ScalarFn | float, eps: float, A: float = 1.0,
) -> GeneratorSet:
    """Family with A const, B = 0, a2 = b2 = 0 and F1 = K / t on t > eps.

    b1 = (K/t - a1)/t makes a1 + t a1' + t(2 b1 + t b1') vanish identically.
    """
    if K == 0:
        raise DegenerateConstruction("K must be non-zero")
    if eps <= 0:
        raise ValueError("eps must be positive")
    a1 = _as_fn(a1)
    b1 = ScalarFn(
        lambda t: (K / t - a1.f(t)) / t,
        lambda t: -2 * K / t**3 - a1.df(t) / t + a1.f(t) / t**2,
        f"({K:g}/t-a1)/t",
    )
    return GeneratorSet(
        a1=a1, a3=A - a1, b1=b1, b3=-b1, t_min=eps, t_min_open=True,
        name=f"recurrent_example(K={K:g})",
    )


def example_ode_residual(gen: GeneratorSet, t: float) -> float:
    """a1 + t a1' + t(2 b1 + t b1') at t."""
    d = derived_at(gen, t)
    return d.a1 + t * d.da1 + t * (2 * d.b1 + t * d.db1)


def polynomial(coeffs) -> ScalarFn:
    c = [float(x) for x in coeffs]
    return ScalarFn(
        lambda t: sum(ci * t**i for i, ci in enumerate(c)),
        lambda t: sum(i * ci * t ** (i - 1) for i, ci in enumerate(c) if i > 0) + 0 * t,
        "+".join(f"{ci:g}*t^{i}" for i, ci in enumerate(c)),
    )


def random_polynomial_family(seed: int = 0, degree: int = 2, t_max: float = 10.0) -> GeneratorSet:
    """Seeded random polynomial generators, redrawn until non-degenerate on [0, t_max]."""
    rng = np.random.default_rng(seed)
    for _ in range(1000):
        c = {k: rng.uniform(-0.3, 0.3, degree + 1) for k in NAMES}
        c["a1"][0] = rng.uniform(0.8, 1.5)
        c["a3"][0] = rng.uniform(0.2, 0.8)
        c["a1"][1:] = np.abs(c["a1"][1:]) * 0.3
        gen = GeneratorSet(**{k: polynomial(v) for k, v in c.items()}, name=f"random_poly(seed={seed})")
        rep = check_nondegenerate(gen, t_max, 400)
        if rep.passed and min(np.min(np.abs(rep.a_values)), np.min(np.abs(rep.F_values))) > 1e-2:
            return gen
    raise DegenerateConstruction("no non-degenerate draw found")
