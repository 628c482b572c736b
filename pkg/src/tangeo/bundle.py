"""Geometry of the tangent bundle TM with a g-natural metric.

Coordinates on TM are (x^1..x^n, u^1..u^n). Tangent vectors are handled
either as 2n coordinate components or as a :class:`BundleVector`, the
(dpi-image, K-image) pair with respect to the horizontal/vertical split.

The Levi-Civita connection of G is obtained here by brute force: the
coordinate matrix of G is differentiated numerically and fed through the
usual Christoffel formula. Nothing in this module knows any closed-form
expression for that connection.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dual import values
from .gnatural import GeneratorSet, OutOfDomain, derived_at
from .manifold import COND_LIMIT, ChartManifold, SingularMetric, christoffel_components

BUNDLE_STEP = 1e-5


@dataclass(frozen=True)
class TangentPoint:
    x: np.ndarray
    u: np.ndarray

    @classmethod
    def of(cls, x, u) -> TangentPoint:
        return cls(np.asarray(x, dtype=float), np.asarray(u, dtype=float))

    @property
    def coords(self) -> np.ndarray:
        return np.concatenate([self.x, self.u])


@dataclass(frozen=True)
class BundleVector:
    hor: np.ndarray
    ver: np.ndarray

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.hor, self.ver])

    @classmethod
    def from_array(cls, a) -> BundleVector:
        a = np.asarray(a, dtype=float)
        n = a.size // 2
        return cls(a[:n].copy(), a[n:].copy())

    def __add__(self, other: BundleVector) -> BundleVector:
        return BundleVector(self.hor + other.hor, self.ver + other.ver)

    def __sub__(self, other: BundleVector) -> BundleVector:
        return BundleVector(self.hor - other.hor, self.ver - other.ver)

    def __mul__(self, c: float) -> BundleVector:
        return BundleVector(c * self.hor, c * self.ver)

    __rmul__ = __mul__


def _gamma(M: ChartManifold, x) -> np.ndarray:
    return values(christoffel_components(M, np.asarray(x, dtype=float)))


def _gamma_u(M: ChartManifold, z: TangentPoint) -> np.ndarray:
    """Matrix (Gu)[r, t] = u^s Gamma^r_st."""
    return np.einsum("rst,s->rt", _gamma(M, z.x), z.u)


def horizontal_lift(M: ChartManifold, X, z: TangentPoint) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return np.concatenate([X, -_gamma_u(M, z) @ X])


def vertical_lift(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return np.concatenate([np.zeros_like(X), X])


def split(M: ChartManifold, W, z: TangentPoint) -> BundleVector:
    """(dpi(W), K(W)) for coordinate components W."""
    W = np.asarray(W, dtype=float)
    n = M.dim
    return BundleVector(W[:n].copy(), W[n:] + _gamma_u(M, z) @ W[:n])


def assemble(M: ChartManifold, P: BundleVector, z: TangentPoint) -> np.ndarray:
    """Coordinate components of P.hor^h + P.ver^v (inverse of :func:`split`)."""
    return horizontal_lift(M, P.hor, z) + vertical_lift(P.ver)


def _t(M: ChartManifold, z: TangentPoint) -> float:
    g = values(M.metric(z.x))
    return float(z.u @ g @ z.u)


def _effective(M: ChartManifold, gen: GeneratorSet) -> GeneratorSet:
    return gen.without_b() if M.dim == 1 else gen


def split_metric_matrix(M: ChartManifold, gen: GeneratorSet, z: TangentPoint) -> np.ndarray:
    """G in the split basis (e_1^h..e_n^h, e_1^v..e_n^v)."""
    g = values(M.metric(z.x))
    t = float(z.u @ g @ z.u)
    if not gen.contains(t):
        raise OutOfDomain(f"t = {t:g} outside generator domain of {gen.name}")
    d = derived_at(_effective(M, gen), t)
    gu = g @ z.u
    uu = np.outer(gu, gu)
    hh = d.A * g + d.B * uu
    hv = d.a2 * g + d.b2 * uu
    vv = d.a1 * g + d.b1 * uu
    return np.block([[hh, hv], [hv, vv]])


def bundle_metric(M: ChartManifold, gen: GeneratorSet, z: TangentPoint, P: BundleVector,
                  Q: BundleVector) -> float:
    return float(P.as_array() @ split_metric_matrix(M, gen, z) @ Q.as_array())


def split_matrix(M: ChartManifold, z: TangentPoint) -> np.ndarray:
    """L with split(W) = L @ W for coordinate components W."""
    n = M.dim
    L = np.eye(2 * n)
    L[n:, :n] = _gamma_u(M, z)
    return L


def bundle_metric_matrix(M: ChartManifold, gen: GeneratorSet, z: TangentPoint) -> np.ndarray:
    """G in the TM coordinates (x^i, u^i)."""
    L = split_matrix(M, z)
    G = L.T @ split_metric_matrix(M, gen, z) @ L
    return (G + G.T) / 2


def _metric_at(M, gen, c: np.ndarray) -> np.ndarray:
    n = M.dim
    return bundle_metric_matrix(M, gen, TangentPoint(c[:n], c[n:]))


def bundle_christoffel(M: ChartManifold, gen: GeneratorSet, z: TangentPoint,
                       h: float = BUNDLE_STEP) -> np.ndarray:
    """Levi-Civita symbols of G in TM coordinates, ``out[a, b, c] = Gamma~^a_bc``.

    Derivatives of the coordinate metric are central differences with step
    ``h * max(1, |coordinate|)``.
    """
    c0 = z.coords
    G = _metric_at(M, gen, c0)
    cond = np.linalg.cond(G)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularMetric(f"bundle metric condition number {cond:.3g} exceeds {COND_LIMIT:.0e}")
    m = c0.size
    dG = np.empty((m, m, m))  # dG[a, b, c] = d_c G_ab
    for k in range(m):
        hk = h * max(1.0, abs(c0[k]))
        cp, cm = c0.copy(), c0.copy()
        cp[k] += hk
        cm[k] -= hk
        dG[:, :, k] = (_metric_at(M, gen, cp) - _metric_at(M, gen, cm)) / (2 * hk)
    term = np.einsum("jli->lij", dG) + np.einsum("ilj->lij", dG) - np.einsum("ijl->lij", dG)
    gam = 0.5 * np.einsum("kl,lij->kij", np.linalg.inv(G), term)
    return (gam + np.transpose(gam, (0, 2, 1))) / 2


def central_derivative(f: Callable[[float], np.ndarray], s: float, h: float = BUNDLE_STEP) -> np.ndarray:
    hs = h * max(1.0, abs(s))
    return (np.asarray(f(s + hs)) - np.asarray(f(s - hs))) / (2 * hs)


def covariant_derivative_along(
    M: ChartManifold,
    gen: GeneratorSet,
    c: Callable[[float], np.ndarray],
    V: Callable[[float], np.ndarray],
    s: float = 0.0,
    gamma: np.ndarray | None = None,
) -> np.ndarray:
    """(DV/ds)^a = dV^a/ds + Gamma~^a_bc cdot^b V^c, all in TM coordinates."""
    cs = np.asarray(c(s), dtype=float)
    n = M.dim
    if gamma is None:
        gamma = bundle_christoffel(M, gen, TangentPoint(cs[:n], cs[n:]))
    cdot = central_derivative(c, s)
    vdot = central_derivative(V, s)
    return vdot + np.einsum("abc,b,c->a", gamma, cdot, np.asarray(V(s), dtype=float))
