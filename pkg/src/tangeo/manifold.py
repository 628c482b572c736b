"""Chart-based Riemannian manifolds.

Curvature convention used everywhere in the package::

    R(X, Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z
    R(X, Y, Z, W) = g(R(X, Y)Z, W)

so that the sectional curvature of the plane spanned by X, Y is
R(X, Y, Y, X) / (|X|^2 |Y|^2 - g(X, Y)^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dual import FORWARD_DUAL, DiffMode, directional, inv, jacobian, values

COND_LIMIT = 1e12


class SingularMetric(ValueError):
    """Metric (or bundle metric) is not safely invertible at a point."""


class AmbiguousClassification(ValueError):
    """The field vanishes wherever it was sampled; u and X cannot be told apart."""


@dataclass(frozen=True)
class ChartManifold:
    """A Riemannian manifold covered by a single chart.

    ``metric_fn`` maps an n-array of coordinates to an n x n symmetric
    array. It must be written with numpy operations so that dual-number
    coordinates propagate through it. ``bounds`` is the coordinate box used
    for sampling; ``domain_pred`` may cut it down further.
    """

    dim: int
    metric_fn: Callable[[np.ndarray], np.ndarray]
    bounds: tuple[tuple[float, float], ...]
    domain_pred: Callable[[np.ndarray], bool] = lambda x: True
    diff_mode: DiffMode = FORWARD_DUAL
    name: str = "chart"
    flat: bool = False

    def metric(self, x) -> np.ndarray:
        g = np.asarray(self.metric_fn(x))
        # symmetric by construction
        return (g + g.T) / 2 if g.dtype != object else _sym_obj(g)

    def in_domain(self, x) -> bool:
        x = values(x)
        inside = all(lo < xi < hi for xi, (lo, hi) in zip(x, self.bounds))
        return inside and bool(self.domain_pred(x))

    def with_mode(self, mode: DiffMode) -> ChartManifold:
        return ChartManifold(
            self.dim, self.metric_fn, self.bounds, self.domain_pred, mode, self.name, self.flat
        )

    def inner(self, x, a, b):
        return np.asarray(a) @ self.metric(x) @ np.asarray(b)


def _sym_obj(g: np.ndarray) -> np.ndarray:
    n = g.shape[0]
    out = g.copy()
    for i in range(n):
        for j in range(i + 1, n):
            out[j, i] = out[i, j]
    return out


# ---------------------------------------------------------------------------
# vector fields


@dataclass(frozen=True)
class VectorField:
    """Smooth vector field given by its chart components."""

    components: Callable[[np.ndarray], np.ndarray]
    name: str = ""

    def __call__(self, x):
        return np.asarray(self.components(x))


def constant_field(v: Sequence[float], name: str = "") -> VectorField:
    v = np.asarray(v, dtype=float)

    def comp(x):
        # keep dual dtype when called with dual coordinates
        return v + 0 * np.asarray(x)[: len(v)] if np.asarray(x).dtype == object else v.copy()

    return VectorField(comp, name or f"constant{tuple(v)}")


def as_field(obj) -> VectorField:
    """Accept a VectorField, a callable, or a fixed n-vector (coordinate-constant)."""
    if isinstance(obj, VectorField):
        return obj
    if callable(obj):
        return VectorField(obj)
    return constant_field(obj)


def as_scalar_field(obj) -> Callable:
    if callable(obj):
        return obj
    c = float(obj)
    return lambda x: c + 0 * np.asarray(x)[0] if np.asarray(x).dtype == object else c


# ---------------------------------------------------------------------------
# connection and curvature


@dataclass(frozen=True)
class Christoffel:
    """Gamma^k_ij at a point, stored as ``values[k, i, j]``."""

    values: np.ndarray

    def contract(self, a, b) -> np.ndarray:
        """Gamma(a, b)^k = Gamma^k_ij a^i b^j."""
        return np.einsum("kij,i,j->k", self.values, np.asarray(a), np.asarray(b))


def _check_condition(g: np.ndarray) -> None:
    gv = values(g)
    if not np.all(np.isfinite(gv)):
        raise SingularMetric("metric has non-finite entries")
    c = np.linalg.cond(gv)
    if not np.isfinite(c) or c > COND_LIMIT:
        raise SingularMetric(f"metric condition number {c:.3g} exceeds {COND_LIMIT:.0e}")


def christoffel_components(M: ChartManifold, x) -> np.ndarray:
    """Raw Gamma^k_ij array; works for float and dual coordinates."""
    g = M.metric(x)
    _check_condition(g)
    dg = jacobian(M.metric, x, M.diff_mode)  # dg[a, b, c] = d_c g_ab
    # term[l, i, j] = d_i g_jl + d_j g_il - d_l g_ij
    term = np.einsum("jli->lij", dg) + np.einsum("ilj->lij", dg) - np.einsum("ijl->lij", dg)
    return 0.5 * np.einsum("kl,lij->kij", inv(g), term)


def christoffel_at(M: ChartManifold, x) -> Christoffel:
    if not M.in_domain(x):
        raise ValueError(f"point {values(x)} is outside the chart domain of {M.name}")
    return Christoffel(values(christoffel_components(M, x)))


@dataclass(frozen=True)
class CurvatureAtPoint:
    """Riemann tensor at a point.

    ``lowered[i, j, k, l] = R(e_i, e_j, e_k, e_l)`` and
    ``mixed[l, i, j, k]`` gives R(e_i, e_j)e_k = mixed[l, i, j, k] e_l.
    """

    lowered: np.ndarray
    mixed: np.ndarray
    metric: np.ndarray
    convention: str = "R(X,Y)Z = [nabla_X, nabla_Y]Z - nabla_[X,Y]Z; R(X,Y,Z,W) = g(R(X,Y)Z, W)"

    def __call__(self, X, Y, Z, W) -> float:
        return float(np.einsum("ijkl,i,j,k,l->", self.lowered, X, Y, Z, W))

    def vector(self, X, Y, Z) -> np.ndarray:
        """R(X, Y)Z."""
        return np.einsum("lijk,i,j,k->l", self.mixed, X, Y, Z)

    def sectional(self, X, Y) -> float:
        g = self.metric
        den = (X @ g @ X) * (Y @ g @ Y) - (X @ g @ Y) ** 2
        return self(X, Y, Y, X) / den


def riemann_at(M: ChartManifold, x) -> CurvatureAtPoint:
    x = np.asarray(x, dtype=float)
    if not M.in_domain(x):
        raise ValueError(f"point {x} is outside the chart domain of {M.name}")
    gam = values(christoffel_components(M, x))
    # dgam[k, i, j, m] = d_m Gamma^k_ij
    dgam = values(jacobian(lambda y: christoffel_components(M, y), x, M.diff_mode))
    # R^l_{ijk} = d_i G^l_jk - d_j G^l_ik + G^l_im G^m_jk - G^l_jm G^m_ik
    mixed = (
        np.einsum("ljki->lijk", dgam)
        - np.einsum("likj->lijk", dgam)
        + np.einsum("lim,mjk->lijk", gam, gam)
        - np.einsum("ljm,mik->lijk", gam, gam)
    )
    g = values(M.metric(x))
    lowered = np.einsum("mijk,ml->ijkl", mixed, g)
    return CurvatureAtPoint(lowered, mixed, g)


# ---------------------------------------------------------------------------
# covariant derivatives


def covariant_derivative(M: ChartManifold, Z, X, x) -> np.ndarray:
    """(nabla_X Z)(x) = X^i d_i Z + Gamma(X, Z); ``X`` is the vector at x."""
    Z = as_field(Z)
    X = np.asarray(X)
    dz = directional(Z, x, X, M.diff_mode)
    gam = christoffel_components(M, x)
    return dz + np.einsum("kij,i,j->k", gam, X, Z(x))


def covariant_derivative_field(M: ChartManifold, Z, X) -> VectorField:
    """The field y -> (nabla_{X(y)} Z)(y)."""
    Z = as_field(Z)
    X = as_field(X)
    return VectorField(lambda y: covariant_derivative(M, Z, X(y), y))


def second_covariant(M: ChartManifold, Z, X, x) -> np.ndarray:
    """(nabla_X nabla_X Z)(x) with X treated as a field."""
    X = as_field(X)
    inner = covariant_derivative_field(M, Z, X)
    return values(covariant_derivative(M, inner, X(x), x))


def covariant_derivative_covector(M: ChartManifold, rho, X, Y, x) -> float:
    """(nabla_X rho)(Y) at x for a 1-form given by chart components."""
    rho = as_field(rho)
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    drho = values(directional(rho, x, X, M.diff_mode))
    gam = values(christoffel_components(M, x))
    return float(drho @ Y - rho_val(rho, x) @ np.einsum("kij,i,j->k", gam, X, Y))


def rho_val(rho, x) -> np.ndarray:
    return values(as_field(rho)(x))


def nabla_matrix(M: ChartManifold, u, x) -> np.ndarray:
    """Column i is nabla_{e_i} u at x."""
    u = as_field(u)
    x = np.asarray(x, dtype=float)
    du = values(jacobian(u, x, M.diff_mode))  # du[k, i] = d_i u^k
    gam = values(christoffel_components(M, x))
    return du + np.einsum("kij,j->ki", gam, values(u(x)))


# ---------------------------------------------------------------------------
# field classification


@dataclass
class Classification:
    kind: str  # parallel | concircular | recurrent | torse_forming | generic
    alpha: np.ndarray  # fitted alpha per sample point
    rho: np.ndarray  # fitted rho (covector) per sample point, shape (m, n)
    residual: float
    flagged: list = field(default_factory=list)  # points skipped because u ~ 0


def classify_field(M: ChartManifold, u, samples, tol: float = 1e-6) -> Classification:
    """Fit nabla_X u = rho(X) u + alpha X at each sample point.

    ``samples`` holds points of the chart (the full coordinate basis is used
    for X there) or ``(x, X)`` pairs, which are grouped by point.
    """
    pts = _group_samples(samples)
    n = M.dim
    alphas, rhos, resid, flagged = [], [], 0.0, []
    any_nonzero_grad = False
    for x, Xs in pts:
        uv = values(as_field(u)(x))
        J = nabla_matrix(M, u, x)
        scale = max(1.0, float(np.linalg.norm(J)))
        if np.linalg.norm(J) > tol * scale:
            any_nonzero_grad = True
        if np.linalg.norm(uv) < tol or n == 1:
            # u and X directions are indistinguishable here
            flagged.append(x)
            continue
        # unknowns (rho_1..rho_n, alpha); equation per (X, component k)
        rows, rhs = [], []
        for X in Xs:
            lhs = J @ X
            for k in range(n):
                rows.append(np.concatenate([uv[k] * X, [X[k]]]))
                rhs.append(lhs[k])
        sol, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
        r = np.array(rows) @ sol - np.array(rhs)
        resid = max(resid, float(np.max(np.abs(r))) / scale)
        rhos.append(sol[:n])
        alphas.append(sol[n])
    if not alphas:
        if not any_nonzero_grad:
            return Classification("parallel", np.zeros(0), np.zeros((0, n)), 0.0, flagged)
        raise AmbiguousClassification("u vanishes at every sample point")
    alphas = np.array(alphas)
    rhos = np.array(rhos)
    if not any_nonzero_grad:
        kind = "parallel"
    elif resid > tol:
        kind = "generic"
    elif np.all(np.abs(rhos) < tol):
        kind = "concircular"
    elif np.all(np.abs(alphas) < tol):
        kind = "recurrent"
    else:
        kind = "torse_forming"
    return Classification(kind, alphas, rhos, resid, flagged)


def _group_samples(samples):
    groups: dict[tuple, list] = {}
    order = []
    for s in samples:
        if isinstance(s, tuple) and len(s) == 2 and np.ndim(s[1]) == 1:
            x, X = np.asarray(s[0], float), np.asarray(s[1], float)
            key = tuple(x)
            if key not in groups:
                groups[key] = []
                order.append(key)
            groups[key].append(X)
        else:
            x = np.asarray(s, float)
            key = tuple(x)
            groups[key] = list(np.eye(len(x)))
            order.append(key)
    return [(np.array(k), groups[k]) for k in order]


# ---------------------------------------------------------------------------
# sampling


def sample_points(
    M: ChartManifold,
    n_points: int,
    seed: int = 0,
    margin: float = 0.1,
    accept: Callable[[np.ndarray], bool] | None = None,
    max_tries: int = 100_000,
) -> np.ndarray:
    """Rejection-sample chart points at least ``margin`` inside the box."""
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in M.bounds], dtype=float) + margin
    hi = np.array([b[1] for b in M.bounds], dtype=float) - margin
    pts = []
    tries = 0
    while len(pts) < n_points:
        tries += 1
        if tries > max_tries:
            raise RuntimeError(f"could only place {len(pts)} of {n_points} points on {M.name}")
        x = lo + (hi - lo) * rng.random(M.dim)
        if not M.in_domain(x):
            continue
        if accept is not None and not accept(x):
            continue
        pts.append(x)
    return np.array(pts)


# ---------------------------------------------------------------------------
# built-in manifolds


def euclidean(n: int = 2, half_width: float = 2.0) -> ChartManifold:
    return ChartManifold(
        n,
        lambda x: np.eye(n) + 0 * _zero(x),
        tuple((-half_width, half_width) for _ in range(n)),
        name=f"euclidean{n}",
        flat=True,
    )


def _zero(x):
    # an n x n zero that carries dual dtype through constant metrics
    x = np.asarray(x)
    z = x[0] * 0
    return np.full((len(x), len(x)), z, dtype=object) if x.dtype == object else 0.0


def sphere() -> ChartManifold:
    """Unit 2-sphere in (theta, phi), theta kept in (0.2, pi - 0.2)."""
    return ChartManifold(
        2,
        lambda x: np.array([[1.0 + 0 * x[0], 0 * x[0]], [0 * x[0], np.sin(x[0]) ** 2]]),
        ((0.2, math.pi - 0.2), (0.0, 2 * math.pi)),
        name="sphere",
    )


def poincare_half_plane() -> ChartManifold:
    return ChartManifold(
        2,
        lambda x: np.array([[1 / x[1] ** 2, 0 * x[0]], [0 * x[0], 1 / x[1] ** 2]]),
        ((-2.0, 2.0), (0.3, 3.0)),
        name="poincare",
    )


def flat_torus() -> ChartManifold:
    m = euclidean(2)
    return ChartManifold(2, m.metric_fn, ((0.0, 2 * math.pi), (0.0, 2 * math.pi)), name="flat_torus", flat=True)


def perturbed(eps: float = 0.1, n: int = 2) -> ChartManifold:
    """g_ij = delta_ij + eps x1 x2, a generic non-flat metric near the origin."""
    return ChartManifold(
        n,
        lambda x: np.eye(n) + eps * x[0] * x[1] * np.ones((n, n)),
        tuple((-1.0, 1.0) for _ in range(n)),
        name="perturbed",
    )


def sphere_cylinder() -> ChartManifold:
    """S^2 x R in (theta, phi, z); curved, carries the parallel field d/dz."""
    def g(x):
        z = 0 * x[0]
        return np.array([[1.0 + z, z, z], [z, np.sin(x[0]) ** 2, z], [z, z, 1.0 + z]])

    return ChartManifold(
        3, g, ((0.2, math.pi - 0.2), (0.0, 2 * math.pi), (-2.0, 2.0)), name="sphere_cylinder"
    )


def cone(k: float = 0.8) -> ChartManifold:
    """Cone dr^2 + k^2 r^2 (dtheta^2 + sin^2 theta dphi^2); non-flat for k != 1.

    r d/dr is concircular with constant factor 1 on it.
    """
    def g(x):
        z = 0 * x[0]
        w = (k * x[0]) ** 2
        return np.array([[1.0 + z, z, z], [z, w, z], [z, z, w * np.sin(x[1]) ** 2]])

    return ChartManifold(
        3, g, ((0.5, 3.0), (0.2, math.pi - 0.2), (0.0, 2 * math.pi)), name=f"cone{k:g}"
    )


MANIFOLDS: dict[str, Callable[..., ChartManifold]] = {
    "euclidean": euclidean,
    "sphere": sphere,
    "poincare": poincare_half_plane,
    "flat_torus": flat_torus,
    "perturbed": perturbed,
    "sphere_cylinder": sphere_cylinder,
    "cone": cone,
}
