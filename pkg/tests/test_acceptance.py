"""Acceptance criteria 1-11, one test each, each printing a PASS/FAIL line."""

import time

import numpy as np
import pytest

from tangeo import expr
from tangeo.gnatural import (
    GeneratorSet,
    check_nondegenerate,
    cheeger_gromoll,
    const,
    construct_concircular_family,
    construct_recurrent_example,
    derived_at,
    example_ode_residual,
    random_polynomial_family,
    sasaki,
)
from tangeo.manifold import (
    VectorField,
    cone,
    constant_field,
    covariant_derivative,
    covariant_derivative_covector,
    euclidean,
    flat_torus,
    nabla_matrix,
    perturbed,
    poincare_half_plane,
    riemann_at,
    sample_points,
    second_covariant,
    sphere,
    sphere_cylinder,
)
from tangeo.scenarios import FIELDS, body_text, list_presets, load_text, parse_json, parse_scenario, run_scenario
from tangeo.submanifold import (
    SamplingConfig,
    admissible,
    constant_length_converse,
    lifted_derivative_oracle,
    graph_frame,
    sff_oracle,
    shape_operator_oracle,
    totally_geodesic_test,
    tw_tv_concircular,
    tw_tv_general,
    tw_tv_recurrent,
    tau_fields,
)


@pytest.fixture
def verdict(capsys):
    def report(n, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return report


def max_sff(M, gen, u, n_points=20, seed=0, t_range=None):
    rep = totally_geodesic_test(M, gen, u, SamplingConfig(n_points=n_points, seed=seed, t_range=t_range),
                                with_tw_tv=False)
    assert not rep.excluded, rep.excluded
    return rep.max_sff_norm


def concircular_family():
    return construct_concircular_family(1.0, expr.scalar_fn("1+0.5*t"), C=1.0, flat_variant=0.5)


def prop4_generators(a2=0.0):
    return GeneratorSet(a1=expr.scalar_fn("1+t"), a2=const(a2), a3=expr.scalar_fn("1-t"),
                        b1=expr.scalar_fn("0.5/(1+t)"), b3=expr.scalar_fn("-0.5/(1+t)"), name="prop4")


def test_criterion_01_oracle_equivalence(verdict):
    start = time.perf_counter()
    manifolds = [euclidean(2), euclidean(3), sphere(), poincare_half_plane()]
    gens = [sasaki(), cheeger_gromoll(), concircular_family(), random_polynomial_family(1)]
    worst, n_rec, failures = 0.0, 0, []
    for M in manifolds:
        u = FIELDS["generic"](M).u
        for gen in gens:
            rep = totally_geodesic_test(M, gen, u, SamplingConfig(n_points=20, seed=0), with_tw_tv=False)
            recs = [r for r in rep.records if r.check == "lifted_derivative"]
            n_rec += len(recs)
            failures += [(M.name, gen.name, r.index) for r in recs if not r.passed] + rep.excluded
            worst = max([worst] + [r.residual for r in recs])
    elapsed = time.perf_counter() - start
    ok = not failures and n_rec == 4 * 4 * 20 and worst <= 1e-5 and elapsed < 60
    verdict(1, ok, f"{n_rec} points x all X x all normals, max relative residual {worst:.2e}, {elapsed:.1f} s")


def test_criterion_02_walczak_parallel(verdict):
    a = max_sff(flat_torus(), sasaki(), constant_field([0.7, -0.4]))
    b = max_sff(euclidean(3), sasaki(), constant_field([0.7, -0.4, 0.5]))
    verdict(2, max(a, b) < 1e-7, f"max |II| flat torus {a:.2e}, Euclidean(3) {b:.2e}")


def test_criterion_03_constant_length_converse(verdict):
    M, gen = euclidean(2), sasaki()
    u = FIELDS["unit_twist"](M).u
    W, V = tau_fields(M, gen, u)
    worst, best = 0.0, 0.0
    for p in sample_points(M, 20, 0):
        J = nabla_matrix(M, u, p)
        for X in np.eye(2):
            Y = J @ X
            closed = constant_length_converse(M, gen, u, p, X)
            # brute force: G(nabla~_{u*X} tau, u*X) from the numerical connection of G
            oracle = lifted_derivative_oracle(M, gen, u, p, X, W, V)
            worst = max(worst, abs(closed - Y @ Y), abs(oracle - Y @ Y))
            best = max(best, oracle)
    verdict(3, worst <= 1e-6 and best > 1e-3,
            f"|converse - g(nabla_X u, nabla_X u)| <= {worst:.2e} (closed form and oracle), max value {best:.3f} > 0")


def test_criterion_04_proposition_4(verdict):
    gen = prop4_generators()
    d = [derived_at(gen, t) for t in np.linspace(0, 10, 11)]
    assert all(abs(x.dA) < 1e-14 and abs(x.B) < 1e-14 and x.a2 == 0 for x in d)
    assert check_nondegenerate(gen, 10.0).passed
    curved = max_sff(sphere_cylinder(), gen, constant_field([0.0, 0.0, 0.8]))
    flat = max_sff(euclidean(2), prop4_generators(0.3), constant_field([0.7, -0.4]))
    verdict(4, curved < 1e-6 and flat < 1e-6,
            f"max |II| on S^2 x R {curved:.2e}; flat base with a2 = 0.3 {flat:.2e}")


def test_criterion_05_proposition_9(verdict):
    rows, ok = [], True
    # T_V = 0 for Sasaki and constant alpha
    for M, fs in ((euclidean(2), FIELDS["position"](euclidean(2))), (cone(0.8), FIELDS["cone_radial"](cone(0.8)))):
        tv = max(np.linalg.norm(tw_tv_concircular(M, sasaki(), fs.u, fs.alpha, p, X)[1])
                 for p in sample_points(M, 10, 0) for X in np.eye(M.dim))
        ok &= tv <= 1e-8
        rows.append(f"T_V {M.name} {tv:.1e}")
    # T_W = alpha R(u, X, X)
    for M, key in ((sphere(), "sphere_concircular"), (cone(0.8), "cone_radial"), (euclidean(2), "position")):
        fs = FIELDS[key](M)
        tw = 0.0
        for p in sample_points(M, 10, 0):
            R = riemann_at(M, p)
            al = float(np.asarray(fs.alpha(p)) if callable(fs.alpha) else fs.alpha)
            for X in np.eye(M.dim):
                target = al * R.vector(fs.u(p), X, X)
                TW, _ = tw_tv_concircular(M, sasaki(), fs.u, fs.alpha, p, X)
                # the general expansion carries A nabla_X X for the coordinate-constant extension
                TWg, _ = tw_tv_general(M, sasaki(), fs.u, p, X)
                TWg = TWg - covariant_derivative(M, X, X, p)
                tw = max(tw, float(np.linalg.norm(TW - target)), float(np.linalg.norm(TWg - target)))
        ok &= tw <= 1e-6
        rows.append(f"T_W {M.name} {tw:.1e}")
    flat = max_sff(euclidean(2), sasaki(), FIELDS["position"](euclidean(2)).u)
    curved = max_sff(sphere(), sasaki(), FIELDS["sphere_concircular"](sphere()).u)
    ok &= flat < 1e-6 and curved > 1e-3
    verdict(5, ok, "; ".join(rows) + f"; flat |II| {flat:.1e} (geodesic), sphere |II| {curved:.2f} (not)")


def test_criterion_06_constructed_family(verdict):
    M = euclidean(2)
    out, ok = [], True
    for alpha, C1 in ((1.0, 0.5), (-0.5, 0.2)):
        gen = construct_concircular_family(alpha, expr.scalar_fn("1+0.5*t"), C=1.0, flat_variant=C1)
        nd = check_nondegenerate(gen, 10.0, t_min=0.0).passed
        u = VectorField(lambda x, a=alpha: a * np.asarray(x))
        s = max_sff(M, gen, u)
        ok &= nd and s < 1e-6
        out.append(f"alpha={alpha:g}: |II| {s:.1e}, nondegenerate on [0,10] {nd}")
    verdict(6, ok, "; ".join(out))


def test_criterion_07_proposition_10(verdict):
    tw, tv = 0.0, 0.0
    for M in (euclidean(2), euclidean(3)):
        fs = FIELDS["recurrent_exp"](M)
        rng = np.random.default_rng(7)
        for p in sample_points(M, 20, 0):
            uu = fs.u(p)
            rho = fs.rho(p)
            for X in list(np.eye(M.dim)) + [rng.normal(size=M.dim)]:
                TW, TV = tw_tv_recurrent(M, sasaki(), fs.u, fs.rho, p, X)
                target = (covariant_derivative_covector(M, fs.rho, X, X, p) + (rho @ X) ** 2) * uu
                tw = max(tw, float(np.linalg.norm(TW)))
                tv = max(tv, float(np.linalg.norm(TV - target)),
                         float(np.linalg.norm(target - second_covariant(M, fs.u, X, p))))
    verdict(7, tw <= 1e-8 and tv <= 1e-6,
            f"|T_W| <= {tw:.1e}; |T_V - [(nabla_X rho)(X) + rho(X)^2] u| and its gap to nabla_X nabla_X u <= {tv:.1e}")


def test_criterion_08_example_family(verdict):
    gen = construct_recurrent_example(1.0, 1.0, eps=0.1, A=1.0)
    M = euclidean(2)
    fs = FIELDS["recurrent_exp"](M, lam=0.4, v=[1.5, 1.0])
    s = max_sff(M, gen, fs.u, t_range=(0.5, 10.0))
    ode = max(abs(example_ode_residual(gen, t)) for t in np.linspace(0.5, 10.0, 200))
    verdict(8, s < 1e-5 and ode <= 1e-8, f"max |II| {s:.2e} on t in [0.5, 10]; ODE residual {ode:.1e}")


def _random_config(i):
    rng = np.random.default_rng(1000 + i)
    M = [euclidean(2), euclidean(3), sphere(), poincare_half_plane(), perturbed(0.2, 2), cone(0.8)][i % 6]
    gen = [sasaki(), cheeger_gromoll(), random_polynomial_family(i)][i % 3]
    c = rng.uniform(-0.4, 0.4, size=(4, M.dim))

    def comp(x, c=c, n=M.dim):
        return np.array([0.3 + c[0, k] + c[1, k] * np.sin(x[k] + c[2, k]) + c[3, k] * np.cos(x[(k + 1) % n])
                         for k in range(n)])

    u = VectorField(comp)
    p = sample_points(M, 1, i, accept=admissible(M, gen, u, SamplingConfig()))[0]
    return M, gen, u, p


def test_criterion_09_tw_tv_pairing(verdict):
    worst = 0.0
    for i in range(50):
        M, gen, u, p = _random_config(i)
        frame = graph_frame(M, gen, u, p)
        g = M.metric(p)
        for X in np.eye(M.dim):
            II = sff_oracle(M, gen, u, p, X, frame=frame)
            TW, TV = tw_tv_general(M, gen, u, p, X)
            for eta in frame.normal_basis:
                rhs = float(eta.hor @ g @ TW + eta.ver @ g @ TV)
                worst = max(worst, abs(frame.inner(II, eta) - rhs) / (1 + abs(rhs)))
                # Weingarten route: -G(nabla~ eta, u_*X) + ... with eta kept normal
                shape = shape_operator_oracle(M, gen, u, p, X, eta)
                worst = max(worst, abs(shape - rhs) / (1 + abs(rhs)))
    verdict(9, worst <= 1e-5, f"50 random configurations, max relative gap {worst:.2e}")


def test_criterion_10_nondegeneracy(verdict):
    s = check_nondegenerate(sasaki(), 100.0).passed
    cg = check_nondegenerate(cheeger_gromoll(), 100.0).passed
    bad = check_nondegenerate(GeneratorSet(a1=const(1), a2=const(1), a3=const(0)), 100.0)
    verdict(10, s and cg and not bad.passed,
            f"sasaki {s}, cheeger_gromoll {cg}, a=0 counterexample {bad.passed} (first failing t = {bad.first_failure})")


def test_criterion_11_determinism(verdict):
    names = list_presets()
    same = []
    for name in names:
        text, src = load_text(name)
        a = body_text(run_scenario(parse_scenario(parse_json(text, src))))
        b = body_text(run_scenario(parse_scenario(parse_json(text, src))))
        same.append(a == b)
    verdict(11, all(same), f"{sum(same)}/{len(names)} presets byte-identical across reruns")
