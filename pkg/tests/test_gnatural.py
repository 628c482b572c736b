import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tangeo.dual import derivative
from tangeo.expr import scalar_fn
from tangeo.gnatural import (
    NAMES,
    DegenerateConstruction,
    GeneratorSet,
    OutOfDomain,
    UnknownPreset,
    check_nondegenerate,
    cheeger_gromoll,
    const,
    construct_concircular_family,
    construct_recurrent_example,
    derived_at,
    example_ode_residual,
    polynomial,
    preset,
    random_polynomial_family,
    sasaki,
)

ts = st.floats(min_value=0.0, max_value=50.0)


@given(ts)
def test_cheeger_gromoll_invariants(t):
    d = derived_at(cheeger_gromoll(), t)
    assert d.a == pytest.approx(1 / (1 + t))
    assert d.F == pytest.approx(1 + t)
    assert d.A == pytest.approx(1.0) and d.B == pytest.approx(1.0)
    assert d.dA == pytest.approx(0.0, abs=1e-15)


@given(ts)
def test_sasaki_scalars(t):
    d = derived_at(sasaki(), t)
    assert (d.a1, d.a, d.F, d.F1, d.F2) == (1.0, 1.0, 1.0, 1.0, 0.0)


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 1000))
def test_random_family_derivatives_are_exact(seed):
    gen = random_polynomial_family(seed)
    for name, fn in gen.fns().items():
        for t in (0.0, 1.3, 7.5):
            assert fn.df(t) == pytest.approx(float(derivative(fn.f, t)), rel=1e-10, abs=1e-12)


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 1000))
def test_random_family_nondegenerate_and_seeded(seed):
    a, b = random_polynomial_family(seed), random_polynomial_family(seed)
    assert all(a.fns()[k](2.0) == b.fns()[k](2.0) for k in NAMES)
    assert check_nondegenerate(a, 10.0).passed


def test_lemma_verdicts():
    assert check_nondegenerate(sasaki(), 100.0).passed
    assert check_nondegenerate(cheeger_gromoll(), 100.0).passed
    bad = GeneratorSet(a1=const(1), a2=const(1), a3=const(0))
    rep = check_nondegenerate(bad, 10.0)
    assert not rep.passed and rep.first_failure == 0.0


def test_double_root_between_samples_is_found():
    # F = (1 - t/2)^2 touches zero at t = 2 only
    gen = GeneratorSet(a1=const(1), b1=const(-0.5))
    rep = check_nondegenerate(gen, 10.0, n_samples=1000)
    assert not rep.passed
    assert rep.first_failure == pytest.approx(2.0, abs=1e-6)


def test_sign_change_between_samples_is_found():
    gen = GeneratorSet(a1=scalar_fn("1 - t/3.3333"), a3=scalar_fn("t/3.3333 + 1"))
    rep = check_nondegenerate(gen, 10.0, n_samples=7)
    assert rep.first_failure == pytest.approx(3.3333, abs=1e-8)


def test_dim1_ignores_F():
    gen = GeneratorSet(a1=const(1), b1=const(-0.5))
    assert check_nondegenerate(gen, 10.0, dim1=True).passed


def test_presets_and_unknown():
    assert preset("sasaki").name == "sasaki"
    with pytest.raises(UnknownPreset):
        preset("nope")


@pytest.mark.parametrize("alpha", [-1.5, 0.5, 1.0, 2.0])
def test_concircular_family_identities(alpha):
    gen = construct_concircular_family(alpha, scalar_fn("1 + 0.2*t"), C=0.7)
    for t in (0.0, 3.0, 9.0):
        d = derived_at(gen, t)
        assert d.a2 == pytest.approx(-alpha * d.a1)
        assert d.A == pytest.approx(alpha**2 * d.a1 + 0.7)
        assert d.B == d.b1 == d.b2 == 0.0


def test_concircular_flat_variant_identities():
    gen = construct_concircular_family(1.0, scalar_fn("1+0.5*t"), C=1.0, flat_variant=0.5)
    d = derived_at(gen, 2.0)
    assert d.a2 == pytest.approx(-2.0 + 0.5)
    assert d.A == pytest.approx(2.0 + 0.5 + 1.0)


def test_concircular_rejects_degenerate_choices():
    with pytest.raises(DegenerateConstruction):
        construct_concircular_family(1.0, 1.0, C=0.0)
    with pytest.raises(TypeError):
        construct_concircular_family(lambda x: 1.0, 1.0, C=1.0)
    # C a1 + C1 = 0 everywhere
    with pytest.raises(DegenerateConstruction):
        construct_concircular_family(1.0, 1.0, C=1.0, flat_variant=-1.0)


def test_flat_variant_condition_is_not_sufficient():
    # C a1 + C1 = 1 != 0 but a = 3 alpha C1 a1 + C a1 - C1^2 vanishes
    with pytest.raises(DegenerateConstruction):
        construct_concircular_family(1.0, scalar_fn("1/3"), C=0.0, flat_variant=1.0)


@given(st.floats(min_value=0.2, max_value=30.0))
def test_recurrent_example_solves_ode(t):
    gen = construct_recurrent_example(2.0, scalar_fn("1 + sin(t)"), eps=0.1, A=1.5)
    assert abs(example_ode_residual(gen, t)) <= 1e-8 * max(1.0, t)
    d = derived_at(gen, t)
    assert d.F1 == pytest.approx(2.0 / t)
    assert d.A == pytest.approx(1.5) and d.B == pytest.approx(0.0, abs=1e-12)
    assert d.db1 == pytest.approx(float(derivative(gen.b1.f, t)), rel=1e-9)


def test_recurrent_example_domain():
    gen = construct_recurrent_example(1.0, 1.0, eps=0.1)
    with pytest.raises(OutOfDomain):
        derived_at(gen, 0.1)
    with pytest.raises(DegenerateConstruction):
        construct_recurrent_example(0.0, 1.0, eps=0.1)


def test_polynomial_derivative():
    p = polynomial([1.0, -2.0, 0.5])
    assert p(2.0) == pytest.approx(1 - 4 + 2)
    assert p.df(2.0) == pytest.approx(-2 + 2)
    np.testing.assert_allclose(p.df(np.array([0.0, 1.0])), [-2.0, -1.0])
