import math

import numpy as np
import pytest

from cottonkit.jets import (
    Jet,
    JetDomainError,
    JetSpace,
    jet_apply,
    jet_constant,
    jet_extract,
    jet_pow,
    jet_var,
)
from cottonkit.oracles import fd_partial


def derivs(j, upto):
    return [float(jet_extract(j, (k,))) for k in range(upto + 1)]


def test_jet_var_seeds_value_and_unit_derivative():
    j = jet_var(0, 2.0, 2, 4)
    assert j.value == 2.0
    assert jet_extract(j, (1, 0)) == 1.0
    assert jet_extract(j, (0, 1)) == 0.0
    assert jet_extract(j, (2, 0)) == 0.0

    j2 = jet_var(1, 0.0, 3, 4)
    assert j2.value == 0.0
    assert jet_extract(j2, (0, 1, 0)) == 1.0


def test_constant_lift_has_zero_derivatives():
    c = jet_constant(5.0, 2, 3)
    assert c.value == 5.0
    assert all(x == 0.0 for x in c.coeffs[1:])


def test_coefficient_count_matches_layout():
    for nv in (1, 2, 3):
        for order in range(5):
            sp = JetSpace.get(nv, order)
            assert sp.ncoeff == math.comb(nv + order, order)


def test_var_index_out_of_range():
    with pytest.raises(IndexError):
        jet_var(2, 0.0, 2, 3)


def test_tanh_jet_at_zero_matches_finite_differences():
    j = jet_apply("tanh", jet_var(0, 0.0, 1, 3))
    np.testing.assert_allclose(j.coeffs, [0.0, 1.0, 0.0, -1.0 / 3.0], atol=1e-15)
    got = derivs(j, 3)
    for k in range(4):
        want = fd_partial(lambda p: math.tanh(p[0]), (0.0,), (k,), step=1e-3 if k < 3 else 5e-3)
        assert abs(got[k] - want) < 1e-8


def test_exp_of_zero_constant_is_one():
    j = jet_apply("exp", jet_constant(0.0, 2, 4))
    assert j.value == 1.0
    assert np.all(j.coeffs[1:] == 0.0)


def test_sqrt_of_square_recovers_identity():
    x = jet_var(0, 2.0, 1, 4)
    s = jet_apply("sqrt", x * x)
    got = derivs(s, 2)
    assert got[0] == pytest.approx(2.0, abs=1e-14)
    assert got[1] == pytest.approx(1.0, abs=1e-14)
    assert got[2] == pytest.approx(0.0, abs=1e-14)


def test_extract_examples():
    t = jet_var(0, 1.0, 1, 4)
    cube = t * t * t
    assert jet_extract(cube, (0,)) == pytest.approx(1.0)
    assert jet_extract(cube, (2,)) == pytest.approx(6.0)

    t2 = jet_var(0, 0.37, 2, 4)
    x2 = jet_var(1, -1.4, 2, 4)
    assert jet_extract(t2 * x2, (1, 1)) == pytest.approx(1.0, abs=1e-15)


def test_extract_rejects_excess_order():
    j = jet_var(0, 1.0, 1, 2)
    with pytest.raises(ValueError):
        jet_extract(j, (3,))


def test_domain_errors_name_function_and_value():
    with pytest.raises(JetDomainError) as err:
        jet_apply("sqrt", jet_constant(-2.0, 1, 2))
    assert "sqrt" in str(err.value) and "-2" in str(err.value)
    with pytest.raises(JetDomainError):
        jet_apply("ln", jet_var(0, 0.0, 1, 2))


def test_product_rule_on_random_polynomials():
    # coefficients of a product must be the truncated convolution
    rng = np.random.default_rng(3)
    sp = JetSpace.get(3, 4)
    for _ in range(50):
        a = Jet(sp, rng.normal(size=sp.ncoeff))
        b = Jet(sp, rng.normal(size=sp.ncoeff))
        prod = a * b
        want = np.zeros(sp.ncoeff)
        for i, ai in enumerate(sp.alphas):
            for j, aj in enumerate(sp.alphas):
                if sum(ai) + sum(aj) <= 4:
                    k = sp.index[tuple(x + y for x, y in zip(ai, aj))]
                    want[k] += a.coeffs[i] * b.coeffs[j]
        np.testing.assert_allclose(prod.coeffs, want, rtol=1e-14, atol=1e-14)


def test_division_roundtrip():
    rng = np.random.default_rng(4)
    sp = JetSpace.get(2, 4)
    for _ in range(100):
        f = Jet(sp, rng.normal(size=sp.ncoeff))
        g = Jet(sp, rng.normal(size=sp.ncoeff))
        if abs(g.value) < 1e-6:
            continue
        q = f / g
        back = q * g
        # error scales with the magnitudes actually multiplied back together
        scale = (1.0 + np.max(np.abs(q.coeffs))) * (1.0 + np.max(np.abs(g.coeffs)))
        assert np.max(np.abs(back.coeffs - f.coeffs)) / scale < 1e-13


def test_integer_pow_handles_negative_base():
    j = jet_var(0, -1.5, 1, 3)
    cubed = jet_pow(j, 3)
    assert cubed.value == pytest.approx((-1.5) ** 3)
    inv2 = jet_pow(j, -2)
    assert inv2.value == pytest.approx((-1.5) ** -2)


def test_real_pow_requires_positive_base():
    with pytest.raises(JetDomainError):
        jet_pow(jet_var(0, -2.0, 1, 2), 0.5)


def test_real_pow_matches_sqrt():
    j = jet_var(0, 1.7, 1, 4) + 0.3
    a = jet_pow(j, 0.5)
    b = jet_apply("sqrt", j)
    np.testing.assert_allclose(a.coeffs, b.coeffs, rtol=1e-13)


def test_derivative_shift_matches_analytic():
    t = jet_var(0, 0.8, 2, 4)
    x = jet_var(1, -0.3, 2, 4)
    f = jet_apply("sin", t * x)
    df = f.derivative(0)
    # d/dt sin(t x) = x cos(t x)
    want = jet_apply("cos", (t * x).truncated(3)) * x.truncated(3)
    np.testing.assert_allclose(df.coeffs, want.coeffs, rtol=1e-13, atol=1e-14)


def test_batched_coefficients_match_scalar_loop():
    vals = np.linspace(0.2, 1.4, 17)
    jb = jet_apply("tanh", jet_var(0, vals, 2, 3) * 0.7 + 0.1)
    for k, v in enumerate(vals):
        js = jet_apply("tanh", jet_var(0, float(v), 2, 3) * 0.7 + 0.1)
        np.testing.assert_allclose(jb.coeffs[:, k], js.coeffs, rtol=1e-15)


def test_mixed_order_arithmetic_truncates():
    a = jet_var(0, 1.0, 1, 4)
    b = jet_var(0, 1.0, 1, 2)
    assert (a * b).order == 2
    assert (a + b).order == 2


@pytest.mark.parametrize("fn,ref", [
    ("exp", math.exp), ("sin", math.sin), ("cos", math.cos),
    ("sinh", math.sinh), ("cosh", math.cosh), ("tanh", math.tanh),
    ("arctan", math.atan),
])
def test_chain_rule_spot_checks(fn, ref):
    pt = 0.37
    j = jet_apply(fn, jet_var(0, pt, 1, 4))
    for k in range(3):
        want = fd_partial(lambda p: ref(p[0]), (pt,), (k,), step=1e-3)
        assert abs(float(jet_extract(j, (k,))) - want) < 1e-7


def test_order_cap_enforced():
    with pytest.raises(ValueError):
        jet_var(0, 0.0, 1, 5)
    with pytest.raises(ValueError):
        jet_var(0, 0.0, 4, 2)
