import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from resolvent_lab.fock import DimensionError
from resolvent_lab.symbols import (Constant, Power, Product, ResolventFactor, SymbolDomainError,
                                   SymbolSyntaxError, UnsupportedForm, WeylSymbol, eval_batch,
                                   eval_symbol, flatten_resolvents, laplace_form, parse_symbol,
                                   resolvent_bound, to_text)


def test_parse_anchor():
    e = parse_symbol("R(1; [1,0])", 2)
    assert e == ResolventFactor(1.0, (1.0, 0.0), 1)


def test_parse_structure():
    e = parse_symbol("R(2+1i; [0,1])^3 * W([1,0])", 2)
    assert isinstance(e, Product)
    p, w = e.factors
    assert isinstance(p, Power) and p.k == 3 and p.base == ResolventFactor(2 + 1j, (0, 1))
    assert w == WeylSymbol((1, 0))


def test_parse_complex_literals():
    assert parse_symbol("-2.5-0.5i").value == -2.5 - 0.5j
    assert parse_symbol("3i").value == 3j
    assert parse_symbol("1e-3").value == 1e-3
    assert parse_symbol("R(-1; [1i, -2+3i])").z == (1j, -2 + 3j)


def test_imaginary_axis_rejected():
    with pytest.raises(SymbolDomainError):
        parse_symbol("R(1i; [1])")
    with pytest.raises(SymbolDomainError):
        parse_symbol("R(0; [1])")


@pytest.mark.parametrize("text, pos", [("R(1; [1]", 8), ("R(1, [1])", 3), ("W([1]) ** 2", 8),
                                       ("R(1; [1])^0", 10), ("x", 0), ("R(1; [1])^2.5", 10)])
def test_syntax_errors_carry_position(text, pos):
    with pytest.raises(SymbolSyntaxError) as ei:
        parse_symbol(text)
    assert ei.value.pos == pos


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        parse_symbol("R(1; [1, 2]) * W([1])", 2)


def test_eval_examples():
    z = (0.6 + 0.8j,)
    w = 2 * np.array(z)          # sigma_t(w, z) = 0
    assert eval_symbol(parse_symbol("R(1; [0.6+0.8i])"), w, (1.0,)) == pytest.approx(1.0)
    assert eval_symbol(parse_symbol("R(1; [1])"), [1j], (1.0,)) == pytest.approx((1 + 2j) / 5)
    assert eval_symbol(parse_symbol("W([1])"), [0], (1.0,)) == pytest.approx(np.exp(0.5))


def test_product_and_power_evaluate_exactly(rng):
    a, b = parse_symbol("R(1+1i; [1])"), parse_symbol("W([0.5i])")
    pts = rng.normal(size=(50, 1)) + 1j * rng.normal(size=(50, 1))
    va, vb = eval_batch(a, pts, (1.0,)), eval_batch(b, pts, (1.0,))
    assert np.array_equal(eval_batch(Product((a, b)), pts, (1.0,)), (1.0 + 0j) * va * vb)
    assert np.array_equal(eval_batch(Power(a, 3), pts, (1.0,)), va ** 3)


def test_resolvent_boundedness(rng):
    e = parse_symbol("R(-0.5+2i; [1, 1i])^2 * R(1.5; [0.3, -1])", 2)
    pts = 5 * (rng.normal(size=(2000, 2)) + 1j * rng.normal(size=(2000, 2)))
    assert np.max(np.abs(eval_batch(e, pts, (1.0, 0.5)))) <= resolvent_bound(e) * (1 + 1e-12)
    assert resolvent_bound(e) == pytest.approx(0.5 ** -2 * 1.5 ** -1)


def test_laplace_form_examples():
    d = laplace_form(parse_symbol("R(1; [1])"))
    assert (d.m, d.Lam, d.C) == (1, (1.0,), 1.0)
    d = laplace_form(Power(ResolventFactor(-1, (1,)), 2))
    assert d.k == (2,) and d.C == -1.0 and d.C_corrected == 1.0 and d.Lam == (1.0,)
    d = laplace_form(parse_symbol("R(1; [1]) * R(1; [1i])"))
    assert d.m == 2 and d.C == 1.0
    d = laplace_form(parse_symbol("R(-2; [1+1i])"))
    assert d.zeta == ((-1 - 1j,),) and d.signs == (-1,)


def test_flatten_powers_of_products():
    e = parse_symbol("(R(1; [1]) * R(2; [1i]))^2")
    assert [l for l, _, _ in flatten_resolvents(e)] == [1, 2, 1, 2]
    with pytest.raises(UnsupportedForm):
        laplace_form(parse_symbol("R(1; [1]) * W([1])"))
    with pytest.raises(UnsupportedForm):
        laplace_form(Constant(2.0))


# ---------------------------------------------------------------- round trip

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)
cplx = st.builds(complex, finite, finite)
nonaxis = st.builds(complex, finite.filter(lambda x: x != 0.0), finite)
vec2 = st.tuples(cplx, cplx)

leaves = st.one_of(st.builds(Constant, cplx), st.builds(ResolventFactor, nonaxis, vec2),
                   st.builds(WeylSymbol, vec2))
exprs = st.recursive(leaves, lambda kids: st.one_of(
    st.builds(lambda fs: Product(tuple(fs)), st.lists(kids, min_size=2, max_size=3)),
    st.builds(Power, kids, st.integers(1, 5))), max_leaves=8)


@settings(max_examples=200)
@given(exprs)
def test_round_trip(e):
    text = to_text(e)
    assert parse_symbol(text, 2) == e
    assert to_text(parse_symbol(text)) == text
