import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pseudolem import INF, blaschke, circle, parse
from pseudolem.counting import count_on_grid, count_preimages, count_preimages_retracted
from pseudolem.errors import InvalidConstant, InvalidZero, NotBoundaryUnimodular, TooCloseToImage

import oracles

UNIT = circle()


def test_build_examples():
    ident = blaschke.build([0])
    z = np.array([0.3 + 0.1j, -0.7j, 0.2])
    np.testing.assert_allclose(ident(z), z)
    const = blaschke.build([], 1j)
    assert const(0.4) == 1j and const.degree == 0
    double = blaschke.build([0.5, 0.5])
    assert double(0.5) == 0 and double.derivative(0.5) == 0
    assert double.degree == 2


def test_build_rejections():
    with pytest.raises(InvalidZero):
        blaschke.build([1.0])
    with pytest.raises(InvalidZero):
        blaschke.build([0.3, 2j])
    with pytest.raises(InvalidConstant):
        blaschke.build([0.1], 1.1)


def test_expression_form_matches():
    B = blaschke.build([0.2, -0.5j, 0.3 + 0.3j], np.exp(0.4j))
    f = B.as_function()
    z = oracles.random_disk(np.random.default_rng(0), 50, 1.5)
    np.testing.assert_allclose(f(z), B(z), rtol=1e-12)
    np.testing.assert_allclose(f.derivative(z), B.derivative(z), rtol=1e-10)
    np.testing.assert_allclose(B(z), oracles.blaschke_eval(B.zeros, B.unimodular_constant, z), rtol=1e-12)


def test_verify_unimodular_examples():
    rng = np.random.default_rng(3)
    assert blaschke.verify_unimodular(blaschke.build(oracles.random_disk(rng, 3, 0.95)), 1000) <= 1e-10
    assert blaschke.verify_unimodular(blaschke.build([]), 1000) == 0
    assert blaschke.verify_unimodular(blaschke.build([0.999999]), 1000) <= 1e-8


def test_fit_examples():
    m = blaschke.fit_ratio_model(parse("z^2"))
    assert m.numerator.degree == 2 and m.denominator.degree == 0
    assert np.allclose(m.numerator.zeros, 0, atol=1e-9)
    assert abs(m.constant - 1) < 1e-10 and m.max_model_error <= 1e-10
    m = blaschke.fit_ratio_model(parse("(z - 0.5)/(1 - 0.5*z)/z"))
    assert (m.numerator.degree, m.denominator.degree) == (1, 1)
    assert abs(m.numerator.zeros[0] - 0.5) < 1e-9 and abs(m.denominator.zeros[0]) < 1e-9
    assert m.max_model_error <= 1e-9
    with pytest.raises(NotBoundaryUnimodular):
        blaschke.fit_ratio_model(parse("exp(z)"))


def test_model_to_dict():
    d = blaschke.ratio([0.5], [0.1j], 1j).to_dict()
    assert d == {"zeros": [[0.5, 0.0]], "poles": [[0.0, 0.1]], "lambda": [0.0, 1.0],
                 "max_model_error": 0.0}


@settings(max_examples=15)
@given(st.integers(0, 4), st.integers(0, 3), st.integers(0, 2 ** 16))
def test_fit_recovers_random_ratios(da, db, seed):
    rng = np.random.default_rng(seed)
    zeros = oracles.random_disk(rng, da, 0.9)
    poles = oracles.random_disk(rng, db, 0.9)
    if da and db and min(abs(a - b) for a in zeros for b in poles) < 0.05:
        return
    f = blaschke.ratio(zeros, poles, np.exp(2j * np.pi * rng.uniform())).as_function()
    m = blaschke.fit_ratio_model(f)
    assert oracles.match_multisets(m.numerator.zeros, zeros) <= 1e-7
    assert oracles.match_multisets(m.denominator.zeros, poles) <= 1e-7
    assert m.max_model_error <= 1e-8


@pytest.mark.parametrize("degs", [(2, 1), (3, 2), (1, 3), (2, 0), (0, 2)])
def test_ratio_counts(degs):
    """N = n- inside, n+ outside, min(n-, n+) on the circle itself."""
    rng = np.random.default_rng(40 + degs[0] * 7 + degs[1])
    if 0 in degs:
        zeros, poles = oracles.random_disk(rng, degs[0], 0.9), oracles.random_disk(rng, degs[1], 0.9)
    else:
        zeros, poles = oracles.fold_free_ratio(rng, *degs)
    f = blaschke.ratio(zeros, poles, np.exp(2j * np.pi * rng.uniform())).as_function()
    inner = oracles.random_disk(rng, 20, 0.97)
    outer = rng.uniform(1.03, 5, 20) * np.exp(2j * np.pi * rng.uniform(size=20))
    assert [r.count for r in count_on_grid(f, UNIT, inner)] == [degs[0]] * 20
    assert [r.count for r in count_on_grid(f, UNIT, outer)] == [degs[1]] * 20
    assert count_preimages(f, UNIT, INF).count == degs[1]
    on = np.exp(2j * np.pi * rng.uniform(size=20))
    got = []
    for w in on:
        try:
            got.append(count_preimages_retracted(f, UNIT, w).count)
        except TooCloseToImage:
            continue
    assert len(got) >= 15 and set(got) == {min(degs)}
