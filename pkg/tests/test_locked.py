import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chainfold.chain import Chain, is_simple
from chainfold.locked import (NeedleParams, doubled_needles, is_alternating, knitting_needles,
                              projection_crossings, random_reconfiguration, separation_certificate)


def test_params_formulas():
    p = NeedleParams(1, 1, 1, 0.5, 0.2)
    assert (p.L, p.l0, p.l4, p.r) == (3.0, 3.5, 6.5, pytest.approx(3.2))


@pytest.mark.parametrize("kw", [dict(delta=0.4, eps=0.2), dict(delta=0.3, eps=0.2), dict(l1=0.0), dict(eps=-0.1)])
def test_params_rejected(kw):
    with pytest.raises(ValueError):
        NeedleParams(**kw)


def test_needles_embedding():
    p = NeedleParams()
    c = knitting_needles(p)
    assert len(c) == 6 and not c.closed
    assert is_simple(c).simple
    np.testing.assert_allclose(c.lengths, p.lengths, rtol=1e-12)
    np.testing.assert_array_equal(c.vertices[1], 0.0)
    cr = projection_crossings(c)
    assert len(cr) == 3 and is_alternating(cr)
    assert separation_certificate(c, p).holds


def test_needles_other_lengths_use_search():
    p = NeedleParams(1.0, 1.5, 0.8, 0.4, 0.1)
    c = knitting_needles(p)
    np.testing.assert_allclose(c.lengths, p.lengths, rtol=1e-12)
    cr = projection_crossings(c)
    assert len(cr) == 3 and is_alternating(cr) and is_simple(c).simple


def test_doubled_needles():
    p = NeedleParams()
    d = doubled_needles(p)
    assert len(d) == 10 and d.closed and is_simple(d).simple
    k = knitting_needles(p)
    np.testing.assert_array_equal(d.vertices[:6], k.vertices)
    np.testing.assert_allclose(d.vertices[6:], k.vertices[4:0:-1], atol=0.01 * p.L + 1e-12)
    with pytest.raises(ValueError):
        doubled_needles(p, offset=0.0)


def test_certificate_rejects_short_needle():
    p = NeedleParams()
    c = knitting_needles(p)
    V = np.array(c.vertices)
    # pull v0 in along its link so that |v0 v1| < r
    V[0] = V[1] + (V[0] - V[1]) * 0.5
    cert = separation_certificate(Chain(V), p)
    assert not cert.v0_outside and not cert.holds


def test_alternation_detects_non_alternating():
    # two crossings on a zigzag, both with the later link on top
    c = Chain([(0, 0, 0), (2, 0, 0), (2, 1, 0), (1, -1, 1), (0.5, 1, 2)])
    cr = projection_crossings(c)
    assert len(cr) >= 2
    assert not is_alternating(cr)


@settings(max_examples=200)
@given(st.integers(0, 2**32 - 1))
def test_certificate_holds_for_any_configuration(seed):
    p = NeedleParams()
    c = random_reconfiguration(p, np.random.default_rng(seed))
    np.testing.assert_allclose(c.lengths, p.lengths, rtol=1e-12)
    assert separation_certificate(c, p).holds
