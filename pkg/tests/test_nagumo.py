import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spdedist.models import build_gbm, build_halfline_ode, build_hjmm, build_rate_model, default_rate_params
from spdedist.nagumo import (
    differentiability_defect,
    estimate_snc,
    estimate_snc_generator_form,
    estimate_ssnc,
    estimate_ssnc_batch,
)
from spdedist.sets import HalfLineAbove, HalfLineBelow
from spdedist.spaces import Grid


def test_halfline_decay_gives_drift_magnitude():
    s = build_halfline_ode(-0.5, 1.0)
    est = estimate_snc(s.kset, s.drift_model, 1.0)
    assert np.allclose(est.quotients, 0.5, rtol=0, atol=1e-12)
    assert not est.flagged and len(est.tail) == 12
    assert est.t_sequence[-1] < 1e-6
    # with beta in the semigroup the quotient is 0.5 - O(t)
    sg = estimate_snc(s.kset, s.model, 1.0)
    assert sg.estimate == pytest.approx(0.5, abs=0.2 * sg.tail_times[0])


def test_halfline_growth_and_interior_give_zero():
    s = build_halfline_ode(0.5, 1.0)
    assert estimate_snc(s.kset, s.model, 1.0).estimate == 0.0
    d = build_halfline_ode(-0.5, 1.0)
    assert estimate_snc(d.kset, d.model, 3.0).estimate == 0.0


def test_drift_and_semigroup_forms_agree_on_halfline():
    s = build_halfline_ode(-0.5, 1.0)
    a = estimate_snc(s.kset, s.drift_model, 1.0).estimate
    b = estimate_snc_generator_form(s.kset, s.model, 1.0).estimate
    assert estimate_snc_generator_form(s.kset, s.drift_model, 1.0).estimate == pytest.approx(0.5, abs=1e-12)
    assert a == pytest.approx(0.5, abs=1e-12) and b == pytest.approx(0.5, abs=1e-12)


def test_start_outside_set_is_flagged():
    s = build_halfline_ode(-0.5, 1.0)
    with pytest.warns(RuntimeWarning):
        est = estimate_snc(s.kset, s.model, 0.5)
    assert "start-outside-set" in est.flags


def test_argument_validation():
    s = build_halfline_ode(-0.5, 1.0)
    with pytest.raises(ValueError):
        estimate_snc(s.kset, s.model, 1.0, levels=3)
    with pytest.raises(ValueError):
        estimate_snc(s.kset, s.model, 1.0, t0=0.0)


@given(st.floats(-3, 3), st.floats(0.1, 5), st.just(0.0) | st.floats(0.01, 3))
def test_quotients_are_nonnegative(beta, a, shift):
    s = build_halfline_ode(beta, a)
    est = estimate_snc(s.kset, s.drift_model, a + shift)
    assert np.all(est.quotients >= 0) and est.estimate >= 0
    assert est.estimate == pytest.approx(max(-beta, 0.0) * a if shift == 0 else 0.0, abs=1e-9 * (1 + a))


def test_gbm_stochastic_quotient():
    g = build_gbm(0.1, 0.3)
    for u in (-2.0, 0.5, 2.0):
        assert estimate_ssnc(g.kset, g.model, 0.0, [u]).estimate == 0.0
        assert estimate_ssnc(g.kset, g.model, -1.0, [u]).estimate == 0.0
    with pytest.raises(ValueError):
        estimate_ssnc(g.kset, g.model, 0.0, [1.0, 2.0])


def test_ssnc_batch_is_heuristic_and_ordered():
    g = build_gbm(0.1, 0.3)
    rep = estimate_ssnc_batch(HalfLineBelow(0.0), g.model, [0.0, -0.5], levels=8)
    assert rep.heuristic and rep.maximum == 0.0 and len(rep.rows) == 8
    assert [r["point"] for r in rep.rows] == [0, 0, 0, 0, 1, 1, 1, 1]
    rep2 = estimate_ssnc_batch(HalfLineAbove(0.0), g.model, [0.0], levels=8, threads=3)
    assert rep2.maximum == 0.0


def test_hjmm_quotient_matches_drift_distance():
    s = build_hjmm(1.0, 2.5, 0.2)
    x = s.point([0.01, 0.02, 0.0, -0.01, 0.0])
    est = estimate_ssnc(s.kset, s.model, x, [1.0], levels=12)
    assert est.estimate == pytest.approx(s.kset.distance(s.alpha), rel=1e-2)


def test_rate_model_forms_agree_within_defect():
    r = build_rate_model(default_rate_params(Grid.interior(255)))
    x = r.phi([0.3, -0.2])
    det = r.model.deterministic
    a = estimate_snc(r.kset, det, x, levels=16)
    b = estimate_snc_generator_form(r.kset, det, x, levels=16)
    assert a.estimate == pytest.approx(r.epsilon, rel=1e-2)
    defect = differentiability_defect(det, x, a.tail_times)
    assert abs(a.estimate - b.estimate) <= defect + 1e-8
