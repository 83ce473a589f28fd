import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from semcode.errors import DegenerateObjectiveError, DomainError, InvalidParameterError, UnsupportedCaseError
from semcode.timeliness import (
    Case,
    PenaltyConfig,
    expected_q,
    penalty_segment_integral,
    penalty_value,
    quadratic_form,
)

EDT = PenaltyConfig("edt", rho=0.5)


def test_penalty_values():
    assert penalty_value(PenaltyConfig("edt", rho=0.5), 0.0) == 1.0
    assert penalty_value(PenaltyConfig("pdt", rho=2, kappa=1), 3.0) == 6.0
    assert penalty_value(PenaltyConfig("ldt", rho=1), 1.0) == 0.0
    with pytest.raises(DomainError):
        penalty_value(PenaltyConfig("ldt", rho=1), 0.0)


def test_config_validation():
    with pytest.raises(InvalidParameterError):
        PenaltyConfig("ldt", rho=0.0)
    with pytest.raises(InvalidParameterError):
        PenaltyConfig("edt", w=0.0)
    with pytest.raises(InvalidParameterError):
        PenaltyConfig("pdt", kappa=0)
    with pytest.raises(InvalidParameterError):
        PenaltyConfig("xdt")
    with pytest.raises(InvalidParameterError):
        PenaltyConfig("edt", alpha=-1.0)


def test_segment_integral_examples():
    assert penalty_segment_integral(PenaltyConfig("pdt", rho=1, kappa=1), 0.0, 10.0) == 50.0
    oracle = quad(lambda t: math.exp(0.5 * t), 0, 2, epsabs=1e-13)[0]
    val = penalty_segment_integral(EDT, 0.0, 2.0)
    assert val == pytest.approx(oracle, rel=1e-10)
    assert val == pytest.approx((math.e - 1) / 0.5, rel=1e-14)
    assert penalty_segment_integral(PenaltyConfig("ldt", rho=1), 0.0, 1.0) == pytest.approx(-1.0, abs=1e-14)


def test_segment_integral_removable_limits():
    assert penalty_segment_integral(PenaltyConfig("edt", rho=0.0), 3.0, 2.5) == 2.5
    assert penalty_segment_integral(PenaltyConfig("ldt", rho=2.0), 0.0, 0.0) == 0.0


def _quad(cfg, a, d):
    f = lambda t: penalty_value(cfg, a + t)  # noqa: E731
    pts = None
    if cfg.case is Case.LDT and a == 0:
        return quad(f, 0, d, epsabs=1e-12, epsrel=1e-12, limit=200)[0]
    return quad(f, 0, d, epsabs=0, epsrel=1e-12, limit=200, points=pts)[0]


@settings(max_examples=150, deadline=None)
@given(
    case=st.sampled_from(list(Case)),
    rho=st.floats(0.05, 1.5),
    kappa=st.integers(1, 4),
    a=st.floats(0.0, 15.0),
    d=st.floats(1e-3, 15.0),
)
def test_segment_integral_matches_quadrature(case, rho, kappa, a, d):
    cfg = PenaltyConfig(case, rho=rho, kappa=kappa)
    got = penalty_segment_integral(cfg, a, d)
    want = _quad(cfg, a, d)
    assert got == pytest.approx(want, rel=1e-9, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(
    case=st.sampled_from(list(Case)),
    rho=st.floats(0.05, 1.0),
    a=st.floats(0.0, 10.0),
    d1=st.floats(1e-3, 5.0),
    d2=st.floats(1e-3, 5.0),
)
def test_segment_additivity(case, rho, a, d1, d2):
    cfg = PenaltyConfig(case, rho=rho, kappa=2)
    whole = penalty_segment_integral(cfg, a, d1 + d2)
    parts = penalty_segment_integral(cfg, a, d1) + penalty_segment_integral(cfg, a + d1, d2)
    assert whole == pytest.approx(parts, rel=1e-12, abs=1e-12)


def test_segment_vectorized():
    a = np.array([0.0, 1.0, 2.0])
    d = np.array([1.0, 1.0, 1.0])
    got = penalty_segment_integral(EDT, a, d)
    assert got.shape == (3,)
    assert got[1] == penalty_segment_integral(EDT, 1.0, 1.0)


def test_expected_q_examples():
    assert expected_q(PenaltyConfig("edt", rho=0.0), 2.0, 5.0, 3.0) == 5.0
    assert expected_q(EDT, 1.0, 1.2, 2.0) == pytest.approx(7.8, abs=1e-14)
    assert expected_q(PenaltyConfig("pdt", rho=0.5), 0.0, 0.0, 1.0) == 0.5
    with pytest.raises(UnsupportedCaseError):
        expected_q(PenaltyConfig("pdt", kappa=2), 1.0, 1.0, 1.0)


@pytest.mark.parametrize(
    "case,expected",
    [("edt", (1.25, 0.5, 3.0, 1.5)), ("pdt", (1.25, 0.5, 2.0, 0.5)), ("ldt", (1.5, 1.0, 1.0, -1.0))],
)
def test_quadratic_form_examples(case, expected):
    qf = quadratic_form(PenaltyConfig(case, rho=0.5, w=1, alpha=1, beta=1), 1.0)
    assert (qf.A, qf.B, qf.C, qf.D) == pytest.approx(expected, abs=1e-15)
    assert qf.gamma == 1.0


def test_quadratic_form_degenerate():
    with pytest.raises(DegenerateObjectiveError):
        quadratic_form(PenaltyConfig("edt", rho=0.0, beta=0.0), 1.0)
    with pytest.raises(UnsupportedCaseError):
        quadratic_form(PenaltyConfig("pdt", kappa=3), 1.0)


@settings(max_examples=200)
@given(
    case=st.sampled_from(list(Case)),
    rho=st.floats(0.01, 2.0),
    w=st.floats(0.1, 5.0),
    alpha=st.floats(0.0, 5.0),
    beta=st.floats(0.0, 5.0),
    gamma=st.floats(0.05, 50.0),
    EL=st.floats(0.0, 20.0),
    spread=st.floats(0.0, 10.0),
)
def test_quadratic_form_identity(case, rho, w, alpha, beta, gamma, EL, spread):
    cfg = PenaltyConfig(case, rho=rho, w=w, alpha=alpha, beta=beta)
    EL2 = EL * EL + spread
    qf = quadratic_form(cfg, gamma)
    lhs = qf.value(EL, EL2)
    rhs = expected_q(cfg, EL, EL2, gamma) + w * (alpha * EL + beta * EL2)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_edt_rho_zero_is_mean_cycle():
    cfg = PenaltyConfig("edt", rho=0.0)
    assert expected_q(cfg, 3.25, 11.0, 7.5) == 3.25 + 7.5


def test_ldt_segment_subnormal_start():
    # d/a overflows; the a*ln(b/a) term must still vanish
    got = penalty_segment_integral(PenaltyConfig("ldt", rho=1.0), 5e-324, 1.0)
    assert got == pytest.approx(-1.0, abs=1e-12)
