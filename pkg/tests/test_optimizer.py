import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize, minimize_scalar

from semcode.errors import ConstraintViolationError, DegenerateObjectiveError, InvalidParameterError, NoSolutionError
from semcode.optimizer import (
    LN2,
    kraft_sum,
    lengths_given_mu,
    objective_at,
    solve,
    solve_source,
    stationarity_residual,
)
from semcode.probability import truncate, zipf_pmf
from semcode.timeliness import Case, PenaltyConfig, QuadraticForm, expected_q, quadratic_form

EDT = PenaltyConfig("edt", rho=0.5, w=1.0, alpha=1.0, beta=1.0)
QF = quadratic_form(EDT, 1.0)  # A=1.25, B=0.5, C=3, D=1.5


def two_symbol_oracle(qf, p):
    """Minimize over l1 with l2 fixed by Kraft equality (1-D bounded search)."""
    def f(l1):
        l2 = -math.log2(1.0 - 2.0 ** -l1)
        return objective_at(qf, p, np.array([l1, l2]))

    r = minimize_scalar(f, bounds=(1e-6, 20.0), method="bounded", options={"xatol": 1e-12})
    l1 = r.x
    return np.array([l1, -math.log2(1.0 - 2.0 ** -l1)]), r.fun


def slsqp_oracle(qf, p):
    p = np.asarray(p)
    x0 = -np.log2(p)
    cons = {"type": "eq", "fun": lambda l: np.sum(np.exp2(-l)) - 1.0,
            "jac": lambda l: -LN2 * np.exp2(-l)}
    r = minimize(lambda l: objective_at(qf, p, l), x0, method="SLSQP", constraints=[cons],
                 bounds=[(0, 40)] * p.size, options={"ftol": 1e-14, "maxiter": 500})
    return r.x, r.fun


def test_symmetric_two_symbols():
    sol = solve(QF, [0.5, 0.5])
    assert sol.lengths == pytest.approx((1.0, 1.0), abs=1e-12)
    assert sol.EL == pytest.approx(1.0, abs=1e-12)
    assert sol.EL2 == pytest.approx(1.0, abs=1e-12)
    assert sol.mu == pytest.approx(6.5 / math.log(2), rel=1e-10)


def test_single_symbol():
    sol = solve(QF, [1.0])
    assert sol.lengths == (0.0,)
    assert sol.kraft_sum == 1.0
    assert sol.EL == 0.0 and sol.EL2 == 0.0


def test_skewed_pair_against_1d_oracle():
    p = [0.6, 0.4]
    sol = solve(QF, p)
    l1, l2 = sol.lengths
    assert l1 < 1 < l2
    assert sol.kraft_sum == pytest.approx(1.0, abs=1e-12)
    assert sol.kkt_residual < 1e-8
    want, fun = two_symbol_oracle(QF, p)
    assert np.allclose(sol.lengths, want, atol=1e-5)
    assert sol.j_soi <= fun + 1e-12
    # frozen regression values
    assert sol.lengths == pytest.approx((0.8241789374010882, 1.200261307917522), abs=1e-7)


def test_reference_point_self_consistent():
    src = truncate(zipf_pmf(100, 0.4), 18)
    sol = solve_source(EDT, src, 1.0)
    assert abs(sol.kraft_sum - 1.0) <= 1e-9
    assert sol.kkt_residual <= 1e-8
    assert math.isfinite(sol.j_soi)
    qf = quadratic_form(EDT, src.gamma(1.0))
    assert sol.j_soi == pytest.approx(objective_at(qf, src.cond_array(), sol.lengths_array()), rel=1e-12)
    assert sol.j_soi == pytest.approx(
        expected_q(EDT, sol.EL, sol.EL2, src.gamma(1.0))
        + EDT.coding_cost(sol.lengths, src.cond_array()), rel=1e-12)


@pytest.mark.parametrize("case", list(Case))
def test_matches_slsqp(case):
    cfg = PenaltyConfig(case, rho=0.5)
    p = np.array([0.35, 0.25, 0.2, 0.12, 0.08])
    qf = quadratic_form(cfg, 1.7)
    sol = solve(qf, p)
    x, fun = slsqp_oracle(qf, p)
    assert sol.j_soi <= fun + 1e-9
    assert np.allclose(sol.lengths, x, atol=1e-4)


def test_mean_length_matches_multiplier():
    # aggregated stationarity: E[L] = (mu ln2 - C) / (2A + 2B)
    src = truncate(zipf_pmf(100, 0.4), 50)
    for case in Case:
        cfg = PenaltyConfig(case, rho=0.5)
        qf = quadratic_form(cfg, src.gamma(5.0))
        sol = solve(qf, src.cond_array())
        assert sol.EL == pytest.approx((sol.mu * LN2 - qf.C) / (2 * qf.A + 2 * qf.B), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(
    case=st.sampled_from(list(Case)),
    k=st.integers(2, 60),
    s=st.floats(0.0, 1.5),
    lam=st.floats(0.1, 50.0),
    rho=st.floats(0.05, 1.0),
    cost=st.floats(0.0, 5.0),
)
def test_kkt_and_kraft_random(case, k, s, lam, rho, cost):
    cfg = PenaltyConfig(case, rho=rho, alpha=cost, beta=cost)
    src = truncate(zipf_pmf(100, s), k)
    try:
        sol = solve_source(cfg, src, lam)
    except (ConstraintViolationError, NoSolutionError):
        # only LDT has a linear term that can go negative, moving the
        # optimum to mu <= 0 or onto the l >= 0 boundary
        assert case is Case.LDT
        return
    assert abs(sol.kraft_sum - 1.0) <= 1e-9
    assert sol.kkt_residual <= 1e-8
    l = sol.lengths_array()
    assert np.all(l >= 0)
    p = src.cond_array()
    order = np.argsort(-p, kind="stable")
    assert np.all(np.diff(l[order]) >= -1e-12)


def test_lengths_given_mu_root_property():
    p = np.array([0.5, 0.3, 0.2])
    sol = solve(QF, p)
    assert kraft_sum(lengths_given_mu(QF, p, sol.mu)) == pytest.approx(1.0, abs=1e-12)
    assert kraft_sum(lengths_given_mu(QF, p, sol.mu * 1.1)) < 1.0
    assert kraft_sum(lengths_given_mu(QF, p, sol.mu * 0.9)) > 1.0


def test_perturbed_mu_breaks_kkt():
    p = np.array([0.5, 0.3, 0.2])
    sol = solve(QF, p)
    l = lengths_given_mu(QF, p, sol.mu + 1e-3)
    assert abs(kraft_sum(l) - 1.0) > 1e-9


def test_objective_at_examples():
    qf = QuadraticForm(1.0, 0.0, 0.0, 0.0, 1.0)
    assert objective_at(qf, [0.5, 0.5], [1.0, 1.0]) == 1.0
    assert objective_at(QF, [0.5, 0.5], [0.0, 0.0]) == QF.D
    with pytest.raises(InvalidParameterError):
        objective_at(QF, [0.5, 0.5], [1.0])


def test_stationarity_residual_zero_at_root():
    p = np.array([0.6, 0.4])
    sol = solve(QF, p)
    assert stationarity_residual(QF, p, sol.lengths_array(), sol.mu) < 1e-10


def test_larger_cost_weight_shortens_spread():
    # heavier quadratic cost pulls lengths toward equal values
    p = truncate(zipf_pmf(100, 0.4), 30).cond_array()
    light = solve(quadratic_form(EDT.replace(beta=0.1), 1.0), p).lengths_array()
    heavy = solve(quadratic_form(EDT.replace(beta=10.0), 1.0), p).lengths_array()
    assert np.ptp(heavy) < np.ptp(light)


def test_degenerate_and_invalid():
    with pytest.raises(DegenerateObjectiveError):
        solve(QuadraticForm(0.0, 0.0, 1.0, 0.0, 1.0), [0.5, 0.5])
    with pytest.raises(InvalidParameterError):
        solve(QF, [0.5, 0.6])
    with pytest.raises(InvalidParameterError):
        solve(QF, [1.0, 0.0])
    with pytest.raises(InvalidParameterError):
        lengths_given_mu(QF, [0.5, 0.5], -1.0)


def test_interior_optimum_raises_no_solution():
    # unconstrained minimizer l = -C / 2(A+B) = 4 has Kraft sum 1/8 < 1,
    # so the equality needs mu < 0
    qf = QuadraticForm(1.0, 0.0, -8.0, 0.0, 1.0)
    with pytest.raises(NoSolutionError):
        solve(qf, [0.5, 0.5])


def test_root_at_bracket_edge_accepted():
    # unconstrained minimizer sits exactly on the Kraft surface (l = 1)
    qf = QuadraticForm(1.0, 0.5, -3.0, 0.0, 1.0)
    sol = solve(qf, [0.5, 0.5])
    assert sol.lengths == pytest.approx((1.0, 1.0), abs=1e-9)


W_GRID = (0.25, 0.5, 1, 2, 4, 8, 16)


def test_increasing_w_never_raises_raw_cost():
    # minimizing f + w g: g at the optimum is non-increasing in w
    src = truncate(zipf_pmf(100, 0.4), 40)
    for case in Case:
        raw = [sol.cost_term / w for w, sol in
               ((w, solve_source(PenaltyConfig(case, rho=0.5, w=w), src, 2.0)) for w in W_GRID)]
        assert np.all(np.diff(raw) <= 1e-12)


def test_linear_cost_pressure_shortens_mean():
    src = truncate(zipf_pmf(100, 0.4), 40)
    for case in Case:
        els = [solve_source(PenaltyConfig(case, rho=0.5, w=w, beta=0.0), src, 2.0).EL for w in W_GRID]
        assert np.all(np.diff(els) <= 1e-12)


def test_quadratic_cost_pressure_can_lengthen_mean():
    # Kraft-tight lengths other than -log2 p have larger E[L]; a heavier
    # E[L^2] weight flattens the lengths and so raises E[L] slightly
    src = truncate(zipf_pmf(100, 0.4), 40)
    els = [solve_source(PenaltyConfig("edt", rho=0.5, w=w), src, 2.0).EL for w in W_GRID]
    assert np.all(np.diff(els) > 0)
