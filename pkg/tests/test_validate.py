import numpy as np
import pytest

from semcode.optimizer import solve
from semcode.timeliness import PenaltyConfig, quadratic_form
from semcode.validate import (
    SUITES,
    check_solution,
    grid_oracle_min,
    kkt_suite,
    random_oracle_problems,
    run_suites,
)


def test_all_suites_pass():
    results = run_suites()
    assert [r.name for r in results] == list(SUITES)
    assert all(r.passed for r in results), [r.line() for r in results]


def test_mu_fault_is_caught():
    res = kkt_suite(mu_fault=1e-3)
    assert not res.passed
    assert "kraft" in res.detail or "kkt" in res.detail


def test_unknown_suite():
    with pytest.raises(KeyError):
        run_suites(["nope"])


def test_check_solution_flags_problems():
    qf = quadratic_form(PenaltyConfig("edt"), 1.0)
    p = np.array([0.6, 0.4])
    sol = solve(qf, p)
    assert check_solution(qf, p, sol.lengths_array(), sol.mu) == ""
    assert check_solution(qf, p, sol.lengths_array()[::-1], sol.mu) != ""
    assert check_solution(qf, p, sol.lengths_array() + 0.1, sol.mu).startswith("kraft")


def test_grid_oracle_is_feasible_upper_bound():
    qf = quadratic_form(PenaltyConfig("edt"), 1.0)
    p = np.array([0.6, 0.4])
    sol = solve(qf, p)
    oracle = grid_oracle_min(qf, p)
    # the oracle value is attained by a Kraft-feasible point, so it cannot beat the optimum
    assert sol.j_soi <= oracle + 1e-12
    assert oracle - sol.j_soi < 1e-3


def test_oracle_problems_deterministic():
    a = random_oracle_problems(4)
    b = random_oracle_problems(4)
    assert all(qa == qb and np.array_equal(pa, pb) for (qa, pa), (qb, pb) in zip(a, b))
    with pytest.raises(ValueError):
        grid_oracle_min(a[0][0], np.full(4, 0.25))
