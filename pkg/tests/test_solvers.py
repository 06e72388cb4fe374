import numpy as np
import pytest

import tvckit as tk
from tvckit.errors import DomainError, InputError, NumericalError, UnsupportedError
from conftest import DISCOUNT


def household_guess(domain, space, head=1.0, tail=(0.2, 0.1)):
    idx = np.arange(domain.num_points, dtype=float)
    t_max = domain.t_max
    gv = np.interp(idx, [0, 1, t_max - 1, t_max], [head, head, tail[0], tail[1]])
    return tk.StochasticPath(domain, space, np.repeat(gv[:, None], space.m, axis=1))


class TestSolveSpec:
    def test_mode_validation(self, space):
        dom = tk.TimeDomain.discrete(6)
        guess = tk.StochasticPath.constant(dom, space, 1.0)
        with pytest.raises(InputError):
            tk.SolveSpec(horizon=4, guess=guess, mode="other")
        with pytest.raises(InputError):
            tk.SolveSpec(horizon=4, guess=guess, mode="fixed")  # no tail
        with pytest.raises(InputError):
            tk.SolveSpec(horizon=4, guess=guess, tail=np.zeros((2, 2)))

    def test_nonfinite_fixed_values(self, space):
        dom = tk.TimeDomain.discrete(6)
        guess = tk.StochasticPath.constant(dom, space, 1.0)
        with pytest.raises(InputError):
            tk.SolveSpec(horizon=4, guess=guess, mode="fixed",
                         tail=np.array([[np.nan, 1.0], [1.0, 1.0]]))


class TestNewton:
    def test_quadlin_reaches_closed_form(self, quadlin_d, space, params):
        T = 20
        dom = tk.TimeDomain.discrete(T + 2)
        guess = tk.StochasticPath.constant(dom, space, 0.0)
        path, rep = tk.newton_euler_solve(quadlin_d, tk.SolveSpec(horizon=T, guess=guess))
        assert rep.converged
        assert max(rep.iterations) <= 2  # affine system
        assert rep.max_abs_residual <= 1e-10
        expect = tk.quadlin_euler_path(dom, space, params)
        assert np.abs(path.values[: T + 1] - expect.values[: T + 1]).max() <= 1e-8
        assert rep.curvature == ("convex", "convex")

    def test_zero_objective_already_stationary(self, space):
        obj = tk.DiscreteObjective(order=1, eval_fn=lambda p, t, w: 0.0,
                                   partial_fns=(lambda p, t, w: 0.0,
                                                lambda p, t, w: 0.0))
        dom = tk.TimeDomain.discrete(6)
        guess = tk.StochasticPath.constant(dom, space, 3.3)
        path, rep = tk.newton_euler_solve(obj, tk.SolveSpec(horizon=5, guess=guess))
        assert rep.converged
        assert rep.iterations == (0, 0)
        assert np.all(path.values == 3.3)

    def test_household_fixed_mode(self, space):
        live = tk.household_log(DISCOUNT, 2, zero_head=False)
        dom = tk.TimeDomain.discrete(12)
        guess = household_guess(dom, space)
        spec = tk.SolveSpec(horizon=10, guess=guess, mode="fixed",
                            head=np.ones((2, space.m)),
                            tail=np.array([[0.2] * space.m, [0.1] * space.m]))
        path, rep = tk.newton_euler_solve(live, spec)
        assert rep.converged
        assert rep.max_abs_residual <= 1e-10
        assert rep.curvature == ("concave", "concave")
        y = path.values
        # fixed entries are bit-identical to the requested values
        assert np.all(y[:2] == 1.0)
        assert np.all(y[11, :, 0] == 0.2) and np.all(y[12, :, 0] == 0.1)
        for w in range(space.m):
            c = [y[t, w, 0] + y[t + 1, w, 0] - y[t + 2, w, 0] for t in range(11)]
            assert min(c) > 0.0

    def test_guess_domain_mismatch(self, quadlin_d, space):
        dom = tk.TimeDomain.discrete(10)
        guess = tk.StochasticPath.constant(dom, space, 0.0)
        with pytest.raises(InputError):
            tk.newton_euler_solve(quadlin_d, tk.SolveSpec(horizon=10, guess=guess))

    def test_invalid_guess_domain_error(self, space):
        live = tk.household_log(DISCOUNT, 2, zero_head=False)
        dom = tk.TimeDomain.discrete(8)
        vals = np.full((9, space.m), 1.0)
        vals[4] = 5.0  # negative consumption at the guess
        guess = tk.StochasticPath(dom, space, vals)
        spec = tk.SolveSpec(horizon=6, guess=guess, mode="fixed",
                            tail=np.full((2, space.m), 0.2))
        with pytest.raises(DomainError):
            tk.newton_euler_solve(live, spec)


class TestObjectiveValue:
    def test_discrete_sum(self, quadlin_d, space, params):
        dom = tk.TimeDomain.discrete(4)
        path = tk.StochasticPath.constant(dom, space, 0.0)
        # window value at 0: alpha^2 per state; three windows
        expect = 3 * 0.5 * (params.alpha[0] ** 2 + params.alpha[1] ** 2)
        assert tk.objective_value(quadlin_d, path) == pytest.approx(expect)

    def test_neg_inf_allowed(self, household, space):
        dom = tk.TimeDomain.discrete(6)
        vals = np.full((7, space.m), 1.0)
        vals[4] = 5.0
        path = tk.StochasticPath(dom, space, vals)
        assert tk.objective_value(household, path) == float("-inf")

    def test_continuous_integral(self, space):
        obj = tk.dsl_continuous_objective("x0", 0)
        dom = tk.TimeDomain.continuous(1.0, 0.001)
        path = tk.StochasticPath.from_function(dom, space, lambda t, w: t)
        assert tk.objective_value(obj, path) == pytest.approx(0.5, abs=1e-6)


class TestBruteForce:
    def test_concave_vertex(self, space):
        obj = tk.dsl_discrete_objective("0 - (y0 - 3)^2", 0)
        dom = tk.TimeDomain.discrete(0)
        base = tk.StochasticPath.constant(dom, space, 0.0)
        grid = np.arange(0.0, 6.0 + 1e-9, 0.1)
        out = tk.brute_force_solve(obj, base, [0], [grid])
        assert out.path.values[0, 0, 0] == pytest.approx(3.0)

    def test_grid_excluding_optimum_hits_boundary(self, space):
        obj = tk.dsl_discrete_objective("0 - (y0 - 3)^2", 0)
        dom = tk.TimeDomain.discrete(0)
        base = tk.StochasticPath.constant(dom, space, 0.0)
        grid = np.arange(0.0, 2.0 + 1e-9, 0.5)
        out = tk.brute_force_solve(obj, base, [0], [grid])
        assert out.path.values[0, 0, 0] == pytest.approx(2.0)

    def test_budget_guards(self, quadlin_d, space):
        dom = tk.TimeDomain.discrete(10)
        base = tk.StochasticPath.constant(dom, space, 0.0)
        with pytest.raises(InputError):
            tk.brute_force_solve(quadlin_d, base, list(range(7)),
                                 [np.arange(3.0)] * 7)
        with pytest.raises(InputError):
            tk.brute_force_solve(quadlin_d, base, [0, 1, 2],
                                 [np.arange(300.0)] * 3)

    def test_household_oracle_agreement(self, space):
        live = tk.household_log(DISCOUNT, 2, zero_head=False)
        dom = tk.TimeDomain.discrete(6)
        guess = household_guess(dom, space)
        spec = tk.SolveSpec(horizon=4, guess=guess, mode="fixed",
                            head=np.ones((2, space.m)),
                            tail=np.array([[0.2] * space.m, [0.1] * space.m]))
        newton, rep = tk.newton_euler_solve(live, spec)
        assert rep.converged
        grid = np.linspace(0.1, 2.1, 21)
        brute = tk.brute_force_solve(live, newton, [2, 3, 4], [grid] * 3)
        gap = np.abs(brute.path.values[2:5] - newton.values[2:5]).max()
        assert gap <= brute.grid_resolution
        assert brute.value <= tk.objective_value(live, newton) + 1e-12


class TestCorrespondence:
    def test_quadlin_identities(self, quadlin_d):
        pair = tk.discrete_to_continuous(quadlin_d)
        rng = np.random.default_rng(51)
        segments = [(rng.uniform(0.5, 3.0, size=5), int(rng.integers(0, 10)),
                     int(rng.integers(0, 2))) for _ in range(100)]
        rep = tk.correspondence_check(pair, segments)
        assert rep.passed
        assert rep.max_partial_gap <= 1e-10
        assert rep.max_euler_gap <= 1e-10

    def test_substitution_value(self, quadlin_d, params):
        pair = tk.discrete_to_continuous(quadlin_d)
        x, y, z = 1.3, 0.4, -0.2
        jet = np.array([x, y, z])
        win = np.array([x, x + y, x + 2 * y + z])
        assert pair.continuous.value(jet, 0, 0) == pytest.approx(
            quadlin_d.value(win, 0, 0))

    def test_x_only_function(self):
        V = tk.dsl_discrete_objective("y0 ^ 2", 2)
        pair = tk.discrete_to_continuous(V)
        jet = np.array([1.5, 0.7, -0.3])
        assert tk.partial_slot(pair.continuous, 1, jet, 0, 0)[0] == pytest.approx(
            0.0, abs=1e-9)
        assert tk.partial_slot(pair.continuous, 2, jet, 0, 0)[0] == pytest.approx(
            0.0, abs=1e-9)

    def test_dsl_objective_passes(self):
        V = tk.dsl_discrete_objective("ln(y0 + y1) - y2 ^ 2", 2)
        pair = tk.discrete_to_continuous(V)
        rng = np.random.default_rng(52)
        segments = [(rng.uniform(1.0, 2.0, size=5), 0, 0) for _ in range(30)]
        rep = tk.correspondence_check(pair, segments)
        assert rep.passed

    def test_corrupted_partial_fails(self, quadlin_d, params):
        bad = tk.DiscreteObjective(
            order=2, eval_fn=quadlin_d.eval_fn,
            partial_fns=(quadlin_d.partial_fns[0],
                         lambda p, t, w: params.beta[w] + 0.1,
                         quadlin_d.partial_fns[2]))
        pair = tk.CorrespondencePair(discrete=bad,
                                     continuous=tk.discrete_to_continuous(
                                         quadlin_d).continuous)
        rep = tk.correspondence_check(pair, [(np.ones(5), 0, 0)])
        assert not rep.passed
        assert rep.max_partial_gap == pytest.approx(0.1, rel=1e-3)

    def test_neg_inf_samples_skipped(self, household):
        pair = tk.discrete_to_continuous(household)
        segments = [(np.array([0.1, 0.1, 5.0, 0.1, 0.1]), 2, 0)]
        rep = tk.correspondence_check(pair, segments)
        assert rep.verdict == "INCONCLUSIVE"
        assert rep.skipped == 1

    def test_order_guard(self):
        V = tk.dsl_discrete_objective("y0 + y1", 1)
        with pytest.raises(UnsupportedError):
            tk.discrete_to_continuous(V)
