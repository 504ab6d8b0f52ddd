import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import hyp2f1

from core.params import Domain, Params
from measure.radon import RadonMeasure
from solver.grid import GridField
from solver.stepper import solve
from wolff_lab.errors import DomainError, SelectionFailure

from .functional import A_functional, Cylinder, LevelFunctional, average_term
from .functions import G, cutoff, psi, psi_power_constants, psi_z, rho_lambda
from .iteration import CAP_ACCEPTED, ROOT_FOUND, run_iteration, select_level


def psi_oracle(z, lam, p):
    a, b = (1 - lam) / p, 2 * lam / p
    return z ** (1 - b) / (1 - b) * hyp2f1(a, 1 - b, 2 - b, -z)


class GTests(SimpleTestCase):
    def test_examples(self):
        self.assertEqual(G(1.0, 0.3), 1.0)
        self.assertEqual(G(2.0, 0.25), 2.0)
        self.assertAlmostEqual(G(0.25, 0.25), 0.125, places=15)
        self.assertEqual(G(0.0, 0.5), 0.0)

    def test_negative_argument_is_rejected(self):
        with self.assertRaises(DomainError):
            G(-0.1, 0.5)

    def test_arrays(self):
        np.testing.assert_allclose(G(np.array([0.0, 0.25, 4.0]), 0.25), [0.0, 0.125, 4.0])


class PsiTests(SimpleTestCase):
    def test_below_level_is_zero(self):
        self.assertEqual(psi(1.0, 2.0, 0.5, 0.25, 3.0), 0.0)
        self.assertEqual(psi(2.0, 2.0, 0.5, 0.25, 3.0), 0.0)

    def test_lambda_zero_has_closed_form(self):
        expected = 1.5 * (2 ** (2 / 3) - 1)
        self.assertAlmostEqual(psi(1.0, 0.0, 1.0, 0.0, 3.0), expected, places=12)

    def test_matches_hypergeometric_form(self):
        for z in (0.01, 0.2, 1.0, 5.0, 40.0):
            with self.subTest(z=z):
                self.assertTrue(math.isclose(psi_z(z, 0.5, 3.0), psi_oracle(z, 0.5, 3.0), rel_tol=1e-9))

    def test_gap_scaling(self):
        self.assertAlmostEqual(psi(3.0, 1.0, 0.5, 0.5, 3.0), psi_z(4.0, 0.5, 3.0), places=14)

    def test_nonpositive_gap_is_rejected(self):
        with self.assertRaises(DomainError):
            psi(1.0, 0.0, 0.0, 0.5, 3.0)

    def test_rho_lambda(self):
        self.assertEqual(rho_lambda(3.0, 0.5), 2.0)
        self.assertAlmostEqual(rho_lambda(4.0, 0.0), 4.0 / 3.0)

    def test_power_constants_bound_the_excess(self):
        p, lam, eps = 3.0, 0.5, 0.1
        c, c_eps = psi_power_constants(p, lam, eps)
        r = rho_lambda(p, lam)
        self.assertGreater(c, 0)
        rng = np.random.default_rng(7)
        for z in np.exp(rng.uniform(math.log(1e-4), math.log(1e4), 40)):
            value = psi_z(z, lam, p) ** r
            self.assertLessEqual(c * value, z * (1 + 1e-6))
            if z >= eps:
                self.assertLessEqual(z, c_eps * value * (1 + 1e-6))


class CutoffTests(SimpleTestCase):
    def test_center_and_outside(self):
        self.assertEqual(cutoff(((0.5,), 0.2), ((0.5,), 0.2), 0.1, 1.0, 3.0), 1.0)
        self.assertEqual(cutoff(((0.65,), 0.2), ((0.5,), 0.2), 0.1, 1.0, 3.0), 0.0)
        self.assertEqual(cutoff(((0.5,), 0.3), ((0.5,), 0.2), 0.1, 1.0, 3.0), 0.0)

    def test_equals_one_on_inner_cylinder(self):
        rho, delta, p = 0.2, 0.5, 3.0
        T = delta ** (2 - p) * rho ** p
        self.assertEqual(cutoff(((0.09, 0.0), 0.7 * T), ((0.0, 0.0), 0.0), rho, delta, p), 1.0)

    def test_gradient_bounds(self):
        rho, delta, p = 0.2, 0.5, 3.0
        T = delta ** (2 - p) * rho ** p
        r = np.linspace(0.0, 1.2 * rho, 4001)
        space = np.array([cutoff(((x,), 0.0), ((0.0,), 0.0), rho, delta, p) for x in r])
        self.assertLessEqual(np.max(np.abs(np.diff(space) / np.diff(r))), 8 / rho)
        t = np.linspace(0.0, 1.2 * T, 4001)
        time = np.array([cutoff(((0.0,), tau), ((0.0,), 0.0), rho, delta, p) for tau in t])
        self.assertLessEqual(np.max(np.abs(np.diff(time) / np.diff(t))), 8 * delta ** (p - 2) * rho ** -p)
        self.assertTrue(np.all((space >= 0) & (space <= 1)))


def small_domain():
    return Domain(side_length=1.0, cells_per_axis=12, t_final=0.3, dt=0.1)


def brute_force_A(field, center, rho_j, l_j, l, params):
    domain = field.domain
    p, n, k, lam = params.p, params.n, params.k_cutoff, params.lam
    q = (1 + lam) * (p - 1)
    d = l - l_j
    T = d ** (2 - p) * rho_j ** p
    y_hat = domain.axis_centers()[domain.cell_index(center[0])[0]]
    s_hat = domain.times[domain.nearest_level(center[1])]
    h = domain.h
    first = 0.0
    slices = []
    for level, t in enumerate(domain.times):
        lo = max(t - domain.dt / 2, 0.0, s_hat - T)
        hi = min(t + domain.dt / 2, domain.t_final, s_hat + T)
        weight = max(hi - lo, 0.0)
        if weight <= 0:
            continue
        total = 0.0
        for i, x in enumerate(domain.axis_centers()):
            if abs(x - y_hat) > rho_j + 1e-12 * h:
                continue
            u = field.values[level, i]
            if u <= l_j:
                continue
            xi = cutoff(((x,), t), ((y_hat,), s_hat), rho_j, d, p)
            ratio = (u - l_j) / d
            first += ratio ** q * xi ** (k - p) * weight * h
            total += G(ratio, lam) * xi ** k * h
        slices.append(total)
    return d ** (p - 2) / rho_j ** (n + p) * first + max(slices) / rho_j ** n


class LevelFunctionalTests(SimpleTestCase):
    def test_empty_level_set_gives_zero(self):
        params = Params.from_settings(n=1, p=3.0, lam=0.5)
        field = GridField.constant(small_domain(), 1, 0.5)
        functional = LevelFunctional(field, ((0.5,), 0.1), 0.3, 1.0, params)
        self.assertEqual(functional(2.0), 0.0)

    def test_matches_direct_summation(self):
        domain = small_domain()
        rng = np.random.default_rng(2024)
        for trial in range(50):
            p = float(rng.uniform(2.0, 3.0))
            params = Params.from_settings(n=1, p=p, lam=float(rng.uniform(0.05, 1.0)))
            field = GridField(domain, 1, rng.uniform(0.0, 3.0, size=(4, 12)))
            rho_j = float(rng.uniform(0.1, 0.3))
            l_j = float(rng.uniform(0.0, 1.0))
            l = l_j + rho_j + float(rng.uniform(0.0, 2.0))
            center = ((0.5,), 0.1)
            got = LevelFunctional(field, center, rho_j, l_j, params)(l)
            expected = brute_force_A(field, center, rho_j, l_j, l, params)
            with self.subTest(trial=trial):
                self.assertTrue(math.isclose(got, expected, rel_tol=1e-12, abs_tol=1e-14))

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1), p=st.floats(min_value=2.0, max_value=4.0))
    def test_nonincreasing_in_level(self, seed, p):
        rng = np.random.default_rng(seed)
        domain = Domain(side_length=1.0, cells_per_axis=16, t_final=0.5, dt=0.05)
        params = Params.from_settings(n=1, p=p, lam=0.5)
        field = GridField(domain, 1, rng.uniform(0.0, 5.0, size=(domain.n_levels, 16)))
        functional = LevelFunctional(field, ((0.5,), 0.25), 0.2, 0.0, params)
        values = [functional(l) for l in np.linspace(0.2, 20.0, 80)]
        for before, after in zip(values, values[1:]):
            self.assertLessEqual(after, before * (1 + 1e-12))

    def test_below_the_admissible_range_is_rejected(self):
        params = Params.from_settings(n=1, p=3.0, lam=0.5)
        functional = LevelFunctional(GridField.constant(small_domain(), 1, 0.0), ((0.5,), 0.1), 0.3, 0.0, params)
        with self.assertRaises(DomainError):
            functional(0.1)

    def test_cylinder_extent(self):
        cylinder = Cylinder(((0.5,), 0.2), 0.5, 2.0, 3.0)
        self.assertAlmostEqual(cylinder.half_height, 0.0625)
        self.assertTrue(cylinder.inside(Domain(1.0, 8, 0.5, 0.05)))

    def test_average_term_of_a_constant(self):
        params = Params.from_settings(n=1, p=3.0, lam=0.5)
        domain = Domain(side_length=1.0, cells_per_axis=10, t_final=1.0, dt=0.01)
        field = GridField.constant(domain, 1, 2.0)
        # ρ = 0.05 keeps only the center cell; the window (s ± ρ^3) lies inside one level.
        rho = 0.05
        expected = (2.0 ** params.q_exponent * 0.1 * 2 * rho ** 3 / rho ** 4) ** params.root_exponent
        self.assertAlmostEqual(average_term(field, ((0.55,), 0.5), rho, params), expected, places=9)


class SelectLevelTests(SimpleTestCase):
    def setUp(self):
        self.params = Params.from_settings(n=1, p=3.0, lam=0.5, kappa=0.1, tol_root=1e-6)

    def test_cap_is_accepted_when_small(self):
        state = select_level(None, 0, [], self.params, ((0.5,), 0.2), 0.2, functional=lambda l: 0.05)
        self.assertEqual(state.branch, CAP_ACCEPTED)
        self.assertEqual(state.delta_j, 1.0)

    def test_root_of_surrogate(self):
        state = select_level(None, 0, [], self.params, ((0.5,), 0.2), 0.2, functional=lambda l: 3.0 / l)
        self.assertEqual(state.branch, ROOT_FOUND)
        self.assertGreaterEqual(state.l_next, 30.0)
        self.assertLessEqual(state.l_next - 30.0, 1e-6)
        self.assertLessEqual(state.A_value, self.params.kappa)

    def test_later_steps_cap_at_the_radius(self):
        previous = select_level(None, 0, [], self.params, ((0.5,), 0.2), 0.2, functional=lambda l: 0.0)
        state = select_level(None, 2, [previous], self.params, ((0.5,), 0.2), 0.2, functional=lambda l: 0.0)
        self.assertEqual(state.l_j, 1.0)
        self.assertAlmostEqual(state.delta_j, 0.05)

    def test_non_decaying_functional_fails(self):
        with self.assertRaises(SelectionFailure):
            select_level(None, 0, [], self.params, ((0.5,), 0.2), 0.2, functional=lambda l: 1.0)


class RunIterationTests(SimpleTestCase):
    def setUp(self):
        self.params = Params.from_settings(n=1, p=3.0, lam=0.5)
        self.domain = Domain(side_length=1.0, cells_per_axis=16, t_final=0.5, dt=0.05)
        self.center = ((0.5,), 0.25)

    def test_zero_field_accepts_every_cap(self):
        field = GridField.constant(self.domain, 1, 0.0)
        sequence = run_iteration(field, self.center, 0.2, self.params)
        self.assertTrue(sequence.natural_termination)
        self.assertTrue(all(s.branch == CAP_ACCEPTED for s in sequence.states))
        expected = 1.0 + sum(0.2 * 2.0 ** -j for j in range(1, len(sequence.states)))
        self.assertAlmostEqual(sequence.l_final, expected, places=12)
        self.assertIsNone(sequence.dyadic_wolff)

    def test_constant_field_branch_pattern(self):
        c = 3.0
        field = GridField.constant(self.domain, 1, c)
        sequence = run_iteration(field, self.center, 0.2, self.params)
        self.assertGreater(sequence.l_final, c)
        for state in sequence.states:
            self.assertLessEqual(state.A_value, self.params.kappa)
            if state.l_j >= c:
                self.assertEqual(state.branch, CAP_ACCEPTED)
                self.assertEqual(state.A_value, 0.0)

    def test_containment_is_enforced(self):
        field = GridField.constant(self.domain, 1, 0.0)
        with self.assertRaises(DomainError):
            run_iteration(field, self.center, 0.3, self.params)
        with self.assertRaises(DomainError):
            run_iteration(field, ((0.5,), 0.05), 0.2, self.params)

    def test_atom_scenario(self):
        domain = Domain(side_length=1.0, cells_per_axis=16, t_final=0.4, dt=0.02)
        mu = RadonMeasure.dirac((0.5,), 1.0)
        field = solve(self.params, domain, mu)
        sequence = run_iteration(field, ((0.5,), 0.2), 0.2, self.params, mu=mu)
        self.assertTrue(sequence.natural_termination)
        self.assertFalse(sequence.has_violation)
        self.assertGreaterEqual(sequence.l_final, sequence.u_value)
        self.assertLess(sequence.max_gamma, self.params.gamma_cap)
        self.assertLess(sequence.gamma_delta0, self.params.gamma_cap)
        self.assertIsNotNone(sequence.gamma_lJ)
        for state in sequence.states:
            self.assertLessEqual(state.A_value, self.params.kappa + self.params.tol_root)

    def test_dyadic_sum_over_the_visited_radii(self):
        # unit atom at y, n = 1, p = 3: every term (ρ_j^{p−n} μ(B_j))^{1/(p−1)} equals ρ_j
        domain = Domain(side_length=1.0, cells_per_axis=16, t_final=0.4, dt=0.02)
        mu = RadonMeasure.dirac((0.5,), 1.0)
        field = solve(self.params, domain, mu)
        sequence = run_iteration(field, ((0.5,), 0.2), 0.2, self.params, mu=mu)
        J = len(sequence.states) - 1
        self.assertAlmostEqual(sequence.dyadic_wolff, 0.2 * (1.0 - 2.0 ** -J), places=12)
        self.assertLessEqual(sequence.dyadic_wolff, sequence.wolff_value)

    def test_level_functional_replays_the_history(self):
        domain = Domain(side_length=1.0, cells_per_axis=16, t_final=0.4, dt=0.02)
        mu = RadonMeasure.dirac((0.5,), 1.0)
        field = solve(self.params, domain, mu)
        center, rho = ((0.5,), 0.2), 0.2
        states = run_iteration(field, center, rho, self.params, mu=mu).states
        for state in states:
            history = states[:state.j]
            with self.subTest(j=state.j):
                replayed = A_functional(field, state.j, state.l_next, history, self.params, center, rho)
                self.assertTrue(math.isclose(replayed, state.A_value, rel_tol=1e-6, abs_tol=1e-12))
                higher = A_functional(field, state.j, state.l_next + state.delta_j, history, self.params, center, rho)
                self.assertLessEqual(higher, state.A_value * (1 + 1e-12))
