import math

import numpy as np
from django.test import SimpleTestCase

from core.params import Domain, Params
from measure.radon import RadonMeasure
from wolff_lab.errors import DomainError, SolverFailure

from .grid import BoundaryCondition, GridField, InitialCondition, boundary_mask, face_difference_matrix
from .reference import explicit_reference, heat_kernel_reference
from .residual import Window, weak_residual
from .stepper import STALL_FACTOR, dirichlet_energy, solve, step


def unit_domain(cells=16, dt=0.01, t_final=0.1, lower=0.0, side_length=1.0):
    return Domain(side_length=side_length, cells_per_axis=cells, t_final=t_final, dt=dt, lower=lower)


class FaceDifferenceTests(SimpleTestCase):
    def test_shape_counts_every_interior_face(self):
        D = face_difference_matrix(5, 2, 0.2)
        self.assertEqual(D.shape, (2 * 5 * 4, 25))

    def test_linear_function_has_constant_differences(self):
        domain = unit_domain(cells=6)
        centers = domain.cell_centers(2)
        v = (2.0 * centers[..., 0] - 3.0 * centers[..., 1]).reshape(-1)
        g = face_difference_matrix(6, 2, domain.h) @ v
        half = g.size // 2
        np.testing.assert_allclose(g[:half], 2.0, atol=1e-12)
        np.testing.assert_allclose(g[half:], -3.0, atol=1e-12)

    def test_boundary_mask_is_the_outer_ring(self):
        mask = boundary_mask(4, 2)
        self.assertEqual(int(mask.sum()), 12)
        self.assertFalse(mask[1, 1])


class GridFieldTests(SimpleTestCase):
    def test_shape_mismatch_is_rejected(self):
        domain = unit_domain(cells=4, dt=0.1, t_final=0.2)
        with self.assertRaises(DomainError):
            GridField(domain, 1, np.zeros((2, 4)))

    def test_cell_value_reads_nearest_level(self):
        domain = unit_domain(cells=4, dt=0.1, t_final=0.2)
        values = np.arange(12, dtype=float).reshape(3, 4)
        field = GridField(domain, 1, values)
        self.assertEqual(field.cell_value((0.3,), 0.11), 5.0)
        self.assertEqual(len(list(field.iter_rows())), 12)

    def test_unknown_initial_kind_is_rejected(self):
        with self.assertRaises(DomainError):
            InitialCondition(kind="parabola")


class StepTests(SimpleTestCase):
    def setUp(self):
        self.params = Params.from_settings(n=1, p=3.0, lam=0.5)
        self.domain = unit_domain()

    def test_zero_data_stays_zero(self):
        v, report = step(np.zeros(16), RadonMeasure.zero(1), self.params, self.domain, level=1)
        np.testing.assert_array_equal(v, np.zeros(16))
        self.assertLessEqual(report.iterations, 1)

    def test_linear_profile_is_stationary(self):
        initial = InitialCondition(kind="linear", slope=(1.0,), offset=0.0)
        field = solve(self.params, self.domain, RadonMeasure.zero(1), initial, BoundaryCondition(kind="initial"))
        drift = np.max(np.abs(field.values - field.values[0]))
        self.assertLessEqual(drift, 1e-12)

    def test_newton_energy_decreases_every_iteration(self):
        mu = RadonMeasure.dirac((0.5,), 1.0)
        _, report = step(np.zeros(16), mu, self.params, self.domain, level=1)
        self.assertTrue(all(b <= a for a, b in zip(report.energies, report.energies[1:])))
        self.assertLessEqual(report.gradient_norm, STALL_FACTOR * self.params.tol_newton * self.domain.h)

    def test_fine_atom_scenario_reaches_the_stopping_rule(self):
        domain = unit_domain(cells=64, dt=0.005, t_final=0.4)
        field = solve(self.params, domain, RadonMeasure.dirac((0.5,), 1.0))
        tol = self.params.tol_newton * domain.h
        self.assertEqual(len(field.reports), domain.n_levels - 1)
        for report in field.reports:
            self.assertLessEqual(report.gradient_norm, STALL_FACTOR * tol)
            self.assertTrue(all(b <= a for a, b in zip(report.energies, report.energies[1:])))

    def test_iteration_cap_raises_with_gradient_norm(self):
        params = self.params.replace(max_newton_iterations=0)
        with self.assertRaises(SolverFailure) as ctx:
            step(np.zeros(16), RadonMeasure.dirac((0.5,), 1.0), params, self.domain, level=3)
        self.assertEqual(ctx.exception.time_level, 3)
        self.assertGreater(ctx.exception.gradient_norm, 0)


class SolveTests(SimpleTestCase):
    def test_zero_scenario_gives_zero_field(self):
        params = Params.from_settings(n=2, p=3.0, lam=0.25)
        field = solve(params, unit_domain(cells=6, dt=0.05, t_final=0.1), RadonMeasure.zero(2))
        self.assertFalse(np.any(field.values))
        self.assertEqual(len(field.reports), 2)

    def test_atom_solution_is_nonnegative_and_grows(self):
        params = Params.from_settings(n=1, p=3.0, lam=0.5)
        domain = unit_domain(dt=0.005, t_final=0.05)
        field = solve(params, domain, RadonMeasure.dirac((0.5,), 1.0))
        tol = 10 * params.tol_newton
        self.assertGreaterEqual(field.values.min(), -tol)
        self.assertTrue(np.all(np.diff(field.values, axis=0) >= -1e-8))
        atom_cell = domain.cell_index((0.5,))
        self.assertGreater(field.values[-1][atom_cell], 0.0)

    def test_atom_solution_matches_explicit_reference(self):
        params = Params.from_settings(n=1, p=3.0, lam=0.5)
        domain = unit_domain(dt=0.005, t_final=0.05)
        mu = RadonMeasure.dirac((0.5,), 1.0)
        implicit = solve(params, domain, mu)
        explicit = explicit_reference(params, domain, mu, dt_explicit=1e-4)
        scale = np.max(np.abs(explicit.values[-1]))
        self.assertGreater(scale, 0)
        self.assertLessEqual(np.max(np.abs(implicit.values[-1] - explicit.values[-1])), 0.25 * scale)

    def test_energy_is_nonincreasing_without_sources(self):
        params = Params.from_settings(n=2, p=3.0, lam=0.25)
        domain = unit_domain(cells=10, dt=0.01, t_final=0.05)
        initial = InitialCondition(kind="gaussian", center=(0.5, 0.5), width=0.15, amplitude=1.0)
        field = solve(params, domain, RadonMeasure.zero(2), initial)
        energies = [dirichlet_energy(field, params, k) for k in range(domain.n_levels)]
        for before, after in zip(energies, energies[1:]):
            self.assertLessEqual(after, before + 1e-12)

    def test_heat_equation_converges_under_refinement(self):
        sigma = 0.25
        initial = InitialCondition(kind="gaussian", center=(0.0,), width=sigma, amplitude=1.0)
        errors = []
        for cells, dt in ((64, 0.004), (128, 0.001)):
            params = Params.from_settings(n=1, p=2.0, lam=0.5, tol_newton=1e-8)
            domain = unit_domain(cells=cells, dt=dt, t_final=0.04, lower=-2.0, side_length=4.0)
            field = solve(params, domain, RadonMeasure.zero(1), initial)
            x = domain.axis_centers()
            exact = heat_kernel_reference(lambda s: math.exp(-s * s / (2 * sigma ** 2)), x, 0.04, -2.0, 2.0)
            errors.append(float(np.max(np.abs(field.values[-1] - exact))))
        self.assertGreaterEqual(errors[0] / errors[1], 3.0)


class ReferenceTests(SimpleTestCase):
    def test_heat_kernel_matches_gaussian_spreading(self):
        sigma, t = 0.3, 0.05
        x = np.linspace(-1.0, 1.0, 9)
        got = heat_kernel_reference(lambda s: math.exp(-s * s / (2 * sigma ** 2)), x, t, -6.0, 6.0)
        var = sigma ** 2 + 2 * t
        expected = sigma / np.sqrt(var) * np.exp(-x ** 2 / (2 * var))
        np.testing.assert_allclose(got, expected, rtol=1e-9, atol=1e-12)

    def test_heat_kernel_at_time_zero_is_the_data(self):
        got = heat_kernel_reference(lambda s: 2.0 * s, [0.25, 0.5], 0.0, 0.0, 1.0)
        np.testing.assert_array_equal(got, [0.5, 1.0])

    def test_explicit_reference_keeps_zero_field(self):
        params = Params.from_settings(n=1, p=3.0, lam=0.5)
        field = explicit_reference(params, unit_domain(t_final=0.02), RadonMeasure.zero(1))
        self.assertFalse(np.any(field.values))


class WeakResidualTests(SimpleTestCase):
    def setUp(self):
        self.params = Params.from_settings(n=1, p=3.0, lam=0.5)
        self.domain = unit_domain(dt=0.01, t_final=0.05)
        self.mu = RadonMeasure.dirac((0.5,), 1.0)
        self.window = Window(0.0, 1.0, 0.0, 0.05)

    def test_solved_field_satisfies_the_identity(self):
        field = solve(self.params, self.domain, self.mu)
        self.assertLessEqual(weak_residual(field, self.mu, self.params, self.window), 10 * self.params.tol_newton)

    def test_perturbed_node_is_detected(self):
        field = solve(self.params, self.domain, self.mu)
        values = field.values.copy()
        values[2, 4] += 1.0
        bumped = GridField(self.domain, 1, values)
        residual = weak_residual(bumped, self.mu, self.params, self.window)
        self.assertGreaterEqual(residual, self.domain.h / self.domain.dt - 1e-6)

    def test_zero_field_reports_the_largest_cell_mass(self):
        mu = RadonMeasure.dirac((0.5,), 0.7) + RadonMeasure.dirac((0.2,), 0.3)
        field = GridField.constant(self.domain, 1, 0.0)
        self.assertAlmostEqual(weak_residual(field, mu, self.params, self.window), 0.7, places=12)

    def test_window_outside_domain_is_rejected(self):
        field = GridField.constant(self.domain, 1, 0.0)
        with self.assertRaises(DomainError):
            weak_residual(field, self.mu, self.params, Window(-0.5, 0.5, 0.0, 0.05))
        with self.assertRaises(DomainError):
            weak_residual(field, self.mu, self.params, Window(0.0, 1.0, 0.0, 0.2))
