import math

import numpy as np
from django.test import SimpleTestCase

from measure.radon import DensityGrid, RadonMeasure
from wolff_lab.errors import DomainError

from .potential import (
    DIVERGENT, WolffQuery, adaptive_midpoint, dyadic_wolff_sum, format_value, wolff_closed_form_atom,
    wolff_potential,
)


class ClosedFormTests(SimpleTestCase):
    def test_atom_on_the_line(self):
        # n = 1, p = 3: W = m^{1/2} (R − d)
        self.assertAlmostEqual(wolff_closed_form_atom(4.0, 0.1, 0.5, 3.0, 1), 0.8, places=14)
        self.assertEqual(wolff_closed_form_atom(4.0, 0.5, 0.5, 3.0, 1), 0.0)

    def test_atom_in_the_plane(self):
        # n = 2, p = 3: W = 2 m^{1/2} (R^{1/2} − d^{1/2})
        value = wolff_closed_form_atom(1.0, 0.04, 0.25, 3.0, 2)
        self.assertAlmostEqual(value, 2.0 * (0.5 - 0.2), places=14)

    def test_centered_atom_diverges_when_p_at_most_n(self):
        self.assertEqual(wolff_closed_form_atom(1.0, 0.0, 0.5, 2.0, 2), DIVERGENT)
        self.assertTrue(math.isfinite(wolff_closed_form_atom(1.0, 0.0, 0.5, 3.0, 2)))

    def test_invalid_arguments(self):
        with self.assertRaises(DomainError):
            wolff_closed_form_atom(1.0, 0.1, 0.0, 3.0, 1)
        with self.assertRaises(DomainError):
            wolff_closed_form_atom(-1.0, 0.1, 0.5, 3.0, 1)


class WolffPotentialTests(SimpleTestCase):
    def test_zero_measure(self):
        self.assertEqual(wolff_potential(RadonMeasure.zero(1), WolffQuery((0.5,), 0.3, 3.0, 1)), 0.0)

    def test_single_atom_matches_the_closed_form(self):
        mu = RadonMeasure.dirac((0.6,), 2.0)
        q = WolffQuery((0.5,), 0.4, 3.0, 1)
        expected = wolff_closed_form_atom(2.0, 0.1, 0.4, 3.0, 1)
        self.assertAlmostEqual(wolff_potential(mu, q), expected, places=13)
        got = wolff_potential(mu, q, method="quadrature")
        self.assertTrue(math.isclose(got, expected, rel_tol=1e-8))

    def test_divergent_value(self):
        mu = RadonMeasure.dirac((0.5, 0.5), 1.0)
        value = wolff_potential(mu, WolffQuery((0.5, 0.5), 0.2, 2.0, 2))
        self.assertEqual(value, DIVERGENT)
        self.assertEqual(format_value(value), "DIVERGENT")
        self.assertEqual(format_value(0.5), "0.5")

    def test_uniform_density_on_the_line(self):
        # μ = c dx: W(x, R) = (2c)^{1/(p−1)} (p−1)/p R^{p/(p−1)}
        c, R, p = 3.0, 0.5, 3.0
        grid = DensityGrid(np.full(64, c), -1.0, 2.0)
        mu = RadonMeasure(density=grid, n=1)
        expected = (2 * c) ** (1 / (p - 1)) * (p - 1) / p * R ** (p / (p - 1))
        got = wolff_potential(mu, WolffQuery((0.0,), R, p, 1))
        self.assertLess(abs(got - expected) / expected, 1e-2)

    def test_nondecreasing_in_the_radius(self):
        mu = RadonMeasure(atoms=(((0.2,), 1.0), ((0.7,), 0.5)), n=1)
        values = [wolff_potential(mu, WolffQuery((0.5,), R, 3.0, 1)) for R in np.linspace(0.05, 1.0, 20)]
        self.assertEqual(values, sorted(values))

    def test_query_validation(self):
        with self.assertRaises(DomainError):
            WolffQuery((0.5,), 0.0, 3.0, 1)
        with self.assertRaises(DomainError):
            WolffQuery((0.5, 0.5), 0.1, 3.0, 1)

    def test_unknown_method(self):
        mu = RadonMeasure(density=DensityGrid.constant(1.0, 1, 0.0, 1.0), n=1)
        with self.assertRaises(ValueError):
            wolff_potential(mu, WolffQuery((0.5,), 0.1, 3.0, 1), method="simpson")


class DyadicSumTests(SimpleTestCase):
    def test_centered_atom_sums_to_rho(self):
        # ρ_j^{p−n} μ(B_j) = ρ_j^2 for a unit atom with n = 1, p = 3
        mu = RadonMeasure.dirac((0.5,), 1.0)
        self.assertAlmostEqual(dyadic_wolff_sum(mu, (0.5,), 0.2, 3.0, 1, 60), 0.2, places=14)

    def test_bounded_by_the_potential(self):
        mu = RadonMeasure(atoms=(((0.45,), 1.0), ((0.6,), 2.0)), n=1)
        rho = 0.2
        total = dyadic_wolff_sum(mu, (0.5,), rho, 3.0, 1, 40)
        self.assertLessEqual(total, 2.0 * wolff_potential(mu, WolffQuery((0.5,), 2 * rho, 3.0, 1)))


class AdaptiveMidpointTests(SimpleTestCase):
    def test_polynomial(self):
        value = adaptive_midpoint(lambda x: x ** 2, [0.0, 1.0], 1e-12, 40)
        self.assertAlmostEqual(value, 1.0 / 3.0, places=11)

    def test_integrable_singularity(self):
        value = adaptive_midpoint(lambda x: x ** -0.5, [0.0, 1.0], 1e-8, 60)
        self.assertAlmostEqual(value, 2.0, places=4)


class ScalingTests(SimpleTestCase):
    def test_centered_atom_in_the_plane(self):
        mu = RadonMeasure.dirac((0.0, 0.0), 1.0)
        for method in ("exact", "quadrature"):
            value = wolff_potential(mu, WolffQuery((0.0, 0.0), 1.0, 3.0, 2), method=method)
            self.assertTrue(math.isclose(value, 2.0, rel_tol=1e-8), method)

    def test_homogeneity(self):
        mu = RadonMeasure(atoms=(((0.1, 0.2), 1.0), ((0.4, 0.0), 0.5), ((0.3, 0.3), 2.0)), n=2)
        q = WolffQuery((0.25, 0.25), 0.5, 3.0, 2)
        base = wolff_potential(mu, q, method="quadrature")
        rng = np.random.default_rng(7)
        for c in rng.uniform(0.01, 100.0, size=100):
            scaled = wolff_potential(mu.scaled(c), q, method="quadrature")
            self.assertTrue(math.isclose(scaled, c ** 0.5 * base, rel_tol=1e-8), c)


class DensityCenterTests(SimpleTestCase):
    def setUp(self):
        # 4×4 cells of density 1: subcell midpoints sit on a 1/64 lattice offset by 1/128
        self.mu = RadonMeasure(density=DensityGrid(np.ones((4, 4)), 0.0, 1.0), n=2)

    def test_center_on_a_subcell_midpoint_is_not_an_atom(self):
        expected = math.pi * 0.2 ** 2 / 2  # μ(B_r) = π r², p = n = 2
        for center in ((0.5, 0.5), (0.5078125, 0.5078125)):
            value = wolff_potential(self.mu, WolffQuery(center, 0.2, 2.0, 2))
            self.assertTrue(math.isfinite(value), center)
            self.assertLess(abs(value - expected) / expected, 0.05, center)

    def test_corner_midpoint_sees_a_quarter_disc(self):
        value = wolff_potential(self.mu, WolffQuery((0.0078125, 0.0078125), 0.2, 2.0, 2))
        self.assertTrue(math.isfinite(value))
        self.assertGreater(value, 0.0)
        self.assertLess(value, math.pi * 0.2 ** 2 / 4)

    def test_no_closed_form_head_for_a_density_sample(self):
        # p = 3, n = 2: W = π^{1/2} (2/3) R^{3/2}
        R = 0.2
        expected = math.sqrt(math.pi) * 2.0 / 3.0 * R ** 1.5
        value = wolff_potential(self.mu, WolffQuery((0.5078125, 0.5078125), R, 3.0, 2))
        self.assertLess(abs(value - expected) / expected, 0.03)

    def test_atom_on_top_of_a_density_still_diverges(self):
        mu = self.mu + RadonMeasure.dirac((0.5078125, 0.5078125), 0.1)
        self.assertEqual(wolff_potential(mu, WolffQuery((0.5078125, 0.5078125), 0.2, 2.0, 2)), DIVERGENT)

    def test_exact_method_skips_a_center_sample(self):
        value = wolff_potential(self.mu, WolffQuery((0.5078125, 0.5078125), 0.2, 2.0, 2), method="exact")
        self.assertTrue(math.isfinite(value))

    def test_planar_density_of_unit_ball_mass(self):
        # density 1/π: μ(B_r) = r², so W(0, 1) = ∫_0^1 r^{1/2} dr = 2/3 for p = 3, n = 2
        mu = RadonMeasure(density=DensityGrid.constant(1.0 / math.pi, 2, -1.5, 3.0, cells=24), n=2)
        value = wolff_potential(mu, WolffQuery((0.0, 0.0), 1.0, 3.0, 2), rel_tol=1e-6)
        self.assertLess(abs(value - 2.0 / 3.0) / (2.0 / 3.0), 0.02)
