import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st

from core.params import Domain
from wolff_lab.errors import DomainError

from .radon import DensityGrid, RadonMeasure, ball_mass, total_mass


class BallMassTests(SimpleTestCase):
    def test_closed_ball_convention(self):
        mu = RadonMeasure.dirac((0.5,), 1.0)
        self.assertEqual(ball_mass(mu, (0.25,), 0.25), 1.0)
        self.assertEqual(ball_mass(mu, (0.25,), 0.2), 0.0)
        self.assertEqual(ball_mass(mu, (0.5,), 0.0), 1.0)

    def test_negative_radius_is_rejected(self):
        with self.assertRaises(DomainError):
            ball_mass(RadonMeasure.zero(1), (0.5,), -0.1)

    def test_uniform_density(self):
        mu = RadonMeasure(density=DensityGrid.constant(2.0, 1, 0.0, 1.0), n=1)
        self.assertAlmostEqual(ball_mass(mu, (0.5,), 0.25), 1.0, places=12)
        self.assertAlmostEqual(ball_mass(mu, (0.5,), 2.0), 2.0, places=12)

    def test_planar_atoms(self):
        mu = RadonMeasure(atoms=(((0.0, 0.0), 1.0), ((0.0, 0.5), 2.0)), n=2)
        self.assertEqual(ball_mass(mu, (0.0, 0.0), 0.5), 3.0)
        self.assertEqual(ball_mass(mu, (0.0, 0.0), 0.49), 1.0)

    @settings(max_examples=1000, deadline=None)
    @given(
        locations=st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=6),
        center=st.floats(min_value=0.0, max_value=1.0),
    )
    def test_nondecreasing_in_the_radius(self, locations, center):
        mu = RadonMeasure(atoms=tuple(((x,), 1.0) for x in locations), n=1)
        masses = [ball_mass(mu, (center,), r) for r in np.linspace(0.0, 1.5, 40)]
        self.assertEqual(masses, sorted(masses))
        self.assertEqual(masses[-1], float(len(locations)))

    @settings(max_examples=1000, deadline=None)
    @given(
        values=st.lists(st.floats(min_value=0.0, max_value=10.0), min_size=9, max_size=9),
        center=st.tuples(st.floats(min_value=-0.5, max_value=1.5), st.floats(min_value=-0.5, max_value=1.5)),
        radii=st.tuples(st.floats(min_value=0.0, max_value=2.0), st.floats(min_value=0.0, max_value=2.0)),
    )
    def test_density_ball_mass_is_monotone_and_bounded(self, values, center, radii):
        mu = RadonMeasure(density=DensityGrid(np.reshape(values, (3, 3)), 0.0, 1.0), n=2)
        small, large = sorted(radii)
        inner = ball_mass(mu, center, small)
        outer = ball_mass(mu, center, large)
        self.assertLessEqual(inner, outer)
        self.assertLessEqual(outer, total_mass(mu) * (1 + 1e-12) + 1e-12)

    @settings(max_examples=300, deadline=None)
    @given(
        first=st.lists(st.tuples(st.floats(min_value=0.0, max_value=1.0), st.integers(min_value=0, max_value=8)),
                       max_size=5),
        second=st.lists(st.tuples(st.floats(min_value=0.0, max_value=1.0), st.integers(min_value=0, max_value=8)),
                        max_size=5),
        center=st.floats(min_value=0.0, max_value=1.0),
        r=st.floats(min_value=0.0, max_value=1.0),
    )
    def test_additive_over_atoms(self, first, second, center, r):
        mu = RadonMeasure(atoms=tuple(((x,), float(m)) for x, m in first), n=1)
        nu = RadonMeasure(atoms=tuple(((x,), float(m)) for x, m in second), n=1)
        self.assertEqual(ball_mass(mu + nu, (center,), r), ball_mass(mu, (center,), r) + ball_mass(nu, (center,), r))

    @settings(max_examples=300, deadline=None)
    @given(
        first=st.lists(st.floats(min_value=0.0, max_value=5.0), min_size=4, max_size=4),
        second=st.lists(st.floats(min_value=0.0, max_value=5.0), min_size=4, max_size=4),
        center=st.tuples(st.floats(min_value=0.0, max_value=1.0), st.floats(min_value=0.0, max_value=1.0)),
        r=st.floats(min_value=0.0, max_value=1.5),
    )
    def test_additive_over_densities(self, first, second, center, r):
        mu = RadonMeasure(density=DensityGrid(np.reshape(first, (2, 2)), 0.0, 1.0), n=2)
        nu = RadonMeasure(density=DensityGrid(np.reshape(second, (2, 2)), 0.0, 1.0), n=2)
        combined = ball_mass(mu + nu, center, r)
        separate = ball_mass(mu, center, r) + ball_mass(nu, center, r)
        self.assertTrue(math.isclose(combined, separate, rel_tol=1e-9, abs_tol=1e-12))

    def test_planar_density_of_unit_ball_mass(self):
        mu = RadonMeasure(density=DensityGrid.constant(1.0 / math.pi, 2, -1.5, 3.0, cells=24), n=2)
        self.assertAlmostEqual(ball_mass(mu, (0.0, 0.0), 1.0), 1.0, delta=1e-2)

    def test_uniform_planar_density_grows_like_the_area(self):
        c = 2.5
        mu = RadonMeasure(density=DensityGrid.constant(c, 2, 0.0, 2.0, cells=16), n=2)
        for r in (0.25, 0.5, 0.75, 0.95):
            expected = c * math.pi * r ** 2
            with self.subTest(r=r):
                self.assertLess(abs(ball_mass(mu, (1.0, 1.0), r) - expected) / expected, 0.02)


class RadonMeasureTests(SimpleTestCase):
    def test_total_mass(self):
        mu = RadonMeasure.dirac((0.2,), 0.3) + RadonMeasure(density=DensityGrid.constant(2.0, 1, 0.0, 1.0), n=1)
        self.assertAlmostEqual(total_mass(mu), 2.3)
        self.assertAlmostEqual(total_mass(mu.scaled(2.0)), 4.6)
        self.assertFalse(mu.is_atomic)
        self.assertTrue(RadonMeasure.dirac((0.2,)).is_atomic)

    def test_invalid_measures_are_rejected(self):
        with self.assertRaises(DomainError):
            RadonMeasure(atoms=(((0.5,), -1.0),), n=1)
        with self.assertRaises(DomainError):
            RadonMeasure(atoms=(((0.5, 0.5), 1.0),), n=1)
        with self.assertRaises(DomainError):
            RadonMeasure.dirac((0.5,)) + RadonMeasure.dirac((0.5, 0.5))
        with self.assertRaises(DomainError):
            RadonMeasure.dirac((0.5,)).scaled(-1.0)

    def test_cell_masses_keep_the_total(self):
        domain = Domain(side_length=1.0, cells_per_axis=4, t_final=0.1, dt=0.1)
        mu = RadonMeasure.dirac((0.5,), 1.0) + RadonMeasure(density=DensityGrid.constant(1.0, 1, 0.0, 1.0), n=1)
        masses = mu.cell_masses(domain)
        self.assertAlmostEqual(float(masses.sum()), 2.0, places=12)
        # an atom on a face goes to the lower cell
        np.testing.assert_allclose(masses, [0.25, 1.25, 0.25, 0.25], atol=1e-12)

    def test_nearest_support_distance(self):
        grid = DensityGrid(np.array([0.0, 0.0, 1.0, 0.0]), 0.0, 1.0)
        mu = RadonMeasure(density=grid, n=1)
        self.assertAlmostEqual(mu.nearest_support_distance((0.25,)), 0.25)
        self.assertEqual(mu.nearest_support_distance((0.6,)), 0.0)
        self.assertEqual(RadonMeasure.zero(1).nearest_support_distance((0.5,)), np.inf)

    def test_center_atom_mass(self):
        mu = RadonMeasure(atoms=(((0.5,), 1.0), ((0.5,), 0.5), ((0.2,), 3.0)), n=1)
        self.assertEqual(mu.center_atom_mass((0.5,)), 1.5)
        self.assertEqual(mu.center_atom_mass((0.4,)), 0.0)
