from django.test import SimpleTestCase, override_settings

from .params import Domain, Params
from .validation import get_params_validators, params_help_texts, validate


class ParamsTests(SimpleTestCase):
    def test_defaults_come_from_settings(self):
        params = Params.from_settings(n=1, p=3.0, lam=0.5)
        self.assertEqual(params.kappa, 0.1)
        self.assertEqual(params.k_cutoff, 5.0)
        self.assertEqual((params.c1, params.c2), (1.0, 1.0))

    def test_none_overrides_are_ignored(self):
        params = Params.from_settings(n=1, p=3.0, lam=0.5, kappa=None, gamma_cap=10.0)
        self.assertEqual(params.kappa, 0.1)
        self.assertEqual(params.gamma_cap, 10.0)

    @override_settings(LAB_DEFAULTS={
        "kappa": 0.2, "eps_split": 0.1, "eps_reg": 1e-8, "tol_root": 1e-6, "tol_newton": 1e-9,
        "max_newton_iterations": 50, "gamma_cap": 100.0, "j_max": 40,
    })
    def test_overridden_settings(self):
        params = Params.from_settings(n=2, p=3.0, lam=0.5)
        self.assertEqual(params.kappa, 0.2)
        self.assertEqual(params.max_newton_iterations, 50)

    def test_exponents(self):
        params = Params.from_settings(n=1, p=3.0, lam=0.5)
        self.assertEqual(params.q_exponent, 3.0)
        self.assertEqual(params.root_exponent, 0.5)


class DomainTests(SimpleTestCase):
    def setUp(self):
        self.domain = Domain(side_length=2.0, cells_per_axis=8, t_final=1.0, dt=0.25, lower=-1.0)

    def test_geometry(self):
        d = self.domain
        self.assertEqual(d.h, 0.25)
        self.assertEqual(d.upper, 1.0)
        self.assertEqual(d.steps, 4)
        self.assertEqual(list(d.times), [0.0, 0.25, 0.5, 0.75, 1.0])
        self.assertEqual(d.cell_centers(2).shape, (8, 8, 2))
        self.assertEqual(d.cell_volume(2), 0.0625)

    def test_cell_index(self):
        d = self.domain
        self.assertEqual(d.cell_index((0.1,)), (4,))
        self.assertEqual(d.cell_index((0.0,)), (3,))       # face: lower cell
        self.assertEqual(d.cell_index((-5.0, 5.0)), (0, 7))

    def test_nearest_level_is_clamped(self):
        self.assertEqual(self.domain.nearest_level(0.3), 1)
        self.assertEqual(self.domain.nearest_level(-1.0), 0)
        self.assertEqual(self.domain.nearest_level(9.0), 4)

    def test_containment(self):
        d = self.domain
        self.assertTrue(d.contains_ball((0.0, 0.0), 1.0))
        self.assertFalse(d.contains_ball((0.5,), 0.6))
        self.assertTrue(d.contains_interval(0.0, 1.0))
        self.assertFalse(d.contains_interval(-0.1, 0.5))

    def test_refined_keeps_the_box(self):
        fine = self.domain.refined(16, 0.125)
        self.assertEqual((fine.lower, fine.side_length, fine.t_final), (-1.0, 2.0, 1.0))
        self.assertEqual(fine.h, 0.125)


class ValidationTests(SimpleTestCase):
    def domain(self, **changes):
        return Domain(side_length=1.0, cells_per_axis=8, t_final=0.2, dt=0.05).replace(**changes)

    def test_valid(self):
        result = validate(Params.from_settings(n=2, p=3.0, lam=0.5), self.domain())
        self.assertTrue(result.ok)
        self.assertEqual(str(result), "OK")

    def test_every_violation_is_collected(self):
        params = Params.from_settings(n=1, p=1.5, lam=2.0, kappa=1.5)
        result = validate(params, self.domain(dt=0.03))
        self.assertFalse(result)
        for name in ("p ≥ 2", "λ ≤ 1/n", "0 < κ < 1", "t_final / dt integral"):
            self.assertIn(name, result.names)

    def test_dimension(self):
        result = validate(Params.from_settings(n=3, p=3.0, lam=0.2))
        self.assertEqual(result.names, ["n ∈ {1, 2}"])

    def test_cutoff_exponent(self):
        result = validate(Params.from_settings(n=1, p=3.0, lam=0.5, k_cutoff=3.0))
        self.assertEqual(result.names, ["k > p"])

    def test_geometry(self):
        result = validate(Params.from_settings(n=1, p=3.0, lam=0.5), self.domain(cells_per_axis=2, dt=-1.0))
        self.assertIn("cells_per_axis ≥ 4", result.names)
        self.assertIn("dt > 0", result.names)

    def test_uncheckable_values_are_reported(self):
        result = validate(Params.from_settings(n=1, p=3.0, lam=0.5).replace(p="3"))
        self.assertFalse(result.ok)

    def test_help_texts(self):
        self.assertEqual(len(params_help_texts()), 9)
        validators = get_params_validators([{"NAME": "core.validators.DimensionValidator",
                                             "OPTIONS": {"dimensions": (1,)}}])
        self.assertEqual(validators[0].dimensions, (1,))
