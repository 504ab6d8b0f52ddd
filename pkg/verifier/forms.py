import numpy as np
from django import forms
from django.core.exceptions import ValidationError

from solver.grid import BOUNDARY_KINDS, INITIAL_KINDS


class FloatListField(forms.Field):
    """A point: a list of numbers, or a single number for n = 1."""

    def to_python(self, value):
        if value in self.empty_values:
            return ()
        if isinstance(value, bool):
            raise ValidationError("Expected a number or a list of numbers.")
        if isinstance(value, (int, float)):
            return (float(value),)
        if not isinstance(value, (list, tuple)) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
        ):
            raise ValidationError("Expected a number or a list of numbers.")
        return tuple(float(v) for v in value)


class DensityField(forms.Field):
    """A constant density, or a nested list with one value per density cell."""

    def to_python(self, value):
        if value in self.empty_values:
            return None
        if isinstance(value, bool):
            raise ValidationError("Density must be a number or a nested list of numbers.")
        if isinstance(value, (int, float)):
            return float(value)
        try:
            values = np.asarray(value, dtype=float)
        except (TypeError, ValueError):
            raise ValidationError("Density must be a number or a nested list of numbers.")
        if values.ndim == 0 or len(set(values.shape)) != 1:
            raise ValidationError("Density grid must have the same number of cells along every axis.")
        return values.tolist()

    def validate(self, value):
        super().validate(value)
        if value is not None and not (np.all(np.isfinite(value)) and np.all(np.asarray(value) >= 0)):
            raise ValidationError("Density values must be finite and nonnegative.")


class StrictForm(forms.Form):
    """Form over one TOML table; keys it does not declare are rejected by name."""

    allowed_tables = ()

    def clean(self):
        cleaned = super().clean()
        unknown = sorted(set(self.data) - set(self.fields) - set(self.allowed_tables))
        if unknown:
            raise ValidationError(f"Unknown key(s): {', '.join(unknown)}.", code="unknown")
        return cleaned


class ScenarioForm(StrictForm):
    allowed_tables = ("domain", "initial", "boundary", "measure", "point", "rung", "wolff")

    name = forms.CharField(max_length=64)
    n = forms.IntegerField()
    p = forms.FloatField()
    kappa = forms.FloatField(required=False)
    eps_split = forms.FloatField(required=False)
    c1 = forms.FloatField(required=False)
    c2 = forms.FloatField(required=False)
    k_cutoff = forms.FloatField(required=False)
    eps_reg = forms.FloatField(required=False)
    tol_root = forms.FloatField(required=False)
    tol_newton = forms.FloatField(required=False)
    max_newton_iterations = forms.IntegerField(required=False)
    gamma_cap = forms.FloatField(required=False)
    j_max = forms.IntegerField(required=False)

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        # `lambda` is a keyword, so it cannot be declared as a class attribute.
        self.fields["lambda"] = forms.FloatField()

    def clean_name(self):
        name = (self.cleaned_data.get("name") or "").strip()
        if not name or not all(ch.isalnum() or ch in "-_." for ch in name):
            raise ValidationError("Name must be non-empty and use only letters, digits, '-', '_' or '.'.")
        return name


class DomainForm(StrictForm):
    lower = forms.FloatField(required=False)
    side_length = forms.FloatField()
    cells_per_axis = forms.IntegerField()
    t_final = forms.FloatField()
    dt = forms.FloatField()

    def clean_lower(self):
        lower = self.cleaned_data.get("lower")
        return 0.0 if lower is None else lower


class InitialForm(StrictForm):
    kind = forms.ChoiceField(choices=[(k, k) for k in INITIAL_KINDS])
    value = forms.FloatField(required=False)
    center = FloatListField(required=False)
    width = forms.FloatField(required=False)
    amplitude = forms.FloatField(required=False)
    slope = FloatListField(required=False)
    offset = forms.FloatField(required=False)

    def clean_width(self):
        width = self.cleaned_data.get("width")
        if width is not None and width <= 0:
            raise ValidationError("Width must be positive.")
        return width

    def clean(self):
        cleaned = super().clean()
        kind = cleaned.get("kind")
        if kind == "gaussian" and not cleaned.get("center"):
            self.add_error("center", "A gaussian needs a center.")
        if kind == "linear" and not cleaned.get("slope"):
            self.add_error("slope", "A linear profile needs a slope.")
        return cleaned


class BoundaryForm(StrictForm):
    kind = forms.ChoiceField(choices=[(k, k) for k in BOUNDARY_KINDS])
    value = forms.FloatField(required=False)


class MeasureForm(StrictForm):
    allowed_tables = ("atom",)

    density = DensityField(required=False)


class AtomForm(StrictForm):
    x = FloatListField()
    mass = forms.FloatField(min_value=0.0)


class PointForm(StrictForm):
    y = FloatListField()
    s = forms.FloatField()
    rho = forms.FloatField()

    def clean_rho(self):
        rho = self.cleaned_data.get("rho")
        if rho is not None and not 0 < rho < 1:
            raise ValidationError("ρ must lie in (0, 1).")
        return rho


class RungForm(StrictForm):
    cells_per_axis = forms.IntegerField(min_value=1)
    dt = forms.FloatField()

    def clean_dt(self):
        dt = self.cleaned_data.get("dt")
        if dt is not None and dt <= 0:
            raise ValidationError("dt must be positive.")
        return dt


class WolffQueryForm(StrictForm):
    x = FloatListField()
    R = forms.FloatField()

    def clean_R(self):
        R = self.cleaned_data.get("R")
        if R is not None and R <= 0:
            raise ValidationError("R must be positive.")
        return R
