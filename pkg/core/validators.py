import math

from django.core.exceptions import ValidationError


def _finite(*values):
    return all(isinstance(v, (int, float)) and math.isfinite(v) for v in values)


class DegenerateExponentValidator:
    def validate(self, params, domain=None):
        if not (_finite(params.p) and params.p >= 2):
            raise ValidationError("Exponent must satisfy p ≥ 2 (degenerate range).", code="p ≥ 2")

    def get_help_text(self):
        return "p must be at least 2; p = 2 is only meant for solver validation."


class DimensionValidator:
    def __init__(self, dimensions=(1, 2)):
        self.dimensions = tuple(dimensions)

    def validate(self, params, domain=None):
        if params.n not in self.dimensions:
            raise ValidationError(
                f"Spatial dimension must be one of {self.dimensions}.", code="n ∈ {1, 2}"
            )

    def get_help_text(self):
        return f"n must be one of {self.dimensions}."


class LambdaRangeValidator:
    """
    λ ranges over (0, 1/n], the range for which the pointwise estimate holds.
    """
    def validate(self, params, domain=None):
        if not (_finite(params.lam) and params.lam > 0):
            raise ValidationError("λ must be positive.", code="λ > 0")
        if isinstance(params.n, int) and params.n >= 1 and params.lam > 1.0 / params.n * (1 + 1e-12):
            raise ValidationError(f"λ = {params.lam} exceeds 1/n = {1.0 / params.n}.", code="λ ≤ 1/n")

    def get_help_text(self):
        return "λ must lie in (0, 1/n]."


class OpenUnitIntervalValidator:
    def __init__(self, field, label=None):
        self.field = field
        self.label = label or field

    def validate(self, params, domain=None):
        value = getattr(params, self.field)
        if not (_finite(value) and 0 < value < 1):
            raise ValidationError(f"{self.label} must lie in (0, 1).", code=f"0 < {self.label} < 1")

    def get_help_text(self):
        return f"{self.label} must lie strictly between 0 and 1."


class CutoffExponentValidator:
    def validate(self, params, domain=None):
        if not (_finite(params.k_cutoff, params.p) and params.k_cutoff > params.p):
            raise ValidationError("Cutoff exponent must satisfy k > p.", code="k > p")

    def get_help_text(self):
        return "k must exceed p; the default is p + 2."


class StructureConstantsValidator:
    """
    Model case: the flux is |ζ|^{p−2}ζ, so c1 = c2 = 1. Other values are
    recorded for reporting only, but must still satisfy 0 < c1 ≤ c2.
    """
    def validate(self, params, domain=None):
        if not (_finite(params.c1, params.c2) and 0 < params.c1 <= params.c2):
            raise ValidationError("Structure constants must satisfy 0 < c1 ≤ c2.", code="c1 ≤ c2")

    def get_help_text(self):
        return "c1 and c2 are positive with c1 ≤ c2 (both 1 in the model case)."


class ToleranceValidator:
    def validate(self, params, domain=None):
        errors = []
        for name in ("eps_reg", "tol_root", "tol_newton", "gamma_cap"):
            value = getattr(params, name)
            if not (_finite(value) and value > 0):
                errors.append(ValidationError(f"{name} must be a positive number.", code=f"{name} > 0"))
        for name in ("max_newton_iterations", "j_max"):
            value = getattr(params, name)
            if not (isinstance(value, int) and value >= 1):
                errors.append(ValidationError(f"{name} must be a positive integer.", code=f"{name} ≥ 1"))
        if errors:
            raise ValidationError(errors)

    def get_help_text(self):
        return "Tolerances and caps must be positive."


class DomainGeometryValidator:
    def __init__(self, min_cells=4):
        self.min_cells = min_cells

    def validate(self, params, domain=None):
        if domain is None:
            return
        errors = []
        if not (isinstance(domain.cells_per_axis, int) and domain.cells_per_axis >= self.min_cells):
            errors.append(ValidationError(
                f"cells_per_axis must be at least {self.min_cells}.", code=f"cells_per_axis ≥ {self.min_cells}"))
        if not (_finite(domain.side_length) and domain.side_length > 0):
            errors.append(ValidationError("side_length must be positive (h > 0).", code="h > 0"))
        if not _finite(domain.lower):
            errors.append(ValidationError("lower must be finite.", code="lower finite"))
        if not (_finite(domain.dt) and domain.dt > 0):
            errors.append(ValidationError("dt must be positive.", code="dt > 0"))
        elif not (_finite(domain.t_final) and domain.t_final >= domain.dt):
            errors.append(ValidationError("t_final must be at least dt.", code="t_final ≥ dt"))
        elif abs(domain.t_final / domain.dt - round(domain.t_final / domain.dt)) > 1e-9 * domain.t_final / domain.dt:
            errors.append(ValidationError("t_final must be a whole number of steps dt.", code="t_final / dt integral"))
        if errors:
            raise ValidationError(errors)

    def get_help_text(self):
        return f"At least {self.min_cells} cells per axis, dt > 0 and t_final a multiple of dt."
