"""Collect parameter violations from the validators listed in settings.

Mirrors Django's password validation: validators are configured in
`settings.LAB_PARAMS_VALIDATORS` and each raises `ValidationError`;
`validate()` runs all of them and returns every violation instead of
stopping at the first.
"""

import functools
import logging
from dataclasses import dataclass, field

from django.conf import settings
from django.core.exceptions import ImproperlyConfigured, ValidationError
from django.utils.module_loading import import_string

log = logging.getLogger("lab")


@dataclass(frozen=True)
class Violation:
    name: str
    message: str


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.violations]

    def __bool__(self):
        return self.ok

    def __str__(self):
        if self.ok:
            return "OK"
        return "; ".join(f"{v.name}: {v.message}" for v in self.violations)


@functools.lru_cache(maxsize=None)
def get_default_params_validators():
    return get_params_validators(getattr(settings, "LAB_PARAMS_VALIDATORS", []))


def get_params_validators(validator_config):
    validators = []
    for validator in validator_config:
        try:
            klass = import_string(validator["NAME"])
        except ImportError:
            msg = "The module in NAME could not be imported: %s. Check your LAB_PARAMS_VALIDATORS setting."
            raise ImproperlyConfigured(msg % validator["NAME"])
        validators.append(klass(**validator.get("OPTIONS", {})))
    return validators


def validate(params, domain=None, validators=None) -> ValidationResult:
    """Check every invariant on (params, domain); never raises on numeric input."""
    if validators is None:
        validators = get_default_params_validators()
    violations = []
    for validator in validators:
        try:
            validator.validate(params, domain)
        except ValidationError as error:
            for item in error.error_list:
                message = item.message % item.params if item.params else item.message
                violations.append(Violation(item.code or type(validator).__name__, str(message)))
        except (TypeError, ValueError, AttributeError, ZeroDivisionError, OverflowError) as exc:
            violations.append(Violation(type(validator).__name__, f"not checkable: {exc}"))
    if violations:
        log.info("Parameter validation found %d violation(s): %s",
                 len(violations), ", ".join(v.name for v in violations))
    return ValidationResult(tuple(violations))


def params_help_texts(validators=None):
    if validators is None:
        validators = get_default_params_validators()
    return [validator.get_help_text() for validator in validators]
