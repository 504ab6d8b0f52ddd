"""Pointwise comparison of a solved field with the Wolff-potential bound.

At a point (y, s) with radius ρ the bound reads

    u(y, s) ≤ γ (avg_term + 1 + W^μ_p(y, 2ρ)),

and the empirical γ is u(y, s)_+ divided by the bracket. A divergent Wolff
potential makes the bound vacuous.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from km.functional import average_term
from km.iteration import run_iteration
from logs.utils import audit_log
from wolff.potential import WolffQuery, is_divergent, wolff_potential
from wolff_lab.errors import DomainError

log = logging.getLogger("lab")

BOUNDED = "BOUNDED"
VACUOUS = "VACUOUS"
VIOLATION = "VIOLATION"


@dataclass(frozen=True)
class BracketTerms:
    avg_term: float
    wolff_term: float

    @property
    def bracket(self) -> float:
        return self.avg_term + 1.0 + self.wolff_term

    @property
    def divergent(self) -> bool:
        return is_divergent(self.wolff_term)


@dataclass(frozen=True)
class VerdictEntry:
    scenario: str
    rung: int
    point_index: int
    y: tuple
    s: float
    rho: float
    u_value: float
    avg_term: float
    wolff_term: float
    bracket: float
    gamma_emp: float
    verdict: str
    sequence: object = None


def bracket_terms(field, mu, point, params) -> BracketTerms:
    y, s, rho = point
    domain = field.domain
    if not (domain.contains_ball(y, 2 * rho) and domain.contains_interval(s - 4 * rho ** 2, s + 4 * rho ** 2)):
        raise DomainError(f"B_2ρ(y) × (s − 4ρ², s + 4ρ²) is not inside the domain for y={y}, s={s}, ρ={rho}")
    avg = average_term(field, (y, s), rho, params)
    wolff = wolff_potential(mu, WolffQuery(y, 2.0 * rho, params.p, params.n))
    return BracketTerms(avg, wolff)


def theorem_rhs_bracket(field, mu, point, params) -> float:
    """avg_term + 1 + W^μ_p(y, 2ρ) for point = (y, s, ρ); +inf when the potential diverges."""
    return bracket_terms(field, mu, point, params).bracket


def empirical_gamma(u_value, bracket) -> float:
    if math.isinf(bracket):
        return 0.0
    return max(u_value, 0.0) / bracket


def verify_point(scenario, field, point_index, *, rung=0) -> VerdictEntry:
    """Verdict for one verification point of `scenario` on a solved field, with its level iteration."""
    point = scenario.points[point_index]
    params = scenario.params
    terms = bracket_terms(field, scenario.measure, (point.y, point.s, point.rho), params)
    u_value = field.cell_value(point.y, point.s)
    gamma = empirical_gamma(u_value, terms.bracket)
    sequence = run_iteration(field, point.center, point.rho, params, mu=scenario.measure,
                             wolff_value=terms.wolff_term)

    if terms.divergent:
        verdict = VACUOUS
    elif gamma <= params.gamma_cap and not sequence.has_violation:
        verdict = BOUNDED
    else:
        verdict = VIOLATION
        log.warning("%s rung %d point %d: γ_emp = %.6g (cap %g), recursion flags %s",
                    scenario.name, rung, point_index, gamma, params.gamma_cap, list(sequence.violations))
        audit_log("VIOLATION flag", "fail", scenario=scenario.name,
                  extra=f"rung {rung} point {point_index} gamma {gamma:.6g}")
    return VerdictEntry(
        scenario=scenario.name, rung=rung, point_index=point_index,
        y=point.y, s=point.s, rho=point.rho,
        u_value=u_value, avg_term=terms.avg_term, wolff_term=terms.wolff_term,
        bracket=terms.bracket, gamma_emp=gamma, verdict=verdict, sequence=sequence,
    )


def relative_change(a, b) -> float:
    """|a − b| / max(|a|, |b|); 0 when both vanish or both are infinite."""
    if math.isinf(a) or math.isinf(b):
        return 0.0 if a == b else math.inf
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0 else abs(a - b) / scale


@dataclass(frozen=True)
class RefinementDelta:
    u_delta: float
    bracket_delta: float
    gamma_delta: float
    km_gamma_delta: float

    def stable(self, tolerance) -> bool:
        return max(self.u_delta, self.bracket_delta, self.gamma_delta) <= tolerance


def refinement_delta(coarse: VerdictEntry, fine: VerdictEntry) -> RefinementDelta:
    return RefinementDelta(
        u_delta=relative_change(coarse.u_value, fine.u_value),
        bracket_delta=relative_change(coarse.bracket, fine.bracket),
        gamma_delta=relative_change(coarse.gamma_emp, fine.gamma_emp),
        km_gamma_delta=relative_change(coarse.sequence.max_gamma, fine.sequence.max_gamma),
    )
