"""Level/gap sequence (l_j, δ_j) with the κ-selection rule, and its diagnostics.

At step j the gap is the cap δ̂_j (δ̂_0 = max{1, ρ_0}, δ̂_j = ρ_j) whenever
A_j(l_j + δ̂_j) ≤ κ. Otherwise the next level is the point where A_j crosses κ,
found by doubling then bisection and returned from the side where A_j ≤ κ.
The sequence stops once δ_j falls below a quarter cell.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass

import numpy as np

from measure.radon import ball_mass
from wolff.potential import WolffQuery, dyadic_wolff_sum, is_divergent, wolff_potential
from wolff_lab.errors import DomainError, SelectionFailure

from .functional import CylinderSample, LevelFunctional, average_term, base_level

log = logging.getLogger("lab")

CAP_ACCEPTED = "CAP_ACCEPTED"
ROOT_FOUND = "ROOT_FOUND"

MAX_DOUBLINGS = 60


@dataclass(frozen=True)
class KMState:
    j: int
    rho_j: float
    l_j: float
    delta_j: float
    branch: str
    A_value: float
    window_collapsed: bool = False
    evaluations: int = 0
    ball_mass: float | None = None
    gamma_j: float | None = None
    violation: bool = False
    claim_ratio: float | None = None
    split_ratio: float | None = None

    @property
    def l_next(self) -> float:
        return self.l_j + self.delta_j


@dataclass(frozen=True)
class LevelSequence:
    center: tuple
    rho: float
    states: tuple
    natural_termination: bool
    u_value: float
    avg_term: float
    gamma_delta0: float
    terminal_ratio: float | None = None
    wolff_value: float | None = None
    gamma_lJ: float | None = None
    dyadic_wolff: float | None = None
    violations: tuple = ()

    @property
    def l_final(self) -> float:
        return self.states[-1].l_next if self.states else 0.0

    @property
    def delta0(self) -> float:
        return self.states[0].delta_j

    @property
    def max_gamma(self) -> float:
        gammas = [s.gamma_j for s in self.states if s.gamma_j is not None]
        return max(gammas) if gammas else 0.0

    @property
    def has_violation(self) -> bool:
        return bool(self.violations)


def cap_gap(j, rho_j) -> float:
    return max(1.0, rho_j) if j == 0 else rho_j


def select_level(field, j, history, params, center, rho, *, functional=None) -> KMState:
    """Choose δ_j and l_{j+1} = l_j + δ_j so that A_j(l_{j+1}) ≤ κ.

    `functional` may be any nonincreasing callable l ↦ A_j(l); it defaults to
    the level functional of `field` at this step.
    """
    rho_j = rho * 2.0 ** -j
    l_j = base_level(history)
    if functional is None:
        functional = LevelFunctional(field, center, rho_j, l_j, params)
    kappa = params.kappa
    delta_hat = cap_gap(j, rho_j)
    evaluations = 1

    value = functional(l_j + delta_hat)
    if value <= kappa:
        state = KMState(j, rho_j, l_j, delta_hat, CAP_ACCEPTED, value, evaluations=evaluations)
        return _with_collapse(state, functional)

    lo, offset = l_j + delta_hat, 2.0 * delta_hat
    for _ in range(MAX_DOUBLINGS):
        hi_value = functional(l_j + offset)
        evaluations += 1
        if hi_value <= kappa:
            break
        lo = l_j + offset
        offset *= 2.0
    else:
        raise SelectionFailure(
            f"A_{j}(l) stayed above κ = {kappa} after {MAX_DOUBLINGS} doublings of the gap"
        )

    hi = l_j + offset
    while hi - lo > params.tol_root * delta_hat:
        mid = 0.5 * (lo + hi)
        mid_value = functional(mid)
        evaluations += 1
        if mid_value > kappa:
            lo = mid
        else:
            hi, hi_value = mid, mid_value
    log.debug("j=%d: A_j crossed κ between %.17g and %.17g after %d evaluations", j, lo, hi, evaluations)
    state = KMState(j, rho_j, l_j, hi - l_j, ROOT_FOUND, hi_value, evaluations=evaluations)
    return _with_collapse(state, functional)


def _with_collapse(state, functional):
    if not isinstance(functional, LevelFunctional):
        return state
    collapsed = functional.terms(state.l_next).collapsed
    if collapsed:
        log.warning("j=%d: intrinsic time window shorter than one step; using the center level only", state.j)
    return dataclasses.replace(state, window_collapsed=collapsed)


def recursion_gamma(state, previous, mass, p, n):
    """(γ_j, violation) for δ_j ≤ ½δ_{j−1} + ρ_j + γ_j (ρ_j^{p−n} μ(B_j))^{1/(p−1)}."""
    excess = state.delta_j - 0.5 * previous.delta_j - state.rho_j
    if excess <= 0:
        return 0.0, False
    if mass <= 0:
        return math.inf, True
    return excess / (state.rho_j ** (p - n) * mass) ** (1.0 / (p - 1.0)), False


def _diagnose(state, previous, functional, mu, y, params):
    p, n = params.p, params.n
    changes = {}
    if mu is not None:
        mass = ball_mass(mu, y, state.rho_j)
        gamma, violation = recursion_gamma(state, previous, mass, p, n)
        changes.update(ball_mass=mass, gamma_j=gamma, violation=violation)
        if violation:
            log.warning("j=%d: gap exceeds ½δ_{j−1} + ρ_j with no measure in B_j", state.j)
    if state.delta_j > 0.5 * previous.delta_j and state.delta_j > state.rho_j:
        measure = functional.level_set_measure(state.delta_j)
        changes["claim_ratio"] = (state.delta_j ** (p - 2.0) * state.rho_j ** -(p + n) * measure
                                  / params.kappa)
        split = functional.terms(state.l_next, below=params.eps_split).first
        changes["split_ratio"] = split / (2.0 ** n * params.eps_split ** params.q_exponent * params.kappa)
    return dataclasses.replace(state, **changes)


def run_iteration(field, center, rho, params, *, j_max=None, mu=None, wolff_value=None) -> LevelSequence:
    """Run the level iteration at (y, s) with radius ρ on a solved field.

    With `mu` given, every state j ≥ 1 carries μ(B_j) and its empirical γ_j,
    and the sequence carries γ for the summed estimate
    l_J ≤ γ(δ_0 + ρ + W^μ_p(y, 2ρ)) together with the dyadic sum over the
    radii ρ_1, …, ρ_J that the recursion actually visited.
    """
    y, s = center
    domain = field.domain
    if not rho > 0:
        raise DomainError(f"radius must be positive, got {rho}")
    if not (domain.contains_ball(y, 2.0 * rho) and domain.contains_interval(s - 4.0 * rho ** 2, s + 4.0 * rho ** 2)):
        raise DomainError(f"B_2ρ(y) × (s − 4ρ², s + 4ρ²) is not inside the domain for y={y}, s={s}, ρ={rho}")
    j_max = params.j_max if j_max is None else j_max
    floor = 0.25 * domain.h

    states = []
    natural = False
    for j in range(j_max + 1):
        functional = LevelFunctional(field, center, rho * 2.0 ** -j, base_level(states), params)
        state = select_level(field, j, states, params, center, rho, functional=functional)
        if j >= 1:
            state = _diagnose(state, states[-1], functional, mu, y, params)
        states.append(state)
        if state.delta_j < floor:
            natural = True
            break
    if not natural:
        log.info("Level iteration at y=%s s=%g reached j_max=%d before the resolution floor", y, s, j_max)

    avg = average_term(field, center, rho, params)
    delta0 = states[0].delta_j
    gamma_delta0 = delta0 / (avg + 1.0 + rho)
    last = states[-1]

    terminal = None
    if natural:
        T = last.delta_j ** (2.0 - params.p) * last.rho_j ** params.p
        sample = CylinderSample(field, center, last.rho_j)
        integral = sample.excess_integral(last.l_next, T, params.q_exponent)
        bound = params.kappa * last.delta_j ** (1.0 + params.lam * (params.p - 1.0))
        terminal = integral / last.rho_j ** (params.n + params.p) / bound

    wolff, gamma_lJ = wolff_value, None
    if mu is not None and wolff is None:
        wolff = wolff_potential(mu, WolffQuery(y, 2.0 * rho, params.p, params.n))
    if wolff is not None:
        gamma_lJ = None if is_divergent(wolff) else last.l_next / (delta0 + rho + wolff)
    dyadic = None if mu is None else dyadic_wolff_sum(mu, y, rho, params.p, params.n, len(states) - 1)

    violations = tuple(f"j={st.j}: positive gap excess with μ(B_j) = 0" for st in states if st.violation)
    sequence = LevelSequence(
        center=(tuple(np.atleast_1d(np.asarray(y, dtype=float))), float(s)),
        rho=rho,
        states=tuple(states),
        natural_termination=natural,
        u_value=field.cell_value(y, s),
        avg_term=avg,
        gamma_delta0=gamma_delta0,
        terminal_ratio=terminal,
        wolff_value=wolff,
        gamma_lJ=gamma_lJ,
        dyadic_wolff=dyadic,
        violations=violations,
    )
    log.info("Level iteration at y=%s s=%g: %d states, l_J = %.6g, max γ_j = %.3g",
             y, s, len(states), sequence.l_final, sequence.max_gamma)
    return sequence
