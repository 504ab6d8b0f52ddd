"""Scalar ingredients of the level iteration: G, ψ, the cutoff ξ_j and the ψ power constants."""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad
from scipy.special import binom

from wolff_lab.errors import DomainError

# ψ integrates z^{−2λ/p} exactly from 0 to this point by its binomial series.
HEAD_END = 0.25
HEAD_TERMS = 40


def G(u, lam):
    """u for u > 1, u^{2−2λ} for 0 < u ≤ 1, 0 at u = 0. Accepts scalars or arrays."""
    arr = np.asarray(u, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("G is defined for nonnegative arguments only")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(arr > 1.0, arr, arr ** (2.0 - 2.0 * lam))
    out = np.where(arr == 0, 0.0, out)
    return float(out) if out.ndim == 0 else out


def _psi_exponents(lam, p):
    return (1.0 - lam) / p, 2.0 * lam / p


def _psi_head(z, a, b):
    """∫_0^z (1+w)^{−a} w^{−b} dw for 0 ≤ z ≤ HEAD_END by the binomial series of (1+w)^{−a}."""
    k = np.arange(HEAD_TERMS)
    terms = binom(-a, k) * z ** (k + 1.0 - b) / (k + 1.0 - b)
    return math.fsum(terms.tolist())


def psi_z(z, lam, p) -> float:
    """∫_0^z (1+w)^{−(1−λ)/p} w^{−2λ/p} dw for z ≥ 0."""
    if z <= 0:
        return 0.0
    a, b = _psi_exponents(lam, p)
    head_end = min(z, HEAD_END)
    head = _psi_head(head_end, a, b)
    if z <= head_end:
        return head
    tail, _ = quad(lambda w: (1.0 + w) ** -a * w ** -b, head_end, z, epsabs=0.0, epsrel=1e-12, limit=200)
    return head + tail


def psi(u, l, delta, lam, p) -> float:
    """(1/δ)[∫_l^u (1+(s−l)/δ)^{−(1−λ)/p} ((s−l)/δ)^{−2λ/p} ds]_+."""
    if not delta > 0:
        raise DomainError(f"gap δ must be positive, got {delta}")
    if u <= l:
        return 0.0
    return psi_z((u - l) / delta, lam, p)


def rho_lambda(p, lam) -> float:
    """Power p/(p−1−λ) linking ψ to the normalized excess (u−l_j)/δ_j."""
    return p / (p - 1.0 - lam)


def psi_power_constants(p, lam, eps, *, samples=400, z_max=1e6):
    """(c, c(ε)) with c·ψ^{ρ(λ)} ≤ z for all z > 0 and z ≤ c(ε)·ψ^{ρ(λ)} for z ≥ ε.

    Both are read off the ratio z/ψ(z)^{ρ(λ)} on a logarithmic z-grid; c also
    takes the large-z limit ρ(λ)^{−ρ(λ)} into account.
    """
    if not 0 < eps:
        raise DomainError(f"ε must be positive, got {eps}")
    r = rho_lambda(p, lam)
    grid = np.geomspace(min(eps, 1e-6), z_max, samples)
    ratio = np.array([z / psi_z(z, lam, p) ** r for z in grid])
    lower = min(float(ratio.min()), r ** -r)
    upper = max(float(ratio[grid >= eps].max()), eps / psi_z(eps, lam, p) ** r)
    return lower, upper


def smoothstep(x):
    """3x² − 2x³ clamped to [0, 1]; C¹ with slope at most 3/2."""
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def cutoff_space(r, rho_j):
    """1 on B_{ρ_j/2}, 0 outside B_{ρ_j}."""
    return smoothstep((rho_j - np.asarray(r, dtype=float)) / (0.5 * rho_j))


def cutoff_time(tau, half_height):
    """1 for |τ| ≤ ¾T, 0 for |τ| ≥ T, where T is the half height of the cylinder."""
    tau = np.abs(np.asarray(tau, dtype=float))
    if half_height <= 0:
        return np.where(tau == 0, 1.0, 0.0)
    return smoothstep((half_height - tau) / (0.25 * half_height))


def cutoff(point, center, rho_j, delta_j, p):
    """ξ_j at point (x, t) for the cylinder Q_{ρ_j}^{(δ_j)} around center (y, s).

    |∇ξ_j| ≤ 3/ρ_j and |∂ξ_j/∂t| ≤ 6 δ_j^{p−2} ρ_j^{−p}.
    """
    x, t = point
    y, s = center
    r = float(np.linalg.norm(np.atleast_1d(np.asarray(x, dtype=float)) - np.atleast_1d(np.asarray(y, dtype=float))))
    half_height = delta_j ** (2.0 - p) * rho_j ** p
    return float(cutoff_space(r, rho_j) * cutoff_time(t - s, half_height))
