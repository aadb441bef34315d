"""Renormalisation triplets, their scale ladders and the derived constants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy import optimize

from ..errors import ConfigError


@dataclass(frozen=True)
class TripletCheck:
    ok: bool
    violations: tuple[str, ...] = field(default_factory=tuple)

    def __bool__(self) -> bool:
        return self.ok


def validate_triplet(m, gamma, s) -> TripletCheck:
    """Check s > 1 and 1 <= m < gamma < gamma^s < sqrt(m(m+1)); list every violated link."""
    bad = []
    if int(m) != m:
        bad.append(f"m must be an integer, got {m}")
    if not s > 1:
        bad.append(f"s > 1 violated: s = {s}")
    if not 1 <= m:
        bad.append(f"1 <= m violated: m = {m}")
    if not m < gamma:
        bad.append(f"m < gamma violated: m = {m}, gamma = {gamma}")
    if gamma > 0:
        gs = gamma ** s
        if not gamma < gs:
            bad.append(f"gamma < gamma^s violated: gamma = {gamma}, gamma^s = {gs:.6g}")
        beta = math.sqrt(m * (m + 1)) if m >= 0 else float("nan")
        if not gs < beta:
            bad.append(f"gamma^s < sqrt(m(m+1)) violated: gamma^s = {gs:.6g} >= {beta:.6g}")
    else:
        bad.append(f"gamma must be positive, got {gamma}")
    return TripletCheck(not bad, tuple(bad))


@dataclass(frozen=True)
class RenormTriplet:
    """(m, gamma, s) with 1 <= m < gamma < gamma^s < sqrt(m(m+1)) and s > 1."""

    m: int
    gamma: float
    s: float

    def __post_init__(self):
        check = validate_triplet(self.m, self.gamma, self.s)
        if not check:
            raise ConfigError("invalid renormalisation triplet: " + "; ".join(check.violations))
        object.__setattr__(self, "m", int(self.m))

    @property
    def eps(self) -> float:
        return self.gamma / self.m - 1

    @property
    def beta(self) -> float:
        return math.sqrt(self.m * (self.m + 1))


def scales(triplet: RenormTriplet, lam: float):
    """Scale ladder L_k = lam / gamma^k for k = 0..k_max and k_max.

    k_max is the largest k >= 1 with eps * L_k >= 1, or 0 when there is none.
    """
    if not lam > 1:
        raise ConfigError(f"lambda must exceed 1, got {lam}")
    k = 0
    # integer stepping avoids log round-off at the threshold
    while triplet.eps * lam / triplet.gamma ** (k + 1) >= 1:
        k += 1
    return [lam / triplet.gamma ** j for j in range(k + 1)], k


def energy_bound(triplet: RenormTriplet, k0: int) -> float:
    """Closed-form energy ceiling (1/eps^s)(gamma^{s(k0+1)} + beta/(1 - gamma^s/beta))."""
    g, s, b = triplet.gamma, triplet.s, triplet.beta
    return (g ** (s * (k0 + 1)) + b / (1 - g ** s / b)) / triplet.eps ** s


def energy_bound_series(triplet: RenormTriplet, k0: int, k_max: int) -> float:
    """Term-by-term ceiling sum_{k=1}^{k_max+1} (gamma^k/eps)^s B_{k-1}.

    B_j = 1 for j < k0 and beta^-j otherwise; this is the sum the closed
    form is meant to dominate.
    """
    g, s, b, e = triplet.gamma, triplet.s, triplet.beta, triplet.eps
    return sum((g ** k / e) ** s * (1.0 if k - 1 < k0 else b ** -(k - 1))
               for k in range(1, k_max + 2))


def _gamma_condition(gamma: float) -> float:
    return math.log(2) + 4 * math.log(gamma) + 1 - math.sqrt(gamma) / 160


def min_gamma_for_sparsity_bound(rtol: float = 1e-9):
    """Root of ln 2 + 4 ln g + 1 - sqrt(g)/160 on [1e4, 1e10] and the rectangle count sqrt(g)/80 - 2.

    Returns ``(gamma_star, M)``. Above gamma_star the geometric rate
    exp(ln 2 + 4 ln g + 1 - sqrt(g)/160) drops below 1.
    """
    lo, hi = 1e4, 1e10
    if not (_gamma_condition(lo) > 0 > _gamma_condition(hi)):
        raise RuntimeError("bracket does not enclose a sign change")
    root = optimize.bisect(_gamma_condition, lo, hi, xtol=1e-300, rtol=max(rtol, 4 * 2.2e-16),
                           maxiter=500)
    return root, math.sqrt(root) / 80 - 2
