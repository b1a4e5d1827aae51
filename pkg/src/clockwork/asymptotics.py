"""Leading-order matched-asymptotic solution of the dimensionless clock model.

Four time regions, for eps -> 0 with rho, phi = O(1) and rho*phi < 1:

    I    tau = O(1)              initial adjustment, beta relaxes to O(eps)
    II   tau = O(1/eps)          induction, gamma falls linearly
    III  tau - tau_sw = O(eps^-1/2)  corner, erf-shaped switchover
    IV   tau = O(1/eps)          after switchover, beta -> 1/2, gamma ~ 0

All evaluators accept scalars or numpy arrays for ``tau``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfcx

from .kinetics import DimensionlessGroups, DomainError, InitialConcentrations, RateConstants

SQRT_HALF_PI = math.sqrt(math.pi / 2.0)


class RegionLabel(str, enum.Enum):
    I = "I"
    II = "II"
    III = "III"
    IV = "IV"


@dataclass(frozen=True)
class AsymptoticSolution:
    """Matching constants of the composite solution for one parameter set."""

    groups: DimensionlessGroups
    region: RegionLabel | None = None

    @property
    def c1(self) -> float:
        """Inhibitor left after the initial transient."""
        return 1.0 - self.groups.rho * self.groups.phi

    @property
    def c2(self) -> float:
        return 1.0 + 2.0 * self.groups.phi - 2.0 / self.groups.rho

    @property
    def c3(self) -> float:
        return 0.0

    @property
    def c4(self) -> float:
        return 1.0

    def evaluate(self, tau):
        if self.region is None:
            return composite_eval(tau, self.groups)
        return REGION_FORMULAS[self.region](tau, self.groups)


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def _require_valid(groups: DimensionlessGroups):
    if not groups.valid:
        raise DomainError(f"rho*phi = {groups.rho * groups.phi:.6g} must be < 1")


def region1(tau, groups: DimensionlessGroups):
    """Initial adjustment: fast reaction only, rho*beta - gamma conserved."""
    _require_valid(groups)
    rho, phi = groups.rho, groups.phi
    rp = rho * phi
    e = np.exp((rp - 1.0) * np.asarray(tau, dtype=float))
    beta = phi * (1.0 - rp) * e / (1.0 - rp * e)
    return _out(beta), _out(rho * beta + 1.0 - rp)


def region2(tau, groups: DimensionlessGroups):
    """Induction period, valid for tau short of (1 - rho phi)/(rho^2 eps)."""
    eps, rho, phi = groups.eps, groups.rho, groups.phi
    tau = np.asarray(tau, dtype=float)
    gamma = 1.0 - rho * phi - rho * rho * eps * tau
    if np.any(gamma <= 0):
        raise DomainError("region II solution is non-uniform at or beyond the switchover time")
    return _out(eps * rho / gamma), _out(gamma)


def _corner_pulse(z):
    # exp(-z^2/2) / (sqrt(pi/2) (1 + erf(z/sqrt2))), written with the scaled
    # complementary error function so both tails stay finite
    return 1.0 / (SQRT_HALF_PI * erfcx(-z / math.sqrt(2.0)))


def region3(tau, groups: DimensionlessGroups, gamma_exponent: str = "half"):
    """erf-shaped corner joining the induction line to the post-switchover curve.

    ``gamma_exponent="half"`` uses exp(-z^2/2) in gamma, as in beta;
    ``"full"`` uses exp(-z^2) in gamma instead. Beta is the same either way.
    Here z = (rho eps tau - (1/rho - phi)) / sqrt(eps).
    """
    eps, rho, phi = groups.eps, groups.rho, groups.phi
    se = math.sqrt(eps)
    x = rho * eps * np.asarray(tau, dtype=float) - (1.0 / rho - phi)
    z = x / se
    pulse = _corner_pulse(z)
    beta = se * pulse + x
    if gamma_exponent == "half":
        gamma = se * rho * pulse
    elif gamma_exponent == "full":
        gamma = se * rho * pulse * np.exp(-0.5 * z * z)
    else:
        raise ValueError(f"unknown gamma_exponent {gamma_exponent!r}")
    return _out(beta), _out(gamma)


def region4(tau, groups: DimensionlessGroups):
    """Approach to the equilibrium (1/2, 0) once the inhibitor is spent."""
    eps, rho, phi = groups.eps, groups.rho, groups.phi
    tau = np.asarray(tau, dtype=float)
    denom = 1.0 + 2.0 * (phi - 1.0 / rho + rho * eps * tau)
    if np.any(denom <= 0):
        raise DomainError("region IV solution requires 1 + 2(phi - 1/rho + rho eps tau) > 0")
    return _out(0.5 - 0.5 / denom), _out(np.zeros_like(tau))


REGION_FORMULAS = {
    RegionLabel.I: region1,
    RegionLabel.II: region2,
    RegionLabel.III: region3,
    RegionLabel.IV: region4,
}


@dataclass(frozen=True)
class RegionBounds:
    """Classifier configuration.

    ``t_initial`` is the end of region I (default 10/(1 - rho phi));
    ``width`` is the half-width of region III in units of eps^-1/2 / rho.
    """

    t_initial: float | None = None
    width: float = 3.0


def _edges(groups: DimensionlessGroups, bounds: RegionBounds):
    t1 = bounds.t_initial
    if t1 is None:
        t1 = 10.0 / (1.0 - groups.rho * groups.phi)
    half = bounds.width / (math.sqrt(groups.eps) * groups.rho)
    tsw = groups.tau_switch
    return t1, tsw - half, tsw + half


def classify_region(tau, groups: DimensionlessGroups, bounds: RegionBounds = RegionBounds()):
    """Region label(s) for ``tau``: I up to t_initial, III within the corner band,
    II before it and IV after. Region I takes precedence when bands overlap."""
    _require_valid(groups)
    t1, lo, hi = _edges(groups, bounds)

    def label(t):
        if t < 0:
            raise DomainError("tau must be non-negative")
        if t <= t1:
            return RegionLabel.I
        if lo <= t <= hi:
            return RegionLabel.III
        return RegionLabel.II if t < lo else RegionLabel.IV

    if np.ndim(tau) == 0:
        return label(float(tau))
    return [label(float(t)) for t in np.asarray(tau).ravel()]


def composite_eval(tau, groups: DimensionlessGroups, bounds: RegionBounds = RegionBounds()):
    """Piecewise asymptotic solution, each tau evaluated with its region's formula."""
    scalar = np.ndim(tau) == 0
    taus = np.atleast_1d(np.asarray(tau, dtype=float))
    labels = classify_region(taus, groups, bounds)
    beta = np.empty_like(taus)
    gamma = np.empty_like(taus)
    for region in RegionLabel:
        mask = np.array([lab is region for lab in labels])
        if mask.any():
            beta[mask], gamma[mask] = REGION_FORMULAS[region](taus[mask], groups)
    if scalar:
        return float(beta[0]), float(gamma[0])
    return beta, gamma


def switchover_tau(groups: DimensionlessGroups) -> float:
    """Dimensionless switchover time (1/rho^2 - phi/rho) / eps."""
    return groups.tau_switch


def switchover_time_from(c0, m0, k0, phi):
    """Switchover time in seconds, (c0 - phi m0) / (m0^2 k0).

    No domain checks; negative values come back unchanged. Works elementwise
    on arrays.
    """
    return (c0 - phi * m0) / (m0 * m0 * k0)


def switchover_time(rates: RateConstants, init: InitialConcentrations) -> float:
    """Switchover time in seconds for the given rates and initial mixture.

    phi*m0 is just b0, so the numerator is c0 - b0; k1 drops out.
    Raises :class:`DomainError` when b0 > c0 (no induction period). The
    boundary b0 == c0 gives 0.
    """
    m0 = init.m0
    phi = init.b0 / m0
    if init.c0 < phi * m0:
        raise DomainError("c0 < phi*m0: the inhibitor is exhausted immediately, no induction period")
    return float(switchover_time_from(init.c0, m0, rates.k0, phi))
