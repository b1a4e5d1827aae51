"""Two-reaction model of the vitamin C iodine clock.

Species: iodide A, iodine B (the clock chemical), ascorbic acid C.

    2A -> B       rate k0 a^2   (slow, peroxide in excess and folded into k0)
    B + C -> 2A   rate k1 b c   (fast)

Dimensionless variables: b = m0 beta, c = c0 gamma, t = tau / (k1 c0), with
eps = k0/k1, rho = m0/c0 and phi = b0/m0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """Raised when inputs fall outside the region where a formula is defined."""


@dataclass(frozen=True)
class RateConstants:
    k0: float  # l/mol/s, 2A -> B
    k1: float  # l/mol/s, B + C -> 2A

    def __post_init__(self):
        if not (self.k0 > 0 and self.k1 > 0):
            raise DomainError(f"rate constants must be positive, got k0={self.k0}, k1={self.k1}")
        if not math.isfinite(self.k0 / self.k1):
            raise DomainError("k0/k1 must be finite")

    @property
    def eps(self) -> float:
        return self.k0 / self.k1


@dataclass(frozen=True)
class InitialConcentrations:
    a0: float  # iodide, mol/l
    b0: float  # iodine, mol/l
    c0: float  # ascorbic acid, mol/l

    def __post_init__(self):
        if self.a0 < 0 or self.b0 < 0:
            raise DomainError("a0 and b0 must be non-negative")
        if not self.c0 > 0:
            raise DomainError(f"c0 must be positive, got {self.c0}")
        if not self.m0 > 0:
            raise DomainError("total iodine m0 = a0 + 2 b0 must be positive")

    @property
    def m0(self) -> float:
        return self.a0 + 2.0 * self.b0


@dataclass(frozen=True)
class DimensionlessGroups:
    eps: float
    rho: float
    phi: float

    def __post_init__(self):
        if not self.eps > 0:
            raise DomainError(f"eps must be positive, got {self.eps}")
        if not self.rho > 0:
            raise DomainError(f"rho must be positive, got {self.rho}")
        if not 0.0 <= self.phi <= 0.5:
            raise DomainError(f"phi must lie in [0, 1/2], got {self.phi}")

    @property
    def valid(self) -> bool:
        """True when rho*phi < 1, i.e. the inhibitor survives the initial transient."""
        return self.rho * self.phi < 1.0

    @property
    def tau_switch(self) -> float:
        """Leading-order dimensionless switchover time (1 - rho phi) / (rho^2 eps)."""
        return (1.0 / self.rho**2 - self.phi / self.rho) / self.eps


@dataclass(frozen=True)
class Scales:
    """Conversion factors between dimensional and dimensionless variables."""

    time: float  # s per unit tau, 1/(k1 c0)
    iodine: float  # m0, mol/l per unit beta
    inhibitor: float  # c0, mol/l per unit gamma


@dataclass(frozen=True)
class DimlessState:
    tau: float
    beta: float
    gamma: float

    @property
    def alpha(self) -> float:
        """Dimensionless iodide a/m0, slaved to beta by conservation."""
        return 1.0 - 2.0 * self.beta


@dataclass(frozen=True)
class DimensionalState:
    t: float
    a: float
    b: float
    c: float


def derive_groups(rates: RateConstants, init: InitialConcentrations) -> DimensionlessGroups:
    m0 = init.m0
    if m0 == 0 or init.c0 == 0:
        raise DomainError("c0 and m0 must be non-zero")
    return DimensionlessGroups(eps=rates.k0 / rates.k1, rho=m0 / init.c0, phi=init.b0 / m0)


def scales(rates: RateConstants, init: InitialConcentrations) -> Scales:
    return Scales(time=1.0 / (rates.k1 * init.c0), iodine=init.m0, inhibitor=init.c0)


def to_dimensionless(state: DimensionalState, rates: RateConstants,
                     init: InitialConcentrations) -> DimlessState:
    sc = scales(rates, init)
    return DimlessState(tau=state.t / sc.time, beta=state.b / sc.iodine, gamma=state.c / sc.inhibitor)


def to_dimensional(state: DimlessState, rates: RateConstants,
                   init: InitialConcentrations) -> DimensionalState:
    sc = scales(rates, init)
    b = state.beta * sc.iodine
    return DimensionalState(t=state.tau * sc.time, a=sc.iodine - 2.0 * b, b=b,
                            c=state.gamma * sc.inhibitor)


def rhs_full(state: DimensionalState, rates: RateConstants) -> tuple[float, float, float]:
    """Mass-action rates (da/dt, db/dt, dc/dt)."""
    fast = rates.k1 * state.b * state.c
    slow = rates.k0 * state.a * state.a
    return 2.0 * fast - 2.0 * slow, slow - fast, -fast


def rhs_reduced(b, c, m0: float, rates: RateConstants):
    """(db/dt, dc/dt) with iodide eliminated through a = m0 - 2b."""
    fast = rates.k1 * b * c
    a = m0 - 2.0 * b
    return rates.k0 * a * a - fast, -fast


def rhs_dimensionless(state: DimlessState, groups: DimensionlessGroups):
    """(dbeta/dtau, dgamma/dtau)."""
    return _dimless_rhs(state.beta, state.gamma, groups.eps, groups.rho)


def _dimless_rhs(beta, gamma, eps, rho):
    bg = beta * gamma
    alpha = 1.0 - 2.0 * beta
    return -bg + eps * rho * alpha * alpha, -rho * bg


def jacobian_dimensionless(beta: float, gamma: float, groups: DimensionlessGroups) -> np.ndarray:
    er = groups.eps * groups.rho
    return np.array([
        [-gamma - 4.0 * er * (1.0 - 2.0 * beta), -beta],
        [-groups.rho * gamma, -groups.rho * beta],
    ])


def jacobian_full(a: float, b: float, c: float, rates: RateConstants) -> np.ndarray:
    k0, k1 = rates.k0, rates.k1
    return np.array([
        [-4.0 * k0 * a, 2.0 * k1 * c, 2.0 * k1 * b],
        [2.0 * k0 * a, -k1 * c, -k1 * b],
        [0.0, -k1 * c, -k1 * b],
    ])


@dataclass(frozen=True)
class Eigenpair:
    value: float
    vector: tuple[float, float]


def equilibrium_analysis(groups: DimensionlessGroups) -> tuple[Eigenpair, Eigenpair]:
    """Linearisation about the equilibrium (beta, gamma) = (1/2, 0).

    Eigenvectors are scaled so their beta component is 1. Pairs are ordered
    by decreasing eigenvalue, so the slow (zero) direction comes first.
    """
    jac = jacobian_dimensionless(0.5, 0.0, groups)
    values, vectors = np.linalg.eig(jac)
    order = np.argsort(-values.real)
    pairs = []
    for k in order:
        v = vectors[:, k].real
        v = v / v[0]
        pairs.append(Eigenpair(float(values[k].real), (float(v[0]), float(v[1]))))
    return pairs[0], pairs[1]


def quasi_steady_beta(gamma, groups: DimensionlessGroups):
    """Iodine level on the quasi-steady curve beta*gamma = eps*rho*(1 - 2 beta)^2.

    Returns the smaller root of 4 er b^2 - (gamma + 4 er) b + er = 0 (er = eps*rho);
    the larger root exceeds 1/2.
    """
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise DomainError("gamma must be non-negative")
    er = groups.eps * groups.rho
    p = g + 4.0 * er
    # (g + 4er)^2 - 16 er^2 factored to avoid cancellation near gamma = 0
    disc = np.sqrt(g * (g + 8.0 * er))
    root = 2.0 * er / (p + disc)
    return float(root) if root.ndim == 0 else root
