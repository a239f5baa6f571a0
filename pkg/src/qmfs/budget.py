"""Closed-form noise budget and quantum-limit reference levels."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

# Full quantum limit for the resonant BAE case: x2_eff = 1.
FQL_LEVEL = 1.0
VACUUM_VARIANCE = 0.5


def cooperativity(G: float, kappa: float, gamma: float) -> float:
    """C = 4 G^2 / (kappa gamma)."""
    if G < 0 or kappa <= 0 or gamma <= 0:
        raise ValueError("cooperativity needs G >= 0, kappa > 0 and gamma > 0")
    return 4.0 * G * G / (kappa * gamma)


def coupling_for_cooperativity(C: float, kappa: float, gamma: float) -> float:
    """Inverse of :func:`cooperativity`."""
    if C < 0 or kappa <= 0 or gamma <= 0:
        raise ValueError("need C >= 0, kappa > 0 and gamma > 0")
    return math.sqrt(C * kappa * gamma / 4.0)


def thermal_variance(n1: float, n2: float) -> float:
    """Collective-quadrature variance of two thermal oscillators."""
    return 0.5 * (n1 + n2) + 0.5


class Backaction(NamedTuple):
    qba: float
    cba: float


def backaction(C: float, n_c_thermal: float = 0.0) -> Backaction:
    """Quantum (2C) and cavity-thermal (4 C n_c) backaction on conjugate quadratures."""
    return Backaction(2.0 * C, 4.0 * C * n_c_thermal)


def imprecision(C: float, n_amp: float) -> float:
    """Imprecision as an equivalent occupation, (n_amp + 1/2) / (8 C)."""
    if C <= 0:
        return math.inf
    return (n_amp + 0.5) / (8.0 * C)


def sideband_cooling_effective(gamma0: float, n0: float, C_cool: float, residual: float = 0.0):
    """Linewidth and occupation after resolved-sideband cooling.

    ``gamma_eff = gamma0 (1 + C)`` and ``n_eff = n0 / (1 + C) + residual``.
    """
    if C_cool < 0:
        raise ValueError("cooling cooperativity must be >= 0")
    if math.isinf(C_cool):
        return math.inf, residual
    return gamma0 * (1.0 + C_cool), n0 / (1.0 + C_cool) + residual


def cooling_for_linewidth(gamma0: float, gamma_target: float) -> float:
    """Cooling cooperativity that broadens ``gamma0`` to ``gamma_target``."""
    return gamma_target / gamma0 - 1.0


def duan_margin_db(duan_value: float) -> float:
    """Margin to the separability bound 1 in dB (negative means entangled)."""
    return 10.0 * math.log10(duan_value)


def db_below(value: float, reference: float) -> float:
    """How many dB ``value`` lies below ``reference``."""
    return 10.0 * math.log10(reference / value)


@dataclass(frozen=True)
class NoiseBudget:
    thermal: float
    qba: float
    cba: float
    imprecision: float

    @property
    def measured_total(self) -> float:
        return self.thermal + self.imprecision

    @property
    def conjugate_total(self) -> float:
        return self.thermal + self.qba + self.cba


def noise_budget(C: float, thermal: float, n_c_thermal: float = 0.0, n_amp: float = 0.0,
                 heating: Optional[Callable[[float], float]] = None) -> NoiseBudget:
    """Budget for one measured collective quadrature at cooperativity ``C``.

    ``heating`` is an optional phenomenological ``C -> delta <X^2>^T`` for
    technical heating of the oscillators; none is applied by default.
    """
    if heating is not None:
        thermal = thermal + float(heating(C))
    ba = backaction(C, n_c_thermal)
    return NoiseBudget(thermal, ba.qba, ba.cba, imprecision(C, n_amp))
