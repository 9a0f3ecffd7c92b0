"""Unequal qubit potentials and couplings with constant f+- near the working point.

``f_plus`` / ``f_minus`` are taken in 1/energy (as returned by
:mod:`edgelink.perturb`); formulas below work with the dimensionless
``F = J f``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneracyError, DomainError

__all__ = ["AsymConfig", "AsymResult", "asym_pair_solution", "asym_metrics", "b1_residuals"]


@dataclass(frozen=True)
class AsymConfig:
    eps1: float
    eps2: float
    g1: float
    g2: float
    f_plus: float
    f_minus: float
    j: float = 1.0
    delta_E: float | None = None

    def __post_init__(self):
        if self.g1 < 0 or self.g2 < 0:
            raise DomainError("couplings must be non-negative")
        if self.f_plus == self.f_minus:
            raise DegeneracyError("f+ == f-: the two branches coincide")

    @property
    def F(self) -> tuple[float, float]:
        return self.j * self.f_plus, self.j * self.f_minus


@dataclass(frozen=True)
class AsymResult:
    chi: tuple[float, float]
    lam: tuple[float, float]
    omega_eff: float = float("nan")
    k_pr: float = float("nan")
    limits: dict = field(default_factory=dict)


def _lam_from_chi(cfg: AsymConfig, chi: float) -> float:
    Fp, Fm = cfg.F
    return cfg.g1 ** 2 * (1 + chi) / (cfg.j * (1 / Fp + chi / Fm)) + cfg.eps1


def b1_residuals(cfg: AsymConfig, lam: float, chi: float) -> tuple[float, float]:
    """Residuals of the two boundary conditions at (lam, chi), in energy units."""
    Fp, Fm = cfg.F
    j = cfg.j
    r1 = cfg.g1 ** 2 - (lam - cfg.eps1) * j / (1 + chi) * (1 / Fp + chi / Fm)
    r2 = cfg.g2 ** 2 - (lam - cfg.eps2) * j / (1 - chi) * (1 / Fp - chi / Fm)
    return float(r1), float(r2)


def asym_pair_solution(cfg: AsymConfig) -> AsymResult:
    """Both mixing parameters chi and the matching eigenvalues.

    Pairs are ordered so that ``lam[0]`` is the one nearer ``eps1``.
    """
    Fp, Fm = cfg.F
    j = cfg.j
    de = cfg.eps2 - cfg.eps1
    dg = (cfg.g2 ** 2 - cfg.g1 ** 2) / j
    sg = (cfg.g2 ** 2 + cfg.g1 ** 2) / j
    if cfg.delta_E is not None and abs(de) > cfg.delta_E / 2:
        warnings.warn("detuning exceeds half the level spacing; constant-f model is doubtful",
                      stacklevel=2)
    disc = np.sqrt((2 * de + dg * (Fm + Fp)) ** 2 + 4 * cfg.g1 ** 2 * cfg.g2 ** 2 / j ** 2 * (Fm - Fp) ** 2)
    den = dg * Fp + de * Fp / Fm
    if den == 0:
        # symmetric limit: the two solutions are chi = 0 and chi = inf
        lam_a = cfg.eps1 + cfg.g1 ** 2 * Fp / j
        lam_b = cfg.eps1 + cfg.g1 ** 2 * Fm / j
        chis, lams = (0.0, float("inf")), (lam_a, lam_b)
    else:
        chis = tuple(0.5 * (-sg * (Fm - Fp) + s * disc) / den for s in (+1, -1))
        lams = tuple(_lam_from_chi(cfg, c) for c in chis)
    order = np.argsort([abs(l - cfg.eps1) for l in lams])
    return AsymResult(chi=tuple(float(chis[i]) for i in order),
                      lam=tuple(float(lams[i]) for i in order))


def _omega(de, dg, Fp, Fm, g1, g2, j):
    return float(np.sqrt((de + 0.5 * dg * (Fm + Fp)) ** 2 + g1 ** 2 * g2 ** 2 / j ** 2 * (Fm - Fp) ** 2))


def asym_metrics(cfg: AsymConfig) -> AsymResult:
    """Effective frequency, propagation factor and the four limiting-case values."""
    pair = asym_pair_solution(cfg)
    Fp, Fm = cfg.F
    j, g1, g2 = cfg.j, cfg.g1, cfg.g2
    de = cfg.eps2 - cfg.eps1
    dg = (g2 ** 2 - g1 ** 2) / j
    om = _omega(de, dg, Fp, Fm, g1, g2, j)
    if om == 0:
        raise DegeneracyError("zero effective frequency")
    kpr = abs(g1 * g2 * (Fm - Fp) / (j * om)) ** 2
    g = 0.5 * (g1 + g2)
    limits = {
        "symmetric": {"omega_eff": g * g / j * abs(Fm - Fp), "k_pr": 1.0},
        "weak_coupling": {
            "omega_eff": abs(de),
            "k_pr": abs(g1 * g2 * (Fm - Fp) / (j * de)) ** 2 if de else float("inf"),
        },
        "symmetric_coupling": {
            "omega_eff": float(np.sqrt(de ** 2 + g ** 4 / j ** 2 * (Fm - Fp) ** 2)),
            "k_pr": 1.0 / (1.0 + j ** 2 * de ** 2 / (g ** 4 * (Fm - Fp) ** 2)) if g else 0.0,
            "g_half_transfer": float(np.sqrt(j * abs(de) / abs(Fm - Fp))),
        },
        "symmetric_potentials": {
            "omega_eff": _omega(0.0, dg, Fp, Fm, g1, g2, j),
            "k_pr": (1.0 / (1.0 + 0.25 * ((g2 ** 2 - g1 ** 2) / (g1 * g2)) ** 2
                            * ((Fm + Fp) / (Fm - Fp)) ** 2)) if g1 * g2 else 0.0,
        },
    }
    return AsymResult(chi=pair.chi, lam=pair.lam, omega_eff=om, k_pr=float(kpr), limits=limits)
