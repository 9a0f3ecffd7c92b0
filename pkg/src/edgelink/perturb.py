"""Second-order coupling sums and the parity-resolved coupling functions f+-.

``f_p(lam) = 2 * sum_{n in D_p} |psi_n(1)|^2 / (lam - E_n)`` over the isolated
lattice; its crossings with ``(lam - eps) / g^2`` give the dressed spectrum
(see :mod:`edgelink.npsolver`).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegeneracyError, DomainError, PoleError
from .spectral import EdgeCalibration, Spectrum

__all__ = [
    "PerturbationSums",
    "CouplingFunctions",
    "CotTanFunctions",
    "PerturbativeOmega",
    "ResonanceResult",
    "second_order_pair",
    "coupling_sums",
    "f_pm_approx",
    "omega_perturbative",
    "resonance_dynamics",
    "s0_distance_kernel",
    "s0_partial_sum",
    "s0_distance_estimate",
]

POLE_GAP = 1e-9
RESONANCE_FRACTION = 1e-6


@dataclass(frozen=True)
class PerturbationSums:
    S0: complex
    S1: float
    S2: float
    f_plus: float
    f_minus: float
    at_energy: float

    def shifts(self, g: float) -> tuple[float, float]:
        """Second-order shifts of the two qubit levels from the 2x2 form."""
        root = np.sqrt((self.S1 - self.S2) ** 2 + 4 * abs(self.S0) ** 2)
        return (g * g / 2 * (self.S1 + self.S2 + root), g * g / 2 * (self.S1 + self.S2 - root))


def _connection_amplitudes(spec: Spectrum, sites: tuple[int, int]):
    o = spec.system.offset
    return spec.eigenvectors[sites[0] - 1 + o], spec.eigenvectors[sites[1] - 1 + o]


def _check_pole(spec: Spectrum, energy: float, weights: np.ndarray):
    live = weights > 1e-24
    if np.any(live) and np.min(np.abs(energy - spec.eigenvalues[live])) < POLE_GAP:
        raise PoleError(f"energy {energy} coincides with a lattice eigenvalue; "
                        "use resonance_dynamics for the degenerate case")


def _raw_sums(spec, energy, sites):
    a, b = _connection_amplitudes(spec, sites)
    den = energy - spec.eigenvalues
    _check_pole(spec, energy, np.abs(a) ** 2 + np.abs(b) ** 2)
    S0 = np.sum(a * b.conj() / den)
    S1 = np.sum(np.abs(a) ** 2 / den)
    S2 = np.sum(np.abs(b) ** 2 / den)
    return complex(S0), float(S1), float(S2)


def second_order_pair(spec: Spectrum, lam: float, sites: tuple[int, int] | None = None):
    """Upper and lower eigenvalue of the 2x2 second-order coupling matrix at ``lam``."""
    if sites is None:
        sites = (1, spec.system.lx * spec.system.ly)
    S0, S1, S2 = _raw_sums(spec, lam, sites)
    mean = 0.5 * (S1 + S2)
    half = np.sqrt(0.25 * (S1 - S2) ** 2 + abs(S0) ** 2)
    return mean + half, mean - half


def coupling_sums(spec: Spectrum, energy: float, sites: tuple[int, int] | None = None) -> PerturbationSums:
    """Direct sums over the isolated-lattice spectrum ``spec`` at ``energy``.

    f+- use the parity labels when present, otherwise the upper/lower
    eigenvalue of the 2x2 coupling matrix.
    """
    if sites is None:
        sites = (1, spec.system.lx * spec.system.ly)
    S0, S1, S2 = _raw_sums(spec, energy, sites)
    if spec.parity is not None:
        fp = S1 + S0.real
        fm = S1 - S0.real
    else:
        half = np.sqrt(0.25 * (S1 - S2) ** 2 + abs(S0) ** 2)
        fp, fm = 0.5 * (S1 + S2) + half, 0.5 * (S1 + S2) - half
    return PerturbationSums(S0, S1, S2, float(fp), float(fm), float(energy))


class CouplingFunctions:
    """Exact f+-(lam) from a parity-labelled isolated-lattice spectrum.

    Degenerate same-parity poles (gap below ``merge``) are merged by summing
    their weights; poles with weight below ``floor`` are dropped since they do
    not couple to the qubits.
    """

    def __init__(self, spec: Spectrum, site: int = 1, merge: float = 1e-10, floor: float = 1e-30):
        if spec.parity is None:
            raise DegeneracyError("coupling functions need parity-labelled states")
        self.spectrum = spec
        self.j = spec.system.spec.j
        w = 2.0 * spec.site_weights(site)
        self._poles = {}
        for p in (+1, -1):
            sel = spec.parity == p
            E, W = spec.eigenvalues[sel], w[sel]
            keep = W > floor
            E, W = E[keep], W[keep]
            if len(E):
                groups = np.split(np.arange(len(E)), np.nonzero(np.diff(E) > merge)[0] + 1)
                E = np.array([E[g].mean() for g in groups])
                W = np.array([W[g].sum() for g in groups])
            self._poles[p] = (E, W)
        self.dropped_energy_sum = float(spec.eigenvalues.sum()
                                        - sum(self._poles[p][0].sum() for p in (1, -1)))

    def poles(self, parity: int) -> tuple[np.ndarray, np.ndarray]:
        return self._poles[parity]

    def f(self, lam, parity: int):
        E, W = self._poles[parity]
        lam = np.asarray(lam, dtype=float)
        return np.sum(W / (lam[..., None] - E), axis=-1)

    def df(self, lam, parity: int):
        E, W = self._poles[parity]
        lam = np.asarray(lam, dtype=float)
        return -np.sum(W / (lam[..., None] - E) ** 2, axis=-1)

    def pair(self, lam: float) -> tuple[float, float]:
        return float(self.f(lam, 1)), float(self.f(lam, -1))


class CotTanFunctions:
    """Window approximation of f+- built from :class:`EdgeCalibration` constants.

    The cotangent branch belongs to the parity of ``E_l``.  ``branches`` sets how
    many pole images per side :meth:`poles` reports.
    """

    def __init__(self, cal: EdgeCalibration, branches: int = 8):
        self.cal = cal
        self.j = cal.j
        self.cot_parity = cal.parity_l if cal.parity_l else 1
        self.branches = branches

    def _phase(self, lam):
        return np.pi * (np.asarray(lam, dtype=float) - self.cal.E_l) / (2 * self.cal.delta_E)

    def f(self, lam, parity: int):
        c = self.cal
        ph = self._phase(lam)
        if parity == self.cot_parity:
            core = np.cos(ph) / np.sin(ph)
        else:
            core = -np.tan(ph)
        return c.A_f * np.pi / self.j * core + c.B_f / self.j

    def df(self, lam, parity: int):
        c = self.cal
        ph = self._phase(lam)
        k = c.A_f * np.pi / self.j * np.pi / (2 * c.delta_E)
        if parity == self.cot_parity:
            return -k / np.sin(ph) ** 2
        return -k / np.cos(ph) ** 2

    def poles(self, parity: int) -> tuple[np.ndarray, np.ndarray]:
        c = self.cal
        start = 0 if parity == self.cot_parity else 1
        ks = np.arange(-self.branches, self.branches + 1)
        E = c.E_l + (start + 2 * ks) * c.delta_E
        W = np.full(len(E), 2 * c.A_f * c.delta_E / self.j)
        return E, W

    def pair(self, lam: float) -> tuple[float, float]:
        return float(self.f(lam, 1)), float(self.f(lam, -1))


def f_pm_approx(cal: EdgeCalibration, lam: float) -> tuple[float, float]:
    """(f_plus, f_minus) from the cot/tan window approximation."""
    return CotTanFunctions(cal).pair(lam)


@dataclass(frozen=True)
class PerturbativeOmega:
    exact: float
    closed_form: float


def omega_perturbative(cal: EdgeCalibration, sums: PerturbationSums, g: float) -> PerturbativeOmega:
    """Second-order splitting of the two qubit levels.

    ``exact`` is ``g^2 |f+ - f-|`` at the sums' energy; ``closed_form`` is the
    window approximation ``2 pi A_f g^2 / (J sin(pi (eps - E_l) / dE))``.
    """
    eps = sums.at_energy
    z = (eps - cal.E_l) / cal.delta_E
    if min(abs(z - round(z)), 1.0) < RESONANCE_FRACTION:
        raise PoleError(f"eps={eps} is resonant with an edge level; use resonance_dynamics")
    exact = g * g * abs(sums.f_plus - sums.f_minus)
    closed = 2 * np.pi * cal.A_f * g * g / (cal.j * abs(np.sin(np.pi * z)))
    return PerturbativeOmega(float(exact), float(closed))


@dataclass(frozen=True)
class ResonanceResult:
    omega0: float
    energy: float

    @property
    def period(self) -> float:
        return 2 * np.pi / self.omega0

    def traces(self, t):
        """(P_Q1, P_Q2, P_lattice) of the three-level resonant exchange."""
        t = np.asarray(t, dtype=float)
        h = self.omega0 * t / 2
        return np.cos(h) ** 4, np.sin(h) ** 4, 0.5 * np.sin(self.omega0 * t) ** 2


def resonance_dynamics(spec: Spectrum, l: int, g: float, site: int = 1) -> ResonanceResult:
    """First-order splitting ``g sqrt(2) |psi_l(1)|`` when eps sits on level ``l``."""
    amp = abs(spec.eigenvectors[site - 1 + spec.system.offset, l])
    if amp < 1e-12:
        raise DegeneracyError(f"level {l} does not couple to site {site}")
    return ResonanceResult(float(g * np.sqrt(2.0) * amp), float(spec.eigenvalues[l]))


def s0_distance_kernel(alpha: float, z: float) -> float:
    """Closed-form magnitude of ``sum_n exp(i alpha n) / (z - n)``.

    ``pi / |sin(pi z)|`` for alpha != 0 and ``pi |cot(pi z)|`` at alpha = 0.
    """
    if abs(z - round(z)) < 1e-12:
        raise PoleError(f"z={z} is an integer")
    if alpha == 0:
        return float(np.pi * abs(np.cos(np.pi * z) / np.sin(np.pi * z)))
    return float(np.pi / abs(np.sin(np.pi * z)))


def s0_partial_sum(alpha: float, z: float, nmax: int) -> float:
    """``|sum_{|n| <= nmax} exp(i alpha n) / (z - n)|`` by direct summation."""
    if abs(z - round(z)) < 1e-12:
        raise PoleError(f"z={z} is an integer")
    n = np.arange(-nmax, nmax + 1)
    return float(abs(np.sum(np.exp(1j * alpha * n) / (z - n))))


def s0_distance_estimate(r: float, delta_E: float, d: float, nu: float, eps: float,
                         E_l: float) -> float:
    """Edge-mode estimate of |S0| for connection sites ``d`` apart along an edge.

    ``r`` is a typical edge amplitude at the connection sites and ``nu`` the
    edge group velocity.
    """
    if nu == 0:
        raise DomainError("group velocity must be non-zero")
    alpha = delta_E * d / (2 * nu)
    z = (eps - E_l) / delta_E
    return r / delta_E * s0_distance_kernel(alpha, z)
