"""Diagonalization, analytic band structure and edge-window calibration."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .errors import CalibrationError, IntegrityError
from .lattice import HamiltonianMatrix

__all__ = [
    "Spectrum",
    "EdgeCalibration",
    "DispersionPoint",
    "INNER_BAND_TOP",
    "OUTER_BAND_BOTTOM",
    "BAND_TOP",
    "diagonalize",
    "bulk_dispersion",
    "edge_dispersion",
    "edge_cubic",
    "classify_states",
    "edge_window",
]

# |E| / J band limits of the infinite lattice
INNER_BAND_TOP = 2.0 * np.sqrt(1.0 - np.sqrt(0.5))
OUTER_BAND_BOTTOM = 2.0 * np.sqrt(1.0 + np.sqrt(0.5))
BAND_TOP = 2.0 * np.sqrt(2.0)

BAND_TOLERANCE = 0.02


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigen-decomposition of a :class:`HamiltonianMatrix`.

    ``eigenvectors[:, n]`` is the state with energy ``eigenvalues[n]``.
    ``bands`` holds ``"bulk" | "edge" | "qubit"`` and ``parity`` holds
    ``+1 | -1`` (0 when unknown); both are ``None`` until assigned.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    system: HamiltonianMatrix
    bands: np.ndarray | None = None
    parity: np.ndarray | None = None

    def __len__(self):
        return len(self.eigenvalues)

    def amplitudes(self, index: int) -> np.ndarray:
        """Row of eigenvector components at one basis index."""
        return self.eigenvectors[index]

    def site_weights(self, site: int) -> np.ndarray:
        """|psi_n(j)|^2 for lattice site index j (1-based) across all states."""
        return np.abs(self.eigenvectors[site - 1 + self.system.offset]) ** 2

    def qubit_weights(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.system.has_qubits:
            raise ValueError("spectrum has no qubit sites")
        v = self.eigenvectors
        return np.abs(v[0]) ** 2, np.abs(v[-1]) ** 2


@dataclass(frozen=True)
class EdgeCalibration:
    l: int
    E_l: float
    E_next: float
    delta_E: float
    rho_e: float
    A_f: float
    B_f: float
    lambda_mid: float
    size: int
    j: float = 1.0
    parity_l: int = 0

    def as_dict(self) -> dict:
        return {"l": self.l, "E_l": self.E_l, "E_next": self.E_next, "delta_E": self.delta_E,
                "rho_e": self.rho_e, "A_f": self.A_f, "B_f": self.B_f,
                "lambda_mid": self.lambda_mid, "L": self.size}


@dataclass(frozen=True)
class DispersionPoint:
    kx: float
    branch: int
    lam: float
    decay_factor: complex
    branch_offset: int
    ky: float | None = None
    group_velocity: float | None = None

    @property
    def localized(self) -> bool:
        return abs(self.decay_factor) < 1.0


def _fix_phases(vecs: np.ndarray) -> np.ndarray:
    k = np.argmax(np.abs(vecs), axis=0)
    lead = vecs[k, np.arange(vecs.shape[1])]
    return vecs * (np.abs(lead) / lead)[None, :]


def diagonalize(H: HamiltonianMatrix, check: float = 1e-12) -> Spectrum:
    """Full dense eigen-decomposition with deterministic eigenvector phases."""
    m = H.matrix
    asym = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if asym > check:
        raise IntegrityError(f"matrix is not Hermitian (max |H - H^+| = {asym:.3e})")
    vals, vecs = scipy.linalg.eigh(m, driver="evr")
    return Spectrum(vals, _fix_phases(vecs), H)


def bulk_dispersion(kx: float, ky: float, j: float = 1.0) -> np.ndarray:
    """Four bulk energies, ascending, from the quartic in lambda/(2J)."""
    s = (np.sin(kx) ** 2 + np.sin(ky) ** 2) / 4.0
    root = np.sqrt(1.0 - s)
    hi = 2 * j * np.sqrt(1.0 + root)
    lo = 2 * j * np.sqrt(max(1.0 - root, 0.0))
    return np.array([-hi, -lo, lo, hi])


def bulk_quartic(lam: float, kx: float, ky: float, j: float = 1.0) -> float:
    y = lam / (2 * j)
    return y ** 4 - 2 * y ** 2 + 0.25 * (np.sin(kx) ** 2 + np.sin(ky) ** 2)


def _trig_pair(kx: float, variant: str):
    c, s = np.cos(kx / 2), np.sin(kx / 2)
    if variant == "black-edge":
        return c, s
    if variant == "blue-edge":
        return s, c
    raise ValueError(f"unknown edge variant {variant!r}")


def edge_cubic(lam: float, kx: float, sign: int, variant: str = "black-edge", j: float = 1.0) -> float:
    """Residual of the strip edge-mode characteristic equation (lam in units of J)."""
    a, b = _trig_pair(kx, variant)
    x = lam / j
    return 2 * x - (x * x - 4 * a * a) * (x + sign * 2 * b)


def _edge_roots(kx: float, sign: int, variant: str, j: float) -> np.ndarray:
    a, b = _trig_pair(kx, variant)
    # expand 2x - (x^2 - 4a^2)(x + 2 s b) = 0 into monomials
    sb = sign * 2 * b
    coeffs = [-1.0, -sb, 2.0 + 4 * a * a, 4 * a * a * sb]
    roots = np.roots(coeffs)
    roots = np.sort(roots.real[np.abs(roots.imag) < 1e-9])
    # one Newton polish step keeps the residual at rounding level
    d = np.polyder(coeffs)
    roots = roots - np.polyval(coeffs, roots) / np.polyval(d, roots)
    return roots * j


def edge_dispersion(kx: float, variant: str = "black-edge", j: float = 1.0,
                    dk: float = 1e-4) -> list[DispersionPoint]:
    """Edge-mode roots for both sign choices at one ``kx`` (up to six points)."""
    a, _ = _trig_pair(kx, variant)
    offsets = (0, 2) if variant == "black-edge" else (1, 3)
    pts = []
    branch = 0
    for sign, r0 in zip((+1, -1), offsets):
        roots = _edge_roots(kx, sign, variant, j)
        lo = _edge_roots(kx - dk, sign, variant, j)
        hi = _edge_roots(kx + dk, sign, variant, j)
        for k, lam in enumerate(roots):
            x = lam / j
            dr = -(x - sign * 2 * a) / (x + sign * 2 * a) if x + sign * 2 * a != 0 else np.inf
            nu = None
            if len(lo) == len(roots) == len(hi):
                nu = float((hi[k] - lo[k]) / (2 * dk))
            pts.append(DispersionPoint(float(kx), branch, float(lam), complex(dr), r0,
                                       group_velocity=nu))
            branch += 1
    return pts


def classify_states(spec: Spectrum, qubit_threshold: float = 0.5) -> Spectrum:
    """Label states bulk / edge by energy, and qubit-dominated by qubit weight.

    Bulk bands are the analytic ``L -> inf`` windows; a state exactly on a band
    limit counts as edge.
    """
    j = spec.system.spec.j
    a = np.abs(spec.eigenvalues) / j
    bulk = (a < INNER_BAND_TOP) | (a > OUTER_BAND_BOTTOM)
    bands = np.where(bulk, "bulk", "edge").astype(object)
    if spec.system.has_qubits:
        w1, w2 = spec.qubit_weights()
        bands[(w1 + w2) > qubit_threshold] = "qubit"
    return replace(spec, bands=bands)


def edge_window(spec: Spectrum, eps_tilde: float, sites: tuple[int, int] | None = None,
                weight_floor: float = 1e-12) -> EdgeCalibration:
    """Locate E_l <= eps_tilde <= E_{l+1} and evaluate the window constants.

    ``spec`` is the isolated-lattice spectrum.  Only edge states that touch
    the connection sites (weight above ``weight_floor``) take part.
    A_f and B_f come from the two coupling functions at the window midpoint.
    """
    from .perturb import second_order_pair

    H = spec.system
    j = H.spec.j
    if sites is None:
        sites = (1, H.lx * H.ly)
    if spec.bands is None:
        spec = classify_states(spec)
    w = spec.site_weights(sites[0]) + spec.site_weights(sites[1])
    mask = (spec.bands == "edge") & (w > weight_floor)
    idx = np.nonzero(mask)[0]
    E = spec.eigenvalues
    a = abs(eps_tilde) / j
    if not INNER_BAND_TOP <= a <= OUTER_BAND_BOTTOM or len(idx) < 2:
        raise CalibrationError(f"eps_tilde={eps_tilde} is not inside the edge band")
    Ee = E[idx]
    pos = np.searchsorted(Ee, eps_tilde, side="right") - 1
    if pos < 0 or pos + 1 >= len(Ee):
        raise CalibrationError(f"eps_tilde={eps_tilde} has no edge level on both sides")
    E_l, E_u = float(Ee[pos]), float(Ee[pos + 1])
    dE = E_u - E_l
    lam = 0.5 * (E_l + E_u)
    f_hi, f_lo = second_order_pair(spec, lam, sites)
    A_f = j * (f_hi - f_lo) / (2 * np.pi)
    B_f = j * (f_hi + f_lo) / 2
    par = 0
    if spec.parity is not None:
        par = int(spec.parity[idx[pos]])
    L = H.ly
    return EdgeCalibration(l=int(idx[pos]), E_l=E_l, E_next=E_u, delta_E=dE, rho_e=j / (L * dE),
                           A_f=float(A_f), B_f=float(B_f), lambda_mid=lam, size=L, j=j,
                           parity_l=par)
