"""Non-perturbative dressed spectrum, coupling bounds and fidelity.

All eigenvalues of the symmetric two-qubit system solve
``f_p(lam) = (lam - eps) / g^2`` for parity ``p``.  ``provider`` below is any
object with ``f(lam, p)``, ``df(lam, p)``, ``poles(p)`` and ``j`` attributes,
e.g. :class:`~edgelink.perturb.CouplingFunctions` (exact sums) or
:class:`~edgelink.perturb.CotTanFunctions` (window approximation).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, SolverError
from .spectral import EdgeCalibration, Spectrum

__all__ = [
    "BoundaryRoot",
    "ScaledCoupling",
    "TwoLevelResult",
    "FidelityResult",
    "scale_coupling",
    "eigenvalues_boundary",
    "scaled_pair",
    "cot_approx",
    "g_bounds",
    "omega_bounds",
    "qubit_weight",
    "fidelity_exact",
    "fidelity_closed_form",
    "fidelity_from_roots",
    "dominant_pair",
]


@dataclass(frozen=True)
class BoundaryRoot:
    lam: float
    parity: int
    weight: float


@dataclass(frozen=True)
class ScaledCoupling:
    w: float
    G0: float
    C0: float
    R0: float
    eps_tilde: float


@dataclass(frozen=True)
class TwoLevelResult:
    lambda_minus: float
    lambda_plus: float
    omega_eff: float
    x0: float
    x1: float
    x_a0: float
    x_b1: float
    g_min: float
    g_max: float

    @property
    def omega_closed(self) -> float:
        return self.x_a0 - self.x_b1


@dataclass(frozen=True)
class FidelityResult:
    fidelity: float
    q1_weights: np.ndarray
    q2_weights: np.ndarray
    energies: np.ndarray


def scale_coupling(cal: EdgeCalibration, eps: float, g: float) -> ScaledCoupling:
    """Dimensionless detuning and coupling with the Stark-shifted potential."""
    j = cal.j
    eps_t = eps + cal.B_f * g * g / j
    G0 = g * g * cal.size / j ** 2
    C0 = 2 * G0 * cal.A_f * cal.rho_e
    return ScaledCoupling(w=(eps_t - cal.E_l) / cal.delta_E, G0=G0, C0=C0,
                          R0=float(np.sqrt(4 * C0 * (C0 + 1))), eps_tilde=eps_t)


# boundary equation -----------------------------------------------------------

def _root_in(h, a, b, xtol):
    """Root of decreasing h on (a, b); a or b may be infinite.

    Returns ``(root, side)`` where ``side`` is ``"a"`` or ``"b"`` when the
    root sits closer to that pole than float spacing resolves, else ``None``.
    """
    if np.isinf(a):
        step = max(1.0, abs(b))
        lo = b - step
        while h(lo) <= 0:
            step *= 2
            lo = b - step
            if step > 1e12:
                raise SolverError(f"no lower bracket below {b}")
        a = lo
    else:
        a = a + 1e-13 * max(1.0, abs(a))
    if np.isinf(b):
        step = max(1.0, abs(a))
        hi = a + step
        while h(hi) >= 0:
            step *= 2
            hi = a + step
            if step > 1e12:
                raise SolverError(f"no upper bracket above {a}")
        b = hi
    else:
        b = b - 1e-13 * max(1.0, abs(b))
    ha, hb = h(a), h(b)
    if ha <= 0:
        return a, "a"
    if hb >= 0:
        return b, "b"
    if not (np.isfinite(ha) and np.isfinite(hb)):
        raise SolverError(f"non-finite bracket values on ({a}, {b})")
    return brentq(h, a, b, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500), None


def _pinned_root(E, W, k, eps, g):
    """Root and qubit weight next to a weakly coupled pole ``E[k]``.

    Near the pole ``f ~ W_k / delta + f_rest`` so the boundary equation gives
    ``delta = g^2 W_k / (E_k - eps - g^2 f_rest(E_k))`` to leading order.
    """
    rest = np.arange(len(E)) != k
    d = E[k] - E[rest]
    f_rest = np.sum(W[rest] / d)
    df_rest = -np.sum(W[rest] / d ** 2)
    g2 = g * g
    delta = g2 * W[k] / (E[k] - eps - g2 * f_rest)
    weight = 1.0 / (2.0 * (1.0 + g2 * W[k] / delta ** 2 - g2 * df_rest))
    return E[k] + delta, weight


def eigenvalues_boundary(provider, eps: float, g: float, xtol: float = 1e-14,
                         window: tuple[float, float] | None = None) -> list[BoundaryRoot]:
    """All roots of ``f_p(lam) = (lam - eps) / g^2`` for both parities, ascending.

    One root lies strictly inside each interval between consecutive
    same-parity poles, plus one below the lowest and one above the highest.
    ``window`` restricts the search to roots whose bracketing interval
    intersects it.
    """
    if g <= 0:
        raise DomainError("g must be positive for the boundary equation")
    inv = 1.0 / (g * g)
    out = []
    for p in (+1, -1):
        E, W = provider.poles(p)
        order = np.argsort(E)
        E, W = np.asarray(E)[order], np.asarray(W)[order]
        edges = np.concatenate([[-np.inf], E, [np.inf]])

        def h(lam, p=p):
            return float(provider.f(lam, p)) - (lam - eps) * inv

        for i, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
            if window is not None and (b < window[0] or a > window[1]):
                continue
            try:
                lam, side = _root_in(h, a, b, xtol)
            except ValueError as exc:
                raise SolverError(f"bracket ({a}, {b}) parity {p}: {exc}") from exc
            if side is None:
                weight = qubit_weight(provider, lam, g, p)
            else:
                lam, weight = _pinned_root(E, W, i - 1 if side == "a" else i, eps, g)
            out.append(BoundaryRoot(float(lam), p, float(weight)))
    out.sort(key=lambda r: r.lam)
    return out


def qubit_weight(provider, lam: float, g: float, parity: int, eps: float | None = None,
                 rtol: float = 1e-6) -> float:
    """|psi(Q1)|^2 of the dressed state at root ``lam``: ``1 / (2 (1 - g^2 f'))``.

    With ``eps`` given, ``lam`` must solve the boundary equation to ``rtol``.
    """
    if eps is not None:
        lhs = g * g * float(provider.f(lam, parity))
        if abs(lhs - (lam - eps)) > rtol * max(abs(lam - eps), abs(lhs), g * g):
            raise DomainError(f"lam={lam} is not a root of the parity {parity:+d} equation")
    df = float(provider.df(lam, parity))
    return 1.0 / (2.0 * (1.0 - g * g * df))


def dominant_pair(roots: list[BoundaryRoot]) -> tuple[BoundaryRoot, BoundaryRoot]:
    """The two roots with the largest qubit weight, lower energy first."""
    top = sorted(roots, key=lambda r: r.weight)[-2:]
    return tuple(sorted(top, key=lambda r: r.lam))


# scaled two-level problem ----------------------------------------------------

def cot_approx(x):
    """Rational stand-in for cot(pi x / 2) on [0, 1]."""
    x = np.asarray(x, dtype=float)
    return 2 / np.pi * (1 / x - x)


def _closed_roots(C0: float, w: float) -> tuple[float, float]:
    q = 4 * C0 * (C0 + 1)
    x_a0 = (w + np.sqrt(w * w + q)) / (2 * (C0 + 1))
    x_b1 = 1 + ((w - 1) - np.sqrt((w - 1) ** 2 + q)) / (2 * (C0 + 1))
    return float(x_a0), float(x_b1)


def scaled_pair(sc: ScaledCoupling, cal: EdgeCalibration) -> TwoLevelResult:
    """Roots x0 (branch n=0, above w) and x1 (branch n=1, below w) of the scaled equation."""
    if not -1e-12 <= sc.w <= 1 + 1e-12:
        raise DomainError(f"w={sc.w} outside [0, 1]; pick the window containing eps_tilde")
    k = sc.G0 * np.pi * cal.A_f * cal.rho_e
    w = min(max(sc.w, 0.0), 1.0)
    if k == 0:
        x0 = x1 = w
    else:
        tiny = 1e-15
        x0 = brentq(lambda x: x - w - k / np.tan(np.pi * x / 2), tiny, 2 - tiny, xtol=1e-15)
        x1 = brentq(lambda x: x - w - k / np.tan(np.pi * (x - 1) / 2), -1 + tiny, 1 - tiny,
                    xtol=1e-15)
    x_a0, x_b1 = _closed_roots(sc.C0, w)
    ratio = x0 - x1
    if 0 < ratio < 1:
        gmin, gmax = g_bounds(cal, ratio)
    else:
        gmin = gmax = float("nan")
    dE = cal.delta_E
    return TwoLevelResult(lambda_minus=cal.E_l + x1 * dE, lambda_plus=cal.E_l + x0 * dE,
                          omega_eff=ratio * dE, x0=float(x0), x1=float(x1), x_a0=x_a0,
                          x_b1=x_b1, g_min=gmin, g_max=gmax)


def _g0_min(ratio, a_rho):
    return ratio * np.tan(np.pi * ratio / 2) / (np.pi * a_rho)


def _g0_max(ratio, a_rho):
    s = np.pi * ratio / 2
    return ratio * (1 + np.sin(s)) / (2 * np.cos(s)) / (np.pi * a_rho)


def g_bounds(cal: EdgeCalibration, omega_ratio: float) -> tuple[float, float]:
    """Smallest and largest coupling g that produce splitting ``omega_ratio * dE``."""
    if not 0 <= omega_ratio < 1:
        raise DomainError(f"omega/dE must lie in [0, 1), got {omega_ratio}")
    a_rho = cal.A_f * cal.rho_e
    scale = cal.j ** 2 / cal.size
    return (float(np.sqrt(_g0_min(omega_ratio, a_rho) * scale)),
            float(np.sqrt(_g0_max(omega_ratio, a_rho) * scale)))


def omega_bounds(cal: EdgeCalibration, G0: float) -> tuple[float, float]:
    """Inverse of :func:`g_bounds`: the (low, high) splitting ratio at coupling G0.

    The low end comes from the g_max relation and the high end from g_min.
    """
    if G0 < 0:
        raise DomainError("G0 must be non-negative")
    if G0 == 0:
        return 0.0, 0.0
    a_rho = cal.A_f * cal.rho_e
    top = 1 - 1e-15
    lo = brentq(lambda r: _g0_max(r, a_rho) - G0, 0.0, top, xtol=1e-15)
    hi = brentq(lambda r: _g0_min(r, a_rho) - G0, 0.0, top, xtol=1e-15)
    return float(lo), float(hi)


# fidelity ----------------------------------------------------------------------

def _cluster_fidelity(energies, c1, c2, gap):
    """``sum_c (sum_{n in c} c1_n)^2 + |sum_{n in c} c2_n|^2`` over clusters of equal energy.

    ``c1_n = |psi_n(Q1)|^2`` and ``c2_n = psi_n(Q2) psi_n(Q1)^*``.  Summing
    inside a cluster gives the spectral projector, so exact degeneracies
    are handled without choosing a basis.
    """
    order = np.argsort(energies, kind="stable")
    e, c1, c2 = energies[order], c1[order], c2[order]
    starts = np.concatenate([[0], np.nonzero(np.diff(e) > gap)[0] + 1])
    s1 = np.add.reduceat(c1, starts)
    s2 = np.add.reduceat(c2, starts)
    return float(np.sum(s1 ** 2) + np.sum(np.abs(s2) ** 2))


def fidelity_exact(source, eps: float | None = None, g: float | None = None,
                   gap: float = 1e-9) -> FidelityResult:
    """Long-time average of P_Q1 + P_Q2 starting from Q1.

    ``source`` is either a coupling-function provider (then ``eps`` and ``g``
    are required and the boundary-equation roots are used) or a full-system
    :class:`Spectrum` (dense weights; works for any connection sites).
    Levels closer than ``gap`` are treated as degenerate.
    """
    if isinstance(source, Spectrum):
        if not source.system.has_qubits:
            raise DomainError("fidelity needs a system with qubits")
        v = source.eigenvectors
        c1 = np.abs(v[0]) ** 2
        c2 = v[-1] * v[0].conj()
        F = _cluster_fidelity(source.eigenvalues, c1, c2, gap)
        return FidelityResult(F, c1, np.abs(v[-1]) ** 2, source.eigenvalues.copy())
    if eps is None or g is None:
        raise ValueError("eps and g are required with a coupling-function provider")
    return fidelity_from_roots(eigenvalues_boundary(source, eps, g), gap)


def fidelity_from_roots(roots: list[BoundaryRoot], gap: float = 1e-9) -> FidelityResult:
    """Fidelity from boundary-equation roots of the symmetric system.

    Each root carries ``psi(Q2) = parity * psi(Q1)``.
    """
    E = np.array([r.lam for r in roots])
    w = np.array([r.weight for r in roots])
    p = np.array([r.parity for r in roots], dtype=float)
    return FidelityResult(_cluster_fidelity(E, w, p * w, gap), w, w.copy(), E)


def fidelity_closed_form(sc: ScaledCoupling) -> float:
    """Window approximation of the fidelity in terms of C0 and w."""
    C0, w, R0 = sc.C0, sc.w, sc.R0
    if C0 == 0:
        return 0.75 if min(abs(w), abs(w - 1)) < 1e-15 else 1.0
    two = 2 * np.pi * R0
    if two > 700:
        lattice_sum = np.pi / R0
    else:
        lattice_sum = np.pi / R0 * np.sinh(two) / (np.cosh(two) - np.cos(2 * np.pi * w))
    bracket = lattice_sum + 1 / (w * w + R0 * R0) + 1 / ((w - 1) ** 2 + R0 * R0)
    return float((1 - C0 / 2 * bracket) / (C0 + 1))
