"""Exact single-excitation time evolution and trace analysis."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .errors import AnalysisError, SpecError
from .spectral import Spectrum

__all__ = ["DynamicsTrace", "TraceAnalysis", "evolve", "evolve_state", "analyze_trace",
           "qubit_amplitude_trace", "evolve_qubits", "time_averaged_fidelity", "max_transfer"]

_CHUNK = 256


@dataclass(frozen=True)
class DynamicsTrace:
    times: np.ndarray
    p_q1: np.ndarray
    p_q2: np.ndarray
    p_lat: np.ndarray


@dataclass(frozen=True)
class TraceAnalysis:
    omega: float
    fidelity: float
    max_transfer: float
    periods: int


def _check_times(times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise SpecError("time list must be a non-empty 1-D sequence")
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise SpecError("times must be strictly increasing")
    return t


def evolve_state(spec: Spectrum, psi0: np.ndarray, t: float) -> np.ndarray:
    """Apply exp(-i H t) to ``psi0`` through the eigenbasis."""
    V = spec.eigenvectors
    c = V.conj().T @ psi0
    return V @ (c * np.exp(-1j * spec.eigenvalues * t))


def evolve(spec: Spectrum, initial_site: int = 0, times=None) -> DynamicsTrace:
    """Populations on Q1, Q2 and the lattice for an excitation starting at one basis index.

    ``initial_site`` is a matrix index (0 is Q1).
    """
    if not spec.system.has_qubits:
        raise SpecError("dynamics needs a system with qubits")
    t = _check_times(times)
    V = spec.eigenvectors
    lam = spec.eigenvalues
    c = V[initial_site].conj()
    n = V.shape[0]
    p1 = np.empty(t.size)
    p2 = np.empty(t.size)
    pl = np.empty(t.size)
    for s in range(0, t.size, _CHUNK):
        tt = t[s:s + _CHUNK]
        psi = V @ (c[:, None] * np.exp(-1j * np.outer(lam, tt)))
        prob = np.abs(psi) ** 2
        p1[s:s + _CHUNK] = prob[0]
        p2[s:s + _CHUNK] = prob[n - 1]
        pl[s:s + _CHUNK] = prob[1:n - 1].sum(axis=0)
    return DynamicsTrace(t, p1, p2, pl)


def qubit_amplitude_trace(spec: Spectrum, times, target: int = -1, initial_site: int = 0):
    """Amplitude on one basis index only; cheap for long dense time grids."""
    t = _check_times(times)
    V = spec.eigenvectors
    coef = V[initial_site].conj() * V[target]
    out = np.empty(t.size, dtype=complex)
    for s in range(0, t.size, 4 * _CHUNK):
        tt = t[s:s + 4 * _CHUNK]
        out[s:s + 4 * _CHUNK] = np.exp(-1j * np.outer(tt, spec.eigenvalues)) @ coef
    return out


def evolve_qubits(spec: Spectrum, times, initial_site: int = 0) -> DynamicsTrace:
    """Like :func:`evolve` but only tracks the two qubits; ``p_lat`` is the complement.

    Cost is linear in the number of states per sample, which suits long windows.
    """
    if not spec.system.has_qubits:
        raise SpecError("dynamics needs a system with qubits")
    t = _check_times(times)
    p1 = np.abs(qubit_amplitude_trace(spec, t, 0, initial_site)) ** 2
    p2 = np.abs(qubit_amplitude_trace(spec, t, -1, initial_site)) ** 2
    return DynamicsTrace(t, p1, p2, 1.0 - p1 - p2)


def max_transfer(spec: Spectrum, tmax: float, samples: int = 20000) -> float:
    """Largest |Psi(Q2, t)|^2 on a uniform grid over [0, tmax]."""
    t = np.linspace(0.0, tmax, samples)
    return float(np.max(np.abs(qubit_amplitude_trace(spec, t)) ** 2))


def time_averaged_fidelity(trace: DynamicsTrace, t_from: float = 0.0) -> float:
    """Trapezoid time average of P_Q1 + P_Q2 over [t_from, t_end]."""
    sel = trace.times >= t_from
    t = trace.times[sel]
    y = trace.p_q1[sel] + trace.p_q2[sel]
    if t.size < 2:
        raise AnalysisError("need at least two samples to average")
    return float(trapezoid(y, t) / (t[-1] - t[0]))


def _dominant_frequency(t: np.ndarray, y: np.ndarray) -> float:
    dt = np.diff(t)
    if not np.allclose(dt, dt[0], rtol=1e-9, atol=0):
        raise AnalysisError("frequency analysis needs uniformly spaced samples")
    y = (y - y.mean()) * np.hanning(y.size)
    power = np.abs(np.fft.rfft(y)) ** 2
    if power.size < 4:
        raise AnalysisError("trace too short for a spectral peak")
    k = int(np.argmax(power[1:])) + 1
    floor = np.median(power[1:])
    if power[k] <= 10 * floor or power[k] == 0:
        raise AnalysisError("no spectral peak above the noise floor")
    shift = 0.0
    if 1 <= k < power.size - 1:
        a, b, c = np.log(power[k - 1:k + 2] + 1e-300)
        den = a - 2 * b + c
        if den != 0:
            shift = 0.5 * (a - c) / den
    n = t.size
    return float(2 * np.pi * (k + shift) / (n * dt[0]))


def analyze_trace(trace: DynamicsTrace, min_periods: int = 20) -> TraceAnalysis:
    """Dominant angular frequency of P_Q2, fidelity over whole periods, and max P_Q2."""
    omega = _dominant_frequency(trace.times, trace.p_q2)
    t = trace.times
    period = 2 * np.pi / omega
    span = t[-1] - t[0]
    periods = int(np.floor(span / period + 1e-9))
    if periods < min_periods:
        raise AnalysisError(f"trace covers {span / period:.1f} periods, need {min_periods}")
    end = t[0] + periods * period
    sel = t <= end + 1e-12
    tt = t[sel]
    y = (trace.p_q1 + trace.p_q2)[sel]
    fid = float(trapezoid(y, tt) / (tt[-1] - tt[0]))
    return TraceAnalysis(omega=omega, fidelity=fid, max_transfer=float(trace.p_q2.max()),
                         periods=periods)
