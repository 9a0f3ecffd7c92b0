"""Pi-rotation combined with a blue-site sign flip, and parity sectors."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DegeneracyError, SymmetryUnavailableError
from .lattice import HamiltonianMatrix, SystemSpec, is_blue, site_coords
from .spectral import Spectrum, _fix_phases

__all__ = ["SymmetryOperator", "build_symmetry_operator", "classify_parity"]


@dataclass(frozen=True, eq=False)
class SymmetryOperator:
    """``U = sum_j b(j) |j><N-1-j|`` in matrix-index form.

    ``permutation[i]`` is the index that ``U`` maps onto ``i`` and ``signs[i]``
    is ``b(i)``.
    """

    permutation: np.ndarray
    signs: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.signs)

    def apply(self, vecs: np.ndarray) -> np.ndarray:
        if vecs.ndim == 1:
            return self.signs * vecs[self.permutation]
        return self.signs[:, None] * vecs[self.permutation]

    def matrix(self) -> np.ndarray:
        U = np.zeros((self.dim, self.dim))
        U[np.arange(self.dim), self.permutation] = self.signs
        return U


def _symmetric_spec(spec: SystemSpec) -> None:
    if not spec.is_square or spec.lx % 2 == 0:
        raise SymmetryUnavailableError("symmetry needs an odd square lattice")
    if spec.has_qubits:
        q1, q2 = spec.qubit1, spec.qubit2
        if spec.d is not None or spec.connection_sites() != (1, spec.n_sites):
            raise SymmetryUnavailableError("qubits must sit on opposite corners")
        if q1.epsilon != q2.epsilon or q1.g != q2.g:
            raise SymmetryUnavailableError("qubit energies and couplings must match")


def build_symmetry_operator(spec: SystemSpec | HamiltonianMatrix) -> SymmetryOperator:
    """Symmetry operator on the full (or, without qubits, lattice-only) basis."""
    if isinstance(spec, HamiltonianMatrix):
        with_qubits = spec.has_qubits
        spec = spec.spec
    else:
        with_qubits = spec.has_qubits
    _symmetric_spec(spec)
    L = spec.lx
    n = L * L
    b = np.array([-1.0 if is_blue(*site_coords(jj, L), spec.blue_rows) else 1.0
                  for jj in range(1, n + 1)])
    if with_qubits:
        b = np.concatenate([[1.0], b, [1.0]])
    dim = len(b)
    return SymmetryOperator(np.arange(dim)[::-1].copy(), b)


def _clusters(vals: np.ndarray, gap: float) -> list[np.ndarray]:
    breaks = np.nonzero(np.diff(vals) > gap)[0] + 1
    return np.split(np.arange(len(vals)), breaks)


def classify_parity(spec: Spectrum, U: SymmetryOperator | None = None, gap: float = 1e-9,
                    tol: float = 1e-8) -> Spectrum:
    """Rotate degenerate blocks into U eigenvectors and label each state +-1."""
    if U is None:
        U = build_symmetry_operator(spec.system)
    if U.dim != len(spec):
        raise ValueError(f"operator dimension {U.dim} does not match spectrum {len(spec)}")
    vecs = spec.eigenvectors.copy()
    for block in _clusters(spec.eigenvalues, gap):
        if len(block) < 2:
            continue
        V = vecs[:, block]
        M = V.conj().T @ U.apply(V)
        _, R = np.linalg.eigh(0.5 * (M + M.conj().T))
        vecs[:, block] = _fix_phases(V @ R)
    UV = U.apply(vecs)
    expect = np.real(np.einsum("ij,ij->j", vecs.conj(), UV))
    parity = np.where(expect >= 0, 1, -1)
    resid = np.linalg.norm(UV - parity[None, :] * vecs, axis=0)
    if resid.max() > tol:
        n = int(np.argmax(resid))
        raise DegeneracyError(f"state {n} (E={spec.eigenvalues[n]:.6g}) has parity "
                              f"residual {resid[n]:.2e}")
    return replace(spec, eigenvectors=vecs, parity=parity)
