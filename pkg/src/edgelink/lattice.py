"""Single-excitation Hamiltonian of a quarter-flux Hofstadter lattice with two qubits.

Basis order: ``Q1`` at index 0, lattice site ``j(r, c) = (r - 1) * lx + c`` at
index ``j``, ``Q2`` at index ``lx * ly + 1``.  Rows ``r`` run along ``y`` and
columns ``c`` along ``x``, both 1-based.

The gauge is fixed so that, with blue sites at even ``(r, c)``, the row of an
inner site reads::

    even c:  -i J psi(r+1,c) + i J psi(r-1,c) + (-1)^r J psi(r,c-1) - J psi(r,c+1)
    odd c:   -J psi(r+1,c) - J psi(r-1,c) + (-1)^r J psi(r,c+1) - J psi(r,c-1)

Every plaquette then encloses flux pi/2 (counterclockwise in the x-y plane).
"""
from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import GeometryError, SpecError

__all__ = [
    "Qubit",
    "SystemSpec",
    "HamiltonianMatrix",
    "build_square_system",
    "build_rect_system",
    "build_system",
    "build_lattice",
    "plaquette_flux",
    "bond_table",
    "write_bond_csv",
    "site_index",
    "site_coords",
    "is_blue",
]

_JSON_KEYS = {"lx", "ly", "j", "eps1", "eps2", "g1", "g2", "site1", "site2", "d", "blue_rows"}


@dataclass(frozen=True)
class Qubit:
    epsilon: float
    g: float
    site: int | None = None


@dataclass(frozen=True)
class SystemSpec:
    """Geometry, gauge and physical parameters of one configuration.

    ``site`` fields are lattice indices ``j(r, c)``.  When ``d`` is given the
    qubits sit on row 1 at ``d`` spacings apart around the central column and
    any explicit sites are ignored.
    """

    lx: int
    ly: int
    j: float = 1.0
    qubit1: Qubit | None = None
    qubit2: Qubit | None = None
    d: int | None = None
    blue_rows: str = "even"

    def __post_init__(self):
        if self.lx < 3 or self.ly < 3:
            raise GeometryError(f"lattice must be at least 3x3, got {self.lx}x{self.ly}")
        if not self.j > 0:
            raise SpecError(f"hopping J must be positive, got {self.j}")
        if self.blue_rows not in ("even", "odd"):
            raise SpecError(f"blue_rows must be 'even' or 'odd', got {self.blue_rows!r}")
        if (self.qubit1 is None) != (self.qubit2 is None):
            raise SpecError("either both qubits or neither must be given")
        for q in (self.qubit1, self.qubit2):
            if q is not None and q.g < 0:
                raise SpecError(f"coupling g must be non-negative, got {q.g}")
        if self.d is not None and self.d < 0:
            raise SpecError(f"distance d must be non-negative, got {self.d}")

    @property
    def is_square(self) -> bool:
        return self.lx == self.ly

    @property
    def n_sites(self) -> int:
        return self.lx * self.ly

    @property
    def has_qubits(self) -> bool:
        return self.qubit1 is not None

    @classmethod
    def square(cls, L: int, eps: float = 0.0, g: float = 0.0, j: float = 1.0,
               qubits: bool = True, **kw) -> "SystemSpec":
        """Square lattice with identical qubits on corners 1 and L^2."""
        if not qubits:
            return cls(L, L, j=j, **kw)
        return cls(L, L, j=j, qubit1=Qubit(eps, g, 1), qubit2=Qubit(eps, g, L * L), **kw)

    @classmethod
    def rect(cls, lx: int, ly: int, d: int | None = None, eps: float = 0.0, g: float = 0.0,
             j: float = 1.0, **kw) -> "SystemSpec":
        if d is None:
            return cls(lx, ly, j=j, **kw)
        return cls(lx, ly, j=j, qubit1=Qubit(eps, g), qubit2=Qubit(eps, g), d=d, **kw)

    def with_qubits(self, eps1: float, g1: float, eps2: float | None = None,
                    g2: float | None = None) -> "SystemSpec":
        """Copy with new qubit energies/couplings, keeping attachment sites."""
        eps2 = eps1 if eps2 is None else eps2
        g2 = g1 if g2 is None else g2
        s1, s2 = self.connection_sites() if (self.has_qubits or self.d is not None) else (
            1, self.n_sites)
        return SystemSpec(self.lx, self.ly, j=self.j, qubit1=Qubit(eps1, g1, s1),
                          qubit2=Qubit(eps2, g2, s2), d=self.d, blue_rows=self.blue_rows)

    def isolated(self) -> "SystemSpec":
        return SystemSpec(self.lx, self.ly, j=self.j, blue_rows=self.blue_rows)

    def connection_sites(self) -> tuple[int, int]:
        """Lattice indices the two qubits attach to."""
        if self.d is not None:
            return edge_pair_sites(self.lx, self.d)
        if not self.has_qubits:
            raise SpecError("system has no qubits")
        s1 = 1 if self.qubit1.site is None else self.qubit1.site
        s2 = self.n_sites if self.qubit2.site is None else self.qubit2.site
        return s1, s2

    # JSON ------------------------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict) -> "SystemSpec":
        unknown = set(data) - _JSON_KEYS
        if unknown:
            raise SpecError(f"unknown system keys: {sorted(unknown)}")
        try:
            lx = int(data["lx"])
        except KeyError:
            raise SpecError("system requires 'lx'") from None
        ly = int(data.get("ly", lx))
        kw = dict(j=float(data.get("j", 1.0)), blue_rows=data.get("blue_rows", "even"))
        d = data.get("d")
        has_q = any(k in data for k in ("eps1", "eps2", "g1", "g2", "site1", "site2")) or d is not None
        if not has_q:
            return cls(lx, ly, **kw)
        eps1 = float(data.get("eps1", 0.0))
        eps2 = float(data.get("eps2", eps1))
        g1 = float(data.get("g1", 0.0))
        g2 = float(data.get("g2", g1))
        s1 = data.get("site1")
        s2 = data.get("site2")
        return cls(lx, ly, qubit1=Qubit(eps1, g1, None if s1 is None else int(s1)),
                   qubit2=Qubit(eps2, g2, None if s2 is None else int(s2)),
                   d=None if d is None else int(d), **kw)

    @classmethod
    def from_json(cls, source: str | Path) -> "SystemSpec":
        text = Path(source).read_text() if isinstance(source, Path) else source
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        out = {"lx": self.lx, "ly": self.ly, "j": self.j}
        if self.blue_rows != "even":
            out["blue_rows"] = self.blue_rows
        if self.has_qubits:
            out.update(eps1=self.qubit1.epsilon, eps2=self.qubit2.epsilon,
                       g1=self.qubit1.g, g2=self.qubit2.g)
            if self.d is not None:
                out["d"] = self.d
            else:
                out["site1"], out["site2"] = self.connection_sites()
        return out


@dataclass(frozen=True, eq=False)
class HamiltonianMatrix:
    """Immutable Hamiltonian together with the layout needed to read it."""

    matrix: np.ndarray
    spec: SystemSpec
    sites: tuple[int, int] | None = None
    degenerate: bool = field(default=False)

    def __post_init__(self):
        self.matrix.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def lx(self) -> int:
        return self.spec.lx

    @property
    def ly(self) -> int:
        return self.spec.ly

    @property
    def has_qubits(self) -> bool:
        return self.sites is not None

    @property
    def offset(self) -> int:
        """Matrix index of lattice site j is ``j - 1 + offset``."""
        return 1 if self.has_qubits else 0

    @property
    def q1(self) -> int:
        return 0

    @property
    def q2(self) -> int:
        return self.dim - 1

    def index(self, r: int, c: int) -> int:
        return site_index(r, c, self.lx) - 1 + self.offset

    def lattice_block(self) -> np.ndarray:
        o = self.offset
        n = self.lx * self.ly
        return self.matrix[o:o + n, o:o + n]

    def with_matrix(self, matrix: np.ndarray) -> "HamiltonianMatrix":
        return HamiltonianMatrix(np.array(matrix, dtype=complex), self.spec, self.sites,
                                 self.degenerate)


def site_index(r: int, c: int, lx: int) -> int:
    return (r - 1) * lx + c


def site_coords(j: int, lx: int) -> tuple[int, int]:
    return (j - 1) // lx + 1, (j - 1) % lx + 1


def is_blue(r: int, c: int, blue_rows: str = "even") -> bool:
    row_ok = (r % 2 == 0) if blue_rows == "even" else (r % 2 == 1)
    return row_ok and c % 2 == 0


def edge_pair_sites(lx: int, d: int) -> tuple[int, int]:
    """Row-1 sites offset by -ceil(d/2) and +floor(d/2) from the central column."""
    if d > lx - 1:
        raise SpecError(f"d={d} does not fit on an edge of length {lx}")
    c0 = (lx + 1) // 2
    c1, c2 = c0 - (d - d // 2), c0 + d // 2
    if c1 < 1 or c2 > lx:
        raise SpecError(f"d={d} places a qubit off the edge (columns {c1}, {c2})")
    return c1, c2


def _on_boundary(j: int, lx: int, ly: int) -> bool:
    r, c = site_coords(j, lx)
    return r in (1, ly) or c in (1, lx)


def build_lattice(lx: int, ly: int, j: float = 1.0, blue_rows: str = "even") -> np.ndarray:
    """Isolated lattice block (lx*ly square matrix, 0-based site order)."""
    n = lx * ly
    H = np.zeros((n, n), dtype=complex)
    shift = 0 if blue_rows == "even" else 1

    def idx(r, c):
        return (r - 1) * lx + c - 1

    for r in range(1, ly + 1):
        sign = -1.0 if (r + shift) % 2 else 1.0
        for c in range(1, lx + 1):
            i = idx(r, c)
            if c % 2 == 0:
                if r < ly:
                    H[i, idx(r + 1, c)] = -1j * j
                    H[idx(r + 1, c), i] = 1j * j
                if c < lx:
                    H[i, idx(r, c + 1)] = -j
                    H[idx(r, c + 1), i] = -j
            else:
                if r < ly:
                    H[i, idx(r + 1, c)] = -j
                    H[idx(r + 1, c), i] = -j
                if c < lx:
                    H[i, idx(r, c + 1)] = sign * j
                    H[idx(r, c + 1), i] = sign * j
    return H


def _assemble(spec: SystemSpec, sites: tuple[int, int] | None) -> np.ndarray:
    lat = build_lattice(spec.lx, spec.ly, spec.j, spec.blue_rows)
    if sites is None:
        return lat
    n = spec.n_sites
    H = np.zeros((n + 2, n + 2), dtype=complex)
    H[1:n + 1, 1:n + 1] = lat
    q1, q2 = spec.qubit1, spec.qubit2
    s1, s2 = sites
    H[0, 0] = q1.epsilon
    H[n + 1, n + 1] = q2.epsilon
    H[0, s1] = H[s1, 0] = -q1.g
    H[n + 1, s2] = H[s2, n + 1] = -q2.g
    return H


def build_square_system(spec: SystemSpec) -> HamiltonianMatrix:
    """Square odd-L system; qubits default to corners 1 and L^2."""
    if not spec.is_square:
        raise GeometryError(f"square system needs lx == ly, got {spec.lx}x{spec.ly}")
    if spec.lx % 2 == 0:
        raise GeometryError(f"square lattice size must be odd, got L={spec.lx}")
    if spec.d is not None:
        raise SpecError("edge distance d applies to the rectangular builder only")
    sites = spec.connection_sites() if spec.has_qubits else None
    if sites is not None:
        for s in sites:
            if not 1 <= s <= spec.n_sites or not _on_boundary(s, spec.lx, spec.ly):
                raise SpecError(f"connection site {s} is not on the lattice boundary")
    return HamiltonianMatrix(_assemble(spec, sites), spec, sites)


def build_rect_system(spec: SystemSpec) -> HamiltonianMatrix:
    """Rectangular strip, qubits at distance d on the lower long edge.

    Without qubits this is the isolated strip.  With explicit ``site1/site2``
    and no ``d`` the given boundary sites are used.
    """
    if spec.lx < spec.ly:
        raise GeometryError(f"rectangular builder expects lx >= ly, got {spec.lx}x{spec.ly}")
    sites = spec.connection_sites() if spec.has_qubits else None
    degenerate = False
    if sites is not None:
        for s in sites:
            if not 1 <= s <= spec.n_sites or not _on_boundary(s, spec.lx, spec.ly):
                raise SpecError(f"connection site {s} is not on the lattice boundary")
        if sites[0] == sites[1]:
            degenerate = True
            warnings.warn("both qubits attach to the same lattice site", stacklevel=2)
    return HamiltonianMatrix(_assemble(spec, sites), spec, sites, degenerate)


def _loop(r: int, c: int, clockwise: bool) -> list[tuple[int, int]]:
    loop = [(r, c), (r, c + 1), (r + 1, c + 1), (r + 1, c)]
    if clockwise:
        loop = loop[::-1]
    return loop + loop[:1]


def plaquette_flux(H: HamiltonianMatrix, r: int, c: int, clockwise: bool = False) -> float:
    """Peierls-phase sum around the plaquette with lower-left corner (r, c), mod 2*pi.

    A hop i -> j with amplitude ``H[j, i] = -J exp(i phi)`` contributes ``phi``.
    """
    if not (1 <= r < H.ly and 1 <= c < H.lx):
        raise IndexError(f"no plaquette with lower-left corner ({r}, {c})")
    loop = _loop(r, c, clockwise)
    total = 0.0
    for (ra, ca), (rb, cb) in zip(loop[:-1], loop[1:]):
        amp = H.matrix[H.index(rb, cb), H.index(ra, ca)]
        total += np.angle(-amp)
    return float(np.mod(total, 2 * np.pi))


def bond_table(H: HamiltonianMatrix) -> list[tuple[int, int, float]]:
    """(from, to, phase) for each lattice bond once, ``from < to`` as site indices."""
    lat = H.lattice_block()
    rows = []
    ii, jj = np.nonzero(np.triu(lat))
    for a, b in zip(ii, jj):
        # hop a -> b has amplitude H[b, a]
        phase = float(np.mod(np.angle(-lat[b, a] / H.spec.j), 2 * np.pi))
        rows.append((int(a) + 1, int(b) + 1, phase))
    return rows


def write_bond_csv(H: HamiltonianMatrix, fh=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["from", "to", "phase"])
    for a, b, ph in bond_table(H):
        w.writerow([a, b, f"{ph:.12g}"])
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def build_system(spec: SystemSpec) -> HamiltonianMatrix:
    """Square builder for corner-coupled square specs, rectangular builder otherwise."""
    if spec.is_square and spec.d is None:
        return build_square_system(spec)
    return build_rect_system(spec)
