"""Noncommutative Fourier transform on SU(2) and the torus."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .group_harmonics import (
    SU2,
    TORUS,
    QuadratureGrid,
    RepIndex,
    TorusGrid,
    small_d,
    su2_dual,
    torus_character,
    torus_dual,
    wigner_matrices,
)


@dataclass
class FourierCoefficients:
    """Sparse map ``RepIndex -> d x d`` complex matrix.

    ``band_limit`` is ``lmax`` on SU(2) and ``max |k_i|`` on the torus.
    """

    group: str
    entries: dict[RepIndex, np.ndarray] = field(default_factory=dict)
    band_limit: float = 0.0
    ndim: int = 1

    def __post_init__(self):
        clean = {}
        for rep, mat in self.entries.items():
            mat = np.asarray(mat, dtype=complex)
            if rep.group != self.group:
                raise ValueError(f"{rep.label()} does not belong to {self.group}")
            if mat.shape != (rep.dim, rep.dim):
                raise ValueError(f"{rep.label()} needs a {rep.dim}x{rep.dim} matrix, got {mat.shape}")
            clean[rep] = mat
        self.entries = dict(sorted(clean.items()))
        if self.entries:
            self.band_limit = max(self.band_limit, max(_band(r) for r in self.entries))

    def __iter__(self) -> Iterator[RepIndex]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, rep: RepIndex) -> np.ndarray:
        if rep in self.entries:
            return self.entries[rep]
        return np.zeros((rep.dim, rep.dim), dtype=complex)

    def items(self):
        return self.entries.items()

    def copy(self) -> "FourierCoefficients":
        return FourierCoefficients(self.group, {r: m.copy() for r, m in self.entries.items()}, self.band_limit, self.ndim)

    def _combine(self, other: "FourierCoefficients", sign: float) -> "FourierCoefficients":
        if other.group != self.group:
            raise ValueError("cannot combine coefficients of different groups")
        out = {r: m.copy() for r, m in self.entries.items()}
        for r, m in other.entries.items():
            out[r] = out[r] + sign * m if r in out else sign * m
        return FourierCoefficients(self.group, out, max(self.band_limit, other.band_limit), self.ndim)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __mul__(self, scalar):
        return FourierCoefficients(self.group, {r: scalar * m for r, m in self.entries.items()}, self.band_limit, self.ndim)

    __rmul__ = __mul__

    def restrict(self, band_limit: float) -> "FourierCoefficients":
        kept = {r: m for r, m in self.entries.items() if _band(r) <= band_limit + 1e-9}
        return FourierCoefficients(self.group, kept, band_limit, self.ndim)

    def max_abs_difference(self, other: "FourierCoefficients") -> float:
        reps = set(self.entries) | set(other.entries)
        return max((float(np.abs(self[r] - other[r]).max()) for r in reps), default=0.0)

    def to_records(self) -> list[dict]:
        records = []
        for rep, mat in self.entries.items():
            rec = {"group": rep.group}
            if rep.group == SU2:
                rec["two_ell"] = rep.two_ell
            else:
                rec["k"] = list(rep.k)
            rec["matrix"] = [[[float(z.real), float(z.imag)] for z in row] for row in mat]
            records.append(rec)
        return records

    def to_json(self, **kwargs) -> str:
        doc = {"group": self.group, "band_limit": self.band_limit, "ndim": self.ndim, "coefficients": self.to_records()}
        return json.dumps(doc, **kwargs)

    @classmethod
    def from_json(cls, text: str) -> "FourierCoefficients":
        doc = json.loads(text)
        entries = {}
        for rec in doc["coefficients"]:
            rep = RepIndex(SU2, rec["two_ell"]) if rec["group"] == SU2 else RepIndex.torus(*rec["k"])
            mat = np.array([[complex(re, im) for re, im in row] for row in rec["matrix"]])
            entries[rep] = mat
        return cls(doc["group"], entries, doc.get("band_limit", 0.0), doc.get("ndim", 1))


def _band(rep: RepIndex) -> float:
    return rep.ell if rep.group == SU2 else float(max(abs(v) for v in rep.k))


@dataclass(frozen=True)
class FunctionSamples:
    grid: QuadratureGrid | TorusGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex).ravel()
        if values.size != self.grid.size:
            raise ValueError(f"{values.size} samples for a grid of {self.grid.size} nodes")
        object.__setattr__(self, "values", values)

    def l2_norm(self) -> float:
        """Quadrature ``L^2(G)`` norm."""
        return math.sqrt(math.fsum(self.grid.weights * np.abs(self.values) ** 2))


def sample(f, grid: QuadratureGrid | TorusGrid) -> FunctionSamples:
    """Sample a vectorised callable on a grid (``f(phi, theta, psi)`` or ``f(x)``)."""
    if isinstance(grid, TorusGrid):
        return FunctionSamples(grid, f(grid.points))
    return FunctionSamples(grid, grid.sample(f))


def _weights(two_max: int) -> np.ndarray:
    """Weights ``m = -two_max/2 .. two_max/2`` in unit steps."""
    return np.arange(two_max + 1) - two_max / 2


def forward_transform(samples: FunctionSamples, lmax: float | None = None, *, integer_only: bool = False) -> FourierCoefficients:
    """Fourier coefficients ``f^(xi) = int f(x) xi(x)^* dx`` for all ``xi`` up to ``lmax``.

    Raises
    ------
    ValueError
        If the grid does not integrate band-limit-``lmax`` products exactly.
    """
    grid = samples.grid
    if isinstance(grid, TorusGrid):
        return _torus_forward(samples, grid, lmax)
    if lmax is None:
        lmax = grid.lmax
    two = int(np.floor(2 * lmax + 1e-9))
    if two > grid.two_lmax:
        raise ValueError(f"grid is exact up to lmax={grid.lmax}, band limit {lmax} requested")
    f = samples.values.reshape(grid.shape)
    out = {}
    for half in (False, True):
        reps = [r for r in su2_dual(lmax, integer_only=integer_only) if (r.two_ell % 2 == 1) == half]
        if not reps:
            continue
        m = _weights(max(r.two_ell for r in reps))
        e_phi = np.exp(1j * np.outer(m, grid.phi_nodes)) * grid.phi_weights
        e_psi = np.exp(1j * np.outer(grid.psi_nodes, m)) * grid.psi_weights[:, None]
        g = np.einsum("mp,ptq,qn->mtn", e_phi, f, e_psi, optimize=True)
        for rep in reps:
            start = (m.size - rep.dim) // 2
            sl = slice(start, start + rep.dim)
            d = small_d(rep.two_ell, grid.theta_nodes)  # (t, m, n)
            r = np.einsum("t,tmn,mtn->mn", grid.theta_weights, d, g[sl, :, sl], optimize=True)
            out[rep] = r.T
    return FourierCoefficients(SU2, out, lmax)


def _torus_forward(samples: FunctionSamples, grid: TorusGrid, kmax) -> FourierCoefficients:
    if kmax is None:
        kmax = grid.kmax
    kmax = int(kmax)
    if kmax > grid.kmax:
        raise ValueError(f"grid resolves |k| <= {grid.kmax}, band limit {kmax} requested")
    spec = np.fft.fftn(samples.values.reshape(grid.shape)) / grid.size
    out = {}
    for rep in torus_dual(kmax, grid.ndim):
        idx = tuple(v % grid.n for v in rep.k)
        out[rep] = np.array([[spec[idx]]])
    return FourierCoefficients(TORUS, out, kmax, grid.ndim)


def inverse_transform(coeffs: FourierCoefficients, points) -> np.ndarray:
    """Evaluate ``f(x) = sum d_xi Tr(xi(x) f^(xi))``.

    ``points`` is a :class:`QuadratureGrid` / :class:`TorusGrid` (values returned in
    node order) or, for SU(2), a ``(phi, theta, psi)`` triple of arrays, or, for
    the torus, an array of shape ``(P, ndim)``.
    """
    if coeffs.group == TORUS:
        x = points.points if isinstance(points, TorusGrid) else np.asarray(points, dtype=float)
        out = np.zeros(x.shape[:-1] if x.ndim > 1 else x.shape, dtype=complex)
        for rep, mat in coeffs.items():
            out = out + torus_character(rep.k, x) * mat[0, 0]
        return out
    if isinstance(points, QuadratureGrid):
        return _su2_synthesis_on_grid(coeffs, points)
    phi, theta, psi = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in points))
    out = np.zeros(phi.shape, dtype=complex)
    for rep, mat in coeffs.items():
        D = wigner_matrices(rep.two_ell, phi, theta, psi)
        out = out + rep.dim * np.einsum("...mn,nm->...", D, mat)
    return out


def _su2_synthesis_on_grid(coeffs: FourierCoefficients, grid: QuadratureGrid) -> np.ndarray:
    total = np.zeros(grid.shape, dtype=complex)
    for half in (False, True):
        reps = [r for r in coeffs if (r.two_ell % 2 == 1) == half]
        if not reps:
            continue
        m = _weights(max(r.two_ell for r in reps))
        h = np.zeros((m.size, grid.theta_nodes.size, m.size), dtype=complex)
        for rep in reps:
            start = (m.size - rep.dim) // 2
            sl = slice(start, start + rep.dim)
            d = small_d(rep.two_ell, grid.theta_nodes)
            h[sl, :, sl] += rep.dim * np.einsum("tmn,nm->mtn", d, coeffs[rep])
        e_phi = np.exp(-1j * np.outer(grid.phi_nodes, m))
        e_psi = np.exp(-1j * np.outer(m, grid.psi_nodes))
        total += np.einsum("pm,mtn,nq->ptq", e_phi, h, e_psi, optimize=True)
    return total.ravel()


def plancherel_norm(coeffs: FourierCoefficients) -> float:
    """``(sum_xi d_xi ||f^(xi)||_HS^2)^(1/2)`` with compensated summation."""
    terms = [rep.dim * float(np.sum(np.abs(mat) ** 2)) for rep, mat in coeffs.items()]
    return math.sqrt(math.fsum(terms))


def random_coefficients(
    group: str,
    band_limit: float,
    rng: np.random.Generator,
    *,
    decay: float = 0.0,
    integer_only: bool = False,
    ndim: int = 1,
    real: bool = False,
) -> FourierCoefficients:
    """Complex Gaussian coefficients scaled by ``<xi>^(-decay)``.

    With ``real=True`` on the torus the conjugate symmetry of real functions is
    imposed.
    """
    reps = su2_dual(band_limit, integer_only=integer_only) if group == SU2 else torus_dual(int(band_limit), ndim)
    out = {}
    for rep in reps:
        scale = (1.0 + rep.casimir) ** (-decay / 2)
        z = rng.standard_normal((rep.dim, rep.dim)) + 1j * rng.standard_normal((rep.dim, rep.dim))
        out[rep] = scale * z / math.sqrt(2)
    if real and group == TORUS:
        for rep in reps:
            partner = RepIndex.torus(*(-v for v in rep.k))
            if partner < rep:
                out[rep] = out[partner].conj()
            elif partner == rep:
                out[rep] = out[rep].real.astype(complex)
    return FourierCoefficients(group, out, band_limit, ndim)


def single_mode(rep: RepIndex, matrix=None, *, ndim: int = 1) -> FourierCoefficients:
    """Coefficients supported on one representation (identity matrix by default)."""
    mat = np.eye(rep.dim, dtype=complex) if matrix is None else np.asarray(matrix, dtype=complex)
    return FourierCoefficients(rep.group, {rep: mat}, _band(rep), ndim if rep.group == TORUS else 1)
