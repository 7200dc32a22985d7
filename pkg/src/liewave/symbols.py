"""Diagonal matrix symbols of the Laplacian and sub-Laplacian."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .group_harmonics import (
    SU2,
    TORUS,
    EulerAngles,
    RepIndex,
    euler_laplacian,
    euler_sublaplacian,
    su2_dual,
    torus_dual,
    wigner_jet,
)

PointwiseOperator = Callable[[Mapping[str, np.ndarray], float, float, float], np.ndarray]


class SymbolOracleError(RuntimeError):
    """The tabulated symbol disagrees with the Euler-angle oracle."""


def identity_operator(jet, phi, theta, psi):
    return jet["f"]


def sublaplacian_operator(jet, phi, theta, psi):
    return euler_sublaplacian(jet, theta)


def laplacian_operator(jet, phi, theta, psi):
    return euler_laplacian(jet, theta)


@dataclass(frozen=True)
class DiagonalSymbol:
    """Eigenvalues ``nu_j(xi)^2`` of ``sigma_{-L}(xi)`` for every ``xi`` up to ``band_limit``.

    Entry ``j`` of ``nu_squared[xi]`` acts on row ``j`` of a Fourier coefficient.
    """

    group: str
    operator: str
    nu_squared: dict[RepIndex, np.ndarray]
    hormander_order: int
    band_limit: float
    ndim: int = 1
    _nu_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for rep, vals in self.nu_squared.items():
            vals = np.asarray(vals, dtype=float)
            if vals.shape != (rep.dim,):
                raise ValueError(f"{rep.label()} needs {rep.dim} eigenvalues")
            if np.any(vals < -1e-12):
                raise ValueError(f"negative nu^2 at {rep.label()}")
            vals = np.maximum(vals, 0.0)
            vals.setflags(write=False)
            self.nu_squared[rep] = vals

    @property
    def reps(self) -> list[RepIndex]:
        return sorted(self.nu_squared)

    def __contains__(self, rep: RepIndex) -> bool:
        return rep in self.nu_squared

    def nu(self, rep: RepIndex) -> np.ndarray:
        if rep not in self._nu_cache:
            self._nu_cache[rep] = np.sqrt(self.nu_squared[rep])
        return self._nu_cache[rep]

    @staticmethod
    def jap(rep: RepIndex) -> float:
        """``<xi> = (1 + |xi|^2)^(1/2)``."""
        return math.sqrt(1.0 + rep.casimir)

    def distinct_nu(self, reps=None) -> np.ndarray:
        reps = self.reps if reps is None else reps
        vals = np.concatenate([self.nu(r) for r in reps]) if reps else np.zeros(0)
        return np.unique(np.round(vals, 12))

    def to_records(self) -> list[dict]:
        out = []
        for rep in self.reps:
            rec = {"two_ell": rep.two_ell} if rep.group == SU2 else {"k": list(rep.k)}
            rec["nu_squared"] = [float(v) for v in self.nu_squared[rep]]
            rec["jap"] = self.jap(rep)
            out.append(rec)
        return out

    def to_json(self, **kwargs) -> str:
        doc = {
            "group": self.group,
            "operator": self.operator,
            "hormander_order": self.hormander_order,
            "band_limit": self.band_limit,
            "ndim": self.ndim,
            "symbol": self.to_records(),
        }
        return json.dumps(doc, **kwargs)

    @classmethod
    def from_json(cls, text: str) -> "DiagonalSymbol":
        doc = json.loads(text)
        table = {}
        for rec in doc["symbol"]:
            rep = RepIndex(SU2, rec["two_ell"]) if "two_ell" in rec else RepIndex.torus(*rec["k"])
            table[rep] = np.array(rec["nu_squared"], dtype=float)
        return cls(doc["group"], doc["operator"], table, doc["hormander_order"], doc["band_limit"], doc.get("ndim", 1))


def laplacian_symbol(lmax: float, group: str = SU2, *, ndim: int = 1, integer_only: bool = False) -> DiagonalSymbol:
    """``nu_j(xi)^2 = |xi|^2`` for all ``j``: ``ell(ell+1)`` on SU(2), ``|k|^2`` on the torus."""
    if group == SU2:
        reps = su2_dual(lmax, integer_only=integer_only)
    elif group == TORUS:
        reps = torus_dual(int(lmax), ndim)
    else:
        raise ValueError(f"unknown group {group!r}")
    table = {rep: np.full(rep.dim, rep.casimir) for rep in reps}
    return DiagonalSymbol(group, "laplacian", table, 1, lmax, ndim)


def sublaplacian_symbol(
    lmax: float,
    *,
    integer_only: bool = False,
    verify_lmax: float | None = 5.0,
    tol: float = 1e-6,
    seed: int = 0,
) -> DiagonalSymbol:
    """Sub-Laplacian ``X^2 + Y^2`` on SU(2): ``nu_mu^2 = ell(ell+1) - mu^2``, ``r = 2``.

    The closed form is checked against the Euler-angle oracle for every
    ``ell <= verify_lmax`` at a random group element (``None`` disables it).

    Raises
    ------
    SymbolOracleError
        If the oracle and the table differ by more than ``tol``.
    """
    reps = su2_dual(lmax, integer_only=integer_only)
    table = {rep: rep.casimir - rep.m_values() ** 2 for rep in reps}
    if verify_lmax is not None:
        g = EulerAngles.random(np.random.default_rng(seed))
        for rep in reps:
            if rep.ell > verify_lmax:
                break
            sym = extract_symbol(sublaplacian_operator, rep, g)
            err = float(np.abs(sym + np.diag(table[rep])).max())
            if err > tol:
                raise SymbolOracleError(
                    f"sub-Laplacian symbol at {rep.label()} differs from the Euler-angle oracle by {err:.3e}"
                )
    return DiagonalSymbol(SU2, "sublaplacian", table, 2, lmax)


def extract_symbol(T: PointwiseOperator, rep: RepIndex, g) -> np.ndarray:
    """Matrix symbol ``xi(g)^* (T xi)(g)`` of a pointwise operator ``T(jet, phi, theta, psi)``."""
    if rep.group != SU2:
        raise ValueError("symbol extraction through Euler angles needs an SU2 index")
    phi, theta, psi = g.as_tuple() if isinstance(g, EulerAngles) else g
    if abs(math.sin(theta)) < 1e-12:
        raise ValueError("theta must avoid the singular set {0, pi}")
    jet = wigner_jet(rep.two_ell, phi, theta, psi)
    t_xi = np.asarray(T(jet, phi, theta, psi))
    return jet["f"].conj().T @ t_xi


@dataclass(frozen=True)
class HormanderReport:
    r: int
    c_lower: float
    c_upper: float
    c_lower_half: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            "r": self.r,
            "c_lower": self.c_lower,
            "c_upper": self.c_upper,
            "c_lower_half_band": self.c_lower_half,
            "pass": self.passed,
        }


def _bound_ratios(sym: DiagonalSymbol, r: int, band: float) -> tuple[float, float]:
    lower, upper = [], []
    for rep in sym.reps:
        if _band(rep) > band + 1e-9:
            continue
        jap = sym.jap(rep)
        nu1 = sym.nu(rep) + 1.0
        lower.append(float(np.min(nu1)) / jap ** (1.0 / r))
        upper.append(float(np.max(nu1)) / jap)
    return min(lower), max(upper)


def _band(rep: RepIndex) -> float:
    return rep.ell if rep.group == SU2 else float(max(abs(v) for v in rep.k))


def check_hormander_bounds(sym: DiagonalSymbol, r: int | None = None, *, stability: float = 0.05) -> HormanderReport:
    """Check ``c <xi>^(1/r) <= nu_j + 1 <= sqrt(2) <xi>``.

    ``c_lower`` is the minimum of ``(nu_j + 1) / <xi>^(1/r)`` over the table and
    ``c_upper`` the maximum of ``(nu_j + 1) / <xi>``.  On a finite table a decay
    of the lower constant towards zero shows up as a drop when the band limit is
    doubled, so the check also requires ``c_lower`` over the full band to stay
    within ``stability`` of its value over the lower half band.
    """
    r = sym.hormander_order if r is None else int(r)
    c_lower, c_upper = _bound_ratios(sym, r, sym.band_limit)
    c_half, _ = _bound_ratios(sym, r, sym.band_limit / 2)
    stable = c_lower >= (1.0 - stability) * c_half
    passed = bool(c_lower > 0 and c_upper <= math.sqrt(2) + 1e-12 and stable)
    return HormanderReport(r, c_lower, c_upper, c_half, passed)
