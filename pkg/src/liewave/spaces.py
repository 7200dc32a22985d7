"""Sobolev and Gevrey norms on the Fourier side, Gevrey-order fitting and embedding checks."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp

from .fourier import FourierCoefficients
from .symbols import DiagonalSymbol


class InsufficientShellsError(ValueError):
    """Too few nonzero shells to fit a Gevrey decay law."""


@dataclass(frozen=True)
class GevreyParams:
    s: float
    A: float

    def __post_init__(self):
        if self.s < 1:
            raise ValueError("Gevrey order s must be >= 1")
        if self.A <= 0:
            raise ValueError("Gevrey constant A must be positive")


def _row_energies(coeffs: FourierCoefficients, sym: DiagonalSymbol):
    """Yield ``(d_xi, nu_j^2, <xi>^2, sum_m |f_jm|^2)`` per row in canonical order."""
    for rep, mat in coeffs.items():
        if rep not in sym:
            raise ValueError(f"symbol table has no entry for {rep.label()}")
        rows = np.sum(np.abs(mat) ** 2, axis=1)
        yield rep.dim, sym.nu_squared[rep], 1.0 + rep.casimir, rows


def sobolev_L_norm(coeffs: FourierCoefficients, s: float, sym: DiagonalSymbol) -> float:
    """``(sum d_xi sum_j (1 + nu_j^2)^s sum_m |f_jm|^2)^(1/2)``."""
    terms = []
    for dim, nu2, _, rows in _row_energies(coeffs, sym):
        terms.extend((dim * (1.0 + nu2) ** s * rows).tolist())
    return math.sqrt(math.fsum(terms))


def classical_sobolev_norm(coeffs: FourierCoefficients, s: float) -> float:
    """``(sum d_xi <xi>^(2s) ||f(xi)||_HS^2)^(1/2)``."""
    terms = [rep.dim * (1.0 + rep.casimir) ** s * float(np.sum(np.abs(mat) ** 2)) for rep, mat in coeffs.items()]
    return math.sqrt(math.fsum(terms))


def gevrey_L_log_norm(coeffs: FourierCoefficients, g: GevreyParams, sym: DiagonalSymbol) -> float:
    """Logarithm of :func:`gevrey_L_norm`, summed in log space."""
    logs = []
    for dim, nu2, _, rows in _row_energies(coeffs, sym):
        keep = rows > 0
        logs.append(math.log(dim) + g.A * np.sqrt(nu2[keep]) ** (1.0 / g.s) + np.log(rows[keep]))
    if not logs:
        return -math.inf
    flat = np.concatenate(logs)
    return 0.5 * float(logsumexp(flat)) if flat.size else -math.inf


def gevrey_L_norm(coeffs: FourierCoefficients, g: GevreyParams, sym: DiagonalSymbol) -> float:
    """``(sum d_xi sum_j e^{A nu_j^(1/s)} sum_m |f_jm|^2)^(1/2)`` (``inf`` on overflow)."""
    log_norm = gevrey_L_log_norm(coeffs, g, sym)
    return math.exp(log_norm) if log_norm < 709 else math.inf


# Gevrey fitting ------------------------------------------------------------

@dataclass(frozen=True)
class GevreyFit:
    s_hat: float
    A_hat: float
    log_C: float
    residual: float
    shells_used: int
    at_bound: bool
    residual_tol: float

    @property
    def gevrey(self) -> bool:
        """Decay of Gevrey type: interior optimum, positive rate, small residual."""
        return (not self.at_bound) and self.A_hat > 0 and self.residual <= self.residual_tol

    def as_dict(self) -> dict:
        return {
            "s_hat": self.s_hat,
            "A_hat": self.A_hat,
            "residual": self.residual,
            "shells_used": self.shells_used,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.as_dict(), **kwargs)


def shell_maxima(coeffs: FourierCoefficients, sym: DiagonalSymbol, *, bucket: float = 1e-6) -> tuple[np.ndarray, np.ndarray]:
    """Distinct positive ``nu`` (bucketed) and the largest ``|f_jm|`` over rows carrying it."""
    best: dict[int, tuple[float, float]] = {}
    for rep, mat in coeffs.items():
        nu = sym.nu(rep)
        row_max = np.abs(mat).max(axis=1)
        for j in range(rep.dim):
            if nu[j] <= 0:
                continue
            key = int(round(nu[j] / bucket))
            prev = best.get(key)
            if prev is None or row_max[j] > prev[1]:
                best[key] = (float(nu[j]), float(row_max[j]))
    keys = sorted(best)
    nus = np.array([best[k][0] for k in keys])
    amps = np.array([best[k][1] for k in keys])
    return nus, amps


def _fit_for_power(x_log: np.ndarray, y: np.ndarray, p: float):
    x = np.exp(p * x_log)
    design = np.stack([np.ones_like(x), -x], axis=1)
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    res = y - design @ coef
    return coef, math.sqrt(float(np.mean(res**2)))


def fit_gevrey_decay(
    coeffs: FourierCoefficients,
    sym: DiagonalSymbol,
    *,
    s_max: float = 4.0,
    s_min: float = 0.5,
    residual_tol: float = 1.0,
    min_shells: int = 8,
) -> GevreyFit:
    """Least-squares fit of ``log max|f| = log C - A nu^(1/s)`` over shell maxima.

    The order is found by minimising the residual over ``s`` in ``[s_min, s_max]``;
    an optimum on the upper edge means the decay is slower than any Gevrey law
    the range can express.

    Raises
    ------
    InsufficientShellsError
        If fewer than ``min_shells`` shells carry nonzero coefficients.
    """
    nus, amps = shell_maxima(coeffs, sym)
    keep = amps > 0
    nus, amps = nus[keep], amps[keep]
    if nus.size < min_shells:
        raise InsufficientShellsError(
            f"{nus.size} nonzero shells with nu > 0; at least {min_shells} are needed to fit a Gevrey law"
        )
    x_log = np.log(nus)
    y = np.log(amps)
    p_lo, p_hi = 1.0 / s_max, 1.0 / s_min
    grid = np.geomspace(p_lo, p_hi, 241)
    scores = [_fit_for_power(x_log, y, p)[1] for p in grid]
    i = int(np.argmin(scores))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    best = minimize_scalar(lambda p: _fit_for_power(x_log, y, p)[1], bounds=(lo, hi), method="bounded",
                           options={"xatol": 1e-10})
    p = float(best.x) if best.fun <= scores[i] else float(grid[i])
    coef, resid = _fit_for_power(x_log, y, p)
    at_bound = p <= p_lo * (1 + 1e-3) or p >= p_hi * (1 - 1e-3)
    return GevreyFit(1.0 / p, float(coef[1]), float(coef[0]), resid, int(nus.size), bool(at_bound), residual_tol)


# Embeddings ----------------------------------------------------------------

@dataclass(frozen=True)
class EmbeddingReport:
    s: float
    r: int
    C1_emp: float
    C2_emp: float
    C1_half: float
    C2_half: float
    band_limit: float

    @property
    def stable(self) -> bool:
        return abs(self.C1_emp / self.C1_half - 1) <= 0.05 and abs(self.C2_emp / self.C2_half - 1) <= 0.05

    @property
    def passed(self) -> bool:
        finite = all(math.isfinite(v) and v > 0 for v in (self.C1_emp, self.C2_emp, self.C1_half, self.C2_half))
        return finite and self.stable

    def as_dict(self) -> dict:
        return {
            "s": self.s, "r": self.r, "C1_emp": self.C1_emp, "C2_emp": self.C2_emp,
            "C1_half_band": self.C1_half, "C2_half_band": self.C2_half, "pass": self.passed,
        }


def _embedding_ratios(batch, sym, s, r):
    lower, upper = [], []
    for f in batch:
        hl = sobolev_L_norm(f, s, sym)
        lower.append(hl / classical_sobolev_norm(f, s / r))
        upper.append(hl / classical_sobolev_norm(f, s))
    return min(lower), max(upper)


def embedding_verify(batch, sym: DiagonalSymbol, s: float, r: int | None = None) -> EmbeddingReport:
    """Empirical constants of ``C1 ||f||_{H^{s/r}} <= ||f||_{H^s_L} <= C2 ||f||_{H^s}``.

    ``C1_emp`` is the minimum of the lower ratio and ``C2_emp`` the maximum of
    the upper ratio over the batch; both are recomputed with every coefficient
    set restricted to half the band limit to check stability.
    """
    r = sym.hormander_order if r is None else int(r)
    if r != sym.hormander_order:
        raise ValueError(f"r = {r} does not match the symbol's Hörmander order {sym.hormander_order}")
    batch = list(batch)
    band = max(f.band_limit for f in batch)
    c1, c2 = _embedding_ratios(batch, sym, s, r)
    h1, h2 = _embedding_ratios([f.restrict(band / 2) for f in batch], sym, s, r)
    return EmbeddingReport(s, r, c1, c2, h1, h2, band)


def shell_lower_ratios(sym: DiagonalSymbol, s: float, r: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per shell, ``min_j ((1 + nu_j^2) / <xi>^(2/r))^(s/2)`` with the minimising ``nu_j^2``.

    This is the lower embedding ratio of a delta coefficient on the worst row.
    Returns ``ell``, the ratios and the minimising ``nu^2``.
    """
    ells, ratios, nu2min = [], [], []
    for rep in sym.reps:
        nu2 = sym.nu_squared[rep]
        w = ((1.0 + nu2) / (1.0 + rep.casimir) ** (1.0 / r)) ** (s / 2)
        j = int(np.argmin(w))
        ells.append(rep.ell if rep.group == "SU2" else max(abs(v) for v in rep.k))
        ratios.append(float(w[j]))
        nu2min.append(float(nu2[j]))
    return np.array(ells, dtype=float), np.array(ratios), np.array(nu2min)
