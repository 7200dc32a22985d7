"""Propagation speeds a(t), Hölder seminorm estimates and mollified characteristic roots."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

CASE_TAGS = (1, 2, 3, 4)
SHIFT_NONE = "none"
SHIFT_ALPHA = "alpha_shift"

_CHECK_POINTS = 4001


@dataclass(frozen=True)
class SpeedProfile:
    """Coefficient ``a(t) >= 0`` on ``[0, T]`` with its declared regularity class.

    Parameters
    ----------
    name : str
        Catalogue key, used in experiment configs.
    func : callable
        Vectorised ``t -> a(t)``.
    case_tag : int
        1 (``a >= a0 > 0``, C^1), 2 (``a >= a0 > 0``, C^alpha), 3 (``a >= 0``,
        C^ell) or 4 (``a >= 0``, C^alpha with ``0 < alpha < 2``).
    a0 : float, optional
        Lower bound, required for Cases 1 and 2.
    alpha : float, optional
        Hölder exponent. For Case 4 this is the exponent of ``a`` itself, in
        ``(0, 2)``; the roots are then Hölder of order ``alpha / 2``.
    smoothness : int, optional
        ``ell >= 2`` for Case 3.
    derivative : callable, optional
        ``a'(t)`` when available in closed form.
    """

    name: str
    func: Callable[[np.ndarray], np.ndarray]
    case_tag: int
    T: float
    a0: float | None = None
    alpha: float | None = None
    smoothness: int | None = None
    derivative: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.case_tag not in CASE_TAGS:
            raise ValueError(f"case_tag must be one of {CASE_TAGS}")
        if not self.T > 0:
            raise ValueError("horizon T must be positive")
        if self.case_tag in (1, 2) and (self.a0 is None or self.a0 <= 0):
            raise ValueError(f"Case {self.case_tag} needs a positive lower bound a0")
        if self.case_tag == 2 and not (self.alpha is not None and 0 < self.alpha < 1):
            raise ValueError("Case 2 needs a Hölder exponent alpha in (0, 1)")
        if self.case_tag == 4 and not (self.alpha is not None and 0 < self.alpha < 2):
            raise ValueError("Case 4 needs a Hölder exponent alpha in (0, 2)")
        if self.case_tag == 3 and not (self.smoothness is not None and self.smoothness >= 2):
            raise ValueError("Case 3 needs smoothness ell >= 2")
        values = self(np.linspace(0.0, self.T, _CHECK_POINTS))
        if np.any(values < 0):
            raise ValueError(f"profile {self.name!r} takes negative values")
        if self.a0 is not None and np.any(values < self.a0 * (1 - 1e-12)):
            raise ValueError(f"profile {self.name!r} drops below a0 = {self.a0}")

    def __call__(self, t):
        """``a(t)``, continued by constants outside ``[0, T]``."""
        t = np.clip(np.asarray(t, dtype=float), 0.0, self.T)
        return np.asarray(self.func(t), dtype=float) * np.ones_like(t)

    @property
    def root_alpha(self) -> float | None:
        """Hölder exponent of ``sqrt(a)``: ``alpha`` in Case 2, ``alpha / 2`` in Case 4."""
        if self.alpha is None:
            return None
        return self.alpha / 2 if self.case_tag == 4 else self.alpha

    @cached_property
    def sup(self) -> float:
        return float(self(np.linspace(0.0, self.T, _CHECK_POINTS)).max())

    @cached_property
    def inf(self) -> float:
        return float(self(np.linspace(0.0, self.T, _CHECK_POINTS)).min())

    def sup_abs_derivative(self, n: int = 20001) -> float:
        t = np.linspace(0.0, self.T, n)
        if self.derivative is not None:
            return float(np.abs(self.derivative(t)).max())
        return float(np.abs(np.gradient(self(t), t)).max())


def _constant(value: float = 1.0, T: float = 2 * math.pi) -> SpeedProfile:
    return SpeedProfile(
        "constant", lambda t: np.full_like(t, value), 1, T, a0=value,
        derivative=lambda t: np.zeros_like(t), params={"value": value, "T": T},
    )


def _two_plus_sin(T: float = 2 * math.pi) -> SpeedProfile:
    return SpeedProfile("two_plus_sin", lambda t: 2 + np.sin(t), 1, T, a0=1.0, derivative=np.cos, params={"T": T})


def _holder_bump(alpha: float = 0.5, T: float = 2.0, shift: float | None = None) -> SpeedProfile:
    c = T / 2 if shift is None else shift
    return SpeedProfile(
        "holder_bump", lambda t: 1 + np.abs(t - c) ** alpha, 2, T, a0=1.0, alpha=alpha,
        params={"alpha": alpha, "T": T, "shift": c},
    )


def _t_squared(T: float = 1.0) -> SpeedProfile:
    return SpeedProfile("t_squared", lambda t: t**2, 3, T, smoothness=2, derivative=lambda t: 2 * t, params={"T": T})


def _sin4(T: float = 1.0) -> SpeedProfile:
    return SpeedProfile(
        "sin4", lambda t: np.sin(t) ** 4, 3, T, smoothness=2,
        derivative=lambda t: 4 * np.sin(t) ** 3 * np.cos(t), params={"T": T},
    )


def _holder_zero(alpha: float = 0.5, T: float = 2.0, shift: float | None = None) -> SpeedProfile:
    c = T / 2 if shift is None else shift
    return SpeedProfile(
        "holder_zero", lambda t: np.abs(t - c) ** alpha, 4, T, alpha=alpha,
        params={"alpha": alpha, "T": T, "shift": c},
    )


_FACTORIES = {
    "constant": _constant,
    "two_plus_sin": _two_plus_sin,
    "holder_bump": _holder_bump,
    "t_squared": _t_squared,
    "sin4": _sin4,
    "holder_zero": _holder_zero,
}


def builtin_profiles() -> dict[str, SpeedProfile]:
    """Default instance of every catalogue profile, keyed by name."""
    return {key: factory() for key, factory in _FACTORIES.items()}


def make_profile(key: str, **params) -> SpeedProfile:
    """Catalogue profile ``key`` with parameters such as ``alpha``, ``T``, ``shift``, ``value``."""
    if key not in _FACTORIES:
        raise KeyError(f"unknown profile {key!r}; choose from {sorted(_FACTORIES)}")
    return _FACTORIES[key](**params)


def profile_keys() -> list[str]:
    return list(_FACTORIES)


# Mollifier -----------------------------------------------------------------

def bump(s) -> np.ndarray:
    """Unnormalised ``exp(-1/(1-s^2))`` on ``(-1, 1)``."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


def bump_derivative(s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1
    si = s[inside]
    out[inside] = np.exp(-1.0 / (1.0 - si**2)) * (-2 * si / (1.0 - si**2) ** 2)
    return out


def mollify(
    f: Callable[[np.ndarray], np.ndarray],
    t,
    epsilon: float,
    *,
    resolution: int = 200,
    chunk: int = 256,
) -> tuple[np.ndarray, np.ndarray]:
    """``(f * phi_eps)(t)`` and its derivative.

    The convolution is discretised on the fixed lattice ``tau_j = j eps / resolution``
    and normalised by the discrete mass of the kernel, so the result is an
    exactly smooth function of ``t`` whose derivative is returned exactly and
    constants are reproduced to round-off.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    delta = epsilon / resolution
    offsets = np.arange(2 * resolution + 2)
    val = np.empty_like(t)
    der = np.empty_like(t)
    for start in range(0, t.size, chunk):
        tt = t[start:start + chunk]
        j0 = np.floor((tt - epsilon) / delta)
        tau = (j0[:, None] + offsets[None, :]) * delta
        s = (tt[:, None] - tau) / epsilon
        k = bump(s)
        dk = bump_derivative(s) / epsilon
        fv = f(tau)
        num, den = np.sum(fv * k, axis=1), np.sum(k, axis=1)
        dnum, dden = np.sum(fv * dk, axis=1), np.sum(dk, axis=1)
        val[start:start + chunk] = num / den
        der[start:start + chunk] = (dnum * den - num * dden) / den**2
    return val, der


@dataclass(frozen=True)
class MollifiedRoots:
    """Smoothed roots ``lambda_1 ~ -sqrt(a)``, ``lambda_2 ~ +sqrt(a)``.

    In ``alpha_shift`` mode (Case 4) ``lambda_1 = -m + eps^alpha`` and
    ``lambda_2 = m + 2 eps^alpha`` with ``m = sqrt(a) * phi_eps`` and ``alpha``
    the root exponent.
    """

    profile: SpeedProfile
    epsilon: float
    shift_mode: str = SHIFT_NONE

    @property
    def alpha(self) -> float:
        return self.profile.root_alpha if self.profile.root_alpha is not None else 1.0

    @property
    def shifts(self) -> tuple[float, float]:
        if self.shift_mode == SHIFT_ALPHA:
            e = self.epsilon**self.alpha
            return e, 2 * e
        return 0.0, 0.0

    def _sqrt_a(self, t):
        return np.sqrt(self.profile(t))

    def mollified_sqrt(self, t) -> tuple[np.ndarray, np.ndarray]:
        """``m(t) = (sqrt(a) * phi_eps)(t)`` and ``m'(t)``."""
        return mollify(self._sqrt_a, t, self.epsilon)

    def evaluate(self, t) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """``lambda_1, lambda_2, lambda_1', lambda_2'`` at ``t``."""
        m, dm = self.mollified_sqrt(t)
        s1, s2 = self.shifts
        return -m + s1, m + s2, -dm, dm

    def lambda1(self, t):
        return self.evaluate(t)[0]

    def lambda2(self, t):
        return self.evaluate(t)[1]

    @property
    def separation_bound(self) -> float:
        """Guaranteed lower bound of ``lambda_2 - lambda_1``.

        ``2 sqrt(a0)`` without shift. With the alpha shift the difference is
        ``2 m + eps^alpha`` so only ``eps^alpha`` is guaranteed for general ``a >= 0``.
        """
        if self.shift_mode == SHIFT_ALPHA:
            return self.epsilon**self.alpha
        return 2 * math.sqrt(self.profile.a0 or 0.0)

    def approximation_errors(self, n: int = 10_001) -> tuple[float, float]:
        """``sup |lambda_1 + sqrt(a)|`` and ``sup |lambda_2 - sqrt(a)|`` on ``n`` points of ``[0, T]``."""
        t = np.linspace(0.0, self.profile.T, n)
        l1, l2, _, _ = self.evaluate(t)
        r = self._sqrt_a(t)
        return float(np.abs(l1 + r).max()), float(np.abs(l2 - r).max())


def mollified_roots(p: SpeedProfile, epsilon: float, mode: str | None = None) -> MollifiedRoots:
    """Mollified roots at scale ``epsilon``; ``mode`` defaults to the shift dictated by the case."""
    if not (0 < epsilon <= 1):
        raise ValueError(f"epsilon must lie in (0, 1], got {epsilon}")
    if mode is None:
        mode = SHIFT_ALPHA if p.case_tag == 4 else SHIFT_NONE
    if mode not in (SHIFT_NONE, SHIFT_ALPHA):
        raise ValueError(f"unknown shift mode {mode!r}")
    return MollifiedRoots(p, float(epsilon), mode)


# Hölder seminorm -----------------------------------------------------------

@dataclass(frozen=True)
class HolderEstimate:
    alpha: float
    value: float
    value_coarse: float
    n: int

    @property
    def growth(self) -> float:
        """Ratio fine / coarse; about 1 when ``a`` is in ``C^alpha``."""
        if self.value_coarse == 0:
            return 1.0 if self.value == 0 else math.inf
        return self.value / self.value_coarse


def _holder_on_grid(a: Callable, T: float, alpha: float, n: int, max_gap: float) -> float:
    t = np.linspace(0.0, T, n)
    h = t[1] - t[0]
    v = a(t)
    best = 0.0
    for k in range(1, max(1, int(math.floor(max_gap / h + 1e-9))) + 1):
        diff = np.abs(v[k:] - v[:-k])
        if diff.size:
            best = max(best, float(diff.max()) / (k * h) ** alpha)
    return best


def holder_estimate(p: SpeedProfile, alpha: float, *, n: int = 4001, max_gap: float = 0.1) -> HolderEstimate:
    """``max |a(t) - a(s)| / |t - s|^alpha`` over grid pairs with ``|t - s| <= max_gap``.

    Computed on ``n`` points and on ``(n - 1) / 4 + 1`` points; a ratio well
    above 1 between the two signals that ``a`` is not ``alpha``-Hölder.
    """
    if not (0 < alpha <= 2):
        raise ValueError("alpha must lie in (0, 2]")
    coarse = (n - 1) // 4 + 1
    fine = _holder_on_grid(p, p.T, alpha, n, max_gap)
    rough = _holder_on_grid(p, p.T, alpha, coarse, max_gap)
    return HolderEstimate(alpha, fine, rough, n)
