"""Representation theory backend for SU(2) and the torus.

Conventions
-----------
A point of SU(2) is parametrised by z-y-z Euler angles ``(phi, theta, psi)``::

    g = exp(-i phi s_z) exp(-i theta s_y) exp(-i psi s_z),    s = sigma / 2

with ``0 <= phi < 2pi``, ``0 < theta < pi`` and ``-2pi <= psi < 2pi``.  The
spin-``ell`` representation is ``D(g) = exp(-i phi J_z) exp(-i theta J_y)
exp(-i psi J_z)`` in the basis ``m = -ell, ..., ell`` (ascending), so that::

    D_mn(phi, theta, psi) = exp(-i m phi) d_mn(theta) exp(-i n psi).

The left-invariant fields ``X, Y, Z`` act on the right of ``D`` through
``-i J_x, -i J_y, -i J_z``.  Hence ``(X^2 + Y^2) D_mn = -(ell(ell+1) - n^2) D_mn``:
the sub-Laplacian eigenvalue is carried by the *column* index ``n`` of the
Wigner matrix, which is the *row* index of a Fourier coefficient
``f^(xi) = int f xi^*``.  ``tests/test_group_harmonics.py`` freezes this.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Mapping

import numpy as np

TWO_PI = 2.0 * np.pi

SU2 = "SU2"
TORUS = "Torus"


@dataclass(frozen=True, order=True)
class RepIndex:
    """A point of the unitary dual.

    ``two_ell`` is used for SU(2) (``ell = two_ell / 2``), ``k`` for the torus.
    Ordering is canonical: by group, then ``two_ell``, then ``k``.
    """

    group: str
    two_ell: int = 0
    k: tuple[int, ...] = ()

    def __post_init__(self):
        if self.group == SU2:
            if int(self.two_ell) != self.two_ell or self.two_ell < 0:
                raise ValueError(f"two_ell must be a nonnegative integer, got {self.two_ell}")
            if self.k:
                raise ValueError("SU2 index carries no torus frequency")
        elif self.group == TORUS:
            if not self.k:
                raise ValueError("torus index needs a frequency vector")
            object.__setattr__(self, "k", tuple(int(v) for v in self.k))
        else:
            raise ValueError(f"unknown group {self.group!r}")

    @classmethod
    def su2(cls, ell: float) -> "RepIndex":
        two = 2 * ell
        if abs(two - round(two)) > 1e-12:
            raise ValueError(f"ell must be a half-integer, got {ell}")
        return cls(SU2, int(round(two)))

    @classmethod
    def torus(cls, *k: int) -> "RepIndex":
        return cls(TORUS, 0, tuple(k))

    @property
    def ell(self) -> float:
        return self.two_ell / 2

    @property
    def dim(self) -> int:
        return self.two_ell + 1 if self.group == SU2 else 1

    @property
    def casimir(self) -> float:
        """Laplacian eigenvalue ``|xi|^2``."""
        if self.group == SU2:
            return self.ell * (self.ell + 1)
        return float(sum(v * v for v in self.k))

    def m_values(self) -> np.ndarray:
        """Weights ``m = -ell..ell`` labelling rows/columns (``[0]`` on the torus)."""
        if self.group == SU2:
            return np.arange(self.dim) - self.ell
        return np.zeros(1)

    def label(self) -> str:
        if self.group == SU2:
            return f"l={self.two_ell // 2}" if self.two_ell % 2 == 0 else f"l={self.two_ell}/2"
        return "k=(" + ",".join(map(str, self.k)) + ")"


def su2_dual(lmax: float, *, integer_only: bool = False) -> list[RepIndex]:
    """All SU(2) representations with ``ell <= lmax`` in canonical order."""
    two_max = int(np.floor(2 * lmax + 1e-9))
    step = 2 if integer_only else 1
    return [RepIndex(SU2, t) for t in range(0, two_max + 1, step)]


def torus_dual(kmax: int, ndim: int = 1) -> list[RepIndex]:
    """Torus frequencies with ``max |k_i| <= kmax`` in canonical order."""
    axes = [np.arange(-kmax, kmax + 1)] * ndim
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, ndim)
    return sorted(RepIndex.torus(*row) for row in grid)


@dataclass(frozen=True)
class EulerAngles:
    phi: float
    theta: float
    psi: float

    def __post_init__(self):
        if not 0.0 < self.theta < np.pi:
            raise ValueError(f"theta must lie strictly inside (0, pi), got {self.theta}")

    @classmethod
    def random(cls, rng: np.random.Generator) -> "EulerAngles":
        """Haar-distributed sample."""
        return cls(rng.uniform(0, TWO_PI), float(np.arccos(rng.uniform(-1, 1))), rng.uniform(-TWO_PI, TWO_PI))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.phi, self.theta, self.psi)


def _angles(g) -> tuple[float, float, float]:
    if isinstance(g, EulerAngles):
        return g.as_tuple()
    phi, theta, psi = g
    return float(phi), float(theta), float(psi)


# ---------------------------------------------------------------------------
# spin matrices and Wigner matrices


@lru_cache(maxsize=None)
def spin_matrices(two_ell: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Angular momentum matrices ``(J_x, J_y, J_z)`` in the ascending ``m`` basis."""
    ell = two_ell / 2
    m = np.arange(two_ell + 1) - ell
    # J_+ |m> = sqrt(l(l+1) - m(m+1)) |m+1>
    jp = np.diag(np.sqrt(ell * (ell + 1) - m[:-1] * (m[:-1] + 1)), -1).astype(complex)
    jm = jp.conj().T
    jx = (jp + jm) / 2
    jy = (jp - jm) / 2j
    jz = np.diag(m).astype(complex)
    for mat in (jx, jy, jz):
        mat.setflags(write=False)
    return jx, jy, jz


@lru_cache(maxsize=None)
def _jy_eigensystem(two_ell: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact eigenvalues of ``J_y`` and ``V_ik conj(V_jk)`` split as ``(real, imag)``, each ``(d, d*d)``."""
    _, jy, _ = spin_matrices(two_ell)
    _, vecs = np.linalg.eigh(jy)
    # eigenvalues are exactly -l..l; use the exact values
    lam = np.arange(two_ell + 1) - two_ell / 2
    table = np.einsum("ik,jk->kij", vecs, vecs.conj()).reshape(two_ell + 1, -1)
    table = np.stack([table.real, table.imag])
    table.setflags(write=False)
    return lam, table


def _from_eigenbasis(two_ell: int, theta, factor) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    lam, table = _jy_eigensystem(two_ell)
    phase = np.exp(-1j * theta[..., None] * lam) * factor(lam)
    d = two_ell + 1
    phase = phase.reshape(-1, d)
    # real part of phase @ table via two real products (complex GEMM is slow on some BLAS builds)
    real = phase.real @ table[0] - phase.imag @ table[1]
    return real.reshape(theta.shape + (d, d))


def small_d(two_ell: int, theta) -> np.ndarray:
    """Wigner small-d matrix ``exp(-i theta J_y)``, real, shape ``theta.shape + (d, d)``."""
    return _from_eigenbasis(two_ell, theta, np.ones_like)


def small_d_derivatives(two_ell: int, theta) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``d(theta)``, ``d'(theta)`` and ``d''(theta)`` computed exactly in the eigenbasis of ``J_y``."""
    return (
        _from_eigenbasis(two_ell, theta, np.ones_like),
        _from_eigenbasis(two_ell, theta, lambda lam: -1j * lam),
        _from_eigenbasis(two_ell, theta, lambda lam: -(lam**2)),
    )


def wigner_matrices(two_ell: int, phi, theta, psi) -> np.ndarray:
    """Vectorised Wigner matrices, shape ``broadcast(phi, theta, psi).shape + (d, d)``."""
    phi, theta, psi = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (phi, theta, psi)))
    m = np.arange(two_ell + 1) - two_ell / 2
    row = np.exp(-1j * phi[..., None] * m)
    col = np.exp(-1j * psi[..., None] * m)
    return row[..., :, None] * small_d(two_ell, theta) * col[..., None, :]


def wigner_matrix(rep: RepIndex, g) -> np.ndarray:
    """Spin-``ell`` Wigner matrix ``xi(g)`` at Euler angles ``g``.

    ``g`` may be an :class:`EulerAngles` or a raw ``(phi, theta, psi)`` triple
    (the raw form admits the identity ``(0, 0, 0)``).
    """
    if rep.group != SU2:
        raise ValueError("wigner_matrix needs an SU2 index; use torus_character for the torus")
    return wigner_matrices(rep.two_ell, *_angles(g))


def su2_element(g) -> np.ndarray:
    """The 2x2 special unitary matrix with Euler angles ``g``."""
    return wigner_matrices(1, *_angles(g))


def euler_from_su2(u: np.ndarray) -> tuple[float, float, float]:
    """Inverse of :func:`su2_element`, normalised to the almost injective chart."""
    c, s = abs(u[0, 0]), abs(u[0, 1])
    theta = 2.0 * np.arctan2(s, c)
    a, b = np.angle(u[0, 0]), np.angle(u[0, 1])
    phi, psi = a + b, a - b
    shift = TWO_PI * np.floor(phi / TWO_PI)
    phi, psi = phi - shift, psi - shift
    psi = (psi + TWO_PI) % (2 * TWO_PI) - TWO_PI
    return float(phi), float(theta), float(psi)


def compose(g1, g2) -> tuple[float, float, float]:
    """Euler angles of the group product ``g1 g2``."""
    return euler_from_su2(su2_element(g1) @ su2_element(g2))


def torus_character(k, x) -> np.ndarray:
    """``exp(i k.x)`` for points ``x`` of shape ``(..., n)``."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != k.size:
        x = x[..., None]
    return np.exp(1j * (x @ k))


# ---------------------------------------------------------------------------
# Haar quadrature


@dataclass(frozen=True)
class QuadratureGrid:
    """Tensor-product Haar quadrature on SU(2).

    Nodes are ordered ``(phi, theta, psi)`` in C order; the flattened views
    ``phi``, ``theta``, ``psi`` and ``weights`` all have ``size`` entries.
    """

    two_lmax: int
    phi_nodes: np.ndarray
    theta_nodes: np.ndarray
    psi_nodes: np.ndarray
    phi_weights: np.ndarray
    theta_weights: np.ndarray
    psi_weights: np.ndarray

    @property
    def lmax(self) -> float:
        return self.two_lmax / 2

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.phi_nodes.size, self.theta_nodes.size, self.psi_nodes.size)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def _mesh(self):
        return np.meshgrid(self.phi_nodes, self.theta_nodes, self.psi_nodes, indexing="ij")

    @property
    def phi(self) -> np.ndarray:
        return self._mesh()[0].ravel()

    @property
    def theta(self) -> np.ndarray:
        return self._mesh()[1].ravel()

    @property
    def psi(self) -> np.ndarray:
        return self._mesh()[2].ravel()

    @property
    def weights(self) -> np.ndarray:
        w = self.phi_weights[:, None, None] * self.theta_weights[None, :, None] * self.psi_weights[None, None, :]
        return w.ravel()

    @property
    def nodes(self) -> list[EulerAngles]:
        return [EulerAngles(*t) for t in zip(self.phi, self.theta, self.psi)]

    def integrate(self, values) -> complex:
        values = np.asarray(values).reshape(self.shape)
        return np.einsum("i,j,k,ijk->", self.phi_weights, self.theta_weights, self.psi_weights, values)

    def sample(self, f: Callable) -> np.ndarray:
        """Evaluate a vectorised ``f(phi, theta, psi)`` on the flattened nodes."""
        return np.asarray(f(self.phi, self.theta, self.psi))


@lru_cache(maxsize=32)
def haar_quadrature(lmax: float) -> QuadratureGrid:
    """Quadrature integrating ``xi_ij conj(eta_kl)`` exactly for ``ell, ell' <= lmax``.

    Trapezoid rules in ``phi`` (frequencies up to ``2 lmax``) and ``psi`` (over
    the 4pi window, half-integer frequencies up to ``2 lmax``) and Gauss-Legendre
    in ``cos theta`` (polynomial degree ``<= 2 lmax``).
    """
    if lmax < 0:
        raise ValueError("lmax must be nonnegative")
    two = int(np.floor(2 * lmax + 1e-9))
    n_phi = two + 1
    n_psi = 2 * two + 1
    n_theta = two // 2 + 2
    x, wx = np.polynomial.legendre.leggauss(n_theta)
    phi = TWO_PI * np.arange(n_phi) / n_phi
    psi = -TWO_PI + 2 * TWO_PI * np.arange(n_psi) / n_psi
    theta = np.arccos(x)[::-1]
    arrays = dict(
        phi_nodes=phi,
        theta_nodes=theta,
        psi_nodes=psi,
        phi_weights=np.full(n_phi, 1.0 / n_phi),
        theta_weights=wx[::-1] / 2.0,
        psi_weights=np.full(n_psi, 1.0 / n_psi),
    )
    for a in arrays.values():
        a.setflags(write=False)
    return QuadratureGrid(two, **arrays)


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid on ``[0, 2pi)^ndim``, exact for trigonometric polynomials of degree ``< n``."""

    kmax: int
    ndim: int

    @property
    def n(self) -> int:
        return 2 * self.kmax + 1

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.ndim

    @property
    def size(self) -> int:
        return self.n**self.ndim

    @property
    def points(self) -> np.ndarray:
        axis = TWO_PI * np.arange(self.n) / self.n
        return np.stack(np.meshgrid(*([axis] * self.ndim), indexing="ij"), -1).reshape(-1, self.ndim)

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.size, 1.0 / self.size)

    def integrate(self, values) -> complex:
        return np.asarray(values).mean()


def torus_grid(kmax: int, ndim: int = 1) -> TorusGrid:
    # 2*kmax+1 points resolve products of two band-limited functions only after
    # aliasing-free transforms; forward_transform uses the FFT, which is exact here.
    return TorusGrid(int(kmax), int(ndim))


# ---------------------------------------------------------------------------
# pointwise differential operators in Euler angles

JET_KEYS = ("f", "p", "t", "q", "pp", "pt", "pq", "tt", "tq", "qq")  # p = phi, t = theta, q = psi


def wigner_jet(two_ell: int, phi, theta, psi) -> dict[str, np.ndarray]:
    """Exact partial derivatives (up to order two) of the Wigner matrix entries.

    Differentiation in ``phi``/``psi`` multiplies by ``-i m``/``-i n``; in
    ``theta`` it is carried out in the eigenbasis of ``J_y``, so no finite
    differences are involved.
    """
    phi, theta, psi = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (phi, theta, psi)))
    m = np.arange(two_ell + 1) - two_ell / 2
    row = np.exp(-1j * phi[..., None] * m)[..., :, None]
    col = np.exp(-1j * psi[..., None] * m)[..., None, :]
    d0, d1, d2 = small_d_derivatives(two_ell, theta)
    dp = (-1j * m)[:, None]
    dq = (-1j * m)[None, :]
    base = {k: row * v * col for k, v in (("f", d0), ("t", d1), ("tt", d2))}
    return {
        "f": base["f"],
        "p": dp * base["f"],
        "t": base["t"],
        "q": dq * base["f"],
        "pp": dp**2 * base["f"],
        "pt": dp * base["t"],
        "pq": dp * dq * base["f"],
        "tt": base["tt"],
        "tq": dq * base["t"],
        "qq": dq**2 * base["f"],
    }


def finite_difference_jet(f: Callable, phi, theta, psi, h: float = 1e-3) -> dict[str, np.ndarray]:
    """Fourth-order central-difference jet of a callable ``f(phi, theta, psi)``."""
    x0 = [np.asarray(v, dtype=float) for v in (phi, theta, psi)]
    c1 = np.array([1, -8, 0, 8, -1]) / (12 * h)
    c2 = np.array([-1, 16, -30, 16, -1]) / (12 * h * h)
    offs = np.arange(-2, 3) * h

    def shifted(i, di, j=None, dj=0.0):
        x = list(x0)
        x[i] = x[i] + di
        if j is not None:
            x[j] = x[j] + dj
        return np.asarray(f(*x))

    jet = {"f": np.asarray(f(*x0))}
    names = "ptq"
    for i, a in enumerate(names):
        samples = [shifted(i, o) for o in offs]
        jet[a] = sum(c * s for c, s in zip(c1, samples))
        jet[a + a] = sum(c * s for c, s in zip(c2, samples))
    for i, j in ((0, 1), (0, 2), (1, 2)):
        acc = 0.0
        for ci, oi in zip(c1, offs):
            if ci == 0:
                continue
            inner = sum(cj * shifted(i, oi, j, oj) for cj, oj in zip(c1, offs) if cj != 0)
            acc = acc + ci * inner
        jet[names[i] + names[j]] = acc
    return jet


def _check_theta(theta) -> None:
    if np.any(np.abs(np.sin(np.asarray(theta, dtype=float))) < 1e-12):
        raise ValueError("evaluation at theta in {0, pi} is on the Euler-angle singular set")


def euler_sublaplacian(jet: Mapping[str, np.ndarray], theta) -> np.ndarray:
    """``X^2 + Y^2`` written in Euler angles."""
    s = np.sin(theta)
    c = np.cos(theta)
    s2 = s * s
    return (
        jet["pp"] / s2
        - 2 * c / s2 * jet["pq"]
        + (1 / s2 - 1) * jet["qq"]
        + jet["tt"]
        + c / s * jet["t"]
    )


def euler_laplacian(jet: Mapping[str, np.ndarray], theta) -> np.ndarray:
    """``X^2 + Y^2 + Z^2`` with ``Z = d/dpsi``."""
    return euler_sublaplacian(jet, theta) + jet["qq"]


@dataclass(frozen=True)
class EulerVectorField:
    """First-order operator ``c_phi d_phi + c_theta d_theta + c_psi d_psi``."""

    name: str
    coefficients: Callable[[np.ndarray, np.ndarray, np.ndarray], tuple]

    def apply(self, jet: Mapping[str, np.ndarray], phi, theta, psi) -> np.ndarray:
        cp, ct, cq = self.coefficients(phi, theta, psi)
        return cp * jet["p"] + ct * jet["t"] + cq * jet["q"]

    def coefficient_derivatives(self, phi, theta, psi) -> np.ndarray:
        """Jacobian ``dc_j / dx_i`` (shape ``3 x 3 x ...``) by complex-step differentiation."""
        h = 1e-30
        x = [np.asarray(v, dtype=complex) for v in (phi, theta, psi)]
        rows = []
        for i in range(3):
            xs = list(x)
            xs[i] = xs[i] + 1j * h
            rows.append([np.imag(np.asarray(c, dtype=complex)) / h for c in self.coefficients(*xs)])
        return np.array(rows)


def _fx(phi, theta, psi):
    return (-np.cos(psi) / np.sin(theta), np.sin(psi), np.cos(theta) / np.sin(theta) * np.cos(psi))


def _fy(phi, theta, psi):
    return (np.sin(psi) / np.sin(theta), np.cos(psi), -np.cos(theta) / np.sin(theta) * np.sin(psi))


def _fz(phi, theta, psi):
    zero = 0.0 * np.asarray(theta)
    return (zero, zero, zero + 1.0)


FIELD_X = EulerVectorField("X", _fx)
FIELD_Y = EulerVectorField("Y", _fy)
FIELD_Z = EulerVectorField("Z", _fz)


def apply_composition(first: EulerVectorField, second: EulerVectorField, jet, phi, theta, psi) -> np.ndarray:
    """``first(second f)`` from the second-order jet of ``f``."""
    c1 = first.coefficients(phi, theta, psi)
    c2 = second.coefficients(phi, theta, psi)
    dc2 = second.coefficient_derivatives(phi, theta, psi)
    keys = "ptq"

    def second_derivative(i, j):
        a, b = sorted((i, j))
        return jet[keys[a] + keys[b]]

    out = 0.0
    for i in range(3):
        for j in range(3):
            out = out + c1[i] * (dc2[i][j] * jet[keys[j]] + c2[j] * second_derivative(i, j))
    return out


def _coefficient_jet(coeffs, phi, theta, psi) -> dict[str, np.ndarray]:
    """Jet of ``f(x) = sum_xi d_xi Tr(xi(x) coeffs[xi])`` at the given points."""
    jet = None
    for rep, mat in coeffs.items():
        if rep.group != SU2:
            raise ValueError("pointwise Euler-angle operators act on SU2 coefficients only")
        wj = wigner_jet(rep.two_ell, phi, theta, psi)
        contrib = {k: rep.dim * np.einsum("...mn,nm->...", v, mat) for k, v in wj.items()}
        if jet is None:
            jet = contrib
        else:
            for k in jet:
                jet[k] = jet[k] + contrib[k]
    if jet is None:
        zero = np.zeros(np.broadcast(phi, theta, psi).shape, dtype=complex)
        jet = {k: zero for k in JET_KEYS}
    return jet


def function_jet(f, phi, theta, psi, h: float = 1e-3) -> dict[str, np.ndarray]:
    """Jet of ``f``: exact for band-limited coefficient sets, finite differences for callables."""
    entries = getattr(f, "entries", None)
    if entries is not None:
        return _coefficient_jet(entries, phi, theta, psi)
    if isinstance(f, Mapping):
        return _coefficient_jet(f, phi, theta, psi)
    if callable(f):
        return finite_difference_jet(f, phi, theta, psi, h=h)
    raise TypeError("f must be a coefficient set or a callable f(phi, theta, psi)")


def apply_sublaplacian_pointwise(f, phi, theta, psi, *, full_laplacian: bool = False, h: float = 1e-3) -> np.ndarray:
    """Apply the Euler-angle sub-Laplacian (or Laplacian) to ``f`` at the given points.

    Parameters
    ----------
    f : FourierCoefficients, mapping RepIndex -> matrix, or callable
        Band-limited functions are differentiated exactly; callables
        ``f(phi, theta, psi)`` by fourth-order central differences with step ``h``.
    phi, theta, psi : array_like
        Evaluation points; ``theta`` must avoid ``0`` and ``pi``.
    full_laplacian : bool
        Add ``Z^2 = d^2/dpsi^2`` to obtain the Laplacian.
    """
    _check_theta(theta)
    jet = function_jet(f, phi, theta, psi, h=h)
    theta = np.asarray(theta, dtype=float)
    op = euler_laplacian if full_laplacian else euler_sublaplacian
    return op(jet, theta)
