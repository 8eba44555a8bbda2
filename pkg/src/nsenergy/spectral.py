"""Periodic 3D vector fields on the 2*pi torus with spectral operators.

Fields are stored as half-spectrum (rfft) coefficients normalized so
that u(x) = sum_k c(k) exp(i k.x); Hermitian symmetry is structural.
Differentiation is exact per mode (Nyquist rows excluded), products are
dealiased with the 2/3 rule, and the advective term is assembled in
rotational form so that the discrete energy flux cancels to round-off.

All reductions use numpy's pairwise summation on fixed layouts, so
results are bit-reproducible for identical inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

from .exponents import Exponent

TWO_PI = 2.0 * math.pi
BOX_VOLUME = TWO_PI**3

__all__ = [
    "Grid",
    "FourierField",
    "RealField",
    "GridError",
    "DivergenceError",
    "spectral_inner",
    "l2_norm",
    "energy",
    "enstrophy",
    "leray_project",
    "gradient_tensor",
    "divergence",
    "curl",
    "nonlinear_term",
    "advective_term",
    "lq_norm",
    "sobolev_seminorm",
    "random_rough_field",
    "taylor_green",
    "resample",
]


class GridError(ValueError):
    pass


class DivergenceError(ValueError):
    pass


class Grid:
    """Uniform n^3 grid on [0, 2*pi)^3; n must be even and at least 8."""

    def __init__(self, n: int):
        if n < 8 or n % 2:
            raise GridError(f"grid size must be even and >= 8, got {n}")
        self.n = int(n)

    def __eq__(self, other):
        return isinstance(other, Grid) and other.n == self.n

    def __hash__(self):
        return hash(("Grid", self.n))

    def __repr__(self):
        return f"Grid(n={self.n})"

    @property
    def cell_volume(self) -> float:
        return (TWO_PI / self.n) ** 3

    @property
    def spectral_shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n // 2 + 1)

    def _cached(self, name, builder):
        try:
            return self.__dict__[name]
        except KeyError:
            value = builder()
            self.__dict__[name] = value
            return value

    @property
    def wavenumbers(self):
        """(kx, ky, kz) broadcastable integer wavevectors, fftfreq order."""

        def build():
            n = self.n
            kx = (np.fft.fftfreq(n) * n).astype(np.float64).reshape(n, 1, 1)
            ky = kx.reshape(1, n, 1)
            kz = (np.fft.rfftfreq(n) * n).astype(np.float64).reshape(1, 1, n // 2 + 1)
            return kx, ky, kz

        return self._cached("_wavenumbers", build)

    @property
    def deriv_wavenumbers(self):
        """Wavevectors for odd (first-derivative) operators, Nyquist zeroed."""

        def build():
            kx, ky, kz = (a.copy() for a in self.wavenumbers)
            half = self.n // 2
            kx[half, 0, 0] = 0.0
            ky[0, half, 0] = 0.0
            kz[0, 0, -1] = 0.0
            return kx, ky, kz

        return self._cached("_deriv_wavenumbers", build)

    @property
    def k_squared(self):
        def build():
            kx, ky, kz = self.wavenumbers
            return kx**2 + ky**2 + kz**2

        return self._cached("_k_squared", build)

    @property
    def deriv_k_squared(self):
        def build():
            kx, ky, kz = self.deriv_wavenumbers
            return kx**2 + ky**2 + kz**2

        return self._cached("_deriv_k_squared", build)

    @property
    def dealias_mask(self):
        """2/3-rule mask: keep |k_i| < n/3 in every direction."""

        def build():
            kx, ky, kz = self.wavenumbers
            cut = self.n / 3.0
            return (np.abs(kx) < cut) & (np.abs(ky) < cut) & (np.abs(kz) < cut)

        return self._cached("_dealias_mask", build)

    @property
    def nyquist_free_mask(self):
        """Zero-one mask excluding the unpaired Nyquist rows |k_i| = n/2."""

        def build():
            kx, ky, kz = self.wavenumbers
            half = self.n // 2
            return ((np.abs(kx) != half) & (np.abs(ky) != half)
                    & (np.abs(kz) != half)).astype(np.float64)

        return self._cached("_nyquist_free_mask", build)

    @property
    def spectral_weights(self):
        """Multiplicity of stored modes: 2 for interior kz, 1 on kz=0, n/2."""

        def build():
            w = np.full((1, 1, self.n // 2 + 1), 2.0)
            w[0, 0, 0] = 1.0
            w[0, 0, -1] = 1.0
            return w

        return self._cached("_spectral_weights", build)

    def mesh(self):
        """Real-space coordinate arrays (broadcastable)."""

        def build():
            x = TWO_PI * np.arange(self.n) / self.n
            return (
                x.reshape(self.n, 1, 1),
                x.reshape(1, self.n, 1),
                x.reshape(1, 1, self.n),
            )

        return self._cached("_mesh", build)


_AXES = (1, 2, 3)


class FourierField:
    """Divergence-free-capable periodic vector field in spectral form."""

    __slots__ = ("c", "grid")

    def __init__(self, coeffs: np.ndarray, grid: Grid):
        expected = (3,) + grid.spectral_shape
        if coeffs.shape != expected:
            raise GridError(f"coefficient shape {coeffs.shape} != {expected}")
        self.c = np.ascontiguousarray(coeffs, dtype=np.complex128)
        self.grid = grid

    @classmethod
    def zero(cls, grid: Grid) -> "FourierField":
        return cls(np.zeros((3,) + grid.spectral_shape, dtype=np.complex128), grid)

    @classmethod
    def from_real(cls, samples: np.ndarray, grid: Grid) -> "FourierField":
        n = grid.n
        if samples.shape != (3, n, n, n):
            raise GridError(f"sample shape {samples.shape} != {(3, n, n, n)}")
        return cls(np.fft.rfftn(samples, axes=_AXES) / n**3, grid)

    def to_real(self) -> "RealField":
        n = self.grid.n
        samples = np.fft.irfftn(self.c * n**3, s=(n, n, n), axes=_AXES)
        return RealField(samples, self.grid)

    def copy(self) -> "FourierField":
        return FourierField(self.c.copy(), self.grid)

    def __add__(self, other: "FourierField") -> "FourierField":
        return FourierField(self.c + other.c, self.grid)

    def __sub__(self, other: "FourierField") -> "FourierField":
        return FourierField(self.c - other.c, self.grid)

    def __mul__(self, a) -> "FourierField":
        return FourierField(self.c * a, self.grid)

    __rmul__ = __mul__

    def divergence_defect(self) -> float:
        """max_k |k.c(k)| over max_k |k||c(k)|; 0 for divergence-free."""
        kx, ky, kz = self.grid.deriv_wavenumbers
        div = kx * self.c[0] + ky * self.c[1] + kz * self.c[2]
        scale = np.sqrt(self.grid.deriv_k_squared) * np.sqrt(
            np.abs(self.c[0]) ** 2 + np.abs(self.c[1]) ** 2 + np.abs(self.c[2]) ** 2
        )
        top = float(np.max(np.abs(div)))
        bottom = float(np.max(scale))
        return top / bottom if bottom > 0 else 0.0

    def require_divergence_free(self, tol: float = 1e-13) -> None:
        defect = self.divergence_defect()
        if defect > tol:
            raise DivergenceError(
                f"field is not divergence-free: relative defect {defect:.3e}"
            )


@dataclass
class RealField:
    """Real-space samples of a vector field; shape (3, n, n, n)."""

    components: np.ndarray
    grid: Grid

    def to_fourier(self) -> FourierField:
        return FourierField.from_real(self.components, self.grid)

    def magnitude(self) -> np.ndarray:
        return np.sqrt(np.sum(self.components**2, axis=0))


def spectral_inner(a: FourierField, b: FourierField) -> float:
    """L2 inner product over the torus via Parseval, exact mode weights."""
    w = a.grid.spectral_weights
    s = np.sum(w * (a.c * np.conj(b.c)).real)
    return BOX_VOLUME * float(s)


def l2_norm(f: FourierField) -> float:
    return math.sqrt(max(spectral_inner(f, f), 0.0))


def energy(f: FourierField) -> float:
    """Kinetic energy (1/2)||f||^2."""
    return 0.5 * spectral_inner(f, f)


def enstrophy(f: FourierField) -> float:
    """||grad f||^2 computed spectrally (Nyquist-free derivative)."""
    w = f.grid.spectral_weights * f.grid.deriv_k_squared
    s = np.sum(w * (np.abs(f.c[0]) ** 2 + np.abs(f.c[1]) ** 2 + np.abs(f.c[2]) ** 2))
    return BOX_VOLUME * float(s)


def leray_project(f: FourierField) -> FourierField:
    """Remove the gradient part per mode: c -> c - k (k.c)/|k|^2.

    The mean mode carries no pressure gradient and is left untouched;
    Nyquist rows carry no representable derivative information and are
    zeroed, so the composition with the discrete divergence vanishes
    identically.  Idempotent and self-adjoint for the spectral inner
    product, hence norm-nonincreasing.
    """
    kx, ky, kz = f.grid.deriv_wavenumbers
    k2 = f.grid.deriv_k_squared.copy()
    k2[k2 == 0] = 1.0
    kdotc = (kx * f.c[0] + ky * f.c[1] + kz * f.c[2]) / k2
    out = np.empty_like(f.c)
    out[0] = f.c[0] - kx * kdotc
    out[1] = f.c[1] - ky * kdotc
    out[2] = f.c[2] - kz * kdotc
    out *= f.grid.nyquist_free_mask
    out[:, 0, 0, 0] = f.c[:, 0, 0, 0]
    return FourierField(out, f.grid)


def gradient_tensor(f: FourierField) -> np.ndarray:
    """Spectral gradient G[i, j] = d_j f_i, shape (3, 3) + spectral."""
    kx, ky, kz = f.grid.deriv_wavenumbers
    out = np.empty((3, 3) + f.grid.spectral_shape, dtype=np.complex128)
    for i in range(3):
        out[i, 0] = 1j * kx * f.c[i]
        out[i, 1] = 1j * ky * f.c[i]
        out[i, 2] = 1j * kz * f.c[i]
    return out


def divergence(f: FourierField) -> np.ndarray:
    """Spectral scalar div f = i k.c."""
    kx, ky, kz = f.grid.deriv_wavenumbers
    return 1j * (kx * f.c[0] + ky * f.c[1] + kz * f.c[2])


def curl(f: FourierField) -> FourierField:
    kx, ky, kz = f.grid.deriv_wavenumbers
    out = np.empty_like(f.c)
    out[0] = 1j * (ky * f.c[2] - kz * f.c[1])
    out[1] = 1j * (kz * f.c[0] - kx * f.c[2])
    out[2] = 1j * (kx * f.c[1] - ky * f.c[0])
    return FourierField(out, f.grid)


def _to_samples(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    n = grid.n
    return np.fft.irfftn(coeffs * n**3, s=(n, n, n), axes=(-3, -2, -1))


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.empty_like(a)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


def nonlinear_term(u: FourierField, check: bool = True) -> FourierField:
    """Projected advective term P[(u.grad)u] in rotational form.

    Computed as P[curl(u) x u] with 2/3 dealiasing before and after the
    physical-space product; the pointwise triple-product identity makes
    ((u.grad)u, u) vanish to round-off on the grid.
    """
    if check:
        u.require_divergence_free()
    grid = u.grid
    mask = grid.dealias_mask
    ud = u.c * mask
    omega = curl(FourierField(ud, grid))
    w = _cross(
        _to_samples(omega.c, grid),
        _to_samples(ud, grid),
    )
    what = np.fft.rfftn(w, axes=_AXES) / grid.n**3
    what *= mask
    return leray_project(FourierField(what, grid))


def advective_term(w: FourierField, v: FourierField) -> FourierField:
    """Dealiased convective product (w.grad)v, unprojected."""
    grid = w.grid
    if v.grid != grid:
        raise GridError("advective_term requires matching grids")
    mask = grid.dealias_mask
    wd = _to_samples(w.c * mask, grid)
    grad = gradient_tensor(FourierField(v.c * mask, grid))
    out = np.empty((3,) + (grid.n,) * 3)
    for i in range(3):
        gi = _to_samples(grad[i], grid)
        out[i] = wd[0] * gi[0] + wd[1] * gi[1] + wd[2] * gi[2]
    chat = np.fft.rfftn(out, axes=_AXES) / grid.n**3
    chat *= mask
    return FourierField(chat, grid)


ExponentLike = Union[Exponent, Fraction, int, float, str]


def _exponent_to_float(q: ExponentLike) -> float:
    if isinstance(q, Exponent):
        return float(q)
    if isinstance(q, str):
        return float(Exponent.parse(q))
    q = float(q)
    if q < 1:
        raise ValueError(f"L^q norm requires q >= 1, got {q}")
    return q


def lq_norm(f, q: ExponentLike) -> float:
    """Grid-quadrature L^q norm: (sum |f|^q cell_volume)^(1/q); max for q=inf.

    Accepts a FourierField / RealField (pointwise Euclidean magnitude)
    or a plain real sample array.
    """
    if isinstance(f, FourierField):
        f = f.to_real()
    if isinstance(f, RealField):
        mag = f.magnitude()
        cell = f.grid.cell_volume
    else:
        mag = np.abs(np.asarray(f, dtype=np.float64))
        cell = TWO_PI**3 / mag.size
    qf = _exponent_to_float(q)
    if math.isinf(qf):
        return float(np.max(mag))
    return float(np.sum(mag**qf) * cell) ** (1.0 / qf)


def sobolev_seminorm(f: FourierField, q: ExponentLike) -> float:
    """L^q norm of the pointwise Frobenius magnitude of grad f."""
    grad = gradient_tensor(f)
    n = f.grid.n
    acc = np.zeros((n, n, n))
    for i in range(3):
        for j in range(3):
            acc += _to_samples(grad[i, j], f.grid) ** 2
    return lq_norm(np.sqrt(acc), q)


def random_rough_field(sigma: float, seed: int, grid: Grid,
                       amplitude: float = 1.0) -> FourierField:
    """Divergence-free Gaussian field with |c(k)| = amplitude |k|^-(sigma+3/2).

    Directions come from white noise projected onto the divergence-free
    plane and normalized per mode, so the radial amplitude law is exact
    and deterministic given (sigma, seed, n).  H^t norms are finite for
    t < sigma and grow with resolution for t > sigma.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    n = grid.n
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((3, n, n, n))
    w = np.fft.rfftn(noise, axes=_AXES)
    p = leray_project(FourierField(w, grid)).c
    norm = np.sqrt(np.abs(p[0]) ** 2 + np.abs(p[1]) ** 2 + np.abs(p[2]) ** 2)
    norm[norm == 0] = 1.0
    k2 = grid.k_squared.copy()
    k2[0, 0, 0] = 1.0
    envelope = amplitude * k2 ** (-(sigma + 1.5) / 2.0)
    envelope[0, 0, 0] = 0.0
    # drop Nyquist planes: odd derivatives are not representable there
    half = n // 2
    keep = np.ones(grid.spectral_shape)
    keep[half, :, :] = 0.0
    keep[:, half, :] = 0.0
    keep[:, :, -1] = 0.0
    coeffs = p / norm * envelope * keep
    return FourierField(coeffs, grid)


def taylor_green(grid: Grid, kind: str = "2d", amplitude: float = 1.0) -> FourierField:
    """Taylor-Green vortex data.

    kind "2d": z-independent vortex (sin x cos y, -cos x sin y, 0); an
    exact solution whose advective term is a pure gradient.  kind "3d":
    the classical three-dimensional initial datum with cos z modulation.
    """
    x, y, z = grid.mesh()
    zero = np.zeros((grid.n,) * 3)
    if kind == "2d":
        u = amplitude * np.sin(x) * np.cos(y) + zero
        v = -amplitude * np.cos(x) * np.sin(y) + zero
        w = zero
    elif kind == "3d":
        u = amplitude * np.sin(x) * np.cos(y) * np.cos(z)
        v = -amplitude * np.cos(x) * np.sin(y) * np.cos(z)
        w = zero
    else:
        raise ValueError(f"unknown Taylor-Green kind {kind!r}")
    return FourierField.from_real(np.stack([u, v, w]), grid)


def resample(f: FourierField, grid: Grid) -> FourierField:
    """Spectral resampling (zero-pad or truncate) onto another grid.

    Fourier coefficients are copied by wavevector; Nyquist rows of the
    source are dropped (fields built here never populate them).
    """
    if grid == f.grid:
        return f.copy()
    ns, nt = f.grid.n, grid.n
    hs, ht = ns // 2, nt // 2
    m = min(hs, ht)  # copy modes with |k_i| < m
    out = np.zeros((3,) + grid.spectral_shape, dtype=np.complex128)
    idx_s = np.r_[0:m, ns - m + 1:ns]
    idx_t = np.r_[0:m, nt - m + 1:nt]
    block = f.c[:, idx_s][:, :, idx_s][:, :, :, :m]
    out[np.ix_(range(3), idx_t, idx_t, range(m))] = block
    return FourierField(out, grid)
