"""Radial covariance models for stationary planar Gaussian fields.

Three models are supported, all normalised to unit variance:

``BargmannFock``
    kappa(r) = exp(-r^2/2), white-noise kernel q(r) = sqrt(2/pi) exp(-r^2).
``TruncatedWave``
    kappa(r) proportional to 2 pi int chi(t^2) J0(r t) t dt with chi a smooth
    bump of centre ``t0`` and half-width ``w``; compact spectral support.
``BesselJ0``
    kappa(r) = J0(r), the monochromatic random wave. Its spectral measure is
    carried by a circle, so it has neither a spectral density nor an L^2
    white-noise kernel.

Fourier convention: kappa(x) = int exp(2 i pi <x, y>) rho^2(y) dy, and
q is the (radial) Fourier transform of rho, so that kappa = q * q.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np
from scipy import integrate, optimize, special

from .errors import ConfigError, ModelError

Q_TRUNCATION_THRESHOLD = 1e-8
KAPPA_TILDE_STEP = 0.01
KAPPA_TILDE_RMAX = 200.0
TRUNCATION_SCAN_MAX = 400.0


class KernelName(str, Enum):
    BARGMANN_FOCK = "BargmannFock"
    TRUNCATED_WAVE = "TruncatedWave"
    BESSEL_J0 = "BesselJ0"


@dataclass(frozen=True)
class CovarianceKernel:
    """A radial covariance model identified by name and parameters.

    ``params`` is empty for BargmannFock and BesselJ0 and ``(t0, w)`` for
    TruncatedWave. ``truncation_radius`` defaults to the radius beyond which
    ``|q| < 1e-8`` (q is treated as zero past it).
    """

    name: KernelName
    params: tuple = ()
    truncation_radius: float | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "name", KernelName(self.name))
        params = tuple(float(p) for p in self.params)
        if self.name is KernelName.TRUNCATED_WAVE:
            if not params:
                params = (1.0, 0.3)
            if len(params) != 2:
                raise ConfigError("TruncatedWave takes params (t0, w)")
            t0, w = params
            if not (w > 0):
                raise ConfigError(f"TruncatedWave bump width must be > 0, got {w}")
            if not (t0 - w > 0):
                raise ConfigError(f"TruncatedWave support must avoid 0: t0 - w = {t0 - w}")
        elif params:
            raise ConfigError(f"{self.name.value} takes no parameters")
        object.__setattr__(self, "params", params)
        if self.truncation_radius is None:
            object.__setattr__(self, "truncation_radius", _default_truncation(self))
        elif not (self.truncation_radius > 0):
            raise ConfigError("truncation_radius must be positive")

    @classmethod
    def bargmann_fock(cls) -> "CovarianceKernel":
        return cls(KernelName.BARGMANN_FOCK)

    @classmethod
    def truncated_wave(cls, t0: float = 1.0, w: float = 0.3) -> "CovarianceKernel":
        return cls(KernelName.TRUNCATED_WAVE, (t0, w))

    @classmethod
    def bessel_j0(cls) -> "CovarianceKernel":
        return cls(KernelName.BESSEL_J0)

    @classmethod
    def from_spec(cls, spec) -> "CovarianceKernel":
        """Build from a config value: a name string or ``{"name":..., "params": [...]}``."""
        if isinstance(spec, CovarianceKernel):
            return spec
        if isinstance(spec, str):
            return cls(_parse_name(spec))
        try:
            return cls(_parse_name(spec["name"]), tuple(spec.get("params", ())),
                       spec.get("truncation_radius"))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad kernel specification {spec!r}") from exc

    def to_spec(self) -> dict:
        return {"name": self.name.value, "params": list(self.params)}

    @property
    def label(self) -> str:
        if self.params:
            return f"{self.name.value}({','.join(f'{p:g}' for p in self.params)})"
        return self.name.value

    @property
    def has_spectral_density(self) -> bool:
        return self.name is not KernelName.BESSEL_J0

    @property
    def radially_monotone(self) -> bool:
        return self.name is KernelName.BARGMANN_FOCK

    @cached_property
    def _bump(self) -> "_Bump":
        return _Bump(*self.params)


def _parse_name(name: str) -> KernelName:
    aliases = {"bf": KernelName.BARGMANN_FOCK, "bargmannfock": KernelName.BARGMANN_FOCK,
               "truncatedwave": KernelName.TRUNCATED_WAVE, "tw": KernelName.TRUNCATED_WAVE,
               "besselj0": KernelName.BESSEL_J0, "j0": KernelName.BESSEL_J0,
               "randomwave": KernelName.BESSEL_J0}
    key = str(name).replace("_", "").replace("-", "").lower()
    if key not in aliases:
        raise ConfigError(f"unknown kernel {name!r}; expected one of "
                          f"{[k.value for k in KernelName]}")
    return aliases[key]


@functools.lru_cache(maxsize=64)
def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(n)


class _Bump:
    """chi(u) = exp(-w^2 / (w^2 - (u - t0)^2)) on |u - t0| < w, with quadrature nodes in u."""

    def __init__(self, t0: float, w: float):
        self.t0, self.w = t0, w
        # normalisation Z = 2 pi int chi(t^2) t dt = pi int chi(u) du, so kappa(0) = 1
        self.norm = math.pi * integrate.quad(self.chi, t0 - w, t0 + w, epsabs=0, epsrel=1e-12)[0]

    def chi(self, u):
        u = np.asarray(u, dtype=float)
        z = (u - self.t0) / self.w
        inside = np.abs(z) < 1
        out = np.zeros_like(u)
        out[inside] = np.exp(-1.0 / (1.0 - z[inside] ** 2))
        return out if out.ndim else float(out)

    def nodes(self, rmax: float):
        # Gauss-Legendre in u; enough nodes to resolve J0(r sqrt(u)) up to rmax
        n = int(256 + 4 * rmax * (math.sqrt(self.t0 + self.w) - math.sqrt(self.t0 - self.w)))
        n = 128 * -(-n // 128)  # coarse sizes so the node cache is reused
        x, wt = _leggauss(n)
        u = self.t0 + self.w * x
        return u, self.w * wt

    def radial_integral(self, r, weight):
        """int weight(u) J0(r sqrt(u)) du over the bump support, vectorised in r."""
        r = np.asarray(r, dtype=float)
        u, wt = self.nodes(float(np.max(r)) if r.size else 0.0)
        vals = wt * weight(u)
        flat = r.reshape(-1)
        out = np.empty(flat.size)
        for start in range(0, flat.size, 2048):
            chunk = flat[start:start + 2048]
            out[start:start + 2048] = special.j0(np.outer(chunk, np.sqrt(u))) @ vals
        return out.reshape(r.shape)


def _check_r(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or not np.all(np.isfinite(r)):
        raise ValueError("radius must be finite and non-negative")
    return r


def _ret(x):
    return float(x) if np.ndim(x) == 0 else x


def kappa(kernel: CovarianceKernel, r):
    """Covariance kappa(r), normalised so kappa(0) = 1."""
    r = _check_r(r)
    if kernel.name is KernelName.BARGMANN_FOCK:
        return _ret(np.exp(-0.5 * r ** 2))
    if kernel.name is KernelName.BESSEL_J0:
        return _ret(special.j0(r))
    b = kernel._bump
    return _ret((math.pi / b.norm) * b.radial_integral(r, b.chi))


def kappa_quad(kernel: CovarianceKernel, r: float) -> float:
    """Scalar kappa by adaptive quadrature; reference path for :func:`kappa`."""
    if kernel.name is not KernelName.TRUNCATED_WAVE:
        return float(kappa(kernel, r))
    b = kernel._bump
    val = integrate.quad(lambda u: b.chi(u) * special.j0(r * math.sqrt(u)),
                         b.t0 - b.w, b.t0 + b.w, epsabs=0, epsrel=1e-8, limit=400)[0]
    return math.pi / b.norm * val


def q_of(kernel: CovarianceKernel, r):
    """White-noise kernel q(r) with kappa = q * q; zero at and beyond the truncation radius."""
    r = _check_r(r)
    if kernel.name is KernelName.BARGMANN_FOCK:
        out = math.sqrt(2.0 / math.pi) * np.exp(-r ** 2)
    elif kernel.name is KernelName.BESSEL_J0:
        raise ModelError("BesselJ0 has a singular spectral measure: q is not in L^2")
    else:
        out = _q_untruncated(kernel, r)
    out = np.where(r >= kernel.truncation_radius, 0.0, out)
    return _ret(out)


def _q_untruncated(kernel, r):
    b = kernel._bump
    # q(r) = int t rho(t/2pi) J0(r t) dt / 2pi = (1/2) int sqrt(chi(u)/Z) J0(r sqrt u) du
    return 0.5 * b.radial_integral(r, lambda u: np.sqrt(b.chi(u) / b.norm))


def _default_truncation(kernel: CovarianceKernel) -> float:
    if kernel.name is KernelName.BARGMANN_FOCK:
        return math.sqrt(math.log(math.sqrt(2.0 / math.pi) / Q_TRUNCATION_THRESHOLD))
    if kernel.name is KernelName.BESSEL_J0:
        return math.inf
    r = np.arange(0.0, TRUNCATION_SCAN_MAX, 0.05)
    q = np.abs(_q_untruncated(kernel, r))
    big = np.nonzero(q >= Q_TRUNCATION_THRESHOLD)[0]
    if big.size == 0:
        return 0.05
    return float(min(r[big[-1]] + 0.05, TRUNCATION_SCAN_MAX))


def truncation_tail(kernel: CovarianceKernel) -> float:
    """Largest |q| on a grid just beyond the truncation radius (0 if the cutoff is honest)."""
    if kernel.name is KernelName.BESSEL_J0:
        return math.inf
    r = kernel.truncation_radius + np.arange(0.0, 50.0, 0.05)
    if kernel.name is KernelName.BARGMANN_FOCK:
        q = math.sqrt(2.0 / math.pi) * np.exp(-r ** 2)
    else:
        q = _q_untruncated(kernel, r)
    return float(np.max(np.abs(q)))


def spectral_density(kernel: CovarianceKernel, xi):
    """Spectral density rho^2 at frequency vectors ``xi`` (shape (..., 2)) or radii."""
    if not kernel.has_spectral_density:
        raise ModelError("BesselJ0 spectral measure is singular (uniform on a circle)")
    xi = np.asarray(xi, dtype=float)
    k2 = np.sum(xi ** 2, axis=-1) if (xi.ndim and xi.shape[-1] == 2) else xi ** 2
    if kernel.name is KernelName.BARGMANN_FOCK:
        out = 2 * math.pi * np.exp(-2 * math.pi ** 2 * k2)
    else:
        b = kernel._bump
        out = 4 * math.pi ** 2 * b.chi(4 * math.pi ** 2 * k2) / b.norm
    if np.any(out < -1e-9):
        raise ModelError("negative spectral density: kernel not positive definite")
    return _ret(out)


def spectral_support(kernel: CovarianceKernel) -> tuple[float, float]:
    """Radial interval (in frequency units) carrying the spectral measure."""
    if kernel.name is KernelName.BESSEL_J0:
        k = 1 / (2 * math.pi)
        return (k, k)
    if kernel.name is KernelName.TRUNCATED_WAVE:
        t0, w = kernel.params
        return (math.sqrt(t0 - w) / (2 * math.pi), math.sqrt(t0 + w) / (2 * math.pi))
    return (0.0, math.sqrt(40.0) / (2 * math.pi))   # density below e^-20 beyond


def kappa_from_spectrum(kernel: CovarianceKernel, r, n: int = 2000):
    """Fourier inversion kappa(r) = 2 pi int rho^2(k) J0(2 pi k r) k dk (radial quadrature)."""
    r = _check_r(r)
    lo, hi = spectral_support(kernel)
    x, wt = np.polynomial.legendre.leggauss(n)
    k = 0.5 * (hi - lo) * (x + 1) + lo
    wt = 0.5 * (hi - lo) * wt
    dens = spectral_density(kernel, k)
    out = special.j0(2 * math.pi * np.outer(np.atleast_1d(r), k)) @ (2 * math.pi * wt * dens * k)
    return _ret(out.reshape(r.shape))


class _TildeTable:
    """Suffix maxima of kappa on a fine radial grid, refined at local maxima."""

    def __init__(self, kernel: CovarianceKernel):
        self.kernel = kernel
        self.grid = np.arange(0.0, KAPPA_TILDE_RMAX + KAPPA_TILDE_STEP / 2, KAPPA_TILDE_STEP)
        vals = np.asarray(kappa(kernel, self.grid))
        # per-cell maximum over [g_i, g_{i+1}], refined where a local max sits inside
        cell = np.maximum(vals[:-1], vals[1:])
        self.peak = np.full(cell.size, np.nan)
        interior = np.nonzero((vals[1:-1] >= vals[:-2]) & (vals[1:-1] >= vals[2:]))[0] + 1
        for i in interior:
            res = optimize.minimize_scalar(lambda x: -kappa(kernel, x),
                                           bounds=(self.grid[i - 1], self.grid[i + 1]),
                                           method="bounded", options={"xatol": 1e-10})
            c = min(int(res.x // KAPPA_TILDE_STEP), cell.size - 1)
            if -res.fun > cell[c]:
                cell[c] = -res.fun
                self.peak[c] = res.x
        self.cell = cell
        self.suffix = np.maximum.accumulate(cell[::-1])[::-1]
        self.tail = _tail_envelope(kernel, KAPPA_TILDE_RMAX)

    def __call__(self, x: float) -> float:
        if x >= self.grid[-1]:
            return max(float(kappa(self.kernel, x)), self.tail)
        c = int(x // KAPPA_TILDE_STEP)
        later = self.suffix[c + 1] if c + 1 < self.suffix.size else -np.inf
        end = float(kappa(self.kernel, self.grid[c + 1]))
        here = max(float(kappa(self.kernel, x)), end)
        if not np.isnan(self.peak[c]) and self.peak[c] >= x:
            here = max(here, self.cell[c])
        return float(max(here, later, self.tail))


def _tail_envelope(kernel: CovarianceKernel, r: float) -> float:
    """Upper bound on |kappa| beyond r."""
    if kernel.name is KernelName.BARGMANN_FOCK:
        return math.exp(-0.5 * r * r)
    # |J0(x)| <= sqrt(2/(pi x)) for x > 0; the wave kernels average J0(r sqrt u)
    umin = kernel.params[0] - kernel.params[1] if kernel.params else 1.0
    return math.sqrt(2.0 / (math.pi * r * math.sqrt(umin)))


_TILDE_CACHE: dict = {}


def kappa_tilde(kernel: CovarianceKernel, x: float) -> float:
    """sup { kappa(y) : |y| >= x }.

    Exact for radially monotone kernels; otherwise a dense radial search
    (step 0.01, local maxima refined) up to r = 200 plus the asymptotic
    envelope as a bound on the tail.
    """
    x = float(x)
    if x < 0 or not math.isfinite(x):
        raise ValueError("x must be finite and non-negative")
    if kernel.radially_monotone:
        return float(kappa(kernel, x))
    table = _TILDE_CACHE.get(kernel)
    if table is None:
        table = _TILDE_CACHE[kernel] = _TildeTable(kernel)
    return table(x)
