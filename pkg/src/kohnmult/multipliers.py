"""One-dimensional multiplier analysis.

Fourier convention used throughout: F^(w) = int F(x) e^{-i x w} dx, so that
||F||_{L^2} = (2 pi)^{-1/2} ||F^||_{L^2}.  The Bessel-potential Sobolev norm of
order s is ||(1 + w^2)^{s/2} F^||_{L^2} / sqrt(2 pi) for q = 2 (it reduces to the
plain L^2 norm at s = 0), and sup |(1 - d^2/dx^2)^{s/2} F| for q = inf.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import mpmath
import numpy as np
from scipy import fft as sfft

from kohnmult.bumps import plateau_bump, smooth_step, standard_bump

DEFAULT_RESOLUTION = 2**12
MIN_PAD_FACTOR = 8
SPECTRAL_TAIL_WARN = 0.01


class ResolutionWarning(UserWarning):
    """Raised (as a warning) when a sampled transform is visibly under-resolved."""


@dataclass
class MultiplierFn:
    """A multiplier F given by a vectorized closure, zero outside `support`."""

    func: Callable[[np.ndarray], np.ndarray]
    support: tuple[float, float] = (-math.inf, math.inf)
    resolution: int = DEFAULT_RESOLUTION
    name: str = "F"

    def __post_init__(self):
        lo, hi = self.support
        if lo > hi:
            raise ValueError(f"empty support {self.support}")
        self.support = (float(lo), float(hi))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        lo, hi = self.support
        inside = (x >= lo) & (x <= hi)
        out = np.zeros(x.shape, dtype=complex)
        if np.any(inside):
            out[inside] = self.func(x[inside])
        return out

    @property
    def compact(self) -> bool:
        return all(math.isfinite(v) for v in self.support)

    def grid(self, resolution: int | None = None) -> np.ndarray:
        if not self.compact:
            raise ValueError("sampling grid needs a compact support")
        res = resolution or self.resolution
        lo, hi = self.support
        npts = max(int(math.ceil((hi - lo) * res)) + 1, 2)
        return np.linspace(lo, hi, npts)

    def sup_abs(self) -> float:
        lo, hi = self.support
        if not self.compact:
            lo, hi = max(lo, -1e3), min(hi, 1e3)
        if lo == hi:
            return float(np.abs(self(np.array([lo])))[0])
        npts = min(max(int((hi - lo) * self.resolution) + 1, 2), 2**20)
        return float(np.max(np.abs(self(np.linspace(lo, hi, npts)))))

    def rescaled(self, c: float) -> "MultiplierFn":
        """x -> F(c x)."""
        if not c > 0:
            raise ValueError("dilation factor must be positive")
        f = self.func
        lo, hi = self.support
        return MultiplierFn(lambda x: f(c * x), (lo / c, hi / c), self.resolution, f"{self.name}({c:g}.)")

    def times(self, g: Callable[[np.ndarray], np.ndarray], support: tuple[float, float]) -> "MultiplierFn":
        """Pointwise product with g, restricted to the intersection of supports."""
        lo = max(self.support[0], support[0])
        hi = min(self.support[1], support[1])
        if lo > hi:
            return zero_multiplier()
        return MultiplierFn(lambda x: self(x) * g(x), (lo, hi), self.resolution, self.name)


# ----------------------------------------------------------------------------- presets


def zero_multiplier() -> MultiplierFn:
    return MultiplierFn(lambda x: np.zeros_like(x), (0.0, 0.0), name="zero")


def constant(c: complex = 1.0, support=(-math.inf, math.inf)) -> MultiplierFn:
    return MultiplierFn(lambda x: np.full(x.shape, c, dtype=complex), support, name=f"const({c})")


def indicator(a: float, b: float) -> MultiplierFn:
    return MultiplierFn(lambda x: np.ones_like(x), (a, b), name=f"indicator[{a},{b}]")


def gaussian(width: float = 10.0) -> MultiplierFn:
    """e^{-x^2}, truncated to [-width, width] (e^{-100} is below double precision relative to 1)."""
    return MultiplierFn(lambda x: np.exp(-x * x), (-width, width), name="gaussian")


def bochner_riesz(alpha: float, t: float) -> MultiplierFn:
    """Bochner-Riesz mean (1 - t lam)_+^alpha seen as a function of x = sqrt(lam)."""
    if alpha < 0 or not t > 0:
        raise ValueError("need alpha >= 0 and t > 0")

    def f(x):
        base = 1.0 - t * x * x
        out = np.zeros_like(x)
        pos = base > 0
        out[pos] = base[pos] ** alpha
        return out

    return MultiplierFn(f, (0.0, 1.0 / math.sqrt(t)), name=f"bochner-riesz({alpha},{t})")


def szego() -> MultiplierFn:
    """Indicator of {0}: projection onto the kernel."""
    return MultiplierFn(lambda x: (x == 0).astype(float), (0.0, 0.0), name="szego")


def smooth_bump_multiplier(a: float, b: float) -> MultiplierFn:
    """C^infinity bump supported in [a, b], equal to 1 on the middle half."""
    w = (b - a) / 4
    eta = plateau_bump(a, a + w, b - w, b)
    return MultiplierFn(eta, (a, b), name=f"bump[{a},{b}]")


# ----------------------------------------------------------------------------- Sobolev norms


def _sampled_spectrum(F: MultiplierFn, resolution: int | None):
    x = F.grid(resolution)
    dx = x[1] - x[0]
    vals = F(x)
    nfft = sfft.next_fast_len(MIN_PAD_FACTOR * x.size)
    spec = sfft.fft(vals, n=nfft) * dx
    omega = 2 * math.pi * sfft.fftfreq(nfft, d=dx)
    return x, vals, spec, omega, dx, nfft


def sobolev_norm(F: MultiplierFn, s: float, q, resolution: int | None = None) -> float:
    """Bessel-potential norm ||F||_{L^q_s} for q in {2, inf} from a zero-padded FFT.

    F is sampled on its support at `resolution` points per unit and zero-padded
    to at least 8 times the sample count.  For q = 2 the discrete Parseval sum
    (2 pi)^{-1} sum_k |F^(w_k)|^2 (1 + w_k^2)^s dw is returned (square-rooted).
    For q = inf the estimator is the sup of the inverse transform of
    (1 + w^2)^{s/2} F^, i.e. of the periodized Bessel potential.  A
    ResolutionWarning is issued when the upper half of the frequency band
    carries more than 1% of the norm.
    """
    if s < 0:
        raise ValueError("s must be nonnegative")
    if q not in (2, math.inf, "inf"):
        raise ValueError("q must be 2 or inf")
    if not F.compact:
        raise ValueError("sobolev_norm needs a compactly supported F")
    lo, hi = F.support
    if lo == hi:
        return 0.0
    x, vals, spec, omega, dx, nfft = _sampled_spectrum(F, resolution)
    weight = (1.0 + omega**2) ** (s / 2)
    dens = np.abs(spec * weight) ** 2
    total = float(np.sum(dens))
    if total == 0.0:
        return 0.0
    nyq = math.pi / dx
    tail = math.sqrt(float(np.sum(dens[np.abs(omega) > nyq / 2])) / total)
    if tail > SPECTRAL_TAIL_WARN:
        warnings.warn(
            f"{F.name}: {100 * tail:.2f}% of the L^2_{s} norm sits in the upper half band; raise resolution",
            ResolutionWarning,
            stacklevel=2,
        )
    if q == 2:
        domega = 2 * math.pi / (nfft * dx)
        return math.sqrt(total * domega / (2 * math.pi))
    pot = sfft.ifft(spec * weight) / dx
    return float(np.max(np.abs(pot)))


@dataclass
class SobolevConfig:
    s: float = 0.0
    q: float = 2
    chi: Callable[[np.ndarray], np.ndarray] = field(default_factory=lambda: plateau_bump(0.25, 0.375, 0.875, 1.0))
    chi_support: tuple[float, float] = (0.25, 1.0)
    ratio: float = 2 ** (1 / 8)
    t_min: float = 2.0**-20
    t_max: float = 2.0**20
    resolution: int = DEFAULT_RESOLUTION


def sloc_grid(F: MultiplierFn, cfg: SobolevConfig) -> np.ndarray:
    """Geometric t-grid t = ratio^k, restricted to t with supp F(t .) chi nonempty."""
    a, b = cfg.chi_support
    lo, hi = F.support
    # F(t x) chi(x) != 0 needs t x in [lo, hi] for some x in (a, b), t > 0
    tlo = max(cfg.t_min, lo / b if lo > 0 else cfg.t_min)
    thi = min(cfg.t_max, hi / a if hi > 0 else 0.0)
    if thi <= 0 or tlo > thi:
        return np.zeros(0)
    step = math.log(cfg.ratio)
    k0 = math.floor(math.log(tlo) / step)
    k1 = math.ceil(math.log(thi) / step)
    return np.exp(np.arange(k0, k1 + 1) * step)


def windowed(F: MultiplierFn, t: float, cfg: SobolevConfig) -> MultiplierFn:
    f, chi = F, cfg.chi
    return MultiplierFn(lambda x: f(t * x) * chi(x), cfg.chi_support, cfg.resolution, f"{F.name}({t:g}.)chi")


def sloc_norm(F: MultiplierFn, cfg: SobolevConfig | None = None) -> float:
    """sup over t of ||F(t .) chi||_{L^q_s}, sup taken on a geometric grid of ratio 2^{1/8}."""
    cfg = cfg or SobolevConfig()
    ts = sloc_grid(F, cfg)
    if ts.size == 0:
        warnings.warn("empty dilation grid: supp F misses every window", RuntimeWarning, stacklevel=2)
        return 0.0
    vals, caught = [], []
    for t in ts:
        with warnings.catch_warnings(record=True) as rec:
            warnings.simplefilter("always", ResolutionWarning)
            vals.append(sobolev_norm(windowed(F, t, cfg), cfg.s, cfg.q, cfg.resolution))
        caught.append(rec)
    top = max(vals)
    # windows grazing the support edge carry round-off-sized norms whose spectra are pure noise;
    # only warn for windows that matter to the sup
    for v, rec in zip(vals, caught):
        if v >= 1e-6 * top:
            for w in rec:
                warnings.warn(w.message, w.category, stacklevel=2)
    return top


# ----------------------------------------------------------------------------- mollifier


@dataclass
class Mollifier:
    """xi(t) = 64 phi(64 t), phi(u) = bump(u) P(u^2), P of degree Q in u^2."""

    Q: int
    coeffs: np.ndarray
    scale: float = 64.0
    dps: int = 0

    @property
    def half_width(self) -> float:
        return 1.0 / self.scale

    def phi(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return standard_bump(u) * np.polynomial.polynomial.polyval(u * u, self.coeffs)

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.scale * self.phi(self.scale * t)

    def moments(self, kmax: int, nodes: int = 100_001, variable: str = "t") -> np.ndarray:
        """int t^k xi(t) dt for k = 0..kmax by trapezoid rule on the support.

        The integrand is C^infinity and flat at the support edges, so the
        trapezoid rule converges faster than any power of the node count.
        With variable="u" the unscaled moments int u^k phi(u) du are returned.
        """
        u = np.linspace(-1.0, 1.0, nodes)
        du = u[1] - u[0]
        ph = self.phi(u)
        out = np.empty(kmax + 1)
        for k in range(kmax + 1):
            val = math.fsum(u**k * ph) * du
            out[k] = val if variable == "u" else val / self.scale**k
        return out


def _bump_even_moments(count: int, dps: int) -> list:
    with mpmath.workdps(dps):
        f = lambda k: mpmath.quad(lambda u: u ** (2 * k) * mpmath.exp(-1 / (1 - u * u)), [-1, 0, 1])
        return [f(k) for k in range(count)]


def build_mollifier(Q: int, tol: float = 1e-10, max_attempts: int = 3) -> Mollifier:
    """Even mollifier with int xi = 1 and vanishing moments of order 1..2Q."""
    if int(Q) != Q or Q < 1:
        raise ValueError("Q must be a positive integer")
    dps = 30
    last = None
    for _ in range(max_attempts):
        mom = _bump_even_moments(2 * Q + 1, dps)
        with mpmath.workdps(dps):
            G = mpmath.matrix(Q + 1, Q + 1)
            for j in range(Q + 1):
                for i in range(Q + 1):
                    G[j, i] = mom[i + j]
            rhs = mpmath.matrix([1] + [0] * Q)
            c = mpmath.lu_solve(G, rhs)
        moll = Mollifier(Q, np.array([float(v) for v in c]), dps=dps)
        res = moll.moments(2 * Q, variable="u")
        err = max(abs(res[0] - 1.0), float(np.max(np.abs(res[1:]))))
        if err <= tol:
            return moll
        last = err
        dps *= 2
    raise ArithmeticError(f"mollifier moment residual {last:.3e} above {tol:g} after {max_attempts} attempts")


def mollify(F: MultiplierFn, xi: Mollifier, k: int, nodes: int = 256) -> MultiplierFn:
    """F * xi_k with xi_k = 2^k xi(2^k .), by Gauss-Legendre quadrature in the bump variable."""
    w = 2.0**-k / xi.scale
    u, wts = np.polynomial.legendre.leggauss(nodes)
    wts = wts * xi.phi(u)
    shifts = u * w

    def conv(x):
        x = np.asarray(x, dtype=float)
        return (F(x[..., None] - shifts) * wts).sum(axis=-1)

    lo, hi = F.support
    return MultiplierFn(conv, (lo - w, hi + w), F.resolution, f"{F.name}*xi_{k}")


# ----------------------------------------------------------------------------- N,2 norm and dyadic pieces


def norm_N2(F: MultiplierFn, N: int, samples: int = 64) -> float:
    """((1/N) sum_i sup_{[(i-1)/N, i/N]} |F|^2)^{1/2}; sups from `samples` points per interval."""
    if int(N) != N or N < 1:
        raise ValueError("N must be a positive integer")
    lo, hi = F.support
    if lo < -1e-12 or hi > 1 + 1e-12:
        raise ValueError(f"F must be supported in [0, 1], declared support {F.support}")
    i = np.arange(N)[:, None]
    x = (i + np.linspace(0.0, 1.0, samples)[None, :]) / N
    sups = np.max(np.abs(F(x)) ** 2, axis=1)
    return math.sqrt(float(np.sum(sups)) / N)


DYADIC_STEP_WIDTH = 0.5


def dyadic_generator(x) -> np.ndarray:
    """eta(x) = S(log2 x + 2) - S(log2 x + 1), supported in [1/4, 2^{-1/2}]."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    u = np.log2(x[pos])
    w = DYADIC_STEP_WIDTH
    out[pos] = smooth_step((u + 2) / w) - smooth_step((u + 1) / w)
    return out


def dyadic_exact_range(kmin: int, kmax: int) -> tuple[float, float]:
    """Interval on which sum_{k=kmin}^{kmax} eta(2^{-k} x) = 1 exactly (telescoping)."""
    return 2.0 ** (kmin - 2 + DYADIC_STEP_WIDTH), 2.0 ** (kmax - 1)


def dyadic_pieces(F: MultiplierFn, kmin: int, kmax: int) -> list[MultiplierFn]:
    """F_k = eta(2^{-k} .) F for k = kmin..kmax."""
    if kmin > kmax:
        raise ValueError("kmin must not exceed kmax")
    pieces = []
    for k in range(kmin, kmax + 1):
        scale = 2.0**k
        sup = (scale / 4, scale * 2**-0.5)
        pieces.append(F.times(lambda x, s=scale: dyadic_generator(x / s), sup))
    return pieces


def sum_pieces(pieces: Sequence[MultiplierFn], x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return sum((P(x) for P in pieces), np.zeros(x.shape, dtype=complex))
