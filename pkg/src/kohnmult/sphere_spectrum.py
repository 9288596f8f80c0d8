"""Joint spectral lattice of (L, U, Kohn Laplacian) on the sphere S^{2n-1} in C^n.

Every bihomogeneous harmonic space H_pq is a joint eigenspace; all lattice
quantities are exact Python integers.  Floating point enters only through
exponentials and multiplier values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from kohnmult.bumps import plateau_bump
from kohnmult.multipliers import MultiplierFn, norm_N2

MAX_DEGREE = 10**4


@dataclass(frozen=True)
class SphereParams:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"complex dimension n must be an integer >= 2, got {self.n}")

    @property
    def d(self) -> int:
        return 2 * self.n - 1

    @property
    def Q(self) -> int:
        return 2 * self.n

    @property
    def volume(self) -> float:
        """Surface measure of S^{2n-1}."""
        return 2 * math.pi**self.n / math.factorial(self.n - 1)


@dataclass(frozen=True)
class SpectrumPoint:
    p: int
    q: int
    dim: int
    lamL: int
    lamU: int
    lamB: int


def _dim(n: int, p: int, q: int) -> int:
    num = (p + q + n - 1) * math.comb(p + n - 2, n - 2) * math.comb(q + n - 2, n - 2)
    dim, rem = divmod(num, n - 1)
    assert rem == 0
    return dim


def lattice_point(params: SphereParams, p: int, q: int) -> SpectrumPoint:
    if p < 0 or q < 0:
        raise ValueError("p and q must be nonnegative")
    if p > MAX_DEGREE or q > MAX_DEGREE:
        raise OverflowError(f"degree ({p}, {q}) beyond supported range {MAX_DEGREE}")
    n = params.n
    return SpectrumPoint(
        p=p,
        q=q,
        dim=_dim(n, p, q),
        lamL=4 * p * q + 2 * (n - 1) * (p + q),
        lamU=2 * (n - 1) * (p - q),
        lamB=2 * q * (p + n - 1),
    )


def iter_lattice(params: SphereParams, pmax: int):
    for p in range(pmax + 1):
        for q in range(pmax + 1):
            yield lattice_point(params, p, q)


def lattice_arrays(params: SphereParams, pmax: int) -> dict[str, np.ndarray]:
    """Vectorized int64 version of the lattice over 0 <= p, q <= pmax (no dim)."""
    n = params.n
    p, q = np.meshgrid(np.arange(pmax + 1, dtype=np.int64), np.arange(pmax + 1, dtype=np.int64), indexing="ij")
    p, q = p.ravel(), q.ravel()
    return {
        "p": p,
        "q": q,
        "lamL": 4 * p * q + 2 * (n - 1) * (p + q),
        "lamU": 2 * (n - 1) * (p - q),
        "lamB": 2 * q * (p + n - 1),
    }


@dataclass
class RelationReport:
    n: int
    pmax: int
    points: int
    identity_violations: int
    sandwich_violations: int
    sandwich_checked: int

    @property
    def ok(self) -> bool:
        return self.identity_violations == 0 and self.sandwich_violations == 0


def verify_spectral_relations(params: SphereParams, pmax: int) -> RelationReport:
    """Exhaustively check 2 lamB = lamL - lamU and lamB <= lamL <= (n+1) lamB."""
    if pmax < 1:
        raise ValueError("pmax must be >= 1")
    if pmax > MAX_DEGREE:
        raise OverflowError("pmax beyond supported range")
    n = params.n
    # int64 is exact here: lamL <= 4*10^8 + 4n*10^4
    lat = lattice_arrays(params, pmax)
    lamL, lamU, lamB = lat["lamL"], lat["lamU"], lat["lamB"]
    ident = int(np.count_nonzero(2 * lamB != lamL - lamU))
    nz = lamB != 0
    sandwich = int(np.count_nonzero(nz & ((lamB > lamL) | (lamL > (n + 1) * lamB))))
    return RelationReport(n, pmax, lamL.size, ident, sandwich, int(np.count_nonzero(nz)))


def _dim_float(n: int, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    pf, qf = p.astype(float), q.astype(float)
    out = (pf + qf + n - 1) / (n - 1)
    for i in range(1, n - 1):
        out = out * (pf + i) / i * (qf + i) / i
    return out


def _heat_tail_bound(n: int, t: float, h: int, lam_cut: float) -> float:
    """Upper bound for the sum of all heat-trace terms with lamL > lam_cut.

    Terms are grouped by the (even) value lam of lamL.  Since lamL >= 2(n-1)(p+q),
    each group has at most s+1 points with s = lam/(2(n-1)), each of dimension at
    most (s+n-1)/(n-1) C(s+n-2, n-2)^2, and |lamU| <= lamL.  The resulting
    g(lam) e^{-t lam} has consecutive ratio <= e^{-t/2} once lam >= 2D/t, so the
    tail is at most the first term over 1 - e^{-t/2}.
    """
    D = 2 + 2 * (n - 2) + 2 * h
    lam = max(lam_cut, 2.0 * D / t)
    s = lam / (2 * (n - 1))
    dim_max = (s + n - 1) / (n - 1) * math.comb(int(s) + n - 1, n - 2) ** 2
    log_g = math.log(s + 2) + math.log(dim_max) + 2 * h * math.log(max(lam, 1.0))
    log_term = log_g - t * lam
    return math.exp(log_term) / -math.expm1(-t / 2) if log_term > -700 else 0.0


def heat_trace_sum(params: SphereParams, t: float, h: int = 0, rel_tol: float = 1e-30) -> float:
    """S(t, h) = sum_{p,q} (lamU)^{2h} exp(-t lamL) dim H_pq.

    Not divided by the sphere volume.  Truncation uses a rigorous tail bound,
    enlarging the cutoff until the tail is below rel_tol times the partial sum.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    if h < 0:
        raise ValueError("h must be nonnegative")
    n = params.n
    D = 2 + 2 * (n - 2) + 2 * h
    lam_cut = max(2.0 * D / t, 40.0 / t, 1.0)
    total = _heat_partial_sum(n, t, h, lam_cut)
    while True:
        # the partial sum is a lower bound for S, so any cutoff whose tail bound
        # beats rel_tol * total is certified; find one by doubling then bisection
        if _heat_tail_bound(n, t, h, lam_cut) <= rel_tol * max(total, 1e-300):
            return total
        hi = lam_cut * 2
        while _heat_tail_bound(n, t, h, hi) > rel_tol * max(total, 1e-300):
            hi *= 2
        lo = lam_cut
        for _ in range(30):
            mid = 0.5 * (lo + hi)
            if _heat_tail_bound(n, t, h, mid) > rel_tol * max(total, 1e-300):
                lo = mid
            else:
                hi = mid
        lam_cut = hi
        total = _heat_partial_sum(n, t, h, lam_cut)


def _heat_partial_sum(n: int, t: float, h: int, lam_cut: float) -> float:
    c = 2 * (n - 1)
    pmax = int(lam_cut // c)
    p = np.arange(pmax + 1, dtype=np.int64)
    # lamL = q (4p + c) + c p <= lam_cut
    qmax = np.floor((lam_cut - c * p) / (4 * p + c)).astype(np.int64)
    qmax = np.maximum(qmax, -1)
    counts = qmax + 1
    pp = np.repeat(p, counts)
    starts = np.cumsum(counts) - counts
    qq = np.arange(pp.size, dtype=np.int64) - np.repeat(starts, counts)
    lamL = (4 * pp * qq + c * (pp + qq)).astype(float)
    lamU = (c * (pp - qq)).astype(float)
    terms = np.exp(-t * lamL) * _dim_float(n, pp, qq)
    if h:
        terms = terms * lamU ** (2 * h)
    return float(np.sum(terms))


def heat_trace_brute(params: SphereParams, t: float, h: int, pmax: int) -> float:
    """Plain double loop over p, q <= pmax with exact integers (test oracle)."""
    acc = []
    for pt in iter_lattice(params, pmax):
        acc.append(float(pt.lamU) ** (2 * h) * math.exp(-t * pt.lamL) * pt.dim)
    return math.fsum(acc)


@dataclass
class BivariateMultiplier:
    func: Callable[[np.ndarray, np.ndarray], np.ndarray]
    source: MultiplierFn
    t: float
    eta: Callable[[np.ndarray], np.ndarray]
    meta: dict = field(default_factory=dict)

    def __call__(self, lam1, lam2):
        return self.func(lam1, lam2)


def lifting_bump(n: int) -> Callable[[np.ndarray], np.ndarray]:
    """Smooth bump equal to 1 on [1/(n+1), 1], supported in [1/(2(n+1)), 3/2]."""
    return plateau_bump(1.0 / (2 * (n + 1)), 1.0 / (n + 1), 1.0, 1.5)


def lift_multiplier(F: MultiplierFn, t: float, params: SphereParams, R: float | None = None) -> BivariateMultiplier:
    """G(l1, l2) = F(sqrt((l1-l2)_+/2)) (1 - exp(-t^2 l1)) eta((l1-l2)/(2 l1)), G(0, .) = 0."""
    if not t > 0:
        raise ValueError("t must be positive")
    if R is not None:
        lo, hi = F.support
        if lo < R / 16 - 1e-12 or hi > R + 1e-12:
            raise ValueError(f"supp F = {F.support} not inside [R/16, R] for R = {R}")
    sup = F.sup_abs()
    if not np.isfinite(sup):
        raise ValueError("F is unbounded on its support")
    eta = lifting_bump(params.n)

    def G(lam1, lam2):
        l1 = np.asarray(lam1, dtype=float)
        l2 = np.asarray(lam2, dtype=float)
        l1, l2 = np.broadcast_arrays(l1, l2)
        out = np.zeros(l1.shape, dtype=complex)
        nz = l1 != 0
        a, b = l1[nz], l2[nz]
        diff = a - b
        out[nz] = F(np.sqrt(np.maximum(diff, 0.0) / 2)) * (-np.expm1(-t * t * a)) * eta(diff / (2 * a))
        return out

    return BivariateMultiplier(G, F, t, eta, {"R": R, "sup": sup})


def lattice_multiplier_apply(F: MultiplierFn, params: SphereParams, pmax: int) -> dict[tuple[int, int], complex]:
    """Table (p, q) -> F(sqrt(lamB)) over 0 <= p, q <= pmax."""
    if pmax < 0:
        raise ValueError("pmax must be >= 0")
    lat = lattice_arrays(params, pmax)
    vals = F(np.sqrt(lat["lamB"].astype(float)))
    return {(int(p), int(q)): complex(v) for p, q, v in zip(lat["p"], lat["q"], vals)}


@dataclass
class PlancherelBound:
    N: int
    theta: float
    t: float
    bound: float
    comparison: float
    comparison_min: float

    @property
    def ratio(self) -> float:
        return self.bound / self.comparison if self.comparison > 0 else (0.0 if self.bound == 0 else math.inf)

    def as_dict(self) -> dict:
        return {
            "N": self.N,
            "theta": self.theta,
            "t": self.t,
            "bound": self.bound,
            "comparison": self.comparison,
            "ratio": self.ratio,
            "comparison_min": self.comparison_min,
        }


def shell_points(params: SphereParams, N: int) -> dict[str, np.ndarray]:
    """All lattice points with lamB <= N^2 (the only ones any shell j <= N can see)."""
    n = params.n
    # lamB = 2q(p+n-1) <= N^2 with q >= 1; q = 0 has lamB = 0 and never enters a shell j >= 2
    qmax = N * N // (2 * (n - 1))
    ps, qs = [], []
    for q in range(1, qmax + 1):
        pmax = N * N // (2 * q) - (n - 1)
        if pmax < 0:
            break
        ps.append(np.arange(pmax + 1, dtype=np.int64))
        qs.append(np.full(pmax + 1, q, dtype=np.int64))
    p = np.concatenate(ps) if ps else np.zeros(0, dtype=np.int64)
    q = np.concatenate(qs) if qs else np.zeros(0, dtype=np.int64)
    return {
        "p": p,
        "q": q,
        "lamL": 4 * p * q + 2 * (n - 1) * (p + q),
        "lamB": 2 * q * (p + n - 1),
    }


def weighted_plancherel_bound(F: MultiplierFn, N: int, t: float, theta: float, params: SphereParams) -> PlancherelBound:
    """Shell-sum surrogate B(F, N, t, theta) and its comparison value.

    B = N^{Q-1-theta} sum_{j=2}^N max{|F(sqrt lamB)(1 - e^{-t^2 lamL})|^2 : (j-1)^2 <= lamB <= j^2}.
    comparison = N^{Q-theta} ||F(N .)||_{N,2}^2 max{1, (Nt)^2}^2; comparison_min uses
    min{1, (n+1)(Nt)^2}^2 instead, which is what 1 - e^{-x} <= min{1, x} gives.
    """
    if not 0 <= theta < 1:
        raise ValueError("theta must lie in [0, 1)")
    if N < 1:
        raise ValueError("N must be >= 1")
    if not t > 0:
        raise ValueError("t must be positive")
    lo, hi = F.support
    if lo < 0 or hi > N:
        raise ValueError(f"F must vanish outside (0, N); declared support {F.support}")
    Q = params.Q
    pts = shell_points(params, N)
    lamB = pts["lamB"].astype(float)
    vals = np.abs(F(np.sqrt(lamB)) * (-np.expm1(-t * t * pts["lamL"].astype(float)))) ** 2
    total = 0.0
    for j in range(2, N + 1):
        sel = (lamB >= (j - 1) ** 2) & (lamB <= j * j)
        if np.any(sel):
            total += float(vals[sel].max())
    bound = N ** (Q - 1 - theta) * total
    FN = F.rescaled(N)
    norm2 = norm_N2(FN, N) ** 2
    comparison = N ** (Q - theta) * norm2 * max(1.0, (N * t) ** 2) ** 2
    comparison_min = N ** (Q - theta) * norm2 * min(1.0, (params.n + 1) * (N * t) ** 2) ** 2
    return PlancherelBound(N, theta, t, bound, comparison, comparison_min)
