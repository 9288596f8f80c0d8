"""Finite doubling metric-measure spaces.

A space is a symmetric distance table with zero diagonal plus positive point
masses.  Balls are open: V(x, r) = mu{y : d(x, y) < r}.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from kohnmult.heisenberg import HeisenbergParams, gauge_distance

MAX_POINTS = 6000
EXHAUSTIVE_TRIANGLE_LIMIT = 400


@dataclass
class FiniteMetricMeasureSpace:
    dist: np.ndarray
    mu: np.ndarray
    coords: np.ndarray | None = None
    c_tri: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.dist = np.ascontiguousarray(self.dist, dtype=float)
        self.mu = np.ascontiguousarray(self.mu, dtype=float)
        m = self.mu.size
        if self.dist.shape != (m, m):
            raise ValueError(f"distance table shape {self.dist.shape} does not match {m} weights")
        if not np.all(self.mu > 0):
            raise ValueError("all point masses must be positive")
        if not np.all(np.isfinite(self.dist)) or np.any(self.dist < 0):
            raise ValueError("distances must be finite and nonnegative")
        if np.any(np.diag(self.dist) != 0):
            raise ValueError("distance table must have zero diagonal")
        if not np.allclose(self.dist, self.dist.T, rtol=0, atol=1e-12 * max(1.0, float(self.dist.max(initial=0)))):
            raise ValueError("distance table must be symmetric")
        self.dist = 0.5 * (self.dist + self.dist.T)

    @property
    def m(self) -> int:
        return self.mu.size

    @property
    def total_mass(self) -> float:
        return float(self.mu.sum())

    @property
    def diameter(self) -> float:
        return float(self.dist.max(initial=0.0))

    def volume(self, x: int, r: float) -> float:
        if r < 0:
            raise ValueError("radius must be nonnegative")
        return float(self.mu[self.dist[x] < r].sum())

    def volumes(self, r: float) -> np.ndarray:
        """V(x, r) for every x."""
        return (self.dist < r) @ self.mu

    def triangle_constant(self, samples: int = 200_000, seed: int = 0) -> float:
        """max d(x,z) / (d(x,y) + d(y,z)); exhaustive for m <= 400, sampled otherwise."""
        D = self.dist
        m = self.m
        best = 0.0
        if m <= EXHAUSTIVE_TRIANGLE_LIMIT:
            for x in range(m):
                denom = D[x][:, None] + D  # [y, z] -> d(x,y) + d(y,z)
                num = np.broadcast_to(D[x][None, :], denom.shape)
                ok = denom > 0
                if np.any(ok):
                    best = max(best, float(np.max(num[ok] / denom[ok])))
        else:
            rng = np.random.default_rng(seed)
            x, y, z = rng.integers(0, m, size=(3, samples))
            denom = D[x, y] + D[y, z]
            ok = denom > 0
            best = float(np.max(D[x, z][ok] / denom[ok])) if np.any(ok) else 0.0
        return max(1.0, best)

    def certify_triangle(self, **kw) -> "FiniteMetricMeasureSpace":
        self.c_tri = self.triangle_constant(**kw)
        return self


def cycle_graph(m: int, weight: float = 1.0) -> FiniteMetricMeasureSpace:
    """m-cycle with path distance and constant point mass."""
    if m < 1:
        raise ValueError("need at least one vertex")
    i = np.arange(m)
    d = np.abs(i[:, None] - i[None, :])
    d = np.minimum(d, m - d).astype(float)
    return FiniteMetricMeasureSpace(d, np.full(m, weight), i[:, None].astype(float), 1.0, {"kind": "cycle", "m": m})


def product_space(A: FiniteMetricMeasureSpace, B: FiniteMetricMeasureSpace) -> FiniteMetricMeasureSpace:
    """X1 x X2 with d = d1 + d2 and product measure; index (i, j) -> i * m2 + j."""
    d = (A.dist[:, None, :, None] + B.dist[None, :, None, :]).reshape(A.m * B.m, A.m * B.m)
    mu = np.outer(A.mu, B.mu).ravel()
    return FiniteMetricMeasureSpace(d, mu, None, max(A.c_tri, B.c_tri), {"kind": "product", "factors": [A.meta, B.meta]})


def single_point() -> FiniteMetricMeasureSpace:
    return FiniteMetricMeasureSpace(np.zeros((1, 1)), np.ones(1), None, 1.0, {"kind": "point"})


# ----------------------------------------------------------------------------- sphere and Heisenberg clouds


@dataclass
class SphereCloud:
    """Sphere sample; `space` and `weight` are None for a points-only cloud."""

    space: FiniteMetricMeasureSpace | None
    n: int
    z: np.ndarray
    weight: np.ndarray | None

    @property
    def m(self) -> int:
        return self.z.shape[0]

    @property
    def dist(self) -> np.ndarray:
        return self.space.dist

    def rows(self, idx) -> tuple[np.ndarray, np.ndarray]:
        """(rho, weight) rows for the centers idx against all points, exact zeros on the diagonal."""
        idx = np.asarray(idx)
        rho, wt = sphere_tables(self.z[idx], self.z)
        rho[np.arange(idx.size), idx] = 0.0
        wt[np.arange(idx.size), idx] = 0.0
        return rho, wt

    def weight_ratio(self, idx=None) -> float:
        """Smallest C with w <= C rho on all pairs (or on the rows idx)."""
        if idx is None and self.space is not None:
            d, w = self.space.dist, self.weight
        else:
            d, w = self.rows(np.arange(self.m) if idx is None else idx)
        ok = d > 0
        return float(np.max(w[ok] / d[ok])) if np.any(ok) else 0.0


def sphere_volume(n: int) -> float:
    return 2 * math.pi**n / math.factorial(n - 1)


def sphere_tables(z: np.ndarray, w: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """rho = |1 - <z,w>|^{1/2} and the weight |1 - |<z,w>|^2|^{1/2} between two point sets."""
    w = z if w is None else w
    ip = z @ w.conj().T
    rho = np.sqrt(np.abs(1.0 - ip))
    wt = np.sqrt(np.abs(1.0 - np.abs(ip) ** 2))
    return rho, wt


def sample_sphere(n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def build_sphere_cloud(n: int, m: int, seed: int, max_points: int = MAX_POINTS, certify: bool = True, tables: bool = True) -> SphereCloud:
    """Uniform cloud on S^{2n-1}; with tables=False only the points are kept (no m x m tables)."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if m < 10:
        raise ValueError("need at least 10 points")
    if not tables:
        return SphereCloud(None, n, sample_sphere(n, m, np.random.default_rng(seed)), None)
    if m > max_points:
        raise MemoryError(f"m = {m} exceeds the configured cap of {max_points} points ({m * m * 8 / 1e6:.0f} MB per table)")
    rng = np.random.default_rng(seed)
    z = sample_sphere(n, m, rng)
    rho, wt = sphere_tables(z)
    np.fill_diagonal(rho, 0.0)
    np.fill_diagonal(wt, 0.0)
    mu = np.full(m, sphere_volume(n) / m)
    space = FiniteMetricMeasureSpace(rho, mu, np.column_stack([z.real, z.imag]), 1.0, {"kind": "sphere", "sampled": True, "n": n, "m": m, "seed": seed})
    if certify:
        space.certify_triangle(seed=seed)
    return SphereCloud(space, n, z, wt)


def build_heisenberg_cloud(
    n: int,
    levi,
    box,
    m: int,
    seed: int,
    max_points: int = MAX_POINTS,
    certify: bool = True,
) -> FiniteMetricMeasureSpace:
    """Uniform points in a box of R^{2n-1} with d(u, v) = ||u^{-1} v|| (homogeneous gauge)."""
    params = HeisenbergParams(n, tuple(levi))
    if params.levi_flat:
        raise ValueError("all Levi eigenvalues vanish: the group is abelian (Levi-flat)")
    if m > max_points:
        raise MemoryError(f"m = {m} exceeds the configured cap of {max_points} points")
    box = np.asarray(box, dtype=float)
    if box.ndim == 0:
        box = np.tile([-float(box), float(box)], (params.dim, 1))
    if box.shape != (params.dim, 2):
        raise ValueError(f"box must be a scalar half-width or a ({params.dim}, 2) array")
    rng = np.random.default_rng(seed)
    u = rng.uniform(box[:, 0], box[:, 1], size=(m, params.dim))
    d = gauge_distance(u[:, None, :], u[None, :, :], params)
    d = 0.5 * (d + d.T)
    np.fill_diagonal(d, 0.0)
    vol = float(np.prod(box[:, 1] - box[:, 0]))
    # centers in the middle half of the box with radii <= r_max keep the fitted
    # balls (almost entirely) away from the box faces
    mid = 0.5 * (box[:, 0] + box[:, 1])
    half = 0.5 * (box[:, 1] - box[:, 0])
    interior = np.nonzero(np.all(np.abs(u - mid) <= 0.5 * half, axis=1))[0]
    meta = {
        "kind": "heisenberg",
        "sampled": True,
        "n": n,
        "levi": list(params.levi),
        "m": m,
        "seed": seed,
        "box": box.tolist(),
        "interior": interior.tolist(),
        "r_max": 0.5 * float(np.min(half)) / max(1.0, math.sqrt(max(abs(l) for l in params.levi))),
    }
    space = FiniteMetricMeasureSpace(d, np.full(m, vol / m), u, 1.0, meta)
    if certify:
        space.certify_triangle(seed=seed)
    return space


# ----------------------------------------------------------------------------- structure constants


@dataclass
class StructureConstants:
    Q: float
    N: float
    Cp: float
    Cpp: float
    fit_radii: tuple = ()
    checked: int = 0

    def as_dict(self) -> dict:
        return {"Q": self.Q, "N": self.N, "Cp": self.Cp, "Cpp": self.Cpp, "checked": self.checked}


class _BallTable:
    """Sorted distance rows with cumulative masses: V(x, r) by binary search."""

    def __init__(self, space: FiniteMetricMeasureSpace, rows=None):
        rows = np.arange(space.m) if rows is None else np.asarray(rows)
        order = np.argsort(space.dist[rows], axis=1, kind="stable")
        self.d = np.take_along_axis(space.dist[rows], order, axis=1)
        self.cum = np.concatenate([np.zeros((rows.size, 1)), np.cumsum(space.mu[order], axis=1)], axis=1)

    def volumes(self, r: float) -> np.ndarray:
        k = np.array([np.searchsorted(row, r, side="left") for row in self.d])
        return self.cum[np.arange(self.d.shape[0]), k]

    def counts(self, r: float) -> np.ndarray:
        return np.array([np.searchsorted(row, r, side="left") for row in self.d])


def fit_volume_exponent(space: FiniteMetricMeasureSpace, radii=None, min_count: float = 12, centers=None) -> tuple[float, np.ndarray]:
    """Least-squares slope of log(mean ball count) against log r.

    For Monte Carlo clouds (meta["sampled"]) the center itself is not counted,
    since the other points are the unbiased volume sample.  Default radii run from the median radius
    holding `min_count` neighbours to 35% of the diameter (or `r_max` in meta).
    Centers default to meta["interior"] when present (boundary-free balls).
    """
    if space.m == 1 or space.diameter == 0:
        return 0.0, np.zeros(0)
    if centers is None:
        centers = space.meta.get("interior")
    centers = np.arange(space.m) if centers is None else np.asarray(centers)
    D = space.dist[centers]
    if radii is None:
        hi = float(space.meta.get("r_max", 0.35 * space.diameter))
        k = int(min(max(min_count, 2), space.m - 1))
        while True:
            # small clouds: lower the neighbour count until the window opens
            lo = float(np.median(np.partition(D, k, axis=1)[:, k]))
            if lo < hi or k <= 2:
                break
            k = max(2, k // 2)
        if not lo < hi:
            return 0.0, np.zeros(0)
        radii = np.geomspace(lo, hi, 12)
    radii = np.asarray(radii, dtype=float)
    own = 1.0 if space.meta.get("sampled") else 0.0
    meanC = np.array([np.count_nonzero(D < r, axis=1).mean() - own for r in radii])
    keep = meanC > 0
    if keep.sum() < 2 or np.ptp(meanC[keep]) == 0:
        return 0.0, radii
    slope = np.polyfit(np.log(radii[keep]), np.log(meanC[keep]), 1)[0]
    return float(slope), radii


def structure_constants(
    space: FiniteMetricMeasureSpace,
    rgrid=None,
    lamgrid=None,
    Q: float | None = None,
    anchors: int = 400,
    seed: int = 0,
    Cpp_target: float = 4.0,
) -> StructureConstants:
    """Fit Q by volume growth, then the minimal C', C'' (and a displacement N) on the sampled tuples.

    C' = max V(x, lam r) / ((1+lam)^Q V(x, r)) and
    C'' = max V(y, r) / ((1 + d(x,y)/r)^N V(x, r)) are exact maxima over every
    x (or `anchors` random x when m is large), every y, every r in rgrid and
    lam in lamgrid, so the returned constants satisfy the inequalities on all
    checked tuples by construction.  N is the smallest value on a 0.25-step grid
    in [0, Q] giving C'' <= Cpp_target (else N = Q).
    """
    if space.m == 1:
        return StructureConstants(0.0, 0.0, 1.0, 1.0, (), 1)
    if Q is None:
        Q, fit_r = fit_volume_exponent(space)
    else:
        fit_r = ()
    D = space.dist
    pos = D[D > 0]
    if rgrid is None:
        rgrid = np.unique(np.concatenate([np.geomspace(pos.min() / 2, 2 * pos.max(), 24), [1.0]]))
    if lamgrid is None:
        lamgrid = np.geomspace(1e-2, 1e3, 21)
    rgrid = np.asarray(rgrid, dtype=float)
    lamgrid = np.asarray(lamgrid, dtype=float)
    m = space.m
    rows = np.arange(m) if m <= anchors else np.sort(np.random.default_rng(seed).choice(m, anchors, replace=False))
    balls = _BallTable(space)
    V = {float(r): balls.volumes(r) for r in rgrid}
    Cp = 1.0
    for r in rgrid:
        Vr = V[float(r)][rows]
        for lam in lamgrid:
            Vl = balls.volumes(lam * r)[rows]
            Cp = max(Cp, float(np.max(Vl / ((1 + lam) ** Q * Vr))))
    Ns = np.arange(0.0, Q + 1e-12, 0.25) if Q > 0 else np.array([0.0])
    logbest = np.zeros(Ns.size)
    Dr = D[rows]
    for r in rgrid:
        Vr = V[float(r)]
        logratio = np.log(Vr)[None, :] - np.log(Vr[rows])[:, None]
        logw = np.log1p(Dr / r)
        for j, N in enumerate(Ns):
            logbest[j] = max(logbest[j], float(np.max(logratio - N * logw)))
    best = np.exp(logbest)
    ok = np.nonzero(best <= Cpp_target)[0]
    jN = int(ok[0]) if ok.size else Ns.size - 1
    checked = rows.size * m * rgrid.size + rows.size * rgrid.size * lamgrid.size
    return StructureConstants(float(Q), float(Ns[jN]), Cp, float(best[jN]), tuple(np.asarray(fit_r).tolist()), int(checked))


def displacement_constant(space: FiniteMetricMeasureSpace, N: float, rgrid) -> float:
    """max over x, y, r in rgrid of V(y,r) / ((1 + d(x,y)/r)^N V(x,r)), at least 1."""
    best = 1.0
    for r in rgrid:
        Vr = space.volumes(r)
        ratio = Vr[None, :] / Vr[:, None] * (1 + space.dist / r) ** (-N)
        best = max(best, float(ratio.max()))
    return best


def standard_weight_constant(space: FiniteMetricMeasureSpace, s: float, rgrid) -> float:
    """max over y, r of sum_x (1 + d(x,y)/r)^{-s} mu(x) / V(y, r)."""
    best = 0.0
    for r in rgrid:
        integ = ((1 + space.dist / r) ** (-s)) @ space.mu
        best = max(best, float(np.max(integ / space.volumes(r))))
    return best


# ----------------------------------------------------------------------------- weight lemma


@dataclass
class WeightReport:
    alpha: float
    beta: float
    radii: list
    ratio_int: list
    ratio_int_se: list
    ratio_int2: list
    ratio_int2_se: list
    weight_C: float
    in_scope_int: bool
    in_scope_int2: bool

    @property
    def spread_int(self) -> float:
        r = np.asarray(self.ratio_int)
        return float(r.max() / r.min())

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__} | {"spread_int": self.spread_int}


def check_weight_integrals(cloud: SphereCloud, alpha: float, beta: float, rgrid, centers: int = 200, seed: int = 0) -> WeightReport:
    """Monte Carlo estimates of the two weighted sphere integrals, normalized.

    For each r, centers w are drawn from the cloud.  I1(w) = sum_z (1+rho/r)^{-beta} (1+w/r)^{-alpha} mu
    is divided by the empirical ball volume V(w, r); I2(w) = sum_z (1+w/r)^{-alpha} mu is divided by
    min{1, r^alpha}.  The report lists the center-averaged ratios, their standard errors, and the
    smallest C with w <= C rho on the cloud.
    """
    if alpha < 0 or beta < 0:
        raise ValueError("alpha and beta must be nonnegative")
    n = cloud.n
    Q = 2 * n
    mu = np.full(cloud.m, sphere_volume(n) / cloud.m)
    rng = np.random.default_rng(seed)
    idx = rng.choice(cloud.m, size=min(centers, cloud.m), replace=False)
    rho, wt = cloud.rows(idx)
    r1, r1se, r2, r2se = [], [], [], []
    for r in np.asarray(rgrid, dtype=float):
        I1 = ((1 + rho / r) ** (-beta) * (1 + wt / r) ** (-alpha)) @ mu
        V = (rho < r) @ mu
        a = I1 / V
        I2 = ((1 + wt / r) ** (-alpha)) @ mu
        b = I2 / min(1.0, r**alpha)
        r1.append(float(a.mean()))
        r1se.append(float(a.std(ddof=1) / math.sqrt(a.size)))
        r2.append(float(b.mean()))
        r2se.append(float(b.std(ddof=1) / math.sqrt(b.size)))
    return WeightReport(
        alpha,
        beta,
        [float(r) for r in rgrid],
        r1,
        r1se,
        r2,
        r2se,
        cloud.weight_ratio(idx),
        alpha + beta > Q and alpha < 2 * n - 2,
        alpha < 2 * n - 2,
    )


# ----------------------------------------------------------------------------- serialization

HEADER = struct.Struct("<qqq")
FLAG_COORDS = 1


def save_space(space: FiniteMetricMeasureSpace, path, n: int = 0) -> None:
    """Binary layout: little-endian int64 header (m, n, flags), then the m*m float64
    distance table in row-major order.  Weights, coordinates and metadata go to
    the JSON sidecar `<path>.json`."""
    path = Path(path)
    flags = FLAG_COORDS if space.coords is not None else 0
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(space.m, int(n or space.meta.get("n", 0)), flags))
        fh.write(np.ascontiguousarray(space.dist, dtype="<f8").tobytes())
    side = {
        "mu": space.mu.tolist(),
        "c_tri": space.c_tri,
        "meta": space.meta,
        "coords": None if space.coords is None else np.asarray(space.coords).tolist(),
    }
    Path(str(path) + ".json").write_text(json.dumps(side))


def load_space(path) -> FiniteMetricMeasureSpace:
    path = Path(path)
    with open(path, "rb") as fh:
        m, n, flags = HEADER.unpack(fh.read(HEADER.size))
        dist = np.frombuffer(fh.read(8 * m * m), dtype="<f8").reshape(m, m).copy()
    side = json.loads(Path(str(path) + ".json").read_text())
    coords = np.asarray(side["coords"]) if side.get("coords") is not None else None
    meta = dict(side.get("meta", {}))
    meta.setdefault("n", n)
    return FiniteMetricMeasureSpace(dist, np.asarray(side["mu"]), coords, float(side.get("c_tri", 1.0)), meta)
