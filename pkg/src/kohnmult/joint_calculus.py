"""Joint functional calculus of commuting self-adjoint kernels.

Operators are stored as kernels; their measure-symmetrized matrices
M = D^{1/2} K D^{1/2} (D = diag(mu)) are Hermitian.  The diagonalization oracle
applies F to joint eigenvalue tuples; the kernel route builds
E_h = A_1^{h_1} * ... * A_m^{h_m} - I from A_j = exp(i K_j) inside the algebra.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from kohnmult.kernels import (
    AlgebraElement,
    Kernel,
    exponential,
    kernel_from_operator,
    kernel_from_symmetrized,
    weighted_norm,
)
from kohnmult.metric_measure import FiniteMetricMeasureSpace, cycle_graph, product_space

COMMUTATOR_TOL = 1e-10
EIG_TOL = 1e-9
ROUTE_TOL = 1e-9


class PreconditionError(ValueError):
    """A stated hypothesis of an operation is violated; carries the measured values."""

    def __init__(self, message: str, measured: dict | None = None):
        super().__init__(message)
        self.measured = measured or {}


# ----------------------------------------------------------------------------- tuples and the oracle


@dataclass
class CommutingTuple:
    space: FiniteMetricMeasureSpace
    kernels: list[Kernel]
    vectors: np.ndarray  # orthonormal columns diagonalizing every symmetrized operator
    eigenvalues: np.ndarray  # shape (m_ops, size)
    commutator_residual: float
    eigen_residual: float
    recipe: str = "custom"
    meta: dict = field(default_factory=dict)

    @property
    def count(self) -> int:
        return len(self.kernels)

    def symmetrized(self, j: int) -> np.ndarray:
        return self.kernels[j].symmetrized()

    def spectrum_box(self) -> np.ndarray:
        """Per-operator (min, max) of the joint spectrum."""
        return np.stack([self.eigenvalues.min(axis=1), self.eigenvalues.max(axis=1)], axis=1)

    def scaled(self, c: float) -> "CommutingTuple":
        return CommutingTuple(
            self.space,
            [k * c for k in self.kernels],
            self.vectors,
            self.eigenvalues * c,
            self.commutator_residual,
            self.eigen_residual,
            self.recipe,
            dict(self.meta, scale=self.meta.get("scale", 1.0) * c),
        )


def _hermitize(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.conj().T)


def joint_eigh(Ms: Sequence[np.ndarray], rng: np.random.Generator, tol: float = EIG_TOL, attempts: int = 3):
    """Common eigenbasis of commuting Hermitian matrices.

    A random real combination is diagonalized; clusters of (near) repeated
    eigenvalues are split with a second random combination restricted to the
    cluster.  Residuals max_j ||M_j V - V diag(lam_j)|| / ||M_j|| are validated
    and the procedure retried with fresh combinations on failure.
    """
    size = Ms[0].shape[0]
    scales = [max(np.linalg.norm(M, 2), 1e-300) for M in Ms]
    last = math.inf
    for _ in range(attempts):
        c = rng.standard_normal(len(Ms))
        A = sum(ci * M / s for ci, M, s in zip(c, Ms, scales))
        w, V = np.linalg.eigh(_hermitize(A))
        gap_tol = 1e-8 * max(1.0, float(np.max(np.abs(w))))
        start = 0
        for i in range(1, size + 1):
            if i == size or w[i] - w[i - 1] > gap_tol:
                if i - start > 1:
                    sub = V[:, start:i]
                    c2 = rng.standard_normal(len(Ms))
                    B = sum(ci * (sub.conj().T @ M @ sub) / s for ci, M, s in zip(c2, Ms, scales))
                    _, R = np.linalg.eigh(_hermitize(B))
                    V[:, start:i] = sub @ R
                start = i
        lams = np.array([np.real(np.einsum("ij,ij->j", V.conj(), M @ V)) for M in Ms])
        res = max(np.linalg.norm(M @ V - V * lam[None, :], 2) / s for M, lam, s in zip(Ms, lams, scales))
        if res <= tol:
            return V, lams, float(res)
        last = res
    raise ArithmeticError(f"joint diagonalization failed: residual {last:.3e} > {tol:g}")


def certify_tuple(space: FiniteMetricMeasureSpace, kernels: Sequence[Kernel], seed: int = 0, recipe: str = "custom", meta: dict | None = None) -> CommutingTuple:
    Ms = [_hermitize(k.symmetrized()) for k in kernels]
    for j, (k, M) in enumerate(zip(kernels, Ms)):
        herm = np.max(np.abs(k.symmetrized() - M)) if M.size else 0.0
        if herm > 1e-10 * max(1.0, np.max(np.abs(M))):
            raise PreconditionError(f"operator {j} is not self-adjoint (asymmetry {herm:.3e})", {"asymmetry": herm})
    norms = [np.linalg.norm(M, 2) for M in Ms]
    comm = 0.0
    for i, j in itertools.combinations(range(len(Ms)), 2):
        comm = max(comm, float(np.linalg.norm(Ms[i] @ Ms[j] - Ms[j] @ Ms[i], 2)))
    scale = max(norms) if norms else 1.0
    if comm > COMMUTATOR_TOL * max(scale, 1e-300) * max(scale, 1.0):
        raise PreconditionError(f"commutator residual {comm:.3e} exceeds tolerance", {"commutator_residual": comm})
    V, lams, res = joint_eigh(Ms, np.random.default_rng(seed))
    return CommutingTuple(space, list(kernels), V, lams, comm, res, recipe, dict(meta or {}))


def oracle_calculus(t: CommutingTuple, F: Callable[..., np.ndarray]) -> Kernel:
    """F(M_1, ..., M_m) through the joint eigenbasis; F takes one array per operator."""
    vals = np.asarray(F(*t.eigenvalues), dtype=complex)
    vals = np.broadcast_to(vals, t.eigenvalues.shape[1:]).copy()
    bad = ~np.isfinite(vals)
    if np.any(bad):
        pts = t.eigenvalues[:, bad].T[:5].tolist()
        raise ValueError(f"F is undefined at {int(bad.sum())} joint eigenvalues, e.g. {pts}")
    V = t.vectors
    return kernel_from_symmetrized(t.space, (V * vals[None, :]) @ V.conj().T)


# ----------------------------------------------------------------------------- recipes


def local_hermitian(space: FiniteMetricMeasureSpace, rng: np.random.Generator, neighbours: int = 4) -> np.ndarray:
    """Random Hermitian symmetrized matrix supported on pairs closer than the local scale, norm 1."""
    D = space.dist
    k = min(neighbours, space.m - 1)
    rad = float(np.median(np.partition(D, k, axis=1)[:, k])) if space.m > 1 else 1.0
    G = rng.standard_normal(D.shape) + 1j * rng.standard_normal(D.shape)
    H = _hermitize(G) * (D <= rad)
    nrm = np.linalg.norm(H, 2)
    return H / nrm if nrm > 0 else H


def metric_laplacian(space: FiniteMetricMeasureSpace, eps: float | None = None) -> np.ndarray:
    """Symmetrized graph Laplacian with Gaussian weights w = exp(-(d/eps)^2).

    As an operator, Lf(x) = (eps^2 c)^{-1} sum_y w(x,y) (f(x) - f(y)) mu(y) with c the
    median local mass sum_y w(x,y) mu(y); it is self-adjoint and nonnegative on L^2(mu).
    """
    D = space.dist
    if eps is None:
        k = min(6, space.m - 1)
        eps = float(np.median(np.partition(D, k, axis=1)[:, k])) if space.m > 1 else 1.0
    W = np.exp(-((D / eps) ** 2))
    mass = W @ space.mu
    c = float(np.median(mass))
    s = np.sqrt(space.mu)
    L = (np.diag(mass) - s[:, None] * W * s[None, :]) / (eps**2 * c)
    return _hermitize(L)


def cycle_laplacian(m: int) -> np.ndarray:
    """2 - S - S^{-1} on the m-cycle (unit masses, so already symmetrized)."""
    S = np.roll(np.eye(m), 1, axis=1)
    return 2 * np.eye(m) - S - S.T


def cycle_derivative(m: int) -> np.ndarray:
    """-i (S - S^{-1}) / 2: the Hermitian centered difference, commuting with the cycle Laplacian."""
    S = np.roll(np.eye(m), 1, axis=1)
    return -0.5j * (S - S.T)


def _function_of(H: np.ndarray, f) -> np.ndarray:
    w, V = np.linalg.eigh(H)
    return (V * f(w)[None, :]) @ V.conj().T


POLY_GENERATORS = (
    lambda w: w,
    lambda w: w * w - 0.5,
    lambda w: 0.5 * (w**3 - w),
)


@dataclass
class TupleSpec:
    recipe: str
    seed: int = 0
    count: int = 2
    params: dict = field(default_factory=dict)


def make_commuting_tuple(space: FiniteMetricMeasureSpace, spec: TupleSpec | dict) -> CommutingTuple:
    """Build and certify a commuting tuple.

    Recipes:
      poly        M_j = p_j(H) for one local random Hermitian H (count <= 3)
      heat        (L,) with L the Gaussian-weight metric Laplacian
      derivative  (L, D) on a cycle: Laplacian and centered derivative
      tensor      (L_1 x I, I x L_2) on a product of two cycles
      fourier     (D x I, I x D) on a product of two cycles
    The product recipes require `space` to come from product_space of two cycles
    (see product_of_cycles).
    """
    if isinstance(spec, dict):
        spec = TupleSpec(**spec)
    rng = np.random.default_rng(spec.seed)
    r = spec.recipe
    if r == "poly":
        if not 1 <= spec.count <= len(POLY_GENERATORS):
            raise ValueError(f"poly recipe supports 1..{len(POLY_GENERATORS)} operators")
        H = local_hermitian(space, rng, spec.params.get("neighbours", 4))
        mats = [_function_of(H, f) for f in POLY_GENERATORS[: spec.count]]
    elif r == "heat":
        mats = [metric_laplacian(space, spec.params.get("eps"))]
    elif r in ("derivative", "tensor", "fourier"):
        mats = _structured(space, r)
    else:
        raise ValueError(f"unknown tuple recipe {r!r}")
    kernels = [kernel_from_symmetrized(space, M) for M in mats]
    return certify_tuple(space, kernels, spec.seed, r, {"spec": spec.__dict__})


def product_of_cycles(m1: int, m2: int) -> FiniteMetricMeasureSpace:
    sp = product_space(cycle_graph(m1), cycle_graph(m2))
    sp.meta.update({"cycles": [m1, m2]})
    return sp


def _structured(space: FiniteMetricMeasureSpace, recipe: str) -> list[np.ndarray]:
    if not np.allclose(space.mu, 1.0):
        raise ValueError(f"recipe {recipe!r} needs unit point masses")
    if recipe == "derivative":
        if space.meta.get("kind") != "cycle":
            raise ValueError("the derivative recipe lives on a cycle graph")
        m = space.m
        return [cycle_laplacian(m), cycle_derivative(m)]
    cyc = space.meta.get("cycles")
    if not cyc:
        raise ValueError(f"recipe {recipe!r} needs a product of two cycles (product_of_cycles)")
    m1, m2 = cyc
    I1, I2 = np.eye(m1), np.eye(m2)
    if recipe == "tensor":
        return [np.kron(cycle_laplacian(m1), I2), np.kron(I1, cycle_laplacian(m2))]
    return [np.kron(cycle_derivative(m1), I2), np.kron(I1, cycle_derivative(m2))]


# ----------------------------------------------------------------------------- E_h kernels


def unitary_factors(t: CommutingTuple) -> list[AlgebraElement]:
    """A_j = exp(i K_j) computed by the power series in the algebra (no eigenbasis)."""
    return [exponential(AlgebraElement(0.0, k * 1j)) for k in t.kernels]


def _power(A: AlgebraElement, Astar: AlgebraElement, k: int) -> AlgebraElement:
    base = A if k >= 0 else Astar
    out = AlgebraElement.identity(A.kernel.base)
    for _ in range(abs(k)):
        out = out @ base
    return out


def exp0_kernel_route(t: CommutingTuple, h: Sequence[int], factors: list[AlgebraElement] | None = None) -> Kernel:
    """E_h = A_1^{h_1} * ... * A_m^{h_m} - I with negative powers taken as adjoints."""
    factors = factors or unitary_factors(t)
    acc = AlgebraElement.identity(t.space)
    for A, hj in zip(factors, h):
        if hj:
            acc = acc @ _power(A, A.star(), int(hj))
    return Kernel(t.space, acc.kernel.K + (acc.lam - 1.0) * np.diag(1.0 / t.space.mu))


def exp0_oracle_route(t: CommutingTuple, h: Sequence[int]) -> Kernel:
    h = np.asarray(h, dtype=float)
    return oracle_calculus(t, lambda *lam: np.expm1(1j * sum(hj * l for hj, l in zip(h, lam))))


def kernel_distance(K1: Kernel, K2: Kernel) -> float:
    """Operator 2-norm of the difference (measure-weighted)."""
    return float(np.linalg.norm(K1.symmetrized() - K2.symmetrized(), 2))


def exp0_kernel(t: CommutingTuple, h: Sequence[int], tol: float = ROUTE_TOL, factors=None) -> Kernel:
    """E_h by the kernel route, checked against the oracle route."""
    if len(h) != t.count:
        raise ValueError(f"h has {len(h)} entries for {t.count} operators")
    Ek = exp0_kernel_route(t, h, factors)
    Eo = exp0_oracle_route(t, h)
    gap = kernel_distance(Ek, Eo)
    if gap > tol:
        err = ArithmeticError(f"kernel and oracle routes differ by {gap:.3e}")
        err.kernels = (Ek, Eo)
        raise err
    return Ek


def unitarity_defect(E: Kernel) -> float:
    """| ||I + E||_{2->2} - 1 |."""
    M = np.eye(E.base.m) + E.symmetrized()
    return abs(float(np.linalg.norm(M, 2)) - 1.0)


# ----------------------------------------------------------------------------- Fourier-series calculus


@dataclass
class FourierResult:
    kernel: Kernel
    hmax: int
    tail: float
    deviation: float
    coefficients: np.ndarray


def fourier_coefficients(F: Callable[..., np.ndarray], dims: int, points: int) -> np.ndarray:
    """F^(h) = (2 pi)^{-m} int_{[-pi,pi)^m} F e^{-i h.lam} by the trapezoid rule (FFT).

    Returned array is indexed by h mod points along every axis.
    """
    grid = -math.pi + 2 * math.pi * np.arange(points) / points
    mesh = np.meshgrid(*([grid] * dims), indexing="ij")
    vals = np.asarray(F(*mesh), dtype=complex)
    coef = np.fft.fftn(vals) / points**dims
    # the grid starts at -pi: shift phase e^{i h pi}
    for ax in range(dims):
        h = np.fft.fftfreq(points, 1.0 / points)
        shape = [1] * dims
        shape[ax] = points
        coef = coef * np.exp(1j * math.pi * h).reshape(shape)
    return coef


def _tail_sum(coef: np.ndarray, cutoff: int) -> float:
    P = coef.shape[0]
    h = np.abs(np.fft.fftfreq(P, 1.0 / P)).astype(int)
    mesh = np.meshgrid(*([h] * coef.ndim), indexing="ij")
    hinf = np.max(np.stack(mesh), axis=0)
    return float(np.sum(np.abs(coef[hinf > cutoff])))


def fourier_calculus(t: CommutingTuple, F: Callable[..., np.ndarray], hmax: int, fine_factor: int = 16, factors=None) -> FourierResult:
    """sum_{0 < |h|_inf <= hmax} F^(h) E_h with E_h from the kernel route.

    The reported tail 2 (sum_{|h| > hmax} |F^| + sum_{|h| > 3 hmax} |F^|) bounds, in
    operator norm, both the truncation error and the aliasing of the
    4 hmax-point trapezoid coefficients; it is estimated on a grid of
    fine_factor * hmax points per axis.
    """
    m = t.count
    box = t.spectrum_box()
    if np.any(box[:, 0] <= -math.pi) or np.any(box[:, 1] >= math.pi):
        raise ValueError(f"joint spectrum {box.tolist()} is not inside (-pi, pi)^m; rescale the tuple first")
    f0 = complex(np.asarray(F(*([np.zeros(1)] * m))).ravel()[0])
    if abs(f0) > 1e-14:
        raise ValueError(f"F(0) = {f0} must vanish")
    P = 4 * hmax
    coef = fourier_coefficients(F, m, P)
    fine = fourier_coefficients(F, m, fine_factor * hmax)
    tail = 2 * (_tail_sum(fine, hmax) + _tail_sum(fine, 3 * hmax))
    factors = factors or unitary_factors(t)
    # powers A_j^k for |k| <= hmax as operator matrices (unitary, so negative powers are adjoints)
    size, mu = t.space.m, t.space.mu
    pos = []
    for A in factors:
        U = A.operator_matrix()
        pw = {0: np.eye(size, dtype=complex)}
        for k in range(1, hmax + 1):
            pw[k] = pw[k - 1] @ U
            pw[-k] = (pw[k].conj().T * mu[None, :]) / mu[:, None]  # L^2(mu) adjoint
        pos.append(pw)
    rng_h = range(-hmax, hmax + 1)

    def coefficient(hv):
        return coef[tuple(k % P for k in hv)]

    total = np.zeros((size, size), dtype=complex)
    csum = 0.0 + 0.0j
    if m == 1:
        for k in rng_h:
            if k:
                c = coefficient((k,))
                total += c * pos[0][k]
                csum += c
    else:
        # nested accumulation: sum_{h'} A'^{h'} (sum_{h_last} c A_last^{h_last})
        for head in itertools.product(rng_h, repeat=m - 1):
            inner = np.zeros((size, size), dtype=complex)
            for k in rng_h:
                hv = head + (k,)
                if any(hv):
                    c = coefficient(hv)
                    inner += c * pos[-1][k]
                    csum += c
            prod = np.eye(size, dtype=complex)
            for j, hj in enumerate(head):
                prod = prod @ pos[j][hj]
            total += prod @ inner
    total -= csum * np.eye(size)
    K = kernel_from_operator(t.space, total)
    dev = kernel_distance(K, oracle_calculus(t, F))
    return FourierResult(K, hmax, tail, dev, coef)


# ----------------------------------------------------------------------------- annuli, combinatorics, exponents


def annular_decomposition(K: Kernel, r: float) -> list[Kernel]:
    """[A'_0 (d < e r), A_1 (e r <= d < e^2 r), ...]: disjoint supports summing to K."""
    if not r >= 1:
        raise ValueError("r must be >= 1")
    D = K.base.dist
    pieces = [Kernel(K.base, np.where(D < math.e * r, K.K, 0))]
    dmax = float(D.max(initial=0.0))
    k = 1
    while math.e**k * r <= dmax:
        mask = (D >= math.e**k * r) & (D < math.e ** (k + 1) * r)
        pieces.append(Kernel(K.base, np.where(mask, K.K, 0)))
        k += 1
    return pieces


def select_heavy_indices(beta: Sequence[int], nu: int) -> list[int]:
    """Index set I (0-based) of the combinatorial selection lemma.

    beta is padded with zeros to length 2^nu - 1 and sorted in decreasing order
    (stable); the positions are cut into dyadic blocks of sizes 1, 2, ..., 2^{nu-1};
    the first block with sum <= |beta|_1 / nu is found and the nonzero entries
    before it are returned.
    """
    if nu < 1:
        raise ValueError("nu must be >= 1")
    beta = [int(b) for b in beta]
    if any(b < 0 for b in beta):
        raise ValueError("beta must be nonnegative")
    n = len(beta)
    padded = beta + [0] * max(0, 2**nu - 1 - n)
    order = sorted(range(len(padded)), key=lambda j: -padded[j])
    total = sum(beta)
    for k in range(nu):
        block = order[2**k - 1 : 2 ** (k + 1) - 1]
        if nu * sum(padded[j] for j in block) <= total:
            return sorted(j for j in order[: 2**k - 1] if padded[j] != 0 and j < n)
    raise AssertionError("no admissible block: impossible by pigeonhole")


def gamma_exponent(a: float, b: float, Q: float) -> float:
    if not a > b:
        raise ValueError("need a > b")
    if b < 0 or Q < 0:
        raise ValueError("need b >= 0 and Q >= 0")
    c = b + Q / 2
    return 2.0 ** math.floor(c / (a - b)) * (1 + c * (1 + 1 / (a - b)))


# ----------------------------------------------------------------------------- growth experiment


@dataclass
class GrowthReport:
    a: float
    b: float
    Q: float
    gamma: float
    kappa: float
    measured_kappa: dict
    h1: list
    norm1: list
    norm2: list
    radius: list
    slope1: float
    slope2: float
    route_gap: float
    unitarity: float

    @property
    def passed(self) -> bool:
        return self.slope1 <= self.gamma + 0.25 and self.slope2 <= self.gamma + 1.25

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["passed"] = self.passed
        return d


def tuple_kappa(t: CommutingTuple, a: float, b: float | None = None) -> dict:
    out = {
        "K_2_0": max(weighted_norm(k, 2, 0.0) for k in t.kernels),
        "K_1_a": max(weighted_norm(k, 1, a) for k in t.kernels),
    }
    if b is not None:
        out["K_2_b"] = max(weighted_norm(k, 2, b) for k in t.kernels)
    return out


def _slope(x, y) -> float:
    x, y = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    if x.size < 2 or np.ptp(x) == 0:
        return 0.0
    return float(np.polyfit(x, y, 1)[0])


def default_hset(count: int, seed: int = 0, levels=(1, 2, 4, 8, 16, 32)) -> list[tuple[int, ...]]:
    """One lattice vector per |h|_1 level, random signs and split across operators."""
    rng = np.random.default_rng(seed)
    out = []
    for L in levels:
        cuts = np.sort(rng.integers(0, L + 1, size=count - 1))
        parts = np.diff(np.concatenate([[0], cuts, [L]]))
        signs = rng.choice([-1, 1], size=count)
        out.append(tuple(int(s * p) for s, p in zip(signs, parts)))
    return out


def growth_experiment(t: CommutingTuple, a: float, b: float, hset, kappa: float, Q: float, check_routes: bool = True) -> GrowthReport:
    if not a > b >= 0:
        raise ValueError("need a > b >= 0")
    meas = tuple_kappa(t, a, b)
    if meas["K_2_0"] > kappa or meas["K_1_a"] > kappa:
        raise PreconditionError(
            f"kappa bound violated: |||K|||_(2,0) = {meas['K_2_0']:.4g}, |||K|||_(1,a) = {meas['K_1_a']:.4g} > kappa = {kappa:.4g}",
            meas,
        )
    gamma = gamma_exponent(a, b, Q)
    factors = unitary_factors(t)
    h1s, n1, n2, rad = [], [], [], []
    gap = unit = 0.0
    for h in hset:
        L1 = int(sum(abs(v) for v in h))
        if L1 == 0:
            continue
        E = exp0_kernel_route(t, h, factors)
        if check_routes:
            gap = max(gap, kernel_distance(E, exp0_oracle_route(t, h)))
            unit = max(unit, unitarity_defect(E))
        h1s.append(L1)
        n1.append(weighted_norm(E, 1, b))
        n2.append(weighted_norm(E, 2, b))
        rad.append(max(1.0, (L1 * math.exp(kappa)) ** (1 / (a - b))))
    return GrowthReport(a, b, Q, gamma, kappa, meas, h1s, n1, n2, rad, _slope(h1s, n1), _slope(h1s, n2), gap, unit)


# ----------------------------------------------------------------------------- hypotheses harness


@dataclass(frozen=True)
class DilationSystem:
    gammas: tuple[float, ...]

    def __post_init__(self):
        if any(not g > 0 for g in self.gammas):
            raise ValueError("dilation exponents must be positive")

    def apply(self, lam, r: float) -> np.ndarray:
        """eps_r(lam) along axis 0; eps_0 = 0."""
        lam = np.asarray(lam, dtype=float)
        if r == 0:
            return np.zeros_like(lam)
        g = np.asarray(self.gammas).reshape((-1,) + (1,) * (lam.ndim - 1))
        return lam * r**g


@dataclass
class PsiSpec:
    tag: str
    n: int
    psi: Callable[[np.ndarray], np.ndarray]  # (n, ...) -> (m, ...)
    phi: Callable[[np.ndarray], np.ndarray]  # (m, ...) -> (n, ...)
    omega: Callable[[np.ndarray], np.ndarray]  # (m, ...) -> bool mask
    factor: Callable | None = None

    def at_zero(self) -> np.ndarray:
        return self.psi(np.zeros((self.n, 1)))[:, 0]


LOG_CAP = 20.0


def _inside(w, lo=math.exp(-LOG_CAP), hi=math.exp(LOG_CAP)):
    w = np.asarray(w)
    return (w > lo) & (w < hi)


def psi_catalog(tag: str, dims: int = 2) -> PsiSpec:
    """heat, heat-derivative, product and fourier (dims variables) maps with closed-form inverses.

    Omega keeps every exponential factor above e^{-20}, i.e. |lam| of order 20 at most.
    """
    if tag == "heat":
        return PsiSpec(tag, 1, lambda l: np.exp(-l), lambda w: -np.log(w), lambda w: _inside(w[0]))
    if tag == "heat-derivative":
        return PsiSpec(
            tag,
            2,
            lambda l: np.stack([np.exp(-l[0]), l[1] * np.exp(-l[0])]),
            lambda w: np.stack([-np.log(w[0]), w[1] / w[0]]),
            lambda w: _inside(w[0]),
        )
    if tag == "product":
        return PsiSpec(
            tag,
            2,
            lambda l: np.stack([np.exp(-2 * l[0] - l[1]), np.exp(-l[0] - 2 * l[1])]),
            lambda w: np.stack([(-2 * np.log(w[0]) + np.log(w[1])) / 3, (-2 * np.log(w[1]) + np.log(w[0])) / 3]),
            lambda w: _inside(w[0]) & _inside(w[1]),
        )
    if tag == "fourier":

        def psi(l):
            g = np.exp(-np.sum(l * l, axis=0))
            return np.concatenate([g[None], l * g[None]], axis=0)

        return PsiSpec(tag, dims, psi, lambda w: w[1:] / w[0:1], lambda w: _inside(w[0]))
    raise ValueError(f"unknown catalog entry {tag!r}")


@dataclass
class HypothesesReport:
    tag: str
    residual_A: float
    points_A: int
    radii: list
    a_list: list
    table: list  # [component][a][r]
    finite: bool
    trend: float
    spread: float

    @property
    def non_trending(self) -> bool:
        return self.finite and self.trend <= 1.0 and self.spread <= 10.0

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["non_trending"] = self.non_trending
        return d


def verify_hypotheses(t: CommutingTuple, psi: PsiSpec, dil: DilationSystem, rgrid, a_list=(0, 1, 2)) -> HypothesesReport:
    """(A): max |Phi(Psi(lam)) - lam| over rescaled joint eigenvalues with Psi(lam) in Omega.
    (B): |||K_{Psi_j o eps_r(M)}|||_{2,a,r} over rgrid x a_list, via the oracle.

    trend = max over (j, a) of |log10(value at last r / value at first r)|;
    spread = max over (j, a) of max/min along rgrid.
    """
    z = psi.at_zero()
    if np.all(z == 0):
        raise ValueError("Psi(0) = 0 violates the invertibility hypothesis")
    if t.count != psi.n or len(dil.gammas) != psi.n:
        raise ValueError("tuple size, Psi arity and dilation system disagree")
    lam = t.eigenvalues
    worst = 0.0
    pts = 0
    for r in rgrid:
        L = dil.apply(lam, r)
        W = psi.psi(L)
        mask = psi.omega(W)
        if np.any(mask):
            back = psi.phi(W[:, mask])
            worst = max(worst, float(np.max(np.abs(back - L[:, mask]))))
            pts += int(mask.sum())
    comps = psi.psi(np.zeros((psi.n, 1))).shape[0]
    table = [[[0.0] * len(rgrid) for _ in a_list] for _ in range(comps)]
    for ir, r in enumerate(rgrid):
        for j in range(comps):
            K = oracle_calculus(t, lambda *l, j=j, r=r: psi.psi(dil.apply(np.stack(l), r))[j])
            for ia, a in enumerate(a_list):
                table[j][ia][ir] = weighted_norm(K, 2, a, r)
    arr = np.asarray(table)
    finite = bool(np.all(np.isfinite(arr)))
    with np.errstate(divide="ignore", invalid="ignore"):
        trend = float(np.max(np.abs(np.log10(arr[..., -1] / arr[..., 0]))))
        spread = float(np.max(arr.max(axis=-1) / arr.min(axis=-1)))
    return HypothesesReport(psi.tag, worst, pts, [float(r) for r in rgrid], list(a_list), table, finite, trend, spread)
