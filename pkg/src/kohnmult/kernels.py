"""Kernels on finite metric-measure spaces, weighted mixed norms and the algebra B_a.

A kernel K acts by Tf(x) = sum_y K(x, y) f(y) mu(y).  The weighted norm is

    |||K|||_{p,s,r} = max_y V(y, r)^{1/p'} ( sum_x |K(x,y)|^p (1 + d(x,y)/r)^{ps} mu(x) )^{1/p}

and B_a is the unitization C I + B_a^0 with ||lam I + H|| = |lam| + max(|||H|||_{1,a}, |||H^*|||_{1,a}).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from kohnmult.metric_measure import FiniteMetricMeasureSpace, StructureConstants, structure_constants

INF = math.inf


@dataclass
class Kernel:
    base: FiniteMetricMeasureSpace
    K: np.ndarray

    def __post_init__(self):
        self.K = np.asarray(self.K, dtype=complex)
        if self.K.shape != (self.base.m, self.base.m):
            raise ValueError(f"kernel shape {self.K.shape} does not match a space of {self.base.m} points")
        if not np.all(np.isfinite(self.K)):
            raise ValueError("kernel entries must be finite")

    def __add__(self, other: "Kernel") -> "Kernel":
        _same_base(self, other)
        return Kernel(self.base, self.K + other.K)

    def __sub__(self, other: "Kernel") -> "Kernel":
        _same_base(self, other)
        return Kernel(self.base, self.K - other.K)

    def __mul__(self, c) -> "Kernel":
        return Kernel(self.base, c * self.K)

    __rmul__ = __mul__

    def apply(self, f: np.ndarray) -> np.ndarray:
        return self.K @ (self.base.mu * f)

    def operator_matrix(self) -> np.ndarray:
        """Matrix of T in the standard basis: K diag(mu)."""
        return self.K * self.base.mu[None, :]

    def symmetrized(self) -> np.ndarray:
        """diag(mu)^{1/2} K diag(mu)^{1/2}: Hermitian iff T is self-adjoint on L^2(mu)."""
        s = np.sqrt(self.base.mu)
        return s[:, None] * self.K * s[None, :]


def _same_base(a: Kernel, b: Kernel) -> None:
    if a.base is not b.base and (a.base.m != b.base.m or not np.array_equal(a.base.mu, b.base.mu)):
        raise ValueError("kernels live on different spaces")


def zero_kernel(space: FiniteMetricMeasureSpace) -> Kernel:
    return Kernel(space, np.zeros((space.m, space.m)))


def identity_kernel(space: FiniteMetricMeasureSpace) -> Kernel:
    """The kernel of the identity operator, K(x, x) = 1 / mu(x)."""
    return Kernel(space, np.diag(1.0 / space.mu))


def kernel_from_operator(space: FiniteMetricMeasureSpace, A: np.ndarray) -> Kernel:
    """Kernel of the operator with standard matrix A (inverse of operator_matrix)."""
    return Kernel(space, np.asarray(A) / space.mu[None, :])


def kernel_from_symmetrized(space: FiniteMetricMeasureSpace, M: np.ndarray) -> Kernel:
    s = np.sqrt(space.mu)
    return Kernel(space, np.asarray(M) / s[:, None] / s[None, :])


# ----------------------------------------------------------------------------- norms


def _conj_exp(p: float) -> float:
    """1/p' = 1 - 1/p."""
    return 1.0 if p == INF else 1.0 - 1.0 / p


def weighted_norm(K: Kernel, p: float, s: float = 0.0, r: float = 1.0) -> float:
    if not (p == INF or p >= 1):
        raise ValueError("p must lie in [1, inf]")
    if s < 0 or not r > 0:
        raise ValueError("need s >= 0 and r > 0")
    sp = K.base
    A = np.abs(K.K)
    if s:
        A = A * (1.0 + sp.dist / r) ** s
    V = sp.volumes(r)
    if p == INF:
        cols = A.max(axis=0)
    elif p == 1:
        cols = sp.mu @ A
    else:
        scale = A.max(axis=0)
        scale[scale == 0] = 1.0
        cols = scale * (sp.mu @ (A / scale) ** p) ** (1.0 / p)
    return float(np.max(V ** _conj_exp(p) * cols))


def operator_norm(K: Kernel, p: float) -> float:
    """||T_K||_{p->p} for p in {1, 2, inf} (exact)."""
    mu = K.base.mu
    A = np.abs(K.K)
    if p == 1:
        return float(np.max(mu @ A))
    if p == INF:
        return float(np.max(A @ mu))
    if p == 2:
        return float(np.linalg.norm(K.symmetrized(), 2))
    raise ValueError("exact operator norms only for p in {1, 2, inf}")


def operator_norm_bound(K: Kernel, p: float) -> float:
    """Exact for p in {1, 2, inf}; otherwise the Riesz-Thorin bound ||T||_1^{1/p} ||T||_inf^{1-1/p}."""
    if p in (1, 2, INF):
        return operator_norm(K, p)
    return operator_norm(K, 1) ** (1 / p) * operator_norm(K, INF) ** (1 - 1 / p)


def convolve(K1: Kernel, K2: Kernel) -> Kernel:
    _same_base(K1, K2)
    return Kernel(K1.base, (K1.K * K1.base.mu[None, :]) @ K2.K)


def adjoint(K: Kernel) -> Kernel:
    return Kernel(K.base, K.K.conj().T)


def ba_kernel_norm(K: Kernel, a: float) -> float:
    return max(weighted_norm(K, 1, a), weighted_norm(adjoint(K), 1, a))


# ----------------------------------------------------------------------------- unitized algebra


@dataclass
class AlgebraElement:
    lam: complex
    kernel: Kernel

    @classmethod
    def identity(cls, space: FiniteMetricMeasureSpace) -> "AlgebraElement":
        return cls(1.0, zero_kernel(space))

    @classmethod
    def of(cls, K: Kernel) -> "AlgebraElement":
        return cls(0.0, K)

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        return AlgebraElement(self.lam + other.lam, self.kernel + other.kernel)

    def __mul__(self, c) -> "AlgebraElement":
        return AlgebraElement(c * self.lam, c * self.kernel)

    __rmul__ = __mul__

    def __matmul__(self, other: "AlgebraElement") -> "AlgebraElement":
        """(l1 I + H1)(l2 I + H2) = l1 l2 I + l1 H2 + l2 H1 + H1 * H2."""
        K = convolve(self.kernel, other.kernel).K + self.lam * other.kernel.K + other.lam * self.kernel.K
        return AlgebraElement(self.lam * other.lam, Kernel(self.kernel.base, K))

    def star(self) -> "AlgebraElement":
        return AlgebraElement(np.conj(self.lam), adjoint(self.kernel))

    def norm(self, a: float) -> float:
        return ba_norm(self, a)

    def to_kernel(self) -> Kernel:
        """Full kernel lam/mu(x) on the diagonal plus H (finite spaces only)."""
        return Kernel(self.kernel.base, self.kernel.K + self.lam * np.diag(1.0 / self.kernel.base.mu))

    def operator_matrix(self) -> np.ndarray:
        return self.lam * np.eye(self.kernel.base.m) + self.kernel.operator_matrix()


def ba_norm(e: AlgebraElement, a: float) -> float:
    return abs(e.lam) + ba_kernel_norm(e.kernel, a)


MAX_SERIES_TERMS = 10_000


def _series(e: AlgebraElement, a: float, skip_identity: bool, rel_tol: float = 1e-16) -> tuple[AlgebraElement, int]:
    """sum_k e^k / k! with the tail bound ||e||^k / k! / (1 - ||e|| / (k+1)) < rel_tol ||partial sum||."""
    nrm = ba_norm(e, a)
    space = e.kernel.base
    term = AlgebraElement.identity(space)
    total = AlgebraElement(0.0 if skip_identity else 1.0, zero_kernel(space))
    log_bound = math.log(nrm) if nrm > 0 else -math.inf  # log(||e||^{k+1} / (k+1)!)
    for k in range(1, MAX_SERIES_TERMS + 1):
        term = (term @ e) * (1.0 / k)
        total = total + term
        log_bound += math.log(nrm) - math.log(k + 1) if nrm > 0 else 0.0
        if nrm == 0:
            return total, k
        # tail after the k-th term: sum_{j > k} ||e||^j / j!
        if nrm < k + 2:
            tail = math.exp(log_bound) / (1 - nrm / (k + 2))
            if tail <= rel_tol * max(ba_norm(total, a), 1e-300):
                return total, k
    raise ArithmeticError(f"power series did not converge within {MAX_SERIES_TERMS} terms (norm {nrm:.3g})")


def exponential(e: AlgebraElement, a: float = 0.0) -> AlgebraElement:
    """e^{lam I + H} = e^lam (I + exp0(H)), the kernel part by power series in B_a."""
    inner, _ = _series(AlgebraElement.of(e.kernel), a, skip_identity=True)
    s = np.exp(e.lam)
    return AlgebraElement(s, inner.kernel * s)


def exp0(K: Kernel, a: float = 0.0) -> Kernel:
    """e^K - I as a kernel in B_a^0."""
    out, _ = _series(AlgebraElement.of(K), a, skip_identity=True)
    return out.kernel


# ----------------------------------------------------------------------------- random kernels


def random_kernel(space: FiniteMetricMeasureSpace, rng: np.random.Generator, kind: str | None = None) -> Kernel:
    """Random test kernels of assorted shapes: dense, distance-decaying, sparse, rank one, diagonal."""
    kinds = ("dense", "decay", "sparse", "rank1", "diag")
    kind = kind or kinds[rng.integers(len(kinds))]
    m = space.m
    g = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    if kind == "dense":
        K = g
    elif kind == "decay":
        K = g * (1 + space.dist) ** (-rng.uniform(0, 6))
    elif kind == "sparse":
        K = g * (rng.random((m, m)) < rng.uniform(0.005, 0.1))
    elif kind == "rank1":
        K = np.outer(g[:, 0], g[:, 1].conj())
    elif kind == "diag":
        K = np.diag(g[:, 0]) + 0.01 * g * (space.dist <= 1)
    else:
        raise ValueError(f"unknown kernel kind {kind!r}")
    return Kernel(space, K * 10.0 ** rng.uniform(-2, 1))


def random_exponent(rng: np.random.Generator) -> float:
    u = rng.random()
    if u < 0.15:
        return 1.0
    if u < 0.3:
        return INF
    if u < 0.45:
        return 2.0
    return float(1.0 + rng.exponential(1.5))


# ----------------------------------------------------------------------------- inequality suites


@dataclass
class SuiteReport:
    suite: str
    trials: int
    max_ratio: float
    tolerance: float
    passed: bool
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "suite": self.suite,
            "trials": self.trials,
            "max_ratio": self.max_ratio,
            "tolerance": self.tolerance,
            "passed": self.passed,
            **self.details,
        }


def _young_exponents(p: float, q: float) -> tuple[float, float, float]:
    """(r, p/r, p/q') for 1/p + 1/q = 1 + 1/r; p = inf forces q = 1, r = inf, exponents (0, 1)."""
    if p == INF:
        if q != 1:
            raise ValueError("p = inf requires q = 1")
        return INF, 0.0, 1.0
    inv_r = 1 / p + (0.0 if q == INF else 1 / q) - 1
    if inv_r < -1e-15:
        raise ValueError(f"1/p + 1/q must be >= 1 (p={p}, q={q})")
    inv_r = max(inv_r, 0.0)
    r = INF if inv_r == 0 else 1 / inv_r
    e1 = p * inv_r
    return r, e1, 1.0 - e1


def young_sides(H: Kernel, K: Kernel, p: float, q: float, a: float, consts: StructureConstants, c_tri: float = 1.0) -> tuple[float, float]:
    """(LHS, RHS) of the weighted Young inequality with constant (C'')^{1/p'}.

    For a quasi-metric with triangle constant c the weight submultiplicativity
    used in the proof costs an extra factor c^{a + N/p'} (equal to 1 for metrics).
    """
    r, e1, e2 = _young_exponents(p, q)
    pc = _conj_exp(p)
    lhs = weighted_norm(convolve(H, K), r, a)
    aN = a + consts.N * pc
    factors = [weighted_norm(H, p, a) ** e1 if e1 else 1.0, weighted_norm(adjoint(H), p, aN) ** e2 if e2 else 1.0]
    rhs = consts.Cpp**pc * c_tri**aN * factors[0] * factors[1] * weighted_norm(K, q, aN)
    return lhs, rhs


def _ratio(lhs: float, rhs: float) -> float:
    if rhs == 0:
        return 0.0 if lhs == 0 else INF
    return lhs / rhs


def _random_young_config(rng: np.random.Generator) -> tuple[float, float, float]:
    p = random_exponent(rng)
    if p == INF:
        q = 1.0
    else:
        # need 1/q in [1 - 1/p, 1]
        lo = 1 - 1 / p
        inv_q = lo + (1 - lo) * rng.random() if rng.random() > 0.2 else (lo if rng.random() < 0.5 else 1.0)
        q = INF if inv_q == 0 else 1 / inv_q
    return p, q, float(rng.uniform(0, 3))


def check_young(space: FiniteMetricMeasureSpace, trials: int, seed: int = 0, consts: StructureConstants | None = None, tol: float = 1e-9) -> SuiteReport:
    consts = consts or structure_constants(space)
    rng = np.random.default_rng(seed)
    worst = 0.0
    worst_cfg = None
    for _ in range(trials):
        p, q, a = _random_young_config(rng)
        H, K = random_kernel(space, rng), random_kernel(space, rng)
        ratio = _ratio(*young_sides(H, K, p, q, a, consts, space.c_tri))
        if ratio > worst:
            worst, worst_cfg = ratio, (p, q, a)
    return SuiteReport("young", trials, worst, 1 + tol, worst <= 1 + tol, {"worst_config": worst_cfg, "constants": consts.as_dict(), "c_tri": space.c_tri})


def check_composition(space: FiniteMetricMeasureSpace, trials: int, seed: int = 0, tol: float = 1e-9) -> SuiteReport:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        p = random_exponent(rng)
        H, K = random_kernel(space, rng), random_kernel(space, rng)
        lhs = weighted_norm(convolve(H, K), p, 0.0)
        rhs = operator_norm_bound(H, p) * weighted_norm(K, p, 0.0)
        worst = max(worst, _ratio(lhs, rhs))
    return SuiteReport("composition", trials, worst, 1 + tol, worst <= 1 + tol)


def hoelder_constant(space: FiniteMetricMeasureSpace, p: float, q: float, a: float, b: float, r: float = 1.0) -> float:
    """Explicit C with |||K|||_{p,a} <= C |||K|||_{q,b} from Hoelder's inequality in x.

    With 1/s = 1/p - 1/q: C = max_y V(y,r)^{-1/s} ( sum_x (1 + d/r)^{-(b-a)s} mu(x) )^{1/s}.
    """
    if not p < q:
        raise ValueError("need p < q")
    inv_s = 1 / p - (0.0 if q == INF else 1 / q)
    s = 1 / inv_s
    integ = ((1 + space.dist / r) ** (-(b - a) * s)) @ space.mu
    return float(np.max((integ / space.volumes(r)) ** inv_s))


HOELDER_CONFIGS = ((1.0, 2.0), (1.0, INF), (2.0, INF), (1.5, 4.0))


def check_hoelder(space: FiniteMetricMeasureSpace, trials: int, seed: int = 0, consts: StructureConstants | None = None, configs=None) -> SuiteReport:
    """Fitted Hoelder constants over `trials` and `2 * trials` random kernels per (p, q, a, b).

    b is set to a + Q(1/p - 1/q) + 1 (inside the admissible range).  Passes when
    each fitted constant stays below the explicit Hoelder constant and doubling
    the trial count changes it by at most a factor 2.
    """
    consts = consts or structure_constants(space)
    rng = np.random.default_rng(seed)
    rows = []
    ok = True
    for p, q in configs or HOELDER_CONFIGS:
        a = float(rng.uniform(0, 2))
        b = a + consts.Q * (1 / p - (0 if q == INF else 1 / q)) + 1.0
        C_exp = hoelder_constant(space, p, q, a, b)
        ratios = []
        for _ in range(2 * trials):
            K = random_kernel(space, rng)
            ratios.append(_ratio(weighted_norm(K, p, a), weighted_norm(K, q, b)))
        C_T = max(ratios[:trials])
        C_2T = max(ratios)
        stable = C_2T / C_T if C_T > 0 else INF
        good = C_2T <= C_exp * (1 + 1e-9) and stable <= 2.0
        ok &= good
        rows.append({"p": p, "q": q, "a": a, "b": b, "C_fit_T": C_T, "C_fit_2T": C_2T, "C_explicit": C_exp, "stability": stable, "ok": good})
    worst = max(r["C_fit_2T"] / r["C_explicit"] for r in rows)
    return SuiteReport("hoelder", 2 * trials * len(rows), worst, 1.0, ok, {"configs": rows})


def check_algebra(space: FiniteMetricMeasureSpace, trials: int, seed: int = 0, tol: float = 1e-9, exp_every: int = 1) -> SuiteReport:
    """Submultiplicativity, involution isometry, exponential bound and operator-norm domination."""
    rng = np.random.default_rng(seed)
    worst = {"submult": 0.0, "involution": 0.0, "exp": 0.0, "op1": 0.0, "op2": 0.0, "opinf": 0.0}
    for t in range(trials):
        a = float(rng.uniform(0, 3))
        K1, K2 = random_kernel(space, rng), random_kernel(space, rng)
        lhs = weighted_norm(convolve(K1, K2), 1, a)
        worst["submult"] = max(worst["submult"], _ratio(lhs, weighted_norm(K1, 1, a) * weighted_norm(K2, 1, a)))
        e = AlgebraElement(complex(rng.standard_normal(), rng.standard_normal()), K1)
        n1, n2 = ba_norm(e, a), ba_norm(e.star(), a)
        worst["involution"] = max(worst["involution"], abs(n1 - n2) / max(n1, 1e-300) + 1.0)
        nK = ba_kernel_norm(K2, a)
        for key, p in (("op1", 1), ("op2", 2), ("opinf", INF)):
            worst[key] = max(worst[key], _ratio(operator_norm(K2, p), nK))
        if t % exp_every == 0:
            # keep the exponent moderate so the series stays short
            Ks = K2 * (min(1.0, 3.0 / nK) if nK > 0 else 1.0)
            eK = exponential(AlgebraElement.of(Ks), a)
            worst["exp"] = max(worst["exp"], _ratio(ba_norm(eK, a), math.exp(ba_kernel_norm(Ks, a))))
    top = max(worst.values())
    return SuiteReport("algebra", trials, top, 1 + tol, top <= 1 + tol, {"by_law": worst})
