"""Heisenberg-type local model: group law, dilations and the model Kohn Laplacian.

Coordinates are u = (u_0, u_1, ..., u_{2n-2}); u_0 is the central (degree 2)
variable.  With Levi eigenvalues lam_1..lam_{n-1} the group law is

    (u.u')_0 = u_0 + u_0' + 2 sum_k lam_k (u_k' u_{n-1+k} - u_k u_{n-1+k}'),
    (u.u')_j = u_j + u_j'  (j >= 1),

and the left-invariant horizontal fields are
U_k = d_k + 2 lam_k u_{n-1+k} d_0,  U_{n-1+k} = d_{n-1+k} - 2 lam_k u_k d_0,  U_0 = d_0.
They satisfy [U_k, U_{n-1+k}] = -4 lam_k U_0.

The model operator on (0, J)-forms is
    Box_J = -(1/4) sum_k U_k^2 - i c_J U_0,   c_J = sum_{k in J} lam_k - sum_{k not in J} lam_k.

Two periodic finite-difference assemblies are offered (centered first
differences D_k throughout):

* scheme="direct": the formula above with U_k^2 taken as the square of the
  discrete U_k.  Exactly Hermitian, but its spectrum contains spurious negative
  eigenvalues of size ~ lam/h coming from the grid-scale (odd-even) modes that
  the wide centered stencil cannot see in U_k^2 while D_0 does.
* scheme="factored" (default): using the commutator identity, each pair
  (U_k, U_{n-1+k}) is grouped as Z_k^* Z_k / 4 (k not in J) or Z_k Z_k^* / 4
  (k in J) with Z_k = U_k + i U_{n-1+k}.  In the continuum this is the same
  operator; discretely it differs by O(h^2) and is nonnegative by construction.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

# ----------------------------------------------------------------------------- parameters and group


@dataclass(frozen=True)
class HeisenbergParams:
    n: int
    levi: tuple[float, ...]
    J: frozenset = frozenset()

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError("n must be an integer >= 2")
        object.__setattr__(self, "levi", tuple(float(v) for v in self.levi))
        object.__setattr__(self, "J", frozenset(int(j) for j in self.J))
        if len(self.levi) != self.n - 1:
            raise ValueError(f"need n-1 = {self.n - 1} Levi eigenvalues, got {len(self.levi)}")
        if not self.J <= set(range(1, self.n)):
            raise ValueError(f"J must be a subset of {{1..{self.n - 1}}}")

    @property
    def dim(self) -> int:
        return 2 * self.n - 1

    @property
    def Q(self) -> int:
        return 2 * self.n

    @property
    def c_J(self) -> float:
        return sum(l for k, l in enumerate(self.levi, 1) if k in self.J) - sum(
            l for k, l in enumerate(self.levi, 1) if k not in self.J
        )

    @property
    def levi_flat(self) -> bool:
        return all(l == 0 for l in self.levi)


def group_multiply(u, v, params: HeisenbergParams) -> np.ndarray:
    """Group product u.v; broadcasts over leading axes (last axis = coordinates)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    m = params.n - 1
    lam = np.asarray(params.levi)
    out = u + v
    out[..., 0] = u[..., 0] + v[..., 0] + 2 * np.sum(
        lam * (v[..., 1 : m + 1] * u[..., m + 1 :] - u[..., 1 : m + 1] * v[..., m + 1 :]), axis=-1
    )
    return out


def group_inverse(u) -> np.ndarray:
    return -np.asarray(u, dtype=float)


def dilate_exponents(n: int) -> tuple[int, ...]:
    return (2,) + (1,) * (2 * n - 2)


def dilate(u, R) -> np.ndarray:
    """delta_R u; R may be an array broadcasting against u (e.g. shape (N, 1))."""
    R = np.asarray(R, dtype=float)
    if not np.all(R > 0):
        raise ValueError("dilation factor must be positive")
    u = np.asarray(u, dtype=float)
    out = R * u
    out[..., 0] = (R * R * u)[..., 0]
    return out


def gauge(u) -> np.ndarray:
    """Homogeneous quasi-norm (u_0^2 + |u'|^4)^{1/4}."""
    u = np.asarray(u, dtype=float)
    h2 = np.sum(u[..., 1:] ** 2, axis=-1)
    return (u[..., 0] ** 2 + h2 * h2) ** 0.25


def gauge_distance(u, v, params: HeisenbergParams) -> np.ndarray:
    """d(u, v) = ||u^{-1} . v||."""
    return gauge(group_multiply(group_inverse(u), v, params))


# ----------------------------------------------------------------------------- grids and assembly


@dataclass(frozen=True)
class Grid:
    """Periodic box [-S, S)^{2n-1} with `points` nodes per axis."""

    S: float
    points: int
    dim: int

    def __post_init__(self):
        if self.points < 8:
            raise ValueError("need at least 8 points per axis for the centered stencil")
        if not self.S > 0:
            raise ValueError("box half-width must be positive")

    @property
    def h(self) -> float:
        return 2 * self.S / self.points

    @property
    def axis(self) -> np.ndarray:
        return -self.S + self.h * np.arange(self.points)

    @property
    def size(self) -> int:
        return self.points**self.dim

    def coords(self) -> np.ndarray:
        """(size, dim) array of node coordinates in C order (axis 0 slowest)."""
        mesh = np.meshgrid(*([self.axis] * self.dim), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def index(self, multi: np.ndarray) -> np.ndarray:
        return np.ravel_multi_index(tuple(np.asarray(multi).T % self.points), (self.points,) * self.dim)


@dataclass
class GridOperator:
    matrix: sp.csr_matrix
    grid: Grid
    params: HeisenbergParams
    scheme: str
    boundary: str = "periodic"
    meta: dict = field(default_factory=dict)

    def asymmetry(self) -> float:
        A = self.matrix
        d = (A - A.conj().T).tocoo()
        return float(np.max(np.abs(d.data))) if d.nnz else 0.0

    def apply(self, f: np.ndarray) -> np.ndarray:
        return self.matrix @ f

    def smallest_eigenvalues(self, k: int = 4) -> np.ndarray:
        A = self.matrix
        if A.shape[0] <= 4096:
            w = np.linalg.eigvalsh(A.toarray())
            return w[:k]
        # plain Lanczos: shift-invert needs a sparse LU whose fill-in explodes in 5 dimensions
        w = spla.eigsh(A, k=k, which="SA", tol=1e-8, return_eigenvectors=False)
        return np.sort(w.real)


def _diff1d(points: int, h: float) -> sp.csr_matrix:
    """Periodic centered first difference (antisymmetric)."""
    e = np.ones(points)
    D = sp.diags([e[:-1], -e[:-1]], [1, -1], shape=(points, points), format="lil")
    D[points - 1, 0] = 1.0
    D[0, points - 1] = -1.0
    return (D.tocsr() / (2 * h)).astype(float)


def axis_derivative(grid: Grid, axis: int) -> sp.csr_matrix:
    mats = [sp.identity(grid.points, format="csr")] * grid.dim
    mats[axis] = _diff1d(grid.points, grid.h)
    out = mats[0]
    for M in mats[1:]:
        out = sp.kron(out, M, format="csr")
    return out


def vector_fields(params: HeisenbergParams, grid: Grid) -> list[sp.csr_matrix]:
    """Discrete U_0, U_1, ..., U_{2n-2}.

    The coefficient u_j multiplies D_0 from the left; since D_0 does not act on
    u_j (j >= 1), diag(u_j) D_0 is antisymmetric and every U is antisymmetric.
    """
    if grid.dim != params.dim:
        raise ValueError("grid dimension does not match the group")
    m = params.n - 1
    X = grid.coords()
    D = [axis_derivative(grid, a) for a in range(grid.dim)]
    U = [D[0]]
    for k in range(1, m + 1):
        U.append((D[k] + 2 * params.levi[k - 1] * sp.diags(X[:, m + k]) @ D[0]).tocsr())
    for k in range(1, m + 1):
        U.append((D[m + k] - 2 * params.levi[k - 1] * sp.diags(X[:, k]) @ D[0]).tocsr())
    return U


def assemble_model_operator(params: HeisenbergParams, grid: Grid, scheme: str = "factored") -> GridOperator:
    U = vector_fields(params, grid)
    m = params.n - 1
    if scheme == "direct":
        A = sum((Uk @ Uk for Uk in U[1:]), sp.csr_matrix((grid.size, grid.size)))
        M = -0.25 * A - 1j * params.c_J * U[0]
    elif scheme == "factored":
        M = sp.csr_matrix((grid.size, grid.size), dtype=complex)
        for k in range(1, m + 1):
            Z = (U[k] + 1j * U[m + k]).tocsr()
            Zs = Z.conj().T.tocsr()
            M = M + (0.25 * (Z @ Zs) if k in params.J else 0.25 * (Zs @ Z))
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    M = sp.csr_matrix(M, dtype=complex)
    M.sum_duplicates()
    M.eliminate_zeros()
    return GridOperator(M, grid, params, scheme)


def form_operator(params_base: HeisenbergParams, grid: Grid, j: int, scheme: str = "factored") -> dict:
    """The diagonal system (Box_J)_{|J| = j}, keyed by the sorted tuple J."""
    n = params_base.n
    if not 0 <= j <= n - 1:
        raise ValueError(f"form degree j must lie in [0, {n - 1}]")
    out = {}
    for J in itertools.combinations(range(1, n), j):
        p = HeisenbergParams(n, params_base.levi, frozenset(J))
        out[J] = assemble_model_operator(p, grid, scheme)
    return out


def model_laplacian_pair(params: HeisenbergParams, grid: Grid) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """(L_model, i U_0) with L_model = -sum_k U_k^2 (both Hermitian)."""
    U = vector_fields(params, grid)
    L = -sum((Uk @ Uk for Uk in U[1:]), sp.csr_matrix((grid.size, grid.size)))
    return sp.csr_matrix(L), sp.csr_matrix(1j * U[0])


# ----------------------------------------------------------------------------- pointwise stencils

Func = Callable[[np.ndarray], np.ndarray]


def _shift(f: Func, axis: int, step: float) -> Func:
    def g(x):
        y = np.array(x, dtype=float, copy=True)
        y[..., axis] += step
        return f(y)

    return g


def pointwise_vector_fields(params: HeisenbergParams, h: float, h0: float | None = None) -> list[Callable[[Func], Func]]:
    """Stencil versions of U_0..U_{2n-2} acting on callables (no grid, no wrap).

    h is the horizontal spacing and h0 the spacing in u_0 (defaults to h).
    """
    h0 = h if h0 is None else h0
    m = params.n - 1

    def D(axis, step):
        def op(f):
            fp, fm = _shift(f, axis, step), _shift(f, axis, -step)
            return lambda x: (fp(x) - fm(x)) / (2 * step)

        return op

    D0 = D(0, h0)
    ops = [D0]

    def make(k, coef_axis, sign):
        Dk = D(k, h)
        lam = params.levi[(k - 1) % m]

        def op(f):
            a, b = Dk(f), D0(f)
            return lambda x: a(x) + sign * 2 * lam * np.asarray(x)[..., coef_axis] * b(x)

        return op

    for k in range(1, m + 1):
        ops.append(make(k, m + k, +1))
    for k in range(1, m + 1):
        ops.append(make(m + k, k, -1))
    return ops


def pointwise_model_operator(params: HeisenbergParams, h: float, h0: float | None = None, scheme: str = "factored") -> Callable[[Func], Func]:
    U = pointwise_vector_fields(params, h, h0)
    m = params.n - 1

    def box(f: Func) -> Func:
        def out(x):
            x = np.asarray(x, dtype=float)
            if scheme == "direct":
                acc = sum(U[k](U[k](f))(x) for k in range(1, 2 * m + 1))
                return -0.25 * acc - 1j * params.c_J * U[0](f)(x)
            acc = 0
            for k in range(1, m + 1):
                A, B = U[k], U[m + k]
                # Z^* Z = -A^2 - B^2 - i(AB - BA); Z Z^* = -A^2 - B^2 + i(AB - BA)
                comm = A(B(f))(x) - B(A(f))(x)
                sign = 1.0 if k in params.J else -1.0
                acc = acc - A(A(f))(x) - B(B(f))(x) + sign * 1j * comm
            return 0.25 * acc

        return out

    return box


# ----------------------------------------------------------------------------- rescaling check


def gaussian_bump(params: HeisenbergParams, width: float = 0.35, center=None) -> Func:
    """Smooth, rapidly decaying test function (complex phase so all terms are exercised)."""
    c = np.zeros(params.dim) if center is None else np.asarray(center, dtype=float)

    def f(x):
        x = np.asarray(x, dtype=float) - c
        r2 = x[..., 0] ** 2 / (width**4) + np.sum(x[..., 1:] ** 2, axis=-1) / width**2
        return np.exp(-r2) * (1 + 0.3j * x[..., 1])

    return f


@dataclass
class RescaleReport:
    R: float
    hs: list
    residuals: list
    ratios: list

    @property
    def richardson(self) -> float:
        return self.ratios[-1] if self.ratios else math.nan


def rescale_residual(params: HeisenbergParams, f: Func, R: float, h: float, points: np.ndarray, scheme: str = "factored") -> float:
    """sup over `points` of |R^2 (Box_h g)(delta_R x) - (Box_{h/R} f)(x)|, g = f o delta_R^{-1}.

    Box_h uses spacing h in every direction.  By homogeneity the first term
    equals Box_{(h/R^2, h/R)} f, so the residual is the O(h^2) gap between two
    consistent discretizations and vanishes identically at R = 1.
    """
    g = lambda y: f(dilate(y, 1.0 / R))
    lhs = R * R * pointwise_model_operator(params, h, scheme=scheme)(g)(dilate(points, R))
    rhs = pointwise_model_operator(params, h / R, scheme=scheme)(f)(points)
    return float(np.max(np.abs(lhs - rhs)))


def rescale_check(
    params: HeisenbergParams,
    f: Func,
    Rgrid: Sequence[float],
    h0: float = 0.1,
    levels: int = 3,
    sample: int = 64,
    seed: int = 0,
    box: float = 1.0,
    scheme: str = "factored",
) -> list[RescaleReport]:
    """Residual of the discrete delta_R-homogeneity and its Richardson ratios under h halving."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-0.5 * box, 0.5 * box, size=(sample, params.dim))
    pts[:, 0] *= 0.5 * box
    reports = []
    for R in Rgrid:
        if not R > 0:
            raise ValueError("R must be positive")
        hs = [h0 / 2**i for i in range(levels)]
        res = [rescale_residual(params, f, R, h, pts, scheme) for h in hs]
        ratios = [res[i] / res[i + 1] if res[i + 1] > 0 else math.nan for i in range(levels - 1)]
        reports.append(RescaleReport(float(R), hs, res, ratios))
    return reports


# ----------------------------------------------------------------------------- export


def export_coo(op: GridOperator, path) -> None:
    """Coordinate list: header '# rows cols nnz', then 'i j re im' per entry (0-based)."""
    A = op.matrix.tocoo()
    with open(path, "w") as fh:
        fh.write(f"# {A.shape[0]} {A.shape[1]} {A.nnz}\n")
        for i, j, v in zip(A.row, A.col, A.data):
            fh.write(f"{i} {j} {v.real:.17g} {v.imag:.17g}\n")


def import_coo(path) -> sp.csr_matrix:
    with open(path) as fh:
        rows, cols, nnz = (int(v) for v in fh.readline().lstrip("#").split())
        data = np.loadtxt(fh, ndmin=2) if nnz else np.zeros((0, 4))
    vals = data[:, 2] + 1j * data[:, 3]
    return sp.csr_matrix((vals, (data[:, 0].astype(int), data[:, 1].astype(int))), shape=(rows, cols))
