"""The twelve acceptance checks, each a pure function of (seed, quick).

quick=True shrinks trial counts and grids for smoke runs; the full setting
uses the stated sizes.
"""

from __future__ import annotations

import itertools
import math
import time
from typing import Callable

import numpy as np

from kohnmult import heisenberg as hz
from kohnmult import joint_calculus as jc
from kohnmult.kernels import check_algebra, check_composition, check_hoelder, check_young
from kohnmult.metric_measure import build_heisenberg_cloud, build_sphere_cloud, cycle_graph, structure_constants
from kohnmult.multipliers import MultiplierFn, build_mollifier, mollify, smooth_bump_multiplier
from kohnmult.reporting import CheckResult
from kohnmult.sphere_spectrum import (
    SphereParams,
    heat_trace_sum,
    lift_multiplier,
    shell_points,
    verify_spectral_relations,
    weighted_plancherel_bound,
)

BUDGETS = {1: 5, 2: 30, 3: 10, 4: 60, 5: 5, 6: 120, 7: 60, 8: 120, 9: 300, 10: 120, 11: 120, 12: 120}
TITLES = {
    1: "spectral identities",
    2: "heat-trace scaling",
    3: "lifting exactness",
    4: "weighted Plancherel surrogate",
    5: "mollifier moments",
    6: "Young / composition / Hoelder suite",
    7: "algebra laws",
    8: "combinatorial selection lemma",
    9: "E_h consistency and growth",
    10: "Fourier-series calculus",
    11: "hypotheses harness",
    12: "Heisenberg model",
}


def _timed(k: int, fn: Callable[[], tuple[bool, dict, dict, str]]) -> CheckResult:
    t0 = time.perf_counter()
    ok, measured, tol, notes = fn()
    return CheckResult(f"criterion_{k:02d} {TITLES[k]}", bool(ok), measured, tol, time.perf_counter() - t0, BUDGETS[k], notes)


# ----------------------------------------------------------------------------- 1-5: sphere lattice and multipliers


def criterion_1(seed: int = 0, quick: bool = False) -> CheckResult:
    pmax = 40 if quick else 200

    def run():
        rows = {}
        for n in range(2, 7):
            r = verify_spectral_relations(SphereParams(n), pmax)
            rows[str(n)] = {"points": r.points, "identity_violations": r.identity_violations, "sandwich_violations": r.sandwich_violations}
        ok = all(v["identity_violations"] == 0 and v["sandwich_violations"] == 0 for v in rows.values())
        return ok, {"pmax": pmax, "by_n": rows}, {"violations": 0}, ""

    return _timed(1, run)


HEAT_BAND = (0.2, 5.0)


def heat_scaling_table(n: int, ts: np.ndarray, h: int) -> np.ndarray:
    """S(t,h) t^{2h} min{1, t^n}, divided by its value at t = 1."""
    vals = np.array([heat_trace_sum(SphereParams(n), float(t), h) * t ** (2 * h) * min(1.0, t**n) for t in ts])
    return vals / (heat_trace_sum(SphereParams(n), 1.0, h))


def criterion_2(seed: int = 0, quick: bool = False) -> CheckResult:
    ts = np.logspace(-4, 2, 12 if quick else 40)

    def run():
        meas, ok, notes = {}, True, []
        for n in (2, 3):
            v0 = heat_scaling_table(n, ts, 0)
            inside = bool(v0.min() >= HEAT_BAND[0] and v0.max() <= HEAT_BAND[1])
            ok &= inside
            meas[f"n{n}_h0"] = {"min": float(v0.min()), "max": float(v0.max()), "t_at_min": float(ts[v0.argmin()]), "spread": float(v0.max() / v0.min())}
            if not inside:
                notes.append(f"n={n}: normalized S(t,0) range [{v0.min():.3g}, {v0.max():.3g}] leaves [1/5, 5]")
            for h in (1, 2):
                vh = heat_scaling_table(n, ts, h)
                meas[f"n{n}_h{h}"] = {"max": float(vh.max())}
                ok &= bool(np.all(np.isfinite(vh)) and vh.max() <= HEAT_BAND[1])
        return ok, meas, {"band": list(HEAT_BAND), "upper_h12": HEAT_BAND[1]}, "; ".join(notes)

    return _timed(2, run)


def _lattice_upto(params: SphereParams, R: float) -> dict:
    """Lattice points with lamB <= (2R)^2, plus the q = 0 row (lamB = 0) up to p = 4 R^2."""
    pts = shell_points(params, int(math.ceil(2 * R)))
    keep = pts["lamB"] <= (2 * R) ** 2
    p0 = np.arange(int(4 * R * R) + 1, dtype=np.int64)
    n = params.n
    lamL = np.concatenate([pts["lamL"][keep], 2 * (n - 1) * p0])
    lamB = np.concatenate([pts["lamB"][keep], np.zeros_like(p0)])
    return {"lamL": lamL, "lamB": lamB, "lamU": lamL - 2 * lamB}


def criterion_3(seed: int = 0, quick: bool = False) -> CheckResult:
    trials = 20 if quick else 100

    def run():
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(trials):
            n = int(rng.integers(2, 5))
            R = float(10 ** rng.uniform(0.3, 1.6))
            a = rng.uniform(R / 16, 0.8 * R)
            b = rng.uniform(a + 0.05 * R, R)
            F = smooth_bump_multiplier(a, b)
            t = float(10 ** rng.uniform(-2, 1))
            P = SphereParams(n)
            G = lift_multiplier(F, t, P, R)
            lat = _lattice_upto(P, R)
            lhs = G(lat["lamL"].astype(float), lat["lamU"].astype(float))
            rhs = F(np.sqrt(lat["lamB"].astype(float))) * (-np.expm1(-t * t * lat["lamL"].astype(float)))
            worst = max(worst, float(np.max(np.abs(lhs - rhs))) / F.sup_abs())
        return worst <= 1e-12, {"trials": trials, "max_relative_deviation": worst}, {"relative": 1e-12}, ""

    return _timed(3, run)


def criterion_4(seed: int = 0, quick: bool = False) -> CheckResult:
    Ns = (4, 8, 16) if quick else (4, 8, 16, 32, 64)
    nF = 5 if quick else 20

    def run():
        rng = np.random.default_rng(seed)
        P = SphereParams(2)
        per_N = {N: 0.0 for N in Ns}
        for _ in range(nF):
            a = rng.uniform(0.05, 0.6)
            b = rng.uniform(a + 0.1, 0.98)
            tau = float(10 ** rng.uniform(-0.5, 0.5))
            f = smooth_bump_multiplier(a, b)
            for N in Ns:
                F = f.rescaled(1.0 / N)
                for th in (0.0, 0.4, 0.8):
                    per_N[N] = max(per_N[N], weighted_plancherel_bound(F, N, tau / N, th, P).ratio)
        C = max(per_N.values())
        spread = C / min(per_N.values())
        return spread <= 2.0, {"C_fit": C, "C_by_N": {str(k): v for k, v in per_N.items()}, "spread": spread}, {"spread": 2.0}, "t = tau / N with tau log-uniform in [10^-0.5, 10^0.5]"

    return _timed(4, run)


def criterion_5(seed: int = 0, quick: bool = False) -> CheckResult:
    def run():
        xi = build_mollifier(4)
        mom = xi.moments(8)
        m0 = abs(mom[0] - 1)
        mk = float(np.max(np.abs(mom[1:])))
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(5):
            c = rng.standard_normal(9)
            F = MultiplierFn(lambda x, c=c: np.polynomial.polynomial.polyval(x, c), (-2.0, 2.0))
            x = np.linspace(-1.5, 1.5, 301)
            for k in (0, 2):
                err = np.max(np.abs(mollify(F, xi, k)(x) - F(x))) / F.sup_abs()
                worst = max(worst, float(err))
        ok = m0 <= 1e-10 and mk <= 1e-10 and worst <= 1e-8
        return ok, {"mass_error": m0, "max_moment_1_8": mk, "poly_reproduction": worst}, {"mass": 1e-10, "moments": 1e-10, "reproduction": 1e-8}, ""

    return _timed(5, run)


# ----------------------------------------------------------------------------- 6-7: kernel algebra


def suite_spaces(seed: int, quick: bool) -> dict:
    m = 100 if quick else 200
    return {
        "cycle": cycle_graph(64),
        "sphere": build_sphere_cloud(2, m, seed).space,
        "heisenberg": build_heisenberg_cloud(2, [1.0], 2.0, m, seed),
    }


def criterion_6(seed: int = 0, quick: bool = False) -> CheckResult:
    trials = 40 if quick else 400

    def run():
        meas, ok = {}, True
        for name, sp in suite_spaces(seed, quick).items():
            consts = structure_constants(sp, seed=seed)
            y = check_young(sp, trials, seed, consts)
            c = check_composition(sp, trials, seed + 1)
            h = check_hoelder(sp, max(trials // 8, 10), seed + 2, consts)
            ok &= y.passed and c.passed and h.passed
            meas[name] = {"constants": consts.as_dict(), "young_max_ratio": y.max_ratio, "composition_max_ratio": c.max_ratio, "hoelder": h.details["configs"]}
        return ok, {"pairs_per_space": trials, **meas}, {"ratio": 1 + 1e-9, "hoelder_stability": 2.0}, ""

    return _timed(6, run)


def criterion_7(seed: int = 0, quick: bool = False) -> CheckResult:
    trials = 40 if quick else 200

    def run():
        meas, ok = {}, True
        for name, sp in suite_spaces(seed, quick).items():
            r = check_algebra(sp, trials, seed, exp_every=4)
            ok &= r.passed
            meas[name] = r.details["by_law"]
        return ok, {"trials_per_space": trials, "kernels_total": 2 * trials * 3, **meas}, {"ratio": 1 + 1e-9}, ""

    return _timed(7, run)


# ----------------------------------------------------------------------------- 8-11: joint calculus


def lemma_failures(betas: np.ndarray, nu: int) -> tuple[int, int]:
    """Check the selected index set I against every subset J by enumeration.

    Returns (failures, cases).  A selection fails unless |I| <= 2^{nu-1} - 1,
    beta_j != 0 on I, and nu sum_J beta <= |beta|_1 for every J disjoint from I
    with |J| <= |I| + 1.
    """
    count, n = betas.shape
    subsets = np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int64)  # (2^n, n)
    sizes = subsets.sum(axis=1)
    sub_sums = betas @ subsets.T  # (count, 2^n)
    total = betas.sum(axis=1)
    Imask = np.zeros((count, n), dtype=np.int64)
    fails = 0
    for i, b in enumerate(betas):
        I = jc.select_heavy_indices(b.tolist(), nu)
        Imask[i, I] = 1
        if len(I) > 2 ** (nu - 1) - 1 or any(b[j] == 0 for j in I):
            fails += 1
    disjoint = (Imask @ subsets.T) == 0
    small = sizes[None, :] <= Imask.sum(axis=1)[:, None] + 1
    bad = disjoint & small & (nu * sub_sums > total[:, None])
    fails += int(np.count_nonzero(bad.any(axis=1)))
    return fails, count


def criterion_8(seed: int = 0, quick: bool = False) -> CheckResult:
    nmax = 5 if quick else 8

    def run():
        fails = cases = 0
        for n in range(1, nmax + 1):
            betas = np.array(list(itertools.product(range(5), repeat=n)), dtype=np.int64)
            for nu in (1, 2, 3):
                for chunk in np.array_split(betas, max(1, len(betas) // 50000)):
                    f, c = lemma_failures(chunk, nu)
                    fails += f
                    cases += c
        return fails == 0, {"cases": cases, "failures": fails, "n_max": nmax}, {"failures": 0}, ""

    return _timed(8, run)


GROWTH_CASES = (
    # (label, a, b, Q)
    ("sphere-poly", 3.0, 1.0, 4.0),
    ("cycle-poly", 2.0, 0.0, 1.0),
    ("torus-poly", 4.0, 1.0, 2.0),
)


def growth_tuple(label: str, seed: int, quick: bool) -> jc.CommutingTuple:
    if label == "sphere-poly":
        sp = build_sphere_cloud(2, 100 if quick else 150, seed).space
    elif label == "cycle-poly":
        sp = cycle_graph(100 if quick else 200)
    else:
        sp = jc.product_of_cycles(10, 10) if quick else jc.product_of_cycles(12, 12)
    return jc.make_commuting_tuple(sp, jc.TupleSpec("poly", seed=seed, count=2))


def criterion_9(seed: int = 0, quick: bool = False) -> CheckResult:
    levels = (1, 2, 4, 8, 16) if quick else (1, 2, 4, 8, 16, 32, 40)

    def run():
        meas, ok = {}, True
        for label, a, b, Q in GROWTH_CASES:
            t = growth_tuple(label, seed, quick)
            kap = jc.tuple_kappa(t, a)
            kappa = math.ceil(max(kap.values()))
            rep = jc.growth_experiment(t, a, b, jc.default_hset(2, seed, levels), kappa, Q)
            good = rep.passed and rep.route_gap <= 1e-9 and rep.unitarity <= 1e-9
            ok &= good
            meas[label] = {
                "a": a, "b": b, "Q": Q, "gamma": rep.gamma, "slope_1b": rep.slope1, "slope_2b": rep.slope2,
                "route_gap": rep.route_gap, "unitarity": rep.unitarity, "kappa": kappa, "h1": rep.h1,
            }
        return ok, meas, {"route": 1e-9, "unitarity": 1e-9, "slope_margin_1b": 0.25, "slope_margin_2b": 1.25}, ""

    return _timed(9, run)


def fourier_test_functions(m: int) -> list[tuple[str, Callable]]:
    """Ten smooth 2 pi-periodic F with F(0) = 0 in m variables."""
    bump = lambda u: np.where(np.abs(u) < 1, np.exp(-1 / np.maximum(1 - u * u, 1e-300)), 0.0)
    if m == 1:
        return [
            ("sin", lambda x: np.sin(x)),
            ("1-cos", lambda x: 1 - np.cos(x)),
            ("sin^3", lambda x: np.sin(x) ** 3),
            ("exp(cos)-e", lambda x: np.exp(np.cos(x)) - math.e),
            ("sin/(2+cos)", lambda x: np.sin(x) / (2 + np.cos(x))),
            ("bump@1.5", lambda x: bump((x - 1.5) / 0.8)),
            ("bump@-1.8", lambda x: bump((x + 1.8) / 1.2)),
            ("exp(sin)-1", lambda x: np.exp(np.sin(x)) - 1),
            ("log(2-cos)", lambda x: np.log(2 - np.cos(x))),
            ("sin 2x cos x", lambda x: np.sin(2 * x) * np.cos(x)),
        ]
    return [
        ("sin x cos y", lambda x, y: np.sin(x) * np.cos(y)),
        ("2-cos x-cos y", lambda x, y: 2 - np.cos(x) - np.cos(y)),
        ("sin(x+y)", lambda x, y: np.sin(x + y)),
        ("exp(cos x cos y)-e", lambda x, y: np.exp(np.cos(x) * np.cos(y)) - math.e),
        ("sin x sin y/(3+cos x)", lambda x, y: np.sin(x) * np.sin(y) / (3 + np.cos(x))),
        ("bump(1,-1)", lambda x, y: bump(np.hypot(x - 1, y + 1) / 0.9)),
        ("bump(-1.5,0.5)", lambda x, y: bump(np.hypot(x + 1.5, y - 0.5) / 1.1)),
        ("log(3-cos x-cos y)", lambda x, y: np.log(3 - np.cos(x) - np.cos(y))),
        ("sin x + sin 2y", lambda x, y: np.sin(x) + np.sin(2 * y)),
        ("(1-cos x) exp(sin y)", lambda x, y: (1 - np.cos(x)) * np.exp(np.sin(y))),
    ]


def fourier_tuple(m: int, seed: int, quick: bool) -> jc.CommutingTuple:
    sp = cycle_graph(32 if quick else 64)
    t = jc.make_commuting_tuple(sp, jc.TupleSpec("poly", seed=seed, count=m))
    return t.scaled(2.5 / max(1.0, float(np.max(np.abs(t.eigenvalues)))))


def criterion_10(seed: int = 0, quick: bool = False) -> CheckResult:
    hmax = 16 if quick else 32

    def run():
        rows, ok = [], True
        for m in (1, 2):
            t = fourier_tuple(m, seed, quick)
            factors = jc.unitary_factors(t)
            for name, F in fourier_test_functions(m):
                r = jc.fourier_calculus(t, F, hmax, factors=factors)
                good = r.deviation <= r.tail + 1e-9
                ok &= good
                rows.append({"m": m, "F": name, "deviation": r.deviation, "tail": r.tail, "ok": good})
        return ok, {"hmax": hmax, "functions": rows}, {"slack": 1e-9}, ""

    return _timed(10, run)


HYPOTHESIS_RGRID = np.logspace(-1.5, 2.5, 9)


def catalog_cases(seed: int, quick: bool):
    """(catalog tag, tuple, dilation exponents) for the (A)-check."""
    cyc = cycle_graph(48 if quick else 64)
    tor = jc.product_of_cycles(10, 10) if quick else jc.product_of_cycles(12, 12)
    return [
        ("heat", jc.make_commuting_tuple(cyc, jc.TupleSpec("heat")), (2.0,)),
        ("heat-derivative", jc.make_commuting_tuple(cyc, jc.TupleSpec("derivative")), (2.0, 1.0)),
        ("product", jc.make_commuting_tuple(tor, jc.TupleSpec("tensor")), (2.0, 2.0)),
        ("fourier", jc.make_commuting_tuple(tor, jc.TupleSpec("fourier")), (1.0, 1.0)),
    ]


def criterion_11(seed: int = 0, quick: bool = False) -> CheckResult:
    def run():
        meas, ok = {"A": {}, "B_heat": {}}, True
        for tag, t, g in catalog_cases(seed, quick):
            rep = jc.verify_hypotheses(t, jc.psi_catalog(tag), jc.DilationSystem(g), HYPOTHESIS_RGRID)
            meas["A"][tag] = {"residual": rep.residual_A, "points": rep.points_A, "trend": rep.trend}
            ok &= rep.residual_A <= 1e-12 and rep.points_A > 0
        for name, sp in suite_spaces(seed, quick).items():
            t = jc.make_commuting_tuple(sp, jc.TupleSpec("heat"))
            rep = jc.verify_hypotheses(t, jc.psi_catalog("heat"), jc.DilationSystem((2.0,)), HYPOTHESIS_RGRID)
            meas["B_heat"][name] = {"finite": rep.finite, "trend_log10": rep.trend, "spread": rep.spread, "table": rep.table}
            ok &= rep.non_trending
        tol = {"A_residual": 1e-12, "B_trend_log10": 1.0, "B_spread": 10.0, "rgrid": HYPOTHESIS_RGRID.tolist()}
        return ok, meas, tol, ""

    return _timed(11, run)


# ----------------------------------------------------------------------------- 12: Heisenberg model


def group_law_residuals(params: hz.HeisenbergParams, rng: np.random.Generator, samples: int = 200) -> dict:
    d = params.dim
    u, v, w = (rng.uniform(-2, 2, size=(samples, d)) for _ in range(3))
    R = float(10 ** rng.uniform(-1, 1))
    mul = lambda x, y: hz.group_multiply(x, y, params)
    zero = np.zeros(d)
    return {
        "associativity": float(np.max(np.abs(mul(mul(u, v), w) - mul(u, mul(v, w))))),
        "identity": float(np.max(np.abs(mul(u, zero) - u)) + np.max(np.abs(mul(zero, u) - u))),
        "inverse": float(np.max(np.abs(mul(u, hz.group_inverse(u))))),
        "dilation_homomorphism": float(np.max(np.abs(hz.dilate(mul(u, v), R) - mul(hz.dilate(u, R), hz.dilate(v, R)))) / max(1.0, R * R)),
        "gauge_homogeneity": float(np.max(np.abs(hz.gauge(hz.dilate(u, R)) - R * hz.gauge(u))) / max(1.0, R)),
    }


HEISENBERG_CASES = (
    hz.HeisenbergParams(2, (1.0,)),
    hz.HeisenbergParams(2, (1.0,), frozenset({1})),
    hz.HeisenbergParams(3, (1.0, 0.5)),
    hz.HeisenbergParams(3, (1.0, 2.0), frozenset({2})),
)


def criterion_12(seed: int = 0, quick: bool = False) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        meas, ok = {}, True
        herm = 0.0
        for P in HEISENBERG_CASES:
            grid = hz.Grid(2.0, 8, P.dim)
            for scheme in ("factored", "direct"):
                herm = max(herm, hz.assemble_model_operator(P, grid, scheme).asymmetry())
        ok &= herm <= 1e-12
        # positivity on three-dimensional models (dense spectra); n = 3 grids are too large to diagonalize here
        mins, mins_direct = {}, {}
        for P in HEISENBERG_CASES[:2]:
            for pts in (8, 10 if quick else 12):
                key = f"n{P.n}_levi{list(P.levi)}_J{sorted(P.J)}_grid{pts}"
                grid = hz.Grid(2.0, pts, P.dim)
                mins[key] = float(hz.assemble_model_operator(P, grid, "factored").smallest_eigenvalues(1)[0])
                mins_direct[key] = float(hz.assemble_model_operator(P, grid, "direct").smallest_eigenvalues(1)[0])
        ok &= min(mins.values()) >= -1e-6
        rich = {}
        for P in (HEISENBERG_CASES[0], HEISENBERG_CASES[2]):
            # R < 1 coarsens h / R, so the starting step shrinks with R to stay asymptotic
            f = hz.gaussian_bump(P)
            reps = hz.rescale_check(P, f, [2.0, 3.0], h0=0.1, levels=4, seed=seed)
            reps += hz.rescale_check(P, f, [0.5], h0=0.025, levels=4, seed=seed)
            rich[f"n{P.n}"] = {str(r.R): {"residuals": r.residuals, "ratios": r.ratios, "richardson": r.richardson} for r in reps}
            ok &= all(3.5 <= r.richardson <= 4.5 for r in reps)
        laws = {}
        for P in HEISENBERG_CASES:
            res = group_law_residuals(P, rng)
            laws[f"n{P.n}_levi{list(P.levi)}"] = res
            ok &= max(res.values()) <= 1e-12
        meas = {
            "hermitian_defect": herm,
            "min_eigenvalue_factored": mins,
            "min_eigenvalue_direct_info": mins_direct,
            "rescale": rich,
            "group_law": laws,
        }
        tol = {"hermitian": 1e-12, "min_eigenvalue": -1e-6, "richardson": [3.5, 4.5], "group_law": 1e-12}
        return ok, meas, tol, "direct-scheme minima are informational"

    return _timed(12, run)


CRITERIA = {k: globals()[f"criterion_{k}"] for k in range(1, 13)}


def run_criterion(k: int, seed: int = 0, quick: bool = False) -> CheckResult:
    return CRITERIA[k](seed, quick)
