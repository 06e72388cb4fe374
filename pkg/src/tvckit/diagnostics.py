"""Numerical diagnosis of the uniform-convergence and domination assumptions.

Builds the A(T', eps) grid of truncated, eps-scaled objective differences,
compares the two iterated limits (T' first vs eps first), detects divergent
growth in T' at fixed eps by a linear fit, and empirically bounds the
difference-quotient envelope used by the dominated-convergence step.

Divergence is detected statistically and the fit is exposed in the report;
nothing here proves or disproves uniform convergence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (PerturbationCurve, StochasticPath, expectation, perturb)
from .errors import HorizonError, InputError, NumericalError, UnsupportedError
from .euler import _jet_paths, max_window_start
from .objectives import ContinuousObjective, DiscreteObjective

NEG_INF = float("-inf")

DIVERGES = "DIVERGES"

STATUS_FINITE = "finite"
STATUS_DIVERGING = "diverging"
STATUS_DOMAIN_ERROR = "domain-error"

DEFAULT_EPS_GRID = tuple(10.0 ** (-k) for k in range(1, 7))  # 1e-1 .. 1e-6


@dataclass(frozen=True)
class DiagnosticMatrix:
    """A(T', eps) on a grid: rows indexed by T' (increasing), columns by eps
    (decreasing), with a per-cell status flag."""

    eps_grid: tuple[float, ...]
    tprime_grid: tuple[float, ...]
    values: np.ndarray   # (nT, nE)
    status: np.ndarray   # (nT, nE) of status strings

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps_grid)
        tps = tuple(self.tprime_grid)
        if any(e2 >= e1 for e1, e2 in zip(eps, eps[1:])):
            raise InputError("eps grid must be strictly decreasing")
        if any(t2 <= t1 for t1, t2 in zip(tps, tps[1:])):
            raise InputError("T' grid must be strictly increasing")
        if any(e <= 0 for e in eps):
            raise InputError("eps values must be positive")
        object.__setattr__(self, "eps_grid", eps)
        object.__setattr__(self, "tprime_grid", tps)
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (len(tps), len(eps)):
            raise InputError("values shape must be (len(tprime_grid), len(eps_grid))")
        object.__setattr__(self, "values", vals)

    @property
    def all_finite(self) -> bool:
        return bool((self.status == STATUS_FINITE).all())


@dataclass(frozen=True)
class IteratedLimits:
    eps_then_T: float | str        # lim_{eps->0} lim_{T'->inf}, or DIVERGES
    T_then_eps: float | str        # lim_{T'->inf} lim_{eps->0}, or DIVERGES
    eps_then_T_error: float
    T_then_eps_error: float
    per_eps_limits: tuple          # per-eps along-T' limit (float or DIVERGES)
    per_eps_slopes: tuple[float, ...]
    per_tprime_limits: tuple[float, ...]


@dataclass(frozen=True)
class UniformityVerdict:
    verdict: str                   # "UNIFORM" | "NON_UNIFORM" | "INCONCLUSIVE"
    limits: IteratedLimits | None
    gap: float | None
    deviation_profile: tuple[float, ...] | None
    reason: str


def _expected_window_diff(obj, base, shifted, t):
    space = base.space
    vals = np.empty(space.m)
    n = obj.order
    win_b = base.window(t, n)
    win_s = shifted.window(t, n)
    for w in range(space.m):
        vb = obj.value(win_b[:, w, :], t, w)
        vs = obj.value(win_s[:, w, :], t, w)
        if vb == NEG_INF or vs == NEG_INF:
            return None
        vals[w] = vs - vb
    return expectation(space, vals)


def a_grid(obj, path: StochasticPath, curve: PerturbationCurve,
           eps_grid=DEFAULT_EPS_GRID, tprime_grid=None,
           kind: str | None = None) -> DiagnosticMatrix:
    """The A(T', eps) matrix: truncated objective difference divided by eps.

    Discrete cells are exact weighted sums; continuous cells use the trapezoid
    rule on the expected difference of the sampled objective along the jets.
    """
    kind = kind or path.domain.kind
    if kind == "discrete":
        return _a_grid_discrete(obj, path, curve, eps_grid, tprime_grid)
    if kind == "continuous":
        return _a_grid_continuous(obj, path, curve, eps_grid, tprime_grid)
    raise InputError(f"unknown kind {kind!r}")


def _default_tprime_grid_discrete(path, curve, n):
    last = min(max_window_start(path, n), max_window_start(curve, n))
    onset = int(curve.tail_onset) if curve.tail_onset is not None else 1
    lo = min(onset + 2, last)
    # roughly geometric coverage of [lo, last]
    grid = sorted({int(round(v)) for v in np.geomspace(max(lo, 1), max(last, 1), 8)})
    grid = [g for g in grid if lo <= g <= last]
    return grid or [last]


def _a_grid_discrete(obj, path, curve, eps_grid, tprime_grid):
    n = obj.order
    if tprime_grid is None:
        tprime_grid = _default_tprime_grid_discrete(path, curve, n)
    tprime_grid = [int(t) for t in tprime_grid]
    last = min(max_window_start(path, n), max_window_start(curve, n))
    if tprime_grid[-1] > last:
        raise HorizonError(f"T'={tprime_grid[-1]} beyond the last full window {last}")
    nT, nE = len(tprime_grid), len(eps_grid)
    values = np.zeros((nT, nE))
    status = np.full((nT, nE), STATUS_FINITE, dtype=object)
    for ie, eps in enumerate(eps_grid):
        shifted = perturb(path, curve, eps)
        cum = 0.0
        bad_from = None
        it = 0
        for t in range(tprime_grid[-1] + 1):
            diff = _expected_window_diff(obj, path, shifted, t)
            if diff is None:
                bad_from = t if bad_from is None else bad_from
                diff = 0.0
            cum += diff
            while it < nT and tprime_grid[it] == t:
                values[it, ie] = cum / eps
                if bad_from is not None:
                    status[it, ie] = STATUS_DOMAIN_ERROR
                elif not math.isfinite(values[it, ie]):
                    status[it, ie] = STATUS_DIVERGING
                it += 1
    if (status == STATUS_DOMAIN_ERROR).all():
        raise NumericalError("every diagnostic cell hit the -inf domain boundary")
    return DiagnosticMatrix(tuple(eps_grid), tuple(tprime_grid), values, status)


def _a_grid_continuous(obj, path, curve, eps_grid, tprime_grid):
    if path.domain.kind != "continuous":
        raise UnsupportedError("continuous diagnostics need a continuous domain")
    n = obj.order
    h = path.domain.h
    times = path.domain.times()
    if tprime_grid is None:
        onset = curve.tail_onset if curve.tail_onset is not None else 1.0
        tprime_grid = [t for t in np.geomspace(onset + 2, path.domain.t_end, 8)]
        tprime_grid = sorted({round(path.domain.index_of(round(t / h) * h) * h, 12)
                              for t in tprime_grid})
    m = path.space.m
    base_jets = _jet_paths(path, n)
    nT, nE = len(tprime_grid), len(eps_grid)
    values = np.zeros((nT, nE))
    status = np.full((nT, nE), STATUS_FINITE, dtype=object)

    def sampled_values(jets):
        out = np.empty((len(times), m))
        jet = np.empty((n + 1, path.dim))
        for it, t in enumerate(times):
            for w in range(m):
                for order in range(n + 1):
                    jet[order] = jets[order][it, w]
                out[it, w] = obj.value(jet, t, w)
        return out

    base_vals = sampled_values(base_jets)
    for ie, eps in enumerate(eps_grid):
        shifted = perturb(path, curve, eps)
        diff = sampled_values(_jet_paths(shifted, n)) - base_vals
        bad = np.isneginf(diff) | np.isnan(diff)
        ediff = np.array([expectation(path.space, np.where(bad[it], 0.0, diff[it]))
                          for it in range(len(times))])
        # cumulative trapezoid over the grid
        cum = np.concatenate([[0.0], np.cumsum((ediff[1:] + ediff[:-1]) * 0.5 * h)])
        for it, tp in enumerate(tprime_grid):
            idx = path.domain.index_of(tp)
            values[it, ie] = cum[idx] / eps
            if bad[: idx + 1].any():
                status[it, ie] = STATUS_DOMAIN_ERROR
            elif not math.isfinite(values[it, ie]):
                status[it, ie] = STATUS_DIVERGING
    if (status == STATUS_DOMAIN_ERROR).all():
        raise NumericalError("every diagnostic cell hit the -inf domain boundary")
    return DiagnosticMatrix(tuple(eps_grid), tuple(tprime_grid), values, status)


# ---------------------------------------------------------------------------
# Iterated limits

def _linear_fit(x, y):
    """OLS slope, intercept and slope standard error."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xbar = x.mean()
    sxx = float(np.sum((x - xbar) ** 2))
    slope = float(np.sum((x - xbar) * (y - y.mean())) / sxx)
    intercept = float(y.mean() - slope * xbar)
    resid = y - (intercept + slope * x)
    dof = max(len(x) - 2, 1)
    stderr = math.sqrt(float(np.sum(resid**2)) / dof / sxx)
    return slope, intercept, stderr


def _slope_tol(y, span):
    return 1e-12 * max(1.0, float(np.max(np.abs(y)))) / max(1.0, span)


def growth_slope(tprimes, col):
    """Fitted linear growth slope of A(., eps) in T' and its divergence flag."""
    slope, _, stderr = _linear_fit(tprimes, col)
    span = float(tprimes[-1] - tprimes[0])
    diverges = slope > 10.0 * stderr + _slope_tol(col, span)
    return slope, stderr, diverges


def _richardson_eps(eps_asc, vals_asc):
    """Linear-in-eps extrapolation to eps=0 from the two smallest eps, with an
    error estimate from the next pair."""
    e1, e2 = eps_asc[0], eps_asc[1]
    v1, v2 = vals_asc[0], vals_asc[1]
    extrap = v1 - e1 * (v2 - v1) / (e2 - e1)
    if len(eps_asc) >= 3:
        e3, v3 = eps_asc[2], vals_asc[2]
        alt = v2 - e2 * (v3 - v2) / (e3 - e2)
        err = abs(extrap - alt)
    else:
        err = abs(extrap - v1)
    return float(extrap), float(err)


def iterated_limits(matrix: DiagnosticMatrix) -> IteratedLimits:
    """Estimate lim_{eps->0} lim_{T'->inf} A and lim_{T'->inf} lim_{eps->0} A."""
    if len(matrix.eps_grid) < 4 or len(matrix.tprime_grid) < 4:
        raise InputError("need at least 4 points per axis for iterated limits")
    if not matrix.all_finite:
        raise NumericalError("iterated limits need an all-finite matrix")
    tprimes = np.asarray(matrix.tprime_grid, dtype=float)
    eps_desc = np.asarray(matrix.eps_grid)

    per_eps_limits = []
    per_eps_slopes = []
    for ie in range(len(eps_desc)):
        col = matrix.values[:, ie]
        slope, _, diverges = growth_slope(tprimes, col)
        per_eps_slopes.append(slope)
        per_eps_limits.append(DIVERGES if diverges else float(col[-1]))

    if any(v == DIVERGES for v in per_eps_limits):
        eps_then_T, e1_err = DIVERGES, math.inf
    else:
        # outer limit eps->0 of the inner T'-limits
        eps_asc = eps_desc[::-1]
        vals_asc = np.asarray(per_eps_limits, dtype=float)[::-1]
        eps_then_T, e1_err = _richardson_eps(eps_asc, vals_asc)

    eps_asc = eps_desc[::-1]
    per_tprime = []
    row_errs = []
    for it in range(len(tprimes)):
        row_asc = matrix.values[it, ::-1]
        extrap, err = _richardson_eps(eps_asc, row_asc)
        per_tprime.append(extrap)
        row_errs.append(err)
    slope, _, diverges = growth_slope(tprimes, np.asarray(per_tprime))
    if diverges:
        T_then_eps, e2_err = DIVERGES, math.inf
    else:
        T_then_eps, e2_err = float(per_tprime[-1]), float(max(row_errs))

    return IteratedLimits(eps_then_T=eps_then_T, T_then_eps=T_then_eps,
                          eps_then_T_error=e1_err, T_then_eps_error=e2_err,
                          per_eps_limits=tuple(per_eps_limits),
                          per_eps_slopes=tuple(per_eps_slopes),
                          per_tprime_limits=tuple(per_tprime))


def deviation_profile(matrix: DiagnosticMatrix) -> np.ndarray:
    """sup over eps of |A(T', eps) - A(T'_max, eps)| per T'."""
    return np.max(np.abs(matrix.values - matrix.values[-1:]), axis=1)


def uniformity_verdict(matrix: DiagnosticMatrix,
                       agreement_factor: float = 10.0,
                       decay_tol: float | None = None) -> UniformityVerdict:
    """UNIFORM / NON_UNIFORM / INCONCLUSIVE from the iterated limits and the
    deviation profile.  Total: never raises on well-formed matrices."""
    if len(matrix.eps_grid) < 4 or len(matrix.tprime_grid) < 4:
        return UniformityVerdict("INCONCLUSIVE", None, None, None,
                                 "grids too coarse (need >= 4 points per axis)")
    if not matrix.all_finite:
        return UniformityVerdict("INCONCLUSIVE", None, None, None,
                                 "matrix has non-finite or domain-error cells")
    limits = iterated_limits(matrix)
    a, b = limits.eps_then_T, limits.T_then_eps
    if (a == DIVERGES) != (b == DIVERGES):
        return UniformityVerdict("NON_UNIFORM", limits, None, None,
                                 "one iterated limit diverges, the other is finite")
    if a == DIVERGES and b == DIVERGES:
        return UniformityVerdict("NON_UNIFORM", limits, None, None,
                                 "growth in T' detected at fixed eps")
    gap = abs(a - b)
    err = max(limits.eps_then_T_error, limits.T_then_eps_error, 1e-15)
    if gap > agreement_factor * err:
        return UniformityVerdict("NON_UNIFORM", limits, gap, None,
                                 f"iterated limits differ by {gap:.3g} > {agreement_factor}x error {err:.3g}")
    profile = deviation_profile(matrix)
    if decay_tol is None:
        decay_tol = 1e-6 * max(1.0, float(np.max(np.abs(matrix.values))))
    if float(profile[-2]) <= decay_tol:
        return UniformityVerdict("UNIFORM", limits, gap, tuple(profile),
                                 "iterated limits agree and the deviation profile decays")
    return UniformityVerdict("INCONCLUSIVE", limits, gap, tuple(profile),
                             "limits agree but the deviation profile has not decayed")


# ---------------------------------------------------------------------------
# Domination bound

@dataclass(frozen=True)
class DominationEntry:
    t: float
    state: int
    sup_abs: float | None
    eps_at_sup: float | None
    domain_flagged: bool
    growth_flagged: bool


@dataclass(frozen=True)
class DominationReport:
    entries: tuple[DominationEntry, ...]
    eps_grid: tuple[float, ...]
    verdict: str  # "bounded on tested grid" | "growth detected"

    @property
    def bounded(self) -> bool:
        return self.verdict == "bounded on tested grid"


def domination_check(obj, path: StochasticPath, curve: PerturbationCurve,
                     eps_bar: float, sample_times, n_eps: int = 7) -> DominationReport:
    """Empirical sup of the per-state difference quotient over eps in (0, eps_bar].

    On a finite state set the dominated-convergence hypothesis reduces to this
    boundedness; the sup is reported as a candidate envelope, never asserted as
    a proof.
    """
    if eps_bar <= 0.0:
        raise InputError("eps_bar must be positive")
    if isinstance(obj, ContinuousObjective):
        raise UnsupportedError("domination_check covers discrete objectives; "
                               "sample the induced jets for continuous models")
    eps_grid = tuple(eps_bar * 10.0 ** (-k) for k in range(n_eps))
    n = obj.order
    entries = []
    any_growth = False
    for t in sample_times:
        t = int(t)
        win_b = path.window(t, n)
        for w in range(path.space.m):
            base_val = obj.value(win_b[:, w, :], t, w)
            quotients = []
            flagged = base_val == NEG_INF
            for eps in eps_grid:
                if flagged:
                    break
                shifted = perturb(path, curve, eps)
                val = obj.value(shifted.window(t, n)[:, w, :], t, w)
                if val == NEG_INF:
                    flagged = True
                    break
                quotients.append(abs(val - base_val) / eps)
            if flagged or not quotients:
                entries.append(DominationEntry(t, w, None, None, True, False))
                continue
            quotients = np.asarray(quotients)
            sup = float(quotients.max())
            eps_at = float(eps_grid[int(quotients.argmax())])
            # growth: strictly increasing toward small eps without saturation
            growth = (len(quotients) >= 3
                      and bool(np.all(np.diff(quotients[-3:]) > 0))
                      and quotients[-1] > 2.0 * quotients[0])
            any_growth = any_growth or growth
            entries.append(DominationEntry(t, w, sup, eps_at, False, growth))
    verdict = "growth detected" if any_growth else "bounded on tested grid"
    return DominationReport(tuple(entries), eps_grid, verdict)
