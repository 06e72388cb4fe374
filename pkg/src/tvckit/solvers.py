"""Finite-horizon stationarity solvers and the discrete/continuous correspondence.

The Newton solver targets stationarity of the truncated objective sum, not
maximality: the built-in quadratic model is convex in each slot and unbounded
above, so its distinguished path is a stationary point only.  Curvature of the
residual system is reported alongside the solution.  A brute-force grid search
over a handful of free scalars serves as an independent oracle on tiny
instances.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import SampleSpace, StochasticPath, expectation
from .errors import (DomainError, InputError, NumericalError, UnsupportedError)
from .euler import _jet_paths, max_window_start
from .objectives import (ContinuousObjective, DiscreteObjective, partial_slot)

NEG_INF = float("-inf")

MAX_FREE_VARS = 6
MAX_GRID_COMBOS = 10_000_000

JAC_FD_STEP = 1e-6


@dataclass(frozen=True)
class SolveSpec:
    """Unknowns, boundary handling and stopping rules for a finite solve.

    paper_literal mode frees y(0..T) and freezes the padding y(T+1..T+n) at the
    guess; fixed mode pins head values y(0..k-1) and tail values y(T+1..T+n)
    explicitly and frees the rest.  The guess path must cover indices 0..T+n.
    """

    horizon: int
    guess: StochasticPath
    mode: str = "paper_literal"          # "paper_literal" | "fixed"
    head: np.ndarray | None = None       # (k, m) or (k, m, dim)
    tail: np.ndarray | None = None       # (n, m) or (n, m, dim)
    tolerance: float = 1e-10
    max_iterations: int = 100

    def __post_init__(self):
        if self.mode not in ("paper_literal", "fixed"):
            raise InputError(f"unknown solve mode {self.mode!r}")
        if self.horizon < 0:
            raise InputError("horizon must be >= 0")
        if self.tolerance <= 0.0 or self.max_iterations < 1:
            raise InputError("need tolerance > 0 and max_iterations >= 1")
        for name in ("head", "tail"):
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.asarray(arr, dtype=float)
            if arr.ndim == 2:
                arr = arr[:, :, None]
            if not np.isfinite(arr).all():
                raise InputError(f"{name} values must be finite")
            object.__setattr__(self, name, arr)
        if self.mode == "fixed" and self.tail is None:
            raise InputError("fixed mode needs tail values y(T+1..T+n)")
        if self.mode == "paper_literal" and (self.head is not None or self.tail is not None):
            raise InputError("paper_literal mode takes no fixed head/tail values")

    @property
    def head_len(self) -> int:
        return 0 if self.head is None else self.head.shape[0]


@dataclass(frozen=True)
class NewtonReport:
    converged: bool
    iterations: tuple[int, ...]          # per state
    max_abs_residual: float
    tolerance: float
    curvature: tuple[str, ...]           # per state: "concave" | "convex" | "indefinite"
    mode: str


def _residual_vector(obj, values_w, t_lo, t_hi, n, t_total, w):
    """Rows t_lo..t_hi of the stationarity system for one state; values_w is
    the full (t_total+1, dim) trajectory of that state."""
    last = t_total - n
    dim = values_w.shape[1]
    out = np.zeros((t_hi - t_lo + 1, dim))
    for row, t in enumerate(range(t_lo, t_hi + 1)):
        for j in range(max(0, t - n), min(t, last) + 1):
            win = values_w[j : j + n + 1]
            out[row] += partial_slot(obj, t - j, win, j, w)
    return out.ravel()


def _domain_valid(obj, values_w, n, t_total, w) -> bool:
    last = t_total - n
    for j in range(last + 1):
        if obj.value(values_w[j : j + n + 1], j, w) == NEG_INF:
            return False
    return True


def _classify_curvature(jac: np.ndarray) -> str:
    sym = 0.5 * (jac + jac.T)
    eig = np.linalg.eigvalsh(sym)
    scale = max(1.0, float(np.abs(eig).max()))
    if (eig <= 1e-10 * scale).all():
        return "concave"
    if (eig >= -1e-10 * scale).all():
        return "convex"
    return "indefinite"


def newton_euler_solve(obj: DiscreteObjective, spec: SolveSpec):
    """Damped Newton on the stationarity rows; returns (path, report).

    States decouple (no cross-state coupling in any supported objective), so
    each state's banded system is solved independently.  The line search halves
    the step while the trial point is domain-invalid or the residual norm fails
    to decrease.
    """
    n = obj.order
    T = spec.horizon
    guess = spec.guess
    t_total = guess.domain.t_max
    if guess.domain.kind != "discrete" or t_total != T + n:
        raise InputError(f"guess must live on the discrete grid 0..{T + n}")
    k = spec.head_len
    t_lo, t_hi = (0, T) if spec.mode == "paper_literal" else (k, T)
    if t_hi < t_lo:
        raise InputError("no free indices: head covers the whole horizon")
    dim = guess.dim
    m = guess.space.m
    out = np.array(guess.values)
    if spec.mode == "fixed":
        if spec.head is not None:
            out[:k] = spec.head
        out[T + 1 :] = spec.tail
    n_unknowns = (t_hi - t_lo + 1) * dim

    iterations = []
    curvature = []
    worst = 0.0
    converged = True
    for w in range(m):
        values_w = out[:, w, :].copy()
        if not _domain_valid(obj, values_w, n, t_total, w):
            raise DomainError(f"guess violates domain validity in state {w}")

        def residual(u):
            values_w[t_lo : t_hi + 1] = u.reshape(-1, dim)
            if not _domain_valid(obj, values_w, n, t_total, w):
                raise DomainError("trial point left the objective's domain")
            return _residual_vector(obj, values_w, t_lo, t_hi, n, t_total, w)

        u = values_w[t_lo : t_hi + 1].ravel().copy()
        res = residual(u)
        norm = float(np.abs(res).max())
        it = 0
        jac = None
        while norm > spec.tolerance:
            if it >= spec.max_iterations:
                converged = False
                break
            jac = np.empty((n_unknowns, n_unknowns))
            for col in range(n_unknowns):
                h = JAC_FD_STEP * max(1.0, abs(u[col]))
                up, um = u.copy(), u.copy()
                up[col] += h
                um[col] -= h
                jac[:, col] = (residual(up) - residual(um)) / (2.0 * h)
            try:
                step = np.linalg.solve(jac, -res)
            except np.linalg.LinAlgError as exc:
                raise NumericalError(f"singular Jacobian in state {w}: {exc}") from exc
            lam = 1.0
            while True:
                if lam < 1e-12:
                    raise NumericalError(f"no valid Newton step found in state {w}")
                try:
                    trial = u + lam * step
                    trial_res = residual(trial)
                except DomainError:
                    lam *= 0.5
                    continue
                trial_norm = float(np.abs(trial_res).max())
                if trial_norm < norm or trial_norm <= spec.tolerance:
                    u, res, norm = trial, trial_res, trial_norm
                    break
                lam *= 0.5
            it += 1
        values_w[t_lo : t_hi + 1] = u.reshape(-1, dim)
        out[:, w, :] = values_w
        iterations.append(it)
        worst = max(worst, norm)
        if jac is None:  # already stationary at the guess
            jac = np.empty((n_unknowns, n_unknowns))
            for col in range(n_unknowns):
                h = JAC_FD_STEP * max(1.0, abs(u[col]))
                up, um = u.copy(), u.copy()
                up[col] += h
                um[col] -= h
                jac[:, col] = (residual(up) - residual(um)) / (2.0 * h)
            residual(u)  # restore values_w to the solution
        curvature.append(_classify_curvature(jac))

    path = StochasticPath(guess.domain, guess.space, out)
    report = NewtonReport(converged=converged, iterations=tuple(iterations),
                          max_abs_residual=worst, tolerance=spec.tolerance,
                          curvature=tuple(curvature), mode=spec.mode)
    return path, report


# ---------------------------------------------------------------------------
# Objective values and the brute-force oracle

def objective_value(obj, path: StochasticPath) -> float:
    """Total expected objective along the path: a sum over full windows in the
    discrete case, a trapezoid integral of the expected sampled value in the
    continuous case.  -inf is an admissible result; +inf is not."""
    space = path.space
    if isinstance(obj, DiscreteObjective):
        total = 0.0
        for t in range(max_window_start(path, obj.order) + 1):
            win = path.window(t, obj.order)
            vals = np.array([obj.value(win[:, w, :], t, w) for w in range(space.m)])
            total += expectation(space, vals)
        return float(total)
    if isinstance(obj, ContinuousObjective):
        n = obj.order
        jets = _jet_paths(path, n)
        times = path.domain.times()
        sampled = np.empty((len(times), space.m))
        jet = np.empty((n + 1, path.dim))
        for it, t in enumerate(times):
            for w in range(space.m):
                for order in range(n + 1):
                    jet[order] = jets[order][it, w]
                sampled[it, w] = obj.value(jet, t, w)
        per_time = np.array([expectation(space, row) for row in sampled])
        if np.isneginf(per_time).any():
            return NEG_INF
        return float(np.trapezoid(per_time, dx=path.domain.h))
    raise UnsupportedError(f"unsupported objective type {type(obj).__name__}")


@dataclass(frozen=True)
class BruteForceResult:
    path: StochasticPath
    value: float
    per_state_values: tuple[float, ...]
    grid_resolution: float               # largest grid spacing over all free variables


def brute_force_solve(obj: DiscreteObjective, base: StochasticPath,
                      free_indices, grids) -> BruteForceResult:
    """Exhaustive search maximizing the expected objective sum over the free
    time indices, one value grid per index; everything else is pinned to the
    base path.  States are searched independently (no cross-state coupling)."""
    free_indices = [int(t) for t in free_indices]
    if base.dim != 1:
        raise UnsupportedError("brute_force_solve handles scalar states only")
    if len(free_indices) > MAX_FREE_VARS:
        raise InputError(f"at most {MAX_FREE_VARS} free variables, got {len(free_indices)}")
    grids = [np.asarray(g, dtype=float) for g in grids]
    if len(grids) != len(free_indices):
        raise InputError("need one grid per free index")
    combos = math.prod(len(g) for g in grids)
    if combos > MAX_GRID_COMBOS:
        raise InputError(f"grid has {combos} combinations, budget is {MAX_GRID_COMBOS}")
    n = obj.order
    last = max_window_start(base, n)
    # only windows touching a free index change between candidates
    touched = sorted({j for t in free_indices
                     for j in range(max(0, t - n), min(t, last) + 1)})
    fixed = [j for j in range(last + 1) if j not in touched]

    out = np.array(base.values)
    per_state = []
    for w in range(base.space.m):
        values_w = out[:, w, 0].copy()
        base_part = sum(obj.value(values_w[j : j + n + 1], j, w) for j in fixed)
        best_val, best_combo = NEG_INF, None
        for combo in itertools.product(*grids):
            for t, v in zip(free_indices, combo):
                values_w[t] = v
            val = base_part
            for j in touched:
                val += obj.value(values_w[j : j + n + 1], j, w)
                if val == NEG_INF:
                    break
            if val > best_val:
                best_val, best_combo = val, combo
        if best_combo is None:
            raise NumericalError(f"every grid point is infeasible in state {w}")
        for t, v in zip(free_indices, best_combo):
            values_w[t] = v
        out[:, w, 0] = values_w
        per_state.append(best_val)
    path = StochasticPath(base.domain, base.space, out)
    resolution = max(float(np.max(np.abs(np.diff(g)))) if len(g) > 1 else 0.0
                     for g in grids)
    return BruteForceResult(path=path, value=objective_value(obj, path),
                            per_state_values=tuple(per_state),
                            grid_resolution=resolution)


# ---------------------------------------------------------------------------
# Discrete/continuous correspondence (order 2)

@dataclass(frozen=True)
class CorrespondencePair:
    """An order-2 discrete objective and its induced continuous form under the
    substitution v(x, y, z) = V(x, x + y, x + 2y + z)."""

    discrete: DiscreteObjective
    continuous: ContinuousObjective

    def __post_init__(self):
        if self.discrete.order != 2 or self.continuous.order != 2:
            raise UnsupportedError("the correspondence covers order 2 only")
        if self.discrete.dim != self.continuous.dim:
            raise InputError("pair members disagree on the state dimension")


def _substituted_window(jet: np.ndarray) -> np.ndarray:
    x, y, z = jet[0], jet[1], jet[2]
    return np.stack([x, x + y, x + 2.0 * y + z])


def discrete_to_continuous(V: DiscreteObjective) -> CorrespondencePair:
    """Induce the continuous objective by substitution; chain-rule partials
    v1 = V1 + V2 + V3, v2 = V2 + 2 V3, v3 = V3 when V has analytic partials."""
    if V.order != 2:
        raise UnsupportedError("discrete_to_continuous covers order 2 only")

    def ev(jet, t, w):
        return V.eval_fn(_substituted_window(jet), t, w)

    partials = None
    if V.partial_fns is not None:
        V1, V2, V3 = V.partial_fns

        def p0(jet, t, w):
            win = _substituted_window(jet)
            return (np.asarray(V1(win, t, w)) + np.asarray(V2(win, t, w))
                    + np.asarray(V3(win, t, w)))

        def p1(jet, t, w):
            win = _substituted_window(jet)
            return np.asarray(V2(win, t, w)) + 2.0 * np.asarray(V3(win, t, w))

        def p2(jet, t, w):
            return np.asarray(V3(_substituted_window(jet), t, w))

        partials = (p0, p1, p2)
    v = ContinuousObjective(order=2, eval_fn=ev, partial_fns=partials, dim=V.dim,
                            name=(V.name + "-induced") if V.name else "induced")
    return CorrespondencePair(discrete=V, continuous=v)


def _fd5_slot(obj, k, point, t, w) -> np.ndarray:
    """Fourth-order five-point slot-partial of the raw eval function."""
    point = np.asarray(point, dtype=float)
    if point.ndim == 1:
        point = point[:, None]
    out = np.empty(obj.dim)
    for i in range(obj.dim):
        h = 1e-3 * max(1.0, abs(point[k, i]))
        vals = []
        for c in (-2, -1, 1, 2):
            shifted = point.copy()
            shifted[k, i] += c * h
            v = obj.value(shifted, t, w)
            if v == NEG_INF:
                raise DomainError(f"-inf inside the five-point stencil at slot {k}")
            vals.append(v)
        fm2, fm1, fp1, fp2 = vals
        out[i] = (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h)
    return out


@dataclass(frozen=True)
class CorrespondenceReport:
    max_partial_gap: float
    max_euler_gap: float
    checked: int
    skipped: int
    tolerance: float
    verdict: str  # "PASS" | "FAIL" | "INCONCLUSIVE"

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"


def correspondence_check(pair: CorrespondencePair, segments,
                         tolerance: float | None = None) -> CorrespondenceReport:
    """Verify the chain-rule partial identities and the first-difference form
    of the induced Euler operator.

    segments is a sequence of (seg, t, w) with seg a run of 5 consecutive path
    values (y_t .. y_{t+4}) per state dimension.  For each sample:

    (a) at the jet (y_t, dy_t, d2y_t): the five-point slot-partials of the
        substituted v match V1+V2+V3, V2+2V3 and V3 evaluated at the window;
    (b) the stationarity row at index t+2 over windows t..t+2 equals
        v1(t+2) + (v2(t+1) - v2(t+2)) + (v3(t) - 2 v3(t+1) + v3(t+2)).

    Samples where the discrete objective is -inf on any needed window are
    skipped and counted.
    """
    V, v = pair.discrete, pair.continuous
    if tolerance is None:
        tolerance = 1e-10 if V.has_analytic_partials else 1e-6
    worst_a = worst_b = 0.0
    checked = skipped = 0
    for seg, t, w in segments:
        seg = np.asarray(seg, dtype=float)
        if seg.ndim == 1:
            seg = seg[:, None]
        if seg.shape[0] != 5:
            raise InputError("each sample segment needs 5 consecutive values")
        windows = [seg[o : o + 3] for o in range(3)]
        jets = [np.stack([s[0], s[1] - s[0], s[2] - 2.0 * s[1] + s[0]])
                for s in windows]
        try:
            if any(V.value(win, t + o, w) == NEG_INF
                   for o, win in enumerate(windows)):
                skipped += 1
                continue
            combos = [sum(partial_slot(V, k, windows[0], t, w) for k in (0, 1, 2)),
                      (partial_slot(V, 1, windows[0], t, w)
                       + 2.0 * partial_slot(V, 2, windows[0], t, w)),
                      partial_slot(V, 2, windows[0], t, w)]
            for k in range(3):
                gap = np.abs(_fd5_slot(v, k, jets[0], t, w) - combos[k]).max()
                worst_a = max(worst_a, float(gap))

            lhs = sum(partial_slot(V, 2 - o, windows[o], t + o, w) for o in range(3))
            v1 = partial_slot(v, 0, jets[2], t + 2, w)
            v2 = [partial_slot(v, 1, jets[o], t + o, w) for o in (1, 2)]
            v3 = [partial_slot(v, 2, jets[o], t + o, w) for o in (0, 1, 2)]
            rhs = v1 + (v2[0] - v2[1]) + (v3[0] - 2.0 * v3[1] + v3[2])
            worst_b = max(worst_b, float(np.abs(lhs - rhs).max()))
        except DomainError:
            skipped += 1
            continue
        checked += 1
    if checked == 0:
        return CorrespondenceReport(math.nan, math.nan, 0, skipped,
                                    tolerance, "INCONCLUSIVE")
    verdict = "PASS" if max(worst_a, worst_b) <= tolerance else "FAIL"
    return CorrespondenceReport(worst_a, worst_b, checked, skipped, tolerance, verdict)
