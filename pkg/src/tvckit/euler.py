"""Euler-equation residuals: discrete triangular rows and the continuous
alternating-derivative form.

The discrete residual at index t is the derivative of the truncated objective
sum with respect to y(t): contributions from every window that contains t,
clipped at both ends of the grid.  The continuous residual is
v_1 - (v_2)' + ... + (-1)^n (v_{n+1})^(n), with total time derivatives taken
of the sampled partial series along the path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SampleSpace, StochasticPath, expectation, time_derivative
from .errors import HorizonError, InputError, NumericalError, UnsupportedError
from .objectives import ContinuousObjective, DiscreteObjective, partial_slot

DEFAULT_TOL_ANALYTIC = 1e-8
DEFAULT_TOL_FD = 1e-4


@dataclass(frozen=True)
class BoundaryMode:
    """paper_literal imposes the truncated rows at t = 0..n-1; fixed_initial(k)
    treats the first k indices as pinned by initial data instead."""

    kind: str  # "paper_literal" | "fixed_initial"
    k: int = 0

    def __post_init__(self):
        if self.kind not in ("paper_literal", "fixed_initial"):
            raise InputError(f"unknown boundary mode {self.kind!r}")
        if self.kind == "fixed_initial" and self.k < 0:
            raise InputError("fixed_initial needs k >= 0")

    @classmethod
    def paper_literal(cls) -> "BoundaryMode":
        return cls("paper_literal")

    @classmethod
    def fixed_initial(cls, k: int) -> "BoundaryMode":
        return cls("fixed_initial", k)

    def first_index(self) -> int:
        return 0 if self.kind == "paper_literal" else self.k


@dataclass(frozen=True)
class EulerReport:
    indices: tuple
    residuals: np.ndarray          # (nt, m, dim)
    expected: np.ndarray           # (nt, dim)
    max_abs: float
    tolerance: float
    verdict: str                   # "STATIONARY" | "NOT_STATIONARY"
    mode: str

    @property
    def stationary(self) -> bool:
        return self.verdict == "STATIONARY"


def max_window_start(path: StochasticPath, n: int) -> int:
    """Largest j such that the window (y_j, ..., y_{j+n}) fits on the grid."""
    last = path.num_points - 1 - n
    if last < 0:
        raise HorizonError(f"horizon {path.num_points - 1} shorter than objective order {n}")
    return last


def discrete_euler_residual(obj: DiscreteObjective, path: StochasticPath, t: int,
                            j_max: int | None = None) -> np.ndarray:
    """Row t of the stationarity system, per state; shape (m, dim).

    Sum over window starts j in [max(0, t-n), min(t, j_max)] of the slot-(t-j)
    partial of V at window j.  j_max defaults to the last window on the grid.
    """
    n = obj.order
    last = max_window_start(path, n)
    if j_max is None:
        j_max = last
    j_max = min(j_max, last)
    j_lo = max(0, t - n)
    j_hi = min(t, j_max)
    if j_hi < j_lo:
        raise HorizonError(f"no window touches index t={t} within the grid")
    m = path.space.m
    out = np.zeros((m, path.dim))
    for j in range(j_lo, j_hi + 1):
        win = path.window(j, n)
        for w in range(m):
            out[w] += partial_slot(obj, t - j, win[:, w, :], j, w)
    return out


def admissible_indices(path: StochasticPath, n: int, mode: BoundaryMode) -> range:
    """Indices where the residual row uses full (untruncated-right) windows."""
    last = max_window_start(path, n)
    start = mode.first_index()
    if start > last:
        raise HorizonError("horizon too short for the requested boundary mode")
    return range(start, last + 1)


def continuous_euler_residual_series(obj: ContinuousObjective,
                                     path: StochasticPath) -> np.ndarray:
    """Residual sampled on the whole grid; shape (num_points, m, dim)."""
    if path.domain.kind != "continuous":
        raise UnsupportedError("continuous residuals need a continuous domain")
    n = obj.order
    jets = _jet_paths(path, n)
    times = path.domain.times()
    m = path.space.m
    out = np.zeros((path.num_points, m, path.dim))
    for k in range(n + 1):
        series = _partial_series(obj, k, jets, times, m, path.dim)
        for _ in range(k):
            series = np.gradient(series, path.domain.h, axis=0, edge_order=2)
        out += (-1) ** k * series
    if not np.isfinite(out).all():
        raise NumericalError("derivative stencil produced a non-finite residual")
    return out


def _jet_paths(path: StochasticPath, n: int) -> list[np.ndarray]:
    jets = [path.values]
    current = path
    for _ in range(n):
        current = time_derivative(current, 1)
        jets.append(current.values)
    return jets


def _partial_series(obj, k, jets, times, m, dim) -> np.ndarray:
    series = np.empty((len(times), m, dim))
    jet = np.empty((obj.order + 1, dim))
    for it, t in enumerate(times):
        for w in range(m):
            for order in range(obj.order + 1):
                jet[order] = jets[order][it, w]
            series[it, w] = partial_slot(obj, k, jet, t, w)
    return series


def continuous_euler_residual(obj: ContinuousObjective, path: StochasticPath,
                              t: float) -> np.ndarray:
    """Residual at a single grid time, per state; shape (m, dim)."""
    n = obj.order
    idx = path.domain.index_of(t)
    margin = n  # points needed on each side for the k-th difference stencils
    if idx < margin or idx > path.num_points - 1 - margin:
        raise InputError(f"t={t} too close to the grid edges for order {n} stencils")
    return continuous_euler_residual_series(obj, path)[idx]


def euler_report(obj, path: StochasticPath, mode: BoundaryMode | None = None,
                 tolerance: float | None = None) -> EulerReport:
    """Residuals at every admissible index, expected residual per index, verdict."""
    mode = mode or BoundaryMode.paper_literal()
    space = path.space
    if isinstance(obj, DiscreteObjective):
        idxs = admissible_indices(path, obj.order, mode)
        residuals = np.stack([discrete_euler_residual(obj, path, t) for t in idxs])
        default_tol = DEFAULT_TOL_ANALYTIC if obj.has_analytic_partials else DEFAULT_TOL_FD
        indices = tuple(idxs)
    else:
        series = continuous_euler_residual_series(obj, path)
        n = obj.order
        interior = slice(n, path.num_points - n)
        residuals = series[interior]
        indices = tuple(path.domain.times()[interior])
        default_tol = DEFAULT_TOL_FD  # grid stencils dominate the error budget
    tol = default_tol if tolerance is None else tolerance
    expected = np.stack([expectation(space, r) for r in residuals])
    max_abs = float(np.abs(residuals).max()) if residuals.size else 0.0
    verdict = "STATIONARY" if max_abs <= tol else "NOT_STATIONARY"
    return EulerReport(indices=indices, residuals=residuals, expected=expected,
                       max_abs=max_abs, tolerance=tol, verdict=verdict, mode=mode.kind)
