"""Finite probability spaces, time grids, stochastic paths and perturbations.

Everything downstream (Euler/TVC engines, diagnostics, solvers) is built on the
four types here.  All expectations are exact weighted sums over a finite state
set; continuous time lives on a uniform grid with step ``h`` and every
derivative/integral claim carries an O(h^2) tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import HorizonError, InputError, UnsupportedError

PROB_TOL = 1e-12
GRID_TOL = 1e-9


@dataclass(frozen=True)
class SampleSpace:
    """Finite state set {1..m} with a probability mass per state."""

    probs: tuple[float, ...]

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "probs", probs)
        if not probs:
            raise InputError("sample space needs at least one state")
        if any(p < 0.0 for p in probs):
            raise InputError("probabilities must be nonnegative")
        total = math.fsum(probs)
        if abs(total - 1.0) > PROB_TOL:
            raise InputError(f"probabilities sum to {total!r}, expected 1")

    @property
    def m(self) -> int:
        return len(self.probs)

    @property
    def states(self) -> tuple[int, ...]:
        return tuple(range(1, self.m + 1))

    @property
    def prob_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)


def expectation(space: SampleSpace, z):
    """Exact expectation: sum_w probs(w) * z(w) along the first axis of z.

    -inf entries with positive mass propagate to -inf; zero-mass states are
    ignored entirely.
    """
    z = np.asarray(z, dtype=float)
    if z.shape[:1] != (space.m,):
        raise InputError(f"random quantity has {z.shape[0] if z.ndim else 0} states, space has {space.m}")
    if np.isposinf(z).any():
        raise InputError("+inf is not an admissible value")
    w = space.prob_array
    live = w > 0.0
    out = np.tensordot(w[live], z[live], axes=(0, 0))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class TimeDomain:
    """Discrete index set 0..t_max, or a uniform continuous grid t_k = k*h."""

    kind: str
    t_max: int | None = None
    t_end: float | None = None
    h: float | None = None

    def __post_init__(self):
        if self.kind == "discrete":
            if self.t_max is None or int(self.t_max) != self.t_max or self.t_max < 0:
                raise InputError("discrete domain needs an integer t_max >= 0")
            object.__setattr__(self, "t_max", int(self.t_max))
        elif self.kind == "continuous":
            if self.t_end is None or self.h is None or self.t_end <= 0 or self.h <= 0:
                raise InputError("continuous domain needs t_end > 0 and h > 0")
            ratio = self.t_end / self.h
            if abs(ratio - round(ratio)) > GRID_TOL * max(1.0, ratio):
                raise InputError("t_end must be an integer multiple of h")
        else:
            raise InputError(f"unknown time-domain kind {self.kind!r}")

    @classmethod
    def discrete(cls, t_max: int) -> "TimeDomain":
        return cls(kind="discrete", t_max=t_max)

    @classmethod
    def continuous(cls, t_end: float, h: float) -> "TimeDomain":
        return cls(kind="continuous", t_end=float(t_end), h=float(h))

    @property
    def num_points(self) -> int:
        if self.kind == "discrete":
            return self.t_max + 1
        return int(round(self.t_end / self.h)) + 1

    def times(self) -> np.ndarray:
        if self.kind == "discrete":
            return np.arange(self.num_points, dtype=float)
        return np.arange(self.num_points) * self.h

    def index_of(self, t) -> int:
        """Grid index of time t; rejects off-grid times."""
        if self.kind == "discrete":
            if int(t) != t or not (0 <= t <= self.t_max):
                raise InputError(f"t={t} is not a grid index in 0..{self.t_max}")
            return int(t)
        k = t / self.h
        if abs(k - round(k)) > GRID_TOL * max(1.0, abs(k)):
            raise InputError(f"t={t} is not on the grid (h={self.h})")
        k = int(round(k))
        if not (0 <= k < self.num_points):
            raise HorizonError(f"t={t} lies outside [0, {self.t_end}]")
        return k


def _coerce_values(domain: TimeDomain, space: SampleSpace, values) -> np.ndarray:
    vals = np.asarray(values, dtype=float)
    if vals.ndim == 2:
        vals = vals[:, :, None]
    if vals.ndim != 3:
        raise InputError("path values must have shape (time, state) or (time, state, dim)")
    if vals.shape[0] != domain.num_points:
        raise InputError(f"path has {vals.shape[0]} time points, domain has {domain.num_points}")
    if vals.shape[1] != space.m:
        raise InputError(f"path has {vals.shape[1]} states, space has {space.m}")
    if not np.isfinite(vals).all():
        raise InputError("path values must all be finite")
    vals = vals.copy()
    vals.flags.writeable = False
    return vals


@dataclass(frozen=True)
class StochasticPath:
    """Trajectory y(t, w) in R^dim over every grid point of a time domain."""

    domain: TimeDomain
    space: SampleSpace
    values: np.ndarray  # (num_points, m, dim), read-only

    def __post_init__(self):
        object.__setattr__(self, "values", _coerce_values(self.domain, self.space, self.values))

    @property
    def dim(self) -> int:
        return self.values.shape[2]

    @property
    def num_points(self) -> int:
        return self.values.shape[0]

    def window(self, t: int, n: int) -> np.ndarray:
        """The n+1 consecutive values (y(t), ..., y(t+n)); shape (n+1, m, dim)."""
        if self.domain.kind != "discrete":
            raise UnsupportedError("windows are defined on discrete domains only")
        if t < 0 or t + n > self.domain.t_max:
            raise HorizonError(f"window [{t}, {t + n}] falls off the grid 0..{self.domain.t_max}")
        return self.values[t : t + n + 1]

    @classmethod
    def from_function(cls, domain: TimeDomain, space: SampleSpace,
                      fn: Callable[[float, int], float], dim: int = 1) -> "StochasticPath":
        """Sample fn(t, state_index) on the full grid; fn may return a scalar or a dim-vector."""
        times = domain.times()
        vals = np.empty((domain.num_points, space.m, dim))
        for it, t in enumerate(times):
            for w in range(space.m):
                vals[it, w] = fn(t, w)
        return cls(domain, space, vals)

    @classmethod
    def constant(cls, domain: TimeDomain, space: SampleSpace, value, dim: int = 1) -> "StochasticPath":
        """Path constant in time; value may be a scalar, per-state (m,), or (m, dim)."""
        value = np.asarray(value, dtype=float)
        if value.ndim == 0:
            block = np.full((space.m, dim), float(value))
        elif value.ndim == 1:
            block = np.repeat(value[:, None], dim, axis=1)
        else:
            block = value
        vals = np.broadcast_to(block, (domain.num_points, space.m, block.shape[1])).copy()
        return cls(domain, space, vals)


def _check_same_shape(a: StochasticPath, b: StochasticPath):
    if a.domain != b.domain or a.space != b.space or a.values.shape != b.values.shape:
        raise InputError("paths must share domain, sample space and dimension")


@dataclass(frozen=True)
class PerturbationCurve(StochasticPath):
    """Perturbation q(t,w)/p(t,w) with validated head and tail structure.

    vanishing_head = k means the first k values (discrete) or derivatives
    (continuous, checked on the grid within 10*h) at t=0 are zero.  The tail is
    either eventually constant from tail_onset on, compactly supported beyond
    tail_onset, or unstructured (tail_kind None).
    """

    vanishing_head: int = 0
    tail_kind: str | None = None  # "eventually-constant" | "compact-support" | None
    tail_onset: float | None = None
    tail_value: np.ndarray | None = None  # (m, dim), for eventually-constant

    def __post_init__(self):
        super().__post_init__()
        self._check_head()
        self._check_tail()

    def _check_head(self):
        k = self.vanishing_head
        if k < 0:
            raise InputError("vanishing_head must be >= 0")
        if k == 0:
            return
        if self.domain.kind == "discrete":
            if np.any(self.values[:k] != 0.0):
                raise InputError(f"first {k} values must be exactly zero (vanishing_head={k})")
        else:
            tol = 10.0 * self.domain.h
            deriv = self.values
            for j in range(k):
                if np.abs(deriv[0]).max() > tol:
                    raise InputError(
                        f"derivative of order {j} at t=0 exceeds the grid tolerance {tol}")
                deriv = np.gradient(deriv, self.domain.h, axis=0, edge_order=2)

    def _check_tail(self):
        if self.tail_kind is None:
            return
        if self.tail_onset is None:
            raise InputError("structured tails need a tail_onset time")
        start = self.domain.index_of(self.tail_onset)
        if self.tail_kind == "eventually-constant":
            if self.tail_value is None:
                raise InputError("eventually-constant tails need a tail_value")
            tv = np.asarray(self.tail_value, dtype=float)
            if tv.ndim == 1:
                tv = tv[:, None]
            object.__setattr__(self, "tail_value", tv)
            if np.any(self.values[start:] != tv[None]):
                raise InputError("values must equal the tail value exactly for t >= tail_onset")
        elif self.tail_kind == "compact-support":
            if np.any(self.values[start + 1 :] != 0.0):
                raise InputError("values must be exactly zero beyond the cutoff time")
        else:
            raise InputError(f"unknown tail kind {self.tail_kind!r}")


def perturb(base: StochasticPath, curve: PerturbationCurve, eps: float) -> StochasticPath:
    """The perturbed path base + eps * curve, entry by entry."""
    _check_same_shape(base, curve)
    return StochasticPath(base.domain, base.space, base.values + eps * curve.values)


def time_derivative(path: StochasticPath, k: int) -> StochasticPath:
    """k-th time derivative on a continuous grid.

    Repeated central differences on the interior with second-order one-sided
    stencils at the two edges (O(h^2) on smooth data).
    """
    if path.domain.kind != "continuous":
        raise UnsupportedError("time derivatives are defined on continuous domains only")
    if k < 1:
        raise InputError("derivative order must be >= 1")
    if path.num_points < 2 * k + 1:
        raise InputError(f"need at least {2 * k + 1} grid points for a {k}-th derivative")
    vals = path.values
    for _ in range(k):
        vals = np.gradient(vals, path.domain.h, axis=0, edge_order=2)
    return StochasticPath(path.domain, path.space, vals)


def integrate_time(series: StochasticPath, up_to: float) -> np.ndarray:
    """Trapezoid integral of a dim-1 series over [0, up_to], per state; shape (m,)."""
    if series.domain.kind != "continuous":
        raise UnsupportedError("time integration is defined on continuous domains only")
    if series.dim != 1:
        raise InputError("integrate_time expects a dim-1 series")
    idx = series.domain.index_of(up_to)
    return np.trapezoid(series.values[: idx + 1, :, 0], dx=series.domain.h, axis=0)


def window(path: StochasticPath, t: int, n: int) -> np.ndarray:
    """Module-level alias for StochasticPath.window."""
    return path.window(t, n)


# ---------------------------------------------------------------------------
# Curve constructors

def smoothstep_quintic(tau):
    """6 tau^5 - 15 tau^4 + 10 tau^3 on [0,1]: value and first two derivatives vanish at 0."""
    tau = np.clip(tau, 0.0, 1.0)
    return tau**3 * (10.0 + tau * (-15.0 + 6.0 * tau))


def eventually_constant_curve(domain: TimeDomain, space: SampleSpace,
                              onset: int, value, dim: int = 1) -> PerturbationCurve:
    """Discrete curve: zero before onset, constant value from onset on."""
    if domain.kind != "discrete":
        raise UnsupportedError("use quintic_ramp_curve on continuous domains")
    block = np.asarray(value, dtype=float)
    if block.ndim == 0:
        block = np.full((space.m, dim), float(block))
    elif block.ndim == 1:
        block = np.repeat(block[:, None], dim, axis=1)
    vals = np.zeros((domain.num_points, space.m, block.shape[1]))
    vals[onset:] = block
    return PerturbationCurve(domain, space, vals, vanishing_head=onset,
                             tail_kind="eventually-constant", tail_onset=onset,
                             tail_value=block)


def compact_support_curve(domain: TimeDomain, space: SampleSpace,
                          onset: int, cutoff: int, value, dim: int = 1) -> PerturbationCurve:
    """Discrete curve: constant value on [onset, cutoff], zero outside."""
    if domain.kind != "discrete":
        raise UnsupportedError("compact_support_curve is discrete-only")
    if not (0 <= onset <= cutoff <= domain.t_max):
        raise InputError("need 0 <= onset <= cutoff <= t_max")
    block = np.asarray(value, dtype=float)
    if block.ndim == 0:
        block = np.full((space.m, dim), float(block))
    elif block.ndim == 1:
        block = np.repeat(block[:, None], dim, axis=1)
    vals = np.zeros((domain.num_points, space.m, block.shape[1]))
    vals[onset : cutoff + 1] = block
    return PerturbationCurve(domain, space, vals, vanishing_head=onset,
                             tail_kind="compact-support", tail_onset=cutoff)


def quintic_ramp_curve(domain: TimeDomain, space: SampleSpace,
                       target, ramp_end: float = 1.0, dim: int = 1,
                       vanishing_head: int = 2) -> PerturbationCurve:
    """Continuous curve ramping smoothly from 0 to a constant target by ramp_end.

    The quintic smoothstep leaves the value and the first two derivatives zero
    at t=0.  The grid-level head check is only trustworthy through first
    derivatives, so the default validated head order is 2.
    """
    if domain.kind != "continuous":
        raise UnsupportedError("quintic_ramp_curve is continuous-only")
    block = np.asarray(target, dtype=float)
    if block.ndim == 0:
        block = np.full((space.m, dim), float(block))
    elif block.ndim == 1:
        block = np.repeat(block[:, None], dim, axis=1)
    ramp = smoothstep_quintic(domain.times() / ramp_end)
    vals = ramp[:, None, None] * block[None]
    return PerturbationCurve(domain, space, vals, vanishing_head=vanishing_head,
                             tail_kind="eventually-constant", tail_onset=ramp_end,
                             tail_value=block)


def zero_curve(domain: TimeDomain, space: SampleSpace, dim: int = 1) -> PerturbationCurve:
    vals = np.zeros((domain.num_points, space.m, dim))
    return PerturbationCurve(domain, space, vals, vanishing_head=0)
