"""Semi-implicit two-step time integration with positivity enforcement.

Scheme (SBDF2): (3 y+ - 4 y + y-) / (2 dt) = A y+ + 2 N(y) - N(y-), with

* u: A = D_u * lap (implicit tridiagonal solve); N = taxis divergence plus
  the growth term delta * f_eps(u) * w (explicit);
* w: A = D_w * lap - diag(beta f_eps(u*) + gamma v*) with (u*, v*) the
  second-order extrapolants — the implicit sink makes its contribution
  unconditionally positivity-friendly; N = 0;
* v: exact nodal exponential v+ = v * exp(alpha dt (w + w+)/2) — strictly
  positive and second-order, independent of stiffness.

The first step of a run, and the first step after any dt change, is a
backward-Euler (SBDF1) rebuild; dt is otherwise constant between changes.
Positivity failures reject the step and halve dt (bounded by max_retries and
dt_min).  Step-size caps and the snap-to-zero of the decaying nutrient are
documented in :mod:`nutaxis.kernels`.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional

import numpy as np

from . import kernels
from .grid import Grid
from .model import ModelParams, f_eps
from .profiles import State

__all__ = [
    "StepperConfig",
    "History",
    "AdvanceStats",
    "AdvanceResult",
    "PositivityViolation",
    "LinearSolveFailure",
    "cfl_dt",
    "step",
    "advance",
]


class PositivityViolation(RuntimeError):
    """A field left its positive cone and dt could not be reduced further."""

    def __init__(self, fieldname: str, cell: int, t: float):
        self.field = fieldname
        self.cell = cell
        self.t = t
        super().__init__(
            f"positivity violation in {fieldname!r} at cell {cell}, t = {t:.6g}")


class LinearSolveFailure(RuntimeError):
    """The banded system was singular (cannot occur for dt > 0; internal)."""


@dataclass(frozen=True)
class StepperConfig:
    """Time-stepping policy.

    Attributes:
        dt: base (largest allowed) time step.
        dt_min: smallest step the rejection loop may fall to.
        cfl_safety: safety factor in (0, 1] for the chemotaxis CFL cap.
        positivity_floor: u-rejection threshold (u+ <= floor rejects).
        max_retries: rejection halvings allowed per step.
        scheme: "sbdf2" (default) or "sbdf1" (first-order throughout).
        flux: "upwind" (positivity-preserving) or "central" (second-order,
            for convergence studies).
        sink_dt_cap: bound on dt * max(nutrient sink rate); 0.45 keeps the
            two-step decay over-damped (real roots need dt * rate <= 0.5).
        source_dt_cap: bound on dt * max(delta, alpha) * max w.
        w_snap_rel: snap-to-zero floor for w, relative to the initial max.
    """

    dt: float = 0.25
    dt_min: float = 1e-12
    cfl_safety: float = 0.5
    positivity_floor: float = 1e-14
    max_retries: int = 12
    scheme: str = "sbdf2"
    flux: str = "upwind"
    sink_dt_cap: float = 0.45
    source_dt_cap: float = 0.45
    w_snap_rel: float = 1e-250

    def __post_init__(self) -> None:
        if not (0.0 < self.dt_min <= self.dt):
            raise ValueError(f"need 0 < dt_min <= dt, got {self.dt_min}, {self.dt}")
        if not (0.0 < self.cfl_safety <= 1.0):
            raise ValueError(f"cfl_safety must be in (0, 1], got {self.cfl_safety}")
        if self.scheme not in ("sbdf2", "sbdf1"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.flux not in ("upwind", "central"):
            raise ValueError(f"unknown flux {self.flux!r}")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


@dataclass
class History:
    """Previous accepted level and its explicit terms (two-step bookkeeping).

    ``dt`` is the gap between the stored level and the current state;
    ``valid`` is False before the first accepted step.  ``w_snap`` is the
    absolute snap-to-zero floor, anchored to the run's initial max w so that
    later segments keep the same floor.
    """

    u: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)
    n_u: np.ndarray = field(repr=False)
    dt: float = 0.0
    valid: bool = False
    w_snap: float = 0.0

    @classmethod
    def fresh(cls, n: int) -> "History":
        z = np.zeros(n)
        return cls(u=z.copy(), v=z.copy(), w=z.copy(), n_u=z.copy())

    def copy(self) -> "History":
        return History(self.u.copy(), self.v.copy(), self.w.copy(),
                       self.n_u.copy(), self.dt, self.valid, self.w_snap)


@dataclass
class AdvanceStats:
    """Accumulated step statistics for one or more advance calls."""

    accepted: int = 0
    rejected: int = 0
    rebuilds: int = 0  # backward-Euler (re)start steps taken
    min_dt: float = np.inf
    backend: str = ""

    def merge(self, accepted: int, rejected: int, rebuilds: int, min_dt: float) -> None:
        self.accepted += accepted
        self.rejected += rejected
        self.rebuilds += rebuilds
        self.min_dt = min(self.min_dt, min_dt)


@dataclass
class AdvanceResult:
    state: State
    history: History
    stats: AdvanceStats


def _grid_pack(grid: Grid):
    """Per-grid coupling coefficients for the implicit operators."""
    n = grid.n
    af = grid.face_areas
    cl = np.zeros(n)
    cr = np.zeros(n)
    cl[1:] = af[1:-1] / (grid.h * grid.m[1:])
    cr[:-1] = af[1:-1] / (grid.h * grid.m[:-1])
    return grid.m, cl, cr, af, grid.h


def cfl_dt(state: State, params: ModelParams, grid: Grid,
           cfg: StepperConfig) -> float:
    """Chemotaxis CFL cap: cfl_safety * h / max_faces(chi |grad w|).

    The mobility derivative bound f_eps' <= 1 is used, so the cap is valid
    for every eps.  Returns cfg.dt when there is no advection limit.
    """
    if params.chi <= 0.0 or grid.n < 2:
        return cfg.dt
    gmax = params.chi * float(np.max(np.abs(np.diff(state.w)))) / grid.h
    if gmax <= 0.0:
        return cfg.dt
    return min(cfg.dt, cfg.cfl_safety * grid.h / gmax)


def step(state: State, history: Optional[History], params: ModelParams,
         grid: Grid, cfg: StepperConfig) -> tuple[State, History]:
    """One accepted step of size cfg.dt (SBDF2, or SBDF1 when rebuilding).

    The reference single-step entry point: applies no step-size caps, only
    the positivity rejection loop (halving dt up to max_retries, not below
    dt_min).  ``history=None`` or a dt mismatch triggers a backward-Euler
    rebuild.  Returns the new state and the updated history.

    Raises:
        PositivityViolation: if halving cannot restore positivity.
        LinearSolveFailure: if a tridiagonal system is singular (internal).
    """
    n = grid.n
    if history is None:
        history = History.fresh(n)
        history.w_snap = cfg.w_snap_rel * float(np.max(state.w, initial=0.0))
    m, cl, cr, af, h = _grid_pack(grid)
    upwind = 1 if cfg.flux == "upwind" else 0
    dt = cfg.dt
    retries = 0
    while True:
        sbdf2 = (cfg.scheme == "sbdf2") and history.valid and history.dt == dt
        if sbdf2:
            us = np.maximum(2.0 * state.u - history.u, 0.0)
            vs = 2.0 * state.v - history.v
        else:
            us, vs = state.u, state.v
        sink = params.beta * f_eps(us, params.eps_reg) + params.gamma * vs
        status, cell, un, vn, wn, nn = kernels.attempt_step_numpy(
            state.u, state.v, state.w, history.u, history.w, history.n_u,
            us, vs, sink, sbdf2, dt, m, cl, cr, af, h,
            params.D_u, params.D_w, params.chi, params.alpha, params.delta,
            params.eps_reg, cfg.positivity_floor, history.w_snap, upwind)
        if status == kernels.STATUS_OK:
            new_hist = History(state.u.copy(), state.v.copy(), state.w.copy(),
                               nn, dt, True, history.w_snap)
            return State(state.t + dt, un, vn, wn), new_hist
        if status == kernels.STATUS_SINGULAR:
            raise LinearSolveFailure(f"singular tridiagonal system at t = {state.t:.6g}")
        retries += 1
        if retries > cfg.max_retries or 0.5 * dt < cfg.dt_min:
            fieldname = "u" if status == kernels.STATUS_U_POSITIVITY else "w"
            raise PositivityViolation(fieldname, cell, state.t)
        dt *= 0.5


def advance(state: State, grid: Grid, params: ModelParams, cfg: StepperConfig,
            t_end: float,
            observe_times: Optional[Iterable[float]] = None,
            observer: Optional[Callable[[State], None]] = None,
            history: Optional[History] = None,
            backend: Optional[str] = None) -> AdvanceResult:
    """Advance the state to ``t_end``, landing exactly on every observe time.

    ``observe_times`` must lie in ``(state.t, t_end]``; ``observer(state)``
    is called each time one is reached.  The returned history can be threaded
    into a subsequent call, making two half-horizon advances bitwise
    identical to one full advance when no step-size adaptation intervenes.

    Raises:
        ValueError: if t_end < state.t or observe times are out of range.
        PositivityViolation / LinearSolveFailure: from the stepping kernel,
            with the failing segment time attached.
    """
    if t_end < state.t:
        raise ValueError(f"t_end = {t_end} is before state.t = {state.t}")
    name, runner = kernels.get_segment_runner(backend)
    stats = AdvanceStats(backend=name)
    if history is None:
        history = History.fresh(grid.n)
        history.w_snap = cfg.w_snap_rel * float(np.max(state.w, initial=0.0))
    if t_end == state.t:
        return AdvanceResult(state, history, stats)

    targets = []
    if observe_times is not None:
        targets = [float(t) for t in observe_times]
        if any(t <= state.t or t > t_end for t in targets):
            raise ValueError("observe times must lie in (state.t, t_end]")
        if sorted(targets) != targets:
            raise ValueError("observe times must be sorted")
    full = targets + ([t_end] if (not targets or targets[-1] < t_end) else [])

    m, cl, cr, af, h = _grid_pack(grid)
    hmeta = np.array([history.dt, 1.0 if history.valid else 0.0, history.w_snap])
    upwind = 1 if cfg.flux == "upwind" else 0
    scheme2 = 1 if cfg.scheme == "sbdf2" else 0

    for tt in full:
        rem = tt - state.t
        if rem > 0.0:
            status, cell, acc, rej, reb, mdt = runner(
                state.u, state.v, state.w,
                history.u, history.v, history.w, history.n_u, hmeta, rem,
                m, cl, cr, af, h,
                params.D_u, params.D_w, params.chi, params.alpha, params.beta,
                params.gamma, params.delta, params.eps_reg,
                cfg.dt, cfg.dt_min, cfg.cfl_safety, cfg.positivity_floor,
                cfg.max_retries, cfg.sink_dt_cap, cfg.source_dt_cap,
                scheme2, upwind)
            stats.merge(int(acc), int(rej), int(reb), float(mdt))
            if status != kernels.STATUS_OK:
                t_fail = state.t  # segment start; exact failure t is interior
                if status == kernels.STATUS_SINGULAR:
                    raise LinearSolveFailure(
                        f"singular tridiagonal system in segment starting t = {t_fail:.6g}")
                fieldname = "u" if status == kernels.STATUS_U_POSITIVITY else "w"
                raise PositivityViolation(fieldname, int(cell), t_fail)
            state.t = tt
        if observer is not None and targets and tt in targets:
            observer(state)

    history.dt = float(hmeta[0])
    history.valid = hmeta[1] > 0.5
    history.w_snap = float(hmeta[2])
    return AdvanceResult(state, history, stats)
