"""Event-detecting integration and Filippov concatenation.

Smooth arcs are integrated with an adaptive embedded Runge-Kutta pair
(scipy's solve_ivp) whose dense output localizes event times; terminal
events are the switching plane h = x - y, the domain boundary (a coordinate
reaching zero), and a norm bound.  Sliding arcs integrate the closed-form
sliding field with fold-exit and focus-capture events.  The Filippov
concatenator stitches smooth and sliding arcs per the convex-combination
convention: trajectories entering the sliding region follow the sliding
field until the visible fold hands them back to X.

Launches that start exactly on a tangency (fold points, and the cusp) use an
armed event: the switching event is ignored until its function first exceeds
the event tolerance on the departing side, so the initial contact is never
mistaken for a return.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    BlowUp,
    ChatteringGuard,
    DomainError,
    NoReturn,
    PreySwitchError,
    StepFailure,
)
from .model import Parameters, Piece, RegionLabel, classify_sigma_point
from .sliding import _coefficients, pseudo_equilibria


class Direction(Enum):
    FORWARD = 1
    BACKWARD = -1


class ArcKind(Enum):
    SMOOTH_X = "SmoothX"
    SMOOTH_Y = "SmoothY"
    SLIDING = "Sliding"


class EventKind(Enum):
    SIGMA_CROSSING = "SigmaCrossing"
    SIGMA_ENTRY_SLIDING = "SigmaEntrySliding"
    FOLD_EXIT = "FoldExit"
    FOCUS_CAPTURE = "FocusCapture"
    DOMAIN_EXIT = "DomainExit"
    HORIZON_REACHED = "HorizonReached"


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and horizon for all integrations.

    ``max_step`` of None resolves to 0.01 times the characteristic time
    2*pi/sqrt(m*r1) of the planar center.  All fields must be positive and
    ``event_tol`` may not exceed 100 * ``abs_tol``.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    event_tol: float = 1e-12
    max_step: float | None = None
    t_max: float = 400.0
    method: str = "DOP853"
    norm_bound: float = 1e6

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "event_tol", "t_max", "norm_bound"):
            if getattr(self, name) <= 0.0:
                raise DomainError(f"IntegratorConfig.{name} must be positive")
        if self.max_step is not None and self.max_step <= 0.0:
            raise DomainError("IntegratorConfig.max_step must be positive")
        if self.event_tol > 100.0 * self.abs_tol:
            raise DomainError("event_tol must not exceed 100 * abs_tol")

    def halved(self) -> "IntegratorConfig":
        """A copy with both integration tolerances halved (for cross-checks)."""
        return replace(self, rel_tol=self.rel_tol / 2.0, abs_tol=self.abs_tol / 2.0)


@dataclass(frozen=True)
class EventRecord:
    kind: EventKind
    t: float
    state: np.ndarray


@dataclass(frozen=True)
class Arc:
    """One piece of a Filippov trajectory under a single vector field.

    ``states`` rows are (x, y, z) for smooth arcs and (x, z) for sliding
    arcs (embedded in Sigma as (x, x, z)); planar arcs of the restricted
    Lotka-Volterra field also store (x, z), living in the plane y = 0.
    ``ts`` is strictly increasing for forward arcs and strictly decreasing
    for backward arcs.
    """

    kind: ArcKind
    t0: float
    t1: float
    ts: np.ndarray
    states: np.ndarray
    terminal_event: EventRecord

    @property
    def samples(self) -> list[tuple[float, np.ndarray]]:
        return [(float(t), self.states[i]) for i, t in enumerate(self.ts)]

    @property
    def planar(self) -> bool:
        return self.states.shape[1] == 2


@dataclass(frozen=True)
class Trajectory:
    initial: np.ndarray
    arcs: tuple[Arc, ...]

    def events(self) -> list[EventRecord]:
        return [a.terminal_event for a in self.arcs]


def characteristic_time(params: Parameters) -> float:
    """Linearized period of the planar center, 2*pi/sqrt(m*r1)."""
    return 2.0 * math.pi / math.sqrt(params.m * params.r1)


def _resolve_max_step(cfg: IntegratorConfig, params: Parameters) -> float:
    if cfg.max_step is not None:
        return cfg.max_step
    return 0.01 * characteristic_time(params)


def _fold_launch_max_step(base: float, params: Parameters, x0: float) -> float:
    """Step cap for launches tangent to Sigma at a fold point.

    Near the cusp the lift-off excursion lasts about 3*(tau - x0)/(r2*tau)
    and its h-peak is quadratically small, so steps must sample inside the
    excursion or the armed switching event never arms.
    """
    tau = params.tau
    if not 0.0 < x0 < tau:
        return base
    t_exc = 3.0 * (tau - x0) / (params.r2 * tau)
    return min(base, max(t_exc / 16.0, 1e-9))


def _smooth_rhs(piece: Piece, params: Parameters, sgn: float):
    r1, r2, m = params.r1, params.r2, params.m
    eq1 = params.e * params.q1
    if piece is Piece.X:

        def f(t, s):
            x, y, z = s
            return [sgn * (r1 - z) * x, sgn * r2 * y, sgn * (eq1 * x - m) * z]

        return f
    if piece is Piece.Y:
        ratio = params.beta2 / params.beta1
        eq2a = params.e * params.q2 / params.a_q

        def f(t, s):
            x, y, z = s
            return [sgn * r1 * x, sgn * (r2 - ratio * z) * y, sgn * (eq2a * y - m) * z]

        return f
    if piece is Piece.PLANAR_LV:

        def f(t, s):
            x, z = s
            return [sgn * (r1 - z) * x, sgn * (eq1 * x - m) * z]

        return f
    raise ValueError(f"unknown piece: {piece!r}")


def _sliding_rhs(params: Parameters, sgn: float):
    R, B, K, C = _coefficients(params)
    m = params.m

    def f(t, s):
        x, z = s
        return [sgn * x * (R - B * z), sgn * (-K * x - m * z + C * x * z)]

    return f


def _terminal(g, direction: float):
    g.terminal = True
    g.direction = direction
    return g


def _armed_scalar_event(value_fn, departing_sign: float, event_tol: float):
    """Terminal event ignored until value_fn leaves 0 on the departing side.

    Returns ``departing_sign`` as a sentinel while unarmed, so no sign change
    can fire before the trajectory has separated by more than ``event_tol``.
    """
    armed = [False]

    def g(t, s):
        v = value_fn(s)
        if not armed[0]:
            if v * departing_sign > event_tol:
                armed[0] = True
            else:
                return departing_sign
        return v

    g.armed = armed
    return _terminal(g, -departing_sign)


def _domain_events(s0: np.ndarray, event_tol: float) -> list:
    """One terminal zero-crossing event per coordinate not starting at zero.

    Coordinates starting at (numerical) zero lie on an invariant plane and
    stay exactly zero, so watching them would fire spuriously every step.
    """
    events = []
    for i, v in enumerate(s0):
        if v > event_tol:

            def g(t, s, i=i):
                return s[i]

            events.append(_terminal(g, -1.0))
    return events


def _blowup_event(norm_bound: float):
    b2 = norm_bound * norm_bound

    def g(t, s):
        return b2 - float(np.dot(s, s))

    return _terminal(g, -1.0)


def _run(
    f,
    s0,
    cfg: IntegratorConfig,
    params: Parameters,
    events,
    horizon: float,
    max_step: float | None = None,
):
    step = max_step if max_step is not None else _resolve_max_step(cfg, params)
    sol = solve_ivp(
        f,
        (0.0, horizon),
        s0,
        method=cfg.method,
        events=events,
        rtol=cfg.rel_tol,
        atol=cfg.abs_tol,
        max_step=step,
        first_step=min(step / 4.0, horizon / 2.0),
    )
    if sol.status == -1:
        raise StepFailure(sol.message)
    return sol


def _first_event(sol) -> tuple[int, float, np.ndarray] | None:
    """Index, time and state of the earliest fired event, if any."""
    best = None
    for i, te in enumerate(sol.t_events):
        if len(te):
            if best is None or te[0] < best[1]:
                best = (i, float(te[0]), np.array(sol.y_events[i][0]))
    return best


def _snap_sigma(state: np.ndarray) -> np.ndarray:
    xm = 0.5 * (state[0] + state[1])
    return np.array([xm, xm, state[2]])


def integrate_smooth(
    piece: Piece,
    s0,
    direction: Direction,
    cfg: IntegratorConfig,
    params: Parameters,
    skip_initial_tangency: bool = False,
    t_start: float = 0.0,
) -> Arc:
    """Integrate one smooth piece until the first event or the horizon.

    For the 3D pieces the switching plane h = x - y is monitored (falling
    through zero for X, rising for Y); all pieces monitor the domain
    boundary and the norm bound.  ``skip_initial_tangency`` arms the
    switching event only after h exceeds the event tolerance, for launches
    from fold points where h and its rate vanish initially.
    """
    s0 = np.asarray(s0, dtype=float)
    dim = 2 if piece is Piece.PLANAR_LV else 3
    if s0.shape != (dim,):
        raise DomainError(f"{piece.value} expects a state of dimension {dim}")
    sgn = 1.0 if direction is Direction.FORWARD else -1.0

    events: list = []
    sigma_index = None
    if piece in (Piece.X, Piece.Y):
        h0 = s0[0] - s0[1]
        side = 1.0 if piece is Piece.X else -1.0
        if h0 * side < -cfg.event_tol:
            raise DomainError(
                f"initial state is on the wrong side of Sigma for {piece.value}: h = {h0}"
            )
        if skip_initial_tangency:
            ev = _armed_scalar_event(lambda s: s[0] - s[1], side, cfg.event_tol)
        else:
            ev = _terminal(lambda t, s: s[0] - s[1], -side)
        sigma_index = 0
        events.append(ev)
    events.extend(_domain_events(s0, cfg.event_tol))
    blow_index = len(events)
    events.append(_blowup_event(cfg.norm_bound))

    max_step = _resolve_max_step(cfg, params)
    if skip_initial_tangency and piece is Piece.X:
        max_step = _fold_launch_max_step(max_step, params, float(s0[0]))

    sol = _run(_smooth_rhs(piece, params, sgn), s0, cfg, params, events, cfg.t_max, max_step=max_step)

    kind = {Piece.X: ArcKind.SMOOTH_X, Piece.Y: ArcKind.SMOOTH_Y, Piece.PLANAR_LV: ArcKind.SMOOTH_X}[piece]
    ts = t_start + sgn * sol.t
    states = sol.y.T.copy()

    hit = _first_event(sol)
    if hit is None:
        record = EventRecord(EventKind.HORIZON_REACHED, float(ts[-1]), states[-1].copy())
    else:
        idx, te, ye = hit
        t_ev = t_start + sgn * te
        if idx == blow_index:
            raise BlowUp(f"state norm exceeded {cfg.norm_bound} at t = {t_ev}")
        if idx == sigma_index:
            record = EventRecord(EventKind.SIGMA_CROSSING, t_ev, _snap_sigma(ye))
        else:
            record = EventRecord(EventKind.DOMAIN_EXIT, t_ev, ye)
    return Arc(
        kind=kind,
        t0=t_start,
        t1=float(ts[-1]),
        ts=ts,
        states=states,
        terminal_event=record,
    )


def integrate_sliding(
    p0,
    direction: Direction,
    cfg: IntegratorConfig,
    params: Parameters,
    focus_capture_radius: float = 1e-4,
    t_start: float = 0.0,
) -> Arc:
    """Integrate the sliding field from a point of the closed sliding region.

    Terminal events: FOLD_EXIT when z falls through phi (the visible fold,
    where the flow hands off to X), FOCUS_CAPTURE when the distance to the
    interior pseudo-equilibrium drops below ``focus_capture_radius`` (a
    radius of zero disables capture), DOMAIN_EXIT and the horizon.
    Starting on the fold line is allowed: if the flow points out of the
    region the arc is an immediate fold exit, otherwise the fold event is
    armed after separation.
    """
    p0 = np.asarray(p0, dtype=float)
    if p0.shape != (2,):
        raise DomainError("sliding state must be (x, z)")
    if focus_capture_radius < 0.0:
        raise DomainError("focus_capture_radius must be nonnegative")
    phi = params.phi
    if p0[0] <= 0.0:
        raise DomainError(f"sliding requires x > 0, got x = {p0[0]}")
    if p0[1] < phi - cfg.event_tol:
        raise DomainError(f"sliding requires z >= phi = {phi}, got z = {p0[1]}")
    sgn = 1.0 if direction is Direction.FORWARD else -1.0
    _, focus = pseudo_equilibria(params)
    fx, fz = focus.x, focus.z

    dist0 = math.hypot(p0[0] - fx, p0[1] - fz)
    if dist0 <= focus_capture_radius:
        record = EventRecord(EventKind.FOCUS_CAPTURE, t_start, p0.copy())
        return Arc(ArcKind.SLIDING, t_start, t_start, np.array([t_start]), p0[None, :].copy(), record)

    f = _sliding_rhs(params, sgn)
    on_fold = p0[1] - phi <= cfg.event_tol
    rate0 = f(0.0, p0)
    # at the cusp the z-rate is analytically zero; a roundoff-scale residue
    # must not be mistaken for an outgoing flow
    if on_fold and rate0[1] < -1e-10 * max(1.0, abs(rate0[0])):
        snapped = np.array([p0[0], phi])
        record = EventRecord(EventKind.FOLD_EXIT, t_start, snapped)
        return Arc(ArcKind.SLIDING, t_start, t_start, np.array([t_start]), snapped[None, :], record)

    events: list = []
    if on_fold:
        fold_ev = _armed_scalar_event(lambda s: s[1] - phi, 1.0, cfg.event_tol)
    else:
        fold_ev = _terminal(lambda t, s: s[1] - phi, -1.0)
    events.append(fold_ev)

    def g_capture(t, s):
        return math.hypot(s[0] - fx, s[1] - fz) - focus_capture_radius

    events.append(_terminal(g_capture, -1.0))
    events.extend(_domain_events(p0, cfg.event_tol))
    blow_index = len(events)
    events.append(_blowup_event(cfg.norm_bound))

    sol = _run(f, p0, cfg, params, events, cfg.t_max)
    ts = t_start + sgn * sol.t
    states = sol.y.T.copy()

    hit = _first_event(sol)
    if hit is None:
        record = EventRecord(EventKind.HORIZON_REACHED, float(ts[-1]), states[-1].copy())
    else:
        idx, te, ye = hit
        t_ev = t_start + sgn * te
        if idx == blow_index:
            raise BlowUp(f"state norm exceeded {cfg.norm_bound} at t = {t_ev}")
        elif idx == 0:
            record = EventRecord(EventKind.FOLD_EXIT, t_ev, np.array([ye[0], phi]))
        elif idx == 1:
            record = EventRecord(EventKind.FOCUS_CAPTURE, t_ev, ye)
        else:
            record = EventRecord(EventKind.DOMAIN_EXIT, t_ev, ye)
    return Arc(
        kind=ArcKind.SLIDING,
        t0=t_start,
        t1=float(ts[-1]),
        ts=ts,
        states=states,
        terminal_event=record,
    )


_SLIDING_LABELS = (RegionLabel.SLIDING,)
_FOLD_LABELS = (RegionLabel.VISIBLE_FOLD, RegionLabel.CUSP)


def integrate_filippov(
    s0,
    cfg: IntegratorConfig,
    params: Parameters,
    focus_capture_radius: float = 1e-4,
    max_arcs: int = 10_000,
) -> Trajectory:
    """Forward Filippov trajectory from s0 as a concatenation of arcs.

    In h > 0 the flow follows X, in h < 0 it follows Y.  A hit on Sigma is
    classified: crossing points hand over to the other piece, sliding
    points start a sliding arc that ends at a fold exit, after which X
    resumes from the fold point.  Terminates at the horizon, on domain
    exit, or on focus capture.  Raises :class:`ChatteringGuard` when
    switching events accumulate faster than the event tolerance resolves.
    """
    s = np.asarray(s0, dtype=float)
    if s.shape != (3,):
        raise DomainError("Filippov initial state must be (x, y, z)")
    initial = s.copy()
    arcs: list[Arc] = []
    t = 0.0
    sigma_times: list[float] = []
    skip_tangency = False

    def note_sigma_event(te: float):
        sigma_times.append(te)
        if len(sigma_times) >= 50 and te - sigma_times[-50] <= 10.0 * cfg.event_tol:
            raise ChatteringGuard(
                f"50 switching events within {10.0 * cfg.event_tol} time units near t = {te}"
            )

    while len(arcs) < max_arcs:
        remaining = cfg.t_max - t
        if remaining <= cfg.event_tol:
            break
        sub = replace(cfg, t_max=remaining)
        h = s[0] - s[1]

        if abs(h) <= cfg.event_tol:
            xm = 0.5 * (s[0] + s[1])
            label = classify_sigma_point((xm, s[2]), params, tol=cfg.event_tol)
            if label is RegionLabel.ORIGIN_LINE:
                raise DomainError("trajectory reached the origin line of Sigma")
            if label in _SLIDING_LABELS or (
                label in _FOLD_LABELS and _sliding_rhs(params, 1.0)(0.0, (xm, s[2]))[1] > 0.0
            ):
                arc = integrate_sliding(
                    (xm, s[2]), Direction.FORWARD, sub, params, focus_capture_radius, t_start=t
                )
                arcs.append(arc)
                ev = arc.terminal_event
                if ev.kind is EventKind.FOLD_EXIT:
                    note_sigma_event(ev.t)
                    s = np.array([ev.state[0], ev.state[0], params.phi])
                    t = ev.t
                    skip_tangency = True
                    continue
                break
            piece = Piece.X
            skip = skip_tangency or label in _FOLD_LABELS
        else:
            piece = Piece.X if h > 0 else Piece.Y
            skip = skip_tangency
        skip_tangency = False

        arc = integrate_smooth(piece, s, Direction.FORWARD, sub, params, skip_initial_tangency=skip, t_start=t)
        ev = arc.terminal_event
        if ev.kind is not EventKind.SIGMA_CROSSING:
            arcs.append(arc)
            break

        note_sigma_event(ev.t)
        xm = ev.state[0]
        label = classify_sigma_point((xm, ev.state[2]), params, tol=cfg.event_tol)
        if label is RegionLabel.CROSSING or (label is RegionLabel.BOUNDARY and ev.state[2] < params.phi):
            arcs.append(arc)
            s = ev.state.copy()
            t = ev.t
            continue
        if label is RegionLabel.ORIGIN_LINE:
            arcs.append(replace(arc, terminal_event=EventRecord(EventKind.DOMAIN_EXIT, ev.t, ev.state)))
            break
        relabeled = EventRecord(EventKind.SIGMA_ENTRY_SLIDING, ev.t, ev.state)
        arcs.append(replace(arc, terminal_event=relabeled))
        s = ev.state.copy()
        t = ev.t
    else:
        raise PreySwitchError(f"trajectory exceeded {max_arcs} arcs")

    return Trajectory(initial=initial, arcs=tuple(arcs))


def lv_period(x0: float, cfg: IntegratorConfig, params: Parameters) -> float:
    """Period of the planar Lotka-Volterra orbit through (x0, r1).

    The orbit leaves the section z = r1 downward, recrosses it upward on the
    far side of the center, and the next downward crossing closes the loop.
    Raises :class:`NoReturn` if either crossing is missing within the
    horizon.
    """
    x0 = float(x0)
    tau = params.tau
    if not 0.0 < x0 < tau:
        raise DomainError(f"lv_period requires 0 < x0 < tau = {tau}, got {x0}")
    r1 = params.r1
    f = _smooth_rhs(Piece.PLANAR_LV, params, 1.0)

    up = _terminal(lambda t, s: s[1] - r1, 1.0)
    sol1 = _run(f, np.array([x0, r1]), cfg, params, [up], cfg.t_max)
    if not len(sol1.t_events[0]):
        raise NoReturn(f"no upward recrossing of z = r1 within t_max = {cfg.t_max}")
    t_up = float(sol1.t_events[0][0])
    s_up = np.array(sol1.y_events[0][0])

    down = _terminal(lambda t, s: s[1] - r1, -1.0)
    sol2 = _run(f, s_up, cfg, params, [down], cfg.t_max - t_up)
    if not len(sol2.t_events[0]):
        raise NoReturn(f"no closing crossing of z = r1 within t_max = {cfg.t_max}")
    return t_up + float(sol2.t_events[0][0])


def trajectory_rows(traj: Trajectory) -> list[tuple[float, float, float, float, str, int]]:
    """Flatten a trajectory to (t, x, y, z, arc_kind, arc_index) rows.

    Sliding samples are embedded in Sigma as (x, x, z); planar samples live
    in the invariant plane y = 0.
    """
    rows = []
    for i, arc in enumerate(traj.arcs):
        for t, state in arc.samples:
            if arc.states.shape[1] == 2:
                y = state[0] if arc.kind is ArcKind.SLIDING else 0.0
                row = (t, float(state[0]), float(y), float(state[1]), arc.kind.value, i)
            else:
                row = (t, float(state[0]), float(state[1]), float(state[2]), arc.kind.value, i)
            rows.append(row)
    return rows


def events_payload(traj: Trajectory) -> list[dict]:
    """Event log of a trajectory as JSON-ready dictionaries."""
    return [
        {"kind": ev.kind.value, "t": ev.t, "state": [float(v) for v in ev.state]}
        for ev in traj.events()
    ]
