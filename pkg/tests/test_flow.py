import math
from dataclasses import replace

import numpy as np
import pytest

from preyswitch import (
    ArcKind,
    BlowUp,
    Direction,
    DomainError,
    EventKind,
    IntegratorConfig,
    NoReturn,
    Piece,
    RegionLabel,
    characteristic_time,
    classify_sigma_point,
    eval_sliding,
    events_payload,
    first_integral_F,
    integrate_filippov,
    integrate_sliding,
    integrate_smooth,
    lv_period,
    mu_point,
    pseudo_equilibria,
)
from preyswitch.flow import trajectory_rows


def arc_gap(a, b):
    """Continuity gap between an arc's terminal event and the next arc's start."""
    ea, sb = a.terminal_event.state, b.states[0]
    if len(ea) == 3 and len(sb) == 2:
        return max(abs(ea[0] - sb[0]), abs(ea[2] - sb[1]))
    if len(ea) == 2 and len(sb) == 3:
        return max(abs(ea[0] - sb[0]), abs(ea[0] - sb[1]), abs(ea[1] - sb[2]))
    return float(np.max(np.abs(ea - sb)))


def test_config_validation():
    with pytest.raises(DomainError):
        IntegratorConfig(rel_tol=-1.0)
    with pytest.raises(DomainError):
        IntegratorConfig(event_tol=1e-6, abs_tol=1e-12)
    cfg = IntegratorConfig()
    assert cfg.event_tol <= 100.0 * cfg.abs_tol


def test_smooth_x_exponential_y_on_center_line(table1, cfg):
    tau, r1 = table1.tau, table1.r1
    arc = integrate_smooth(
        Piece.X, (tau, 1.0, r1), Direction.FORWARD, replace(cfg, t_max=5.0), table1
    )
    assert arc.kind is ArcKind.SMOOTH_X
    xs, ys, zs = arc.states.T
    assert np.max(np.abs(xs - tau)) < 1e-9
    assert np.max(np.abs(zs - r1)) < 1e-9
    exact = np.exp(table1.r2 * (arc.ts - arc.t0))
    assert np.max(np.abs(ys - exact) / exact) < 10.0 * cfg.rel_tol
    # the growing y eventually catches x = tau and the arc ends on Sigma
    ev = arc.terminal_event
    assert ev.kind is EventKind.SIGMA_CROSSING
    assert ev.t == pytest.approx(math.log(tau) / table1.r2, rel=1e-9)


def test_smooth_y_component_law_generic_arc(table1, cfg):
    arc = integrate_smooth(
        Piece.X, (0.9, 0.5, 0.9), Direction.FORWARD, replace(cfg, t_max=6.0), table1
    )
    y0 = arc.states[0, 1]
    exact = y0 * np.exp(table1.r2 * (arc.ts - arc.t0))
    assert np.max(np.abs(arc.states[:, 1] - exact) / exact) < 10.0 * cfg.rel_tol


def test_smooth_arc_near_sigma_terminates_on_crossing(table1, cfg):
    x0 = 0.5 * table1.tau
    delta = 1e-6
    arc = integrate_smooth(
        Piece.X, (x0, x0 - delta, table1.phi), Direction.FORWARD, cfg, table1
    )
    ev = arc.terminal_event
    assert ev.kind is EventKind.SIGMA_CROSSING
    raw = arc.states[-1]
    assert abs(raw[0] - raw[1]) <= cfg.event_tol
    assert ev.state[0] == ev.state[1]


def test_smooth_wrong_side_rejected(table1, cfg):
    with pytest.raises(DomainError):
        integrate_smooth(Piece.X, (0.5, 0.8, 0.9), Direction.FORWARD, cfg, table1)
    with pytest.raises(DomainError):
        integrate_smooth(Piece.Y, (0.8, 0.5, 0.9), Direction.FORWARD, cfg, table1)


def test_planar_f_drift_over_one_period(table1, cfg):
    x0 = 0.5 * table1.tau
    T = lv_period(x0, cfg, table1)
    arc = integrate_smooth(
        Piece.PLANAR_LV, (x0, table1.r1), Direction.FORWARD, replace(cfg, t_max=T), table1
    )
    F0 = first_integral_F((x0, table1.r1), table1)
    drift = max(
        abs(first_integral_F(s, table1) - F0) for s in arc.states[:: max(1, len(arc.ts) // 50)]
    )
    assert drift <= 1e-8
    assert np.max(np.abs(arc.states[-1] - (x0, table1.r1))) <= 1e-9


def test_lv_period_limits_and_closure(table1, cfg):
    T = lv_period(table1.tau * (1.0 - 1e-3), cfg, table1)
    linearized = 2.0 * math.pi / math.sqrt(table1.m * table1.r1)
    assert linearized == pytest.approx(7.7314897417385659, rel=1e-12)
    assert abs(T - linearized) / linearized < 0.01
    assert characteristic_time(table1) == linearized

    with pytest.raises(DomainError):
        lv_period(table1.tau, cfg, table1)
    with pytest.raises(NoReturn):
        lv_period(0.5 * table1.tau, replace(cfg, t_max=1.0), table1)


def test_reversibility_smooth(table1, cfg):
    for s0, piece in [
        ((0.9, 0.5, 0.9), Piece.X),
        ((0.5, 0.9, 0.4), Piece.Y),
        ((0.6, 1.2), Piece.PLANAR_LV),
    ]:
        fwd = integrate_smooth(piece, s0, Direction.FORWARD, replace(cfg, t_max=2.0), table1)
        span = fwd.t1 - fwd.t0
        back = integrate_smooth(
            piece, fwd.states[-1], Direction.BACKWARD, replace(cfg, t_max=span), table1
        )
        assert back.ts[0] > back.ts[-1]
        assert np.max(np.abs(back.states[-1] - np.asarray(s0))) <= 10.0 * cfg.abs_tol


def test_blowup_raised(table1):
    cfg = IntegratorConfig(norm_bound=10.0, t_max=50.0)
    with pytest.raises(BlowUp):
        integrate_smooth(Piece.X, (2.0, 1.0, 0.001), Direction.FORWARD, cfg, table1)


def test_sliding_backward_capture_envelope(table1, cfg):
    _, focus = pseudo_equilibria(table1)
    x0 = 0.95 * table1.tau
    t_prev = 0.0
    for radius in (1e-2, 1e-3, 1e-4):
        arc = integrate_sliding(
            (x0, table1.phi), Direction.BACKWARD, cfg, table1, focus_capture_radius=radius
        )
        ev = arc.terminal_event
        assert ev.kind is EventKind.FOCUS_CAPTURE
        dist = math.hypot(ev.state[0] - focus.x, ev.state[1] - focus.z)
        assert dist == pytest.approx(radius, rel=1e-6)
        assert np.min(arc.states[:, 1]) >= table1.phi - cfg.event_tol
        assert abs(ev.t) > abs(t_prev)
        t_prev = ev.t


def test_sliding_forward_immediate_fold_exit(table1, cfg):
    arc = integrate_sliding((0.5 * table1.tau, table1.phi), Direction.FORWARD, cfg, table1)
    ev = arc.terminal_event
    assert ev.kind is EventKind.FOLD_EXIT
    assert arc.t1 == arc.t0
    assert ev.state[1] == table1.phi
    # the closed-form z-rate on the fold is negative left of the cusp
    assert eval_sliding((0.5 * table1.tau, table1.phi), table1)[1] < 0.0


def test_sliding_forward_spirals_out_from_focus(table1, cfg):
    _, focus = pseudo_equilibria(table1)
    arc = integrate_sliding((focus.x, focus.z + 1e-3), Direction.FORWARD, cfg, table1)
    assert arc.terminal_event.kind is EventKind.FOLD_EXIT
    r = np.hypot(arc.states[:, 0] - focus.x, arc.states[:, 1] - focus.z)
    turn = r[: len(r) // 3]
    assert turn[-1] > turn[0]
    assert r.max() > 100.0 * r[0]


def test_sliding_rejects_bad_starts(table1, cfg):
    with pytest.raises(DomainError):
        integrate_sliding((0.0, 1.0), Direction.FORWARD, cfg, table1)
    with pytest.raises(DomainError):
        integrate_sliding((0.5, 0.1), Direction.FORWARD, cfg, table1)


def test_filippov_invariant_plane_y0(table1):
    cfg = IntegratorConfig(t_max=20.0)
    traj = integrate_filippov((0.9, 0.0, 0.9), cfg, table1)
    assert [a.kind for a in traj.arcs] == [ArcKind.SMOOTH_X]
    ys = traj.arcs[0].states[:, 1]
    assert np.max(np.abs(ys)) == 0.0


def test_filippov_fold_start_lands_in_sliding(table1, cfg):
    x0 = 0.3
    traj = integrate_filippov((x0, x0, table1.phi), replace(cfg, t_max=30.0), table1)
    first = traj.arcs[0]
    assert first.kind is ArcKind.SMOOTH_X
    ev = first.terminal_event
    assert ev.kind is EventKind.SIGMA_ENTRY_SLIDING
    u, v = mu_point(x0, table1, cfg)
    assert ev.state[0] == pytest.approx(u, rel=1e-10)
    assert ev.state[2] == pytest.approx(v, rel=1e-10)
    assert classify_sigma_point((ev.state[0], ev.state[2]), table1) is RegionLabel.SLIDING
    assert traj.arcs[1].kind is ArcKind.SLIDING


def test_filippov_crossing_start_passes_without_sliding(table1):
    cfg = IntegratorConfig(t_max=10.0)
    traj = integrate_filippov((0.8, 0.8, 0.3), cfg, table1)
    first = traj.arcs[0]
    assert first.kind is ArcKind.SMOOTH_X
    assert first.t1 - first.t0 > 1.0


def test_filippov_y_arc_crosses_then_follows_x(table1):
    cfg = IntegratorConfig(t_max=10.0)
    traj = integrate_filippov((0.8, 0.9, 0.3), cfg, table1)
    kinds = [(a.kind, a.terminal_event.kind) for a in traj.arcs]
    assert kinds[0][0] is ArcKind.SMOOTH_Y
    assert kinds[0][1] is EventKind.SIGMA_CROSSING
    assert kinds[1][0] is ArcKind.SMOOTH_X


def test_filippov_concatenation_continuity(table1):
    cfg = IntegratorConfig(t_max=60.0)
    traj = integrate_filippov((1.2, 0.4, 1.0), cfg, table1)
    assert len(traj.arcs) >= 6
    kinds = {a.kind for a in traj.arcs}
    assert ArcKind.SLIDING in kinds and ArcKind.SMOOTH_X in kinds
    for a, b in zip(traj.arcs, traj.arcs[1:]):
        assert arc_gap(a, b) <= cfg.event_tol
    for a in traj.arcs:
        dts = np.diff(a.ts)
        if len(dts):
            assert np.all(dts > 0.0)
    assert traj.arcs[-1].terminal_event.kind is EventKind.HORIZON_REACHED


def test_filippov_sigma_events_verify_defining_equations(table1):
    cfg = IntegratorConfig(t_max=60.0)
    traj = integrate_filippov((1.2, 0.4, 1.0), cfg, table1)
    for arc in traj.arcs:
        ev = arc.terminal_event
        raw = arc.states[-1]
        if ev.kind in (EventKind.SIGMA_CROSSING, EventKind.SIGMA_ENTRY_SLIDING):
            assert abs(raw[0] - raw[1]) <= cfg.event_tol
        elif ev.kind is EventKind.FOLD_EXIT:
            assert abs(raw[1] - table1.phi) <= cfg.event_tol


def test_trajectory_export_shapes(table1):
    cfg = IntegratorConfig(t_max=25.0)
    traj = integrate_filippov((0.3, 0.3, table1.phi), cfg, table1)
    rows = trajectory_rows(traj)
    assert rows[0][:4] == (0.0, 0.3, 0.3, table1.phi)
    assert {r[4] for r in rows} >= {"SmoothX", "Sliding"}
    indices = [r[5] for r in rows]
    assert indices == sorted(indices)
    payload = events_payload(traj)
    assert payload[0]["kind"] == "SigmaEntrySliding"
    assert all(set(d) == {"kind", "t", "state"} for d in payload)
