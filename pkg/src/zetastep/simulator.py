"""Event-driven time-domain simulation of the converter's switching cycle.

Circuit (all node potentials referenced to the source return rail):

  * power switch S in series from the source positive terminal to node A
  * filter inductor L1 from A down to the return rail
  * energy-transfer capacitor C4 from A to node B (positive plate at B)
  * coupled-inductor primary, leakage Lk in series with the magnetizing
    inductance Lm, from B down to node F
  * clamp capacitor C1 from F to the return rail; clamp diode D1 from the
    return rail up to B (anode at the rail)
  * output stack: C2 from A up to node G, C3 from G up to node O; the load
    resistor sits across the pair, O to A, so the load voltage is always
    v_c2 + v_c3
  * secondary winding from G to node W with v_W - v_G = n * v_lm;
    multiplier diode D2 from F to W (anode at F), multiplier diode D3 from
    W to O (anode at W)

With an ideal switch and ideal diodes every conduction configuration is an
affine system dx/dt = A x + b over the seven states
[i_l1, i_lk, i_lm, v_c1, v_c2, v_c3, v_c4].  The five named intervals of
one CCM cycle are:

  M1  S on,  D2 on   gate just fired; D2 still carries the secondary tail
  M2  S on,  D3 on   magnetizing and transfer through the upper multiplier
  M3  D1 on, D3 on   clamp catches the primary, leakage collapses
  M4  D1 on, D2 on   clamp conducts while the lower multiplier recharges
  M5  D2 on          clamp released, secondary keeps feeding the stack

Between those intervals the secondary can be momentarily open while the
multiplier diodes commutate; the integrator represents these open-secondary
configurations explicitly (they carry zero measurable duration in the
ripple-free idealization, and short but finite duration at real component
values).  A sustained all-off "coast" interval is the discontinuous
conduction signature.

Device-current reconstruction per configuration (used for metrics):
  switch   i_l1 + i_lk            (plus i_s while D2 conducts)
  D1       i_l1 + i_lk            (plus i_s while D2 conducts)
  D2       -i_s                   with i_s = (i_lk - i_lm)/n
  D3       +i_s

Integration is fixed-step classic 4th-order Runge-Kutta; for an affine
system a step reduces exactly to the degree-4 Taylor map x -> R x + r,
which the integrator precomputes once per configuration.  Guard crossings
are localized by bisection and the state is advanced exactly to the event.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .model import ConverterParams, Mode, SimMetrics, StateVector
from . import analytics

IL1, ILK, ILM, VC1, VC2, VC3, VC4 = range(7)

STATE_NAMES = ("i_l1", "i_lk", "i_lm", "v_c1", "v_c2", "v_c3", "v_c4")

# configuration code -> (s_on, d1_on, secondary) with secondary 0=open,
# 2=D2 conducting, 3=D3 conducting
CONFIG_TABLE = {
    1: (True, False, 2),    # M1
    2: (True, False, 3),    # M2
    3: (False, True, 3),    # M3
    4: (False, True, 2),    # M4
    5: (False, False, 2),   # M5
    6: (True, False, 0),    # on-phase commutation (secondary open)
    7: (False, True, 0),    # clamp commutation (secondary open)
    8: (False, False, 0),   # coast (discontinuous-conduction interval)
    9: (False, False, 3),   # free-wheel through D3, clamp released
}
MODE_CODES = {1: Mode.M1, 2: Mode.M2, 3: Mode.M3, 4: Mode.M4, 5: Mode.M5}
CODE_OF_PATTERN = {v: k for k, v in CONFIG_TABLE.items()}

# chattering limit per the integrator contract
MAX_TRANSITIONS_PER_PERIOD = 50
# coast longer than this fraction of the period classifies the regime as DCM
DCM_COAST_FRACTION = 0.01


class SimulationError(RuntimeError):
    """Numerical blow-up, chattering, or an unresolvable conduction state."""


class ConvergenceError(SimulationError):
    """Periodic steady state not reached within the period budget."""

    def __init__(self, message: str, residual: float, periods: int):
        super().__init__(message)
        self.residual = residual
        self.periods = periods


@dataclass(frozen=True)
class SimConfig:
    """Integrator settings.

    steps_per_period  uniform RK4 steps per switching period (>= 200)
    max_periods       period budget for the steady-state search
    convergence_tol   relative state change per period at convergence
    event_tol         event-time localization tolerance, fraction of period
    """

    steps_per_period: int = 4000
    max_periods: int = 20000
    convergence_tol: float = 1e-6
    event_tol: float = 1e-9

    def __post_init__(self):
        if self.steps_per_period < 200:
            raise ValueError("steps_per_period must be >= 200")
        if self.max_periods <= 0 or self.convergence_tol <= 0 or self.event_tol <= 0:
            raise ValueError("SimConfig fields must be positive")


def _unit(i: int) -> np.ndarray:
    r = np.zeros(7)
    r[i] = 1.0
    return r


@dataclass(frozen=True)
class ModeSystem:
    """Affine state equations dx/dt = A x + b of one conduction configuration,
    plus the linear node/branch functionals the event logic needs.

    Functionals are (weights, constant) pairs evaluated as w @ x + c.
    """

    code: int
    s_on: bool
    d1_on: bool
    secondary: int
    A: np.ndarray
    b: np.ndarray
    v_a: tuple[np.ndarray, float]
    v_lm: tuple[np.ndarray, float]
    fwd_d1: tuple[np.ndarray, float]
    fwd_d2: tuple[np.ndarray, float]
    fwd_d3: tuple[np.ndarray, float]
    i_d1_w: np.ndarray
    i_sw_w: np.ndarray

    def derivative(self, x: np.ndarray) -> np.ndarray:
        return self.A @ x + self.b


def _build_config(p: ConverterParams, code: int, vin: float) -> ModeSystem:
    """Assemble one configuration's equations from the circuit by hand.

    The affine forms below follow from Kirchhoff analysis of the fixed
    topology in the module docstring, with the ideal-transformer relation
    i_s = (i_lk - i_lm)/n and v_secondary = n*v_lm.
    """
    s_on, d1, sec = CONFIG_TABLE[code]
    n, l1, lm, lk = p.n, p.l1, p.lm, p.lk
    c1, c2, c3, c4, rl = p.c1, p.c2, p.c3, p.c4, p.rl
    k = p.coupling

    A = np.zeros((7, 7))
    b = np.zeros(7)
    is_w = (_unit(ILK) - _unit(ILM)) / n
    io_w = (_unit(VC2) + _unit(VC3)) / rl

    # node-A potential: pinned by the switch or the clamp, otherwise given
    # by the inductor-cutset condition d/dt(sum of currents into A) = 0
    if s_on:
        va_w, va_c = np.zeros(7), vin
    elif d1:
        va_w, va_c = -_unit(VC4), 0.0
    elif sec == 2:
        delta = n ** 2 / l1 + (n + 1.0) ** 2 / lk + 1.0 / lm
        va_w = np.zeros(7)
        va_w[VC1] = ((n + 1.0) * (1.0 + n) / lk + 1.0 / lm) / delta
        va_w[VC2] = (-(n + 1.0) / lk - 1.0 / lm) / delta
        va_w[VC4] = (-(n + 1.0) * n / lk) / delta
        va_c = 0.0
    elif sec == 3:
        va_w = (_unit(VC1) + _unit(VC3) / n - _unit(VC4)) * (l1 / (l1 + lk))
        va_c = 0.0
    else:
        va_w = (_unit(VC1) - _unit(VC4)) * (l1 / (l1 + lk + lm))
        va_c = 0.0

    # magnetizing voltage: clamped through whichever multiplier diode
    # conducts, or set by the series Lk+Lm divider when the secondary is open
    if sec == 2:
        vlm_w = (_unit(VC1) - _unit(VC2) - va_w) / n
        vlm_c = -va_c / n
    elif sec == 3:
        vlm_w, vlm_c = _unit(VC3) / n, 0.0
    else:
        vlm_w = k * (va_w + _unit(VC4) - _unit(VC1))
        vlm_c = k * va_c

    A[IL1] = va_w / l1
    b[IL1] = va_c / l1
    if sec == 0:
        # open secondary locks i_lk = i_lm; both ramp with the series branch
        w = (va_w + _unit(VC4) - _unit(VC1)) / (lk + lm)
        c = va_c / (lk + lm)
        A[ILK] = w
        b[ILK] = c
        A[ILM] = w
        b[ILM] = c
    else:
        A[ILM] = vlm_w / lm
        b[ILM] = vlm_c / lm
        A[ILK] = (va_w + _unit(VC4) - _unit(VC1) - vlm_w) / lk
        b[ILK] = (va_c - vlm_c) / lk

    # capacitor plate currents from node KCL
    A[VC1] = (_unit(ILK) + (is_w if sec == 2 else 0.0)) / c1
    A[VC2] = -((is_w + io_w) if sec == 2 else io_w) / c2
    A[VC3] = -((io_w - is_w) if sec == 3 else io_w) / c3
    if s_on or (not d1 and sec in (0, 2)):
        q4 = _unit(ILK)
    elif d1:
        q4 = -_unit(IL1) - (is_w if sec == 2 else 0.0)
    else:
        q4 = -_unit(IL1)
    A[VC4] = -q4 / c4

    # forward-bias functionals of the blocked devices (positive = forward)
    fwd_d1 = (-(va_w + _unit(VC4)), -va_c)
    fwd_d2 = (_unit(VC1) - va_w - _unit(VC2) - n * vlm_w, -va_c - n * vlm_c)
    fwd_d3 = (n * vlm_w - _unit(VC3), n * vlm_c)

    conducted = _unit(IL1) + _unit(ILK) + (is_w if sec == 2 else 0.0)
    i_d1_w = conducted if d1 else np.zeros(7)
    i_sw_w = conducted if s_on else np.zeros(7)

    return ModeSystem(code=code, s_on=s_on, d1_on=d1, secondary=sec,
                      A=A, b=b, v_a=(va_w, va_c), v_lm=(vlm_w, vlm_c),
                      fwd_d1=fwd_d1, fwd_d2=fwd_d2, fwd_d3=fwd_d3,
                      i_d1_w=i_d1_w, i_sw_w=i_sw_w)


def build_systems(p: ConverterParams, vin: Optional[float] = None) -> dict:
    """All conduction-configuration systems for a parameter set.

    The simulator needs a strictly positive leakage inductance: with
    lk = 0 the multiplier clamp loops become algebraic and the state
    dimension collapses.
    """
    if p.lk <= 0.0:
        raise SimulationError(
            "time-domain simulation requires lk > 0 (ideal coupling "
            "collapses the commutation dynamics); closed-form analysis "
            "remains available")
    v = p.vin if vin is None else vin
    return {code: _build_config(p, code, v) for code in CONFIG_TABLE}


def mode_system(m: Mode, p: ConverterParams) -> ModeSystem:
    """Affine state equations of one named conduction interval."""
    return build_systems(p)[m.value]


@dataclass(frozen=True)
class TransitionEvent:
    """One guard of the nominal CCM cycle."""

    kind: str                 # "state" or "gate"
    description: str
    next_mode: Mode
    weights: Optional[np.ndarray] = None   # state guards: fires when w@x crosses 0
    direction: int = 0                     # +1 rising, -1 falling
    gate_time_fraction: Optional[float] = None  # gate guards: t/T of the edge

    def value(self, x: np.ndarray) -> float:
        if self.weights is None:
            raise ValueError("gate events have no state expression")
        return float(self.weights @ x)


def transition_events(m: Mode, p: ConverterParams) -> list[TransitionEvent]:
    """Nominal guard set of one named interval of the CCM cycle."""
    n = p.n
    is_w = (_unit(ILK) - _unit(ILM)) / n
    if m is Mode.M1:
        return [TransitionEvent("state", "secondary current rises to zero "
                                "(D2 turns off)", Mode.M2,
                                weights=is_w, direction=+1)]
    if m is Mode.M2:
        return [TransitionEvent("gate", "gate turns off at t = D*T", Mode.M3,
                                gate_time_fraction=p.duty)]
    if m is Mode.M3:
        return [TransitionEvent("state", "secondary current falls to zero "
                                "(D3 turns off)", Mode.M4,
                                weights=is_w, direction=-1)]
    if m is Mode.M4:
        # D1 carries i_l1 + i_lk + i_s in this interval
        w = _unit(IL1) + _unit(ILK) + is_w
        return [TransitionEvent("state", "clamp diode current falls to zero "
                                "(D1 turns off)", Mode.M5,
                                weights=w, direction=-1)]
    return [TransitionEvent("gate", "gate turns on at t = T", Mode.M1,
                            gate_time_fraction=1.0)]


@dataclass(frozen=True)
class Trace:
    """Sampled waveforms of one switching period.

    t        sample times, s (uniform grid plus exact event instants)
    states   len(t) x 7 state samples
    config   conduction-configuration code per sample (CONFIG_TABLE key)
    events   (time, entered configuration code) per transition
    period   switching period, s
    """

    t: np.ndarray
    states: np.ndarray
    config: np.ndarray
    events: list[tuple[float, int]]
    period: float

    @property
    def mode_ids(self) -> np.ndarray:
        """Named-interval id per sample (1..5), 0 during commutation/coast."""
        return np.where(self.config <= 5, self.config, 0)

    def segment_durations(self) -> dict[int, float]:
        """Total time spent in each configuration code over the period."""
        out: dict[int, float] = {}
        ev = list(self.events) + [(self.period, -1)]
        for (t0, code), (t1, _) in zip(ev[:-1], ev[1:]):
            out[code] = out.get(code, 0.0) + (t1 - t0)
        return out

    def named_sequence(self) -> list[Mode]:
        """Named intervals in order of appearance, commutation merged out."""
        seq: list[Mode] = []
        for _, code in self.events:
            if code in MODE_CODES:
                m = MODE_CODES[code]
                if not seq or seq[-1] is not m:
                    seq.append(m)
        return seq

    def state_at(self, i: int) -> StateVector:
        row = self.states[i]
        return StateVector(self.t[i], *row)


def state_to_array(x0) -> np.ndarray:
    if isinstance(x0, StateVector):
        return np.array([x0.i_l1, x0.i_lk, x0.i_lm,
                         x0.v_c1, x0.v_c2, x0.v_c3, x0.v_c4], dtype=float)
    arr = np.asarray(x0, dtype=float)
    if arr.shape != (7,):
        raise ValueError("state must be a StateVector or length-7 array")
    return arr.copy()


def _rk4_map(A: np.ndarray, b: np.ndarray, h: float):
    """Classic RK4 step of an affine system collapses to the exact
    degree-4 Taylor map x -> R x + r."""
    I = np.eye(7)
    Ah = A * h
    A2 = Ah @ Ah
    A3 = A2 @ Ah
    A4 = A3 @ Ah
    R = I + Ah + A2 / 2.0 + A3 / 6.0 + A4 / 24.0
    r = (I + Ah / 2.0 + A2 / 6.0 + A3 / 24.0) @ (b * h)
    return R, r


def rk4_step(sys: ModeSystem, x: np.ndarray, h: float) -> np.ndarray:
    """One RK4 step of size h inside a single conduction configuration."""
    R, r = _rk4_map(sys.A, sys.b, h)
    return R @ x + r


class _Engine:
    """Per-parameter-set integrator state: precomputed step maps, guard
    stacks and the conduction-consistency selector."""

    def __init__(self, p: ConverterParams, cfg: SimConfig,
                 vin: Optional[float] = None):
        self.p = p
        self.cfg = cfg
        self.vin = p.vin if vin is None else vin
        self.T = p.period
        self.h = self.T / cfg.steps_per_period
        self.systems = build_systems(p, vin=self.vin)
        self.maps = {c: _rk4_map(s.A, s.b, self.h)
                     for c, s in self.systems.items()}
        self.is_w = (_unit(ILK) - _unit(ILM)) / p.n
        self.guards = {c: self._guard_stack(c) for c in self.systems}

    # --- guard machinery -------------------------------------------------

    def _guard_stack(self, code: int):
        """Rows: conducting-device currents (fire on falling through zero)
        and blocked-device forward biases (fire on rising through zero)."""
        s = self.systems[code]
        rows, consts, kinds, actions = [], [], [], []
        if s.secondary == 2:
            rows.append(-self.is_w)
            consts.append(0.0)
            kinds.append(0)
            actions.append(("sec", 0))
        if s.secondary == 3:
            rows.append(self.is_w)
            consts.append(0.0)
            kinds.append(0)
            actions.append(("sec", 0))
        if s.d1_on:
            rows.append(s.i_d1_w)
            consts.append(0.0)
            kinds.append(0)
            actions.append(("d1", 0))
        if s.secondary == 0:
            rows.append(s.fwd_d3[0])
            consts.append(s.fwd_d3[1])
            kinds.append(1)
            actions.append(("sec", 3))
            rows.append(s.fwd_d2[0])
            consts.append(s.fwd_d2[1])
            kinds.append(1)
            actions.append(("sec", 2))
        if not s.s_on and not s.d1_on:
            rows.append(s.fwd_d1[0])
            consts.append(s.fwd_d1[1])
            kinds.append(1)
            actions.append(("d1", 1))
        G = np.vstack(rows) if rows else np.zeros((0, 7))
        return G, np.array(consts), np.array(kinds), actions

    def _detect_scales(self, x: np.ndarray):
        di = 1e-12 * (1.0 + abs(x[IL1]) + abs(x[ILK]) + abs(x[ILM]))
        dv = 1e-12 * (self.vin + abs(x[VC1]) + abs(x[VC2])
                      + abs(x[VC3]) + abs(x[VC4]))
        return di, dv

    def _boundary_scales(self, x: np.ndarray):
        ei = 1e-7 * (1.0 + abs(x[IL1]) + abs(x[ILK]) + abs(x[ILM]))
        ev = 1e-7 * (self.vin + abs(x[VC1]) + abs(x[VC2])
                     + abs(x[VC3]) + abs(x[VC4]))
        return ei, ev

    def step(self, code: int, x: np.ndarray, dt: float) -> np.ndarray:
        if dt == self.h:
            R, r = self.maps[code]
        else:
            s = self.systems[code]
            R, r = _rk4_map(s.A, s.b, dt)
        return R @ x + r

    def crossing(self, code: int, x: np.ndarray, dt: float):
        """Advance by dt; if a guard crosses, localize the earliest one.

        Returns (x_advanced, None) or (x_at_event, (action, t_event)).
        """
        G, gc, kinds, actions = self.guards[code]
        x1 = self.step(code, x, dt)
        if G.shape[0] == 0:
            return x1, None
        det_i, det_v = self._detect_scales(x)
        thr = np.where(kinds == 0, -det_i, det_v)
        g0 = G @ x + gc
        g1 = G @ x1 + gc
        fires = np.where(kinds == 0,
                         (g0 >= thr) & (g1 < thr),
                         (g0 <= thr) & (g1 > thr))
        if not fires.any():
            return x1, None
        best, th_best = -1, math.inf
        for i in np.flatnonzero(fires):
            den = g1[i] - g0[i]
            th = (thr[i] - g0[i]) / den if den != 0.0 else 0.0
            if th < th_best:
                th_best, best = th, int(i)
        i = best
        sgn = 1.0 if kinds[i] == 1 else -1.0
        lo, hi = 0.0, dt
        lim = det_v if kinds[i] == 1 else det_i
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            gm = G[i] @ self.step(code, x, mid) + gc[i]
            if (sgn > 0 and gm > thr[i]) or (sgn < 0 and gm < thr[i]):
                hi = mid
            else:
                lo = mid
            if hi - lo <= self.cfg.event_tol * self.T:
                gl = G[i] @ self.step(code, x, hi) + gc[i]
                if abs(gl - thr[i]) <= 4.0 * lim or hi - lo <= 1e-16 * self.T:
                    break
        return self.step(code, x, hi), (actions[i], hi)

    # --- conduction-state consistency ------------------------------------

    def _project_entry(self, code: int, x: np.ndarray) -> np.ndarray:
        """Remove event-localization residue from a configuration's
        algebraic constraints (flux-conserving merge for an open secondary,
        cutset cleanup when node A floats)."""
        s_on, d1, sec = CONFIG_TABLE[code]
        p = self.p
        y = x
        if sec == 0:
            lam = (p.lk * y[ILK] + p.lm * y[ILM]) / (p.lk + p.lm)
            y = y.copy()
            y[ILK] = lam
            y[ILM] = lam
        if not s_on and not d1:
            y = y.copy()
            if sec == 2:
                res = y[IL1] + y[ILK] + (y[ILK] - y[ILM]) / p.n
                y[ILK] -= res / (1.0 + 1.0 / p.n)
            elif sec == 3:
                y[ILK] = -y[IL1]
            else:
                y[IL1] = -y[ILK]
        return y

    def _admissible(self, code: int, x: np.ndarray, tol: float) -> bool:
        s_on, d1, sec = CONFIG_TABLE[code]
        if sec == 0 and abs(x[ILK] - x[ILM]) > self.p.n * tol:
            return False
        if not s_on and not d1:
            i_s = (x[ILK] - x[ILM]) / self.p.n
            res = x[IL1] + x[ILK] + (i_s if sec == 2 else 0.0)
            if abs(res) > tol:
                return False
        return True

    def _consistent(self, code: int, x: np.ndarray,
                    eps_i: float, eps_v: float) -> bool:
        s = self.systems[code]
        i_s = float(self.is_w @ x)
        if s.secondary == 0 and abs(x[ILK] - x[ILM]) > 100.0 * eps_i:
            return False
        if not s.s_on and not s.d1_on:
            res = x[IL1] + x[ILK] + (i_s if s.secondary == 2 else 0.0)
            if abs(res) > 100.0 * eps_i:
                return False
        i_d1 = float(s.i_d1_w @ x) if s.d1_on else 0.0
        i_d2 = -i_s if s.secondary == 2 else 0.0
        i_d3 = i_s if s.secondary == 3 else 0.0
        if s.d1_on and i_d1 < -eps_i:
            return False
        if s.secondary == 2 and i_d2 < -eps_i:
            return False
        if s.secondary == 3 and i_d3 < -eps_i:
            return False
        dx = s.derivative(x)
        dis = (dx[ILK] - dx[ILM]) / self.p.n
        if s.d1_on and i_d1 <= eps_i and float(s.i_d1_w @ dx) < 0.0:
            return False
        if s.secondary == 2 and i_d2 <= eps_i and -dis < 0.0:
            return False
        if s.secondary == 3 and i_d3 <= eps_i and dis < 0.0:
            return False
        for conducting, fwd in ((s.d1_on, s.fwd_d1),
                                (s.secondary == 2, s.fwd_d2),
                                (s.secondary == 3, s.fwd_d3)):
            if conducting:
                continue
            if fwd is s.fwd_d1 and s.s_on:
                continue  # switch pins node A; v_B = vin + v_c4 stays positive
            gv = float(fwd[0] @ x) + fwd[1]
            if gv > eps_v:
                return False
            if gv >= -eps_v and float(fwd[0] @ dx) > 0.0:
                return False
        return True

    def select(self, x: np.ndarray, s_on: bool, prev_code: Optional[int]):
        """Pick the conduction configuration consistent with the state.

        Candidates are ordered by distance (device toggles) from the
        previous configuration so an unchanged state keeps its
        configuration; grossly inadmissible candidates are rejected on the
        raw state before any residue projection.
        """
        eps_i, eps_v = self._boundary_scales(x)
        tol_adm = 100.0 * eps_i
        prev = CONFIG_TABLE.get(prev_code) if prev_code else None
        cands = [c for c, (s, _, _) in CONFIG_TABLE.items() if s == s_on]

        def dist(c):
            if prev is None:
                return 0
            _, d1c, secc = CONFIG_TABLE[c]
            return int(d1c != prev[1]) + int(secc != prev[2])

        order = sorted(cands, key=lambda c: (dist(c),
                                             -int(CONFIG_TABLE[c][1]),
                                             CONFIG_TABLE[c][2]))
        for c in order:
            if not self._admissible(c, x, tol_adm):
                continue
            y = self._project_entry(c, x)
            if self._consistent(c, y, eps_i, eps_v):
                return c, y
        return None, x

    # --- one period -------------------------------------------------------

    def simulate_period(self, x0: np.ndarray, collect: bool = False):
        """Integrate one full switching period starting at gate turn-on.

        Returns (x_end, events, t_samples, x_samples, code_samples); the
        sample arrays are empty unless collect is set.
        """
        x = x0.copy()
        if not np.all(np.isfinite(x)):
            raise SimulationError("non-finite initial state")
        T, h = self.T, self.h
        DT = self.p.duty * T
        code, x = self.select(x, True, 1)
        if code is None:
            raise SimulationError("no consistent conduction state at gate-on")
        events = [(0.0, code)]
        ts: list[float] = [0.0] if collect else []
        xs: list[np.ndarray] = [x.copy()] if collect else []
        cs: list[int] = [code] if collect else []
        ntr = 0
        t = 0.0

        def record(code_for_sample):
            ts.append(t)
            xs.append(x.copy())
            cs.append(code_for_sample)

        def transition(new_code, old_code):
            nonlocal ntr
            events.append((t, new_code))
            ntr += 1
            if ntr > MAX_TRANSITIONS_PER_PERIOD:
                raise SimulationError(
                    "chattering: more than "
                    f"{MAX_TRANSITIONS_PER_PERIOD} conduction transitions "
                    "in one period")
            if collect:
                # duplicate the instant so both sides of the derivative
                # discontinuity appear in the trace
                record(old_code)
                record(new_code)

        def advance_to(t_target, kstart):
            nonlocal x, t, code
            kgrid = kstart
            R, r = self.maps[code]
            G, gc, kinds, actions = self.guards[code]
            while t < t_target - 1e-18 * T:
                t_next = min((kgrid + 1) * h, t_target)
                dt = t_next - t
                if dt <= 1e-18 * T:
                    kgrid += 1
                    continue
                on_grid = abs(dt - h) <= 1e-9 * h
                if on_grid and G.shape[0] == 0:
                    x_new, ev = R @ x + r, None
                elif on_grid:
                    x_new = R @ x + r
                    det_i = 1e-12 * (1.0 + abs(x[IL1]) + abs(x[ILK])
                                     + abs(x[ILM]))
                    det_v = 1e-12 * (self.vin + abs(x[VC1]) + abs(x[VC2])
                                     + abs(x[VC3]) + abs(x[VC4]))
                    thr = np.where(kinds == 0, -det_i, det_v)
                    g0 = G @ x + gc
                    g1 = G @ x_new + gc
                    fires = np.where(kinds == 0,
                                     (g0 >= thr) & (g1 < thr),
                                     (g0 <= thr) & (g1 > thr))
                    ev = None
                    if fires.any():
                        x_new, ev = self.crossing(code, x, dt)
                else:
                    x_new, ev = self.crossing(code, x, dt)
                if not np.all(np.isfinite(x_new)):
                    raise SimulationError(
                        f"numerical blow-up in configuration {code} "
                        f"near t/T = {t / T:.4f}")
                if ev is None:
                    x = x_new
                    t = t_next
                    if t >= (kgrid + 1) * h - 1e-18 * T:
                        kgrid += 1
                        if collect:
                            record(code)
                    continue
                action, tloc = ev
                x = x_new
                t += tloc
                new_code, x = self.select(x, CONFIG_TABLE[code][0], code)
                if new_code is None:
                    raise SimulationError(
                        f"no consistent conduction state after event "
                        f"{action} at t/T = {t / T:.5f}")
                if new_code != code:
                    old = code
                    code = new_code
                    transition(code, old)
                    R, r = self.maps[code]
                    G, gc, kinds, actions = self.guards[code]
            return kgrid

        kgrid = advance_to(DT, 0)
        new_code, x = self.select(x, False, code)
        if new_code is None:
            raise SimulationError("no consistent conduction state at gate-off")
        old = code
        code = new_code
        t = DT
        transition(code, old)
        advance_to(T, kgrid)
        return x, events, ts, xs, cs


def analytic_start(p: ConverterParams) -> np.ndarray:
    """Warm-start estimate from the closed-form operating point."""
    caps = analytics.cap_voltages(p)
    m = analytics.gain(p.duty, p.n)
    i_o = caps["v_o"] / p.rl
    return np.array([(m + 1.0) * i_o, i_o, i_o,
                     caps["v_c1"], caps["v_c2"], caps["v_c3"], caps["v_c4"]])


def integrate_period(p: ConverterParams, cfg: SimConfig, x0) -> tuple[StateVector, Trace]:
    """Integrate one switching period and record the full trace."""
    eng = _Engine(p, cfg)
    x_end, events, ts, xs, cs = eng.simulate_period(state_to_array(x0),
                                                    collect=True)
    trace = Trace(t=np.asarray(ts), states=np.vstack(xs),
                  config=np.asarray(cs, dtype=int), events=events,
                  period=p.period)
    return StateVector(p.period, *x_end), trace


@dataclass(frozen=True)
class SimResult:
    """Converged periodic run: final-period trace, measured metrics and
    the conduction-regime classification."""

    regime: str
    trace: Trace
    metrics: SimMetrics
    periods: int
    residual: float


def _residual(x_new: np.ndarray, x_old: np.ndarray) -> float:
    scale = np.maximum(np.abs(x_new), 0.01 * (np.abs(x_new).max() + 1e-12) + 1e-12)
    return float(np.max(np.abs(x_new - x_old) / scale))


def _newton_shoot(eng: _Engine, x0: np.ndarray, tol: float, itmax: int = 12):
    """Newton iteration on the period map for the exact periodic orbit."""
    scale = np.maximum(np.abs(x0), 0.01 * np.abs(x0).max() + 1e-9)
    xk = x0.copy()
    resid = math.inf
    for _ in range(itmax):
        xe, _, _, _, _ = eng.simulate_period(xk)
        fk = xe - xk
        resid = float(np.max(np.abs(fk) / scale))
        if resid < tol:
            return xk, resid, True
        J = np.zeros((7, 7))
        for j in range(7):
            dxj = 1e-6 * scale[j]
            xp = xk.copy()
            xp[j] += dxj
            xpe, _, _, _, _ = eng.simulate_period(xp)
            J[:, j] = ((xpe - xp) - fk) / dxj
        try:
            step = np.linalg.solve(J, -fk)
        except np.linalg.LinAlgError:
            return xk, resid, False
        if not np.all(np.isfinite(step)):
            return xk, resid, False
        xk = xk + step
    return xk, resid, False


def run_to_steady_state(p: ConverterParams, cfg: SimConfig = SimConfig(),
                        warm_start: bool = False) -> SimResult:
    """Drive the converter to its periodic steady state and measure it.

    The period map is iterated from a cold start (all states zero) or from
    the closed-form operating point.  When plain iteration approaches the
    orbit but stalls on the lightly damped input-filter modes, a shooting
    (Newton) solve on the period map finishes the job; convergence always
    means the state change across one period is below convergence_tol.
    """
    eng = _Engine(p, cfg)
    x = analytic_start(p) if warm_start else np.zeros(7)
    prev = x.copy()
    window: list[np.ndarray] = []
    newton_every = 40
    resid = math.inf
    periods = 0
    for k in range(1, cfg.max_periods + 1):
        x, _, _, _, _ = eng.simulate_period(x)
        periods = k
        resid = _residual(x, prev)
        prev = x.copy()
        window.append(x.copy())
        if len(window) > 24:
            window.pop(0)
        if resid < cfg.convergence_tol:
            break
        if k % newton_every == 0:
            seed = np.mean(window, axis=0)
            try:
                xs, r2, ok = _newton_shoot(
                    eng, seed, tol=min(cfg.convergence_tol * 1e-3, 1e-9))
            except SimulationError:
                ok = False
            if ok:
                x, resid = xs, r2
                break
    else:
        raise ConvergenceError(
            f"no periodic steady state after {cfg.max_periods} periods "
            f"(residual {resid:.3e})", residual=resid, periods=periods)

    x_end, events, ts, xs_, cs = eng.simulate_period(x, collect=True)
    trace = Trace(t=np.asarray(ts), states=np.vstack(xs_),
                  config=np.asarray(cs, dtype=int), events=events,
                  period=p.period)
    metrics = extract_metrics(trace, p)
    return SimResult(regime=metrics.regime, trace=trace, metrics=metrics,
                     periods=periods, residual=resid)


def extract_metrics(trace: Trace, p: ConverterParams) -> SimMetrics:
    """Measure period averages, ripples, peaks and interval durations.

    Averages use trapezoidal integration over the event-augmented sample
    grid; device currents are reconstructed from the states according to
    the conduction pattern active at each sample.
    """
    t = trace.t
    X = trace.states
    codes = trace.config
    T = trace.period
    span = t[-1] - t[0]
    n = p.n

    def tavg(y):
        return float(np.trapezoid(y, t) / span)

    i_l1, i_lk, i_lm = X[:, IL1], X[:, ILK], X[:, ILM]
    v_c1, v_c2, v_c3, v_c4 = X[:, VC1], X[:, VC2], X[:, VC3], X[:, VC4]
    v_o = v_c2 + v_c3
    i_s = (i_lk - i_lm) / n
    i_o = v_o / p.rl

    sec = np.array([CONFIG_TABLE[c][2] for c in codes])
    d1on = np.array([CONFIG_TABLE[c][1] for c in codes])
    son = np.array([CONFIG_TABLE[c][0] for c in codes])

    i_d2 = np.where(sec == 2, -i_s, 0.0)
    i_d3 = np.where(sec == 3, i_s, 0.0)
    conducted = i_l1 + i_lk + np.where(sec == 2, i_s, 0.0)
    i_d1 = np.where(d1on, conducted, 0.0)
    i_sw = np.where(son, conducted, 0.0)

    # capacitor plate currents per conduction pattern
    i_c1 = i_lk + np.where(sec == 2, i_s, 0.0)
    i_c2 = np.where(sec == 2, -(i_s + i_o), -i_o)
    i_c3 = np.where(sec == 3, i_s - i_o, -i_o)
    q4 = np.where(son | (~d1on & (sec != 3)), i_lk,
                  np.where(d1on, -i_l1 - np.where(sec == 2, i_s, 0.0), -i_l1))
    i_c4 = -q4

    # branch voltages reconstructed from the active configuration
    systems = build_systems(p)
    v_l1 = np.empty(len(t))
    v_lk = np.empty(len(t))
    v_lm = np.empty(len(t))
    for code in np.unique(codes):
        mask = codes == code
        dx = X[mask] @ systems[code].A.T + systems[code].b
        v_l1[mask] = p.l1 * dx[:, IL1]
        v_lk[mask] = p.lk * dx[:, ILK]
        v_lm[mask] = p.lm * dx[:, ILM]

    durations = trace.segment_durations()
    d = {m: durations.get(m, 0.0) / T for m in range(1, 6)}
    commutation = sum(durations.get(c, 0.0) for c in (6, 7, 9)) / T
    coast = durations.get(8, 0.0) / T
    regime = "DCM" if coast > DCM_COAST_FRACTION else "CCM"

    return SimMetrics(
        regime=regime,
        v_c1_avg=tavg(v_c1), v_c2_avg=tavg(v_c2),
        v_c3_avg=tavg(v_c3), v_c4_avg=tavg(v_c4),
        v_o_avg=tavg(v_o), gain=tavg(v_o) / p.vin,
        i_l1_avg=tavg(i_l1), i_lk_avg=tavg(i_lk), i_lm_avg=tavg(i_lm),
        i_o_avg=tavg(i_o),
        di_l1=float(np.ptp(i_l1)), di_lm=float(np.ptp(i_lm)),
        dv_c1=float(np.ptp(v_c1)), dv_c2=float(np.ptp(v_c2)),
        dv_c3=float(np.ptp(v_c3)), dv_c4=float(np.ptp(v_c4)),
        i_sw_peak=float(i_sw.max()), i_d1_peak=float(i_d1.max()),
        i_d2_peak=float(i_d2.max()), i_d3_peak=float(i_d3.max()),
        i_d1_avg=tavg(i_d1), i_d2_avg=tavg(i_d2), i_d3_avg=tavg(i_d3),
        i_c1_avg=tavg(i_c1), i_c2_avg=tavg(i_c2),
        i_c3_avg=tavg(i_c3), i_c4_avg=tavg(i_c4),
        i_c1_peak=float(np.abs(i_c1).max()), i_c2_peak=float(np.abs(i_c2).max()),
        i_c3_peak=float(np.abs(i_c3).max()), i_c4_peak=float(np.abs(i_c4).max()),
        v_l1_avg=tavg(v_l1), v_lk_avg=tavg(v_lk), v_lm_avg=tavg(v_lm),
        d1=d[1], d2=d[2], d3=d[3], d4=d[4], d5=d[5],
        commutation_fraction=commutation, coast_fraction=coast,
        d34=d[3] + d[4],
    )


def trace_to_csv(trace: Trace) -> str:
    """Render a trace in the interchange CSV format.

    Header: t,mode,i_l1,i_lk,i_lm,v_c1,v_c2,v_c3,v_c4,v_o.  The mode
    column carries the named-interval id 1..5, or 0 during commutation
    and coast intervals.  Event instants appear as their own rows.
    """
    lines = ["t,mode,i_l1,i_lk,i_lm,v_c1,v_c2,v_c3,v_c4,v_o"]
    mode_ids = trace.mode_ids
    for i in range(len(trace.t)):
        row = trace.states[i]
        v_o = row[VC2] + row[VC3]
        vals = ",".join(f"{v:.12g}" for v in row)
        lines.append(f"{trace.t[i]:.12g},{mode_ids[i]},{vals},{v_o:.12g}")
    return "\n".join(lines) + "\n"
