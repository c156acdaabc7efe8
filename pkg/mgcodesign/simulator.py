'''
 simulator.py

Nonlinear time-domain simulation of the closed-loop DC microgrid with
ZIP loads: fixed-step RK4, load events between steps, a droop-control
baseline, and trajectory metrics and dissipativity audits.

State layout: [V_1..V_N, I_t1..I_tN, v_1..v_N, I_l1..I_lL].
Disturbance layout: (w_v, w_i, w_int) per DG, then one w per line.

Part of mgcodesign, dissipativity-based co-design tools for DC microgrids

See __version__ below for version information

The MIT License (MIT)

Copyright (c) 2024 Windell H. Oskay, Bantam Tools

Permission is hereby granted, free of charge, to any person obtaining a copy
of this software and associated documentation files (the "Software"), to deal
in the Software without restriction, including without limitation the rights
to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
copies of the Software, and to permit persons to whom the Software is
furnished to do so, subject to the following conditions:

The above copyright notice and this permission notice shall be included in all
copies or substantial portions of the Software.

THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
SOFTWARE.
'''

import dataclasses
import logging
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy import integrate as sp_integrate
from scipy import optimize

from . import local_synth
from . import netspec
from . import scenario
from . import sector
from . import text_utils

__version__ = "0.4.0"  # Dated 2024-11-02

logger = logging.getLogger(__name__)

V_GUARD = 1.0           # Volts; CPL pole guard
RK4_LIMIT = 2.5         # Max spectral radius * step before substepping
SETTLING_BAND = 0.01    # Fraction of V_r
TAIL_FRACTION = 0.2     # Final share of each window used for sharing metrics
OSCILLATION_WINDOW = 0.5


def version():  # Report version number for this document
    ''' Return version number '''
    return __version__


class SimulationDiverged(ArithmeticError):
    ''' Pole guard tripped or the state went non-finite '''

    def __init__(self, time_s, dg_index, reason):
        self.time = time_s
        self.dg_index = dg_index
        self.reason = reason
        where = "" if dg_index is None else f" at dg {dg_index + 1}"
        super().__init__(f"simulation diverged{where}, t = {time_s:.6f} s: {reason}")


@dataclass(frozen=True)
class ControlLaw:
    '''
    Co-designed hierarchical law u = u_S + K0 (x - x_E) + u_G, with
    x_E = (V_r, P_n I_s, 0) and u_G / L_t = K_I I_t. Each integrator
    state follows integrator_scale * (V - V_r).
    '''
    v_r: np.ndarray
    i_s: float
    k0: np.ndarray          # N x 3
    k_i: np.ndarray         # N x N consensus gains
    integrator_scale: float = 1.0

    kind = "dissipativity"

    @classmethod
    def from_designs(cls, selection, local, global_design=None):
        ''' Assemble from the design stages; K_I = 0 without a global design '''
        n_dg = len(selection.v_r)
        k_i = np.zeros((n_dg, n_dg)) if global_design is None else global_design.k_i
        return cls(np.asarray(selection.v_r, dtype=float), float(selection.i_s),
                   np.asarray(local.k0, dtype=float), np.asarray(k_i, dtype=float),
                   float(local.integrator_scale))

    def u_s(self, spec):
        ''' Steady-state inputs V_r + R_t P_n I_s '''
        return self.v_r + spec.param_vector("r_t") * spec.param_vector("p_n") * self.i_s

    def at(self, t_now):  # pylint: disable=unused-argument
        ''' Law in force at t_now; time invariant '''
        return self

    def target_state(self, spec):
        ''' Per-DG design operating point x_E as an N x 3 array '''
        return np.column_stack([self.v_r, spec.param_vector("p_n") * self.i_s,
                                np.zeros(spec.n_dg)])


@dataclass(frozen=True)
class DroopConfig:
    '''
    Baseline: primary droop u = V_r - m I_t with optional secondary
    restoration u -= k_s v, where every v integrates mean(V) - mean(V_r).
    Restoration switches on at secondary_start; before that v is held.
    '''
    v_r: np.ndarray
    m: np.ndarray
    secondary: bool = True
    k_s: float = 2.0
    secondary_start: float = 0.0

    kind = "droop"

    @classmethod
    def default(cls, spec, v_r, ratio=0.05, secondary=True, k_s=2.0, secondary_start=0.0):
        ''' m_i = ratio * V_r / I_rated with I_rated = P_n / V_r '''
        v_r = np.broadcast_to(np.asarray(v_r, dtype=float), (spec.n_dg,)).copy()
        rated = spec.param_vector("p_n") / v_r
        return cls(v_r, ratio * v_r / rated, secondary, k_s, secondary_start)

    def at(self, t_now):
        ''' Law in force at t_now '''
        if self.secondary and t_now < self.secondary_start:
            return dataclasses.replace(self, secondary=False)
        return self


@dataclass
class SimState:
    ''' One state of the network at time t '''
    t: float
    v: np.ndarray
    i_t: np.ndarray
    v_int: np.ndarray
    i_line: np.ndarray

    @classmethod
    def from_vector(cls, spec, t, x):
        ''' Split a stacked state vector '''
        n_dg = spec.n_dg
        return cls(t, x[:n_dg].copy(), x[n_dg:2 * n_dg].copy(), x[2 * n_dg:3 * n_dg].copy(),
                   x[3 * n_dg:].copy())

    def vector(self):
        ''' Stacked state vector '''
        return np.concatenate([self.v, self.i_t, self.v_int, self.i_line])


@dataclass
class SimTrace:
    ''' Sampled trajectory with its load windows '''
    spec: netspec.NetworkSpec
    law_kind: str
    v_r: np.ndarray
    t: np.ndarray
    states: np.ndarray
    inputs: np.ndarray
    disturbances: Optional[np.ndarray]
    windows: List[Tuple[float, netspec.NetworkSpec]]
    duration: float
    dt: float
    substeps: List[int] = field(default_factory=list)

    @property
    def voltages(self):
        return self.states[:, :self.spec.n_dg]

    @property
    def currents(self):
        n_dg = self.spec.n_dg
        return self.states[:, n_dg:2 * n_dg]

    @property
    def integrators(self):
        n_dg = self.spec.n_dg
        return self.states[:, 2 * n_dg:3 * n_dg]

    @property
    def line_currents(self):
        return self.states[:, 3 * self.spec.n_dg:]

    def window_of(self, index):
        ''' Window index active at sample index '''
        starts = [start for start, _ in self.windows]
        return int(np.searchsorted(starts, self.t[index], side="right")) - 1

    def to_csv(self):
        ''' Plot-ready CSV: t, V, It, v, Il, u columns '''
        spec = self.spec
        header = (["t"] + [f"V_{k + 1}" for k in range(spec.n_dg)]
                  + [f"It_{k + 1}" for k in range(spec.n_dg)]
                  + [f"v_{k + 1}" for k in range(spec.n_dg)]
                  + [f"Il_{k + 1}" for k in range(spec.n_line)]
                  + [f"u_{k + 1}" for k in range(spec.n_dg)])
        rows = [",".join(header)]
        for t_value, x_row, u_row in zip(self.t, self.states, self.inputs):
            rows.append(text_utils.csv_line([t_value, *x_row, *u_row]))
        return "\n".join(rows) + "\n"


def _layout(spec):
    n_dg = spec.n_dg
    return (slice(0, n_dg), slice(n_dg, 2 * n_dg), slice(2 * n_dg, 3 * n_dg),
            slice(3 * n_dg, 3 * n_dg + spec.n_line))


def disturbance_gain(spec):
    ''' Matrix mapping the disturbance vector into state derivatives '''
    n_dg, n_line = spec.n_dg, spec.n_line
    gain = np.zeros((3 * n_dg + n_line, 3 * n_dg + n_line))
    for dg in spec.dgs:
        i = dg.index
        gain[i, 3 * i] = 1.0 / dg.c_t
        gain[n_dg + i, 3 * i + 1] = 1.0 / dg.l_t
        gain[2 * n_dg + i, 3 * i + 2] = 1.0
    for line in spec.lines:
        gain[3 * n_dg + line.index, 3 * n_dg + line.index] = 1.0 / line.l
    return gain


def control_input(spec, law, x):
    ''' Converter input u for every DG '''
    s_v, s_i, s_int, _ = _layout(spec)
    if law.kind == "droop":
        u = law.v_r - law.m * x[s_i]
        if law.secondary:
            u = u - law.k_s * x[s_int]
        return u
    local = np.column_stack([x[s_v], x[s_i], x[s_int]]) - law.target_state(spec)
    return (law.u_s(spec) + np.sum(law.k0 * local, axis=1)
            + spec.param_vector("l_t") * (law.k_i @ x[s_i]))


def rhs(spec, law, x, w=None):
    '''
    Full nonlinear vector field for the load configuration in spec.
    Raise SimulationDiverged when a PCC voltage is at or below V_GUARD.
    '''
    s_v, s_i, s_int, s_l = _layout(spec)
    volts = x[s_v]
    low = np.flatnonzero(volts <= V_GUARD)
    if low.size:
        raise SimulationDiverged(float("nan"), int(low[0]), "pole guard")
    incidence = netspec.incidence_of(spec)
    load = (spec.param_vector("y_l") * volts + spec.param_vector("i_bar")
            + spec.param_vector("p_l") / volts)
    u = control_input(spec, law, x)
    out = np.empty_like(x, dtype=float)
    out[s_v] = (x[s_i] - load - incidence @ x[s_l]) / spec.param_vector("c_t")
    out[s_i] = (-volts - spec.param_vector("r_t") * x[s_i] + u) / spec.param_vector("l_t")
    if law.kind == "droop":
        out[s_int] = (np.mean(volts) - np.mean(law.v_r)) if law.secondary else 0.0
    else:
        out[s_int] = law.integrator_scale * (volts - law.v_r)
    if spec.n_line:
        r_line = np.array([line.r for line in spec.lines])
        l_line = np.array([line.l for line in spec.lines])
        out[s_l] = (-r_line * x[s_l] + incidence.T @ volts) / l_line
    if w is not None:
        out = out + disturbance_gain(spec) @ w
    return out


@dataclass
class AffineModel:
    ''' x' = M x + c - cpl / V (voltage rows) + E w, for one load configuration '''
    matrix: np.ndarray
    offset: np.ndarray
    cpl: np.ndarray
    gain: np.ndarray
    n_dg: int

    def derivative(self, x, w=None):
        out = self.matrix @ x + self.offset
        out[:self.n_dg] -= self.cpl / x[:self.n_dg]
        if w is not None:
            out += self.gain @ w
        return out

    def spectral_radius(self, v_ref):
        ''' Of the Jacobian at V = v_ref '''
        jac = self.matrix.copy()
        idx = np.arange(self.n_dg)
        jac[idx, idx] += self.cpl / np.asarray(v_ref) ** 2
        return float(np.max(np.abs(np.linalg.eigvals(jac))))


def affine_model(spec, law):
    ''' Collect the closed loop of one configuration into an AffineModel '''
    n_dg = spec.n_dg
    s_v, s_i, s_int, s_l = _layout(spec)
    dim = 3 * n_dg + spec.n_line
    c_t, l_t = spec.param_vector("c_t"), spec.param_vector("l_t")
    r_t, p_n = spec.param_vector("r_t"), spec.param_vector("p_n")
    incidence = netspec.incidence_of(spec)
    matrix = np.zeros((dim, dim))
    offset = np.zeros(dim)

    matrix[s_v, s_v] = np.diag(-spec.param_vector("y_l") / c_t)
    matrix[s_v, s_i] = np.diag(1.0 / c_t)
    matrix[s_v, s_l] = -incidence / c_t[:, None]
    offset[s_v] = -spec.param_vector("i_bar") / c_t
    matrix[s_i, s_v] = np.diag(-1.0 / l_t)
    matrix[s_i, s_i] = np.diag(-r_t / l_t)
    if spec.n_line:
        r_line = np.array([line.r for line in spec.lines])
        l_line = np.array([line.l for line in spec.lines])
        matrix[s_l, s_v] = incidence.T / l_line[:, None]
        matrix[s_l, s_l] = np.diag(-r_line / l_line)

    if law.kind == "droop":
        matrix[s_i, s_i] += np.diag(-law.m / l_t)
        offset[s_i] = law.v_r / l_t
        if law.secondary:
            matrix[s_i, s_int] = np.diag(-law.k_s / l_t)
            matrix[s_int, s_v] = np.full((n_dg, n_dg), 1.0 / n_dg)
            offset[s_int] = -np.mean(law.v_r)
    else:
        k_p, k_mid, k_int = law.k0[:, 0], law.k0[:, 1], law.k0[:, 2]
        matrix[s_i, s_v] += np.diag(k_p / l_t)
        matrix[s_i, s_i] += np.diag(k_mid / l_t) + law.k_i
        matrix[s_i, s_int] = np.diag(k_int / l_t)
        offset[s_i] = (law.u_s(spec) - k_p * law.v_r - k_mid * p_n * law.i_s) / l_t
        matrix[s_int, s_v] = law.integrator_scale * np.eye(n_dg)
        offset[s_int] = -law.integrator_scale * law.v_r
    return AffineModel(matrix, offset, spec.param_vector("p_l") / c_t,
                       disturbance_gain(spec), n_dg)


def _droop_equilibrium(spec, law):
    n_dg = spec.n_dg
    gmat = _line_laplacian(spec) + np.diag(spec.param_vector("y_l"))
    i_bar, p_l = spec.param_vector("i_bar"), spec.param_vector("p_l")
    series = spec.param_vector("r_t") + law.m

    def residual(z):
        volts, shift = z[:n_dg], z[n_dg]
        current = (law.v_r + shift - volts) / series
        out = current - gmat @ volts - i_bar - p_l / volts
        closure = np.mean(volts) - np.mean(law.v_r) if law.secondary else shift
        return np.append(out, closure)

    guess = np.append(law.v_r, 0.0)
    solution, info, flag, msg = optimize.fsolve(residual, guess, full_output=True,
                                                xtol=1e-13)
    if flag != 1 or np.max(np.abs(residual(solution))) > 1e-8:
        raise SimulationDiverged(0.0, None, f"no droop operating point: {msg.strip()}")
    logger.debug("Droop operating point after %d evaluations", info["nfev"])
    volts, shift = solution[:n_dg], solution[n_dg]
    current = (law.v_r + shift - volts) / series
    v_int = np.full(n_dg, -shift / law.k_s) if law.secondary else np.zeros(n_dg)
    return volts, current, v_int


def _line_laplacian(spec):
    if not spec.n_line:
        return np.zeros((spec.n_dg, spec.n_dg))
    incidence = netspec.incidence_of(spec)
    r_line = np.array([line.r for line in spec.lines])
    return incidence @ np.diag(1.0 / r_line) @ incidence.T


def initial_state(spec, law):
    '''
    Equilibrium of the closed loop for the loads in spec. For the
    co-designed law V = V_r and the integrators absorb any mismatch
    between the actual and the design currents.
    '''
    if law.kind == "droop":
        volts, current, v_int = _droop_equilibrium(spec, law)
    else:
        volts = law.v_r.copy()
        current = ((_line_laplacian(spec) + np.diag(spec.param_vector("y_l"))) @ volts
                   + spec.param_vector("i_bar") + spec.param_vector("p_l") / volts)
        k_mid, k_int = law.k0[:, 1], law.k0[:, 2]
        if np.any(np.abs(k_int) < 1e-12):
            raise ValueError("integral gain is zero; no equilibrium with V = V_r")
        mismatch = current - spec.param_vector("p_n") * law.i_s
        consensus = spec.param_vector("l_t") * (law.k_i @ current)
        v_int = ((spec.param_vector("r_t") - k_mid) * mismatch - consensus) / k_int
    if spec.n_line:
        r_line = np.array([line.r for line in spec.lines])
        i_line = netspec.incidence_of(spec).T @ volts / r_line
    else:
        i_line = np.zeros(0)
    return np.concatenate([volts, current, v_int, i_line])


def _substeps(model, v_ref, dt):
    radius = model.spectral_radius(v_ref)
    count = max(1, int(math.ceil(radius * dt / RK4_LIMIT)))
    if count > 1:
        logger.info("Spectral radius %.3g 1/s: %d RK4 substeps per step", radius, count)
    return count


def _guard(spec, t_now, x):
    if not np.all(np.isfinite(x)):
        bad = np.flatnonzero(~np.isfinite(x))[0]
        raise SimulationDiverged(t_now, int(bad % spec.n_dg) if bad < 3 * spec.n_dg else None,
                                 "non-finite state")
    low = np.flatnonzero(x[:spec.n_dg] <= V_GUARD)
    if low.size:
        raise SimulationDiverged(t_now, int(low[0]), "pole guard")


def integrate(spec, law, scen, x0=None, signal=None):
    '''
    Classical RK4 at the scenario step with load events applied between
    steps. Starts from the equilibrium of the t = 0 configuration unless
    x0 is given. signal(t) returns the disturbance vector; one is built
    from the scenario's [disturbance] section when signal is None.
    Return a SimTrace sampled every dt * decimation.
    '''
    problems = scenario.check(scen, spec.n_dg)
    if problems:
        raise ValueError("; ".join(problems))
    if signal is None and scen.disturbance is not None and not scen.disturbance.is_zero():
        signal = scenario.DisturbanceSignal(scen.disturbance, spec.n_dg, spec.n_line,
                                            scen.duration)
    config = scen.initial_spec(spec)
    active = law.at(0.0)
    model = affine_model(config, active)
    x = initial_state(config, active) if x0 is None else np.array(x0, dtype=float)
    v_ref = law.v_r
    count = _substeps(model, v_ref, scen.dt)
    substeps = [count]
    windows = [(0.0, config)]
    pending = scen.event_steps()
    switch_step = None
    if active is not law:
        switch_step = int(round(law.secondary_start / scen.dt))

    n_steps = int(round(scen.duration / scen.dt))
    dt = scen.dt

    def deriv(t_now, state):
        return model.derivative(state, None if signal is None else signal(t_now))

    times, states, inputs, dist = [0.0], [x.copy()], [control_input(config, active, x)], []
    if signal is not None:
        dist.append(signal(0.0))
    start = time.time()
    for step in range(n_steps):
        if step == switch_step:
            active = law
            model = affine_model(config, active)
            count = _substeps(model, v_ref, dt)
            logger.debug("t = %.6f s: secondary restoration on", step * dt)
        while pending and pending[0][0] <= step:
            _, event = pending.pop(0)
            config = scenario.apply_event(config, spec, event)
            model = affine_model(config, active)
            count = _substeps(model, v_ref, dt)
            substeps.append(count)
            windows.append((event.time, config))
            logger.debug("t = %.6f s: %s of %s set", step * dt, event.field,
                         "all" if event.target is None else f"dg {event.target + 1}")
        h = dt / count
        t_now = step * dt
        for _ in range(count):
            k1 = deriv(t_now, x)
            k2 = deriv(t_now + 0.5 * h, x + 0.5 * h * k1)
            k3 = deriv(t_now + 0.5 * h, x + 0.5 * h * k2)
            k4 = deriv(t_now + h, x + h * k3)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t_now += h
        t_now = (step + 1) * dt
        _guard(spec, t_now, x)
        if (step + 1) % scen.decimation == 0:
            times.append(t_now)
            states.append(x.copy())
            inputs.append(control_input(config, active, x))
            if signal is not None:
                dist.append(signal(t_now))
    logger.info("Simulated %s of %s control in %s", text_utils.format_hms(scen.duration),
                law.kind, text_utils.format_hms(time.time() - start))
    return SimTrace(spec, law.kind, np.asarray(law.v_r, dtype=float), np.array(times),
                    np.array(states), np.array(inputs),
                    np.array(dist) if signal is not None else None,
                    windows, scen.duration, dt, substeps)


def run_droop(spec, droop, scen, x0=None, signal=None):
    ''' integrate() under the droop baseline '''
    return integrate(spec, droop, scen, x0=x0, signal=signal)


@dataclass
class WindowMetrics:
    ''' Metrics of one inter-event window '''
    start: float
    end: float
    max_deviation: float        # max |V - V_r|, V
    final_deviation: float      # max |V - V_r| at the window's last sample
    settling_time: float        # s after start to stay within the band; nan if never
    dispersion: float           # max_ij |I_i/P_ni - I_j/P_nj| over the tail
    sharing_ratio: float        # mean I_t/P_n over the tail
    oscillation: float          # Peak-to-peak V over the first OSCILLATION_WINDOW s


@dataclass
class MetricReport:
    ''' Per-window metrics plus the integrator RMS over the whole trace '''
    windows: List[WindowMetrics]
    integrator_rms: float

    def to_csv(self):
        ''' One row per window '''
        out = ["start,end,max_deviation,final_deviation,settling_time,dispersion,"
               "sharing_ratio,oscillation"]
        for item in self.windows:
            out.append(text_utils.csv_line([item.start, item.end, item.max_deviation,
                                            item.final_deviation, item.settling_time,
                                            item.dispersion, item.sharing_ratio,
                                            item.oscillation]))
        out.append("")
        out.append(f"integrator_rms,{text_utils.format_short(self.integrator_rms)}")
        return "\n".join(out) + "\n"


def metrics(trace, v_r=None):
    ''' Voltage regulation and current sharing metrics per load window '''
    v_r = trace.v_r if v_r is None else np.asarray(v_r, dtype=float)
    p_n = trace.spec.param_vector("p_n")
    deviation = np.abs(trace.voltages - v_r)
    band = SETTLING_BAND * v_r
    starts = [start for start, _ in trace.windows]
    ends = starts[1:] + [trace.duration]
    out = []
    for start, end in zip(starts, ends):
        mask = (trace.t >= start - 1e-12) & (trace.t <= end + 1e-12)
        if not np.any(mask):
            continue
        t_win = trace.t[mask]
        dev = deviation[mask]
        outside = np.any(dev > band, axis=1)
        if not outside.any():
            settling = 0.0
        elif outside[-1]:
            settling = float("nan")
        else:
            settling = float(t_win[np.flatnonzero(outside)[-1] + 1] - start)
        tail = t_win >= end - TAIL_FRACTION * (end - start)
        ratio = trace.currents[mask][tail] / p_n
        dispersion = float(np.max(np.ptp(ratio, axis=1))) if ratio.size else 0.0
        osc_mask = t_win <= start + OSCILLATION_WINDOW
        volts = trace.voltages[mask][osc_mask]
        out.append(WindowMetrics(start, end, float(dev.max()), float(dev[-1].max()),
                                 settling, dispersion,
                                 float(ratio.mean()) if ratio.size else 0.0,
                                 float(np.max(np.ptp(volts, axis=0)))))
    rms = float(np.sqrt(np.mean(trace.integrators ** 2))) if trace.integrators.size else 0.0
    return MetricReport(out, rms)


@dataclass
class Criterion:
    ''' One pass/fail line of an acceptance summary '''
    name: str
    value: float
    limit: float
    passed: bool


def acceptance_summary(report, voltage_band=0.5, settle_limit=0.5, dispersion_share=0.02):
    '''
    Check a MetricReport against the regulation targets: steady-state
    |V - V_r| within voltage_band volts at the end of every window,
    settling within settle_limit seconds after every event, and a
    final-window dispersion within dispersion_share of the sharing ratio.
    '''
    if not report.windows:
        return []
    worst_final = max(item.final_deviation for item in report.windows)
    settle = [item.settling_time for item in report.windows[1:]] or [0.0]
    worst_settle = float("inf") if any(math.isnan(s) for s in settle) else max(settle)
    last = report.windows[-1]
    share_limit = dispersion_share * max(abs(last.sharing_ratio), 1e-12)
    return [
        Criterion("steady_state_deviation", worst_final, voltage_band,
                  worst_final <= voltage_band),
        Criterion("settling_time", worst_settle, settle_limit, worst_settle <= settle_limit),
        Criterion("final_dispersion", last.dispersion, share_limit,
                  last.dispersion <= share_limit),
    ]


def summary_text(criteria):
    ''' Human-readable acceptance summary, one criterion per line '''
    out = []
    for item in criteria:
        verdict = "PASS" if item.passed else "FAIL"
        out.append(f"{verdict} {item.name}: {text_utils.format_short(item.value)} "
                   f"(limit {text_utils.format_short(item.limit)})")
    return "\n".join(out) + "\n"


def comparison_csv(reports):
    '''
    Side-by-side window metrics of several runs. reports maps a label
    (e.g. "dissipativity", "droop") to its MetricReport.
    '''
    out = ["controller,start,max_deviation,settling_time,dispersion,oscillation"]
    for label, report in reports.items():
        for item in report.windows:
            out.append(text_utils.csv_line([label, item.start, item.max_deviation,
                                            item.settling_time, item.dispersion,
                                            item.oscillation]))
    return "\n".join(out) + "\n"


def equilibrium_states(trace, law):
    ''' Equilibrium state of each window's configuration '''
    return [initial_state(config, law) for _, config in trace.windows]


def l2_gain_ratios(spec, law, dist, members=20, duration=1.0, dt=1e-5):
    '''
    Integrate from equilibrium under seeded disturbance realisations and
    return the energy ratios sqrt(int |z|^2 / int |w|^2), with z the
    state error. Realisations with zero energy are skipped.
    '''
    ratios = []
    scen = scenario.Scenario(duration, dt, 1)
    x_eq = initial_state(spec, law)
    for member in range(members):
        signal = scenario.DisturbanceSignal(dist, spec.n_dg, spec.n_line, duration,
                                            seed=dist.seed + member)
        trace = integrate(spec, law, scen, signal=signal)
        w_energy = sp_integrate.trapezoid(np.sum(trace.disturbances ** 2, axis=1), trace.t)
        if w_energy <= 0:
            continue
        z_energy = sp_integrate.trapezoid(np.sum((trace.states - x_eq) ** 2, axis=1), trace.t)
        ratios.append(float(np.sqrt(z_energy / w_energy)))
        logger.debug("Disturbance member %d: ratio %.6g", member, ratios[-1])
    return ratios


def empirical_l2_gain(spec, law, dist, members=20, duration=1.0, dt=1e-5):
    ''' Largest energy ratio over the ensemble; nan when every member is empty '''
    ratios = l2_gain_ratios(spec, law, dist, members, duration, dt)
    return max(ratios) if ratios else float("nan")


@dataclass
class AuditReport:
    ''' Worst relative supply-rate excess along a trajectory '''
    dg_excess: np.ndarray
    line_excess: np.ndarray

    @property
    def worst(self):
        ''' Largest excess over every DG and line '''
        values = np.concatenate([self.dg_excess, self.line_excess])
        return float(values.max()) if values.size else 0.0


def _trace_errors(trace, law):
    equilibria = equilibrium_states(trace, law)
    for index in range(len(trace.t)):
        window = trace.window_of(index)
        config = trace.windows[window][1]
        w = None if trace.disturbances is None else trace.disturbances[index]
        x = trace.states[index]
        yield config, x - equilibria[window], rhs(config, law, x, w), w


def dissipation_audit(trace, law, local):
    '''
    Along a trace, compare each DG's and line's storage derivative with
    its IF-OFP supply rate. The DG input u~ is recovered from the
    identity x~' = (A + B K0) x~ + T g(V~) + u~, so it includes the line
    coupling, the consensus term and the disturbance.
    Excess is normalised by 1 + |x~|^2 + |u~|^2.
    '''
    spec = trace.spec
    n_dg = spec.n_dg
    dg_excess = np.zeros(n_dg)
    line_excess = np.zeros(spec.n_line)
    for config, x_err, x_dot, w in _trace_errors(trace, law):
        for dg in spec.dgs:
            i = dg.index
            cert = local.certificates[i]
            xt = np.array([x_err[i], x_err[n_dg + i], x_err[2 * n_dg + i]])
            xd = np.array([x_dot[i], x_dot[n_dg + i], x_dot[2 * n_dg + i]])
            A, B, _ = local_synth.dg_matrices(dg, spec.loads[i], law.integrator_scale)
            a_hat = A + B @ law.k0[i][None, :]
            g_vec = np.zeros(3)
            g_vec[0] = sector.cpl_nonlinearity(dg, spec.loads[i], law.v_r[i], xt[0])
            u_t = xd - a_hat @ xt - g_vec
            v_dot = 2.0 * xt @ cert.P @ xd
            supply = -cert.nu * u_t @ u_t + u_t @ xt - cert.rho * xt @ xt
            scale = 1.0 + xt @ xt + u_t @ u_t
            dg_excess[i] = max(dg_excess[i], (v_dot - supply) / scale)
        for line in spec.lines:
            k = line.index
            cert = local.line_certificates[k]
            xt = x_err[3 * n_dg + k]
            u_t = x_dot[3 * n_dg + k] * line.l + line.r * xt
            v_dot = 2.0 * cert.P[0, 0] * xt * x_dot[3 * n_dg + k]
            supply = -cert.nu * u_t**2 + u_t * xt - cert.rho * xt**2
            scale = 1.0 + xt**2 + u_t**2
            line_excess[k] = max(line_excess[k], (v_dot - supply) / scale)
    return AuditReport(np.maximum(dg_excess, 0.0), np.maximum(line_excess, 0.0))


def storage_profile(trace, law, local, global_design):
    '''
    Network storage sum_i p_i x~_i^T P_i x~_i + sum_l p_l P_l x~_l^2 and its
    derivative at every sample. Return (storage, derivative) arrays.
    '''
    spec = trace.spec
    n_dg = spec.n_dg
    storage, rate = [], []
    for _, x_err, x_dot, _ in _trace_errors(trace, law):
        total, d_total = 0.0, 0.0
        for i in range(n_dg):
            idx = [i, n_dg + i, 2 * n_dg + i]
            p_mat = global_design.p[i] * local.certificates[i].P
            total += x_err[idx] @ p_mat @ x_err[idx]
            d_total += 2.0 * x_err[idx] @ p_mat @ x_dot[idx]
        for k in range(spec.n_line):
            weight = global_design.p_bar[k] * local.line_certificates[k].P[0, 0]
            total += weight * x_err[3 * n_dg + k] ** 2
            d_total += 2.0 * weight * x_err[3 * n_dg + k] * x_dot[3 * n_dg + k]
        storage.append(total)
        rate.append(d_total)
    return np.array(storage), np.array(rate)
