'''
 equilibrium.py

Operating-point computations: the equilibrium reached for a given
reference voltage vector, selection of the references and the common
current-sharing ratio, and the matching steady-state control inputs.

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

import logging
from dataclasses import dataclass

import cvxpy as cp
import numpy as np

from . import lmi
from . import netspec

__version__ = "0.4.0"  # Dated 2024-11-02

logger = logging.getLogger(__name__)

PICARD_TOL = 1e-9
PICARD_MAX_ITER = 50
RESIDUAL_TOL = 1e-6     # A; coupling equality at the selected reference


def version():  # Report version number for this document
    ''' Return version number '''
    return __version__


class EquilibriumError(ArithmeticError):
    ''' No admissible operating point, or the CPL fixed point did not settle '''


@dataclass
class EquilibriumPoint:
    ''' Equilibrium of the closed loop for one reference and load configuration '''
    v_e: np.ndarray         # PCC voltages, equal to V_r
    i_te: np.ndarray        # Converter currents
    i_bar_e: np.ndarray     # Line currents
    u_e: np.ndarray         # Converter inputs
    i_s: float              # Common ratio I_t/P_n, when sharing holds
    v_int: np.ndarray       # Integrator states

    def state(self):
        ''' Stacked simulator state [V, I_t, v, I_l] '''
        return np.concatenate([self.v_e, self.i_te, self.v_int, self.i_bar_e])

    def sharing_dispersion(self, spec):
        ''' max_ij |I_ti/P_ni - I_tj/P_nj| '''
        ratio = self.i_te / spec.param_vector("p_n")
        return float(np.ptp(ratio)) if ratio.size else 0.0


@dataclass
class ReferenceSelection:
    ''' Chosen references V_r and current-sharing ratio I_s '''
    v_r: np.ndarray
    i_s: float
    objective: float
    feasible: bool
    iterations: int = 0
    residual: float = 0.0   # Max abs residual of the coupling equality


def conductance_matrix(spec):
    ''' B R^-1 B^T + Y_L '''
    incidence = netspec.incidence_of(spec)
    r_line = np.array([line.r for line in spec.lines], dtype=float)
    laplacian = incidence @ np.diag(1.0 / r_line) @ incidence.T if spec.n_line else \
        np.zeros((spec.n_dg, spec.n_dg))
    return laplacian + np.diag(spec.param_vector("y_l"))


def equilibrium_from_reference(spec, v_r, i_s):
    '''
    Closed-form equilibrium for references v_r. I_t follows from current
    balance at every PCC, line currents from the voltage differences, and
    u_E = V_r + R_t I_t. Integrator states are fixed to zero.
    '''
    v_r = np.asarray(v_r, dtype=float)
    if np.any(v_r <= 0):
        raise ValueError("reference voltages must be > 0")
    if not np.all(np.isfinite(v_r)):
        raise ValueError("reference voltages must be finite")
    gmat = conductance_matrix(spec)
    if spec.n_dg > 1 and np.linalg.matrix_rank(gmat) < spec.n_dg:
        logger.info("B R^-1 B^T + Y_L is singular; equilibrium is not unique")
    incidence = netspec.incidence_of(spec)
    r_line = np.array([line.r for line in spec.lines], dtype=float)
    i_te = gmat @ v_r + spec.param_vector("i_bar") + spec.param_vector("p_l") / v_r
    i_bar_e = (incidence.T @ v_r) / r_line if spec.n_line else np.zeros(0)
    u_e = v_r + spec.param_vector("r_t") * i_te
    return EquilibriumPoint(v_r.copy(), i_te, i_bar_e, u_e, float(i_s),
                            np.zeros(spec.n_dg))


def residuals(spec, point):
    '''
    Row residuals of the steady-state equations: PCC current balance,
    converter KVL, integrator and line KVL. Return the max abs value.
    '''
    incidence = netspec.incidence_of(spec)
    r_t = spec.param_vector("r_t")
    r_line = np.array([line.r for line in spec.lines], dtype=float)
    load = (spec.param_vector("y_l") * point.v_e + spec.param_vector("i_bar")
            + spec.param_vector("p_l") / point.v_e)
    balance = point.i_te - load - incidence @ point.i_bar_e
    kvl = -point.v_e - r_t * point.i_te + point.u_e
    rows = [balance, kvl]
    if spec.n_line:
        rows.append(-r_line * point.i_bar_e + incidence.T @ point.v_e)
    return float(max(np.max(np.abs(row)) for row in rows if row.size))


def _kkt_solve(gmat, weights, v_bar, const, alpha_v, alpha_i):
    '''
    Stationarity plus the equality, with the bounds ignored:
    2 a_V (V - V_bar) - G mu = 0, a_I + mu^T P_n 1 = 0, P_n 1 s - G V = c.
    '''
    n_dg = len(v_bar)
    kkt = np.zeros((2 * n_dg + 1, 2 * n_dg + 1))
    rhs = np.zeros(2 * n_dg + 1)
    kkt[:n_dg, :n_dg] = 2 * alpha_v * np.eye(n_dg)
    kkt[:n_dg, n_dg + 1:] = -gmat.T
    rhs[:n_dg] = 2 * alpha_v * v_bar
    kkt[n_dg, n_dg + 1:] = weights
    rhs[n_dg] = -alpha_i
    kkt[n_dg + 1:, :n_dg] = -gmat
    kkt[n_dg + 1:, n_dg] = weights
    rhs[n_dg + 1:] = const
    solution = np.linalg.solve(kkt, rhs)
    return solution[:n_dg], float(solution[n_dg])


def _qp_solve(spec, gmat, weights, v_bar, const, alpha_v, alpha_i, solver=None):
    ''' Same program with the bounds, through cvxpy; None when infeasible '''
    v_var = cp.Variable(spec.n_dg)
    s_var = cp.Variable()
    problem = cp.Problem(
        cp.Minimize(alpha_v * cp.sum_squares(v_var - v_bar) + alpha_i * s_var),
        [v_var >= spec.v_min, v_var <= spec.v_max, s_var >= 0, s_var <= 1,
         weights * s_var - gmat @ v_var == const])
    try:
        problem.solve(solver=lmi.default_solver(solver))
    except cp.error.SolverError as err:
        logger.info("Error context:", exc_info=err)
        raise lmi.SolverError("reference selection QP failed") from err
    if problem.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        return None
    v_r = np.clip(np.asarray(v_var.value, dtype=float), spec.v_min, spec.v_max)
    return v_r, float(np.clip(s_var.value, 0.0, 1.0))


def _in_bounds(spec, v_r, i_s):
    return (np.all(v_r >= spec.v_min - 1e-12) and np.all(v_r <= spec.v_max + 1e-12)
            and -1e-12 <= i_s <= 1 + 1e-12)


def select_reference(spec, v_bar=None, alpha_v=1.0, alpha_i=1.0, solver=None,
                     tol=PICARD_TOL, max_iter=PICARD_MAX_ITER, residual_tol=RESIDUAL_TOL):
    '''
    Choose V_r and I_s minimising alpha_V |V_r - V_bar|^2 + alpha_I I_s
    subject to the voltage band, 0 <= I_s <= 1 and current sharing
    P_n 1 I_s - (B R^-1 B^T + Y_L) V_r = I_bar + diag(V_r)^-1 P_L.

    The CPL term is frozen at the previous iterate and the resulting
    convex program solved again until V_r moves less than tol.
    Return a ReferenceSelection; its feasible flag is False when the bounds
    cannot be met. Raise EquilibriumError when the iteration does not settle
    or the returned point misses the coupling equality by more than
    residual_tol amperes.
    '''
    if v_bar is None:
        v_bar = np.full(spec.n_dg, 0.5 * (spec.v_min + spec.v_max))
    v_bar = np.broadcast_to(np.asarray(v_bar, dtype=float), (spec.n_dg,)).copy()
    if np.any(v_bar < spec.v_min) or np.any(v_bar > spec.v_max):
        raise ValueError("desired references must lie within [V_min, V_max]")

    gmat = conductance_matrix(spec)
    weights = spec.param_vector("p_n")
    i_bar = spec.param_vector("i_bar")
    p_l = spec.param_vector("p_l")
    v_r = v_bar.copy()
    i_s = 0.0
    for iteration in range(1, max_iter + 1):
        const = i_bar + p_l / v_r
        try:
            v_new, i_s = _kkt_solve(gmat, weights, v_bar, const, alpha_v, alpha_i)
        except np.linalg.LinAlgError:
            v_new, i_s = v_bar, -1.0
        if not _in_bounds(spec, v_new, i_s):
            result = _qp_solve(spec, gmat, weights, v_bar, const, alpha_v, alpha_i, solver)
            if result is None:
                logger.warning("Reference selection infeasible: load exceeds "
                               "rated capacity within the voltage band")
                return ReferenceSelection(v_r, float("nan"), float("inf"), False,
                                          iteration, float("inf"))
            v_new, i_s = result
        step = float(np.max(np.abs(v_new - v_r)))
        v_r = v_new
        logger.debug("Reference iteration %d: step %.3g V, I_s %.6g", iteration, step, i_s)
        if step < tol or not np.any(p_l):
            break
    else:
        raise EquilibriumError(f"CPL fixed point did not converge in {max_iter} iterations")

    residual = float(np.max(np.abs(weights * i_s - gmat @ v_r - i_bar - p_l / v_r)))
    if not residual <= residual_tol:
        raise EquilibriumError(f"reference misses current sharing by {residual:.3g} A "
                               f"(limit {residual_tol:g} A)")
    objective = float(alpha_v * np.sum((v_r - v_bar) ** 2) + alpha_i * i_s)
    return ReferenceSelection(v_r, float(i_s), objective, True, iteration, residual)


def steady_state_inputs(spec, selection):
    ''' u_S = V_r + R_t P_n I_s per DG '''
    if not selection.feasible:
        raise ValueError("reference selection is not feasible")
    return selection.v_r + spec.param_vector("r_t") * spec.param_vector("p_n") * selection.i_s
