'''
 local_synth.py

Local controller synthesis: one joint LMI over all DGs and lines that
designs the PI state-feedback gains, certifies DG and line passivity
indices, and enforces the conditions the global co-design needs.

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
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import cvxpy as cp
import numpy as np

from . import lmi
from . import netspec
from . import sector
from . import text_utils

__version__ = "0.4.0"  # Dated 2024-11-02

logger = logging.getLogger(__name__)

I3 = np.eye(3)


def version():  # Report version number for this document
    ''' Return version number '''
    return __version__


class LocalInfeasible(RuntimeError):
    ''' The joint local LMI has no solution '''

    def __init__(self, status, diagnostic):
        self.stage = "local"
        self.status = status
        self.diagnostic = diagnostic
        super().__init__(f"local synthesis {status}: {diagnostic}")


def dg_matrices(dg, load, integrator_scale=1.0):
    '''
    Return (A, B, E) of one DG with state [V, I_t, v], where
    v' = integrator_scale * (V - V_r). The constant impedance load is part
    of A; the CPL is handled as a sector nonlinearity.
    '''
    A = np.array([[-load.y_l / dg.c_t, 1.0 / dg.c_t, 0.0],
                  [-1.0 / dg.l_t, -dg.r_t / dg.l_t, 0.0],
                  [integrator_scale, 0.0, 0.0]])
    B = np.array([[0.0], [1.0 / dg.l_t], [0.0]])
    E = np.diag([1.0 / dg.c_t, 1.0 / dg.l_t, 1.0])
    return A, B, E


def line_matrices(line):
    ''' Return (A_bar, B_bar) of one RL line '''
    return np.array([[-line.r / line.l]]), np.array([[1.0 / line.l]])


def _cell(value):
    ''' 1x1 block from a number or a scalar cvxpy expression '''
    if isinstance(value, cp.Expression):
        return cp.reshape(value, (1, 1), order="F")
    return np.array([[float(value)]])


def _scalar_matrix(rows, stacker):
    if stacker == "numpy":
        return np.array([[float(v) for v in row] for row in rows])
    return cp.bmat([[_cell(v) for v in row] for row in rows])


def dg_lmi(P_tilde, K_tilde, Z, nu, rho_tilde, A, B, stacker="numpy"):
    '''
    DG dissipativity block in the transformed variables P~ = P^-1,
    K~ = K P~ and Z = P~ R P~. Positive definiteness certifies
    IF-OFP(nu, 1/rho~) of the linear part plus the bound R on the CPL term.
    '''
    stack = lmi.get_stacker(stacker)
    zero = np.zeros((3, 3))
    closed = A @ P_tilde + B @ K_tilde
    coupling = 0.5 * P_tilde - I3
    return stack([[rho_tilde * I3, P_tilde, zero],
                  [P_tilde, -lmi.herm(closed) - Z, coupling],
                  [zero, coupling, -nu * I3]])


def sector_lmi(P_tilde, Z, lam_tilde, bound, stacker="numpy"):
    '''
    S-procedure block: positive semidefinite iff
    Z >= lam~ T T^T + m H(T T^T P~) + (delta^2 / lam~) P~ T T^T P~,
    which bounds the CPL cross term 2 x^T P T g by x^T R x on the sector.
    '''
    stack = lmi.get_stacker(stacker)
    sel = sector.SELECTOR
    ttt = sel @ sel.T
    top = Z - lam_tilde * ttt - bound.mid * (ttt @ P_tilde + P_tilde @ ttt)
    off = bound.half_width * (P_tilde @ sel)
    return stack([[top, off], [off.T, _cell(lam_tilde)]])


def line_lmi(y_bar, rho_bar, nu_bar, r_line, stacker="numpy"):
    ''' Line IF-OFP block with the scaled storage y = P_bar / L '''
    return _scalar_matrix([[2 * r_line * y_bar - rho_bar, 0.5 - y_bar],
                           [0.5 - y_bar, -nu_bar]], stacker)


def necessary_matrix(p_dg, p_line, nu, rho_tilde, gamma_tilde, nu_bar, rho_bar, xi,
                     b_il, c_t, stacker="numpy"):
    '''
    6x6 condition on the indices of one DG-line pair that the global
    co-design matrix needs; xi stands for nu_bar * rho~.
    '''
    cbar = -b_il / c_t
    c_il = b_il
    cross = -0.5 * p_dg * cbar * rho_tilde - 0.5 * c_il * p_line * rho_tilde
    rows = [
        [-p_dg * nu, 0, 0, 0, -p_dg * nu * cbar, -p_dg * nu],
        [0, -p_line * nu_bar, 0, -p_line * xi * c_il, 0, -p_line * nu_bar],
        [0, 0, 1, rho_tilde, 1, 0],
        [0, -c_il * xi * p_line, rho_tilde, p_dg * rho_tilde, cross, -0.5 * p_dg * rho_tilde],
        [-cbar * nu * p_dg, 0, 1, cross, p_line * rho_bar, -0.5 * p_line],
        [-nu * p_dg, -p_line * nu_bar, 0, -0.5 * p_dg * rho_tilde, -0.5 * p_line,
         gamma_tilde],
    ]
    return _scalar_matrix(rows, stacker)


def relaxation_matrix(nu_bar, rho_tilde, s_1, s_2, xi, stacker="numpy"):
    ''' 3x3 block tying xi to the product nu_bar * rho~ '''
    return _scalar_matrix([[1, nu_bar, rho_tilde],
                           [nu_bar, s_1, xi],
                           [rho_tilde, xi, s_2]], stacker)


def certificate_matrix(P, A_hat, R, nu, rho):
    '''
    Dissipation matrix of one DG with storage P, the CPL cross term
    bounded by x^T R x. PSD certifies IF-OFP(nu, rho) on the sector.
    '''
    return np.block([[-lmi.herm(P @ A_hat) - R - rho * I3, 0.5 * I3 - P],
                     [0.5 * I3 - P, -nu * I3]])


def sector_condition_matrix(P, R, lam_tilde, bound):
    ''' R - (lam~ P T T^T P + m H(P T T^T) + (delta^2 / lam~) T T^T); PSD required '''
    sel = sector.SELECTOR
    ttt = sel @ sel.T
    return (R - lam_tilde * P @ ttt @ P - bound.mid * lmi.herm(P @ ttt)
            - bound.half_width**2 / lam_tilde * ttt)


@dataclass
class LocalDesign:
    ''' Result of the joint local synthesis '''
    k0: np.ndarray                          # N x 3 gain rows [k_P, k_mid, k_I]
    certificates: List[lmi.PassivityCertificate]
    line_certificates: List[lmi.PassivityCertificate]
    gamma_tilde: np.ndarray
    lambda_tilde: np.ndarray
    r_tilde: List[np.ndarray]               # P~ Z^-1 P~
    r_matrix: List[np.ndarray]              # CPL bound R = P Z P
    xi: Dict[Tuple[int, int], float]
    s_1: Dict[Tuple[int, int], float]
    s_2: Dict[Tuple[int, int], float]
    p: np.ndarray                           # DG storage multipliers
    p_bar: np.ndarray                       # Line storage multipliers
    bounds: List[sector.SectorBound]
    structure: str = "full"
    objective: float = 0.0
    status: str = lmi.OPTIMAL
    lti_confirmed: List[bool] = field(default_factory=list)
    sector_excess: List[float] = field(default_factory=list)
    integrator_scale: float = 1.0

    @property
    def nu(self):
        ''' DG input indices '''
        return np.array([cert.nu for cert in self.certificates])

    @property
    def rho(self):
        ''' DG output indices '''
        return np.array([cert.rho for cert in self.certificates])

    @property
    def nu_bar(self):
        ''' Line input indices '''
        return np.array([cert.nu for cert in self.line_certificates])

    @property
    def rho_bar(self):
        ''' Line output indices '''
        return np.array([cert.rho for cert in self.line_certificates])

    def closed_loop(self, spec, dg_index):
        ''' A + B K0 of one DG '''
        A, B, _ = dg_matrices(spec.dgs[dg_index], spec.loads[dg_index],
                              self.integrator_scale)
        return A + B @ self.k0[dg_index][None, :]


def line_passivity(line, eps=lmi.EPS, solver=None, rho_bar=None, tol_psd=lmi.TOL_PSD):
    '''
    Passivity indices of one line. With rho_bar None, maximise
    rho_bar + (1 + 2R^2) nu_bar, whose optimum is (0, R, L/2); otherwise
    fix rho_bar and return any feasible storage.
    '''
    problem = lmi.LmiProblem(f"line{line.index + 1}-passivity", eps)
    y_bar = problem.scalar("y_bar")
    nu_bar = problem.scalar("nu_bar")
    rho_var = problem.scalar("rho_bar")
    problem.add_ge("storage", y_bar, eps)
    problem.add_psd("dissipativity", line_lmi(y_bar, rho_var, nu_bar, line.r, "cvxpy"),
                    strict=False)
    if rho_bar is None:
        problem.maximize(rho_var + (1 + 2 * line.r**2) * nu_bar)
    else:
        problem.add_eq("rho_bar", rho_var - rho_bar)
    solution = lmi.solve(problem, solver=solver, tol_psd=tol_psd, tight=True)
    if solution.status == lmi.INFEASIBLE:
        raise LocalInfeasible("infeasible", f"line {line.index + 1}: no storage for "
                                            f"rho_bar = {rho_bar}")
    if not solution.ok:
        raise lmi.SolverError(f"line {line.index + 1}: {solution.message}")

    p_bar = solution.value("y_bar") * line.l
    cert = lmi.PassivityCertificate(solution.value("nu_bar"), solution.value("rho_bar"),
                                    np.array([[p_bar]]), "line", solution.residual)
    if rho_bar is None and (abs(cert.rho - line.r) > 1e-6 * line.r
                            or abs(cert.nu) > 1e-8 or abs(p_bar - 0.5 * line.l) > 1e-8):
        logger.warning("line %d: solver indices (%.9g, %.9g, %.9g) differ from "
                       "closed form (0, R, L/2)", line.index + 1, cert.nu, cert.rho, p_bar)
    return cert


def assemble_local_problem(spec, selection, bounds=None, params=None):
    '''
    Build the joint local LMI problem.

    Variables per DG: P~, K~, Z, lambda~, nu, rho~, gamma~.
    Per line: y_bar = P_bar / L, nu_bar (pinned to -nu_bar_margin), rho_bar.
    Per DG-line pair: xi, s_1, s_2.
    bounds is a list of SectorBound; computed from the selection when None.
    '''
    params = params or netspec.DesignParams()
    eps = params.eps
    if bounds is None:
        bounds = [sector.sector_bounds(dg, load, v_r, spec.v_min, spec.v_max)
                  for dg, load, v_r in zip(spec.dgs, spec.loads, selection.v_r)]
    p_dg, p_line = params.multipliers(spec)
    incidence = netspec.incidence_of(spec)
    nu_bar_fixed = -params.nu_bar_margin

    problem = lmi.LmiProblem("local-synthesis", eps)
    problem.meta = {"spec": spec, "selection": selection, "bounds": bounds,
                    "params": params, "p": p_dg, "p_bar": p_line}
    dg_vars = []
    for dg, load, bound in zip(spec.dgs, spec.loads, bounds):
        tag = f"dg{dg.index + 1}"
        k = dg.index + 1
        P_tilde = problem.matrix(f"P_tilde_{k}", 3)
        K_tilde = problem.matrix(f"K_tilde_{k}", 1, 3, symmetric=False)
        Z = problem.matrix(f"Z_{k}", 3)
        lam = problem.scalar(f"lambda_tilde_{k}")
        nu = problem.scalar(f"nu_{k}")
        rho_tilde = problem.scalar(f"rho_tilde_{k}")
        gamma = problem.scalar(f"gamma_tilde_{k}")
        dg_vars.append((nu, rho_tilde, gamma))

        A, B, _ = dg_matrices(dg, load, params.integrator_scale)
        problem.add_psd(f"{tag}:storage", P_tilde)
        problem.add_psd(f"{tag}:bound", Z)
        problem.add_ge(f"{tag}:lambda", lam, 1 + eps)
        problem.add_le(f"{tag}:nu", nu, -params.nu_margin)
        problem.add_ge(f"{tag}:rho", rho_tilde, eps)
        problem.add_ge(f"{tag}:gamma_low", gamma, 0.0)
        problem.add_le(f"{tag}:gamma_high", gamma, params.local_gamma_bar)
        problem.add_psd(f"{tag}:dissipativity",
                        dg_lmi(P_tilde, K_tilde, Z, nu, rho_tilde, A, B, "cvxpy"))
        problem.add_psd(f"{tag}:sector", sector_lmi(P_tilde, Z, lam, bound, "cvxpy"))
        if params.structure == "strict":
            problem.add_eq(f"{tag}:structure_p12", P_tilde[0, 1])
            problem.add_eq(f"{tag}:structure_p23", P_tilde[1, 2])
            problem.add_eq(f"{tag}:structure_k", K_tilde[0, 1])

    line_vars = []
    for line in spec.lines:
        tag = f"line{line.index + 1}"
        k = line.index + 1
        y_bar = problem.scalar(f"y_bar_{k}")
        nu_bar = problem.scalar(f"nu_bar_{k}")
        rho_bar = problem.scalar(f"rho_bar_{k}")
        line_vars.append((nu_bar, rho_bar))
        problem.add_ge(f"{tag}:storage", y_bar, eps)
        problem.add_ge(f"{tag}:rho_bar", rho_bar, eps)
        problem.add_eq(f"{tag}:nu_bar", nu_bar - nu_bar_fixed)
        problem.add_psd(f"{tag}:dissipativity",
                        line_lmi(y_bar, rho_bar, nu_bar, line.r, "cvxpy"), strict=False)

    for dg in spec.dgs:
        nu, rho_tilde, gamma = dg_vars[dg.index]
        for l_index in spec.lines_at(dg.index):
            tag = f"pair{dg.index + 1}-{l_index + 1}"
            suffix = f"{dg.index + 1}_{l_index + 1}"
            nu_bar, rho_bar = line_vars[l_index]
            xi = problem.scalar(f"xi_{suffix}")
            s_1 = problem.scalar(f"s1_{suffix}")
            s_2 = problem.scalar(f"s2_{suffix}")
            problem.add_eq(f"{tag}:xi", xi - nu_bar_fixed * rho_tilde)
            problem.add_psd(f"{tag}:relaxation",
                            relaxation_matrix(nu_bar, rho_tilde, s_1, s_2, xi, "cvxpy"),
                            strict=False)
            problem.add_psd(f"{tag}:necessary",
                            necessary_matrix(p_dg[dg.index], p_line[l_index], nu, rho_tilde,
                                             gamma, nu_bar, rho_bar, xi,
                                             incidence[dg.index, l_index], dg.c_t, "cvxpy"))

    lam_sum = sum(problem.variables[f"lambda_tilde_{dg.index + 1}"] for dg in spec.dgs)
    gamma_sum = sum(gamma for _, _, gamma in dg_vars)
    problem.minimize(params.alpha_lambda * lam_sum + params.alpha_gamma * gamma_sum)
    logger.info("Assembled %r", problem)
    return problem


def _subproblem(problem, prefixes):
    sub = lmi.LmiProblem(f"{problem.name}-subset", problem.eps)
    sub.variables = problem.variables
    sub.constraints = [rec for rec in problem.constraints if rec.name.startswith(prefixes)]
    return sub


def diagnose(problem):
    '''
    Locate the block that makes an infeasible local problem infeasible,
    growing the constraint set DG by DG and pair by pair.
    '''
    spec = problem.meta["spec"]
    params = problem.meta["params"]
    for dg in spec.dgs:
        prefixes = (f"dg{dg.index + 1}:",)
        sub = _subproblem(problem, prefixes)
        if lmi.solve(sub, solver=params.solver, tol_psd=params.tol_psd).status == lmi.INFEASIBLE:
            return f"dg {dg.index + 1}: dissipativity and sector blocks infeasible"
        for l_index in spec.lines_at(dg.index):
            prefixes += (f"line{l_index + 1}:", f"pair{dg.index + 1}-{l_index + 1}:")
            sub = _subproblem(problem, prefixes)
            status = lmi.solve(sub, solver=params.solver, tol_psd=params.tol_psd).status
            if status == lmi.INFEASIBLE:
                return (f"necessary condition for dg {dg.index + 1} and line "
                        f"{l_index + 1} infeasible")
    return "every DG block is feasible alone; the joint problem is not"


def solve_local(problem):
    '''
    Solve an assembled local problem and recover the LocalDesign:
    K0 = K~ P~^-1, rho = 1/rho~, with every DG certificate re-checked
    against its storage witness and by an independent LTI search.
    Raise LocalInfeasible or lmi.SolverError.
    '''
    spec = problem.meta["spec"]
    params = problem.meta["params"]
    bounds = problem.meta["bounds"]
    solution = lmi.solve(problem, solver=params.solver, tol_psd=params.tol_psd)
    if solution.status == lmi.INFEASIBLE:
        raise LocalInfeasible("infeasible", diagnose(problem))
    if not solution.ok:
        raise lmi.SolverError(f"local synthesis: {solution.message} "
                              f"(worst constraint {solution.worst_constraint()})")

    k0_rows, certificates, r_tilde, r_matrix = [], [], [], []
    lti_confirmed, sector_excess = [], []
    gammas, lams = [], []
    for dg, load, bound in zip(spec.dgs, spec.loads, bounds):
        k = dg.index + 1
        P_tilde = lmi.sym(solution.value(f"P_tilde_{k}"))
        K_tilde = np.atleast_2d(solution.value(f"K_tilde_{k}"))
        Z = lmi.sym(solution.value(f"Z_{k}"))
        P = lmi.sym(np.linalg.inv(P_tilde))
        k0 = (K_tilde @ P).ravel()
        if params.structure == "strict":
            k0[1] = 0.0
        nu = solution.value(f"nu_{k}")
        rho = 1.0 / solution.value(f"rho_tilde_{k}")
        lam = solution.value(f"lambda_tilde_{k}")
        R = lmi.sym(P @ Z @ P)

        A, B, _ = dg_matrices(dg, load, params.integrator_scale)
        A_hat = A + B @ k0[None, :]
        residual = max(lmi.psd_residual(certificate_matrix(P, A_hat, R, nu, rho)),
                       lmi.psd_residual(sector_condition_matrix(P, R, lam, bound)))
        certificates.append(lmi.PassivityCertificate(nu, rho, P, "dg", residual))
        check = lmi.check_lti_dissipative(A_hat, I3, I3, np.zeros((3, 3)),
                                          lmi.SupplyRate.if_ofp(nu, rho, 3),
                                          eps=params.eps, tol_psd=params.tol_psd,
                                          solver=params.solver)
        confirmed = isinstance(check, lmi.PassivityCertificate)
        if not confirmed:
            logger.warning("dg %d: LTI check refused IF-OFP(%.6g, %.6g): %s",
                           k, nu, rho, check.reason)
        lti_confirmed.append(confirmed)
        sector_excess.append(verify_dissipation_bound(dg, load, k0, certificates[-1], bound,
                                                      samples=1000,
                                                      integrator_scale=params.integrator_scale))
        k0_rows.append(k0)
        r_matrix.append(R)
        r_tilde.append(lmi.sym(P_tilde @ np.linalg.inv(Z) @ P_tilde))
        gammas.append(solution.value(f"gamma_tilde_{k}"))
        lams.append(lam)

    line_certs = []
    for line in spec.lines:
        k = line.index + 1
        p_bar_storage = solution.value(f"y_bar_{k}") * line.l
        line_certs.append(lmi.PassivityCertificate(
            solution.value(f"nu_bar_{k}"), solution.value(f"rho_bar_{k}"),
            np.array([[p_bar_storage]]), "line", solution.residual))

    xi, s_1, s_2 = {}, {}, {}
    for dg in spec.dgs:
        for l_index in spec.lines_at(dg.index):
            suffix = f"{dg.index + 1}_{l_index + 1}"
            key = (dg.index, l_index)
            xi[key] = solution.value(f"xi_{suffix}")
            s_1[key] = solution.value(f"s1_{suffix}")
            s_2[key] = solution.value(f"s2_{suffix}")
            product = line_certs[l_index].nu / certificates[dg.index].rho
            if xi[key] < product - 1e-9 * max(1.0, abs(product)):
                logger.warning("pair %s: xi %.6g below nu_bar * rho~ %.6g",
                               suffix, xi[key], product)

    design = LocalDesign(np.array(k0_rows), certificates, line_certs, np.array(gammas),
                         np.array(lams), r_tilde, r_matrix, xi, s_1, s_2,
                         problem.meta["p"], problem.meta["p_bar"], list(bounds),
                         params.structure, solution.objective or 0.0, solution.status,
                         lti_confirmed, sector_excess, params.integrator_scale)
    logger.info("Local synthesis %s, objective %s", solution.status,
                text_utils.format_short(design.objective))
    return design


def necessary_residuals(spec, design):
    '''
    Smallest eigenvalue of the necessary-condition matrix for each
    DG-line pair, evaluated at the design. Return {(i, l): value}.
    '''
    incidence = netspec.incidence_of(spec)
    out = {}
    for (i, l_index), xi in design.xi.items():
        mat = necessary_matrix(design.p[i], design.p_bar[l_index], design.nu[i],
                               1.0 / design.rho[i], design.gamma_tilde[i],
                               design.nu_bar[l_index], design.rho_bar[l_index], xi,
                               incidence[i, l_index], spec.dgs[i].c_t)
        out[(i, l_index)] = lmi.min_eig(mat)
    return out


def verify_dissipation_bound(dg, load, k0, cert, bound, samples=10000, seed=0,
                             integrator_scale=1.0):
    '''
    Sample (x~, u~) with V~ inside the sector range and evaluate the
    storage derivative along the full nonlinear error dynamics
    x~' = (A + B K0) x~ + T g(V~) + u~ against the IF-OFP supply rate.
    Return max over samples of max(0, V' - s) / (1 + |x~|^2 + |u~|^2).
    '''
    rng = np.random.default_rng(seed)
    A, B, _ = dg_matrices(dg, load, integrator_scale)
    A_hat = A + B @ np.asarray(k0, dtype=float)[None, :]
    low, high = bound.v_tilde_range
    x_t = rng.standard_normal((samples, 3))
    x_t[:, 0] = rng.uniform(low, high, samples)
    u_t = rng.standard_normal((samples, 3))
    g_vec = np.zeros((samples, 3))
    g_vec[:, 0] = sector.cpl_nonlinearity(dg, load, bound.v_r, x_t[:, 0])

    px = x_t @ cert.P
    v_dot = 2.0 * np.sum(px * (x_t @ A_hat.T + g_vec + u_t), axis=1)
    supply = (-cert.nu * np.sum(u_t**2, axis=1) + np.sum(u_t * x_t, axis=1)
              - cert.rho * np.sum(x_t**2, axis=1))
    scale = 1.0 + np.sum(x_t**2, axis=1) + np.sum(u_t**2, axis=1)
    return float(np.max(np.maximum(v_dot - supply, 0.0) / scale))


def design_csv(spec, design):
    ''' Per-DG and per-line tables, separated by a blank line '''
    out = ["dg,k_p,k_mid,k_i,nu,rho,gamma_tilde,lambda_tilde,alpha,beta"]
    for dg in spec.dgs:
        i = dg.index
        bound = design.bounds[i]
        out.append(text_utils.csv_line(
            [str(i + 1), *design.k0[i], design.nu[i], design.rho[i],
             design.gamma_tilde[i], design.lambda_tilde[i], bound.alpha, bound.beta]))
    out.append("")
    out.append("line,nu_bar,rho_bar,p_bar")
    for line in spec.lines:
        l_index = line.index
        out.append(text_utils.csv_line(
            [str(l_index + 1), design.nu_bar[l_index], design.rho_bar[l_index],
             design.line_certificates[l_index].P[0, 0]]))
    return "\n".join(out) + "\n"
