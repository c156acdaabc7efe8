'''
 global_codesign.py

Global co-design of the consensus current-sharing controller and the
communication topology. Given the passivity indices certified by local
synthesis, find the sparsest consensus gain matrix that makes the
networked error system L2-stable from disturbances to the performance
output, with the gain bounded by gamma_bar.

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
from . import text_utils

__version__ = "0.4.0"  # Dated 2024-11-02

logger = logging.getLogger(__name__)

# Block order of W: DG inputs, line inputs, performance outputs,
# DG outputs, line outputs, disturbances.
BLOCK_ORDER = ("u", "ub", "z", "y", "yb", "w")


def version():  # Report version number for this document
    ''' Return version number '''
    return __version__


class GlobalInfeasible(RuntimeError):
    ''' The global co-design LMI has no solution '''

    def __init__(self, status, diagnostic):
        self.stage = "global"
        self.status = status
        self.diagnostic = diagnostic
        super().__init__(f"global co-design {status}: {diagnostic}")


@dataclass
class GlobalDesign:
    ''' Result of the global co-design '''
    q_i: np.ndarray             # N x N middle entries of Q, as solved
    k_i: np.ndarray             # N x N consensus gains after sparsification
    gamma_tilde: float
    topology: netspec.CommTopology
    slack: np.ndarray
    p: np.ndarray
    p_bar: np.ndarray
    mode: str = "hard"
    objective: float = 0.0
    status: str = lmi.OPTIMAL
    residual: float = 0.0       # Relative residual of W + S >= eps I after sparsification
    tau: float = 0.0

    @property
    def gamma(self):
        ''' Certified L2 gain '''
        return float(np.sqrt(self.gamma_tilde))

    @property
    def q(self):
        ''' Full 3N x 3N block matrix Q '''
        return expand_blocks(self.q_i)

    @property
    def k(self):
        ''' Full 3N x 3N block gain matrix K '''
        return expand_blocks(self.k_i)


def selector(n_dg):
    ''' 3N x N matrix picking the current entry of every DG state '''
    sel = np.zeros((3 * n_dg, n_dg))
    sel[3 * np.arange(n_dg) + 1, np.arange(n_dg)] = 1.0
    return sel


def expand_blocks(middle):
    ''' Place an N x N matrix in the (2, 2) entries of a 3N x 3N block matrix '''
    sel = selector(middle.shape[0])
    return sel @ middle @ sel.T


def interconnection_blocks(spec):
    '''
    Constant interconnection blocks: C_bar (3N x L, line currents into DG
    voltage equations), C (L x 3N, PCC voltages into lines), E_c, E_bar_c,
    H_c and H_bar_c.
    '''
    n_dg, n_line = spec.n_dg, spec.n_line
    n3 = 3 * n_dg
    incidence = netspec.incidence_of(spec)
    c_t = spec.param_vector("c_t")
    c_bar = np.zeros((n3, n_line))
    c_mat = np.zeros((n_line, n3))
    for i in range(n_dg):
        c_bar[3 * i, :] = -incidence[i, :] / c_t[i]
        c_mat[:, 3 * i] = incidence[i, :]
    e_dg = np.zeros((n3, n3))
    for dg in spec.dgs:
        e_dg[3 * dg.index:3 * dg.index + 3, 3 * dg.index:3 * dg.index + 3] = \
            np.diag([1.0 / dg.c_t, 1.0 / dg.l_t, 1.0])
    e_c = np.hstack([e_dg, np.zeros((n3, n_line))])
    e_bar_c = np.hstack([np.zeros((n_line, n3)), np.eye(n_line)])
    h_c = np.vstack([np.eye(n3), np.zeros((n_line, n3))])
    h_bar_c = np.vstack([np.zeros((n3, n_line)), np.eye(n_line)])
    return {"c_bar": c_bar, "c": c_mat, "e_c": e_c, "e_bar_c": e_bar_c,
            "h_c": h_c, "h_bar_c": h_bar_c}


def supply_blocks(indices, p, p_bar, stacker="numpy"):
    '''
    Network supply-rate blocks from the subsystem passivity indices.
    p and p_bar may be numbers or cvxpy vectors.
    '''
    diag = np.diag if stacker == "numpy" else cp.diag
    mul = np.multiply if stacker == "numpy" else cp.multiply
    n_dg = len(indices.nu)
    rep3 = np.kron(np.eye(n_dg), np.ones((3, 1)))
    nu3 = np.repeat(indices.nu, 3)
    rho3 = np.repeat(indices.rho, 3)
    out = {"xp11": diag(mul(-nu3, rep3 @ p)),
           "xp22": diag(mul(-rho3, rep3 @ p)),
           "x12": np.diag(-0.5 / nu3)}
    if len(indices.nu_bar):
        out["xbar_p11"] = diag(mul(-indices.nu_bar, p_bar))
        out["xbar_p22"] = diag(mul(-indices.rho_bar, p_bar))
        out["xbar12"] = np.diag(-0.5 / indices.nu_bar)
    return out


def w_matrix(spec, indices, p, p_bar, q, gamma_tilde, stacker="numpy"):
    '''
    Co-design matrix W in block order (u, u_bar, z, y, y_bar, w). The line
    rows and columns are absent when the network has no lines.
    indices supplies nu, rho, nu_bar, rho_bar (a LocalDesign does).
    '''
    n3, n_line = 3 * spec.n_dg, spec.n_line
    n_z = n3 + n_line
    con = interconnection_blocks(spec)
    sup = supply_blocks(indices, p, p_bar, stacker)
    xp11, x21 = sup["xp11"], sup["x12"].T
    upper = {
        ("u", "u"): xp11,
        ("u", "y"): q,
        ("u", "w"): xp11 @ con["e_c"],
        ("z", "z"): np.eye(n_z),
        ("z", "y"): con["h_c"],
        ("y", "y"): -q.T @ sup["x12"] - x21 @ q - sup["xp22"],
        ("y", "w"): -x21 @ xp11 @ con["e_c"],
        ("w", "w"): gamma_tilde * np.eye(n_z),
    }
    if n_line:
        xbar_p11, xbar21 = sup["xbar_p11"], sup["xbar12"].T
        upper.update({
            ("u", "yb"): xp11 @ con["c_bar"],
            ("ub", "ub"): xbar_p11,
            ("ub", "y"): xbar_p11 @ con["c"],
            ("ub", "w"): xbar_p11 @ con["e_bar_c"],
            ("z", "yb"): con["h_bar_c"],
            ("y", "yb"): -x21 @ xp11 @ con["c_bar"] - con["c"].T @ xbar_p11 @ sup["xbar12"],
            ("yb", "yb"): -sup["xbar_p22"],
            ("yb", "w"): -xbar21 @ xbar_p11 @ con["e_bar_c"],
        })
    sizes = {"u": n3, "ub": n_line, "z": n_z, "y": n3, "yb": n_line, "w": n_z}
    order = [key for key in BLOCK_ORDER if sizes[key]]
    rows = []
    for row in order:
        cells = []
        for col in order:
            if (row, col) in upper:
                cells.append(upper[(row, col)])
            elif (col, row) in upper:
                cells.append(upper[(col, row)].T)
            else:
                cells.append(np.zeros((sizes[row], sizes[col])))
        rows.append(cells)
    return lmi.get_stacker(stacker)(rows)


def cost_matrix(spec, params):
    '''
    Per-entry L1 weights on Q_I: c_adjacent on the diagonal and between
    physically adjacent DGs, c_remote elsewhere.
    '''
    adjacent = netspec.physical_adjacency(spec) | np.eye(spec.n_dg, dtype=bool)
    return np.where(adjacent, params.c_adjacent, params.c_remote)


def check_indices(local):
    '''
    Return the sign problems that rule out the co-design: every DG needs
    nu < 0 and rho > 0, every line nu_bar < 0.
    '''
    problems = []
    for i, (nu, rho) in enumerate(zip(local.nu, local.rho)):
        if not nu < 0:
            problems.append(f"dg {i + 1}: nu = {nu:g} is not negative")
        if not rho > 0:
            problems.append(f"dg {i + 1}: rho = {rho:g} is not positive")
    for l_index, nu_bar in enumerate(local.nu_bar):
        if not nu_bar < 0:
            problems.append(f"line {l_index + 1}: nu_bar = {nu_bar:g} is not negative")
    return problems


def assemble_global_problem(spec, local, params=None):
    '''
    Build the global co-design LMI problem from a LocalDesign.
    Raise GlobalInfeasible when the local indices have the wrong signs.
    '''
    params = params or netspec.DesignParams()
    problems = check_indices(local)
    if problems:
        raise GlobalInfeasible("infeasible", "; ".join(problems))
    eps = params.eps
    n_dg, n_line = spec.n_dg, spec.n_line
    dim = 4 * (3 * n_dg + n_line)
    p_n = spec.param_vector("p_n")

    problem = lmi.LmiProblem("global-codesign", eps)
    q_i = problem.matrix("Q_I", n_dg, n_dg, symmetric=False)
    q_abs = problem.matrix("Q_abs", n_dg, n_dg, symmetric=False)
    p = problem.vector("p", n_dg)
    p_bar = problem.vector("p_bar", n_line) if n_line else np.zeros(0)
    gamma = problem.scalar("gamma_tilde")
    slack = problem.matrix("S", dim)

    sel = selector(n_dg)
    q = sel @ q_i @ sel.T
    problem.add_ge("p", p, eps)
    if n_line:
        problem.add_ge("p_bar", p_bar, eps)
    problem.add_ge("gamma_low", gamma, eps)
    problem.add_le("gamma_high", gamma, params.gamma_bar)
    problem.add_psd("slack", slack, strict=False)
    problem.add_le("slack_trace", cp.trace(slack), params.eta)
    problem.add_psd("dissipativity", w_matrix(spec, local, p, p_bar, q, gamma, "cvxpy")
                    + slack)
    problem.add_eq("laplacian", q_i @ p_n)
    problem.add_ge("l1_upper", q_abs - q_i, 0.0)
    problem.add_ge("l1_lower", q_abs + q_i, 0.0)
    if params.mode == "hard":
        remote = (~(netspec.physical_adjacency(spec) | np.eye(n_dg, dtype=bool))).astype(float)
        if remote.any():
            problem.add_eq("graph", cp.multiply(remote, q_i))

    cost = cost_matrix(spec, params)
    problem.minimize(cp.sum(cp.multiply(cost, q_abs)) + params.c_1 * gamma
                     + params.alpha_slack * cp.trace(slack))
    problem.meta = {"spec": spec, "local": local, "params": params, "cost": cost}
    logger.info("Assembled %r (%s mode)", problem, params.mode)
    return problem


def sparsify(k_i, p_n, tau):
    '''
    Zero off-diagonal entries with |K_I(i, j)| <= tau, then reset each
    diagonal entry so that K_I P_n 1 = 0 holds exactly.
    '''
    out = np.array(k_i, dtype=float)
    off = ~np.eye(out.shape[0], dtype=bool)
    out[off & (np.abs(out) <= tau)] = 0.0
    np.fill_diagonal(out, 0.0)
    np.fill_diagonal(out, -(out @ p_n) / p_n)
    return out


def extract_topology(spec, k_i, tau=0.0):
    '''
    Communication edges (j, i, k_ij) for every |K_I(i, j)| > tau with
    i != j, with k_ij = -K_I(i, j) L_ti P_nj.
    '''
    p_n = spec.param_vector("p_n")
    l_t = spec.param_vector("l_t")
    edges = []
    for i in range(spec.n_dg):
        for j in range(spec.n_dg):
            if i != j and abs(k_i[i, j]) > tau:
                edges.append((j, i, float(-k_i[i, j] * l_t[i] * p_n[j])))
    return netspec.CommTopology(tuple(edges))


def gains_from_q(q_i, p, nu):
    ''' K_I = diag(p |nu|)^-1 Q_I '''
    return np.asarray(q_i, dtype=float) / (np.asarray(p) * np.abs(nu))[:, None]


def objective_value(design, cost, params):
    ''' Objective of a solved design under a given L1 cost matrix '''
    return float(np.sum(cost * np.abs(design.q_i)) + params.c_1 * design.gamma_tilde
                 + params.alpha_slack * np.trace(design.slack))


def _diagnose(problem, params):
    relaxed = lmi.LmiProblem(f"{problem.name}-unbounded", problem.eps)
    relaxed.variables = problem.variables
    relaxed.constraints = [rec for rec in problem.constraints if rec.name != "gamma_high"]
    relaxed.minimize(problem.variables["gamma_tilde"])
    solution = lmi.solve(relaxed, solver=params.solver, tol_psd=params.tol_psd)
    if solution.ok:
        return (f"no design with gamma_tilde <= {params.gamma_bar:g}; smallest "
                f"achievable is about {solution.value('gamma_tilde'):.6g}")
    return "W + S > 0 has no solution for the certified passivity indices"


def solve_global(problem):
    '''
    Solve an assembled global problem and recover the consensus gains,
    the sparsified gain matrix and the communication topology.
    Raise GlobalInfeasible or lmi.SolverError.
    '''
    spec = problem.meta["spec"]
    local = problem.meta["local"]
    params = problem.meta["params"]
    solution = lmi.solve(problem, solver=params.solver, tol_psd=params.tol_psd)
    if solution.status == lmi.INFEASIBLE:
        raise GlobalInfeasible("infeasible", _diagnose(problem, params))
    if not solution.ok:
        raise lmi.SolverError(f"global co-design: {solution.message} "
                              f"(worst constraint {solution.worst_constraint()})")

    n_dg = spec.n_dg
    q_i = np.reshape(solution.values["Q_I"], (n_dg, n_dg))
    p = np.reshape(solution.values["p"], (n_dg,))
    p_bar = (np.reshape(solution.values["p_bar"], (spec.n_line,)) if spec.n_line
             else np.zeros(0))
    gamma_tilde = solution.value("gamma_tilde")
    slack = np.atleast_2d(solution.values["S"])
    p_n = spec.param_vector("p_n")

    k_raw = gains_from_q(q_i, p, local.nu)
    tau = params.tau_factor * float(np.max(np.abs(k_raw))) if k_raw.size else 0.0
    k_i = sparsify(k_raw, p_n, tau)
    q_sparse = expand_blocks(k_i * (p * np.abs(local.nu))[:, None])
    residual = lmi.psd_residual(w_matrix(spec, local, p, p_bar, q_sparse, gamma_tilde)
                                + slack, params.eps)
    if residual > params.tol_psd:
        logger.warning("W + S after sparsification has relative residual %.3g", residual)

    design = GlobalDesign(q_i, k_i, gamma_tilde, extract_topology(spec, k_i), slack, p,
                          p_bar, params.mode, solution.objective or 0.0, solution.status,
                          residual, tau)
    logger.info("Global co-design %s: gamma %s, %d links", solution.status,
                text_utils.format_short(design.gamma), len(design.topology))
    return design


def topology_csv(spec, design):
    ''' Edge list with the consensus gain of every link '''
    out = ["from,to,k_ij"]
    for src, dst, gain in design.topology.edges:
        out.append(text_utils.csv_line([str(src + 1), str(dst + 1), gain], exact=True))
    return "\n".join(out) + "\n"
