'''
 lmi.py

Linear matrix inequality layer: supply rates, a thin problem container
over cvxpy, solution re-verification, the LTI dissipativity checker, and
numerical oracles for the block-matrix identities used by the design.

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
import time
from dataclasses import dataclass, field
from typing import Dict, Optional

import cvxpy as cp
import mpmath
import numpy as np
import scipy.linalg

from . import text_utils

__version__ = "0.4.0"  # Dated 2024-11-02

logger = logging.getLogger(__name__)

EPS = 1e-6          # Margin for strict inequalities
TOL_PSD = 1e-7      # Relative tolerance for independent re-verification

OPTIMAL = "optimal"
FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
NUMERICAL_FAILURE = "numerical-failure"

SOLVER_PREFERENCE = ("CLARABEL", "SCS")

DUMP_HEADER = "# mgcodesign lmi dump 1"


def version():  # Report version number for this document
    ''' Return version number '''
    return __version__


class SolverError(RuntimeError):
    ''' Numerical failure inside the conic solver, or no usable solver '''


def herm(matrix):
    ''' H(M) = M + M^T, for numpy arrays or cvxpy expressions '''
    return matrix + matrix.T


def sym(matrix):
    ''' Symmetric part of a numpy array or cvxpy expression '''
    return (matrix + matrix.T) / 2


def get_stacker(stacker):
    '''
    Block-matrix builder for numeric or symbolic assembly.
    "numpy" returns np.block, "cvxpy" returns cp.bmat.
    '''
    if stacker == "numpy":
        return np.block
    if stacker == "cvxpy":
        return cp.bmat
    raise ValueError(f"Stacker {stacker} must be 'numpy' or 'cvxpy'.")


def min_eig(matrix):
    ''' Smallest eigenvalue of the symmetric part of a numeric matrix '''
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if matrix.size == 0:
        return np.inf
    return float(np.linalg.eigvalsh(sym(matrix))[0])


def psd_residual(matrix, margin=0.0):
    '''
    Relative violation of matrix >= margin*I:
    max(0, -lambda_min(M - margin I)) / max(1, ||M||_2).
    Zero means satisfied.
    '''
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if matrix.size == 0:
        return 0.0
    shortfall = -(min_eig(matrix) - margin)
    scale = max(1.0, float(np.linalg.norm(matrix, 2)))
    return max(0.0, shortfall) / scale


def is_positive_semidefinite(matrix, tol=TOL_PSD):
    ''' Eigenvalue test with relative tolerance '''
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if not np.allclose(matrix, matrix.T, rtol=1e-9, atol=1e-12):
        return False
    return psd_residual(matrix) <= tol


def is_positive_definite(matrix):
    ''' Cholesky test; does not check symmetry itself '''
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if not np.allclose(matrix, matrix.T):
        return False
    try:
        np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        return False
    return True


@dataclass(frozen=True)
class SupplyRate:
    '''
    Quadratic supply rate s(u, y) = [u; y]^T [[X11, X12], [X21, X22]] [u; y].
    '''
    x11: np.ndarray
    x12: np.ndarray
    x21: np.ndarray
    x22: np.ndarray

    def __post_init__(self):
        if not np.array_equal(np.asarray(self.x21), np.asarray(self.x12).T):
            raise ValueError("X21 must equal transpose(X12)")
        if not (np.allclose(self.x11, np.asarray(self.x11).T)
                and np.allclose(self.x22, np.asarray(self.x22).T)):
            raise ValueError("X11 and X22 must be symmetric")

    @classmethod
    def passive(cls, dim):
        ''' s = u^T y '''
        half = 0.5 * np.eye(dim)
        return cls(np.zeros((dim, dim)), half, half.copy(), np.zeros((dim, dim)))

    @classmethod
    def if_ofp(cls, nu, rho, dim):
        ''' IF-OFP(nu, rho): s = -nu |u|^2 + u^T y - rho |y|^2 '''
        half = 0.5 * np.eye(dim)
        return cls(-nu * np.eye(dim), half, half.copy(), -rho * np.eye(dim))

    @classmethod
    def l2_gain(cls, gamma_sq, dim_in, dim_out):
        ''' L2G: s = gamma^2 |u|^2 - |y|^2 '''
        return cls(gamma_sq * np.eye(dim_in), np.zeros((dim_in, dim_out)),
                   np.zeros((dim_out, dim_in)), -np.eye(dim_out))

    @classmethod
    def energy_decay(cls, dim_in, dim_out):
        ''' s = -|y|^2, no input weighting '''
        return cls(np.zeros((dim_in, dim_in)), np.zeros((dim_in, dim_out)),
                   np.zeros((dim_out, dim_in)), -np.eye(dim_out))

    def matrix(self):
        ''' Full symmetric supply-rate matrix '''
        return np.block([[self.x11, self.x12], [self.x21, self.x22]])

    def evaluate(self, u_vec, y_vec):
        ''' Supply rate value at one (u, y) pair '''
        stacked = np.concatenate([np.ravel(u_vec), np.ravel(y_vec)])
        return float(stacked @ self.matrix() @ stacked)


@dataclass
class PassivityCertificate:
    ''' Passivity indices with the storage-matrix witness P '''
    nu: float
    rho: float
    P: np.ndarray
    kind: str = "lti"           # "dg", "line" or "lti"
    residual: float = 0.0


@dataclass
class Refusal:
    ''' check_lti_dissipative outcome when no certificate exists '''
    status: str
    reason: str


@dataclass
class LmiConstraint:
    ''' One named constraint of an LmiProblem '''
    name: str
    sense: str                  # "psd", "eq", "ge" or "le"
    expr: object                # affine cvxpy expression
    margin: float = 0.0         # psd: expr >= margin*I
    bound: float = 0.0          # ge/le: expr >= bound or expr <= bound


class LmiProblem:
    '''
    Container for a semidefinite program: named variables, a linear
    objective and named affine constraints.
    '''

    def __init__(self, name, eps=EPS):
        self.name = name
        self.eps = eps
        self.variables = {}         # name -> cvxpy Variable, in declaration order
        self.constraints = []       # LmiConstraint records
        self.objective = None       # cvxpy affine expression, or None for feasibility
        self.sense = "min"
        self.meta = {}              # Assembly context needed to read the solution back

    def scalar(self, name, nonneg=False):
        ''' Declare a scalar variable '''
        return self._declare(name, cp.Variable(name=name, nonneg=nonneg))

    def vector(self, name, dim):
        ''' Declare a vector variable '''
        return self._declare(name, cp.Variable(dim, name=name))

    def matrix(self, name, rows, cols=None, symmetric=True):
        ''' Declare a matrix variable (symmetric by default) '''
        cols = rows if cols is None else cols
        if symmetric and rows != cols:
            raise ValueError(f"symmetric variable {name} must be square")
        return self._declare(name, cp.Variable((rows, cols), name=name,
                                               symmetric=symmetric))

    def _declare(self, name, variable):
        if name in self.variables:
            raise ValueError(f"variable {name} declared twice")
        self.variables[name] = variable
        return variable

    @property
    def scalar_vars(self):
        ''' Names of scalar variables '''
        return [name for name, var in self.variables.items() if var.size == 1]

    @property
    def matrix_vars(self):
        ''' (name, shape, symmetric) for non-scalar variables '''
        return [(name, var.shape, bool(var.attributes.get("symmetric")))
                for name, var in self.variables.items() if var.size > 1]

    def add_psd(self, name, expr, strict=True, margin=None):
        ''' expr >= margin*I; strict constraints default to margin eps '''
        if margin is None:
            margin = self.eps if strict else 0.0
        self.constraints.append(LmiConstraint(name, "psd", expr, margin))

    def add_eq(self, name, expr):
        ''' expr == 0 (structural pinning and linear equalities) '''
        self.constraints.append(LmiConstraint(name, "eq", expr))

    def add_ge(self, name, expr, bound):
        ''' Scalar or elementwise expr >= bound '''
        self.constraints.append(LmiConstraint(name, "ge", expr, bound=bound))

    def add_le(self, name, expr, bound):
        ''' Scalar or elementwise expr <= bound '''
        self.constraints.append(LmiConstraint(name, "le", expr, bound=bound))

    def minimize(self, expr):
        ''' Set a linear objective to minimize '''
        self.objective = expr
        self.sense = "min"

    def maximize(self, expr):
        ''' Set a linear objective to maximize '''
        self.objective = expr
        self.sense = "max"

    def constraint(self, name):
        ''' Look up a constraint record by name '''
        for record in self.constraints:
            if record.name == name:
                return record
        raise KeyError(name)

    def to_cvxpy(self):
        ''' Build the cvxpy Problem '''
        cons = []
        for record in self.constraints:
            expr = record.expr
            if record.sense == "psd":
                if expr.size == 1:
                    cons.append(cp.sum(expr) >= record.margin)
                else:
                    dim = expr.shape[0]
                    cons.append(sym(expr) - record.margin * np.eye(dim) >> 0)
            elif record.sense == "eq":
                cons.append(expr == 0)
            elif record.sense == "ge":
                cons.append(expr >= record.bound)
            elif record.sense == "le":
                cons.append(expr <= record.bound)
            else:
                raise ValueError(f"unknown constraint sense {record.sense}")
        if self.objective is None:
            objective = cp.Minimize(0)
        elif self.sense == "min":
            objective = cp.Minimize(self.objective)
        else:
            objective = cp.Maximize(self.objective)
        return cp.Problem(objective, cons)

    def __repr__(self):
        return (f"LmiProblem({self.name!r}, {len(self.variables)} variables, "
                f"{len(self.constraints)} constraints)")


@dataclass
class SdpSolution:
    ''' Outcome of solve(); values are numpy arrays keyed by variable name '''
    status: str
    values: Dict[str, np.ndarray] = field(default_factory=dict)
    objective: Optional[float] = None
    residual: float = np.inf
    residuals: Dict[str, float] = field(default_factory=dict)
    solver: Optional[str] = None
    message: str = ""

    @property
    def ok(self):
        ''' True for optimal or feasible outcomes '''
        return self.status in (OPTIMAL, FEASIBLE)

    def value(self, name):
        ''' Variable value; scalars are returned as float '''
        val = self.values[name]
        if np.ndim(val) == 0 or np.size(val) == 1:
            return float(np.ravel(val)[0])
        return val

    def worst_constraint(self):
        ''' Name of the constraint with the largest residual '''
        if not self.residuals:
            return None
        return max(self.residuals, key=self.residuals.get)


def default_solver(preferred=None):
    '''
    Pick a conic solver that handles semidefinite cones.
    Raise SolverError when none is installed.
    '''
    installed = cp.installed_solvers()
    if preferred is not None:
        if preferred.upper() not in installed:
            raise SolverError(f"solver {preferred} is not installed")
        return preferred.upper()
    for name in SOLVER_PREFERENCE:
        if name in installed:
            return name
    raise SolverError("no semidefinite solver installed (need CLARABEL or SCS)")


def _solver_options(solver, tight):
    if solver == "CLARABEL":
        opts = {"max_iter": 500}
        if tight:
            opts.update(tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10)
        return opts
    if solver == "SCS":
        return {"max_iters": 200000, "eps_abs": 1e-9, "eps_rel": 1e-9}
    return {}


def constraint_residual(record):
    '''
    Independent residual of one constraint at the variables' current
    values, relative to the constraint's magnitude.
    '''
    value = np.asarray(record.expr.value, dtype=float)
    if record.sense == "psd":
        return psd_residual(np.atleast_2d(value), record.margin)
    if value.size == 0:
        return 0.0
    scale = max([1.0, abs(record.bound)]
                + [float(np.max(np.abs(var.value))) for var in record.expr.variables()
                   if var.value is not None])
    if record.sense == "eq":
        return float(np.max(np.abs(value))) / scale
    if record.sense == "ge":
        return float(np.max(np.maximum(record.bound - value, 0.0))) / scale
    return float(np.max(np.maximum(value - record.bound, 0.0))) / scale


def verify(problem, tol_psd=TOL_PSD):
    '''
    Re-check every constraint at the current variable values.
    Return (max residual, per-constraint residual dict).
    '''
    residuals = {}
    for record in problem.constraints:
        residuals[record.name] = constraint_residual(record)
    worst = max(residuals.values()) if residuals else 0.0
    if worst > tol_psd:
        name = max(residuals, key=residuals.get)
        logger.warning("%s: constraint %s violated by %.3g (relative)",
                       problem.name, name, worst)
    return worst, residuals


_STATUS_MAP = {
    cp.OPTIMAL: OPTIMAL,
    cp.OPTIMAL_INACCURATE: FEASIBLE,
    cp.INFEASIBLE: INFEASIBLE,
    cp.INFEASIBLE_INACCURATE: INFEASIBLE,
}


def solver_sequence(preferred=None):
    '''
    Solvers to try in order: the preferred one alone, or every installed
    entry of SOLVER_PREFERENCE.
    '''
    if preferred is not None:
        return [default_solver(preferred)]
    installed = cp.installed_solvers()
    names = [name for name in SOLVER_PREFERENCE if name in installed]
    if not names:
        raise SolverError("no semidefinite solver installed (need CLARABEL or SCS)")
    return names


def solve(problem, solver=None, tol_psd=TOL_PSD, tight=False):
    '''
    Solve an LmiProblem. The returned status is optimal or feasible only
    when the independent re-verification passes; solver claims that fail
    it are reported as numerical-failure. Without an explicit solver, a
    numerical failure moves on to the next installed solver.
    '''
    names = solver_sequence(solver)
    cvx_problem = problem.to_cvxpy()
    solution = None
    for position, name in enumerate(names):
        solution = _solve_once(problem, cvx_problem, name, tol_psd, tight)
        if solution.status != NUMERICAL_FAILURE:
            break
        if position + 1 < len(names):
            logger.warning("%s: %s gave %s, retrying with %s", problem.name, name,
                           solution.message or solution.status, names[position + 1])
    return solution


def _solve_once(problem, cvx_problem, solver, tol_psd, tight):
    start = time.time()
    try:
        cvx_problem.solve(solver=solver, **_solver_options(solver, tight))
    except cp.error.SolverError as err:
        logger.warning("%s: solver %s failed", problem.name, solver)
        logger.info("Error context:", exc_info=err)
        return SdpSolution(NUMERICAL_FAILURE, solver=solver, message=str(err))
    elapsed = text_utils.format_hms(time.time() - start)
    status = _STATUS_MAP.get(cvx_problem.status, NUMERICAL_FAILURE)
    logger.info("%s: %s (%s) in %s", problem.name, status, cvx_problem.status, elapsed)
    if status not in (OPTIMAL, FEASIBLE):
        return SdpSolution(status, solver=solver, message=str(cvx_problem.status))

    values = {}
    used = {var.id for var in cvx_problem.variables()}
    for name, var in problem.variables.items():
        if var.id not in used:
            continue
        if var.value is None:
            return SdpSolution(NUMERICAL_FAILURE, solver=solver,
                               message=f"no value for {name}")
        values[name] = np.array(var.value, dtype=float)
    worst, residuals = verify(problem, tol_psd)
    objective = None if cvx_problem.value is None else float(cvx_problem.value)
    if worst > tol_psd:
        return SdpSolution(NUMERICAL_FAILURE, values, objective, worst, residuals,
                           solver, "re-verification failed")
    return SdpSolution(status, values, objective, worst, residuals, solver)


def prop1_matrix(P, A, B, C, D, supply, stacker="numpy"):
    '''
    Dissipativity matrix of x' = Ax + Bu, y = Cx + Du under supply rate X;
    the system is X-dissipative with storage x^T P x iff this is PSD.
    '''
    stack = get_stacker(stacker)
    x11, x12, x21, x22 = supply.x11, supply.x12, supply.x21, supply.x22
    top_left = -herm(P @ A) + C.T @ x22 @ C
    top_right = -P @ B + C.T @ x21 + C.T @ x22 @ D
    bottom = x11 + herm(x12 @ D) + D.T @ x22 @ D
    return stack([[top_left, top_right], [top_right.T, bottom]])


def check_lti_dissipative(A, B, C, D, supply, eps=EPS, tol_psd=TOL_PSD, solver=None):
    '''
    Search for P >= eps*I making the LTI system dissipative under supply.
    Return a PassivityCertificate, or a Refusal when none exists.
    '''
    A, B, C, D = (np.atleast_2d(np.asarray(m, dtype=float)) for m in (A, B, C, D))
    n_state = A.shape[0]
    if (A.shape != (n_state, n_state) or B.shape[0] != n_state or C.shape[1] != n_state
            or D.shape != (C.shape[0], B.shape[1])
            or supply.x11.shape[0] != B.shape[1] or supply.x22.shape[0] != C.shape[0]):
        raise ValueError("inconsistent system or supply-rate dimensions")
    problem = LmiProblem("lti-dissipativity", eps)
    P = problem.matrix("P", n_state)
    problem.add_psd("storage", P)
    problem.add_psd("dissipation", prop1_matrix(P, A, B, C, D, supply, "cvxpy"),
                    strict=False)
    solution = solve(problem, solver=solver, tol_psd=tol_psd)
    if not solution.ok:
        return Refusal(solution.status, solution.message or "no storage function found")
    P_val = solution.value("P") if n_state > 1 else np.atleast_2d(solution.value("P"))
    nu = -float(supply.x11[0, 0]) if supply.x11.size else float("nan")
    rho = -float(supply.x22[0, 0]) if supply.x22.size else float("nan")
    return PassivityCertificate(nu, rho, np.atleast_2d(P_val), "lti", solution.residual)


def witness_residual(P, A, B, C, D, supply):
    ''' Relative PSD residual of the dissipativity matrix at a given P '''
    mat = prop1_matrix(np.atleast_2d(P), *(np.atleast_2d(m) for m in (A, B, C, D)),
                       supply)
    return psd_residual(mat)


def network_synthesis_matrix(xp11, xbar_p11, xp22, xbar_p22, x12, xbar12, y11, y12, y22,
                             l_blocks, m_blocks, stacker="numpy"):
    '''
    Interconnection-synthesis LMI matrix for a network of dissipative
    subsystems of two kinds with an external channel.
    l_blocks: dict with keys uy, uyb, uw, uby, ubyb, ubw (the L = X11 M blocks).
    m_blocks: dict with keys zy, zyb, zw.
    The network is Y-dissipative when the returned matrix is positive definite.
    '''
    stack = get_stacker(stacker)
    L, M = l_blocks, m_blocks
    x21, xbar21, y21 = x12.T, xbar12.T, y12.T
    n_u, n_ub, n_z = xp11.shape[0], xbar_p11.shape[0], y22.shape[0]
    zero = np.zeros
    row1 = [xp11, zero((n_u, n_ub)), zero((n_u, n_z)), L["uy"], L["uyb"], L["uw"]]
    row2 = [zero((n_ub, n_u)), xbar_p11, zero((n_ub, n_z)), L["uby"], L["ubyb"], L["ubw"]]
    row3 = [zero((n_z, n_u)), zero((n_z, n_ub)), -y22, -y22 @ M["zy"], -y22 @ M["zyb"],
            y22 @ M["zw"]]
    row4 = [L["uy"].T, L["uby"].T, -M["zy"].T @ y22,
            -L["uy"].T @ x12 - x21 @ L["uy"] - xp22,
            -x21 @ L["uyb"] - L["uby"].T @ xbar12,
            -x21 @ L["uw"] + M["zy"].T @ y21]
    row5 = [L["uyb"].T, L["ubyb"].T, -M["zyb"].T @ y22,
            -L["uyb"].T @ x12 - xbar21 @ L["uby"],
            -(L["ubyb"].T @ xbar12 + xbar21 @ L["ubyb"] + xbar_p22),
            -xbar21 @ L["ubw"] + M["zyb"].T @ y21]
    row6 = [L["uw"].T, L["ubw"].T, -M["zw"].T @ y22,
            -L["uw"].T @ x12 + y12 @ M["zy"],
            -L["ubw"].T @ xbar12 + y12 @ M["zyb"],
            M["zw"].T @ y21 + y12 @ M["zw"] + y11]
    return stack([row1, row2, row3, row4, row5, row6])


def lyapunov_stable(A):
    '''
    Lyapunov-equation oracle: A^T P + P A = -I has a positive definite
    solution iff A is Hurwitz.
    '''
    A = np.atleast_2d(np.asarray(A, dtype=float))
    try:
        P = scipy.linalg.solve_continuous_lyapunov(A.T, -np.eye(A.shape[0]))
    except (np.linalg.LinAlgError, ValueError):
        return False
    return is_positive_definite(sym(P))


def schur_oracle(P, Q, R, tol=1e-9):
    '''
    Evaluate the three equivalent Schur-complement statements:
    1) [[P, Q], [Q^T, R]] >= 0
    2) P >= 0 and R - Q^T P^-1 Q >= 0
    3) R >= 0 and P - Q R^-1 Q^T >= 0
    Return three booleans.
    '''
    P, Q, R = (np.atleast_2d(np.asarray(m, dtype=float)) for m in (P, Q, R))
    if Q.shape != (P.shape[0], R.shape[0]):
        raise ValueError("shape mismatch between P, Q and R")

    def psd(mat):
        return min_eig(mat) >= -tol * max(1.0, float(np.linalg.norm(mat, 2)))

    first = psd(np.block([[P, Q], [Q.T, R]]))
    second = psd(P) and psd(R - Q.T @ np.linalg.solve(P, Q))
    try:
        third = psd(R) and psd(P - Q @ np.linalg.solve(R, Q.T))
    except np.linalg.LinAlgError:
        third = psd(R) and psd(P - Q @ np.linalg.pinv(R) @ Q.T)
    return first, second, third


def inv_schur_oracle(P, Q, tol=1e-9):
    '''
    Check Q^T P^-1 Q > Q^T + Q - P for P > 0.
    Return (holds, boundary): holds when the difference is positive definite,
    boundary when its smallest eigenvalue is zero to within tol (Q = P).
    '''
    P, Q = (np.atleast_2d(np.asarray(m, dtype=float)) for m in (P, Q))
    if not is_positive_definite(P):
        raise ValueError("P must be positive definite")
    diff = Q.T @ np.linalg.solve(P, Q) - (Q.T + Q - P)
    margin = min_eig(diff)
    scale = max(1.0, float(np.linalg.norm(diff, 2)), float(np.linalg.norm(P, 2)))
    boundary = abs(margin) <= tol * scale
    return (margin > tol * scale), boundary


def woodbury_oracle(R, rho, dps=30):
    '''
    Relative residual of (R + rho I)^-1 = R^-1 - rho R^-1 (I + rho R^-1)^-1 R^-1,
    evaluated in extended precision.
    '''
    R = np.atleast_2d(np.asarray(R, dtype=float))
    dim = R.shape[0]
    if np.linalg.cond(R) > 1e14:
        raise ValueError("singular R")
    mpmath.mp.dps = dps
    r_mp = mpmath.matrix(R.tolist())
    ident = mpmath.eye(dim)
    try:
        lhs = mpmath.inverse(r_mp + rho * ident)
        r_inv = mpmath.inverse(r_mp)
        rhs = r_inv - rho * r_inv * mpmath.inverse(ident + rho * r_inv) * r_inv
    except ZeroDivisionError as err:
        raise ValueError("singular R") from err
    residual = mpmath.mnorm(lhs - rhs, 'f') / max(mpmath.mpf(1), mpmath.mnorm(lhs, 'f'))
    return float(residual)


def _coordinates(variable):
    ''' Basis directions of a variable's free coordinates '''
    shape = variable.shape
    if shape == ():
        yield (0, 0), np.array(1.0)
        return
    if len(shape) == 1:
        for i in range(shape[0]):
            basis = np.zeros(shape)
            basis[i] = 1.0
            yield (i, 0), basis
        return
    symmetric = bool(variable.attributes.get("symmetric"))
    for i in range(shape[0]):
        for j in range(shape[1]):
            if symmetric and j < i:
                continue
            basis = np.zeros(shape)
            basis[i, j] = 1.0
            if symmetric:
                basis[j, i] = 1.0
            yield (i, j), basis


def _as_matrix(value):
    value = np.asarray(value, dtype=float)
    if value.ndim == 0:
        return value.reshape(1, 1)
    if value.ndim == 1:
        return value.reshape(-1, 1)
    return value


def coefficient_blocks(problem):
    '''
    Affine decomposition F(x) = F0 + sum_k x_k F_k of every constraint.
    Return {constraint name: {"const": F0, (var, i, j): F_k, ...}}.
    Variable values are restored afterwards.
    '''
    saved = {name: var.value for name, var in problem.variables.items()}
    zero = {name: np.zeros(var.shape) for name, var in problem.variables.items()}
    for name, var in problem.variables.items():
        var.value = zero[name]
    blocks = {}
    try:
        for record in problem.constraints:
            blocks[record.name] = {"const": _as_matrix(record.expr.value)}
        for name, var in problem.variables.items():
            involved = [rec for rec in problem.constraints
                        if any(v.id == var.id for v in rec.expr.variables())]
            if not involved:
                continue
            for (i, j), basis in _coordinates(var):
                var.value = basis
                for record in involved:
                    coeff = _as_matrix(record.expr.value) - blocks[record.name]["const"]
                    if np.any(coeff):
                        blocks[record.name][(name, i, j)] = coeff
            var.value = zero[name]
    finally:
        for name, var in problem.variables.items():
            if saved[name] is not None:
                var.value = saved[name]
    return blocks


def dump_problem(problem):
    '''
    Plain-text listing of the problem as sparse triplets, one block per
    constraint term, for external cross-checking.
    '''
    fmt = text_utils.format_exact
    out = [DUMP_HEADER, f"problem {problem.name}"]
    for name, var in problem.variables.items():
        rows, cols = (_as_matrix(np.zeros(var.shape))).shape
        symmetric = int(bool(var.attributes.get("symmetric")))
        out.append(f"variable {name} {rows} {cols} {symmetric}")
    blocks = coefficient_blocks(problem)
    for record in problem.constraints:
        const = blocks[record.name]["const"]
        out.append(f"constraint {record.name} {record.sense} {const.shape[0]} "
                   f"{const.shape[1]} {fmt(record.margin)} {fmt(record.bound)}")
        for key, mat in blocks[record.name].items():
            label = "const" if key == "const" else f"{key[0]} {key[1]} {key[2]}"
            out.append(f"block {label}")
            for i, j in zip(*np.nonzero(mat)):
                out.append(f"{i} {j} {fmt(mat[i, j])}")
    out.append("end")
    return "\n".join(out) + "\n"


def parse_dump(text):
    '''
    Read a dump_problem listing back into dense coefficient matrices,
    in the same layout coefficient_blocks returns.
    '''
    blocks = {}
    current = None
    shape = None
    matrix = None
    for raw in text.splitlines():
        if not raw or raw.startswith("#"):
            continue
        words = raw.split()
        if words[0] in ("problem", "variable", "end"):
            continue
        if words[0] == "constraint":
            current = blocks.setdefault(words[1], {})
            shape = (int(words[3]), int(words[4]))
        elif words[0] == "block":
            if words[1] == "const":
                key = "const"
            else:
                key = (words[1], int(words[2]), int(words[3]))
            matrix = np.zeros(shape)
            current[key] = matrix
        else:
            matrix[int(words[0]), int(words[1])] = float(words[2])
    return blocks
