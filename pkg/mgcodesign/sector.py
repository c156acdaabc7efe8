'''
 sector.py

Sector bounds for the constant-power-load nonlinearity and the quadratic
constraint matrices that local synthesis uses to absorb it.

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

import numpy as np

__version__ = "0.4.0"  # Dated 2024-11-02

logger = logging.getLogger(__name__)

SELECTOR = np.array([[1.0], [0.0], [0.0]])  # Picks the voltage entry of a DG state


def version():  # Report version number for this document
    ''' Return version number '''
    return __version__


@dataclass(frozen=True)
class SectorBound:
    ''' Chord-slope interval [alpha, beta] of g over the voltage band '''
    alpha: float
    beta: float
    v_min: float
    v_max: float
    v_r: float

    @property
    def mid(self):
        ''' (alpha + beta) / 2 '''
        return 0.5 * (self.alpha + self.beta)

    @property
    def half_width(self):
        ''' (beta - alpha) / 2 '''
        return 0.5 * (self.beta - self.alpha)

    @property
    def v_tilde_range(self):
        ''' Voltage-error interval covered by the bound '''
        return self.v_min - self.v_r, self.v_max - self.v_r

    def contains(self, v_tilde, g_value, tol=0.0):
        ''' True when (g - alpha v)(g - beta v) <= tol '''
        return (g_value - self.alpha * v_tilde) * (g_value - self.beta * v_tilde) <= tol


@dataclass(frozen=True)
class SectorQuadratic:
    ''' 6x6 quadratic-constraint matrix Theta, in 3x3 blocks, and selector T '''
    theta: np.ndarray
    T: np.ndarray

    @property
    def theta11(self):
        return self.theta[:3, :3]

    @property
    def theta12(self):
        return self.theta[:3, 3:]

    @property
    def theta21(self):
        return self.theta[3:, :3]

    @property
    def theta22(self):
        return self.theta[3:, 3:]

    def core(self):
        ''' 2x2 scalar form [[-alpha beta, mid], [mid, -1]] '''
        return np.array([[self.theta[0, 0], self.theta[0, 3]],
                         [self.theta[3, 0], self.theta[3, 3]]])

    def form(self, v_tilde, g_value):
        ''' [v; g]^T core [v; g]; nonnegative inside the sector '''
        vec = np.array([v_tilde, g_value])
        return float(vec @ self.core() @ vec)


def sector_bounds(dg, load, v_r, v_min, v_max):
    '''
    Slopes alpha = P_L/(C_t V_max^2) and beta = P_L/(C_t V_min^2).
    The 1/C_t factor matches the scaling of cpl_nonlinearity.
    '''
    if not 0 < v_min <= v_r <= v_max:
        raise ValueError(f"dg {dg.index + 1}: need 0 < V_min <= V_r <= V_max")
    scale = load.p_l / dg.c_t
    return SectorBound(scale / v_max**2, scale / v_min**2, v_min, v_max, v_r)


def cpl_nonlinearity(dg, load, v_r, v_tilde):
    '''
    g(V~) = (P_L/C_t)(1/V_r - 1/(V~ + V_r)), the constant-power-load term
    of the voltage error dynamics. Raise ValueError at or past the pole.
    '''
    voltage = v_tilde + v_r
    if np.any(np.asarray(voltage) <= 0):
        raise ValueError("CPL term undefined for V <= 0")
    return (load.p_l / dg.c_t) * (1.0 / v_r - 1.0 / voltage)


def sector_quadratic(bound):
    ''' Theta blocks from a SectorBound '''
    ttt = SELECTOR @ SELECTOR.T
    theta = np.block([[-bound.alpha * bound.beta * ttt, bound.mid * ttt],
                      [bound.mid * ttt, -ttt]])
    return SectorQuadratic(theta, SELECTOR.copy())


def sample_violations(dg, load, bound, count=10000, seed=0):
    '''
    Sample V~ uniformly over the sector range (zero excluded) and count
    chord slopes g(V~)/V~ outside [alpha, beta].
    '''
    rng = np.random.default_rng(seed)
    low, high = bound.v_tilde_range
    v_tilde = rng.uniform(low, high, count)
    v_tilde = v_tilde[v_tilde != 0.0]
    slopes = cpl_nonlinearity(dg, load, bound.v_r, v_tilde) / v_tilde
    slack = 1e-12 * max(1.0, bound.beta)
    outside = (slopes < bound.alpha - slack) | (slopes > bound.beta + slack)
    count_out = int(np.count_nonzero(outside))
    if count_out:
        logger.warning("dg %d: %d sampled slopes outside [%g, %g]",
                       dg.index + 1, count_out, bound.alpha, bound.beta)
    return count_out
