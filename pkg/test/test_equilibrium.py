"""
Tests for equilibrium.py

part of mgcodesign

"""

import unittest
from unittest import mock

import numpy as np

from mgcodesign import equilibrium
from mgcodesign import netspec

# python -m unittest discover in top-level package dir

# pylint: disable=too-many-public-methods


class EquilibriumTestCase(unittest.TestCase):
    """
    Unit tests for equilibrium.py
    """

    @classmethod
    def setUpClass(cls):
        cls.spec = netspec.load_network(netspec.bundled("microgrid_4dg.ini"))
        cls.selection = equilibrium.select_reference(cls.spec)

    def test_select_reference(self):
        """ test select_reference function """
        selection = self.selection
        self.assertTrue(selection.feasible)
        self.assertTrue(np.all(selection.v_r >= self.spec.v_min))
        self.assertTrue(np.all(selection.v_r <= self.spec.v_max))
        self.assertGreaterEqual(selection.i_s, 0.0)
        self.assertLessEqual(selection.i_s, 1.0)
        self.assertLess(selection.residual, 1e-6)
        self.assertGreaterEqual(selection.iterations, 1)

        with self.assertRaises(ValueError):
            equilibrium.select_reference(self.spec, v_bar=60.0)

    def test_equilibrium_from_reference(self):
        """ test equilibrium_from_reference and residuals functions """
        point = equilibrium.equilibrium_from_reference(self.spec, self.selection.v_r,
                                                       self.selection.i_s)
        self.assertLessEqual(equilibrium.residuals(self.spec, point), 1e-8)
        np.testing.assert_allclose(point.i_te / self.spec.param_vector("p_n"),
                                   np.full(4, self.selection.i_s), atol=1e-6)
        self.assertLess(point.sharing_dispersion(self.spec), 1e-6)
        self.assertEqual(point.state().shape, (3 * 4 + 4,))
        np.testing.assert_array_equal(point.v_int, np.zeros(4))

        with self.assertRaises(ValueError):
            equilibrium.equilibrium_from_reference(self.spec, [48.0, 48.0, -1.0, 48.0], 0.0)

    def test_steady_state_inputs(self):
        """ test steady_state_inputs function """
        u_s = equilibrium.steady_state_inputs(self.spec, self.selection)
        point = equilibrium.equilibrium_from_reference(self.spec, self.selection.v_r,
                                                       self.selection.i_s)
        np.testing.assert_allclose(u_s, point.u_e, rtol=1e-6)

    def test_conductance_matrix(self):
        """ test conductance_matrix function """
        gmat = equilibrium.conductance_matrix(self.spec)
        np.testing.assert_allclose(gmat, gmat.T)
        np.testing.assert_allclose(gmat.sum(axis=1), self.spec.param_vector("y_l"),
                                   atol=1e-12)

    def test_infeasible_reference(self):
        """ test select_reference reports loads beyond rated capacity """
        heavy = self.spec
        for index in range(heavy.n_dg):
            heavy = heavy.with_load(index, "i_bar", 1000.0)
        selection = equilibrium.select_reference(heavy)
        self.assertFalse(selection.feasible)
        with self.assertRaises(ValueError):
            equilibrium.steady_state_inputs(heavy, selection)

    def test_residual_rejected(self):
        """ test select_reference rejects a point that misses current sharing """
        with mock.patch.object(equilibrium, "_kkt_solve",
                               return_value=(np.full(4, 48.0), 0.5)):
            with self.assertRaises(equilibrium.EquilibriumError) as ctx:
                equilibrium.select_reference(self.spec)
        self.assertIn("misses current sharing", str(ctx.exception))
        selection = equilibrium.select_reference(self.spec,
                                                 residual_tol=equilibrium.RESIDUAL_TOL)
        self.assertLessEqual(selection.residual, equilibrium.RESIDUAL_TOL)
