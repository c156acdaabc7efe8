"""
Tests for sector.py

part of mgcodesign

"""

import unittest

import numpy as np

from mgcodesign import netspec
from mgcodesign import sector

# python -m unittest discover in top-level package dir

# pylint: disable=too-many-public-methods


class SectorTestCase(unittest.TestCase):
    """
    Unit tests for sector.py
    """

    def setUp(self):
        self.spec = netspec.load_network(netspec.bundled("microgrid_4dg.ini"))
        self.dg = self.spec.dgs[0]
        self.load = self.spec.loads[0]

    def test_sector_bounds(self):
        """ test sector_bounds function """
        bound = sector.sector_bounds(self.dg, self.load, 48.0, 45.0, 51.0)
        self.assertAlmostEqual(bound.alpha, 60.0 / (2.2e-3 * 51.0**2))
        self.assertAlmostEqual(bound.beta, 60.0 / (2.2e-3 * 45.0**2))
        self.assertLess(bound.alpha, bound.beta)
        self.assertAlmostEqual(bound.mid, 0.5 * (bound.alpha + bound.beta))
        self.assertEqual(bound.v_tilde_range, (-3.0, 3.0))
        with self.assertRaises(ValueError):
            sector.sector_bounds(self.dg, self.load, 52.0, 45.0, 51.0)

        no_cpl = sector.sector_bounds(self.dg, netspec.ZipLoad(), 48.0, 45.0, 51.0)
        self.assertEqual((no_cpl.alpha, no_cpl.beta), (0.0, 0.0))

    def test_cpl_nonlinearity(self):
        """ test cpl_nonlinearity function """
        self.assertEqual(sector.cpl_nonlinearity(self.dg, self.load, 48.0, 0.0), 0.0)
        v_tilde = np.array([-2.0, 1.5])
        expected = (60.0 / 2.2e-3) * (1.0 / 48.0 - 1.0 / (v_tilde + 48.0))
        np.testing.assert_allclose(sector.cpl_nonlinearity(self.dg, self.load, 48.0, v_tilde),
                                   expected)
        with self.assertRaises(ValueError):
            sector.cpl_nonlinearity(self.dg, self.load, 48.0, -48.0)
        with self.assertRaises(ValueError):
            sector.cpl_nonlinearity(self.dg, self.load, 48.0, np.array([0.0, -50.0]))

    def test_sample_violations(self):
        """ test sample_violations function """
        for index, dg in enumerate(self.spec.dgs):
            for v_r in (45.0, 48.0, 51.0):
                bound = sector.sector_bounds(dg, self.spec.loads[index], v_r, 45.0, 51.0)
                self.assertEqual(sector.sample_violations(dg, self.spec.loads[index], bound), 0)

        narrow = sector.SectorBound(0.0, 1.0, 45.0, 51.0, 48.0)
        self.assertGreater(sector.sample_violations(self.dg, self.load, narrow, count=100), 0)

    def test_sector_quadratic(self):
        """ test sector_quadratic form and block layout """
        bound = sector.sector_bounds(self.dg, self.load, 48.0, 45.0, 51.0)
        quad = sector.sector_quadratic(bound)
        self.assertEqual(quad.theta.shape, (6, 6))
        np.testing.assert_array_equal(quad.theta, quad.theta.T)
        np.testing.assert_array_equal(quad.theta12, quad.theta21)
        self.assertAlmostEqual(quad.theta22[0, 0], -1.0)
        self.assertEqual(quad.theta11[1, 1], 0.0)
        for v_tilde in np.linspace(-3.0, 3.0, 61):
            if v_tilde + 48.0 <= 0:
                continue
            g_value = sector.cpl_nonlinearity(self.dg, self.load, 48.0, v_tilde)
            scale = max(1.0, abs(bound.beta * v_tilde))**2
            self.assertGreaterEqual(quad.form(v_tilde, g_value), -1e-9 * scale)
            self.assertTrue(bound.contains(v_tilde, g_value, tol=1e-9 * scale))
        self.assertLess(quad.form(1.0, 2.0 * bound.beta), 0.0)
