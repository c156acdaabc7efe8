"""
Tests for netspec.py

part of mgcodesign

"""

import unittest

import numpy as np

from mgcodesign import netspec

# python -m unittest discover in top-level package dir

# pylint: disable=too-many-public-methods

TWO_DG = """
[bounds]
v_min = 45
v_max = 51

[dg 1]
r_t = 0.2
l_t = 1.8e-3
c_t = 2.2e-3
p_n = 500
y_l = 0.05
i_bar = 5
p_l = 50

[dg 2]
r_t = 0.3   # Ohm
l_t = 2e-3
c_t = 1.9e-3
p_n = 400

[line 1]
r = 0.1
l = 1e-4
from = 2
to = 1
"""


class NetspecTestCase(unittest.TestCase):
    """
    Unit tests for netspec.py
    """

    def test_parse_network(self):
        """ test parse_network function """
        spec = netspec.parse_network(TWO_DG)
        self.assertEqual(spec.n_dg, 2)
        self.assertEqual(spec.n_line, 1)
        self.assertEqual(spec.dgs[1].r_t, 0.3)
        self.assertEqual(spec.loads[1], netspec.ZipLoad(0.0, 0.0, 0.0))
        self.assertEqual((spec.lines[0].from_dg, spec.lines[0].to_dg), (1, 0))
        self.assertEqual((spec.v_min, spec.v_max), (45.0, 51.0))

    def test_bundled_networks(self):
        """ test the bundled network files """
        spec = netspec.load_network(netspec.bundled("microgrid_4dg.ini"))
        self.assertEqual((spec.n_dg, spec.n_line), (4, 4))
        spec = netspec.load_network(netspec.bundled("microgrid_6dg.ini"))
        self.assertEqual((spec.n_dg, spec.n_line), (6, 9))
        self.assertEqual(netspec.validate(spec), [])

    def test_serialize(self):
        """ test serialize function """
        spec = netspec.load_network(netspec.bundled("microgrid_4dg.ini"))
        self.assertEqual(netspec.parse_network(netspec.serialize(spec)), spec)

    def test_parse_errors(self):
        """ test ParseError reporting """
        with self.assertRaises(netspec.ParseError) as ctx:
            netspec.parse_network(TWO_DG.replace("r_t = 0.2\n", ""))
        self.assertEqual(ctx.exception.field_name, "r_t")
        self.assertEqual(ctx.exception.line, 6)

        with self.assertRaises(netspec.ParseError) as ctx:
            netspec.parse_network(TWO_DG.replace("p_n = 400", "p_n = lots"))
        self.assertEqual(ctx.exception.field_name, "p_n")
        self.assertEqual(ctx.exception.line, 19)

        with self.assertRaises(netspec.ParseError):
            netspec.parse_network("r_t = 1\n" + TWO_DG)
        with self.assertRaises(netspec.ParseError):
            netspec.parse_network(TWO_DG + "\n[bus 1]\nx = 1\n")
        with self.assertRaises(netspec.ParseError):
            netspec.parse_network(TWO_DG.replace("p_l = 50", "p_l = 50\nq_l = 3"))
        with self.assertRaises(netspec.ParseError):
            netspec.parse_network(TWO_DG.replace("[bounds]", "[limits]"))

    def test_validation_errors(self):
        """ test ValidationError reporting """
        with self.assertRaises(netspec.ValidationError) as ctx:
            netspec.parse_network(TWO_DG.replace("r_t = 0.2", "r_t = -0.2"))
        self.assertIn("dg 1: R_t must be > 0", ctx.exception.violations)

        with self.assertRaises(netspec.ValidationError) as ctx:
            netspec.parse_network(TWO_DG.replace("from = 2", "from = 1"))
        self.assertIn("line 1: from and to must differ", ctx.exception.violations)

        with self.assertRaises(netspec.ValidationError) as ctx:
            netspec.parse_network(TWO_DG.replace("to = 1", "to = 7"))
        self.assertIn("line 1: unknown endpoint", ctx.exception.violations)

        with self.assertRaises(netspec.ValidationError) as ctx:
            netspec.parse_network(TWO_DG.replace("v_max = 51", "v_max = 40"))
        self.assertIn("bounds: 0 < V_min < V_max required", ctx.exception.violations)

        three = TWO_DG + "\n[dg 3]\nr_t = 1\nl_t = 1e-3\nc_t = 1e-3\np_n = 100\n"
        with self.assertRaises(netspec.ValidationError) as ctx:
            netspec.parse_network(three)
        self.assertIn("graph not connected", ctx.exception.violations)

    def test_incidence_of(self):
        """ test incidence_of and physical_adjacency functions """
        spec = netspec.load_network(netspec.bundled("microgrid_4dg.ini"))
        incidence = netspec.incidence_of(spec)
        self.assertEqual(incidence.shape, (4, 4))
        np.testing.assert_array_equal(incidence.sum(axis=0), np.zeros(4))
        self.assertEqual(incidence[0, 0], 1.0)
        self.assertEqual(incidence[1, 0], -1.0)
        adjacent = netspec.physical_adjacency(spec)
        np.testing.assert_array_equal(adjacent, adjacent.T)
        self.assertTrue(adjacent[0, 1])
        self.assertFalse(adjacent[0, 3])
        self.assertFalse(adjacent.diagonal().any())

    def test_with_load(self):
        """ test NetworkSpec.with_load and param_vector """
        spec = netspec.parse_network(TWO_DG)
        changed = spec.with_load(0, "p_l", 75)
        self.assertEqual(changed.loads[0].p_l, 75.0)
        self.assertEqual(spec.loads[0].p_l, 50.0)
        np.testing.assert_array_equal(changed.param_vector("p_l"), [75.0, 0.0])
        np.testing.assert_array_equal(spec.param_vector("p_n"), [500.0, 400.0])
        self.assertEqual(spec.lines_at(0), [0])

    def test_design_params(self):
        """ test DesignParams overrides and multipliers """
        spec = netspec.parse_network(TWO_DG + "\n[design]\nmode = soft\neps = 1e-7\n")
        params = netspec.DesignParams().with_overrides(spec.design)
        self.assertEqual(params.mode, "soft")
        self.assertEqual(params.eps, 1e-7)
        p_dg, p_line = params.multipliers(spec)
        np.testing.assert_allclose(p_dg, [5000 * 2.2e-3, 5000 * 1.9e-3])
        np.testing.assert_allclose(p_line, [5000.0])
        fixed = netspec.DesignParams(p_dg=0.1, p_line=0.01)
        p_dg, p_line = fixed.multipliers(spec)
        np.testing.assert_allclose(p_dg, [0.1, 0.1])
        self.assertEqual(netspec.DesignParams().check(), [])
        self.assertEqual(len(netspec.DesignParams(structure="loose").check()), 1)
        self.assertEqual(len(netspec.DesignParams(integrator_scale=0.0).check()), 1)
        with self.assertRaises(netspec.ParseError):
            netspec.DesignParams().with_overrides([("colour", "blue")])
        with self.assertRaises(netspec.ParseError):
            netspec.DesignParams().with_overrides([("eps", "small")])
