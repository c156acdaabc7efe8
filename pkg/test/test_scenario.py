"""
Tests for scenario.py

part of mgcodesign

"""

import unittest

import numpy as np

from mgcodesign import netspec
from mgcodesign import scenario

# python -m unittest discover in top-level package dir

# pylint: disable=too-many-public-methods

STEPS = """
[scenario]
duration = 2
dt = 1e-4

[initial]
p_l_scale = 0

[event 1]
time = 0.5
target = 2
field = i_bar
value = 9

[event 2]
time = 1.5
target = all
field = p_l
scale = 1

[disturbance]
amplitude_i = 0.5
seed = 3
"""


class ScenarioTestCase(unittest.TestCase):
    """
    Unit tests for scenario.py
    """

    def test_parse_scenario(self):
        """ test parse_scenario function """
        scen = scenario.parse_scenario(STEPS)
        self.assertEqual(scen.duration, 2.0)
        self.assertEqual(scen.decimation, 100)
        self.assertEqual(scen.initial, (("p_l", 0.0),))
        self.assertEqual(scen.events[0], scenario.LoadEvent(0.5, 1, "i_bar", value=9.0))
        self.assertIsNone(scen.events[1].target)
        self.assertEqual(scen.disturbance.seed, 3)
        self.assertEqual(scen.event_steps(), [(5000, scen.events[0]), (15000, scen.events[1])])
        self.assertEqual(scenario.parse_scenario(scenario.serialize_scenario(scen)), scen)

    def test_bundled_scenarios(self):
        """ test the bundled scenario files """
        for name in ("scenario_steps.ini", "scenario_alternate.ini"):
            scen = scenario.load_scenario(netspec.bundled(name), n_dg=4)
            self.assertEqual(scenario.check(scen, 4), [])
        scen = scenario.load_scenario(netspec.bundled("scenario_steps.ini"))
        self.assertEqual(len(scen.events), 4)
        self.assertEqual(scen.duration, 10.0)

    def test_parse_errors(self):
        """ test malformed scenario documents """
        with self.assertRaises(netspec.ParseError) as ctx:
            scenario.parse_scenario(STEPS.replace("field = i_bar", "field = q_l"))
        self.assertEqual(ctx.exception.field_name, "field")
        with self.assertRaises(netspec.ParseError):
            scenario.parse_scenario(STEPS.replace("value = 9", "value = 9\nscale = 2"))
        with self.assertRaises(netspec.ParseError):
            scenario.parse_scenario(STEPS.replace("target = 2", "target = first"))
        with self.assertRaises(netspec.ParseError):
            scenario.parse_scenario(STEPS.replace("[scenario]", "[run]"))
        with self.assertRaises(netspec.ParseError):
            scenario.parse_scenario(STEPS + "\n[extra]\nx = 1\n")

    def test_negative_scale(self):
        """ test negative event scales are rejected """
        with self.assertRaises(netspec.ParseError) as ctx:
            scenario.parse_scenario(STEPS.replace("scale = 1", "scale = -0.5"))
        self.assertEqual(ctx.exception.field_name, "scale")
        scenario.parse_scenario(STEPS.replace("scale = 1", "scale = 0"))
        event = scenario.LoadEvent(0.5, None, "p_l", scale=-1.0)
        problems = scenario.check(scenario.Scenario(1.0, 1e-4, 10, events=(event,)))
        self.assertEqual(problems, ["event 1: load values and scales must be >= 0"])

    def test_validation_errors(self):
        """ test inconsistent scenario documents """
        with self.assertRaises(netspec.ValidationError):
            scenario.parse_scenario(STEPS.replace("time = 1.5", "time = 0.2"))
        with self.assertRaises(netspec.ValidationError):
            scenario.parse_scenario(STEPS.replace("time = 1.5", "time = 3"))
        with self.assertRaises(netspec.ValidationError):
            scenario.parse_scenario(STEPS, n_dg=1)

    def test_configurations(self):
        """ test configurations and apply_event functions """
        spec = netspec.load_network(netspec.bundled("microgrid_4dg.ini"))
        scen = scenario.parse_scenario(STEPS)
        windows = scenario.configurations(spec, scen)
        self.assertEqual([start for start, _ in windows], [0.0, 0.5, 1.5])
        np.testing.assert_array_equal(windows[0][1].param_vector("p_l"), np.zeros(4))
        self.assertEqual(windows[1][1].loads[1].i_bar, 9.0)
        self.assertEqual(windows[1][1].loads[0].i_bar, spec.loads[0].i_bar)
        np.testing.assert_array_equal(windows[2][1].param_vector("p_l"),
                                      spec.param_vector("p_l"))

    def test_disturbance_signal(self):
        """ test DisturbanceSignal determinism and zero mean """
        dist = scenario.DisturbanceSpec(amplitude_v=0.2, amplitude_line=0.1, seed=5)
        first = scenario.DisturbanceSignal(dist, 2, 1, 1.0)
        second = scenario.DisturbanceSignal(dist, 2, 1, 1.0)
        np.testing.assert_array_equal(first(0.37), second(0.37))
        self.assertEqual(first(0.0).shape, (7,))
        np.testing.assert_allclose(first.knots.mean(axis=0), np.zeros(7), atol=1e-12)
        self.assertLessEqual(np.max(np.abs(first.knots[:, 0])), 0.2 + 1e-12)
        np.testing.assert_array_equal(first.knots[:, 1], np.zeros(first.knots.shape[0]))
        other = scenario.DisturbanceSignal(dist, 2, 1, 1.0, seed=6)
        self.assertFalse(np.allclose(first(0.37), other(0.37)))
        self.assertTrue(scenario.DisturbanceSpec().is_zero())
        self.assertFalse(dist.is_zero())
