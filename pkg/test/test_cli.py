"""
Tests for cli.py

part of mgcodesign

"""

import os
import shutil
import tempfile
import unittest

import numpy as np

from mgcodesign import bundle
from mgcodesign import cli
from mgcodesign import netspec

# python -m unittest discover in top-level package dir

# pylint: disable=too-many-public-methods

SHORT_SCENARIO = """
[scenario]
duration = 0.2
dt = 1e-5
decimation = 100

[event 1]
time = 0.1
target = all
field = p_l
scale = 1.5
"""


class CliTestCase(unittest.TestCase):
    """
    Unit tests for cli.py
    """

    @classmethod
    def setUpClass(cls):
        cls.tmp = tempfile.mkdtemp()
        cls.out = os.path.join(cls.tmp, "design")
        cls.status = cli.main(["design", "--out", cls.out])
        cls.bundle_path = os.path.join(cls.out, "design.bundle")

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.tmp)

    def write(self, name, text):
        """ Write a file into the scratch directory """
        path = os.path.join(self.tmp, name)
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)
        return path

    def test_design(self):
        """ test the design command """
        self.assertEqual(self.status, cli.EXIT_OK)
        for name in ("equilibrium.txt", "local_design.csv", "topology.csv", "gamma.txt",
                     "design.bundle"):
            self.assertTrue(os.path.isfile(os.path.join(self.out, name)), name)
        with open(os.path.join(self.out, "gamma.txt"), encoding="utf-8") as handle:
            self.assertTrue(handle.readline().startswith("gamma = "))
        design = bundle.load_bundle(self.bundle_path)
        self.assertEqual(design.spec, netspec.load_network(netspec.bundled("microgrid_4dg.ini")))
        self.assertIsNotNone(design.global_design)

    def test_verify(self):
        """ test verify on a fresh bundle """
        self.assertEqual(cli.main(["verify", "--bundle", self.bundle_path]), cli.EXIT_OK)
        results = cli.verify_design(bundle.load_bundle(self.bundle_path))
        names = {item.name for item in results}
        self.assertIn("dg1:certificate", names)
        self.assertIn("line4:certificate", names)
        self.assertIn("network_dissipativity", names)
        self.assertTrue(all(item.passed for item in results))

    def test_verify_corrupted_gains(self):
        """ test verify catches gains that break the Laplacian property """
        design = bundle.load_bundle(self.bundle_path)
        k_i = design.global_design.k_i
        k_i[0, 0] += 0.1 * max(1.0, float(np.max(np.abs(k_i))))
        results = {item.name: item for item in cli.verify_design(design)}
        self.assertFalse(results["laplacian"].passed)
        self.assertFalse(results["gain_consistency"].passed)
        path = os.path.join(self.tmp, "corrupt.bundle")
        bundle.save_bundle(design, path)
        self.assertEqual(cli.main(["verify", "--bundle", path]), cli.EXIT_INFEASIBLE)

    def test_verify_edited_gamma(self):
        """ test verify catches an edited gain bound """
        design = bundle.load_bundle(self.bundle_path)
        design.global_design.gamma_tilde = 1e-12
        results = {item.name: item for item in cli.verify_design(design)}
        self.assertFalse(results["network_dissipativity"].passed)
        self.assertTrue(results["laplacian"].passed)

    def test_simulate(self):
        """ test the simulate command with the droop baseline """
        scen = self.write("short.ini", SHORT_SCENARIO)
        out = os.path.join(self.tmp, "sim")
        status = cli.main(["simulate", "--bundle", self.bundle_path, "--scenario", scen,
                           "--out", out, "--droop"])
        self.assertEqual(status, cli.EXIT_OK)
        for name in ("trace.csv", "metrics.csv", "summary.txt", "droop_trace.csv",
                     "droop_metrics.csv", "comparison.csv"):
            self.assertTrue(os.path.isfile(os.path.join(out, name)), name)
        with open(os.path.join(out, "summary.txt"), encoding="utf-8") as handle:
            summary = handle.read()
        self.assertIn("steady_state_deviation", summary)
        self.assertIn("audit_excess = ", summary)
        self.assertIn("storage_rate_max = ", summary)
        with open(os.path.join(out, "trace.csv"), encoding="utf-8") as handle:
            rows = handle.read().splitlines()
        self.assertEqual(len(rows), 1 + 201)
        self.assertTrue(rows[0].startswith("t,V_1,"))

    def test_input_errors(self):
        """ test input errors map to exit code 2 """
        bad = self.write("bad.ini", "[bounds]\nv_min = 45\nv_max = fifty\n")
        out = os.path.join(self.tmp, "bad")
        self.assertEqual(cli.main(["design", "--network", bad, "--out", out]), cli.EXIT_INPUT)
        missing = os.path.join(self.tmp, "missing.bundle")
        self.assertEqual(cli.main(["verify", "--bundle", missing]), cli.EXIT_INPUT)
        self.assertEqual(cli.main(["verify"]), cli.EXIT_INPUT)
        scen = self.write("bad_scenario.ini", SHORT_SCENARIO.replace("time = 0.1", "time = 5"))
        self.assertEqual(cli.main(["simulate", "--bundle", self.bundle_path,
                                   "--scenario", scen, "--out", out]), cli.EXIT_INPUT)

    def test_gamma_bar_infeasible(self):
        """ test an unreachable gain bound maps to exit code 3 """
        out = os.path.join(self.tmp, "tight")
        self.assertEqual(cli.main(["design", "--gamma-bar", "1e-9", "--out", out]),
                         cli.EXIT_INFEASIBLE)
        self.assertFalse(os.path.exists(os.path.join(out, "design.bundle")))

    def test_run_config(self):
        """ test RunConfig and build_parser """
        args = cli.build_parser().parse_args(["simulate", "--bundle", "x.bundle", "--dt", "2e-5",
                                              "--droop", "--seed", "3"])
        config = cli.RunConfig.from_args(args)
        self.assertEqual(config.command, "simulate")
        self.assertEqual(config.dt, 2e-5)
        self.assertTrue(config.droop)
        self.assertEqual(config.seed, 3)
        self.assertEqual(config.network_path(), netspec.bundled(cli.DEFAULT_NETWORK))
        self.assertEqual(config.output("a.csv"), os.path.join(".", "a.csv"))
        with self.assertRaises(SystemExit):
            cli.build_parser().parse_args(["design", "--mode", "medium"])

    def test_design_params(self):
        """ test design_params merges flags over the network """
        spec = netspec.load_network(netspec.bundled("microgrid_4dg.ini"))
        config = cli.RunConfig("design", mode="soft", gamma_bar=5.0)
        params = cli.design_params(spec, config)
        self.assertEqual((params.mode, params.gamma_bar), ("soft", 5.0))
        np.testing.assert_array_equal(params.multipliers(spec)[1], np.full(4, 5000.0))
