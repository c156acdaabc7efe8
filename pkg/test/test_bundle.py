"""
Tests for bundle.py

part of mgcodesign

"""

import os
import tempfile
import unittest

import numpy as np

from mgcodesign import bundle
from mgcodesign import equilibrium
from mgcodesign import global_codesign
from mgcodesign import lmi
from mgcodesign import local_synth
from mgcodesign import netspec
from mgcodesign import sector

# python -m unittest discover in top-level package dir

# pylint: disable=too-many-public-methods


def random_spd(rng, dim):
    """ Random symmetric positive definite matrix """
    mat = rng.standard_normal((dim, dim))
    return mat @ mat.T + 0.1 * np.eye(dim)


def synthetic_bundle(with_global=True):
    """ DesignBundle with random values of the right shapes """
    rng = np.random.default_rng(8)
    spec = netspec.load_network(netspec.bundled("microgrid_4dg.ini"))
    v_r = rng.uniform(46.0, 50.0, spec.n_dg)
    selection = equilibrium.ReferenceSelection(v_r, 0.0211, 1.5, True, 3, 1e-12)
    certs = [lmi.PassivityCertificate(-rng.uniform(), rng.uniform(), random_spd(rng, 3), "dg",
                                      1e-10) for _ in spec.dgs]
    line_certs = [lmi.PassivityCertificate(-1e-6, rng.uniform(), np.array([[rng.uniform()]]),
                                           "line") for _ in spec.lines]
    r_matrix = [random_spd(rng, 3) for _ in spec.dgs]
    bounds = [sector.sector_bounds(dg, load, v, spec.v_min, spec.v_max)
              for dg, load, v in zip(spec.dgs, spec.loads, v_r)]
    pairs = [(dg.index, l_index) for dg in spec.dgs for l_index in spec.lines_at(dg.index)]
    local = local_synth.LocalDesign(
        rng.standard_normal((4, 3)), certs, line_certs, rng.uniform(size=4),
        1.0 + rng.uniform(size=4), [np.linalg.inv(r) for r in r_matrix], r_matrix,
        {key: rng.uniform() for key in pairs}, {key: rng.uniform() for key in pairs},
        {key: rng.uniform() for key in pairs}, rng.uniform(size=4), rng.uniform(size=4),
        bounds, "strict", 12.5, lmi.OPTIMAL, integrator_scale=20.0)
    glob = None
    if with_global:
        k_i = global_codesign.sparsify(rng.standard_normal((4, 4)), spec.param_vector("p_n"), 0.0)
        glob = global_codesign.GlobalDesign(
            rng.standard_normal((4, 4)), k_i, 0.37,
            global_codesign.extract_topology(spec, k_i), random_spd(rng, 64) * 1e-4,
            rng.uniform(size=4), rng.uniform(size=4), "soft", 2.5, lmi.OPTIMAL, 1e-9, 1e-7)
    params = netspec.DesignParams(mode="soft", structure="strict", gamma_bar=50.0)
    return bundle.DesignBundle(spec, params, selection, local, glob)


class BundleTestCase(unittest.TestCase):
    """
    Unit tests for bundle.py
    """

    def test_read_bundle(self):
        """ test write_bundle and read_bundle keep every value """
        original = synthetic_bundle()
        copy = bundle.read_bundle(bundle.write_bundle(original))
        self.assertEqual(copy.spec, original.spec)
        self.assertEqual(copy.params, original.params)
        np.testing.assert_array_equal(copy.selection.v_r, original.selection.v_r)
        self.assertEqual(copy.selection.i_s, original.selection.i_s)
        self.assertEqual(copy.selection.iterations, 3)
        self.assertTrue(copy.selection.feasible)

        local, ref = copy.local, original.local
        np.testing.assert_array_equal(local.k0, ref.k0)
        np.testing.assert_array_equal(local.nu, ref.nu)
        np.testing.assert_array_equal(local.rho, ref.rho)
        np.testing.assert_array_equal(local.nu_bar, ref.nu_bar)
        np.testing.assert_array_equal(local.rho_bar, ref.rho_bar)
        for mine, theirs in zip(local.certificates, ref.certificates):
            np.testing.assert_array_equal(mine.P, theirs.P)
        for mine, theirs in zip(local.r_matrix, ref.r_matrix):
            np.testing.assert_array_equal(mine, theirs)
        for mine, theirs in zip(local.line_certificates, ref.line_certificates):
            np.testing.assert_array_equal(mine.P, theirs.P)
        self.assertEqual(local.bounds, ref.bounds)
        self.assertEqual(local.xi, ref.xi)
        self.assertEqual(local.s_2, ref.s_2)
        np.testing.assert_array_equal(local.lambda_tilde, ref.lambda_tilde)
        np.testing.assert_array_equal(local.p_bar, ref.p_bar)
        self.assertEqual(local.structure, "strict")
        self.assertEqual(local.integrator_scale, copy.params.integrator_scale)
        self.assertEqual(local.integrator_scale, 20.0)

        glob, ref_glob = copy.global_design, original.global_design
        np.testing.assert_array_equal(glob.q_i, ref_glob.q_i)
        np.testing.assert_array_equal(glob.k_i, ref_glob.k_i)
        np.testing.assert_array_equal(glob.slack, ref_glob.slack)
        np.testing.assert_array_equal(glob.p, ref_glob.p)
        self.assertEqual(glob.gamma_tilde, 0.37)
        self.assertEqual(glob.topology, ref_glob.topology)
        self.assertEqual((glob.mode, glob.tau), ("soft", 1e-7))

    def test_local_only(self):
        """ test a bundle without a global design """
        copy = bundle.read_bundle(bundle.write_bundle(synthetic_bundle(with_global=False)))
        self.assertIsNone(copy.global_design)

    def test_save_bundle(self):
        """ test save_bundle and load_bundle functions """
        original = synthetic_bundle()
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "design.bundle")
            bundle.save_bundle(original, path)
            copy = bundle.load_bundle(path)
        np.testing.assert_array_equal(copy.local.k0, original.local.k0)

    def test_format_check(self):
        """ test bundles of another format are refused """
        text = bundle.write_bundle(synthetic_bundle())
        self.assertIn("format = 1.0", text)
        for other in ("1.1", "2.0", "0.9", "new"):
            with self.assertRaises(bundle.BundleError) as ctx:
                bundle.read_bundle(text.replace("format = 1.0", f"format = {other}"))
            self.assertEqual(ctx.exception.field_name, "format")
        with self.assertRaises(bundle.BundleError):
            bundle.read_bundle(text.replace("[bundle]", "[bundel]"))

    def test_malformed(self):
        """ test malformed bundle values """
        text = bundle.write_bundle(synthetic_bundle())
        start = text.index("\nP = ") + len("\nP = ")
        broken = text[:start] + "1 2; 3" + text[text.index("\n", start):]
        with self.assertRaises(bundle.BundleError) as ctx:
            bundle.read_bundle(broken)
        self.assertEqual(ctx.exception.field_name, "P")
        self.assertIsInstance(ctx.exception, netspec.ParseError)

        with self.assertRaises(bundle.BundleError):
            bundle.read_bundle(text.replace("[design dg 3]", "[design dg 7]"))

    def test_parse_matrix(self):
        """ test format_matrix and parse_matrix functions """
        self.assertEqual(bundle.format_matrix([[1.0, 0.5], [2.0, 0.25]]), "1 0.5; 2 0.25")
        np.testing.assert_array_equal(bundle.parse_matrix("1 0.5; 2 0.1", 2, 2),
                                      [[1.0, 0.5], [2.0, 0.1]])
        self.assertEqual(bundle.parse_matrix("", 0, 0).shape, (0, 0))
        with self.assertRaises(ValueError):
            bundle.parse_matrix("1 2; 3 4", 3, 3)
        with self.assertRaises(ValueError):
            bundle.parse_matrix("1 2; 3")
