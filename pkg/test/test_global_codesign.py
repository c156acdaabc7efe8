"""
Tests for global_codesign.py

part of mgcodesign

"""

import types
import unittest

import numpy as np

from mgcodesign import equilibrium
from mgcodesign import global_codesign
from mgcodesign import lmi
from mgcodesign import local_synth
from mgcodesign import netspec

# python -m unittest discover in top-level package dir

# pylint: disable=too-many-public-methods


def fake_indices(n_dg, n_line, rng):
    """ Passivity indices with the signs the co-design needs """
    return types.SimpleNamespace(nu=-rng.uniform(0.1, 1.0, n_dg),
                                 rho=rng.uniform(0.1, 1.0, n_dg),
                                 nu_bar=-rng.uniform(0.1, 1.0, n_line),
                                 rho_bar=rng.uniform(0.1, 1.0, n_line))


class GlobalCodesignTestCase(unittest.TestCase):
    """
    Unit tests for global_codesign.py
    """

    @classmethod
    def setUpClass(cls):
        cls.spec = netspec.load_network(netspec.bundled("microgrid_4dg.ini"))
        selection = equilibrium.select_reference(cls.spec)
        cls.local = local_synth.solve_local(
            local_synth.assemble_local_problem(cls.spec, selection))
        cls.hard = global_codesign.solve_global(
            global_codesign.assemble_global_problem(cls.spec, cls.local))

    def test_w_matrix(self):
        """ test w_matrix against network_synthesis_matrix """
        rng = np.random.default_rng(2)
        spec = self.spec
        n3, n_line = 3 * spec.n_dg, spec.n_line
        n_z = n3 + n_line
        indices = fake_indices(spec.n_dg, n_line, rng)
        p = rng.uniform(0.5, 2.0, spec.n_dg)
        p_bar = rng.uniform(0.5, 2.0, n_line)
        q = global_codesign.expand_blocks(rng.standard_normal((spec.n_dg, spec.n_dg)))
        gamma_tilde = 3.0
        mat = global_codesign.w_matrix(spec, indices, p, p_bar, q, gamma_tilde)
        self.assertEqual(mat.shape, (4 * n_z, 4 * n_z))
        np.testing.assert_allclose(mat, mat.T, atol=1e-12)

        con = global_codesign.interconnection_blocks(spec)
        sup = global_codesign.supply_blocks(indices, p, p_bar)
        xp11, xbar_p11 = sup["xp11"], sup["xbar_p11"]
        l_blocks = {"uy": q, "uyb": xp11 @ con["c_bar"], "uw": xp11 @ con["e_c"],
                    "uby": xbar_p11 @ con["c"], "ubyb": np.zeros((n_line, n_line)),
                    "ubw": xbar_p11 @ con["e_bar_c"]}
        m_blocks = {"zy": con["h_c"], "zyb": con["h_bar_c"], "zw": np.zeros((n_z, n_z))}
        expected = lmi.network_synthesis_matrix(
            xp11, xbar_p11, sup["xp22"], sup["xbar_p22"], sup["x12"], sup["xbar12"],
            gamma_tilde * np.eye(n_z), np.zeros((n_z, n_z)), -np.eye(n_z),
            l_blocks, m_blocks)
        np.testing.assert_allclose(mat, expected, atol=1e-9)

    def test_interconnection_blocks(self):
        """ test interconnection_blocks function """
        con = global_codesign.interconnection_blocks(self.spec)
        self.assertEqual(con["c_bar"].shape, (12, 4))
        self.assertEqual(con["c"].shape, (4, 12))
        np.testing.assert_array_equal(con["c"][:, 0], netspec.incidence_of(self.spec)[0])
        self.assertAlmostEqual(con["c_bar"][0, 0], -1.0 / 2.2e-3)
        self.assertEqual(con["e_c"].shape, (12, 16))
        np.testing.assert_array_equal(con["h_bar_c"][12:], np.eye(4))

    def test_expand_blocks(self):
        """ test selector and expand_blocks functions """
        middle = np.arange(4.0).reshape(2, 2)
        full = global_codesign.expand_blocks(middle)
        self.assertEqual(full.shape, (6, 6))
        self.assertEqual(full[1, 4], 1.0)
        self.assertEqual(full[4, 4], 3.0)
        self.assertEqual(np.count_nonzero(full), 3)
        sel = global_codesign.selector(3)
        np.testing.assert_array_equal(sel.sum(axis=0), np.ones(3))

    def test_sparsify(self):
        """ test sparsify function """
        p_n = np.array([600.0, 500.0, 450.0])
        k_i = np.array([[-2.0, 1e-9, 1.5],
                        [0.8, -1.0, 0.3],
                        [-1e-10, 0.7, -0.9]])
        out = global_codesign.sparsify(k_i, p_n, 1e-6)
        self.assertEqual(out[0, 1], 0.0)
        self.assertEqual(out[2, 0], 0.0)
        self.assertEqual(out[0, 2], 1.5)
        np.testing.assert_allclose(out @ p_n, np.zeros(3), atol=1e-12)
        self.assertAlmostEqual(out[0, 0], -1.5 * 450.0 / 600.0)

    def test_extract_topology(self):
        """ test extract_topology and gains_from_q functions """
        spec = self.spec
        k_i = np.zeros((4, 4))
        k_i[1, 0] = -0.5
        k_i[1, 1] = 0.5 * 600.0 / 500.0
        topology = global_codesign.extract_topology(spec, k_i)
        self.assertEqual(len(topology), 1)
        src, dst, gain = topology.edges[0]
        self.assertEqual((src, dst), (0, 1))
        self.assertAlmostEqual(gain, 0.5 * 2.0e-3 * 600.0)
        self.assertEqual(topology.edge_set(), {(0, 1)})

        q_i = np.array([[2.0, -2.0], [-1.0, 1.0]])
        gains = global_codesign.gains_from_q(q_i, np.array([2.0, 1.0]), np.array([-0.5, -0.25]))
        np.testing.assert_allclose(gains, [[2.0, -2.0], [-4.0, 4.0]])

    def test_check_indices(self):
        """ test check_indices function """
        self.assertEqual(global_codesign.check_indices(self.local), [])
        bad = types.SimpleNamespace(nu=np.array([0.1, -0.1]), rho=np.array([1.0, -1.0]),
                                    nu_bar=np.array([0.0]), rho_bar=np.array([1.0]))
        self.assertEqual(len(global_codesign.check_indices(bad)), 3)
        with self.assertRaises(global_codesign.GlobalInfeasible):
            global_codesign.assemble_global_problem(self.spec, bad)

    def test_hard_mode(self):
        """ test solve_global in hard mode """
        design = self.hard
        adjacent = netspec.physical_adjacency(self.spec)
        for src, dst, _ in design.topology.edges:
            self.assertTrue(adjacent[dst, src])
        p_n = self.spec.param_vector("p_n")
        np.testing.assert_allclose(design.k_i @ p_n, np.zeros(4),
                                   atol=1e-9 * max(1.0, np.max(np.abs(design.k_i)) * 600.0))
        self.assertGreater(design.gamma_tilde, 0.0)
        self.assertLessEqual(design.gamma_tilde, netspec.DesignParams().gamma_bar * (1 + 1e-6))
        self.assertAlmostEqual(design.gamma, np.sqrt(design.gamma_tilde))
        self.assertTrue(np.all(design.p > 0))
        self.assertTrue(np.all(design.p_bar > 0))
        self.assertEqual(design.q.shape, (12, 12))
        self.assertEqual(design.slack.shape, (64, 64))
        self.assertEqual(design.mode, "hard")

    def test_default_design_optimal(self):
        """ test both stages reach optimal with the default parameters """
        self.assertEqual(self.local.status, lmi.OPTIMAL)
        self.assertEqual(self.hard.status, lmi.OPTIMAL)

    def test_sparsified_residual_margin(self):
        """ test the post-sparsification residual is measured against eps I """
        design = self.hard
        params = netspec.DesignParams()
        q_sparse = global_codesign.expand_blocks(
            design.k_i * (design.p * np.abs(self.local.nu))[:, None])
        mat = global_codesign.w_matrix(self.spec, self.local, design.p, design.p_bar,
                                       q_sparse, design.gamma_tilde) + design.slack
        self.assertAlmostEqual(design.residual, lmi.psd_residual(mat, params.eps), places=12)
        self.assertGreaterEqual(design.residual, lmi.psd_residual(mat))

    def test_topology_csv(self):
        """ test topology_csv function """
        lines = global_codesign.topology_csv(self.spec, self.hard).splitlines()
        self.assertEqual(lines[0], "from,to,k_ij")
        self.assertEqual(len(lines), 1 + len(self.hard.topology))

    def test_soft_mode(self):
        """ test solve_global in soft mode """
        params = netspec.DesignParams(mode="soft")
        design = global_codesign.solve_global(
            global_codesign.assemble_global_problem(self.spec, self.local, params))
        self.assertEqual(design.mode, "soft")
        p_n = self.spec.param_vector("p_n")
        np.testing.assert_allclose(design.k_i @ p_n, np.zeros(4),
                                   atol=1e-9 * max(1.0, np.max(np.abs(design.k_i)) * 600.0))
        cost = global_codesign.cost_matrix(self.spec, params)
        self.assertEqual(cost[0, 3], params.c_remote)
        self.assertEqual(cost[0, 1], params.c_adjacent)
        self.assertEqual(cost[2, 2], params.c_adjacent)

    def test_gamma_bar_infeasible(self):
        """ test GlobalInfeasible for an unreachable gain bound """
        params = netspec.DesignParams(gamma_bar=1e-9)
        problem = global_codesign.assemble_global_problem(self.spec, self.local, params)
        with self.assertRaises(global_codesign.GlobalInfeasible) as ctx:
            global_codesign.solve_global(problem)
        self.assertEqual(ctx.exception.stage, "global")
        self.assertIn("gamma_tilde", ctx.exception.diagnostic)
