'''
 cli.py

Command-line workflow for mgcodesign:

    mgcodesign design   --network net.ini --out results/
    mgcodesign simulate --bundle results/design.bundle --scenario steps.ini --out results/
    mgcodesign verify   --bundle results/design.bundle
    mgcodesign compare-droop --bundle results/design.bundle --out results/

Exit codes: 0 ok, 2 input error, 3 infeasible or failed verification,
4 numerical failure or divergence.

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

import argparse
import dataclasses
import logging
import os
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import bundle
from . import equilibrium
from . import global_codesign
from . import lmi
from . import local_synth
from . import netspec
from . import scenario
from . import sector
from . import simulator
from . import text_utils

__version__ = "0.4.0"  # Dated 2024-11-02

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERICAL = 4

DEFAULT_NETWORK = "microgrid_4dg.ini"
DEFAULT_SCENARIO = "scenario_steps.ini"


def version():  # Report version number for this document
    ''' Return version number '''
    return __version__


@dataclass
class RunConfig:
    ''' Resolved command-line settings '''
    command: str
    network: Optional[str] = None
    scenario: Optional[str] = None
    bundle: Optional[str] = None
    out: str = "."
    seed: int = 0
    mode: Optional[str] = None
    gamma_bar: Optional[float] = None
    dt: Optional[float] = None
    dump_lmi: bool = False
    droop: bool = False
    l2_members: int = 0

    @classmethod
    def from_args(cls, args):
        ''' Build from an argparse namespace '''
        names = {item.name for item in dataclasses.fields(cls)}
        return cls(**{key: value for key, value in vars(args).items() if key in names})

    def network_path(self):
        ''' Given network file or the bundled example '''
        return self.network or netspec.bundled(DEFAULT_NETWORK)

    def scenario_path(self):
        ''' Given scenario file or the bundled step scenario '''
        return self.scenario or netspec.bundled(DEFAULT_SCENARIO)

    def output(self, name):
        ''' Path of one artifact inside the output directory '''
        return os.path.join(self.out, name)


def _write(path, text):
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text)
    logger.info("Wrote %s", path)


def design_params(spec, config):
    ''' DesignParams from the network's [design] section and the flags '''
    params = netspec.DesignParams().with_overrides(spec.design)
    updates = {}
    if config.mode is not None:
        updates["mode"] = config.mode
    if config.gamma_bar is not None:
        updates["gamma_bar"] = float(config.gamma_bar)
    params = dataclasses.replace(params, **updates)
    problems = params.check()
    if problems:
        raise netspec.ValidationError(problems)
    return params


def equilibrium_report(spec, selection, point):
    ''' Text report of the operating point and the per-DG design data '''
    fmt = text_utils.format_short
    u_s = equilibrium.steady_state_inputs(spec, selection)
    out = [f"I_s = {fmt(selection.i_s)}",
           f"objective = {fmt(selection.objective)}",
           f"iterations = {selection.iterations}",
           f"residual = {fmt(equilibrium.residuals(spec, point))}",
           f"sharing_dispersion = {fmt(point.sharing_dispersion(spec))}",
           "",
           "dg,V_r,I_t,u_S,alpha,beta"]
    for dg, load, v_r, i_t, u in zip(spec.dgs, spec.loads, selection.v_r, point.i_te, u_s):
        bound = sector.sector_bounds(dg, load, v_r, spec.v_min, spec.v_max)
        out.append(text_utils.csv_line([str(dg.index + 1), v_r, i_t, u, bound.alpha,
                                        bound.beta]))
    return "\n".join(out) + "\n"


def cmd_design(config):
    '''
    Reference selection, local synthesis and global co-design. Writes
    equilibrium.txt, local_design.csv, topology.csv, gamma.txt and
    design.bundle into the output directory.
    '''
    spec = netspec.load_network(config.network_path())
    params = design_params(spec, config)
    os.makedirs(config.out, exist_ok=True)

    selection = equilibrium.select_reference(spec, solver=params.solver)
    if not selection.feasible:
        logger.error("equilibrium: no admissible reference within the voltage band")
        return EXIT_INFEASIBLE
    point = equilibrium.equilibrium_from_reference(spec, selection.v_r, selection.i_s)
    _write(config.output("equilibrium.txt"), equilibrium_report(spec, selection, point))

    local_problem = local_synth.assemble_local_problem(spec, selection, params=params)
    if config.dump_lmi:
        _write(config.output("local.lmi"), lmi.dump_problem(local_problem))
    local = local_synth.solve_local(local_problem)
    _write(config.output("local_design.csv"), local_synth.design_csv(spec, local))

    global_problem = global_codesign.assemble_global_problem(spec, local, params)
    if config.dump_lmi:
        _write(config.output("global.lmi"), lmi.dump_problem(global_problem))
    glob = global_codesign.solve_global(global_problem)
    _write(config.output("topology.csv"), global_codesign.topology_csv(spec, glob))
    _write(config.output("gamma.txt"),
           f"gamma = {text_utils.format_exact(glob.gamma)}\n"
           f"gamma_tilde = {text_utils.format_exact(glob.gamma_tilde)}\n"
           f"links = {len(glob.topology)}\n")
    bundle.save_bundle(bundle.DesignBundle(spec, params, selection, local, glob),
                       config.output("design.bundle"))
    print(f"gamma = {text_utils.format_short(glob.gamma)}, "
          f"{len(glob.topology)} communication links")
    return EXIT_OK


def _load_design(config):
    if not config.bundle:
        raise netspec.ParseError("a design bundle is required (--bundle)")
    return bundle.load_bundle(config.bundle)


def _scenario(config, spec):
    scen = scenario.load_scenario(config.scenario_path(), n_dg=spec.n_dg)
    dist = scen.disturbance
    if dist is not None:
        dist = dataclasses.replace(dist, seed=dist.seed + config.seed)
    return scen.with_overrides(dt=config.dt, disturbance=dist)


def _simulate_one(label, spec, law, scen, config):
    trace = simulator.integrate(spec, law, scen)
    report = simulator.metrics(trace)
    prefix = "" if label == "dissipativity" else f"{label}_"
    _write(config.output(f"{prefix}trace.csv"), trace.to_csv())
    _write(config.output(f"{prefix}metrics.csv"), report.to_csv())
    return trace, report


def cmd_simulate(config):
    '''
    Simulate the bundled design over a scenario. Writes trace.csv,
    metrics.csv and summary.txt; with droop also droop_trace.csv,
    droop_metrics.csv and comparison.csv.
    '''
    design = _load_design(config)
    spec = design.spec
    scen = _scenario(config, spec)
    os.makedirs(config.out, exist_ok=True)

    law = simulator.ControlLaw.from_designs(design.selection, design.local,
                                            design.global_design)
    trace, report = _simulate_one("dissipativity", spec, law, scen, config)
    criteria = simulator.acceptance_summary(report)
    text = simulator.summary_text(criteria)

    audit = simulator.dissipation_audit(trace, law, design.local)
    text += f"audit_excess = {text_utils.format_short(audit.worst)}\n"
    if design.global_design is not None:
        storage, rate = simulator.storage_profile(trace, law, design.local,
                                                  design.global_design)
        text += f"storage_rate_max = {text_utils.format_short(float(np.max(rate)))}\n"
        logger.debug("Storage from %.6g to %.6g", storage[0], storage[-1])
        if config.l2_members > 0:
            dist = scen.disturbance or scenario.DisturbanceSpec(0.1, 0.1, 0.0, 0.1)
            worst = simulator.empirical_l2_gain(spec, law, dataclasses.replace(
                dist, seed=dist.seed + config.seed), members=config.l2_members, dt=scen.dt)
            text += (f"l2_ratio_max = {text_utils.format_short(worst)} "
                     f"(certified {text_utils.format_short(design.global_design.gamma)})\n")

    if config.droop:
        droop = simulator.DroopConfig.default(spec, design.selection.v_r)
        _, droop_report = _simulate_one("droop", spec, droop, scen, config)
        _write(config.output("comparison.csv"), simulator.comparison_csv(
            {"dissipativity": report, "droop": droop_report}))

    _write(config.output("summary.txt"), text)
    print(text, end="")
    if not all(item.passed for item in criteria):
        logger.warning("Acceptance criteria not met; see summary.txt")
    return EXIT_OK


def cmd_compare_droop(config):
    ''' simulate with the droop baseline alongside '''
    return cmd_simulate(dataclasses.replace(config, droop=True))


@dataclass
class CheckResult:
    ''' One verification line '''
    name: str
    residual: float
    passed: bool


def verify_design(design, tol=None):
    '''
    Re-check a bundle without re-solving: each DG certificate and sector
    condition, sector sampling, the Laplacian property of K_I, the
    consistency of K_I with Q_I, and W + S with the stored gamma_tilde.
    Return a list of CheckResult.
    '''
    spec, local, glob = design.spec, design.local, design.global_design
    tol = design.params.tol_psd if tol is None else tol
    results = []
    for dg, load in zip(spec.dgs, spec.loads):
        i = dg.index
        cert = local.certificates[i]
        a_hat = local.closed_loop(spec, i)
        res = lmi.psd_residual(local_synth.certificate_matrix(
            cert.P, a_hat, local.r_matrix[i], cert.nu, cert.rho))
        results.append(CheckResult(f"dg{i + 1}:certificate", res, res <= tol))
        res = lmi.psd_residual(local_synth.sector_condition_matrix(
            cert.P, local.r_matrix[i], local.lambda_tilde[i], local.bounds[i]))
        results.append(CheckResult(f"dg{i + 1}:sector_condition", res, res <= tol))
        fresh = sector.sector_bounds(dg, load, design.selection.v_r[i], spec.v_min, spec.v_max)
        count = sector.sample_violations(dg, load, fresh)
        results.append(CheckResult(f"dg{i + 1}:sector_sampling", float(count), count == 0))
        excess = local_synth.verify_dissipation_bound(dg, load, local.k0[i], cert,
                                                      local.bounds[i],
                                                      integrator_scale=local.integrator_scale)
        limit = 1e-6 * max(1.0, np.linalg.norm(cert.P, 2) * np.linalg.norm(a_hat, 2))
        results.append(CheckResult(f"dg{i + 1}:dissipation_sampling", excess, excess <= limit))
    for line in spec.lines:
        cert = local.line_certificates[line.index]
        mat = local_synth.line_lmi(cert.P[0, 0] / line.l, cert.rho, cert.nu, line.r)
        res = lmi.psd_residual(mat)
        results.append(CheckResult(f"line{line.index + 1}:certificate", res, res <= tol))
    if glob is None:
        return results

    p_n = spec.param_vector("p_n")
    scale = max(1.0, float(np.max(np.abs(glob.k_i))) * float(np.max(p_n)))
    res = float(np.max(np.abs(glob.k_i @ p_n))) / scale
    results.append(CheckResult("laplacian", res, res <= 1e-9))
    expected = global_codesign.sparsify(global_codesign.gains_from_q(glob.q_i, glob.p, local.nu),
                                        p_n, glob.tau)
    res = float(np.max(np.abs(glob.k_i - expected))) / max(1.0, float(np.max(np.abs(expected))))
    results.append(CheckResult("gain_consistency", res, res <= 1e-9))
    q_applied = global_codesign.expand_blocks(glob.k_i * (glob.p * np.abs(local.nu))[:, None])
    w_mat = global_codesign.w_matrix(spec, local, glob.p, glob.p_bar, q_applied,
                                     glob.gamma_tilde)
    res = lmi.psd_residual(w_mat + glob.slack)
    results.append(CheckResult("network_dissipativity", res, res <= tol))
    return results


def cmd_verify(config):
    ''' Run verify_design on a bundle and print one line per check '''
    design = _load_design(config)
    results = verify_design(design)
    for item in results:
        verdict = "PASS" if item.passed else "FAIL"
        print(f"{verdict} {item.name}: {text_utils.format_short(item.residual)}")
    failed = [item.name for item in results if not item.passed]
    if failed:
        logger.error("verify: %d of %d checks failed (%s)", len(failed), len(results),
                     ", ".join(failed))
        return EXIT_INFEASIBLE
    return EXIT_OK


COMMANDS = {
    "design": cmd_design,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "compare-droop": cmd_compare_droop,
}


def build_parser():
    ''' argparse parser with one subcommand per workflow stage '''
    parser = argparse.ArgumentParser(
        prog="mgcodesign",
        description="Dissipativity-based controller and topology co-design for DC microgrids")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(cmd):
        cmd.add_argument("--out", default=".", help="output directory")
        cmd.add_argument("--seed", type=int, default=0, help="disturbance seed offset")

    design = sub.add_parser("design", help="solve the co-design and write a bundle")
    design.add_argument("--network", help="network file (default: bundled 4-DG example)")
    design.add_argument("--mode", choices=("hard", "soft"), help="communication graph mode")
    design.add_argument("--gamma-bar", type=float, help="upper bound on gamma_tilde")
    design.add_argument("--dump-lmi", action="store_true", help="write LMI triplet dumps")
    common(design)

    for name, help_text in (("simulate", "simulate a design bundle over a scenario"),
                            ("compare-droop", "simulate a bundle and the droop baseline")):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--bundle", help="design bundle written by design")
        cmd.add_argument("--scenario", help="scenario file (default: bundled step scenario)")
        cmd.add_argument("--dt", type=float, help="integration step, s")
        cmd.add_argument("--l2-members", type=int, default=0,
                         help="disturbance ensemble size for the empirical L2 gain")
        if name == "simulate":
            cmd.add_argument("--droop", action="store_true", help="also run the droop baseline")
        common(cmd)

    verify = sub.add_parser("verify", help="re-check every certificate in a bundle")
    verify.add_argument("--bundle", help="design bundle written by design")
    return parser


def run(config):
    '''
    Dispatch one command, mapping failures to exit codes. The first error
    is reported with the stage it came from.
    '''
    try:
        return COMMANDS[config.command](config)
    except (local_synth.LocalInfeasible, global_codesign.GlobalInfeasible) as err:
        logger.error("%s", err)
        return EXIT_INFEASIBLE
    except (lmi.SolverError, simulator.SimulationDiverged, equilibrium.EquilibriumError) as err:
        logger.error("%s: %s", config.command, err)
        logger.info("Error context:", exc_info=err)
        return EXIT_NUMERICAL
    except (netspec.NetworkError, OSError, ValueError) as err:
        logger.error("%s: input error: %s", config.command, err)
        logger.info("Error context:", exc_info=err)
        return EXIT_INPUT


def main(argv=None):
    ''' Console entry point '''
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(message)s")
    return run(RunConfig.from_args(args))


if __name__ == "__main__":
    sys.exit(main())
