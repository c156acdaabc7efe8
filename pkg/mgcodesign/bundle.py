'''
 bundle.py

Design bundle: one text file carrying everything needed to re-verify or
simulate a co-design without re-solving. The bundle embeds the network
(sections prefixed "network "), the reference selection, the design
settings, the local design and, when present, the global design.

Matrices are written row by row, entries separated by spaces and rows
by ';', with 17 significant digits.

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

import dataclasses
import logging
import re
from dataclasses import dataclass
from typing import Optional

import numpy as np
from packaging.version import parse, InvalidVersion

from . import equilibrium
from . import global_codesign
from . import lmi
from . import local_synth
from . import netspec
from . import sector
from . import text_utils

__version__ = "0.4.0"  # Dated 2024-11-02

logger = logging.getLogger(__name__)

BUNDLE_FORMAT = "1.0"
NETWORK_PREFIX = "network "
_PAIR_RE = re.compile(r"^pair\s+(\d+)-(\d+)$")


def version():  # Report version number for this document
    ''' Return version number '''
    return __version__


class BundleError(netspec.ParseError):
    ''' Unreadable, inconsistent or too-new bundle '''


@dataclass
class DesignBundle:
    ''' A solved design and the network it was solved for '''
    spec: netspec.NetworkSpec
    params: netspec.DesignParams
    selection: equilibrium.ReferenceSelection
    local: local_synth.LocalDesign
    global_design: Optional[global_codesign.GlobalDesign] = None


def format_matrix(matrix):
    ''' Rows separated by "; ", entries by spaces, exact digits '''
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if matrix.size == 0:
        return ""
    return "; ".join(" ".join(text_utils.format_exact(v) for v in row) for row in matrix)


def parse_matrix(text, rows=None, cols=None):
    ''' Inverse of format_matrix; optional shape check '''
    text = text.strip()
    if not text:
        out = np.zeros((rows or 0, cols or 0))
    else:
        data = [text_utils.parse_float_list(row) for row in text.split(";")]
        if len({len(row) for row in data}) != 1:
            raise ValueError("ragged matrix")
        out = np.array(data, dtype=float)
    if rows is not None and cols is not None and out.shape != (rows, cols):
        raise ValueError(f"expected a {rows} x {cols} matrix, got {out.shape[0]} x "
                         f"{out.shape[1]}")
    return out


def _vector(values):
    return " ".join(text_utils.format_exact(v) for v in np.ravel(values))


def _params_lines(params):
    out = []
    for item in dataclasses.fields(params):
        value = getattr(params, item.name)
        if value is None:
            continue
        if isinstance(value, str):
            out.append(f"{item.name} = {value}")
        else:
            out.append(f"{item.name} = {text_utils.format_exact(value)}")
    return out


def write_bundle(design):
    ''' Serialize a DesignBundle to text '''
    fmt = text_utils.format_exact
    spec, local, sel = design.spec, design.local, design.selection
    out = ["[bundle]", f"format = {BUNDLE_FORMAT}", f"created_by = mgcodesign {__version__}", ""]

    for raw in netspec.serialize(spec).splitlines():
        if raw.startswith("["):
            out.append("[" + NETWORK_PREFIX + raw[1:])
        else:
            out.append(raw)
    out.append("")

    out.extend(["[params]", *_params_lines(design.params), ""])
    out.extend(["[selection]", f"v_r = {_vector(sel.v_r)}", f"i_s = {fmt(sel.i_s)}",
                f"objective = {fmt(sel.objective)}", f"feasible = {int(bool(sel.feasible))}",
                f"iterations = {sel.iterations}", f"residual = {fmt(sel.residual)}", ""])

    out.extend(["[local]", f"structure = {local.structure}", f"status = {local.status}",
                f"objective = {fmt(local.objective)}", ""])
    for dg in spec.dgs:
        i = dg.index
        cert = local.certificates[i]
        out.extend([f"[design dg {i + 1}]",
                    f"k0 = {_vector(local.k0[i])}",
                    f"nu = {fmt(cert.nu)}",
                    f"rho = {fmt(cert.rho)}",
                    f"P = {format_matrix(cert.P)}",
                    f"R = {format_matrix(local.r_matrix[i])}",
                    f"gamma_tilde = {fmt(local.gamma_tilde[i])}",
                    f"lambda_tilde = {fmt(local.lambda_tilde[i])}",
                    f"alpha = {fmt(local.bounds[i].alpha)}",
                    f"beta = {fmt(local.bounds[i].beta)}",
                    f"p = {fmt(local.p[i])}",
                    f"residual = {fmt(cert.residual)}", ""])
    for line in spec.lines:
        k = line.index
        cert = local.line_certificates[k]
        out.extend([f"[design line {k + 1}]", f"nu_bar = {fmt(cert.nu)}",
                    f"rho_bar = {fmt(cert.rho)}", f"storage = {fmt(cert.P[0, 0])}",
                    f"p_bar = {fmt(local.p_bar[k])}", ""])
    for (i, l_index) in sorted(local.xi):
        key = (i, l_index)
        out.extend([f"[pair {i + 1}-{l_index + 1}]", f"xi = {fmt(local.xi[key])}",
                    f"s_1 = {fmt(local.s_1[key])}", f"s_2 = {fmt(local.s_2[key])}", ""])

    glob = design.global_design
    if glob is not None:
        out.extend(["[global]", f"mode = {glob.mode}", f"status = {glob.status}",
                    f"gamma_tilde = {fmt(glob.gamma_tilde)}",
                    f"objective = {fmt(glob.objective)}", f"residual = {fmt(glob.residual)}",
                    f"tau = {fmt(glob.tau)}", f"p = {_vector(glob.p)}",
                    f"p_bar = {_vector(glob.p_bar)}", f"Q_I = {format_matrix(glob.q_i)}",
                    f"K_I = {format_matrix(glob.k_i)}", f"S = {format_matrix(glob.slack)}",
                    ""])
    return "\n".join(out)


def save_bundle(design, path):
    ''' Write a bundle file '''
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(write_bundle(design))
    logger.debug("Wrote design bundle %s", path)


class _Reader:
    ''' Typed access to one bundle document with located errors '''

    def __init__(self, parser, lines):
        self.parser = parser
        self.lines = lines

    def number(self, section, key):
        return netspec.read_number(self.parser, self.lines, section, key)

    def text(self, section, key):
        if not self.parser.has_option(section, key):
            raise BundleError(f"missing in [{section}]",
                              line=netspec.locate(self.lines, section), field_name=key)
        return self.parser.get(section, key).strip()

    def matrix(self, section, key, rows=None, cols=None):
        try:
            return parse_matrix(self.text(section, key), rows, cols)
        except ValueError as err:
            raise BundleError(str(err), line=netspec.locate(self.lines, section, key),
                              field_name=key) from err

    def vector(self, section, key, size):
        values = self.matrix(section, key)
        flat = np.ravel(values)
        if flat.size != size:
            raise BundleError(f"expected {size} values",
                              line=netspec.locate(self.lines, section, key), field_name=key)
        return flat


def _check_format(reader):
    if not reader.parser.has_section("bundle"):
        raise BundleError("missing [bundle] section")
    raw = reader.text("bundle", "format")
    try:
        found = parse(raw)
    except InvalidVersion as err:
        raise BundleError(f"unreadable format {raw!r}", field_name="format") from err
    supported = parse(BUNDLE_FORMAT)
    if found.major != supported.major or found > supported:
        raise BundleError(f"bundle format {raw} is newer than supported {BUNDLE_FORMAT}",
                          field_name="format")


def _network_text(parser):
    out = []
    for section in parser.sections():
        if not section.startswith(NETWORK_PREFIX):
            continue
        out.append(f"[{section[len(NETWORK_PREFIX):]}]")
        out.extend(f"{key} = {value}" for key, value in parser.items(section))
        out.append("")
    return "\n".join(out)


def _read_local(reader, spec, selection, integrator_scale):
    parser = reader.parser
    structure = reader.text("local", "structure")
    k0_rows, certs, r_matrix, r_tilde, bounds = [], [], [], [], []
    gammas, lams, p_dg = [], [], []
    for dg in spec.dgs:
        section = f"design dg {dg.index + 1}"
        if not parser.has_section(section):
            raise BundleError(f"missing [{section}] section")
        k0_rows.append(reader.vector(section, "k0", 3))
        P = reader.matrix(section, "P", 3, 3)
        R = reader.matrix(section, "R", 3, 3)
        certs.append(lmi.PassivityCertificate(reader.number(section, "nu"),
                                              reader.number(section, "rho"), P, "dg",
                                              reader.number(section, "residual")))
        r_matrix.append(R)
        r_tilde.append(lmi.sym(np.linalg.inv(R)))
        gammas.append(reader.number(section, "gamma_tilde"))
        lams.append(reader.number(section, "lambda_tilde"))
        p_dg.append(reader.number(section, "p"))
        bounds.append(sector.SectorBound(reader.number(section, "alpha"),
                                         reader.number(section, "beta"), spec.v_min,
                                         spec.v_max, float(selection.v_r[dg.index])))
    line_certs, p_line = [], []
    for line in spec.lines:
        section = f"design line {line.index + 1}"
        if not parser.has_section(section):
            raise BundleError(f"missing [{section}] section")
        line_certs.append(lmi.PassivityCertificate(
            reader.number(section, "nu_bar"), reader.number(section, "rho_bar"),
            np.array([[reader.number(section, "storage")]]), "line"))
        p_line.append(reader.number(section, "p_bar"))
    xi, s_1, s_2 = {}, {}, {}
    for section in parser.sections():
        match = _PAIR_RE.match(section)
        if match:
            key = (int(match.group(1)) - 1, int(match.group(2)) - 1)
            xi[key] = reader.number(section, "xi")
            s_1[key] = reader.number(section, "s_1")
            s_2[key] = reader.number(section, "s_2")
    return local_synth.LocalDesign(np.array(k0_rows), certs, line_certs, np.array(gammas),
                                   np.array(lams), r_tilde, r_matrix, xi, s_1, s_2,
                                   np.array(p_dg), np.array(p_line), bounds, structure,
                                   reader.number("local", "objective"),
                                   reader.text("local", "status"),
                                   integrator_scale=integrator_scale)


def _read_global(reader, spec):
    n_dg, n_line = spec.n_dg, spec.n_line
    dim = 4 * (3 * n_dg + n_line)
    k_i = reader.matrix("global", "K_I", n_dg, n_dg)
    return global_codesign.GlobalDesign(
        reader.matrix("global", "Q_I", n_dg, n_dg), k_i,
        reader.number("global", "gamma_tilde"),
        global_codesign.extract_topology(spec, k_i),
        reader.matrix("global", "S", dim, dim),
        reader.vector("global", "p", n_dg), reader.vector("global", "p_bar", n_line),
        reader.text("global", "mode"), reader.number("global", "objective"),
        reader.text("global", "status"), reader.number("global", "residual"),
        reader.number("global", "tau"))


def read_bundle(text, source="<bundle>"):
    '''
    Parse a bundle document. Raise BundleError (a netspec.ParseError)
    for malformed or too-new bundles; network problems raise the usual
    netspec errors.
    '''
    parser, lines = netspec.read_document(text, source)
    reader = _Reader(parser, lines)
    _check_format(reader)
    spec = netspec.parse_network(_network_text(parser), source=f"{source} (network)")

    params = netspec.DesignParams().with_overrides(
        [(key, value) for key, value in parser.items("params")]
        if parser.has_section("params") else [])

    selection = equilibrium.ReferenceSelection(
        reader.vector("selection", "v_r", spec.n_dg), reader.number("selection", "i_s"),
        reader.number("selection", "objective"),
        bool(reader.number("selection", "feasible")),
        int(reader.number("selection", "iterations")), reader.number("selection", "residual"))
    local = _read_local(reader, spec, selection, params.integrator_scale)
    glob = _read_global(reader, spec) if parser.has_section("global") else None
    logger.debug("Read bundle %s (%s)", source,
                 "local and global" if glob is not None else "local only")
    return DesignBundle(spec, params, selection, local, glob)


def load_bundle(path):
    ''' Read and parse a bundle file '''
    with open(path, encoding="utf-8") as handle:
        return read_bundle(handle.read(), source=path)
