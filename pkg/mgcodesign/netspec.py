'''
 netspec.py

Microgrid network description: data model, validation, file parsing
and serialization.

Part of mgcodesign, dissipativity-based co-design tools for DC microgrids

A network file is an INI-like document:

    [bounds]
    v_min = 45
    v_max = 51

    [dg 1]
    r_t = 0.2        # Ohm
    l_t = 1.8e-3     # H
    c_t = 2.2e-3     # F
    p_n = 500        # W
    y_l = 0.05       # S
    i_bar = 5        # A
    p_l = 50         # W

    [line 1]
    r = 0.1
    l = 1e-4
    from = 1
    to = 2

Indices are 1-based in files and reports, 0-based in memory. An optional
[design] section carries DesignParams overrides.

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

import configparser
import dataclasses
import logging
import os
import re
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import text_utils

__version__ = "0.4.0"  # Dated 2024-11-02

logger = logging.getLogger(__name__)

DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data")

_SECTION_RE = re.compile(r"^(dg|line)\s+(\d+)$")
_DG_KEYS = ("r_t", "l_t", "c_t", "p_n")
_LOAD_KEYS = ("y_l", "i_bar", "p_l")
_LINE_KEYS = ("r", "l", "from", "to")


def version():  # Report version number for this document
    ''' Return version number '''
    return __version__


class NetworkError(ValueError):
    ''' Base class for network description errors '''


class ParseError(NetworkError):
    ''' Malformed network or scenario document '''

    def __init__(self, message, line=None, field_name=None):
        self.line = line
        self.field_name = field_name
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field_name is not None:
            where.append(f"field '{field_name}'")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)


class ValidationError(NetworkError):
    ''' Well-formed document describing an invalid network '''

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class DGParams:
    ''' Converter (distributed generator) electrical parameters '''
    index: int
    r_t: float      # Internal resistance, Ohm
    l_t: float      # Internal inductance, H
    c_t: float      # Filter capacitance, F
    p_n: float      # Power rating, W


@dataclass(frozen=True)
class LineParams:
    ''' RL transmission line between two PCCs '''
    index: int
    r: float
    l: float
    from_dg: int
    to_dg: int


@dataclass(frozen=True)
class ZipLoad:
    ''' Constant impedance, current and power load at one PCC '''
    y_l: float = 0.0
    i_bar: float = 0.0
    p_l: float = 0.0


@dataclass(frozen=True)
class NetworkSpec:
    ''' Full microgrid description. Values are immutable after construction. '''
    dgs: Tuple[DGParams, ...]
    lines: Tuple[LineParams, ...]
    loads: Tuple[ZipLoad, ...]
    v_min: float
    v_max: float
    design: Tuple[Tuple[str, str], ...] = ()   # Raw [design] overrides, sorted

    @property
    def n_dg(self):
        ''' Number of DGs '''
        return len(self.dgs)

    @property
    def n_line(self):
        ''' Number of lines '''
        return len(self.lines)

    def lines_at(self, dg_index):
        ''' Indices of the lines touching DG dg_index '''
        return [line.index for line in self.lines
                if dg_index in (line.from_dg, line.to_dg)]

    def param_vector(self, name):
        ''' Per-DG vector of a DG or load attribute, e.g. "c_t" or "p_l" '''
        if name in _DG_KEYS:
            return np.array([getattr(dg, name) for dg in self.dgs], dtype=float)
        return np.array([getattr(load, name) for load in self.loads], dtype=float)

    def with_load(self, dg_index, field_name, value):
        ''' Return a copy with one load attribute of one DG replaced '''
        loads = list(self.loads)
        loads[dg_index] = dataclasses.replace(loads[dg_index], **{field_name: float(value)})
        return dataclasses.replace(self, loads=tuple(loads))


@dataclass(frozen=True)
class CommTopology:
    '''
    Directed communication graph. Each edge (j, i, k_ij) means DG i
    receives the per-unit current of DG j with consensus gain k_ij.
    '''
    edges: Tuple[Tuple[int, int, float], ...] = ()

    def edge_set(self):
        ''' Set of (j, i) pairs, without gains '''
        return {(src, dst) for src, dst, _ in self.edges}

    def __len__(self):
        return len(self.edges)


@dataclass(frozen=True)
class DesignParams:
    '''
    Co-design settings. Defaults are the values the bundled examples use.
    p_dg / p_line of None select the storage-scaled multipliers
    p_i = storage_scale * C_ti and p_l = storage_scale.
    integrator_scale multiplies the voltage error feeding each integrator.
    '''
    eps: float = 1e-6
    tol_psd: float = 1e-7
    storage_scale: float = 5000.0
    integrator_scale: float = 20.0
    p_dg: Optional[float] = None
    p_line: Optional[float] = None
    local_gamma_bar: float = 1e6
    gamma_bar: float = 1e6
    alpha_lambda: float = 1.0
    alpha_gamma: float = 1e-3
    nu_margin: float = 1e-4
    nu_bar_margin: float = 1e-6
    structure: str = "full"         # "full" or "strict"
    mode: str = "hard"              # "hard" or "soft"
    c_adjacent: float = 1.0
    c_remote: float = 5.0
    c_1: float = 1.0
    alpha_slack: float = 1e-3
    eta: float = 1e-2
    tau_factor: float = 1e-6
    solver: Optional[str] = None

    def multipliers(self, spec):
        ''' Return the (p, p_bar) vectors used by local synthesis '''
        if self.p_dg is None:
            p_dg = self.storage_scale * spec.param_vector("c_t")
        else:
            p_dg = np.full(spec.n_dg, float(self.p_dg))
        if self.p_line is None:
            p_line = np.full(spec.n_line, float(self.storage_scale))
        else:
            p_line = np.full(spec.n_line, float(self.p_line))
        return p_dg, p_line

    def with_overrides(self, pairs):
        '''
        Return a copy with string-valued overrides applied, as read from a
        [design] section. Unknown keys raise ParseError.
        '''
        known = {item.name: item for item in dataclasses.fields(self)}
        updates = {}
        for key, raw in pairs:
            if key not in known:
                raise ParseError("unknown design parameter", field_name=key)
            if key in ("structure", "mode", "solver"):
                updates[key] = raw.strip()
            elif raw.strip().lower() == "none":
                updates[key] = None
            else:
                try:
                    updates[key] = float(raw)
                except ValueError as err:
                    raise ParseError(f"not a number: {raw!r}", field_name=key) from err
        return dataclasses.replace(self, **updates)

    def check(self):
        ''' Return a list of human-readable problems with these settings '''
        problems = []
        if self.structure not in ("full", "strict"):
            problems.append(f"structure must be full or strict, not {self.structure}")
        if self.mode not in ("hard", "soft"):
            problems.append(f"mode must be hard or soft, not {self.mode}")
        if self.eps <= 0 or self.tol_psd <= 0:
            problems.append("eps and tol_psd must be > 0")
        if self.p_dg is not None and self.p_dg <= 0:
            problems.append("p_dg must be > 0")
        if self.p_line is not None and self.p_line <= 0:
            problems.append("p_line must be > 0")
        if self.storage_scale <= 0 or self.integrator_scale <= 0:
            problems.append("storage_scale and integrator_scale must be > 0")
        if self.alpha_slack < 0 or self.eta < 0:
            problems.append("alpha_slack and eta must be >= 0")
        return problems


def incidence_of(spec):
    '''
    Signed N x L incidence matrix: +1 where line l leaves DG i,
    -1 where it enters, 0 otherwise.
    '''
    incidence = np.zeros((spec.n_dg, spec.n_line))
    for line in spec.lines:
        incidence[line.from_dg, line.index] += 1.0
        incidence[line.to_dg, line.index] -= 1.0
    return incidence


def physical_adjacency(spec):
    ''' Boolean N x N matrix, True where two distinct DGs share a line '''
    adjacent = np.zeros((spec.n_dg, spec.n_dg), dtype=bool)
    for line in spec.lines:
        adjacent[line.from_dg, line.to_dg] = True
        adjacent[line.to_dg, line.from_dg] = True
    return adjacent


def validate(spec):
    '''
    Check every NetworkSpec invariant.
    Return a list of violation strings; an empty list means the spec is valid.
    '''
    violations = []
    if spec.n_dg == 0:
        violations.append("network has no dg sections")
    if len(spec.loads) != spec.n_dg:
        violations.append("exactly one load per dg is required")
    for dg in spec.dgs:
        tag = f"dg {dg.index + 1}"
        for name, value in (("R_t", dg.r_t), ("L_t", dg.l_t),
                            ("C_t", dg.c_t), ("P_n", dg.p_n)):
            if not value > 0:
                violations.append(f"{tag}: {name} must be > 0")
    for k, load in enumerate(spec.loads):
        tag = f"dg {k + 1}"
        for name, value in (("Y_L", load.y_l), ("I_bar", load.i_bar), ("P_L", load.p_l)):
            if not value >= 0:
                violations.append(f"{tag}: {name} must be >= 0")
    endpoints_ok = True
    for line in spec.lines:
        tag = f"line {line.index + 1}"
        if not line.r > 0:
            violations.append(f"{tag}: R must be > 0")
        if not line.l > 0:
            violations.append(f"{tag}: L must be > 0")
        if not (0 <= line.from_dg < spec.n_dg and 0 <= line.to_dg < spec.n_dg):
            violations.append(f"{tag}: unknown endpoint")
            endpoints_ok = False
        elif line.from_dg == line.to_dg:
            violations.append(f"{tag}: from and to must differ")
    if not 0 < spec.v_min < spec.v_max:
        violations.append("bounds: 0 < V_min < V_max required")
    if endpoints_ok and spec.n_dg > 1:
        rows = [line.from_dg for line in spec.lines]
        cols = [line.to_dg for line in spec.lines]
        graph = csr_matrix((np.ones(len(rows)), (rows, cols)),
                           shape=(spec.n_dg, spec.n_dg))
        n_components, _ = connected_components(graph, directed=False)
        if n_components > 1:
            violations.append("graph not connected")
    return violations


def _config_parser():
    parser = configparser.ConfigParser(
        comment_prefixes=("#",), inline_comment_prefixes=("#",),
        interpolation=None, strict=True, default_section="__defaults__")
    parser.optionxform = str
    return parser


def read_document(text, source="<network>"):
    '''
    Read an INI-like document with configparser, translating its syntax
    errors into ParseError with a line number.
    Return (parser, list of text lines).
    '''
    parser = _config_parser()
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as err:
        raise ParseError("content before first section header", line=err.lineno) from err
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as err:
        raise ParseError(err.message.split(":")[-1].strip(), line=err.lineno) from err
    except configparser.ParsingError as err:
        lineno = err.errors[0][0] if err.errors else None
        raise ParseError("malformed line", line=lineno) from err
    return parser, text.splitlines()


def locate(lines, section, key=None):
    ''' Return the 1-based line number of a section header or of a key inside it '''
    in_section = False
    for number, raw in enumerate(lines, start=1):
        stripped = raw.split("#", 1)[0].strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            if in_section and key is not None:
                return None
            in_section = stripped[1:-1].strip() == section
            if in_section and key is None:
                return number
            continue
        if in_section and key is not None:
            name = re.split(r"[=:]", stripped, maxsplit=1)[0].strip()
            if name == key:
                return number
    return None


def read_number(parser, lines, section, key, default=None):
    ''' Fetch one float option, raising ParseError with its location '''
    if not parser.has_option(section, key):
        if default is not None:
            return default
        raise ParseError(f"missing in [{section}]", line=locate(lines, section),
                         field_name=key)
    raw = parser.get(section, key)
    try:
        return float(raw)
    except ValueError as err:
        raise ParseError(f"not a number: {raw!r}", line=locate(lines, section, key),
                         field_name=key) from err


def _check_keys(parser, lines, section, allowed):
    for key in parser.options(section):
        if key not in allowed:
            raise ParseError(f"unknown key in [{section}]",
                             line=locate(lines, section, key), field_name=key)


def parse_network(text, source="<network>"):
    '''
    Parse a network document into a validated NetworkSpec.
    Raise ParseError for malformed documents, ValidationError for
    documents that describe an invalid network.
    '''
    parser, lines = read_document(text, source)
    dg_sections = {}
    line_sections = {}
    for section in parser.sections():
        match = _SECTION_RE.match(section.strip())
        if match:
            target = dg_sections if match.group(1) == "dg" else line_sections
            target[int(match.group(2))] = section
        elif section not in ("bounds", "design"):
            raise ParseError(f"unknown section [{section}]", line=locate(lines, section))
    if "bounds" not in parser.sections():
        raise ParseError("missing [bounds] section")

    dg_ids = sorted(dg_sections)
    position = {file_id: k for k, file_id in enumerate(dg_ids)}
    dgs = []
    loads = []
    for k, file_id in enumerate(dg_ids):
        section = dg_sections[file_id]
        _check_keys(parser, lines, section, _DG_KEYS + _LOAD_KEYS)
        values = [read_number(parser, lines, section, key) for key in _DG_KEYS]
        dgs.append(DGParams(k, *values))
        loads.append(ZipLoad(*[read_number(parser, lines, section, key, 0.0)
                               for key in _LOAD_KEYS]))

    lines_out = []
    violations = []
    for k, file_id in enumerate(sorted(line_sections)):
        section = line_sections[file_id]
        _check_keys(parser, lines, section, _LINE_KEYS)
        r_value, l_value, src, dst = [read_number(parser, lines, section, key)
                                      for key in _LINE_KEYS]
        if src != int(src) or dst != int(dst):
            raise ParseError("endpoint must be an integer",
                             line=locate(lines, section, "from"), field_name="from")
        src_pos = position.get(int(src), -1)
        dst_pos = position.get(int(dst), -1)
        if src_pos < 0 or dst_pos < 0:
            violations.append(f"line {k + 1}: unknown endpoint")
        lines_out.append(LineParams(k, r_value, l_value, src_pos, dst_pos))

    _check_keys(parser, lines, "bounds", ("v_min", "v_max"))
    v_min = read_number(parser, lines, "bounds", "v_min")
    v_max = read_number(parser, lines, "bounds", "v_max")
    design = ()
    if parser.has_section("design"):
        design = tuple(sorted(parser.items("design")))

    spec = NetworkSpec(tuple(dgs), tuple(lines_out), tuple(loads), v_min, v_max, design)
    violations.extend(v for v in validate(spec) if v not in violations)
    if violations:
        raise ValidationError(violations)
    logger.debug("Parsed network %s: %d DGs, %d lines", source, spec.n_dg, spec.n_line)
    return spec


def load_network(path):
    ''' Read and parse a network file '''
    with open(path, encoding="utf-8") as handle:
        return parse_network(handle.read(), source=path)


def bundled(name):
    ''' Path to a data file shipped with the package '''
    return os.path.join(DATA_DIR, name)


def serialize(spec):
    '''
    Write a NetworkSpec as a network document. Floats use 17 significant
    digits, so parse_network(serialize(spec)) == spec.
    '''
    fmt = text_utils.format_exact
    out = ["[bounds]", f"v_min = {fmt(spec.v_min)}", f"v_max = {fmt(spec.v_max)}", ""]
    for dg, load in zip(spec.dgs, spec.loads):
        out.append(f"[dg {dg.index + 1}]")
        for key in _DG_KEYS:
            out.append(f"{key} = {fmt(getattr(dg, key))}")
        for key in _LOAD_KEYS:
            out.append(f"{key} = {fmt(getattr(load, key))}")
        out.append("")
    for line in spec.lines:
        out.append(f"[line {line.index + 1}]")
        out.append(f"r = {fmt(line.r)}")
        out.append(f"l = {fmt(line.l)}")
        out.append(f"from = {line.from_dg + 1}")
        out.append(f"to = {line.to_dg + 1}")
        out.append("")
    if spec.design:
        out.append("[design]")
        out.extend(f"{key} = {value}" for key, value in spec.design)
        out.append("")
    return "\n".join(out)
