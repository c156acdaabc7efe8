'''
 scenario.py

Load-event scenarios and seeded disturbance signals for the simulator.

A scenario document uses the same INI-like syntax as network documents:

    [scenario]
    duration = 10
    dt = 1e-5
    decimation = 100

    [initial]
    i_bar_scale = 0

    [event 1]
    time = 1
    target = all
    field = i_bar
    scale = 1

    [disturbance]
    amplitude_v = 0.1
    seed = 7

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
from typing import Optional, Tuple

import numpy as np

from . import netspec
from . import text_utils

__version__ = "0.4.0"  # Dated 2024-11-02

logger = logging.getLogger(__name__)

LOAD_FIELDS = ("y_l", "i_bar", "p_l")
_EVENT_RE = re.compile(r"^event\s+(\d+)$")
_INITIAL_KEYS = tuple(f"{name}_scale" for name in LOAD_FIELDS)
_EVENT_KEYS = ("time", "target", "field", "value", "scale")
_DISTURBANCE_KEYS = ("amplitude_v", "amplitude_i", "amplitude_int", "amplitude_line",
                     "seed", "bandwidth")


def version():  # Report version number for this document
    ''' Return version number '''
    return __version__


@dataclass(frozen=True)
class LoadEvent:
    '''
    One load step. target is a 0-based DG index or None for every DG.
    Exactly one of value (absolute) and scale (times the nominal load) is set.
    '''
    time: float
    target: Optional[int]
    field: str
    value: Optional[float] = None
    scale: Optional[float] = None

    def new_value(self, nominal_load):
        ''' Load value after the event, given the DG's nominal ZipLoad '''
        if self.value is not None:
            return self.value
        return self.scale * getattr(nominal_load, self.field)


@dataclass(frozen=True)
class DisturbanceSpec:
    '''
    Seeded zero-mean band-limited disturbances. Amplitudes are per channel
    kind: PCC current (A), converter voltage (V), integrator (V) and line
    voltage (V).
    '''
    amplitude_v: float = 0.0
    amplitude_i: float = 0.0
    amplitude_int: float = 0.0
    amplitude_line: float = 0.0
    seed: int = 0
    bandwidth: float = 50.0     # Hz; knot spacing is 1/bandwidth

    def amplitudes(self, n_dg, n_line):
        ''' Per-channel amplitude vector in the w ordering (v, i, int per DG, then lines) '''
        per_dg = np.tile([self.amplitude_v, self.amplitude_i, self.amplitude_int], n_dg)
        return np.concatenate([per_dg, np.full(n_line, self.amplitude_line)])

    def is_zero(self):
        ''' True when every amplitude is zero '''
        return not any((self.amplitude_v, self.amplitude_i, self.amplitude_int,
                        self.amplitude_line))


class DisturbanceSignal:
    '''
    Piecewise-linear signal through uniform random knots. Each channel
    has its knot mean removed, so the realisation is zero mean.
    '''

    def __init__(self, dist, n_dg, n_line, duration, seed=None):
        self.n_channels = 3 * n_dg + n_line
        self.spacing = 1.0 / dist.bandwidth
        count = int(np.ceil(duration / self.spacing)) + 2
        rng = np.random.default_rng(dist.seed if seed is None else seed)
        amps = dist.amplitudes(n_dg, n_line)
        knots = rng.uniform(-1.0, 1.0, (count, self.n_channels))
        knots -= knots.mean(axis=0)
        peak = np.max(np.abs(knots), axis=0)
        peak[peak == 0] = 1.0
        self.knots = knots / peak * amps

    def __call__(self, time):
        position = time / self.spacing
        index = min(int(position), self.knots.shape[0] - 2)
        frac = position - index
        return (1.0 - frac) * self.knots[index] + frac * self.knots[index + 1]


@dataclass(frozen=True)
class Scenario:
    ''' Simulation horizon, initial load configuration and load events '''
    duration: float
    dt: float = 1e-5
    decimation: int = 100
    initial: Tuple[Tuple[str, float], ...] = ()     # (field, scale) pairs
    events: Tuple[LoadEvent, ...] = ()
    disturbance: Optional[DisturbanceSpec] = None

    def initial_spec(self, spec):
        ''' Network with the loads active at t = 0 '''
        out = spec
        for field_name, scale in self.initial:
            for dg in spec.dgs:
                out = out.with_load(dg.index, field_name,
                                    scale * getattr(spec.loads[dg.index], field_name))
        return out

    def with_overrides(self, dt=None, duration=None, disturbance=None):
        ''' Copy with a different step, horizon or disturbance '''
        updates = {}
        if dt is not None:
            updates["dt"] = float(dt)
        if duration is not None:
            updates["duration"] = float(duration)
        if disturbance is not None:
            updates["disturbance"] = disturbance
        return dataclasses.replace(self, **updates)

    def event_steps(self):
        ''' Events snapped to the integration grid, as (step, event) '''
        return [(int(round(event.time / self.dt)), event) for event in self.events]


def apply_event(current, nominal, event):
    ''' Return current with the event's load change applied '''
    targets = range(current.n_dg) if event.target is None else [event.target]
    out = current
    for index in targets:
        out = out.with_load(index, event.field, event.new_value(nominal.loads[index]))
    return out


def configurations(spec, scen):
    ''' [(start time, NetworkSpec)] for every inter-event window '''
    current = scen.initial_spec(spec)
    out = [(0.0, current)]
    for event in scen.events:
        current = apply_event(current, spec, event)
        out.append((event.time, current))
    return out


def check(scen, n_dg=None):
    ''' Return a list of problems with a scenario '''
    problems = []
    if scen.duration <= 0 or scen.dt <= 0:
        problems.append("duration and dt must be > 0")
    if scen.dt > scen.duration:
        problems.append("dt must not exceed the duration")
    if scen.decimation < 1:
        problems.append("decimation must be >= 1")
    last = 0.0
    for k, event in enumerate(scen.events):
        if event.time <= last:
            problems.append(f"event {k + 1}: times must be strictly increasing and > 0")
        if event.time > scen.duration:
            problems.append(f"event {k + 1}: after the end of the scenario")
        if n_dg is not None and event.target is not None and event.target >= n_dg:
            problems.append(f"event {k + 1}: no dg {event.target + 1}")
        if (event.scale is not None and event.scale < 0) or (event.value is not None
                                                            and event.value < 0):
            problems.append(f"event {k + 1}: load values and scales must be >= 0")
        last = event.time
    if scen.disturbance is not None and scen.disturbance.bandwidth <= 0:
        problems.append("disturbance bandwidth must be > 0")
    return problems


def _read_event(parser, lines, section):
    time = netspec.read_number(parser, lines, section, "time")
    raw_target = parser.get(section, "target", fallback="all").strip()
    if raw_target.lower() == "all":
        target = None
    else:
        try:
            target = int(raw_target) - 1
        except ValueError as err:
            raise netspec.ParseError(f"target must be a dg number or all, not {raw_target!r}",
                                     line=netspec.locate(lines, section, "target"),
                                     field_name="target") from err
        if target < 0:
            raise netspec.ParseError("target must be >= 1",
                                     line=netspec.locate(lines, section, "target"),
                                     field_name="target")
    field_name = parser.get(section, "field", fallback="").strip().lower()
    if field_name not in LOAD_FIELDS:
        raise netspec.ParseError(f"field must be one of {', '.join(LOAD_FIELDS)}",
                                 line=netspec.locate(lines, section, "field"),
                                 field_name="field")
    has_value = parser.has_option(section, "value")
    has_scale = parser.has_option(section, "scale")
    if has_value == has_scale:
        raise netspec.ParseError("give exactly one of value and scale",
                                 line=netspec.locate(lines, section), field_name="value")
    if has_value:
        value = netspec.read_number(parser, lines, section, "value")
        if value < 0:
            raise netspec.ParseError("load values must be >= 0",
                                     line=netspec.locate(lines, section, "value"),
                                     field_name="value")
        return LoadEvent(time, target, field_name, value=value)
    scale = netspec.read_number(parser, lines, section, "scale")
    if scale < 0:
        raise netspec.ParseError("scale must be >= 0",
                                 line=netspec.locate(lines, section, "scale"),
                                 field_name="scale")
    return LoadEvent(time, target, field_name, scale=scale)


def _keys_in(parser, lines, section, allowed):
    for key in parser.options(section):
        if key not in allowed:
            raise netspec.ParseError(f"unknown key in [{section}]",
                                     line=netspec.locate(lines, section, key), field_name=key)


def parse_scenario(text, source="<scenario>", n_dg=None):
    '''
    Parse a scenario document. Raise netspec.ParseError for malformed
    documents and netspec.ValidationError for inconsistent ones.
    '''
    parser, lines = netspec.read_document(text, source)
    if not parser.has_section("scenario"):
        raise netspec.ParseError("missing [scenario] section")
    _keys_in(parser, lines, "scenario", ("duration", "dt", "decimation"))
    duration = netspec.read_number(parser, lines, "scenario", "duration")
    dt = netspec.read_number(parser, lines, "scenario", "dt", 1e-5)
    decimation = netspec.read_number(parser, lines, "scenario", "decimation", 100.0)
    if decimation != int(decimation):
        raise netspec.ParseError("decimation must be an integer",
                                 line=netspec.locate(lines, "scenario", "decimation"),
                                 field_name="decimation")

    initial = ()
    if parser.has_section("initial"):
        _keys_in(parser, lines, "initial", _INITIAL_KEYS)
        initial = tuple((key[:-len("_scale")], netspec.read_number(parser, lines, "initial", key))
                        for key in _INITIAL_KEYS if parser.has_option("initial", key))

    numbered = {}
    for section in parser.sections():
        match = _EVENT_RE.match(section.strip())
        if match:
            numbered[int(match.group(1))] = section
        elif section not in ("scenario", "initial", "disturbance"):
            raise netspec.ParseError(f"unknown section [{section}]",
                                     line=netspec.locate(lines, section))
    events = []
    for number in sorted(numbered):
        section = numbered[number]
        _keys_in(parser, lines, section, _EVENT_KEYS)
        events.append(_read_event(parser, lines, section))

    disturbance = None
    if parser.has_section("disturbance"):
        _keys_in(parser, lines, "disturbance", _DISTURBANCE_KEYS)
        values = {key: netspec.read_number(parser, lines, "disturbance", key)
                  for key in _DISTURBANCE_KEYS if parser.has_option("disturbance", key)}
        if "seed" in values:
            values["seed"] = int(values["seed"])
        disturbance = DisturbanceSpec(**values)

    scen = Scenario(duration, dt, int(decimation), initial, tuple(events), disturbance)
    problems = check(scen, n_dg)
    if problems:
        raise netspec.ValidationError(problems)
    logger.debug("Parsed scenario %s: %d events over %s", source, len(events),
                 text_utils.format_hms(duration))
    return scen


def load_scenario(path, n_dg=None):
    ''' Read and parse a scenario file '''
    with open(path, encoding="utf-8") as handle:
        return parse_scenario(handle.read(), source=path, n_dg=n_dg)


def serialize_scenario(scen):
    ''' Write a Scenario as a scenario document '''
    fmt = text_utils.format_exact
    out = ["[scenario]", f"duration = {fmt(scen.duration)}", f"dt = {fmt(scen.dt)}",
           f"decimation = {scen.decimation}", ""]
    if scen.initial:
        out.append("[initial]")
        out.extend(f"{field_name}_scale = {fmt(scale)}" for field_name, scale in scen.initial)
        out.append("")
    for number, event in enumerate(scen.events, start=1):
        out.append(f"[event {number}]")
        out.append(f"time = {fmt(event.time)}")
        out.append("target = " + ("all" if event.target is None else str(event.target + 1)))
        out.append(f"field = {event.field}")
        if event.value is not None:
            out.append(f"value = {fmt(event.value)}")
        else:
            out.append(f"scale = {fmt(event.scale)}")
        out.append("")
    if scen.disturbance is not None:
        out.append("[disturbance]")
        for item in dataclasses.fields(scen.disturbance):
            value = getattr(scen.disturbance, item.name)
            out.append(f"{item.name} = {value if item.name == 'seed' else fmt(value)}")
        out.append("")
    return "\n".join(out)
