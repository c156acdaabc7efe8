'''
 text_utils.py

Common text formatting utilities for reports, traces and bundles

Part of mgcodesign, dissipativity-based co-design tools for DC microgrids

Numbers written to design bundles use 17 significant digits so that every
float64 value survives a write/read cycle exactly. Report tables use a
shorter general format.

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

import csv
import io


def version():    # Version number for this document
    """Return version number of this script"""
    return "0.3.0" # Dated 2024-11-02

__version__ = version()


def format_hms (duration, milliseconds=False):
    '''
    Given a number of milliseconds or seconds, return a formatted string
    in the format:
        "12:34:56 (Hours:Minutes:Seconds)" or
        "34:56 (Minutes:Seconds)", or
        "56 Seconds", or
        "5.231 Seconds",
    depending on the duration. Used for solver and simulation run times.
    Times greater than or equal to 10 s are rounded to the nearest second.
    '''
    if milliseconds: # Input units are milliseconds
        duration = duration / 1000.0
    if duration < 10:
        return f'{duration:.3f} Seconds'
    duration_rounded = int(round(duration))
    if duration_rounded < 60:
        return f"{duration_rounded:02} Seconds"
    m_elapsed, s_elapsed = divmod(duration_rounded, 60)
    if duration_rounded < 3600:
        return f"{m_elapsed}:{s_elapsed:02} (Minutes, seconds)"
    h_elapsed, m_elapsed = divmod(m_elapsed, 60)
    return f"{h_elapsed}:{m_elapsed:02}:{s_elapsed:02} (Hours, minutes, seconds)"


def format_exact(value):
    '''
    Format a float with 17 significant digits, which is enough to recover
    the identical float64 when read back with float().
    '''
    return f"{float(value):.17g}"


def format_short(value, digits=6):
    ''' Format a float for human-readable report tables '''
    return f"{float(value):.{digits}g}"


def parse_float_list(text):
    '''
    Parse a whitespace or comma separated list of numbers.
    Return a list of floats; raise ValueError on any malformed entry.
    '''
    fields = text.replace(',', ' ').split()
    return [float(field) for field in fields]


def csv_line(values, exact=False):
    '''
    Join a sequence of numbers (or pre-formatted strings) into one CSV row.
    Numbers use format_exact when exact is True, format_short otherwise.
    Strings holding commas or quotes are quoted.
    '''
    formatter = format_exact if exact else format_short
    cells = [value if isinstance(value, str) else formatter(value) for value in values]
    buffer = io.StringIO()
    csv.writer(buffer, lineterminator="").writerow(cells)
    return buffer.getvalue()
