"""
Tests for text_utils.py

part of mgcodesign

"""

import unittest

from mgcodesign import text_utils

# python -m unittest discover in top-level package dir

# pylint: disable=too-many-public-methods


class TextUtilsTestCase(unittest.TestCase):
    """
    Unit tests for text_utils.py
    """

    def test_format_hms(self):
        """ test format_hms function """
        self.assertEqual(text_utils.format_hms(3600),
            '1:00:00 (Hours, minutes, seconds)')
        self.assertEqual(text_utils.format_hms(3600.00, milliseconds=True),
            '3.600 Seconds')
        self.assertEqual(text_utils.format_hms(1.23456), '1.235 Seconds')
        self.assertEqual(text_utils.format_hms(65), '1:05 (Minutes, seconds)')
        self.assertEqual(text_utils.format_hms(9.999), '9.999 Seconds')
        self.assertEqual(text_utils.format_hms(10.51), '11 Seconds')
        self.assertEqual(text_utils.format_hms(0.0123), '0.012 Seconds')

    def test_format_exact(self):
        """ test format_exact function """
        for value in (0.1, 1.0 / 3.0, 2.2e-3, -48.000000000000007, 1e-300, 123456789.123):
            self.assertEqual(float(text_utils.format_exact(value)), value)
        self.assertEqual(text_utils.format_exact(48), '48')

    def test_format_short(self):
        """ test format_short function """
        self.assertEqual(text_utils.format_short(1.0 / 3.0), '0.333333')
        self.assertEqual(text_utils.format_short(48.0), '48')
        self.assertEqual(text_utils.format_short(1.0 / 3.0, digits=3), '0.333')

    def test_parse_float_list(self):
        """ test parse_float_list function """
        self.assertEqual(text_utils.parse_float_list('1 2.5, -3e-2'), [1.0, 2.5, -0.03])
        self.assertEqual(text_utils.parse_float_list('  '), [])
        with self.assertRaises(ValueError):
            text_utils.parse_float_list('1 two 3')

    def test_csv_line(self):
        """ test csv_line function """
        self.assertEqual(text_utils.csv_line(['1', 0.5, 2.0]), '1,0.5,2')
        self.assertEqual(text_utils.csv_line([0.1], exact=True), '0.10000000000000001')
        self.assertEqual(text_utils.csv_line([]), '')
        self.assertEqual(text_utils.csv_line(['dg 1, west', 2.5]), '"dg 1, west",2.5')
        self.assertEqual(text_utils.csv_line(['say "hi"']), '"say ""hi"""')

    def test_version(self):
        """ test version function """
        self.assertEqual(text_utils.version(), text_utils.__version__)

