"""Fractionally counted journal impact indicators and tests of their field normalization."""

__version__ = "0.1.0"
