"""Broken FEEC (CONGA) discretization of the 2D grad-curl complex."""

__version__ = '0.1.0'
