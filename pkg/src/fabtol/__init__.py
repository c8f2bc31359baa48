"""Fabrication-tolerance simulation of quasi-phasematched nonlinear waveguides."""

__version__ = "0.1.0"
