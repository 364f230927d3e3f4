"""Simulation and analysis of broadband polarization-entangled photon pairs on a C+L-band flex grid."""

__version__ = "0.1.0"
