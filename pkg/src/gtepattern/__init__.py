"""Simulation of junction-selective patterning of silver-nanowire electrodes."""

__version__ = "0.1.0"
