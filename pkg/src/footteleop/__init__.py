"""Simulation of bipedal foot-platform telemanipulation with DS-modulated impedance control."""

__version__ = "0.1.0"
