"""Borel-plane exponential asymptotics for singularly perturbed linear ODEs."""

__version__ = "0.1.0"
SCHEMA = "resurgo-v1"
