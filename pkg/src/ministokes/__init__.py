"""MINI finite element solver for the 2D Stokes equations with benchmark studies."""

__version__ = "0.1.0"
