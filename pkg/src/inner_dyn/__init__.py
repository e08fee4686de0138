"""Inner functions of the unit disc and the dynamics of their restrictions."""

__version__ = "0.1.0"
