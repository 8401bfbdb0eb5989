"""Hard families of Gaussian and Ising graphical models, minimum-distance
density estimation over finite classes, and numerical verification of the
associated risk bounds."""

__version__ = "0.1.0"
