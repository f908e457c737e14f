"""
Curved Wiener: extrinsic geometry and stochastic calculus on embedded manifolds
"""

__version__ = "1.0.0"
__author__ = "Curved Wiener Team"
