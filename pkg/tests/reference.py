"""Reference maps shared by the test modules."""

import math

from inner_dyn.inner import InnerFunctionSpec


def blaschke_half(a: float = 0.5) -> InnerFunctionSpec:
    """``z (z + a)/(1 + a z)``; the rotation -1 cancels the factor constant of ``b_{-a}``."""
    return InnerFunctionSpec(-1.0, ((0j, 1), (complex(-a), 1)), ())


DOUBLING = InnerFunctionSpec(1.0, ((0j, 2),), ())
TRIPLING = InnerFunctionSpec(1.0, ((0j, 3),), ())
BOOLE = InnerFunctionSpec(1.0, ((0j, 1),), ((0.0, 1.0),))
BLASCHKE = blaschke_half(0.5)
TWO_ATOMS = InnerFunctionSpec(1.0, ((0j, 1),), ((0.0, 0.5), (0.5, 0.5)))
SHIFTED = InnerFunctionSpec(1.0, ((0.3 + 0j, 2),), ())


E_INV = math.exp(-1.0)
