"""Small ready-made algebras used in tests, docs and the CLI examples.

The "parabola" algebra is the minimal nontrivial deformation problem:
V_0 = span{x1, x2}, V_1 = span{y}, with differential l1(x2) = y and one
quadratic bracket l2(x1 (.) x1) = y.  Its Maurer-Cartan equation reads
MC(a*x1 + b*x2) = (b + a^2/2) y, so the solution set is the graph
b = -a^2/2 and every formal deformation terminates.  The cubic variant
adds l3(x1,x1,x1) = y, bending the graph to b = -(a^2/2 + a^3/6).
"""

from __future__ import annotations

from fractions import Fraction

from .algebra import LInftyAlgebra
from .graded import Bracket, GradedSpace


def parabola_algebra() -> LInftyAlgebra:
    space = GradedSpace({0: 2, 1: 1}, labels={0: ["x1", "x2"], 1: ["y"]})
    x1, x2, y = (0, 0), (0, 1), (1, 0)
    l1 = Bracket(space, 1, {(x2,): {y: 1}})
    l2 = Bracket(space, 2, {(x1, x1): {y: 1}})
    return LInftyAlgebra(space, [l1, l2], strictness=3)


def cubic_algebra() -> LInftyAlgebra:
    space = GradedSpace({0: 2, 1: 1}, labels={0: ["x1", "x2"], 1: ["y"]})
    x1, x2, y = (0, 0), (0, 1), (1, 0)
    l1 = Bracket(space, 1, {(x2,): {y: 1}})
    l2 = Bracket(space, 2, {(x1, x1): {y: 1}})
    l3 = Bracket(space, 3, {(x1, x1, x1): {y: 1}})
    return LInftyAlgebra(space, [l1, l2, l3], strictness=4)


def parabola_mc_point(a) -> "Element":
    """The Maurer-Cartan element a*x1 - (a^2/2)*x2 of the parabola."""
    alg = parabola_algebra()
    a = Fraction(a)
    return alg.space.element({(0, 0): a, (0, 1): -a * a / 2})


def sl2() -> "LieStructure":
    """sl(2): basis (e, f, h) with [e,f] = h, [h,e] = 2e, [h,f] = -2f."""
    from .lie import LieStructure
    return LieStructure(3, {(0, 1, 2): 1, (0, 2, 0): -2, (1, 2, 1): 2})


def heisenberg3() -> "LieStructure":
    """3-dimensional Heisenberg algebra: only [e0, e1] = e2."""
    from .lie import LieStructure
    return LieStructure(3, {(0, 1, 2): 1})


def abelian_lie(n: int) -> "LieStructure":
    from .lie import LieStructure
    return LieStructure(n, {})


def solvable4() -> "LieStructure":
    """Direct sum of two affine lines: [e0,e1] = e1, [e2,e3] = e3."""
    from .lie import LieStructure
    return LieStructure(4, {(0, 1, 1): 1, (2, 3, 3): 1})
