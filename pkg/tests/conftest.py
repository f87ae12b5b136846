"""Shared generators for randomized tests.

Random algebras here are N-strict and flat but deliberately do NOT
satisfy the Jacobi identities: the Taylor/obstruction identities under
test are pure calculus and must hold regardless.  Honest examples (the
parabola family, Lie deformation algebras) cover the Jacobi-dependent
laws.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

import pytest

from mcdeform.algebra import LInftyAlgebra, apply_block, eval_bracket
from mcdeform.graded import Bracket, Element, GradedSpace
from mcdeform.linalg import RationalMatrix


def random_fraction(rng: random.Random, span: int = 3) -> Fraction:
    return Fraction(rng.randint(-span, span), rng.choice((1, 1, 2, 3)))


def random_element(rng: random.Random, space: GradedSpace, degree: int,
                   density: float = 0.7) -> Element:
    coords = {}
    for slot in space.slots(degree):
        if rng.random() < density:
            c = random_fraction(rng)
            if c:
                coords[slot] = c
    return space.element(coords)


def random_algebra(rng: random.Random, dims: dict[int, int], strictness: int,
                   density: float = 0.35) -> LInftyAlgebra:
    """Random flat N-strict brackets (no Jacobi imposed)."""
    space = GradedSpace(dims)
    slots = list(space.slots())
    brackets = []
    for k in range(1, strictness):
        entries = {}
        for key in itertools.combinations_with_replacement(slots, k):
            if any(d % 2 and key.count((d, i)) > 1 for d, i in set(key)):
                continue
            target = sum(d for d, _ in key) + 1
            if space.dim(target) == 0:
                continue
            out = {}
            for idx in range(space.dim(target)):
                if rng.random() < density:
                    c = random_fraction(rng)
                    if c:
                        out[(target, idx)] = c
            if out:
                entries[key] = out
        if entries:
            brackets.append(Bracket(space, k, entries))
    return LInftyAlgebra(space, brackets, strictness=strictness)


def random_invertible(rng: random.Random, n: int,
                      span: int = 2) -> RationalMatrix:
    while True:
        m = RationalMatrix.from_rows(
            [[rng.randint(-span, span) for _ in range(n)] for _ in range(n)])
        if m.rank() == n:
            return m


def change_basis(alg: LInftyAlgebra,
                 blocks: dict[int, RationalMatrix]) -> LInftyAlgebra:
    """Conjugate every bracket by a degree-preserving isomorphism."""
    space = alg.space
    inverses = {d: blocks[d].inverse() for d in blocks}
    new_brackets = []
    for k in alg.arities():
        b = alg.bracket(k)
        entries = {}
        for key in itertools.combinations_with_replacement(list(space.slots()), k):
            if any(d % 2 and key.count((d, i)) > 1 for d, i in set(key)):
                continue
            args = [apply_block(blocks[d], space.basis(d, i), d, d)
                    for d, i in key]
            val = eval_bracket(b, args)
            if val.is_zero():
                continue
            target = val.degree()
            val = apply_block(inverses[target], val, target, target)
            if not val.is_zero():
                entries[key] = val.coords
        if entries:
            new_brackets.append(Bracket(space, k, entries))
    return LInftyAlgebra(space, new_brackets, strictness=alg.strictness)


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20250810)
