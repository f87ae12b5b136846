"""N-strict (curved) L-infinity algebras in the shifted convention.

All brackets l_k are graded symmetric of degree +1 and vanish for
k >= N.  The generalized Jacobi identities are

    Jac_n(l)(v_1, ..., v_n)
        = sum over i + j = n + 1, j >= 1, and (i, n-i)-unshuffles
          of eps_sigma * l_j(l_i(v_sigma(1..i)), v_sigma(i+1..n)),

with the arity-0 term feeding the curvature l_0 into l_{n+1}.  For a
flat algebra l_1 is a differential; cohomology and homotopy operators
are computed exactly over Q by Gaussian elimination.  Twisting by a
degree-0 element u re-expands the brackets around u; its arity-0 part
is the Maurer-Cartan value MC(u), which vanishes exactly when u solves
the deformation equation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import CohomologyObstruction
from .graded import Bracket, Element, GradedSpace, Slot, eval_bracket, koszul_sign
from .linalg import RationalMatrix

ZERO = Fraction(0)
ONE = Fraction(1)


class LInftyAlgebra:
    """A graded space with brackets l_0 .. l_{N-1}.

    The Jacobi identities are not imposed at construction; call
    ``verify_linfty`` to check them.  ``strictness`` is the bound N with
    l_k = 0 for all k >= N.
    """

    __slots__ = ("space", "brackets", "strictness")

    def __init__(self, space: GradedSpace,
                 brackets: Iterable[Bracket] | Mapping[int, Bracket],
                 strictness: int | None = None):
        table: dict[int, Bracket] = {}
        if isinstance(brackets, Mapping):
            brackets = brackets.values()
        for b in brackets:
            if b.space != space:
                raise ValueError("bracket defined on a foreign space")
            if b.arity in table:
                raise ValueError(f"duplicate bracket of arity {b.arity}")
            if not b.is_zero():
                table[b.arity] = b
        max_arity = max(table, default=0)
        if strictness is None:
            strictness = max_arity + 1
        if strictness < 1 or max_arity >= strictness:
            raise ValueError(
                f"strictness {strictness} contradicts a stored arity-{max_arity} bracket")
        self.space = space
        self.brackets = table
        self.strictness = strictness

    def bracket(self, k: int) -> Bracket | None:
        return self.brackets.get(k)

    @property
    def is_flat(self) -> bool:
        return 0 not in self.brackets

    def curvature(self) -> Element:
        b0 = self.brackets.get(0)
        return b0.value(()) if b0 else self.space.zero()

    def arities(self) -> list[int]:
        return sorted(self.brackets)

    def __repr__(self):
        ks = ",".join(f"l{k}" for k in self.arities())
        return f"LInftyAlgebra({self.space}, [{ks}], N={self.strictness})"


@dataclass(frozen=True)
class HomotopyPair:
    """Linear homotopy operators in one degree.

    ``h_low: V_i -> V_{i-1}`` and ``h_high: V_{i+1} -> V_i`` satisfying
    d h_low + h_high d = Id on V_i; the defining residual is stored and
    must be identically zero.
    """

    degree: int
    h_low: RationalMatrix
    h_high: RationalMatrix
    residual: RationalMatrix

    @property
    def is_exact(self) -> bool:
        return self.residual.is_zero()

    def h_low_norm(self) -> Fraction:
        return self.h_low.norm_inf()


def element_to_vector(elem: Element, degree: int) -> list[Fraction]:
    """Coordinates of the degree-d component in basis order."""
    return [elem.get(s) for s in elem.space.slots(degree)]


def vector_to_element(space: GradedSpace, degree: int, vec: Sequence[object]) -> Element:
    slots = list(space.slots(degree))
    if len(vec) != len(slots):
        raise ValueError(f"vector length {len(vec)} vs dim {len(slots)}")
    return space.element({s: v for s, v in zip(slots, vec)})


def apply_block(matrix: RationalMatrix, elem: Element,
                from_degree: int, to_degree: int) -> Element:
    """Apply a single-degree block matrix to a homogeneous element."""
    vec = matrix.matvec(element_to_vector(elem, from_degree))
    return vector_to_element(elem.space, to_degree, vec)


def enumerate_unshuffles(p: int, q: int) -> list[tuple[int, ...]]:
    """All (p,q)-unshuffles of 0..p+q-1, as permutation tuples.

    The first p images and the last q images are each increasing; there
    are C(p+q, p) of them.
    """
    if p < 0 or q < 0:
        raise ValueError("p and q must be nonnegative")
    n = p + q
    out = []
    universe = range(n)
    for head in itertools.combinations(universe, p):
        tail = tuple(x for x in universe if x not in head)
        out.append(head + tail)
    return out


def jacobiator(alg: LInftyAlgebra, n: int, args: Sequence[Element]) -> Element:
    """Value of the n-th Jacobi expression on homogeneous elements."""
    if n < 0:
        raise ValueError("arity out of range")
    if len(args) != n:
        raise ValueError(f"expected {n} arguments, got {len(args)}")
    degs = []
    for a in args:
        if a.space != alg.space:
            raise ValueError("argument from a foreign space")
        if a.is_zero():
            return alg.space.zero()
        if not a.is_homogeneous():
            raise ValueError("jacobiator needs homogeneous arguments")
        degs.append(a.degree())
    total = alg.space.zero()
    for i in range(0, n + 1):
        j = n + 1 - i
        inner_b = alg.bracket(i)
        outer_b = alg.bracket(j)
        if inner_b is None or outer_b is None:
            continue
        for sigma in enumerate_unshuffles(i, n - i):
            sign = koszul_sign(sigma, degs)
            inner = eval_bracket(inner_b, [args[sigma[m]] for m in range(i)])
            if inner.is_zero():
                continue
            term = eval_bracket(outer_b,
                                [inner] + [args[sigma[m]] for m in range(i, n)])
            if sign == -1:
                term = -term
            total = total + term
    return total


@dataclass(frozen=True)
class JacobiReport:
    """Outcome of checking Jac_n = 0 on all basis tuples."""

    max_violation: dict[int, Fraction]
    failures: tuple[tuple[int, tuple[Slot, ...]], ...]

    @property
    def passed(self) -> bool:
        return not self.failures

    def __str__(self):
        if self.passed:
            ns = ",".join(str(n) for n in sorted(self.max_violation))
            return f"all Jacobi identities hold (n={ns})"
        worst = {n for n, _ in self.failures}
        return f"Jacobi identities fail at n in {sorted(worst)}"


def verify_linfty(alg: LInftyAlgebra, max_n: int | None = None) -> JacobiReport:
    """Check Jac_n = 0 exactly on every canonical basis tuple.

    N-strictness makes the check finite: for n >= 2N every summand
    contains a vanishing bracket, so n runs up to 2N - 1 (or the given
    cap).  Tuples whose target degree indexes a zero component are
    skipped, as are tuples repeating an odd slot (forced zero).
    """
    space = alg.space
    cap = 2 * alg.strictness - 1 if max_n is None else max_n
    slots = list(space.slots())
    violations: dict[int, Fraction] = {}
    failures: list[tuple[int, tuple[Slot, ...]]] = []
    for n in range(0, cap + 1):
        live = any(alg.bracket(i) is not None and alg.bracket(n + 1 - i) is not None
                   for i in range(0, n + 2) if n + 1 - i >= 1)
        violations[n] = ZERO
        if not live:
            continue
        for key in itertools.combinations_with_replacement(slots, n):
            if any(d % 2 and key.count((d, i)) > 1 for d, i in set(key)):
                continue
            target = sum(d for d, _ in key) + 2
            if space.dim(target) == 0:
                continue
            value = jacobiator(alg, n, [space.basis(*s) for s in key])
            if not value.is_zero():
                violations[n] = max(violations[n], value.norm_inf())
                failures.append((n, key))
    return JacobiReport(violations, tuple(failures))


def mc_eval(alg: LInftyAlgebra, u: Element) -> Element:
    """Maurer-Cartan value sum over k of l_k(u, ..., u) / k!."""
    if u.space != alg.space:
        raise ValueError("element from a foreign space")
    if not (u.is_zero() or u.degree() == 0):
        raise ValueError("Maurer-Cartan evaluation needs a degree-0 element")
    total = alg.space.zero()
    fact = 1
    for k in range(alg.strictness):
        if k > 0:
            fact *= k
        b = alg.bracket(k)
        if b is None:
            continue
        total = total + eval_bracket(b, [u] * k) * Fraction(1, fact)
    return total


def twist(alg: LInftyAlgebra, u: Element) -> LInftyAlgebra:
    """Re-expand the brackets around a degree-0 element u.

    The twisted arity-p bracket absorbs every number of copies of u:
    l^u_p = sum over k of l_{p+k}(u^k (.) -) / k!.  The sum is finite by
    N-strictness, the result keeps the same strictness bound, and its
    curvature is MC(u); twisting by a Maurer-Cartan element gives a flat
    algebra.
    """
    if u.space != alg.space:
        raise ValueError("element from a foreign space")
    if u.is_zero():
        return alg
    if u.degree() != 0:
        raise ValueError("twisting needs a homogeneous degree-0 element")
    space = alg.space
    slots = list(space.slots())
    new_brackets = []
    for p in range(alg.strictness):
        entries = {}
        for key in itertools.combinations_with_replacement(slots, p):
            if any(d % 2 and key.count((d, i)) > 1 for d, i in set(key)):
                continue
            args = [space.basis(*s) for s in key]
            val = space.zero()
            fact = 1
            for k in range(alg.strictness - p):
                if k > 0:
                    fact *= k
                b = alg.bracket(p + k)
                if b is None:
                    continue
                val = val + eval_bracket(b, [u] * k + args) * Fraction(1, fact)
            if not val.is_zero():
                entries[key] = val.coords
        if entries:
            new_brackets.append(Bracket(space, p, entries))
    return LInftyAlgebra(space, new_brackets, strictness=alg.strictness)


def _require_flat(alg: LInftyAlgebra):
    if not alg.is_flat:
        raise ValueError("curved algebra: l1 is not a differential")


def differential_blocks(alg: LInftyAlgebra) -> dict[int, RationalMatrix]:
    """Matrix of l_1 : V_i -> V_{i+1} for every populated degree i."""
    _require_flat(alg)
    space = alg.space
    b1 = alg.bracket(1)
    blocks = {}
    for d in space.degrees:
        rows, cols = space.dim(d + 1), space.dim(d)
        entries = {}
        if b1 is not None:
            for i in range(cols):
                out = b1.entries.get(((d, i),))
                if out:
                    for (dd, j), v in out.items():
                        entries[(j, i)] = v
        blocks[d] = RationalMatrix(rows, cols, entries)
    return blocks


def differential_block(alg: LInftyAlgebra, degree: int) -> RationalMatrix:
    """Single l_1 block V_degree -> V_{degree+1} (zero map off support)."""
    blocks = differential_blocks(alg)
    if degree in blocks:
        return blocks[degree]
    return RationalMatrix(alg.space.dim(degree + 1), alg.space.dim(degree))


def cohomology_dim(alg: LInftyAlgebra, i: int) -> int:
    """dim ker(l_1 at degree i) - rank(l_1 into degree i), exactly."""
    _require_flat(alg)
    n = alg.space.dim(i)
    if n == 0:
        return 0
    outgoing = differential_block(alg, i)
    incoming = differential_block(alg, i - 1)
    return (n - outgoing.rank()) - incoming.rank()


def homotopy_operators(alg: LInftyAlgebra, i: int) -> HomotopyPair:
    """Construct exact homotopy operators in degree i.

    Requires the cohomology in degree i to vanish.  The construction
    row-reduces the incoming differential to split V_i into the kernel of
    the outgoing differential and a complement: on the kernel, h_low
    inverts the incoming block against a chosen preimage basis; on the
    complement, h_high inverts the outgoing block.  The homotopy identity
    then holds exactly over Q.
    """
    _require_flat(alg)
    n = alg.space.dim(i)
    A = differential_block(alg, i - 1)          # V_{i-1} -> V_i
    B = differential_block(alg, i)              # V_i -> V_{i+1}
    kernel_vectors = B.nullspace_basis() if n else []
    k = len(kernel_vectors)
    rank_a = A.rank()
    if rank_a != k:
        raise CohomologyObstruction(i, k - rank_a)
    K = RationalMatrix(n, k, {(r, c): kernel_vectors[c][r]
                              for c in range(k) for r in range(n)
                              if kernel_vectors[c][r] != 0})
    # pivot rows of K determine which standard vectors complete a basis
    _, pivot_rows = K.transpose()._echelon()
    complement = [r for r in range(n) if r not in pivot_rows]
    M = RationalMatrix(n, n,
                       dict(K.items())
                       | {(r, k + c): ONE for c, r in enumerate(complement)})
    Minv = M.inverse()
    top = RationalMatrix(k, n, {(r, c): Minv.get(r, c)
                                for r in range(k) for c in range(n)
                                if Minv.get(r, c) != 0})
    P = K @ top                                  # projection onto ker B
    X = A.solve_matrix(K)
    if X is None:
        raise CohomologyObstruction(i, k - rank_a,
                                    "kernel vector without preimage")
    h_low = X @ top
    Q = RationalMatrix.identity(n) - P
    YT = B.transpose().solve_matrix(Q.transpose())
    if YT is None:
        raise CohomologyObstruction(i, k - rank_a,
                                    "complement not reached by the differential")
    h_high = YT.transpose()
    residual = (A @ h_low) + (h_high @ B) - RationalMatrix.identity(n)
    if not residual.is_zero():
        raise AssertionError("homotopy identity failed; construction bug")
    return HomotopyPair(i, h_low, h_high, residual)
