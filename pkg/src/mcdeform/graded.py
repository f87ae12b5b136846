"""Exact graded linear algebra over the rationals.

A graded vector space is a finite family of components V_i indexed by
integer degrees, each with a chosen basis.  Elements are sparse rational
coordinate vectors keyed by basis slots ``(degree, index)``.  Multilinear
structure maps (brackets) are graded symmetric and stored sparsely on
canonical nondecreasing input tuples; evaluation on arbitrary tuples
reorders the inputs and picks up the Koszul sign.

Everything in this module is immutable after construction and all
operations are pure, so values can be shared freely across threads.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

Slot = tuple[int, int]  # (degree, basis index)

ZERO = Fraction(0)
ONE = Fraction(1)


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    return Fraction(x)


def koszul_sign(perm: Sequence[int], degs: Sequence[int]) -> int:
    """Sign relating a permuted word to the sorted one in S(V).

    ``perm`` is a permutation of ``0..k-1`` describing the word
    ``w = (v[perm[0]], ..., v[perm[k-1]])`` built from homogeneous
    elements with degrees ``degs``; the returned sign s satisfies
    ``w = s * (v[0] (.) ... (.) v[k-1])``.  Each inversion of two
    odd-degree elements contributes a factor -1, all other inversions
    contribute +1.
    """
    k = len(perm)
    if len(degs) != k:
        raise ValueError(f"permutation has {k} slots but {len(degs)} degrees given")
    seen = [False] * k
    for p in perm:
        if not 0 <= p < k or seen[p]:
            raise ValueError(f"{tuple(perm)} is not a permutation of 0..{k - 1}")
        seen[p] = True
    sign = 1
    for i in range(k):
        for j in range(i + 1, k):
            if perm[i] > perm[j] and degs[perm[i]] % 2 and degs[perm[j]] % 2:
                sign = -sign
    return sign


def canonicalize(slots: Sequence[Slot]) -> tuple[tuple[Slot, ...], int]:
    """Sort basis slots into the canonical nondecreasing order.

    Returns ``(sorted_tuple, sign)`` where sign is the Koszul sign of the
    sorting permutation under the total order "lexicographic on
    (degree, index)".  A repeated slot of odd degree forces the symmetric
    word to vanish; this is flagged by ``sign == 0``.
    """
    slots = tuple(slots)
    sign = 1
    for i in range(len(slots)):
        di = slots[i][0]
        for j in range(i + 1, len(slots)):
            if slots[i] > slots[j]:
                if di % 2 and slots[j][0] % 2:
                    sign = -sign
            elif slots[i] == slots[j] and di % 2:
                return tuple(sorted(slots)), 0
    return tuple(sorted(slots)), sign


class GradedSpace:
    """Finite-dimensional graded vector space with named basis slots."""

    __slots__ = ("_dims", "_labels", "_key")

    def __init__(self, degrees: Mapping[int, int],
                 labels: Mapping[int, Sequence[str]] | None = None):
        dims = {}
        for d, n in degrees.items():
            d, n = int(d), int(n)
            if n < 0:
                raise ValueError(f"negative dimension {n} in degree {d}")
            if n > 0:
                dims[d] = n
        labs = {}
        if labels:
            for d, names in labels.items():
                d = int(d)
                if d not in dims:
                    raise ValueError(f"labels given for empty degree {d}")
                if len(names) != dims[d]:
                    raise ValueError(
                        f"degree {d}: {len(names)} labels for dimension {dims[d]}")
                labs[d] = tuple(str(s) for s in names)
        self._dims = dims
        self._labels = labs
        self._key = (tuple(sorted(dims.items())),
                     tuple(sorted((d, v) for d, v in labs.items())))

    @property
    def degrees(self) -> list[int]:
        return sorted(self._dims)

    def dim(self, degree: int) -> int:
        return self._dims.get(degree, 0)

    @property
    def total_dim(self) -> int:
        return sum(self._dims.values())

    def has_slot(self, slot: Slot) -> bool:
        d, i = slot
        return 0 <= i < self._dims.get(d, 0)

    def slots(self, degree: int | None = None) -> Iterator[Slot]:
        """All basis slots, in (degree, index) order."""
        for d in sorted(self._dims):
            if degree is None or d == degree:
                for i in range(self._dims[d]):
                    yield (d, i)

    def label(self, slot: Slot) -> str:
        d, i = slot
        names = self._labels.get(d)
        return names[i] if names else f"{d}.{i}"

    def labels(self, degree: int) -> tuple[str, ...] | None:
        return self._labels.get(degree)

    def slot_by_label(self, name: str) -> Slot:
        for d, names in self._labels.items():
            if name in names:
                return (d, names.index(name))
        raise KeyError(f"no basis slot labelled {name!r}")

    def zero(self) -> "Element":
        return Element(self, {})

    def basis(self, degree: int, index: int) -> "Element":
        slot = (degree, index)
        if not self.has_slot(slot):
            raise ValueError(f"no basis slot {slot}")
        return Element(self, {slot: ONE})

    def element(self, coords: Mapping[Slot, object]) -> "Element":
        return Element(self, {s: _frac(c) for s, c in coords.items()})

    def __eq__(self, other):
        return isinstance(other, GradedSpace) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        parts = ", ".join(f"{d}:{n}" for d, n in sorted(self._dims.items()))
        return f"GradedSpace({{{parts}}})"


class Element:
    """Sparse rational vector in a graded space.

    Coordinates are kept exact; zero coefficients are dropped.  An element
    is homogeneous when all its support lives in one degree.
    """

    __slots__ = ("space", "coords")

    def __init__(self, space: GradedSpace, coords: Mapping[Slot, Fraction]):
        clean = {}
        for slot, c in coords.items():
            if not space.has_slot(slot):
                raise ValueError(f"slot {slot} not in {space}")
            c = _frac(c)
            if c != 0:
                clean[slot] = c
        self.space = space
        self.coords = clean

    def is_zero(self) -> bool:
        return not self.coords

    def is_homogeneous(self) -> bool:
        return len({d for d, _ in self.coords}) <= 1

    def degree(self) -> int | None:
        """Degree of a nonzero homogeneous element, else None."""
        degs = {d for d, _ in self.coords}
        return degs.pop() if len(degs) == 1 else None

    def component(self, degree: int) -> "Element":
        return Element(self.space,
                       {s: c for s, c in self.coords.items() if s[0] == degree})

    def get(self, slot: Slot) -> Fraction:
        return self.coords.get(slot, ZERO)

    def norm_inf(self) -> Fraction:
        """Max absolute coordinate (exact)."""
        return max((abs(c) for c in self.coords.values()), default=ZERO)

    def __add__(self, other: "Element") -> "Element":
        if self.space != other.space:
            raise ValueError("elements live in different spaces")
        out = dict(self.coords)
        for s, c in other.coords.items():
            out[s] = out.get(s, ZERO) + c
        return Element(self.space, out)

    def __sub__(self, other: "Element") -> "Element":
        return self + (-other)

    def __neg__(self) -> "Element":
        return Element(self.space, {s: -c for s, c in self.coords.items()})

    def __mul__(self, scalar) -> "Element":
        c = _frac(scalar)
        return Element(self.space, {s: v * c for s, v in self.coords.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        return (isinstance(other, Element) and self.space == other.space
                and self.coords == other.coords)

    def __hash__(self):
        return hash((self.space, tuple(sorted(self.coords.items()))))

    def __repr__(self):
        if not self.coords:
            return "0"
        terms = [f"{c}*{self.space.label(s)}"
                 for s, c in sorted(self.coords.items())]
        return " + ".join(terms)


class Bracket:
    """Graded-symmetric k-multilinear map of degree +1, stored sparsely.

    ``entries`` maps canonical nondecreasing slot tuples to the coordinate
    dict of the output; each output must be homogeneous of degree
    (sum of input degrees) + 1.  The arity-0 bracket holds a single entry
    keyed by the empty tuple: the curvature, an element of degree 1.
    """

    __slots__ = ("space", "arity", "entries")

    def __init__(self, space: GradedSpace, arity: int,
                 entries: Mapping[Sequence[Slot], Mapping[Slot, object]]):
        if arity < 0:
            raise ValueError("arity must be >= 0")
        table: dict[tuple[Slot, ...], dict[Slot, Fraction]] = {}
        for key, out in entries.items():
            key = tuple(tuple(s) for s in key)
            if len(key) != arity:
                raise ValueError(f"entry key {key} has wrong arity ({arity} expected)")
            if list(key) != sorted(key):
                raise ValueError(f"entry key {key} is not canonically sorted")
            for s in key:
                if not space.has_slot(s):
                    raise ValueError(f"input slot {s} not in space")
            target = sum(d for d, _ in key) + 1
            coords = {}
            for s, c in out.items():
                s = tuple(s)
                if not space.has_slot(s):
                    raise ValueError(f"output slot {s} not in space")
                if s[0] != target:
                    raise ValueError(
                        f"entry {key}: output degree {s[0]} breaks the +1 "
                        f"homogeneity (expected degree {target})")
                c = _frac(c)
                if c != 0:
                    coords[s] = c
            if coords:
                table[key] = coords
        self.space = space
        self.arity = arity
        self.entries = table

    def is_zero(self) -> bool:
        return not self.entries

    def value(self, key: Sequence[Slot]) -> Element:
        """Value on a canonical basis tuple (zero element if absent)."""
        return Element(self.space, self.entries.get(tuple(key), {}))

    def scaled(self, scalar) -> "Bracket":
        c = _frac(scalar)
        return Bracket(self.space, self.arity,
                       {k: {s: v * c for s, v in out.items()}
                        for k, out in self.entries.items()})

    def operator_bound(self, input_degree: int | None = 0) -> Fraction:
        """Row-sum upper bound for the operator norm in the max norm.

        Restricts to entries whose inputs all have the given degree (use
        None for no restriction).  Each canonical tuple is weighted by the
        number of its ordered rearrangements, which makes the bound valid
        for evaluation on arbitrary (not basis) arguments.
        """
        rows: dict[Slot, Fraction] = {}
        for key, out in self.entries.items():
            if input_degree is not None and any(d != input_degree for d, _ in key):
                continue
            mult = _ordered_rearrangements(key)
            for s, c in out.items():
                rows[s] = rows.get(s, ZERO) + mult * abs(c)
        return max(rows.values(), default=ZERO)

    def __repr__(self):
        return f"Bracket(arity={self.arity}, {len(self.entries)} entries)"


def _ordered_rearrangements(key: tuple[Slot, ...]) -> int:
    import math
    n = math.factorial(len(key))
    for s in set(key):
        n //= math.factorial(key.count(s))
    return n


def eval_bracket(b: Bracket, args: Sequence[Element]) -> Element:
    """Evaluate a bracket on arbitrary elements by multilinear expansion.

    Each ordered basis tuple appearing in the expansion is brought to
    canonical order with its Koszul sign; tuples repeating an odd slot are
    annihilated.
    """
    if len(args) != b.arity:
        raise ValueError(f"bracket has arity {b.arity}, got {len(args)} arguments")
    for a in args:
        if a.space != b.space:
            raise ValueError("argument from a foreign space")
    if b.arity == 0:
        return b.value(())
    out: dict[Slot, Fraction] = {}
    # depth-first product over the supports of the arguments
    def expand(pos: int, slots: list[Slot], coeff: Fraction):
        if pos == len(args):
            key, sign = canonicalize(slots)
            if sign == 0:
                return
            entry = b.entries.get(key)
            if entry is None:
                return
            c = coeff * sign
            for s, v in entry.items():
                out[s] = out.get(s, ZERO) + c * v
            return
        for slot, c in args[pos].coords.items():
            slots.append(slot)
            expand(pos + 1, slots, coeff * c)
            slots.pop()

    expand(0, [], ONE)
    return Element(b.space, out)
