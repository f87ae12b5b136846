"""Obstruction calculus and formal Maurer-Cartan series.

A formal series u(t) = sum_k u_k t^k / k! of degree-0 elements solves
the Maurer-Cartan equation order by order when every Taylor coefficient
of MC(u(t)) vanishes.  The k-th coefficient splits as

    d^k MC = l1^{u0}(u_k) + Obs^{k-1}(u_0, ..., u_{k-1}),

where the obstruction is a weighted sum of twisted brackets over
compositions of k into at least two positive parts.  When the degree-1
cohomology of the twisted differential vanishes, homotopy operators
solve the recursion explicitly: u_{k+1} = -h(Obs^k).

Two independent evaluation routes are kept side by side.  The fast path
iterates nondecreasing composition representatives weighted by orbit
size; the literal all-compositions path sits behind a flag.  A third,
structurally different oracle substitutes the truncated polynomial into
the Maurer-Cartan sum with exact coefficient arithmetic; agreement of
the routes is enforced by the test suite.

Coefficients stay exact rationals throughout; floating point enters only
when a series is summed numerically and its residual is reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .algebra import (HomotopyPair, LInftyAlgebra, differential_block,
                      element_to_vector, eval_bracket, twist, vector_to_element)
from .combinatorics import (compositions, convergence_radius, multinomial,
                            orbit_size, partitions_nondecreasing, super_catalan)
from .errors import (NotCocycle, NotKDeformation, NotMaurerCartan,
                     SeriesDivergence)
from .graded import Element, GradedSpace, Slot, canonicalize
from .linalg import RationalMatrix

ZERO = Fraction(0)
ONE = Fraction(1)


# -- truncated polynomials with element coefficients ---------------------

class ElementPoly:
    """Polynomial in t with Element coefficients, exact arithmetic."""

    __slots__ = ("space", "coeffs")

    def __init__(self, space: GradedSpace, coeffs: Sequence[Element]):
        cs = list(coeffs)
        while cs and cs[-1].is_zero():
            cs.pop()
        for c in cs:
            if c.space != space:
                raise ValueError("coefficient from a foreign space")
        self.space = space
        self.coeffs = tuple(cs)

    @classmethod
    def from_taylor(cls, space: GradedSpace, derivatives: Sequence[Element],
                    cap: int | None = None) -> "ElementPoly":
        """Build sum_j d_j t^j / j! from a list of derivatives at 0."""
        ds = derivatives if cap is None else derivatives[:cap + 1]
        return cls(space, [d * Fraction(1, math.factorial(j))
                           for j, d in enumerate(ds)])

    def degree(self) -> int:
        return len(self.coeffs) - 1

    def coeff(self, j: int) -> Element:
        if 0 <= j < len(self.coeffs):
            return self.coeffs[j]
        return self.space.zero()

    def taylor(self, k: int) -> Element:
        """k-th derivative at t = 0, i.e. coeff(k) * k!."""
        return self.coeff(k) * math.factorial(k)

    def derivative(self, order: int = 1) -> "ElementPoly":
        cs = list(self.coeffs)
        for _ in range(order):
            cs = [(j + 1) * c for j, c in enumerate(cs[1:])]
        return ElementPoly(self.space, cs)

    def at(self, t: Fraction) -> Element:
        t = Fraction(t)
        total = self.space.zero()
        power = ONE
        for c in self.coeffs:
            total = total + c * power
            power *= t
        return total

    def __add__(self, other: "ElementPoly") -> "ElementPoly":
        n = max(len(self.coeffs), len(other.coeffs))
        return ElementPoly(self.space,
                           [self.coeff(j) + other.coeff(j) for j in range(n)])

    def __mul__(self, scalar) -> "ElementPoly":
        return ElementPoly(self.space, [c * scalar for c in self.coeffs])

    __rmul__ = __mul__

    def __eq__(self, other):
        return (isinstance(other, ElementPoly) and self.space == other.space
                and self.coeffs == other.coeffs)

    def is_zero(self) -> bool:
        return not self.coeffs


def poly_eval_bracket(b, polys: Sequence[ElementPoly],
                      cap: int | None = None) -> ElementPoly:
    """Multilinear evaluation on polynomial arguments.

    Expands over the (t-power, slot) support of every argument and
    canonicalizes each basis tuple with its Koszul sign.  ``cap`` prunes
    t-powers above the requested truncation order.
    """
    if len(polys) != b.arity:
        raise ValueError(f"bracket has arity {b.arity}, got {len(polys)}")
    space = b.space
    if b.arity == 0:
        return ElementPoly(space, [b.value(())])
    supports = []
    for p in polys:
        items = [(j, slot, c)
                 for j, elem in enumerate(p.coeffs)
                 for slot, c in elem.coords.items()]
        items.sort()
        supports.append(items)
    out: dict[int, dict[Slot, Fraction]] = {}

    def expand(pos: int, tdeg: int, slots: list[Slot], coeff: Fraction):
        if cap is not None and tdeg > cap:
            return
        if pos == len(polys):
            key, sign = canonicalize(slots)
            if sign == 0:
                return
            entry = b.entries.get(key)
            if entry is None:
                return
            bucket = out.setdefault(tdeg, {})
            c = coeff * sign
            for s, v in entry.items():
                bucket[s] = bucket.get(s, ZERO) + c * v
            return
        for j, slot, c in supports[pos]:
            if cap is not None and tdeg + j > cap:
                break  # supports are sorted by t-power
            slots.append(slot)
            expand(pos + 1, tdeg + j, slots, coeff * c)
            slots.pop()

    expand(0, 0, [], ONE)
    top = max(out, default=-1)
    return ElementPoly(space, [Element(space, out.get(j, {}))
                               for j in range(top + 1)])


def twisted_poly_bracket(alg: LInftyAlgebra, u: ElementPoly, arity: int,
                         args: Sequence[ElementPoly],
                         cap: int | None = None) -> ElementPoly:
    """l^{u(t)}_arity(args) as an exact polynomial in t."""
    space = alg.space
    total = ElementPoly(space, [])
    fact = 1
    for k in range(alg.strictness - arity):
        if k > 0:
            fact *= k
        b = alg.bracket(arity + k)
        if b is None:
            continue
        term = poly_eval_bracket(b, [u] * k + list(args), cap=cap)
        total = total + term * Fraction(1, fact)
    return total


# -- formal series -------------------------------------------------------

@dataclass(frozen=True)
class FormalSeries:
    """Derivative coefficients u_0, ..., u_K of a formal path in V_0."""

    algebra: LInftyAlgebra
    coeffs: tuple[Element, ...]

    def __post_init__(self):
        if not self.coeffs:
            raise ValueError("a series needs at least the constant term")
        for c in self.coeffs:
            if c.space != self.algebra.space:
                raise ValueError("coefficient from a foreign space")
            if not (c.is_zero() or c.degree() == 0):
                raise ValueError("series coefficients must be degree-0 elements")

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def base(self) -> Element:
        return self.coeffs[0]

    def coefficient(self, k: int) -> Element:
        if 0 <= k < len(self.coeffs):
            return self.coeffs[k]
        return self.algebra.space.zero()

    def prefix(self, k: int) -> "FormalSeries":
        return FormalSeries(self.algebra, self.coeffs[:k + 1])

    def polynomial(self, cap: int | None = None) -> ElementPoly:
        return ElementPoly.from_taylor(self.algebra.space, self.coeffs, cap)

    def coefficient_norms(self) -> list[Fraction]:
        return [c.norm_inf() for c in self.coeffs]


def _check_prefix(alg: LInftyAlgebra, prefix: Sequence[Element]) -> None:
    if not prefix:
        raise ValueError("empty prefix")
    for c in prefix:
        if c.space != alg.space:
            raise ValueError("prefix element from a foreign space")
        if not (c.is_zero() or c.degree() == 0):
            raise ValueError("prefix elements must have degree 0")


def _twist_at_base(alg: LInftyAlgebra, u0: Element) -> LInftyAlgebra:
    from .algebra import mc_eval
    if not mc_eval(alg, u0).is_zero():
        raise NotMaurerCartan("base point is not a solution of the "
                              "Maurer-Cartan equation")
    return twist(alg, u0)


def _obstruction_twisted(talg: LInftyAlgebra, prefix: Sequence[Element],
                         all_compositions: bool = False) -> Element:
    """Obs^k against an already-twisted algebra; prefix is u_0..u_k."""
    k = len(prefix) - 1
    total = talg.space.zero()
    for i in range(2, min(k + 1, talg.strictness - 1) + 1):
        b = talg.bracket(i)
        if b is None:
            continue
        fact_i = math.factorial(i)
        if all_compositions:
            groups = ((parts, 1) for parts in compositions(k + 1, i))
        else:
            groups = ((parts, orbit_size(parts))
                      for parts in partitions_nondecreasing(k + 1, i))
        for parts, copies in groups:
            args = [prefix[r] for r in parts]
            if any(a.is_zero() for a in args):
                continue
            weight = Fraction(copies * multinomial(k + 1, parts), fact_i)
            total = total + eval_bracket(b, args) * weight
    return total


def obstruction(alg: LInftyAlgebra, prefix: Sequence[Element],
                all_compositions: bool = False) -> Element:
    """Obstruction to extending u_0..u_k one order further.

    The weighted sum of twisted brackets over all splittings of k+1 into
    at least two positive parts; a degree-1 element.  Requires the base
    coefficient to solve the Maurer-Cartan equation.
    """
    _check_prefix(alg, prefix)
    talg = _twist_at_base(alg, prefix[0])
    return _obstruction_twisted(talg, list(prefix), all_compositions)


def taylor_mc(alg: LInftyAlgebra, series: FormalSeries | Sequence[Element],
              order: int | None = None, substitution: bool = False,
              all_compositions: bool = False) -> list[Element]:
    """Taylor coefficients d^k MC(u(t)) at t = 0 for k = 0..order.

    Default route: d^k MC = l1^{u0}(u_k) + Obs^{k-1}.  With
    ``substitution=True`` the truncated polynomial is substituted into
    the Maurer-Cartan sum instead and the Taylor coefficients are read
    off; both routes agree identically and the second serves as the
    drift oracle for the composition combinatorics.
    """
    coeffs = list(series.coeffs if isinstance(series, FormalSeries) else series)
    _check_prefix(alg, coeffs)
    if order is None:
        order = len(coeffs) - 1
    if order > len(coeffs) - 1:
        coeffs += [alg.space.zero()] * (order - len(coeffs) + 1)
    if substitution:
        poly = ElementPoly.from_taylor(alg.space, coeffs[:order + 1])
        mc_poly = ElementPoly(alg.space, [])
        fact = 1
        for m in range(alg.strictness):
            if m > 0:
                fact *= m
            b = alg.bracket(m)
            if b is None:
                continue
            mc_poly = mc_poly + poly_eval_bracket(b, [poly] * m, cap=order) \
                * Fraction(1, fact)
        return [mc_poly.taylor(k) for k in range(order + 1)]
    from .algebra import mc_eval
    talg = twist(alg, coeffs[0])
    l1 = talg.bracket(1)
    out = [mc_eval(alg, coeffs[0])]
    for k in range(1, order + 1):
        lead = eval_bracket(l1, [coeffs[k]]) if l1 is not None else alg.space.zero()
        out.append(lead + _obstruction_twisted(talg, coeffs[:k]))
    return out


@dataclass(frozen=True)
class ObstructionReport:
    """Cocycle data of Obs^k for a verified k-step solution prefix."""

    k: int
    value: Element
    is_cocycle: bool
    class_zero: bool


def verify_cocycle(alg: LInftyAlgebra, prefix: Sequence[Element]) -> ObstructionReport:
    """Check that the obstruction of a k-deformation is l1-closed.

    The prefix must solve the Maurer-Cartan equation through its own
    order; the first failing order is reported otherwise.  Also decides
    whether the obstruction class vanishes (an exact linear solve).
    """
    _check_prefix(alg, prefix)
    coeffs = list(prefix)
    k = len(coeffs) - 1
    dmc = taylor_mc(alg, coeffs, order=k)
    for j, val in enumerate(dmc):
        if not val.is_zero():
            raise NotKDeformation(j)
    talg = twist(alg, coeffs[0])
    obs = _obstruction_twisted(talg, coeffs)
    l1 = talg.bracket(1)
    closed = eval_bracket(l1, [obs]).is_zero() if l1 is not None else True
    block = differential_block(talg, 0)
    sol = block.solve([-c for c in element_to_vector(obs, 1)])
    return ObstructionReport(k, obs, closed, sol is not None)


def extend_formal(alg: LInftyAlgebra, h: HomotopyPair, u1: Element,
                  order: int, u0: Element | None = None,
                  all_compositions: bool = False) -> FormalSeries:
    """Solve the Maurer-Cartan equation formally to the given order.

    Starting from u_1 in the kernel of the (twisted) differential, each
    next coefficient is u_{k+1} = -h_low(Obs^k); the homotopy identity
    in degree 1 makes every Taylor coefficient of MC vanish.  The pair h
    is validated against the algebra before use.
    """
    space = alg.space
    if order < 1:
        raise ValueError("order must be at least 1")
    if u0 is None:
        u0 = space.zero()
    talg = _twist_at_base(alg, u0)
    if not (u1.is_zero() or u1.degree() == 0):
        raise ValueError("u1 must be a degree-0 element")
    _validate_degree1_pair(talg, h)
    l1 = talg.bracket(1)
    if l1 is not None and not eval_bracket(l1, [u1]).is_zero():
        raise NotCocycle("u1 is not closed for the twisted differential")
    coeffs = [u0, u1]
    for k in range(1, order):
        obs = _obstruction_twisted(talg, coeffs, all_compositions)
        nxt = -apply_homotopy(h, obs, space)
        coeffs.append(nxt)
    return FormalSeries(alg, tuple(coeffs[:order + 1]))


def apply_homotopy(h: HomotopyPair, elem: Element, space: GradedSpace) -> Element:
    """h_low applied to a degree-1 element, landing in degree 0."""
    vec = h.h_low.matvec(element_to_vector(elem, 1))
    return vector_to_element(space, 0, vec)


def _validate_degree1_pair(alg: LInftyAlgebra, h: HomotopyPair) -> None:
    A = differential_block(alg, 0)
    B = differential_block(alg, 1)
    n = alg.space.dim(1)
    ident = RationalMatrix.identity(n)
    if ((A @ h.h_low) + (h.h_high @ B)) != ident:
        raise ValueError("homotopy pair does not satisfy the degree-1 "
                         "identity for this algebra")


# -- norms, bounds, numeric summation ------------------------------------

def alpha_bound(alg: LInftyAlgebra, norm: str = "max") -> Fraction:
    """Upper bound for sum over i of |l_i| / i! in the max norm.

    Operator norms are replaced by exact row-sum bounds on the blocks
    with all inputs in degree 0, which is where the series coefficients
    live; an upper bound only shrinks the certified radius.
    """
    if norm != "max":
        raise ValueError(f"unsupported norm {norm!r}")
    total = ZERO
    fact = 1
    for i in range(1, alg.strictness):
        fact *= i if i > 1 else 1
        b = alg.bracket(i)
        if b is None:
            continue
        total += b.operator_bound(0) / fact
    return total


@dataclass(frozen=True)
class BoundRow:
    k: int
    computed: Fraction     # |u_k| / k!
    bound: Fraction        # |u_1|^k (|h1| alpha)^{k-1} C_k
    ok: bool


@dataclass(frozen=True)
class ConvergenceCertificate:
    """Per-order majorization of a formal series by super-Catalan bounds."""

    h1_norm: Fraction
    alpha: Fraction
    u1_norm: Fraction
    radius: float
    rows: tuple[BoundRow, ...]

    @property
    def all_within(self) -> bool:
        return all(r.ok for r in self.rows)

    def growth_factor(self, t: float = 1.0) -> float:
        """Asymptotic one-step ratio of the bound terms at time t."""
        return 6.0 * float(self.u1_norm * self.h1_norm * self.alpha) * t


def coefficient_bounds(alg: LInftyAlgebra, series: FormalSeries,
                       h1_norm: Fraction, alpha: Fraction | None = None,
                       norm: str = "max") -> ConvergenceCertificate:
    """Certificate comparing exact coefficient norms against the bounds.

    The comparison is exact rational arithmetic; the certified radius
    1/(12 |h1| alpha) is reported as a float.
    """
    if norm != "max":
        raise ValueError(f"unsupported norm {norm!r}")
    talg = twist(alg, series.base)
    if alpha is None:
        alpha = alpha_bound(talg)
    h1_norm = Fraction(h1_norm)
    alpha = Fraction(alpha)
    if h1_norm <= 0 or alpha <= 0:
        raise ValueError("degenerate norms: |h1| and alpha must be positive")
    u1n = series.coefficient(1).norm_inf()
    rows = []
    for k in range(1, series.order + 1):
        computed = series.coefficient(k).norm_inf() / math.factorial(k)
        bound = (u1n ** k) * ((h1_norm * alpha) ** (k - 1)) * super_catalan(k)
        rows.append(BoundRow(k, computed, bound, computed <= bound))
    radius = float(convergence_radius(h1_norm, alpha))
    return ConvergenceCertificate(h1_norm, alpha, u1n, radius, tuple(rows))


@dataclass(frozen=True)
class SummationResult:
    """Numeric value of a formal series at a time t, with diagnostics."""

    value: Element            # coordinates are exact images of floats
    t: float
    residual: float           # max-norm of MC evaluated at the value
    term_norms: tuple[float, ...]
    tail_estimate: float
    within_radius: bool | None
    certificate: ConvergenceCertificate | None

    def float_coords(self) -> dict[Slot, float]:
        return {s: float(c) for s, c in self.value.coords.items()}


def sum_series(series: FormalSeries, t: float = 1.0,
               certificate: ConvergenceCertificate | None = None) -> SummationResult:
    """Sum u_0 + u_1 t + u_2 t^2/2! + ... and report the residual.

    The partial sum is accumulated exactly (any float t is an exact
    binary rational), so a terminating series reports a residual of
    exactly 0.0; only the diagnostics are floats.  Raises
    SeriesDivergence when the term norms at the requested t keep growing
    through the end of the available orders, the signature of summing
    outside the certified region.
    """
    from .algebra import mc_eval
    space = series.algebra.space
    tq = Fraction(t)
    value = space.zero()
    term_norms = []
    for k, c in enumerate(series.coeffs):
        scale = tq ** k / math.factorial(k)
        term_norms.append(float(c.norm_inf() * abs(scale)))
        value = value + c * scale
    live = [n for n in term_norms[1:] if n > 0.0]
    if len(live) >= 4 and live[-1] > live[-2] > live[-3] and live[-1] > live[0]:
        raise SeriesDivergence(
            f"series terms still grow at order {series.order} for t={t}")
    residual = float(mc_eval(series.algebra, value).norm_inf())
    tf = float(t)
    tail = 0.0
    within = None
    if certificate is not None:
        within = abs(tf) * float(certificate.u1_norm) < certificate.radius
        q = certificate.growth_factor(abs(tf))
        if certificate.rows:
            last = float(certificate.rows[-1].bound) * abs(tf) ** certificate.rows[-1].k
            tail = last * q / (1.0 - q) if q < 1.0 else float("inf")
    return SummationResult(value, tf, residual, tuple(term_norms), tail,
                           within, certificate)


def psi(alg: LInftyAlgebra, h: HomotopyPair, v: Element,
        order: int = 40, t: float = 1.0) -> SummationResult:
    """Numeric Maurer-Cartan solution through direction v.

    Builds the formal series from v to the given order, certifies its
    coefficients against the super-Catalan bounds, and sums at time t
    (t = 1 gives the parametrization point for v itself).
    """
    series = extend_formal(alg, h, v, order)
    cert = coefficient_bounds(alg, series, h.h_low_norm())
    return sum_series(series, t=t, certificate=cert)


# -- exact identity checks along polynomial paths -------------------------

def derivative_formula_check(alg: LInftyAlgebra, u_poly: ElementPoly,
                             v_poly: ElementPoly, k: int,
                             max_degree: int = 200) -> bool:
    """Exact check of the k-th derivative expansion of l1^{u(t)}(v(t)).

    The left side differentiates the composite polynomial k times; the
    right side is the closed combinatorial expansion: the leading term
    l1^{u}(d^k v) plus composition-weighted twisted brackets of path
    derivatives.  Both sides are exact polynomials and are compared
    coefficient by coefficient.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    if u_poly.degree() * max(alg.strictness - 1, 1) > max_degree:
        raise ValueError("degree budget exceeded")
    lhs = twisted_poly_bracket(alg, u_poly, 1, [v_poly]).derivative(k)
    rhs = twisted_poly_bracket(alg, u_poly, 1, [v_poly.derivative(k)])
    for i in range(1, k + 1):
        for j in range(0, k - i + 1):
            if k - j < i:
                continue
            for parts in compositions(k - j, i):
                weight = _partition_weight(k, parts, i, j)
                args = [u_poly.derivative(r) for r in parts] + [v_poly.derivative(j)]
                term = twisted_poly_bracket(alg, u_poly, i + 1, args)
                rhs = rhs + term * weight
    return lhs == rhs


def _partition_weight(k: int, parts: Sequence[int], i: int, j: int) -> Fraction:
    """k!/(r_1! ... r_i!) divided by i! j!."""
    denom = math.prod(math.factorial(r) for r in parts)
    return Fraction(math.factorial(k), denom * math.factorial(i) * math.factorial(j))


def mc_derivative_cocycle_check(alg: LInftyAlgebra,
                                series: FormalSeries | Sequence[Element],
                                k: int) -> bool:
    """Exact check, at t = 0, of the closedness identity for d^k MC.

    l1^{u0}(d^k MC) plus the composition-weighted twisted brackets of
    series coefficients against lower MC derivatives must cancel; this
    is the mechanism that makes obstructions cocycles.
    """
    coeffs = list(series.coeffs if isinstance(series, FormalSeries) else series)
    _check_prefix(alg, coeffs)
    if k > len(coeffs) - 1:
        coeffs += [alg.space.zero()] * (k - len(coeffs) + 1)
    dmc = taylor_mc(alg, coeffs, order=k)
    talg = twist(alg, coeffs[0])
    l1 = talg.bracket(1)
    total = eval_bracket(l1, [dmc[k]]) if l1 is not None else alg.space.zero()
    for i in range(1, k + 1):
        b = talg.bracket(i + 1)
        if b is None:
            continue
        for j in range(0, k - i + 1):
            if k - j < i:
                continue
            for parts in compositions(k - j, i):
                args = [coeffs[r] for r in parts] + [dmc[j]]
                if any(a.is_zero() for a in args):
                    continue
                total = total + eval_bracket(b, args) * _partition_weight(k, parts, i, j)
    return total.is_zero()
