"""Deformations of Lie algebra structures.

An antisymmetric bilinear map mu on R^n is a Lie structure when its
Jacobiator Jac(mu)(x,y,z) = mu(mu(x,y),z) + cyclic vanishes.  GL(n) acts
by (eta . A)(x_1..x_k) = A^{-1} eta(A x_1, ..., A x_k); the orbit of mu
is its isomorphism class.  Around a fixed Lie structure mu_0 the
relevant linearizations form the cochain complex

    C^1 --(d_e m)--> C^2 --(d Jac)--> C^3 --(delta)--> C^4,

with C^k = Hom(Lambda^k R^n, R^n), and the whole deformation problem is
governed by a flat 3-strict graded algebra on these four spaces whose
degree-0 Maurer-Cartan equation is exactly Jac(mu_0 + v) = 0.  The
quadratic brackets are the graded commutators of insertion operations
(the comp_bar products below); the displayed formulas for the action
differential and the Chevalley-Eilenberg stabilizer are implemented
independently and the test suite pins both routes together.

Rigidity: exactness at C^2 yields exact homotopy operators h1, h2 with
d_e m . h1 + h2 . dJac = id, an explicit orbit chart mu_0 . exp(h1(v)),
perturbed operators at nearby Lie structures, and a connection whose
parallel transport trivializes small deformations.  The transport layer
is the one floating-point corner of the package.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .algebra import HomotopyPair, LInftyAlgebra, cohomology_dim, homotopy_operators
from .errors import CohomologyObstruction, OutsidePerturbationNeighbourhood
from .graded import Bracket, Element, GradedSpace
from .linalg import RationalMatrix

ZERO = Fraction(0)


def _is_exact(x) -> bool:
    return isinstance(x, (int, Fraction))


# -- cochains -------------------------------------------------------------

class Cochain:
    """Alternating k-multilinear map Lambda^k R^n -> R^n.

    Values are stored on strictly increasing index tuples; evaluation on
    other tuples sorts and applies the permutation parity, repeated
    indices give zero.  Coefficients may be Fractions (exact layer) or
    floats (transport layer); operations never mix the two implicitly.
    """

    __slots__ = ("n", "arity", "values")

    def __init__(self, n: int, arity: int,
                 values: Mapping[tuple, Mapping[int, object]] | None = None):
        if not 1 <= arity:
            raise ValueError("arity must be >= 1")
        table = {}
        if values:
            for T, vec in values.items():
                T = tuple(T)
                if len(T) != arity or list(T) != sorted(set(T)):
                    raise ValueError(f"key {T} is not a strictly increasing {arity}-tuple")
                if any(not 0 <= i < n for i in T):
                    raise ValueError(f"index out of range in {T}")
                clean = {m: c for m, c in vec.items() if c != 0}
                for m in clean:
                    if not 0 <= m < n:
                        raise ValueError(f"target index {m} out of range")
                if clean:
                    table[T] = clean
        self.n = n
        self.arity = arity
        self.values = table

    def is_zero(self) -> bool:
        return not self.values

    def is_exact(self) -> bool:
        return all(_is_exact(c) for vec in self.values.values() for c in vec.values())

    def eval_tuple(self, idx: Sequence[int]) -> dict[int, object]:
        """Value on an arbitrary basis tuple (sorted with parity)."""
        idx = tuple(idx)
        if len(set(idx)) != len(idx):
            return {}
        order = sorted(range(len(idx)), key=lambda p: idx[p])
        inversions = sum(1 for a in range(len(idx)) for b in range(a + 1, len(idx))
                         if order[a] > order[b])
        vec = self.values.get(tuple(sorted(idx)))
        if not vec:
            return {}
        if inversions % 2:
            return {m: -c for m, c in vec.items()}
        return dict(vec)

    def eval_vectors(self, args: Sequence[Mapping[int, object]]) -> dict[int, object]:
        """Multilinear evaluation on sparse coefficient vectors."""
        if len(args) != self.arity:
            raise ValueError("arity mismatch")
        out: dict[int, object] = {}

        def expand(pos, idx, coeff):
            if pos == len(args):
                for m, c in self.eval_tuple(idx).items():
                    out[m] = out.get(m, 0) + coeff * c
                return
            for i, c in args[pos].items():
                expand(pos + 1, idx + [i], coeff * c)

        expand(0, [], 1)
        return {m: c for m, c in out.items() if c != 0}

    def __add__(self, other: "Cochain") -> "Cochain":
        if (self.n, self.arity) != (other.n, other.arity):
            raise ValueError("cochain shape mismatch")
        vals = {T: dict(vec) for T, vec in self.values.items()}
        for T, vec in other.values.items():
            tgt = vals.setdefault(T, {})
            for m, c in vec.items():
                tgt[m] = tgt.get(m, 0) + c
        return Cochain(self.n, self.arity, vals)

    def __sub__(self, other: "Cochain") -> "Cochain":
        return self + other.scaled(-1)

    def scaled(self, scalar) -> "Cochain":
        return Cochain(self.n, self.arity,
                       {T: {m: c * scalar for m, c in vec.items()}
                        for T, vec in self.values.items()})

    def norm_inf(self) -> float:
        return max((abs(c) for vec in self.values.values() for c in vec.values()),
                   default=0)

    def __eq__(self, other):
        return (isinstance(other, Cochain)
                and (self.n, self.arity) == (other.n, other.arity)
                and self.values == other.values)

    def __repr__(self):
        return f"Cochain(n={self.n}, arity={self.arity}, {len(self.values)} entries)"


def comp_bar(alpha: Cochain, beta: Cochain) -> Cochain:
    """Insertion product: sum over unshuffles of alpha(beta(...), ...)."""
    if alpha.n != beta.n:
        raise ValueError("cochains over different spaces")
    n = alpha.n
    a, b = alpha.arity, beta.arity
    k = a + b - 1
    values: dict[tuple, dict[int, object]] = {}
    for T in itertools.combinations(range(n), k):
        acc: dict[int, object] = {}
        for spots in itertools.combinations(range(k), b):
            inner_idx = tuple(T[p] for p in spots)
            rest = tuple(T[p] for p in range(k) if p not in spots)
            sign = -1 if sum(s - j for j, s in enumerate(spots)) % 2 else 1
            inner = beta.eval_tuple(inner_idx)
            for m, c in inner.items():
                outer = alpha.eval_tuple((m,) + rest)
                for mm, cc in outer.items():
                    acc[mm] = acc.get(mm, 0) + sign * c * cc
        acc = {m: c for m, c in acc.items() if c != 0}
        if acc:
            values[T] = acc
    return Cochain(n, k, values)


def nr_bracket(alpha: Cochain, beta: Cochain) -> Cochain:
    """Graded commutator of insertion products.

    [alpha, beta] = alpha o beta - (-1)^{(a-1)(b-1)} beta o alpha; for a
    bilinear mu, [mu, -] reproduces the action differential, the
    Jacobiator differential and the Chevalley-Eilenberg stabilizer in
    arities 1, 2, 3.
    """
    sign = -1 if ((alpha.arity - 1) * (beta.arity - 1)) % 2 else 1
    second = comp_bar(beta, alpha).scaled(sign)
    return comp_bar(alpha, beta) - second


# -- Lie structures -------------------------------------------------------

class LieStructure:
    """Structure constants of an antisymmetric bilinear map on R^n.

    ``constants`` maps (i, j, k) with i < j to the coefficient of e_k in
    mu(e_i, e_j).  Jacobi is not imposed: a LieStructure is a point of
    C^2, and the Jacobiator detects whether it is a Lie algebra.
    Coefficients are exact rationals in the algebraic layer; the
    transport layer produces float-valued structures.
    """

    __slots__ = ("n", "constants")

    def __init__(self, n: int, constants: Mapping[tuple, object] | None = None):
        if n < 1:
            raise ValueError("dimension must be positive")
        table = {}
        if constants:
            for (i, j, k), c in constants.items():
                if not (0 <= i < j < n and 0 <= k < n):
                    raise ValueError(f"bad constant index ({i},{j},{k}) for n={n}")
                if c != 0:
                    table[(i, j, k)] = c
        self.n = n
        self.constants = table

    def is_exact(self) -> bool:
        return all(_is_exact(c) for c in self.constants.values())

    def as_cochain(self) -> Cochain:
        vals: dict[tuple, dict[int, object]] = {}
        for (i, j, k), c in self.constants.items():
            vals.setdefault((i, j), {})[k] = c
        return Cochain(self.n, 2, vals)

    @classmethod
    def from_cochain(cls, coch: Cochain) -> "LieStructure":
        if coch.arity != 2:
            raise ValueError("need an arity-2 cochain")
        return cls(coch.n, {(i, j, m): c
                            for (i, j), vec in coch.values.items()
                            for m, c in vec.items()})

    def to_array(self) -> np.ndarray:
        arr = np.zeros((self.n, self.n, self.n))
        for (i, j, k), c in self.constants.items():
            arr[i, j, k] = float(c)
            arr[j, i, k] = -float(c)
        return arr

    @classmethod
    def from_array(cls, arr: np.ndarray, tol: float = 0.0) -> "LieStructure":
        n = arr.shape[0]
        consts = {}
        for i in range(n):
            for j in range(i + 1, n):
                for k in range(n):
                    v = float(arr[i, j, k])
                    if abs(v) > tol:
                        consts[(i, j, k)] = v
        return cls(n, consts)

    def norm_inf(self) -> float:
        return max((abs(c) for c in self.constants.values()), default=0)

    def __eq__(self, other):
        return (isinstance(other, LieStructure) and self.n == other.n
                and self.constants == other.constants)

    def __repr__(self):
        return f"LieStructure(n={self.n}, {len(self.constants)} constants)"


def _as_cochain2(mu) -> Cochain:
    if isinstance(mu, LieStructure):
        return mu.as_cochain()
    if isinstance(mu, Cochain) and mu.arity == 2:
        return mu
    raise ValueError("expected a LieStructure or an arity-2 cochain")


def jacobiator_lie(mu) -> Cochain:
    """Cyclic Jacobi defect mu(mu(x,y),z) + mu(mu(y,z),x) + mu(mu(z,x),y)."""
    coch = _as_cochain2(mu)
    n = coch.n
    values = {}
    for (x, y, z) in itertools.combinations(range(n), 3):
        acc: dict[int, object] = {}
        for (p, q, r) in ((x, y, z), (y, z, x), (z, x, y)):
            inner = coch.eval_tuple((p, q))
            for m, c in inner.items():
                for mm, cc in coch.eval_tuple((m, r)).items():
                    acc[mm] = acc.get(mm, 0) + c * cc
        acc = {m: c for m, c in acc.items() if c != 0}
        if acc:
            values[(x, y, z)] = acc
    return Cochain(n, 3, values)


def is_lie(mu) -> bool:
    return jacobiator_lie(mu).is_zero()


def gl_action(eta: Cochain, A: RationalMatrix) -> Cochain:
    """(eta . A)(x_1..x_k) = A^{-1} eta(A x_1, ..., A x_k), exactly."""
    if A.rows != A.cols or A.rows != eta.n:
        raise ValueError("matrix shape does not match the cochain")
    Ainv = A.inverse()  # raises on singular input
    n, k = eta.n, eta.arity
    cols = [{i: A.get(i, j) for i in range(n) if A.get(i, j) != 0}
            for j in range(n)]
    values = {}
    for T in itertools.combinations(range(n), k):
        vec = eta.eval_vectors([cols[t] for t in T])
        out: dict[int, object] = {}
        for c_idx, c in vec.items():
            for m in range(n):
                w = Ainv.get(m, c_idx)
                if w != 0:
                    out[m] = out.get(m, 0) + w * c
        out = {m: c for m, c in out.items() if c != 0}
        if out:
            values[T] = out
    return Cochain(n, k, values)


def gl_action_lie(mu, A: RationalMatrix) -> LieStructure:
    return LieStructure.from_cochain(gl_action(_as_cochain2(mu), A))


def dem_apply(mu, A: Cochain) -> Cochain:
    """Action differential: (x,y) -> mu(Ax,y) + mu(x,Ay) - A(mu(x,y))."""
    coch = _as_cochain2(mu)
    if A.arity != 1:
        raise ValueError("expected an arity-1 cochain (an endomorphism)")
    n = coch.n
    values = {}
    for (i, j) in itertools.combinations(range(n), 2):
        acc: dict[int, object] = {}
        for m, c in A.eval_tuple((i,)).items():
            for mm, cc in coch.eval_tuple((m, j)).items():
                acc[mm] = acc.get(mm, 0) + c * cc
        for m, c in A.eval_tuple((j,)).items():
            for mm, cc in coch.eval_tuple((i, m)).items():
                acc[mm] = acc.get(mm, 0) + c * cc
        for m, c in coch.eval_tuple((i, j)).items():
            for mm, cc in A.eval_tuple((m,)).items():
                acc[mm] = acc.get(mm, 0) - c * cc
        acc = {m: c for m, c in acc.items() if c != 0}
        if acc:
            values[(i, j)] = acc
    return Cochain(n, 2, values)


def jac_polarization(g1: Cochain, g2: Cochain) -> Cochain:
    """Symmetric bilinear part of the Jacobiator.

    B(g1, g2) = Jac(g1 + g2) - Jac(g1) - Jac(g2); B(g, g) = 2 Jac(g) and
    Jac(mu + v) = Jac(mu) + B(mu, v) + Jac(v) exactly, since Jac is a
    homogeneous quadratic map.
    """
    return jacobiator_lie(g1 + g2) - jacobiator_lie(g1) - jacobiator_lie(g2)


def jac_directional(mu, gamma: Cochain) -> Cochain:
    """Derivative of the Jacobiator at mu in the direction gamma."""
    return jac_polarization(_as_cochain2(mu), gamma)


def ce_apply(mu, eta: Cochain) -> Cochain:
    """Chevalley-Eilenberg stabilizer on 3-cochains, by the two-sum formula."""
    coch = _as_cochain2(mu)
    if eta.arity != 3:
        raise ValueError("expected a 3-cochain")
    n = coch.n
    values = {}
    for T in itertools.combinations(range(n), 4):
        acc: dict[int, object] = {}
        for i in range(4):
            rest = T[:i] + T[i + 1:]
            sgn = 1 if i % 2 == 0 else -1  # (-1)^{i+1} with 1-based i
            for m, c in eta.eval_tuple(rest).items():
                for mm, cc in coch.eval_tuple((T[i], m)).items():
                    acc[mm] = acc.get(mm, 0) + sgn * c * cc
        for i in range(4):
            for j in range(i + 1, 4):
                rest = tuple(T[p] for p in range(4) if p not in (i, j))
                sgn = -1 if (i + j) % 2 else 1  # (-1)^{i+j} with 1-based indices
                for m, c in coch.eval_tuple((T[i], T[j])).items():
                    for mm, cc in eta.eval_tuple((m,) + rest).items():
                        acc[mm] = acc.get(mm, 0) + sgn * c * cc
        acc = {m: c for m, c in acc.items() if c != 0}
        if acc:
            values[T] = acc
    return Cochain(n, 4, values)


# -- cochain bases and matrices -------------------------------------------

def cochain_basis(n: int, arity: int) -> list[tuple[tuple, int]]:
    """Ordered basis (increasing tuple, target) of Hom(Lambda^k, R^n)."""
    return [(T, m)
            for T in itertools.combinations(range(n), arity)
            for m in range(n)]


def cochain_dim(n: int, arity: int) -> int:
    return math.comb(n, arity) * n


def basis_cochain(n: int, arity: int, index: int) -> Cochain:
    T, m = cochain_basis(n, arity)[index]
    return Cochain(n, arity, {T: {m: 1}})


def cochain_to_vector(coch: Cochain) -> list:
    basis = cochain_basis(coch.n, coch.arity)
    pos = {tm: p for p, tm in enumerate(basis)}
    out = [0] * len(basis)
    for T, vec in coch.values.items():
        for m, c in vec.items():
            out[pos[(T, m)]] = c
    return out


def vector_to_cochain(n: int, arity: int, vec: Sequence) -> Cochain:
    basis = cochain_basis(n, arity)
    if len(vec) != len(basis):
        raise ValueError("vector length mismatch")
    values: dict[tuple, dict[int, object]] = {}
    for (T, m), c in zip(basis, vec):
        if c != 0:
            values.setdefault(T, {})[m] = c
    return Cochain(n, arity, values)


def cochain_map_matrix(n: int, arity_from: int, arity_to: int,
                       fn: Callable[[Cochain], Cochain]) -> RationalMatrix:
    """Matrix of a linear map in the standard cochain bases."""
    rows = cochain_dim(n, arity_to)
    cols = cochain_dim(n, arity_from)
    entries = {}
    for col in range(cols):
        image = fn(basis_cochain(n, arity_from, col))
        for row, c in enumerate(cochain_to_vector(image)):
            if c != 0:
                entries[(row, col)] = c
    return RationalMatrix(rows, cols, entries)


def action_derivative(mu) -> RationalMatrix:
    """Matrix of the action differential C^1 -> C^2 at mu."""
    coch = _as_cochain2(mu)
    return cochain_map_matrix(coch.n, 1, 2, lambda A: dem_apply(coch, A))


def jac_derivative(mu) -> RationalMatrix:
    """Matrix of the Jacobiator differential C^2 -> C^3 at mu."""
    coch = _as_cochain2(mu)
    return cochain_map_matrix(coch.n, 2, 3, lambda g: jac_directional(coch, g))


def ce_stabilizer(mu) -> RationalMatrix:
    """Matrix of the Chevalley-Eilenberg stabilizer C^3 -> C^4 at mu."""
    coch = _as_cochain2(mu)
    return cochain_map_matrix(coch.n, 3, 4, lambda eta: ce_apply(coch, eta))


# -- the deformation algebra ----------------------------------------------

_DEGREE_OF_ARITY = {1: -1, 2: 0, 3: 1, 4: 2}


def deformation_space(n: int) -> GradedSpace:
    degrees = {}
    labels = {}
    sep = "" if n <= 10 else ","
    for arity, deg in _DEGREE_OF_ARITY.items():
        dim = cochain_dim(n, arity)
        degrees[deg] = dim
        if dim:
            labels[deg] = [sep.join(str(t) for t in T) + "|" + str(m)
                           for T, m in cochain_basis(n, arity)]
    return GradedSpace(degrees, labels)


def cochain_to_element(space: GradedSpace, coch: Cochain) -> Element:
    deg = _DEGREE_OF_ARITY[coch.arity]
    vec = cochain_to_vector(coch)
    return space.element({(deg, i): c for i, c in enumerate(vec) if c != 0})


def element_to_cochain(n: int, elem: Element, arity: int) -> Cochain:
    deg = _DEGREE_OF_ARITY[arity]
    vec = [0] * cochain_dim(n, arity)
    for (d, i), c in elem.coords.items():
        if d != deg:
            raise ValueError(f"element has support outside degree {deg}")
        vec[i] = c
    return vector_to_cochain(n, arity, vec)


def build_deformation_linfty(mu0: LieStructure) -> LInftyAlgebra:
    """Flat 3-strict algebra on C^1..C^4 controlling deformations of mu0.

    The differential carries the three linearized blocks; the quadratic
    bracket is the degree-shifted graded commutator of insertions, whose
    components polarize the mu-dependence of the blocks.  On degree 0 the
    Maurer-Cartan value of v is exactly Jac(mu0 + v).
    """
    if not mu0.is_exact():
        raise ValueError("deformation algebra needs exact rational constants")
    if not is_lie(mu0):
        raise ValueError("mu0 is not a Lie structure (nonzero Jacobiator)")
    n = mu0.n
    space = deformation_space(n)
    mu = mu0.as_cochain()

    l1_entries = {}
    for arity in (1, 2, 3):
        deg = _DEGREE_OF_ARITY[arity]
        fn = {1: lambda A: dem_apply(mu, A),
              2: lambda g: jac_directional(mu, g),
              3: lambda e: ce_apply(mu, e)}[arity]
        for i in range(cochain_dim(n, arity)):
            image = fn(basis_cochain(n, arity, i))
            if image.arity <= 4 and not image.is_zero():
                out = cochain_to_element(space, image)
                if not out.is_zero():
                    l1_entries[((deg, i),)] = out.coords
    l1 = Bracket(space, 1, l1_entries)

    l2_entries = {}
    slots = list(space.slots())
    for a in range(len(slots)):
        for b in range(a, len(slots)):
            s, t = slots[a], slots[b]
            ds, dt = s[0], t[0]
            target = ds + dt + 1
            if space.dim(target) == 0:
                continue
            if s == t and ds % 2:
                continue  # odd square is forced to vanish
            x = basis_cochain(n, ds + 2, s[1])
            y = basis_cochain(n, dt + 2, t[1])
            val = nr_bracket(x, y)
            if ds % 2:
                val = val.scaled(-1)
            if val.is_zero() or val.arity > 4:
                continue
            out = cochain_to_element(space, val)
            if not out.is_zero():
                l2_entries[(s, t)] = out.coords
    l2 = Bracket(space, 2, l2_entries)

    return LInftyAlgebra(space, [l1, l2], strictness=3)


@dataclass(frozen=True)
class RigidityResult:
    """Outcome of the exactness test at the C^2 slot."""

    rigid: bool
    cohomology: int
    pair: HomotopyPair | None
    algebra: LInftyAlgebra


def rigidity_check(mu0: LieStructure) -> RigidityResult:
    """Decide infinitesimal rigidity of mu0 and build homotopy operators.

    Exactness of C^1 -> C^2 -> C^3 at the middle slot is computed over Q.
    When it holds, the returned operators h1: C^2 -> C^1, h2: C^3 -> C^2
    satisfy d_e m . h1 + h2 . dJac = id exactly; otherwise the cohomology
    dimension is the witness of flexibility.
    """
    alg = build_deformation_linfty(mu0)
    h = cohomology_dim(alg, 0)
    if h != 0:
        return RigidityResult(False, h, None, alg)
    pair = homotopy_operators(alg, 0)
    return RigidityResult(True, 0, pair, alg)


# -- floating-point layer: exp, orbit chart, perturbation, transport ------

def expm(A: np.ndarray, tol: float = 1e-14) -> np.ndarray:
    """Matrix exponential by scaling-and-squaring on a truncated series."""
    A = np.asarray(A, dtype=float)
    norm = np.abs(A).sum(axis=1).max() if A.size else 0.0
    squarings = max(0, int(np.ceil(np.log2(norm / 0.5))) if norm > 0.5 else 0)
    B = A / (2.0 ** squarings)
    result = np.eye(A.shape[0])
    term = np.eye(A.shape[0])
    k = 1
    while True:
        term = term @ B / k
        result = result + term
        if np.abs(term).max() <= tol:
            break
        k += 1
        if k > 60:  # series for |B| <= 1/2 converges long before this
            break
    for _ in range(squarings):
        result = result @ result
    return result


def act_array(mu_arr: np.ndarray, A: np.ndarray) -> np.ndarray:
    """GL action on structure-constant arrays: (mu . A)."""
    Ainv = np.linalg.inv(A)
    return np.einsum("ai,bj,abc,kc->ijk", A, A, mu_arr, Ainv)


def jac_array(mu_arr: np.ndarray) -> np.ndarray:
    """Jacobiator of a float structure-constant array."""
    m = np.einsum("ijm,mkc->ijkc", mu_arr, mu_arr)
    return m + np.einsum("jkm,mic->ijkc", mu_arr, mu_arr) \
             + np.einsum("kim,mjc->ijkc", mu_arr, mu_arr)


def _c1_vec_to_matrix(n: int, vec: Sequence[float]) -> np.ndarray:
    """C^1 coordinate vector -> endomorphism matrix (basis (q,)|p)."""
    M = np.zeros((n, n))
    for q in range(n):
        for p in range(n):
            M[p, q] = float(vec[q * n + p])
    return M


def orbit_parametrization(mu0: LieStructure, h1: RationalMatrix,
                          v, exp_tol: float = 1e-14,
                          warn_norm: float = 1.0) -> LieStructure:
    """Orbit chart mu0 . exp(h1(v)) around a rigid structure.

    v is a 2-cochain direction (in the kernel of dJac for chart
    directions); h1 sends it into the symmetry algebra and the group
    exponential moves mu0.  The derivative at v = 0 is the identity, so
    this parametrizes the orbit near mu0.  Float output.
    """
    n = mu0.n
    if isinstance(v, Element):
        v = element_to_cochain(n, v, 2)
    if isinstance(v, LieStructure):
        v = v.as_cochain()
    vec = [float(c) for c in cochain_to_vector(v)]
    image = [float(x) for x in
             np.array(h1.to_float_rows(), dtype=float) @ np.array(vec)] \
        if h1.rows and h1.cols else [0.0] * (n * n)
    A = _c1_vec_to_matrix(n, image)
    if np.abs(A).max() > warn_norm:
        warnings.warn("large symmetry direction: orbit chart may be "
                      "ill-conditioned", stacklevel=2)
    moved = act_array(mu0.to_array(), expm(A, tol=exp_tol))
    return LieStructure.from_array(moved, tol=0.0)


def _linear_block_stacks(mu0: LieStructure):
    """Stacks of dem/djac matrices over the C^2 basis (both maps are
    linear in mu, so perturbations contract against these once)."""
    n = mu0.n
    d2 = cochain_dim(n, 2)
    dem_stack = np.zeros((d2, d2, cochain_dim(n, 1)))
    djac_stack = np.zeros((d2, cochain_dim(n, 3), d2))
    for s in range(d2):
        basis_mu = basis_cochain(n, 2, s)
        dem_stack[s] = np.array(
            cochain_map_matrix(n, 1, 2, lambda A: dem_apply(basis_mu, A))
            .to_float_rows())
        djac_stack[s] = np.array(
            cochain_map_matrix(n, 2, 3, lambda g: jac_polarization(basis_mu, g))
            .to_float_rows())
    return dem_stack, djac_stack


def _mu_vec(n: int, mu_arr: np.ndarray) -> np.ndarray:
    basis = cochain_basis(n, 2)
    return np.array([mu_arr[T[0], T[1], m] for T, m in basis])


def perturbed_homotopies(mu0: LieStructure, h1: RationalMatrix | np.ndarray,
                         h2: RationalMatrix | np.ndarray, mu,
                         _stacks=None) -> tuple[np.ndarray, np.ndarray]:
    """Homotopy operators transported to a nearby structure mu.

    With e = mu - mu0, the corrected operators are
    h1' = h1 (1 + dem(e) h1)^{-1} and h2' = h2 (1 + djac(e) h2)^{-1};
    they satisfy the homotopy identity at mu whenever mu is again a Lie
    structure.  Admissibility is the contraction bound |T| < 1 on both
    correction operators; beyond it the inverses are not certified and
    the point is rejected.
    """
    n = mu0.n
    h1f = np.array(h1.to_float_rows()) if isinstance(h1, RationalMatrix) else np.asarray(h1, float)
    h2f = np.array(h2.to_float_rows()) if isinstance(h2, RationalMatrix) else np.asarray(h2, float)
    mu_arr = mu.to_array() if isinstance(mu, LieStructure) else np.asarray(mu, float)
    dem_stack, djac_stack = _stacks if _stacks is not None else _linear_block_stacks(mu0)
    delta = _mu_vec(n, mu_arr - mu0.to_array())
    a = np.tensordot(delta, dem_stack, axes=(0, 0))
    b = np.tensordot(delta, djac_stack, axes=(0, 0))
    t1 = a @ h1f
    t2 = b @ h2f
    n1 = np.abs(t1).sum(axis=1).max() if t1.size else 0.0
    n2 = np.abs(t2).sum(axis=1).max() if t2.size else 0.0
    if max(n1, n2) >= 1.0:
        raise OutsidePerturbationNeighbourhood(
            f"correction norms ({n1:.3g}, {n2:.3g}) reach 1; "
            "outside perturbation neighbourhood")
    h1_mu = h1f @ np.linalg.inv(np.eye(t1.shape[0]) + t1)
    h2_mu = h2f @ np.linalg.inv(np.eye(t2.shape[0]) + t2) if t2.size else h2f
    return h1_mu, h2_mu


# -- deformation paths and parallel transport ------------------------------

class DeformationPath:
    """Time-dependent structure constants with a derivative."""

    def __init__(self, value: Callable[[float], np.ndarray],
                 derivative: Callable[[float], np.ndarray] | None = None,
                 fd_step: float = 1e-6):
        self._value = value
        self._derivative = derivative
        self._fd_step = fd_step

    def value(self, t: float) -> np.ndarray:
        return self._value(t)

    def derivative(self, t: float) -> np.ndarray:
        if self._derivative is not None:
            return self._derivative(t)
        h = self._fd_step
        return (self._value(t + h) - self._value(t - h)) / (2.0 * h)

    @classmethod
    def exponential(cls, mu0: LieStructure, A: np.ndarray) -> "DeformationPath":
        """Trivial deformation mu0 . exp(tA), with exact derivative."""
        arr0 = mu0.to_array()
        A = np.asarray(A, dtype=float)

        def value(t: float) -> np.ndarray:
            return act_array(arr0, expm(t * A))

        def derivative(t: float) -> np.ndarray:
            mu_t = value(t)
            return (np.einsum("ai,ajc->ijc", A, mu_t)
                    + np.einsum("bj,ibc->ijc", A, mu_t)
                    - np.einsum("ijm,cm->ijc", mu_t, A))

        return cls(value, derivative)

    @classmethod
    def from_samples(cls, times: Sequence[float],
                     values: Sequence[np.ndarray]) -> "DeformationPath":
        """Piecewise-cubic interpolation of sampled structure constants."""
        from scipy.interpolate import CubicSpline
        times = np.asarray(times, dtype=float)
        stack = np.stack([np.asarray(v, dtype=float) for v in values])
        flat = stack.reshape(len(times), -1)
        spline = CubicSpline(times, flat, axis=0)
        dspline = spline.derivative()
        shape = stack.shape[1:]

        def value(t: float) -> np.ndarray:
            return spline(t).reshape(shape)

        def derivative(t: float) -> np.ndarray:
            return dspline(t).reshape(shape)

        return cls(value, derivative)


@dataclass(frozen=True)
class TransportResult:
    """Parallel transport frames along a deformation path."""

    times: tuple[float, ...]
    transports: tuple[np.ndarray, ...]
    defects: tuple[float, ...]

    @property
    def final_defect(self) -> float:
        return self.defects[-1]


def parallel_transport(mu0: LieStructure, path: DeformationPath, steps: int,
                       pair: HomotopyPair | None = None, t_end: float = 1.0,
                       samples: int = 11) -> TransportResult:
    """Integrate the transport frame P along a path of Lie structures.

    The frame solves dP/dt = -H1(dmu/dt) P with H1 the perturbed
    homotopy operator at mu_t, using a fixed-step classical 4th-order
    Runge-Kutta scheme.  The defect |mu0 - mu_t . P(t)| is reported at
    sample times; for trivial deformations it converges to zero at the
    order of the scheme.
    """
    if steps < 1:
        raise ValueError("need at least one step")
    if pair is None:
        result = rigidity_check(mu0)
        if not result.rigid:
            raise CohomologyObstruction(0, result.cohomology)
        pair = result.pair
    n = mu0.n
    stacks = _linear_block_stacks(mu0)
    h1 = np.array(pair.h_low.to_float_rows())
    h2 = np.array(pair.h_high.to_float_rows())
    arr0 = mu0.to_array()

    def generator(t: float) -> np.ndarray:
        mu_t = path.value(t)
        h1_mu, _ = perturbed_homotopies(mu0, h1, h2, mu_t, _stacks=stacks)
        xi = h1_mu @ _mu_vec(n, path.derivative(t))
        return -_c1_vec_to_matrix(n, xi)

    dt = t_end / steps
    P = np.eye(n)
    sample_every = max(1, steps // max(1, samples - 1))
    times = [0.0]
    transports = [P.copy()]
    defects = [float(np.abs(arr0 - act_array(path.value(0.0), P)).max())]
    for s in range(steps):
        t = s * dt
        k1 = generator(t) @ P
        k2 = generator(t + dt / 2) @ (P + dt / 2 * k1)
        k3 = generator(t + dt / 2) @ (P + dt / 2 * k2)
        k4 = generator(t + dt) @ (P + dt * k3)
        P = P + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if (s + 1) % sample_every == 0 or s + 1 == steps:
            t_next = (s + 1) * dt
            defect = float(np.abs(arr0 - act_array(path.value(t_next), P)).max())
            times.append(t_next)
            transports.append(P.copy())
            defects.append(defect)
    return TransportResult(tuple(times), tuple(transports), tuple(defects))
