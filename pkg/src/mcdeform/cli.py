"""Command-line surface and file formats.

Algebras, Lie structure constants and deformation paths travel as UTF-8
JSON; every exact number is a rational string "p/q" (or an integer),
never a float.  Reports are deterministic JSON on stdout.  Exit codes:
0 success, 2 mathematical obstruction (failed Jacobi check, nonzero
cohomology, divergence, ...), 3 unusable input.

    mcdeform verify algebra.json
    mcdeform deform algebra.json --u1 "x1=1/20" --order 12 --t 1
    mcdeform rigidity lie.json
    mcdeform transport lie.json path.json --steps 1000

``deform``, ``rigidity`` and ``transport`` also accept a Lie file where
an algebra is expected and build the deformation algebra on the fly.
The super-Catalan memo table is capped by the MCDEFORM_MEMO_CAP
environment variable (default 200).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from fractions import Fraction

import numpy as np

from .algebra import (LInftyAlgebra, cohomology_dim, homotopy_operators,
                      verify_linfty)
from .errors import CohomologyObstruction, DeformationError
from .graded import Bracket, Element, GradedSpace
from .lie import (DeformationPath, LieStructure, build_deformation_linfty,
                  parallel_transport, rigidity_check)
from .obstructions import coefficient_bounds, extend_formal, sum_series

FORMAT_VERSION = 1


class InputError(Exception):
    """Unparseable or schema-violating input; maps to exit code 3."""


# -- rational scalars ------------------------------------------------------

def _parse_rational(value, where: str) -> Fraction:
    if isinstance(value, bool):
        raise InputError(f"{where}: expected a rational, got a boolean")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"{where}: bad rational string {value!r}") from exc
    raise InputError(f"{where}: exact fields take integers or 'p/q' strings, "
                     f"got {type(value).__name__}")


def _rational_str(x: Fraction) -> str:
    return str(Fraction(x))


def _expect(mapping, key, where: str, kind=None):
    if not isinstance(mapping, dict) or key not in mapping:
        raise InputError(f"{where}: missing field {key!r}")
    value = mapping[key]
    if kind is not None and not isinstance(value, kind):
        raise InputError(f"{where}.{key}: expected {kind.__name__}, "
                         f"got {type(value).__name__}")
    return value


# -- algebra files ---------------------------------------------------------

def algebra_to_json(alg: LInftyAlgebra) -> dict:
    space = alg.space
    degrees = {str(d): space.dim(d) for d in space.degrees}
    labels = {str(d): list(space.labels(d))
              for d in space.degrees if space.labels(d)}
    brackets = []
    for k in alg.arities():
        b = alg.bracket(k)
        entries = []
        for key in sorted(b.entries):
            for slot, coeff in sorted(b.entries[key].items()):
                entries.append({"inputs": [list(s) for s in key],
                                "output": list(slot),
                                "coeff": _rational_str(coeff)})
        brackets.append({"arity": k, "entries": entries})
    out = {"format": FORMAT_VERSION, "degrees": degrees,
           "strictness": alg.strictness, "brackets": brackets}
    if labels:
        out["labels"] = labels
    return out


def algebra_from_json(data, where: str = "algebra") -> LInftyAlgebra:
    fmt = _expect(data, "format", where, int)
    if fmt != FORMAT_VERSION:
        raise InputError(f"{where}.format: unsupported version {fmt}")
    raw_degrees = _expect(data, "degrees", where, dict)
    degrees = {}
    for key, dim in raw_degrees.items():
        try:
            d = int(key)
        except ValueError as exc:
            raise InputError(f"{where}.degrees: bad degree key {key!r}") from exc
        if not isinstance(dim, int) or dim < 0:
            raise InputError(f"{where}.degrees.{key}: bad dimension {dim!r}")
        degrees[d] = dim
    labels = None
    if "labels" in data:
        labels = {}
        for key, names in data["labels"].items():
            if not isinstance(names, list):
                raise InputError(f"{where}.labels.{key}: expected a list")
            labels[int(key)] = [str(s) for s in names]
    try:
        space = GradedSpace(degrees, labels)
    except ValueError as exc:
        raise InputError(f"{where}: {exc}") from exc

    brackets = []
    for bi, bdata in enumerate(_expect(data, "brackets", where, list)):
        bwhere = f"{where}.brackets[{bi}]"
        arity = _expect(bdata, "arity", bwhere, int)
        table: dict[tuple, dict[tuple, Fraction]] = {}
        for ei, edata in enumerate(_expect(bdata, "entries", bwhere, list)):
            ewhere = f"{bwhere}.entries[{ei}]"
            inputs = _expect(edata, "inputs", ewhere, list)
            output = _expect(edata, "output", ewhere, list)
            coeff = _parse_rational(_expect(edata, "coeff", ewhere),
                                    f"{ewhere}.coeff")
            try:
                key = tuple((int(d), int(i)) for d, i in inputs)
                slot = (int(output[0]), int(output[1]))
            except (TypeError, ValueError, IndexError) as exc:
                raise InputError(f"{ewhere}: malformed slot") from exc
            table.setdefault(key, {})[slot] = \
                table.get(key, {}).get(slot, Fraction(0)) + coeff
        try:
            brackets.append(Bracket(space, arity, table))
        except ValueError as exc:
            raise InputError(f"{bwhere}: {exc}") from exc
    strictness = data.get("strictness")
    try:
        return LInftyAlgebra(space, brackets, strictness)
    except ValueError as exc:
        raise InputError(f"{where}: {exc}") from exc


def lie_to_json(mu: LieStructure) -> dict:
    constants = [{"i": i, "j": j, "k": k, "coeff": _rational_str(c)}
                 for (i, j, k), c in sorted(mu.constants.items())]
    return {"format": FORMAT_VERSION, "dim": mu.n, "constants": constants}


def lie_from_json(data, where: str = "lie") -> LieStructure:
    fmt = _expect(data, "format", where, int)
    if fmt != FORMAT_VERSION:
        raise InputError(f"{where}.format: unsupported version {fmt}")
    n = _expect(data, "dim", where, int)
    constants = {}
    for ci, cdata in enumerate(_expect(data, "constants", where, list)):
        cwhere = f"{where}.constants[{ci}]"
        i = _expect(cdata, "i", cwhere, int)
        j = _expect(cdata, "j", cwhere, int)
        k = _expect(cdata, "k", cwhere, int)
        coeff = _parse_rational(_expect(cdata, "coeff", cwhere), f"{cwhere}.coeff")
        if not i < j:
            raise InputError(f"{cwhere}: constants need i < j")
        constants[(i, j, k)] = constants.get((i, j, k), Fraction(0)) + coeff
    try:
        return LieStructure(n, constants)
    except ValueError as exc:
        raise InputError(f"{where}: {exc}") from exc


def path_from_json(data, mu0: LieStructure, where: str = "path") -> DeformationPath:
    n = mu0.n
    kind = _expect(data, "type", where, str)
    if kind == "exponential":
        gen = _expect(data, "generator", where, list)
        try:
            A = np.array([[float(Fraction(str(v))) for v in row] for row in gen])
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"{where}.generator: bad matrix entry") from exc
        if A.shape != (n, n):
            raise InputError(f"{where}.generator: expected {n}x{n}, got {A.shape}")
        base = mu0
        if "base" in data:
            base = lie_from_json(data["base"], f"{where}.base")
        return DeformationPath.exponential(base, A)
    if kind == "samples":
        times = _expect(data, "times", where, list)
        values = _expect(data, "values", where, list)
        if len(times) != len(values) or len(times) < 2:
            raise InputError(f"{where}: need matching times/values, at least 2")
        arrays = []
        for vi, vdata in enumerate(values):
            mu = lie_from_json_loose(vdata, n, f"{where}.values[{vi}]")
            arrays.append(mu)
        return DeformationPath.from_samples([float(t) for t in times], arrays)
    raise InputError(f"{where}.type: unknown path type {kind!r}")


def lie_from_json_loose(data, n: int, where: str) -> np.ndarray:
    """Sampled path entries: float coefficients allowed."""
    arr = np.zeros((n, n, n))
    for ci, cdata in enumerate(_expect(data, "constants", where, list)):
        cwhere = f"{where}.constants[{ci}]"
        i = _expect(cdata, "i", cwhere, int)
        j = _expect(cdata, "j", cwhere, int)
        k = _expect(cdata, "k", cwhere, int)
        raw = _expect(cdata, "coeff", cwhere)
        coeff = float(raw) if isinstance(raw, (int, float)) \
            else float(_parse_rational(raw, f"{cwhere}.coeff"))
        if not (0 <= i < j < n and 0 <= k < n):
            raise InputError(f"{cwhere}: index out of range")
        arr[i, j, k] += coeff
        arr[j, i, k] -= coeff
    return arr


def canonical_dumps(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def _load_json(path: str):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(raw.decode("utf-8")), raw
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def load_algebra(path: str) -> tuple[LInftyAlgebra, dict]:
    """Load an algebra file; a Lie file builds its deformation algebra."""
    data, raw = _load_json(path)
    digest = hashlib.sha256(raw).hexdigest()
    if isinstance(data, dict) and "constants" in data:
        mu = lie_from_json(data, path)
        try:
            alg = build_deformation_linfty(mu)
        except ValueError as exc:
            raise InputError(f"{path}: {exc}") from exc
        return alg, {"file": path, "sha256": digest, "kind": "lie"}
    return algebra_from_json(data, path), {"file": path, "sha256": digest,
                                           "kind": "algebra"}


def load_lie(path: str) -> tuple[LieStructure, dict]:
    data, raw = _load_json(path)
    return lie_from_json(data, path), \
        {"file": path, "sha256": hashlib.sha256(raw).hexdigest(), "kind": "lie"}


def parse_element(alg: LInftyAlgebra, spec: str, degree: int = 0) -> Element:
    """Parse "label=coeff,label=coeff" or "deg:idx=coeff" assignments."""
    coords = {}
    if spec.strip():
        for item in spec.split(","):
            if "=" not in item:
                raise InputError(f"element spec {item!r}: expected name=coeff")
            name, _, raw = item.partition("=")
            name = name.strip()
            coeff = _parse_rational(raw.strip(), f"element spec {name!r}")
            if ":" in name:
                d, _, i = name.partition(":")
                try:
                    slot = (int(d), int(i))
                except ValueError as exc:
                    raise InputError(f"element spec: bad slot {name!r}") from exc
            else:
                try:
                    slot = alg.space.slot_by_label(name)
                except KeyError as exc:
                    raise InputError(str(exc)) from exc
            if not alg.space.has_slot(slot):
                raise InputError(f"element spec: no slot {slot}")
            coords[slot] = coords.get(slot, Fraction(0)) + coeff
    elem = alg.space.element(coords)
    if not (elem.is_zero() or elem.degree() == degree):
        raise InputError(f"element spec must be homogeneous of degree {degree}")
    return elem


# -- commands --------------------------------------------------------------

def _emit(report: dict) -> None:
    sys.stdout.write(canonical_dumps(report))


def cmd_verify(args) -> int:
    alg, digest = load_algebra(args.algebra)
    report = verify_linfty(alg)
    per_n = {str(n): _rational_str(v) for n, v in report.max_violation.items()}
    _emit({"command": "verify", "inputs": digest,
           "results": {"per_n_max_violation": per_n,
                       "strictness": alg.strictness,
                       "passed": report.passed,
                       "failing_n": sorted({n for n, _ in report.failures})},
           "status": "ok" if report.passed else "obstructed"})
    return 0 if report.passed else 2


def cmd_deform(args) -> int:
    alg, digest = load_algebra(args.algebra)
    if args.norm != "max":
        raise InputError(f"unsupported norm {args.norm!r}")
    if args.strict_check:
        jreport = verify_linfty(alg)
        if not jreport.passed:
            _emit({"command": "deform", "inputs": digest,
                   "results": {"jacobi_passed": False},
                   "status": "obstructed",
                   "error": "algebra fails the Jacobi identities"})
            return 2
    h1_dim = cohomology_dim(alg, 1)
    if h1_dim != 0:
        _emit({"command": "deform", "inputs": digest,
               "results": {"cohomology_dim_degree1": h1_dim},
               "status": "obstructed",
               "error": "degree-1 cohomology does not vanish"})
        return 2
    pair = homotopy_operators(alg, 1)
    u1 = parse_element(alg, args.u1)
    series = extend_formal(alg, pair, u1, args.order)
    if args.oracle:
        literal = extend_formal(alg, pair, u1, args.order, all_compositions=True)
        oracle_ok = literal.coeffs == series.coeffs
    else:
        oracle_ok = None
    cert = coefficient_bounds(alg, series, pair.h_low_norm())
    summed = sum_series(series, t=args.t, certificate=cert)
    coeff_rows = []
    for k, c in enumerate(series.coeffs):
        coeff_rows.append({alg.space.label(s): _rational_str(v)
                           for s, v in sorted(c.coords.items())})
    results = {
        "order": series.order,
        "coefficients": coeff_rows,
        "radius": cert.radius,
        "u1_norm": float(cert.u1_norm),
        "h1_norm": float(cert.h1_norm),
        "alpha": float(cert.alpha),
        "bounds_ok": cert.all_within,
        "t": summed.t,
        "value": {alg.space.label(s): v
                  for s, v in sorted(summed.float_coords().items())},
        "residual": summed.residual,
        "tail_estimate": summed.tail_estimate,
        "within_radius": summed.within_radius,
    }
    if oracle_ok is not None:
        results["oracle_agreement"] = oracle_ok
    _emit({"command": "deform", "inputs": digest, "results": results,
           "status": "ok" if summed.within_radius else "ok-uncertified"})
    return 0


def cmd_rigidity(args) -> int:
    mu, digest = load_lie(args.lie)
    result = rigidity_check(mu)
    results = {"dim": mu.n, "rigid": result.rigid,
               "cohomology_dim_c2": result.cohomology}
    if result.pair is not None:
        results["homotopy_identity_exact"] = result.pair.is_exact
    _emit({"command": "rigidity", "inputs": digest, "results": results,
           "status": "ok" if result.rigid else "obstructed"})
    return 0 if result.rigid else 2


def cmd_transport(args) -> int:
    mu, digest = load_lie(args.lie)
    pdata, praw = _load_json(args.path)
    path = path_from_json(pdata, mu, args.path)
    result = rigidity_check(mu)
    if not result.rigid:
        _emit({"command": "transport", "inputs": digest,
               "results": {"cohomology_dim_c2": result.cohomology},
               "status": "obstructed",
               "error": "transport needs vanishing cohomology at the C2 slot"})
        return 2
    tr = parallel_transport(mu, path, steps=args.steps, pair=result.pair,
                            t_end=args.t_end)
    _emit({"command": "transport",
           "inputs": {**digest,
                      "path_sha256": hashlib.sha256(praw).hexdigest()},
           "results": {"steps": args.steps,
                       "times": list(tr.times),
                       "defects": list(tr.defects),
                       "final_defect": tr.final_defect},
           "status": "ok"})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcdeform",
        description="Deformation calculus for N-strict L-infinity algebras")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="check the Jacobi identities exactly")
    p.add_argument("algebra")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("deform",
                       help="formal Maurer-Cartan series, bounds and summation")
    p.add_argument("algebra")
    p.add_argument("--u1", required=True,
                   help='first-order direction, e.g. "x1=1/20" or "0:0=1/20"')
    p.add_argument("--order", type=int, default=40, metavar="K")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--norm", default="max", choices=["max"])
    p.add_argument("--strict-check", action="store_true",
                   help="run the Jacobi verification first")
    p.add_argument("--oracle", action="store_true",
                   help="cross-check against the all-compositions sum")
    p.set_defaults(func=cmd_deform)

    p = sub.add_parser("rigidity", help="exactness test at the C2 slot")
    p.add_argument("lie")
    p.set_defaults(func=cmd_rigidity)

    p = sub.add_parser("transport", help="parallel transport along a path")
    p.add_argument("lie")
    p.add_argument("path")
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--t-end", type=float, default=1.0)
    p.set_defaults(func=cmd_transport)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        _emit({"command": args.command, "status": "error",
               "error": str(exc)})
        return 3
    except CohomologyObstruction as exc:
        _emit({"command": args.command, "status": "obstructed",
               "error": str(exc),
               "results": {"degree": exc.degree, "dimension": exc.dimension}})
        return 2
    except DeformationError as exc:
        _emit({"command": args.command, "status": "obstructed",
               "error": str(exc)})
        return 2


if __name__ == "__main__":
    sys.exit(main())
