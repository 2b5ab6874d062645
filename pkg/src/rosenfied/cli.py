"""Command-line entry point: ``rosenfied build|verify|gen|spectra``.

Every command prints a single JSON document (or writes it to ``--out``).
Exit codes: 0 success, 1 a check failed, 2 bad input or usage, 3 inconsistent dimensions.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from .equivalence import build_auxiliary, certify, check_aux_relations
from .errors import (CertificationFailure, DimensionError, GiveUp, RosenfiedError,
                     SingularPencil, StepMismatch)
from .fiedler import (Bijection, all_bijections, assemble_algorithmic, assemble_product,
                      build_MM, ciss, corner_structure, fiedler_pencil, random_bijection)
from .matpoly import MatrixPolynomial
from .rosenbrock import SystemMatrix, random_system
from .spectra import compare_spectra, simple_eigenvectors

EXIT_OK, EXIT_FAIL, EXIT_SCHEMA, EXIT_DIMENSION = 0, 1, 2, 3
ALL_SIGMA_MAX_D = 5


class SchemaError(Exception):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class RunConfig:
    seed: int = 0
    tol_spectral: float = 1e-6
    tol_residual: float = 1e-8
    samples: int = 20
    integer_mode: bool = False


# ---------------------------------------------------------------------------
# JSON encoding of systems

def encode_complex(z):
    z = complex(z)
    return [z.real, z.imag]


def encode_matrix(mat):
    return [[encode_complex(v) for v in row] for row in np.asarray(mat)]


def _entry(value, path):
    if isinstance(value, bool):
        raise SchemaError(path, "expected a number or [re, im] pair")
    if isinstance(value, (int, float)):
        return complex(value)
    if (isinstance(value, list) and len(value) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        return complex(value[0], value[1])
    raise SchemaError(path, "expected a number or [re, im] pair")


def _matrix(value, path, shape):
    if not isinstance(value, list) or not all(isinstance(r, list) for r in value):
        raise SchemaError(path, "expected a list of rows")
    rows = [[_entry(v, f"{path}[{i}][{j}]") for j, v in enumerate(row)]
            for i, row in enumerate(value)]
    got = (len(rows), len(rows[0]) if rows else 0)
    if any(len(r) != got[1] for r in rows) or got != shape:
        raise DimensionError(f"{path}: expected {shape[0]}x{shape[1]}, got "
                             f"{[len(r) for r in rows] if rows else []} row lengths")
    return np.array(rows, dtype=np.complex128).reshape(shape)


def _coeff_list(value, path, size):
    if not isinstance(value, list):
        raise SchemaError(path, "expected a list of coefficient matrices")
    if len(value) < 2:
        raise DimensionError(f"{path}: degree must be >= 1 (need at least 2 coefficients)")
    return MatrixPolynomial([_matrix(c, f"{path}[{k}]", (size, size)) for k, c in enumerate(value)])


def _dim(doc, key):
    if key not in doc:
        raise SchemaError(key, "missing required field")
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise SchemaError(key, "expected a positive integer")
    return v


def parse_sigma(value, d, path="sigma"):
    if not isinstance(value, list) or not all(isinstance(v, int) and not isinstance(v, bool)
                                              for v in value):
        raise SchemaError(path, "expected a list of integers")
    if sorted(value) != list(range(1, d + 1)):
        raise SchemaError(path, f"{value} is not a permutation of 1..{d}")
    return Bijection(tuple(value))


def system_from_json(doc):
    """Build (system, sigma or None) from a decoded SystemFile document."""
    if not isinstance(doc, dict):
        raise SchemaError("$", "expected a JSON object")
    n, m = _dim(doc, "n"), _dim(doc, "m")
    for key in ("A", "B", "C", "D"):
        if key not in doc:
            raise SchemaError(key, "missing required field")
    A = _coeff_list(doc["A"], "A", n)
    D = _coeff_list(doc["D"], "D", m)
    B = _matrix(doc["B"], "B", (n, m))
    C = _matrix(doc["C"], "C", (m, n))
    sys_ = SystemMatrix(A, B, C, D)
    sigma = parse_sigma(doc["sigma"], sys_.d) if doc.get("sigma") is not None else None
    return sys_, sigma


def system_to_json(sys_, sigma=None):
    doc = {
        "n": sys_.n,
        "m": sys_.m,
        "A": [encode_matrix(c) for c in sys_.A.coeffs],
        "B": encode_matrix(sys_.B),
        "C": encode_matrix(sys_.C),
        "D": [encode_matrix(c) for c in sys_.D.coeffs],
    }
    if sigma is not None:
        doc["sigma"] = list(sigma.images)
    return doc


def load_system(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON ({exc})") from None
    return system_from_json(doc)


# ---------------------------------------------------------------------------
# commands

def _sigmas(args, sys_, file_sigma, rng):
    d = sys_.d
    if args.all_sigma:
        if d > ALL_SIGMA_MAX_D:
            raise SchemaError("--all-sigma", f"limited to d <= {ALL_SIGMA_MAX_D} (d = {d}); use --random")
        return list(all_bijections(d))
    if args.random:
        return [random_bijection(d, rng) for _ in range(args.random)]
    if args.sigma:
        return [parse_sigma(args.sigma, d, "--sigma")]
    if file_sigma is not None:
        return [file_sigma]
    return [Bijection.descending(d)]


def cmd_build(args, cfg):
    sys_, file_sigma = load_system(args.file)
    sigma = _sigmas(args, sys_, file_sigma, np.random.default_rng(cfg.seed))[0]
    ms = build_MM(sys_, inject_typo=args.inject_typo)
    L = fiedler_pencil(sys_, sigma, ms)
    corners = corner_structure(sys_, sigma, ms, strict=False)
    report = {
        "sigma": list(sigma.images),
        "ciss": [list(p) for p in ciss(sigma).pairs],
        "X": encode_matrix(L.X),
        "Y": encode_matrix(L.Y),
        "M_sigma": encode_matrix(-L.Y),
        "corner_structure": corners.to_dict(),
    }
    return report, EXIT_OK


def _max_abs(a):
    return float(np.max(np.abs(a))) if np.size(a) else 0.0


def _check_commutativity(ms, atol):
    worst_comm, worst_det = 0.0, 0.0
    mats = ms.MM
    d = len(mats) - 1
    for i in range(d):
        for j in range(i + 2, d):
            worst_comm = max(worst_comm, _max_abs(mats[i] @ mats[j] - mats[j] @ mats[i]))
    for i in range(1, d):
        worst_det = max(worst_det, abs(abs(np.linalg.det(mats[i])) - 1.0))
    ok = worst_comm <= atol and worst_det <= 1e-8
    return {"passed": bool(ok), "max_commutator": worst_comm, "max_det_deviation": worst_det}


def verify_sigma(sys_, sigma, ms, fam, cfg, atol):
    out = {"sigma": list(sigma.images)}
    dev = _max_abs(assemble_algorithmic(sys_, sigma) - assemble_product(ms, sigma))
    out["algorithmic_vs_product"] = {"passed": dev <= atol, "max_deviation": dev}

    corners = corner_structure(sys_, sigma, ms, strict=False)
    out["corner_structure"] = {"passed": corners.exact_match, **corners.to_dict(),
                               "offending": [list(o) for o in corners.offending]}

    try:
        cert = certify(sys_, sigma, ms, fam, atol=atol, tol_ratio=cfg.tol_residual)
        out["certificate"] = {"passed": True, **cert.to_dict()}
    except (CertificationFailure, StepMismatch) as exc:
        out["certificate"] = {"passed": False, "error": str(exc)}

    try:
        rep = compare_spectra(sys_, sigma, cfg.tol_spectral, pencil=fiedler_pencil(sys_, sigma, ms),
                              strict=False)
        out["spectra"] = {"passed": rep.passed, "max_matched_distance": rep.max_matched_distance,
                          "max_relative_distance": rep.max_relative_distance,
                          "count": len(rep.pencil_eigs), "oracle_count": len(rep.oracle_eigs)}
    except (SingularPencil, RosenfiedError) as exc:
        out["spectra"] = {"passed": False, "error": str(exc)}
    out["passed"] = all(v["passed"] for k, v in out.items() if isinstance(v, dict))
    return out


def cmd_verify(args, cfg):
    sys_, file_sigma = load_system(args.file)
    rng = np.random.default_rng(cfg.seed)
    sigmas = _sigmas(args, sys_, file_sigma, rng)
    integer = cfg.integer_mode or sys_.is_integer_valued()
    atol = 0.0 if integer else cfg.tol_residual
    ms = build_MM(sys_, inject_typo=args.inject_typo)
    fam = build_auxiliary(sys_)
    rel = check_aux_relations(fam, ms, atol=atol)
    report = {
        "integer_mode": integer,
        "tol_spectral": cfg.tol_spectral,
        "tol_residual": cfg.tol_residual,
        "commutativity": _check_commutativity(ms, atol),
        "aux_relations": {"passed": rel.ok, **rel.to_dict()},
        "sigmas": [verify_sigma(sys_, s, ms, fam, cfg, atol) for s in sigmas],
    }
    passed = (report["commutativity"]["passed"] and report["aux_relations"]["passed"]
              and all(s["passed"] for s in report["sigmas"]))
    report["passed"] = bool(passed)
    return report, EXIT_OK if passed else EXIT_FAIL


def cmd_gen(args, cfg):
    rng = np.random.default_rng(cfg.seed)
    sys_ = random_system(args.n, args.m, args.dA, args.dD, rng, integer=args.integer)
    return system_to_json(sys_), EXIT_OK


def cmd_spectra(args, cfg):
    sys_, file_sigma = load_system(args.file)
    sigma = _sigmas(args, sys_, file_sigma, np.random.default_rng(cfg.seed))[0]
    rep = compare_spectra(sys_, sigma, cfg.tol_spectral, strict=False)
    rep.eigenvectors, skipped = simple_eigenvectors(sys_)
    doc = {"sigma": list(sigma.images), **rep.to_dict(),
           "skipped": [[encode_complex(z), why] for z, why in skipped]}
    return doc, EXIT_OK if rep.passed else EXIT_FAIL


# ---------------------------------------------------------------------------
# argument handling

def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text}")
    return v


def _sigma_list(values):
    out = []
    for v in values:
        out.extend(int(t) for t in v.replace(",", " ").split())
    return out


def build_parser():
    parser = argparse.ArgumentParser(prog="rosenfied",
                                     description="Fiedler pencils of Rosenbrock system matrices")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--tol", type=float, default=None, help="spectral matching tolerance")
    parser.add_argument("--out", default=None, help="write the JSON report here instead of stdout")
    sub = parser.add_subparsers(dest="command", required=True)

    def sigma_flags(p, multi):
        group = p.add_mutually_exclusive_group()
        group.add_argument("--sigma", nargs="+", default=None,
                           help="images σ(0) .. σ(d-1), e.g. --sigma 1 3 2")
        if multi:
            group.add_argument("--all-sigma", action="store_true")
            group.add_argument("--random", type=_positive_int, default=0, metavar="K")
        p.add_argument("--inject-typo", action="store_true", help=argparse.SUPPRESS)

    for name in ("build", "verify", "spectra"):
        p = sub.add_parser(name)
        p.add_argument("file")
        sigma_flags(p, multi=(name == "verify"))

    g = sub.add_parser("gen")
    for dim in ("n", "m", "dA", "dD"):
        g.add_argument(dim, type=_positive_int)
    g.add_argument("--integer", action="store_true")

    # allow shared options after the subcommand too
    for p in sub.choices.values():
        p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
        p.add_argument("--tol", type=float, default=argparse.SUPPRESS)
        p.add_argument("--out", default=argparse.SUPPRESS)
    return parser


def _config(args):
    tol = args.tol
    if tol is None and os.environ.get("ROSENFIED_TOL"):
        tol = float(os.environ["ROSENFIED_TOL"])
    cfg = RunConfig(seed=args.seed, integer_mode=getattr(args, "integer", False))
    if tol is not None:
        if not tol > 0:
            raise SchemaError("--tol", "tolerance must be positive")
        cfg.tol_spectral = tol
    return cfg


COMMANDS = {"build": cmd_build, "verify": cmd_verify, "gen": cmd_gen, "spectra": cmd_spectra}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    for attr in ("all_sigma", "random", "sigma", "inject_typo"):
        if not hasattr(args, attr):
            setattr(args, attr, None)
    if args.sigma:
        try:
            args.sigma = _sigma_list(args.sigma)
        except ValueError:
            parser.error("--sigma expects integers")
    try:
        cfg = _config(args)
        report, code = COMMANDS[args.command](args, cfg)
    except SchemaError as exc:
        print(f"rosenfied: schema error at {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except DimensionError as exc:
        print(f"rosenfied: dimension mismatch: {exc}", file=sys.stderr)
        return EXIT_DIMENSION
    except OSError as exc:
        print(f"rosenfied: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except GiveUp as exc:
        print(f"rosenfied: {exc}", file=sys.stderr)
        return EXIT_FAIL
    text = json.dumps(report, indent=1)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
