"""
Command-line interface.

Subcommands ``bsa``, ``werner-sweep``, ``ppt`` and ``gen``. Exit codes: 0 on
success, 1 for malformed input or bad parameters, 2 when the matrix fails
validation, 3 when too few product vectors could be found in its range.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Sequence

import numpy as np

from . import matrixfile, states
from .bsa import bsa, decompose_2x2
from .criteria import ppt_check
from .errors import (
    CandidateGenerationExhausted,
    DimensionMismatch,
    MalformedFile,
    NotHermitian,
    NotNormalized,
    NotPsd,
    OutOfRange,
    RankDeficiencyViolation,
)
from .matcore import DEFAULT_TOL, Tolerances

EXIT_OK = 0
EXIT_MALFORMED = 1
EXIT_INVALID = 2
EXIT_EXHAUSTED = 3

CSV_HEADER = "x,delta_trace,lambda,entanglement_bits,ppt_min_eig,sweeps,num_candidates,seed"


class UsageError(Exception):
    """Bad command-line parameters (exit 1)."""


def _g10(x: float) -> str:
    return format(float(x) + 0.0, ".10g")


def _tolerances(args) -> Tolerances:
    try:
        return Tolerances(
            DEFAULT_TOL.psd_tol, DEFAULT_TOL.rank_tol, args.conv_tol, args.verdict_tol
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _emit(text: str, output: Optional[str]) -> None:
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(args, tol):
    rho, label = matrixfile.read(args.input, args.allow_unnormalized, tol)
    if rho.trace <= 0:
        raise NotNormalized("matrix has zero trace")
    return rho, label


def bsa_report(rho, label, num_candidates, seed, tol) -> str:
    """JSON report of a run on ``rho``, which may be unnormalized.

    The algorithm runs on ``rho / Tr(rho)``; ``delta_trace`` refers to that
    normalized state, while the reported matrices are scaled back so that
    ``rho_s_star + delta_rho`` reproduces the input.
    """
    t = rho.trace
    res = bsa(rho.normalized(), num_candidates, seed, tol)
    items = [
        ("label", json.dumps(label)),
        ("dimA", str(rho.dimA)),
        ("dimB", str(rho.dimB)),
        ("input_trace", matrixfile._num(t)),
        ("num_candidates", str(num_candidates)),
        ("seed", str(seed)),
        ("verdict", json.dumps(str(res.verdict))),
        ("delta_trace", matrixfile._num(res.delta_trace)),
        ("sweeps", str(res.sweeps)),
        ("active_set_size", str(len(res.active_set))),
        ("ppt_min_eig", matrixfile._num(res.diagnostics["ppt_min_eig"])),
        ("rho_s_star", matrixfile.format_matrix(res.rho_s_star.matrix * t)),
        ("delta_rho", matrixfile.format_matrix(res.delta_rho.matrix * t)),
    ]
    if (rho.dimA, rho.dimB) == (2, 2):
        try:
            dec = decompose_2x2(res, tol)
        except RankDeficiencyViolation as exc:
            items.append(("decomposition_error", json.dumps(str(exc))))
        else:
            vec = "null" if dec.entangled_vector is None else matrixfile.format_vector(dec.entangled_vector)
            rs = "null" if dec.rho_s is None else matrixfile.format_matrix(dec.rho_s.matrix, " " * 8)
            items.append((
                "decomposition",
                "{\n"
                f'    "lambda": {matrixfile._num(dec.lam)},\n'
                f'    "entanglement_bits": {matrixfile._num(dec.entanglement_bits)},\n'
                f'    "entangled_vector": {vec},\n'
                f'    "rho_s": {rs}\n'
                "  }",
            ))
    body = ",\n".join(f'  "{k}": {v}' for k, v in items)
    return "{\n" + body + "\n}\n"


def cmd_bsa(args) -> int:
    tol = _tolerances(args)
    rho, label = _load(args, tol)
    _emit(bsa_report(rho, label, args.candidates, args.seed, tol), args.output)
    return EXIT_OK


def sweep_point(x: float, num_candidates: int, seed: int, tol: Tolerances = DEFAULT_TOL) -> str:
    """One CSV row for the Werner state with singlet fraction ``x``."""
    rho = states.werner(x)
    res = bsa(rho, num_candidates, seed, tol)
    dt = _g10(res.delta_trace)
    lam = 1.0 - float(dt)
    try:
        bits = decompose_2x2(res, tol).entanglement_bits
    except RankDeficiencyViolation:
        bits = float("nan")
    return ",".join([
        _g10(x), dt, _g10(lam), _g10(bits), _g10(res.diagnostics["ppt_min_eig"]),
        str(res.sweeps), str(num_candidates), str(seed),
    ])


def _sweep_job(job):
    return sweep_point(*job)


def werner_sweep(x_min=0.0, x_max=1.0, steps=50, num_candidates=500, seed=0,
                 tol: Tolerances = DEFAULT_TOL, workers: int = 1) -> List[str]:
    """CSV lines (header first) for an evenly spaced grid of singlet fractions.

    Point ``i`` uses seed ``seed + i`` so the output does not depend on
    ``workers``.
    """
    if not (0.0 <= x_min < x_max <= 1.0) or steps < 2:
        raise UsageError("need 0 <= x_min < x_max <= 1 and steps >= 2")
    if num_candidates < 1:
        raise UsageError("num_candidates must be >= 1")
    xs = np.linspace(x_min, x_max, steps)
    jobs = [(float(x), num_candidates, seed + i, tol) for i, x in enumerate(xs)]
    if workers <= 1:
        rows = [_sweep_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_job, jobs))
    order = np.argsort(xs, kind="stable")
    return [CSV_HEADER] + [rows[i] for i in order]


def cmd_werner_sweep(args) -> int:
    tol = _tolerances(args)
    lines = werner_sweep(args.x_min, args.x_max, args.steps, args.candidates,
                         args.seed, tol, args.workers)
    _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def cmd_ppt(args) -> int:
    tol = _tolerances(args)
    rho, _ = _load(args, tol)
    rep = ppt_check(rho, tol)
    spectrum = ", ".join(matrixfile._num(w) for w in rep.spectrum)
    text = (
        "{\n"
        f'  "verdict": "{rep.verdict}",\n'
        f'  "min_eigenvalue": {matrixfile._num(rep.min_eigenvalue)},\n'
        f'  "spectrum": [{spectrum}]\n'
        "}\n"
    )
    _emit(text, args.output)
    return EXIT_OK


def cmd_gen(args) -> int:
    kind = args.kind
    try:
        if kind == "werner":
            if args.x is None:
                raise UsageError("werner needs --x")
            rho, label = states.werner(args.x), f"werner x={args.x:g}"
        elif kind == "singlet":
            rho, label = states.werner(1.0), "singlet"
        elif kind == "random":
            rank = args.rank if args.rank is not None else args.dim_a * args.dim_b
            rho = states.random_density(args.dim_a, args.dim_b, rank, args.seed)
            label = f"random rank={rank} seed={args.seed}"
        else:
            rho = states.random_separable(args.dim_a, args.dim_b, args.terms, args.seed)
            label = f"separable terms={args.terms} seed={args.seed}"
    except (OutOfRange, DimensionMismatch, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    _emit(matrixfile.dumps(rho.matrix, rho.dimA, rho.dimB, label), args.output)
    return EXIT_OK


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="bestsep", description="Best separable approximation of bipartite density matrices"
    )
    sub = p.add_subparsers(dest="command", required=True)

    tol_args = argparse.ArgumentParser(add_help=False)
    tol_args.add_argument("--verdict-tol", type=float, default=DEFAULT_TOL.verdict_tol,
                          help="separable when Tr(delta_rho) is at most this (default %(default)g)")
    tol_args.add_argument("--conv-tol", type=float, default=DEFAULT_TOL.conv_tol,
                          help="stop once a pass gains less trace (default %(default)g)")
    tol_args.add_argument("--output", "-o", help="write to this file instead of stdout")

    run_args = argparse.ArgumentParser(add_help=False)
    run_args.add_argument("--candidates", type=_positive_int, default=500,
                          help="number of random product vectors (default %(default)s)")
    run_args.add_argument("--seed", type=int, default=0, help="random seed (default %(default)s)")

    file_args = argparse.ArgumentParser(add_help=False)
    file_args.add_argument("input", help="matrix file (JSON)")
    file_args.add_argument("--allow-unnormalized", action="store_true",
                           help="accept a trace different from 1 and rescale")

    s = sub.add_parser("bsa", parents=[file_args, run_args, tol_args],
                       help="best separable approximation of a matrix file")
    s.set_defaults(func=cmd_bsa)

    s = sub.add_parser("werner-sweep", parents=[run_args, tol_args],
                       help="CSV of Tr(delta_rho) over Werner states")
    s.add_argument("--x-min", type=float, default=0.0)
    s.add_argument("--x-max", type=float, default=1.0)
    s.add_argument("--steps", type=int, default=50)
    s.add_argument("--workers", type=_positive_int, default=os.cpu_count() or 1,
                   help="worker processes (default: CPU count)")
    s.set_defaults(func=cmd_werner_sweep)

    s = sub.add_parser("ppt", parents=[file_args, tol_args], help="partial transposition test")
    s.set_defaults(func=cmd_ppt)

    s = sub.add_parser("gen", help="write a matrix file")
    s.add_argument("kind", choices=["werner", "random", "separable", "singlet"])
    s.add_argument("--x", type=float, help="singlet fraction for werner")
    s.add_argument("--dim-a", type=_positive_int, default=2)
    s.add_argument("--dim-b", type=_positive_int, default=2)
    s.add_argument("--rank", type=int, help="rank for random (default: full)")
    s.add_argument("--terms", type=int, default=4, help="product terms for separable")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--output", "-o", help="write to this file instead of stdout")
    s.set_defaults(func=cmd_gen)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_MALFORMED if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (MalformedFile, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except (NotHermitian, NotPsd, NotNormalized) as exc:
        print(f"invalid matrix: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except CandidateGenerationExhausted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EXHAUSTED


if __name__ == "__main__":
    sys.exit(main())
