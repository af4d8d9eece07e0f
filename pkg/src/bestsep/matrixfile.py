"""
JSON matrix files.

A file holds ``dimA``, ``dimB``, an optional ``label`` and ``matrix``, a
list of rows whose entries are ``[re, im]`` pairs. Numbers are written
with 17 significant digits so a write/read cycle is bit-exact.
"""

from __future__ import annotations

import json
from typing import Optional, Tuple

import numpy as np

from .errors import DimensionMismatch, MalformedFile
from .matcore import DEFAULT_TOL, Tolerances
from .states import DensityOperator

TRACE_TOL = 1e-6


def _num(x: float) -> str:
    return format(float(x) + 0.0, ".17g")


def format_matrix(M, indent: str = "    ") -> str:
    """JSON text for a complex matrix as rows of ``[re, im]`` pairs."""
    M = np.asarray(M, dtype=np.complex128)
    rows = []
    for row in M:
        pairs = ", ".join(f"[{_num(z.real)}, {_num(z.imag)}]" for z in row)
        rows.append(f"{indent}[{pairs}]")
    return "[\n" + ",\n".join(rows) + "\n" + indent[:-2] + "]"


def format_vector(v) -> str:
    v = np.asarray(v, dtype=np.complex128)
    return "[" + ", ".join(f"[{_num(z.real)}, {_num(z.imag)}]" for z in v) + "]"


def dumps(M, dimA: int, dimB: int, label: Optional[str] = None) -> str:
    M = getattr(M, "matrix", M)
    head = [f'  "dimA": {int(dimA)}', f'  "dimB": {int(dimB)}']
    if label is not None:
        head.append(f'  "label": {json.dumps(label)}')
    head.append(f'  "matrix": {format_matrix(M)}')
    return "{\n" + ",\n".join(head) + "\n}\n"


def write(path, rho: DensityOperator, label: Optional[str] = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(rho.matrix, rho.dimA, rho.dimB, label))


def parse_matrix(data) -> np.ndarray:
    """Complex array from nested ``[re, im]`` lists."""
    try:
        A = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise MalformedFile(f"matrix entries must be [re, im] number pairs: {exc}") from exc
    if A.ndim < 2 or A.shape[-1] != 2:
        raise MalformedFile("matrix entries must be [re, im] pairs")
    return A[..., 0] + 1j * A[..., 1]


def loads(
    text: str,
    allow_unnormalized: bool = False,
    tol: Tolerances = DEFAULT_TOL,
) -> Tuple[DensityOperator, Optional[str]]:
    """Parse and validate a matrix file.

    Raises
    ------
    MalformedFile
        Bad JSON, missing keys or inconsistent dimensions.
    NotHermitian, NotPsd, NotNormalized
        The matrix is not a valid density operator. The trace must be 1
        within ``1e-6`` unless ``allow_unnormalized`` is set.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedFile(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or not {"dimA", "dimB", "matrix"} <= doc.keys():
        raise MalformedFile("expected an object with dimA, dimB and matrix")
    dimA, dimB = doc["dimA"], doc["dimB"]
    if not all(isinstance(d, int) and not isinstance(d, bool) and d >= 1 for d in (dimA, dimB)):
        raise MalformedFile("dimA and dimB must be positive integers")
    M = parse_matrix(doc["matrix"])
    d = dimA * dimB
    if M.shape != (d, d):
        raise MalformedFile(f"matrix shape {M.shape} does not match {dimA}x{dimB}")
    label = doc.get("label")
    if label is not None and not isinstance(label, str):
        raise MalformedFile("label must be text")
    try:
        rho = DensityOperator(M, dimA, dimB, tol)
    except DimensionMismatch as exc:
        raise MalformedFile(str(exc)) from exc
    if not allow_unnormalized:
        rho.check_normalized(TRACE_TOL)
    return rho, label


def read(path, allow_unnormalized: bool = False, tol: Tolerances = DEFAULT_TOL):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise MalformedFile(f"cannot read {path}: {exc}") from exc
    return loads(text, allow_unnormalized, tol)
