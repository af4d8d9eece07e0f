"""Partial-transposition test and range-span diagnostic."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from . import matcore
from .errors import EmptyCandidateSet
from .matcore import DEFAULT_TOL, Tolerances


@dataclass(frozen=True)
class PptReport:
    min_eigenvalue: float
    verdict: str
    spectrum: Tuple[float, ...]


def ppt_check(rho, tol: Tolerances = DEFAULT_TOL) -> PptReport:
    """Spectrum of ``rho^{T_B}``; ``"npt"`` certifies entanglement.

    ``"ppt"`` implies separability only when ``dimA * dimB <= 6``.
    """
    T = matcore.partial_transpose(rho.matrix, rho.dimA, rho.dimB)
    w, _ = matcore.herm_eig(T)
    npt = w[0] < -matcore.psd_slack(T, tol)
    return PptReport(float(w[0]), "npt" if npt else "ppt", tuple(float(x) for x in w))


def _numerical_rank(A, rank_tol):
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    return int(np.sum(s > rank_tol * s[0])) if s[0] > 0 else 0


def range_span_check(rho, candidates, tol: Tolerances = DEFAULT_TOL) -> dict:
    """Whether the candidates (and their partial conjugates) have enough rank.

    Compares the numerical rank of ``{|e,f>}`` with that of ``rho`` and the
    rank of ``{|e,f*>}`` with that of ``rho^{T_B}``. This is a diagnostic,
    never a separability certificate. Candidates outside the range of
    ``rho`` are ignored, so an empty filtered set spans nothing.
    """
    if len(candidates) == 0:
        raise EmptyCandidateSet("no candidate product vectors")
    M = rho.matrix
    U = matcore.range_basis(M, tol)
    keep = [
        v for v in candidates.vectors
        if 1.0 - np.sum(np.abs(U.conj().T @ v.joint) ** 2) <= tol.rank_tol
    ]
    if not keep:
        return {"spans_range": False, "spans_pt_range": False}
    J = np.array([v.joint for v in keep]).T
    C = np.array([v.partial_conjugate() for v in keep]).T
    T = matcore.partial_transpose(M, rho.dimA, rho.dimB)
    rank_rho = _numerical_rank(M, tol.rank_tol)
    rank_pt = _numerical_rank(T, tol.rank_tol)
    return {
        "spans_range": _numerical_rank(J, tol.rank_tol) >= rank_rho,
        "spans_pt_range": _numerical_rank(C, tol.rank_tol) >= rank_pt,
    }
