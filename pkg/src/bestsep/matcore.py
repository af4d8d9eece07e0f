"""
Dense Hermitian linear algebra with explicit tolerances.

Every operator in the package is a dense ``complex128`` array of shape
``(d, d)``. Composite indices follow the convention ``i * dimB + k`` for
subsystem indices ``i`` (A) and ``k`` (B).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import numpy.typing as npt

from .errors import DimensionMismatch, NoConvergence, NotHermitian, NotNormalized, NotPsd

ComplexMatrix = npt.NDArray[np.complex128]

HERMITIAN_TOL = 1e-10


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds used throughout the package.

    Parameters
    ----------
    psd_tol : float
        Allowed negative slack of the smallest eigenvalue, relative to
        ``max(1, max|M_ij|)``.
    rank_tol : float
        Relative eigenvalue cutoff (``lambda_i > rank_tol * lambda_max``)
        defining the range of an operator.
    conv_tol : float
        A sweep stops once a full pass gains less trace than this.
    verdict_tol : float
        ``Tr(delta_rho)`` at or below this value is reported as separable.
    """

    psd_tol: float = 1e-10
    rank_tol: float = 1e-9
    conv_tol: float = 1e-8
    verdict_tol: float = 1e-4

    def __post_init__(self):
        for name in ("psd_tol", "rank_tol", "conv_tol", "verdict_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.rank_tol >= 1:
            raise ValueError("rank_tol must be < 1")
        if self.verdict_tol < self.conv_tol:
            raise ValueError("verdict_tol must be >= conv_tol")


DEFAULT_TOL = Tolerances()


class HermitianEig(NamedTuple):
    eigenvalues: npt.NDArray[np.float64]
    eigenvectors: ComplexMatrix


def as_matrix(M) -> ComplexMatrix:
    M = np.asarray(M, dtype=np.complex128)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {M.shape}")
    return M


def max_abs(M) -> float:
    return float(np.max(np.abs(M))) if M.size else 0.0


def check_hermitian(M, tol: float = HERMITIAN_TOL) -> ComplexMatrix:
    M = as_matrix(M)
    dev = max_abs(M - M.conj().T)
    if dev > tol:
        raise NotHermitian(f"max |M - M^H| = {dev:.3e} exceeds {tol:.1e}")
    return M


def herm_eig(M) -> HermitianEig:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    Raises
    ------
    NotHermitian
        If ``max|M - M^H| > 1e-10``.
    NoConvergence
        If LAPACK fails to converge.
    """
    M = check_hermitian(M)
    try:
        w, V = np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    return HermitianEig(w, V)


def psd_slack(M, tol: Tolerances = DEFAULT_TOL) -> float:
    return tol.psd_tol * max(1.0, max_abs(M))


def is_psd(M, tol: Tolerances = DEFAULT_TOL) -> bool:
    """True iff the smallest eigenvalue is at least ``-psd_tol * max(1, |M|_max)``."""
    w, _ = herm_eig(M)
    return bool(w.size == 0 or w[0] >= -psd_slack(M, tol))


def _range_mask(w, rank_tol: float):
    top = w[-1] if w.size else 0.0
    if top <= 0:
        return np.zeros(w.shape, dtype=bool)
    return w > rank_tol * top


def range_basis(M, tol: Tolerances = DEFAULT_TOL) -> ComplexMatrix:
    """Orthonormal columns spanning the numerical range of a PSD matrix."""
    w, V = herm_eig(M)
    return V[:, _range_mask(w, tol.rank_tol)]


def pinv_on_range(M, tol: Tolerances = DEFAULT_TOL) -> ComplexMatrix:
    """Inverse of ``M`` restricted to its range.

    Returns ``sum over lambda_i > rank_tol * lambda_max of v_i v_i^H / lambda_i``.
    """
    w, V = herm_eig(M)
    if w.size and w[0] < -psd_slack(M, tol):
        raise NotPsd(f"smallest eigenvalue {w[0]:.3e}")
    keep = _range_mask(w, tol.rank_tol)
    Vk = V[:, keep]
    return (Vk / w[keep]) @ Vk.conj().T


def range_residual(M, psi, tol: Tolerances = DEFAULT_TOL) -> float:
    """Norm of the component of ``psi`` orthogonal to the range of ``M``."""
    U = range_basis(M, tol)
    psi = np.asarray(psi, dtype=np.complex128)
    inside = np.sum(np.abs(U.conj().T @ psi) ** 2)
    return float(np.sqrt(max(np.vdot(psi, psi).real - inside, 0.0)))


def in_range(M, psi, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Whether the unit vector ``psi`` lies in the range of the PSD matrix ``M``."""
    psi = np.asarray(psi, dtype=np.complex128)
    if abs(np.linalg.norm(psi) - 1.0) > 1e-10:
        raise NotNormalized("psi must be a unit vector")
    if not is_psd(M, tol):
        raise NotPsd("in_range needs a positive semidefinite matrix")
    return range_residual(M, psi, tol) <= np.sqrt(tol.rank_tol)


def kron(A, B) -> ComplexMatrix:
    return np.kron(np.asarray(A, dtype=np.complex128), np.asarray(B, dtype=np.complex128))


def _split(M, dimA: int, dimB: int):
    M = as_matrix(M)
    if M.shape[0] != dimA * dimB:
        raise DimensionMismatch(f"matrix of size {M.shape[0]} is not {dimA}x{dimB}")
    return M.reshape(dimA, dimB, dimA, dimB)


def partial_transpose(M, dimA: int, dimB: int) -> ComplexMatrix:
    """Transpose on subsystem B: entry ((i,k),(j,l)) moves to ((i,l),(j,k))."""
    T = _split(M, dimA, dimB)
    return T.transpose(0, 3, 2, 1).reshape(dimA * dimB, dimA * dimB)


def partial_trace(M, dimA: int, dimB: int, keep: str = "A") -> ComplexMatrix:
    """Reduced operator on the kept subsystem (``"A"`` or ``"B"``)."""
    T = _split(M, dimA, dimB)
    if keep == "A":
        return np.einsum("ikjk->ij", T)
    if keep == "B":
        return np.einsum("ikil->kl", T)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def von_neumann_entropy(M, tol: Tolerances = DEFAULT_TOL) -> float:
    """Entropy ``-sum lambda log2 lambda`` in bits of a normalized PSD operator."""
    M = getattr(M, "matrix", M)
    w, _ = herm_eig(M)
    if w.size and w[0] < -psd_slack(M, tol):
        raise NotPsd(f"smallest eigenvalue {w[0]:.3e}")
    if abs(w.sum() - 1.0) > 1e-8:
        raise NotNormalized(f"trace {w.sum():.12g} differs from 1")
    p = w[w > 0]
    return float(max(-np.sum(p * np.log2(p)), 0.0))
