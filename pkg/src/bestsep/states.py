"""
Density operators, product vectors and the samplers that produce them.

Basis ordering is the computational one, ``|00>, |01>, |10>, |11>`` for two
qubits, with the composite index ``i * dimB + k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence, Union

import numpy as np

from . import _kernels, matcore
from .errors import DimensionMismatch, NotNormalized, NotPsd, OutOfRange
from .matcore import DEFAULT_TOL, ComplexMatrix, Tolerances

RngLike = Union[np.random.Generator, int, None]

# below this modulus a component is treated as zero when fixing the phase
_PHASE_EPS = 1e-12


def _frozen(a):
    a = np.array(a, dtype=np.complex128)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian PSD operator on ``C^dimA (x) C^dimB``, not necessarily normalized.

    The stored matrix is the Hermitian part of the input, read-only.
    """

    matrix: ComplexMatrix
    dimA: int
    dimB: int
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False, compare=False)

    def __post_init__(self):
        M = matcore.check_hermitian(self.matrix)
        if M.shape[0] != self.dimA * self.dimB or self.dimA < 1 or self.dimB < 1:
            raise DimensionMismatch(
                f"matrix of size {M.shape[0]} does not match {self.dimA}x{self.dimB}"
            )
        M = 0.5 * (M + M.conj().T)
        if not matcore.is_psd(M, self.tol):
            raise NotPsd("density operator must be positive semidefinite")
        object.__setattr__(self, "matrix", _frozen(M))

    @property
    def dim(self) -> int:
        return self.dimA * self.dimB

    @cached_property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def is_normalized(self, atol: float = 1e-8) -> bool:
        return abs(self.trace - 1.0) <= atol

    def check_normalized(self, atol: float = 1e-8) -> "DensityOperator":
        if not self.is_normalized(atol):
            raise NotNormalized(f"trace {self.trace:.12g} differs from 1 by more than {atol:g}")
        return self

    def normalized(self) -> "DensityOperator":
        return DensityOperator(self.matrix / self.trace, self.dimA, self.dimB, self.tol)

    def expectation(self, psi) -> float:
        psi = np.asarray(psi, dtype=np.complex128)
        return float(np.vdot(psi, self.matrix @ psi).real)


def _canonical_phase(v):
    v = np.asarray(v, dtype=np.complex128)
    nz = np.flatnonzero(np.abs(v) > _PHASE_EPS)
    if nz.size:
        c = v[nz[0]]
        v = v * (abs(c) / c)
    return v


@dataclass(frozen=True)
class ProductVector:
    """Unit product vector ``|e> (x) |f>`` with canonical phases.

    The first non-negligible component of each factor is made real and
    non-negative, so equal projectors give equal objects.
    """

    e: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.e, dtype=np.complex128).ravel()
        f = np.asarray(self.f, dtype=np.complex128).ravel()
        ne, nf = np.linalg.norm(e), np.linalg.norm(f)
        if ne == 0 or nf == 0:
            raise ValueError("product vector factors must be nonzero")
        object.__setattr__(self, "e", _frozen(_canonical_phase(e / ne)))
        object.__setattr__(self, "f", _frozen(_canonical_phase(f / nf)))

    @property
    def dimA(self) -> int:
        return self.e.shape[0]

    @property
    def dimB(self) -> int:
        return self.f.shape[0]

    @cached_property
    def joint(self) -> np.ndarray:
        return _frozen(np.kron(self.e, self.f))

    def projector(self) -> ComplexMatrix:
        v = self.joint
        return np.outer(v, v.conj())

    def partial_conjugate(self) -> np.ndarray:
        """The vector ``|e> (x) |f*>`` with B conjugated in the computational basis."""
        return np.kron(self.e, self.f.conj())


@dataclass
class CandidateSet:
    """Ordered product vectors with nonnegative weights."""

    vectors: list
    weights: np.ndarray = None

    def __post_init__(self):
        self.vectors = list(self.vectors)
        if self.weights is None:
            self.weights = np.zeros(len(self.vectors))
        self.weights = np.asarray(self.weights, dtype=float).copy()
        if self.weights.shape != (len(self.vectors),):
            raise ValueError("weights and vectors must have equal lengths")
        if np.any(self.weights < 0):
            raise ValueError("weights must be nonnegative")

    def __len__(self):
        return len(self.vectors)

    def joint_matrix(self) -> np.ndarray:
        """Rows are the joint vectors, shape ``(n, dimA*dimB)``."""
        if not self.vectors:
            return np.zeros((0, 0), dtype=np.complex128)
        return np.array([v.joint for v in self.vectors])

    def operator(self) -> ComplexMatrix:
        """``sum_a weight_a |e_a f_a><e_a f_a|``."""
        Psi = self.joint_matrix()
        return (Psi.T * self.weights) @ Psi.conj()

    def pruned(self, threshold: float = 0.0) -> "CandidateSet":
        keep = [i for i, w in enumerate(self.weights) if w > threshold]
        return CandidateSet([self.vectors[i] for i in keep], self.weights[keep])


def werner(x: float) -> DensityOperator:
    """Two-qubit state mixing a fraction ``x`` of the singlet with white noise."""
    if not 0.0 <= x <= 1.0:
        raise OutOfRange(f"singlet fraction must lie in [0, 1], got {x}")
    M = np.diag([(1 - x) / 4, (1 + x) / 4, (1 + x) / 4, (1 - x) / 4]).astype(np.complex128)
    M[1, 2] = M[2, 1] = -x / 2
    return DensityOperator(M, 2, 2)


def singlet_vector() -> np.ndarray:
    return np.array([0.0, 1.0, -1.0, 0.0], dtype=np.complex128) / np.sqrt(2.0)


def _haar_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return z / np.linalg.norm(z)


def random_product_vector(dimA: int, dimB: int, rng: RngLike = None) -> ProductVector:
    """Haar-random factors drawn independently on each unit sphere."""
    rng = np.random.default_rng(rng)
    e = _haar_vector(dimA, rng)
    return ProductVector(e, _haar_vector(dimB, rng))


def optimize_product_form(A, dimA, dimB, e0, maximize=True, max_iter=200, rtol=1e-14):
    """Locally extremize ``<e,f|A|e,f>`` over unit product vectors.

    Alternates exact top (or bottom) eigenvector steps for one factor with
    the other held fixed, so the value is monotone. Returns ``(e, f, value)``.
    """
    T = np.ascontiguousarray(np.asarray(A, dtype=np.complex128).reshape(dimA, dimB, dimA, dimB))
    e0 = np.ascontiguousarray(e0, dtype=np.complex128)
    e, f, val = _kernels.alternate_extremize(T, e0, maximize, max_iter, rtol)
    return e, f, float(val)


def polish_in_subspace(e, f, Q, iters: int = 6):
    """Gauss-Newton refinement of ``Q (e (x) f) = 0`` for a projector ``Q``.

    Alternating eigenvector steps only drive the squared residual to
    rounding level, leaving an amplitude of about ``1e-8``; a few
    minimum-norm Newton steps on the bilinear equations reduce it to about
    ``1e-16``. Returns ``(e, f, residual_norm)``.
    """
    e = np.asarray(e, dtype=np.complex128)
    f = np.asarray(f, dtype=np.complex128)
    IA, IB = np.eye(e.shape[0]), np.eye(f.shape[0])
    r = Q @ np.kron(e, f)
    for _ in range(iters):
        if np.linalg.norm(r) <= 1e-15:
            break
        J = np.hstack([Q @ np.kron(IA, f[:, None]), Q @ np.kron(e[:, None], IB)])
        step = np.linalg.lstsq(J, -r, rcond=1e-12)[0]
        e2 = e + step[: e.shape[0]]
        f2 = f + step[e.shape[0]:]
        e2, f2 = e2 / np.linalg.norm(e2), f2 / np.linalg.norm(f2)
        r2 = Q @ np.kron(e2, f2)
        if np.linalg.norm(r2) >= np.linalg.norm(r):
            break
        e, f, r = e2, f2, r2
    return e, f, float(np.linalg.norm(r))


def product_vector_in_range(
    rho: DensityOperator,
    rng: RngLike = None,
    tol: Tolerances = DEFAULT_TOL,
    max_iter: int = 200,
) -> Optional[ProductVector]:
    """A product vector in the range of ``rho``, or ``None`` if this start fails.

    For full-rank ``rho`` any product vector qualifies and a Haar-random one
    is returned. Otherwise the overlap with the range projector is maximized
    by alternating eigenvector steps from a random starting factor, then
    polished with :func:`polish_in_subspace`.
    """
    rng = np.random.default_rng(rng)
    U = matcore.range_basis(rho.matrix, tol)
    if U.shape[1] == rho.dim:
        return random_product_vector(rho.dimA, rho.dimB, rng)
    if U.shape[1] == 0:
        return None
    Pi = U @ U.conj().T
    e, f, _ = optimize_product_form(Pi, rho.dimA, rho.dimB, _haar_vector(rho.dimA, rng), True, max_iter)
    e, f, _ = polish_in_subspace(e, f, np.eye(rho.dim) - Pi)
    pv = ProductVector(e, f)
    if matcore.range_residual(rho.matrix, pv.joint, tol) <= np.sqrt(tol.rank_tol):
        return pv
    return None


def random_density(dimA: int, dimB: int, rank: int, rng: RngLike = None) -> DensityOperator:
    """``G G^H / Tr`` for a complex Gaussian ``G`` of shape ``(dimA*dimB, rank)``."""
    d = dimA * dimB
    if not 1 <= rank <= d:
        raise OutOfRange(f"rank must lie in [1, {d}], got {rank}")
    rng = np.random.default_rng(rng)
    G = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    M = G @ G.conj().T
    return DensityOperator(M / np.trace(M).real, dimA, dimB)


def random_separable(dimA: int, dimB: int, terms: int, rng: RngLike = None) -> DensityOperator:
    """Mixture of ``terms`` Haar product states with Dirichlet-uniform weights."""
    if terms < 1:
        raise OutOfRange("terms must be >= 1")
    rng = np.random.default_rng(rng)
    p = rng.dirichlet(np.ones(terms))
    M = np.zeros((dimA * dimB,) * 2, dtype=np.complex128)
    for pi in p:
        M += pi * random_product_vector(dimA, dimB, rng).projector()
    return DensityOperator(M, dimA, dimB)


def as_density(rho, dimA: Optional[int] = None, dimB: Optional[int] = None) -> DensityOperator:
    """Wrap a raw matrix as a :class:`DensityOperator` (two qubits by default)."""
    if isinstance(rho, DensityOperator):
        return rho
    M = matcore.as_matrix(rho)
    if dimA is None and dimB is None:
        dimA = dimB = 2
    elif dimB is None:
        dimB = M.shape[0] // dimA
    elif dimA is None:
        dimA = M.shape[0] // dimB
    return DensityOperator(M, dimA, dimB)


def stack_joint(vectors: Sequence[ProductVector]) -> np.ndarray:
    return np.array([v.joint for v in vectors])
