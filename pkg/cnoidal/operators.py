"""
Dense discretisations of the linearised operators on the periodic grid,
their spectra, and the explicitly known Lame eigenpairs of L1.

The second derivative is the Fourier pseudospectral differentiation matrix
(exact on trigonometric polynomials of degree < N/2), the first derivative
its antisymmetric counterpart; potentials are diagonal.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, Optional, Sequence

import numpy as np
import scipy.linalg

from cnoidal import waves
from cnoidal.elliptic import jacobi
from cnoidal.models import (
    DomainError,
    EigensolverError,
    Model,
    OperatorKind,
    OperatorMatrix,
    SpectrumReport,
    WaveParams,
)
from cnoidal.util import check_grid_size

log = logging.getLogger(__name__)
logging.basicConfig(format="%(asctime)s %(levelname)s %(name)s %(message)s")

MIN_OPERATOR_SAMPLES = 64
# Eigenvalues within this fraction of the largest |eigenvalue| count as zero
ZERO_TOL_RELATIVE = 1e-6

Sampler = Callable[[np.ndarray], np.ndarray]


@lru_cache(maxsize=16)
def fourier_d1(n_points: int, period: float) -> np.ndarray:
    """
    First-derivative matrix on x_j = jL/N (N even): entries
    (1/2)(-1)^(i-j) cot((i-j)h/2), h = 2pi/N, scaled by 2pi/L. Antisymmetric.
    Do not modify the returned (cached) array.
    """
    step = 2.0 * math.pi / n_points
    offsets = np.arange(1, n_points)
    column = np.zeros(n_points)
    column[1:] = 0.5 * (-1.0) ** offsets / np.tan(offsets * step / 2.0)
    matrix = scipy.linalg.toeplitz(column, -column)
    return (2.0 * math.pi / period) * matrix


@lru_cache(maxsize=16)
def fourier_d2(n_points: int, period: float) -> np.ndarray:
    """
    Second-derivative matrix on x_j = jL/N (N even): diagonal -pi^2/(3h^2) - 1/6,
    off-diagonal -(1/2)(-1)^(i-j) / sin^2((i-j)h/2), scaled by (2pi/L)^2. Symmetric.
    Do not modify the returned (cached) array.
    """
    step = 2.0 * math.pi / n_points
    offsets = np.arange(1, n_points)
    column = np.empty(n_points)
    column[0] = -(math.pi**2) / (3.0 * step**2) - 1.0 / 6.0
    column[1:] = -0.5 * (-1.0) ** offsets / np.sin(offsets * step / 2.0) ** 2
    matrix = scipy.linalg.toeplitz(column)
    return (2.0 * math.pi / period) ** 2 * matrix


def build(kind: OperatorKind, params: WaveParams, n_points: int) -> OperatorMatrix:
    """Assembles the N x N (or 2N x 2N) matrix of `kind` around the wave `params`"""
    check_grid_size(n_points, MIN_OPERATOR_SAMPLES)
    if kind.model != params.model:
        raise DomainError(f"operator {kind.value} needs a {kind.model.value} wave")
    phi2 = waves.sample(params, n_points).values ** 2
    d2 = fourier_d2(n_points, params.L)
    omega = params.omega
    if kind == OperatorKind.KG_L1:
        entries = -omega * d2 + np.diag(1.0 - 3.0 * phi2)
    elif kind == OperatorKind.NLS_L2:
        entries = -d2 + np.diag(omega - 3.0 * phi2)
    elif kind == OperatorKind.NLS_L3:
        entries = -d2 + np.diag(omega - phi2)
    elif kind == OperatorKind.KG_BLOCK:
        if params.c is None:
            raise DomainError(f"KG block operator needs a real speed, got {params}")
        coupling = params.c * fourier_d1(n_points, params.L)
        top_left = -d2 + np.diag(1.0 - 3.0 * phi2)
        entries = np.block(
            [[top_left, coupling], [coupling.T, np.eye(n_points)]]
        )
    else:
        entries = scipy.linalg.block_diag(
            -d2 + np.diag(omega - 3.0 * phi2), -d2 + np.diag(omega - phi2)
        )
    log.debug(f"built {kind.value} for {params} on N={n_points}")
    return OperatorMatrix(kind=kind, params=params, N=n_points, entries=entries)


def _counted(
    eigenvalues: np.ndarray,
    zero_tol: Optional[float],
    eigenvectors: Optional[np.ndarray] = None,
) -> SpectrumReport:
    if zero_tol is None:
        zero_tol = ZERO_TOL_RELATIVE * float(np.max(np.abs(eigenvalues)))
    n_neg = int(np.sum(eigenvalues < -zero_tol))
    z_dim = int(np.sum(np.abs(eigenvalues) <= zero_tol))
    return SpectrumReport(
        eigenvalues=eigenvalues,
        zero_tol=zero_tol,
        n_neg=n_neg,
        z_dim=z_dim,
        eigenvectors=eigenvectors,
    )


def spectrum(
    matrix: OperatorMatrix,
    zero_tol: Optional[float] = None,
    with_vectors: bool = False,
) -> SpectrumReport:
    """
    All eigenvalues of the symmetric matrix, ascending, with the counts n and z.
    Default zero tolerance: ZERO_TOL_RELATIVE times the largest |eigenvalue|.
    """
    try:
        if with_vectors:
            values, vectors = scipy.linalg.eigh(matrix.entries)
        else:
            values = scipy.linalg.eigh(matrix.entries, eigvals_only=True)
            vectors = None
    except (np.linalg.LinAlgError, ValueError) as err:
        raise EigensolverError(matrix.kind.value, err) from err
    report = _counted(values, zero_tol, vectors)
    log.debug(
        f"{matrix.kind.value} spectrum: n={report.n_neg}, z={report.z_dim}, "
        f"lowest {values[:4]}"
    )
    return report


def zero_mean_basis(n_points: int) -> np.ndarray:
    """Orthonormal basis (N x (N-1)) of grid vectors with zero mean"""
    return scipy.linalg.null_space(np.ones((1, n_points)))


def constraint_mask(kind: OperatorKind) -> Sequence[bool]:
    """
    Which components carry the zero-mean constraint: every scalar operator,
    the first component only for the KG block (L^2_{per,m} x L^2_{per}),
    both components for the NLS block.
    """
    if kind == OperatorKind.KG_BLOCK:
        return (True, False)
    if kind == OperatorKind.NLS_BLOCK:
        return (True, True)
    return (True,)


def project_zero_mean(matrix: OperatorMatrix) -> np.ndarray:
    """Q^T M Q with Q an orthonormal basis of the constrained space"""
    n_points = matrix.N
    blocks = [
        zero_mean_basis(n_points) if constrained else np.eye(n_points)
        for constrained in constraint_mask(matrix.kind)
    ]
    basis = scipy.linalg.block_diag(*blocks)
    return basis.T @ matrix.entries @ basis


def projected_spectrum(matrix: OperatorMatrix, zero_tol: float) -> SpectrumReport:
    """Spectrum of the operator restricted to the zero-mean class"""
    projected = project_zero_mean(matrix)
    try:
        values = scipy.linalg.eigh(projected, eigvals_only=True)
    except (np.linalg.LinAlgError, ValueError) as err:
        raise EigensolverError(f"projected {matrix.kind.value}", err) from err
    return _counted(values, zero_tol)


def eigen_residual(matrix: OperatorMatrix, value: float, vector: np.ndarray) -> float:
    """||M v - value v|| / ||v||"""
    norm = float(np.linalg.norm(vector))
    if norm == 0.0:
        raise DomainError("eigen_residual needs a nonzero vector")
    return float(np.linalg.norm(matrix.entries @ vector - value * vector)) / norm


def hamiltonian_spectrum(matrix: OperatorMatrix) -> np.ndarray:
    """
    Eigenvalues of J M, J = [[0, I], [-I, 0]], for block kinds. A positive
    real part signals a linearly unstable direction.
    """
    if not matrix.kind.is_block:
        raise DomainError(f"J M needs a block operator, got {matrix.kind.value}")
    n_points = matrix.N
    eye = np.eye(n_points)
    zero = np.zeros((n_points, n_points))
    symplectic = np.block([[zero, eye], [-eye, zero]])
    try:
        return scipy.linalg.eigvals(symplectic @ matrix.entries)
    except (np.linalg.LinAlgError, ValueError) as err:
        raise EigensolverError(f"J {matrix.kind.value}", err) from err


@dataclass(frozen=True)
class LamePair:
    """An explicitly known eigenvalue of L1 and a sampler of its eigenfunction"""

    label: str
    eigenvalue: float
    eigenfunction: Sampler


def lame_eigenpairs(k: float, params: WaveParams) -> List[LamePair]:
    """
    The five lowest eigenvalues of L1 = -w d_xx - 3 phi^2 + 1. With y = 4K x / L,
    L1 = (-d_yy + 6k^2 sn^2 - 4k^2 - 1) / (2k^2 - 1), a Lame operator whose
    first band edges are known in closed form.
    """
    if params.model != Model.KG:
        raise DomainError("Lame eigenpairs are stated for the KG operator L1")
    if abs(k - params.k) > 1e-14:
        raise DomainError(f"modulus {k} does not match the wave {params}")
    k2 = k * k
    root = math.sqrt(1.0 - k2 + k2 * k2)
    denominator = 2.0 * k2 - 1.0
    scale = params.scale

    def f_zero(x: np.ndarray) -> np.ndarray:
        sn = jacobi(scale * np.asarray(x), k).sn
        return k2 * sn**2 - (1.0 + k2 + root) / 3.0

    def f_four(x: np.ndarray) -> np.ndarray:
        sn = jacobi(scale * np.asarray(x), k).sn
        return k2 * sn**2 - (1.0 + k2 - root) / 3.0

    def cn_dn(x: np.ndarray) -> np.ndarray:
        triple = jacobi(scale * np.asarray(x), k)
        return triple.cn * triple.dn

    def sn_cn(x: np.ndarray) -> np.ndarray:
        triple = jacobi(scale * np.asarray(x), k)
        return triple.sn * triple.cn

    def kernel(x: np.ndarray) -> np.ndarray:
        return np.asarray(waves.profile_derivative(params, x))

    return [
        LamePair("lambda0", (1.0 - 2.0 * k2 - 2.0 * root) / denominator, f_zero),
        LamePair("lambda1", -3.0 * k2 / denominator, cn_dn),
        LamePair("lambda2", 0.0, kernel),
        LamePair("lambda3", 3.0 * (1.0 - k2) / denominator, sn_cn),
        LamePair("lambda4", (1.0 - 2.0 * k2 + 2.0 * root) / denominator, f_four),
    ]
