"""
Constrained quantities D_i = (L_i^{-1} 1, 1) and the index bookkeeping for
restricting the linearised operators to zero-mean functions:

    n(A_Pi) = n(A) - n0 - z0,    z(A_Pi) = z(A) + z0,

with n0 / z0 the negative / vanishing eigenvalue counts of the D-matrix.
"""

from __future__ import annotations

import logging
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg
from scipy import optimize

from cnoidal import operators, waves
from cnoidal.elliptic import complete_elliptic
from cnoidal.models import (
    ConsistencyError,
    DMethod,
    DomainError,
    DQuantity,
    GreenSolve,
    IndexReport,
    Model,
    OperatorKind,
    OperatorMatrix,
    SpectrumReport,
    WaveParams,
)
from cnoidal.types import Modulus
from cnoidal.util import l2_inner

log = logging.getLogger(__name__)
logging.basicConfig(format="%(asctime)s %(levelname)s %(name)s %(message)s")

# |(rhs, v)| above this for a unit kernel vector v aborts the deflated solve
KERNEL_OVERLAP_TOL = 1e-8
# |D| <= DMATRIX_TIE_RELATIVE * L counts as a vanishing eigenvalue of D
DMATRIX_TIE_RELATIVE = 1e-8
DEFAULT_IVP_STEPS = 100_000
MIN_IVP_STEPS = 10_000
PERIODICITY_TOL = 1e-6
WRONSKIAN_TOL = 1e-6
RECONSTRUCTION_TOL = 1e-6
KSTAR_BRACKET = (0.85, 0.95)
KSTAR_XTOL = 1e-12

_WHICH = {
    OperatorKind.KG_L1: "D1",
    OperatorKind.NLS_L2: "D2",
    OperatorKind.NLS_L3: "D3",
}


def d1_closed_form(period: float, k: float) -> DQuantity:
    """D1 = -L (2k^2 - 1) / K(k) * (2E(k) - K(k))"""
    modulus = Modulus.cnoidal(k)
    if period <= 0.0:
        raise DomainError(f"period L={period} must be positive")
    pair = complete_elliptic(modulus)
    value = (
        -period
        * (2.0 * modulus * modulus - 1.0)
        / pair.bigK
        * (2.0 * pair.bigE - pair.bigK)
    )
    return DQuantity(which="D1", value=value, method=DMethod.CLOSED_FORM)


def d2_closed_form(period: float, k: float) -> DQuantity:
    """D2 = D1 / w_NLS, since L2 = w_NLS L1 for equal (L, k)"""
    omega = waves.nls_from_k(period, k).omega
    value = d1_closed_form(period, k).value / omega
    return DQuantity(which="D2", value=value, method=DMethod.CLOSED_FORM)


def deflated_solve(
    matrix: OperatorMatrix, rhs: np.ndarray, kernel: np.ndarray
) -> np.ndarray:
    """
    Solves M u = rhs on the orthogonal complement of ker M: the kernel
    directions (orthonormal columns) are replaced by the identity and removed
    from the solution.
    """
    if kernel.shape[1] == 0:
        return scipy.linalg.solve(matrix.entries, rhs, assume_a="sym")
    unit_rhs = rhs / np.linalg.norm(rhs)
    overlap = float(np.max(np.abs(kernel.T @ unit_rhs)))
    if overlap > KERNEL_OVERLAP_TOL:
        raise ConsistencyError(
            "kernel-orthogonality",
            f"right-hand side overlaps ker {matrix.kind.value} by {overlap:.3e}",
        )
    regularised = matrix.entries + kernel @ kernel.T
    solution = scipy.linalg.solve(
        regularised, rhs - kernel @ (kernel.T @ rhs), assume_a="sym"
    )
    return solution - kernel @ (kernel.T @ solution)


def _kernel_of(matrix: OperatorMatrix) -> Tuple[SpectrumReport, np.ndarray]:
    report = operators.spectrum(matrix, with_vectors=True)
    return report, report.kernel()


def d_linear_solve(kind: OperatorKind, params: WaveParams, n_points: int) -> DQuantity:
    """(M^{-1} 1, 1) for a scalar kind by deflated linear solve"""
    if kind not in _WHICH:
        raise DomainError(f"no scalar D-quantity for {kind.value}")
    matrix = operators.build(kind, params, n_points)
    _, kernel = _kernel_of(matrix)
    ones = np.ones(n_points)
    solution = deflated_solve(matrix, ones, kernel)
    value = l2_inner(solution, ones, params.L)
    log.debug(f"{_WHICH[kind]}({params}) by linear solve: {value}")
    return DQuantity(which=_WHICH[kind], value=value, method=DMethod.LINEAR_SOLVE)


def _check_nls(params: WaveParams, steps: int) -> None:
    if params.model != Model.NLS:
        raise DomainError(f"the Hill IVPs are posed for NLS waves, got {params}")
    if steps < MIN_IVP_STEPS:
        raise DomainError(f"steps={steps} must be at least {MIN_IVP_STEPS}")


def _half_step_table(params: WaveParams, steps: int, periods: int) -> List[float]:
    """phi at x = j h / 2, j = 0..2 * periods * steps, h = L / steps"""
    half = 0.5 * params.L / steps
    xs = half * np.arange(2 * periods * steps + 1)
    return np.asarray(waves.profile(params, xs)).tolist()


def d3_via_ivp(
    params: WaveParams, steps: int = DEFAULT_IVP_STEPS
) -> Tuple[DQuantity, GreenSolve]:
    """
    Integrates p'' = (w - phi^2) p - 1, p(0) = p'(0) = 0 over one period by
    classical RK4 and returns D3 = (p, 1) with the periodicity defects of p.
    """
    # pylint: disable=too-many-locals
    _check_nls(params, steps)
    omega = params.omega
    step = params.L / steps
    phi = _half_step_table(params, steps, periods=1)
    ps = [0.0] * (steps + 1)
    dps = [0.0] * (steps + 1)
    p, dp = 0.0, 0.0
    for j in range(steps):
        q0 = omega - phi[2 * j] ** 2
        q1 = omega - phi[2 * j + 1] ** 2
        q2 = omega - phi[2 * j + 2] ** 2
        k1p, k1d = dp, q0 * p - 1.0
        p2, d2 = p + 0.5 * step * k1p, dp + 0.5 * step * k1d
        k2p, k2d = d2, q1 * p2 - 1.0
        p3, d3 = p + 0.5 * step * k2p, dp + 0.5 * step * k2d
        k3p, k3d = d3, q1 * p3 - 1.0
        p4, d4 = p + step * k3p, dp + step * k3d
        k4p, k4d = d4, q2 * p4 - 1.0
        p += step / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        dp += step / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d)
        ps[j + 1] = p
        dps[j + 1] = dp
    p_values = np.asarray(ps)
    dp_values = np.asarray(dps)
    periodicity = abs(p_values[-1] - p_values[0])
    derivative = abs(dp_values[-1] - dp_values[0])
    flagged = max(periodicity, derivative) > PERIODICITY_TOL
    if flagged:
        log.warning(
            f"p is not periodic for {params} with {steps} steps: "
            f"|p(L)-p(0)|={periodicity:.3e}, |p'(L)-p'(0)|={derivative:.3e}"
        )
    # p is L-periodic, so the rectangle rule on the nodes is spectrally accurate
    value = float(np.sum(p_values[:-1]) * step)
    green = GreenSolve(
        xs=step * np.arange(steps + 1),
        p=p_values,
        dp=dp_values,
        periodicity_defect=periodicity,
        derivative_defect=derivative,
        flagged=flagged,
    )
    return DQuantity(which="D3", value=value, method=DMethod.IVP), green


def auxiliary_y(params: WaveParams, steps: int = DEFAULT_IVP_STEPS) -> GreenSolve:
    """
    Integrates y'' = (w - phi^2) y, y(0) = 0, y'(0) = 1/phi(0) over two periods,
    together with Y = int_0^x y and P = int_0^x phi. Returns theta from
    y(x + L) - y(x) = theta phi(x) (least squares), the Wronskian defect of
    (phi, y), and p = Y phi - P y on [0, L], which solves p'' = (w - phi^2) p - 1
    because the Wronskian is 1.
    """
    # pylint: disable=too-many-locals
    _check_nls(params, steps)
    omega = params.omega
    step = params.L / steps
    total = 2 * steps
    phi = _half_step_table(params, steps, periods=2)
    if phi[0] == 0.0:
        raise DomainError("auxiliary solution needs phi(0) != 0")
    ys = [0.0] * (total + 1)
    dys = [0.0] * (total + 1)
    big_ys = [0.0] * (total + 1)
    big_ps = [0.0] * (total + 1)
    y, dy, big_y, big_p = 0.0, 1.0 / phi[0], 0.0, 0.0
    dys[0] = dy
    for j in range(total):
        f0, f1, f2 = phi[2 * j], phi[2 * j + 1], phi[2 * j + 2]
        q0, q1, q2 = omega - f0 * f0, omega - f1 * f1, omega - f2 * f2
        k1y, k1d = dy, q0 * y
        y2, d2 = y + 0.5 * step * k1y, dy + 0.5 * step * k1d
        k2y, k2d = d2, q1 * y2
        y3, d3 = y + 0.5 * step * k2y, dy + 0.5 * step * k2d
        k3y, k3d = d3, q1 * y3
        y4, d4 = y + step * k3y, dy + step * k3d
        k4y, k4d = d4, q2 * y4
        big_y += step / 6.0 * (y + 2.0 * y2 + 2.0 * y3 + y4)
        big_p += step / 6.0 * (f0 + 4.0 * f1 + f2)
        y += step / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        dy += step / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d)
        ys[j + 1], dys[j + 1] = y, dy
        big_ys[j + 1], big_ps[j + 1] = big_y, big_p

    y_values, dy_values = np.asarray(ys), np.asarray(dys)
    xs = step * np.arange(steps + 1)
    phi_nodes = np.asarray(phi[: 2 * steps + 1 : 2])
    dphi_nodes = np.asarray(waves.profile_derivative(params, xs))

    increment = y_values[steps:] - y_values[: steps + 1]
    theta = float(np.dot(increment, phi_nodes) / np.dot(phi_nodes, phi_nodes))
    wronskian = phi_nodes * dy_values[: steps + 1] - dphi_nodes * y_values[: steps + 1]
    wronskian_defect = float(np.max(np.abs(wronskian - 1.0)))

    big_y_nodes = np.asarray(big_ys[: steps + 1])
    big_p_nodes = np.asarray(big_ps[: steps + 1])
    p_values = big_y_nodes * phi_nodes - big_p_nodes * y_values[: steps + 1]
    dp_values = big_y_nodes * dphi_nodes - big_p_nodes * dy_values[: steps + 1]

    flagged = wronskian_defect > WRONSKIAN_TOL
    if flagged:
        log.warning(f"Wronskian drift {wronskian_defect:.3e} for {params}")
    log.debug(f"theta={theta:.12g}, int_0^L y = {big_ys[steps]:.3e} for {params}")
    return GreenSolve(
        xs=xs,
        p=p_values,
        dp=dp_values,
        theta=theta,
        periodicity_defect=abs(p_values[-1] - p_values[0]),
        derivative_defect=abs(dp_values[-1] - dp_values[0]),
        wronskian_defect=wronskian_defect,
        flagged=flagged,
        y=y_values,
        y_integral=float(big_ys[steps]),
    )


def reconstruction_gap(direct: GreenSolve, reconstructed: GreenSolve) -> float:
    """max |p_direct - p_reconstructed| on shared nodes; flags beyond tolerance"""
    gap = float(np.max(np.abs(direct.p - reconstructed.p)))
    if gap > RECONSTRUCTION_TOL:
        log.warning(f"variation-of-parameters p deviates from the IVP by {gap:.3e}")
        reconstructed.flagged = True
    return gap


def _block_dmatrix(matrix: OperatorMatrix, kernel: np.ndarray) -> np.ndarray:
    """D_ij = (M^{-1} e_i, e_j) with e_1 = (1, 0), e_2 = (0, 1)"""
    n_points = matrix.N
    ones, zeros = np.ones(n_points), np.zeros(n_points)
    units = [np.concatenate([ones, zeros]), np.concatenate([zeros, ones])]
    solutions = [deflated_solve(matrix, unit, kernel) for unit in units]
    period = matrix.params.L
    # both components are weighted L/N, so pair through the 2N-vector directly
    d_matrix = np.array(
        [
            [float(np.dot(sol, unit)) * period / n_points for unit in units]
            for sol in solutions
        ]
    )
    return 0.5 * (d_matrix + d_matrix.T)


def kg_block_dmatrix(params: WaveParams, n_points: int) -> np.ndarray:
    """2 x 2 constraint matrix of the KG block; expected diag(D1, L)"""
    matrix = operators.build(OperatorKind.KG_BLOCK, params, n_points)
    _, kernel = _kernel_of(matrix)
    return _block_dmatrix(matrix, kernel)


def _scalar_d(kind: OperatorKind, params: WaveParams, n_points: int) -> float:
    if kind == OperatorKind.KG_L1:
        return d1_closed_form(params.L, params.k).value
    if kind == OperatorKind.NLS_L2:
        return d2_closed_form(params.L, params.k).value
    return d_linear_solve(kind, params, n_points).value


def index_report(
    kind: OperatorKind, params: WaveParams, n_points: int
) -> IndexReport:
    """
    Unconstrained counts, D-matrix, constrained counts by the index formulas,
    and the counts of the explicitly projected matrix. A mismatch between the
    last two raises ConsistencyError.
    """
    matrix = operators.build(kind, params, n_points)
    if kind.is_block:
        unconstrained, kernel = _kernel_of(matrix)
        d_matrix = _block_dmatrix(matrix, kernel)
    else:
        unconstrained = operators.spectrum(matrix)
        d_matrix = np.array([[_scalar_d(kind, params, n_points)]])
    report = IndexReport.from_counts(
        kind,
        (unconstrained.n_neg, unconstrained.z_dim),
        d_matrix,
        tie_tol=DMATRIX_TIE_RELATIVE * params.L,
    )
    projected = operators.projected_spectrum(matrix, unconstrained.zero_tol)
    report.projected_n = projected.n_neg
    report.projected_z = projected.z_dim
    log.info(
        f"{kind.value} at {params}: n={report.unconstrained_n}, "
        f"z={report.unconstrained_z}, D={report.d_value:.6g} -> "
        f"n_Pi={report.constrained_n}, z_Pi={report.constrained_z}"
    )
    if not report.consistent:
        raise ConsistencyError(
            "index-formula-vs-projection",
            f"{kind.value} at {params}: formula gives "
            f"({report.constrained_n}, {report.constrained_z}), projection gives "
            f"({report.projected_n}, {report.projected_z})",
        )
    return report


def _two_e_minus_k(k: float) -> float:
    pair = complete_elliptic(k)
    return 2.0 * pair.bigE - pair.bigK


def find_kstar() -> Modulus:
    """Unique root k* of 2E(k) - K(k) in (1/sqrt(2), 1), about 0.9089"""
    low, high = KSTAR_BRACKET
    root = optimize.bisect(_two_e_minus_k, low, high, xtol=KSTAR_XTOL)
    return Modulus.cnoidal(root)


def find_omegastar(period: float) -> float:
    """w* = w_NLS(k*) at period L"""
    return waves.nls_from_k(period, find_kstar()).omega


def find_cstar(period: float) -> Optional[float]:
    """c* = c(k*) at period L, None when k* gives no KG wave of that period"""
    return waves.kg_from_k(period, find_kstar(), strict=False).c

