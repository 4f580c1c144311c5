"""
Stability functionals along the wave families and the resulting verdicts.

KG : d(c) with d'(c) = -c int (phi')^2; instability needs d''(c) < 0.
NLS: d(w) with d'(w) = 1/2 int phi^2; stability needs d''(w) > 0.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Tuple

import numpy as np
from scipy import optimize

from cnoidal import index, operators, waves
from cnoidal.elliptic import complete_elliptic, d_bigE_dk, d_bigK_dk
from cnoidal.models import (
    CnoidalError,
    ConsistencyError,
    DomainError,
    DppOmegaReport,
    Model,
    OperatorKind,
    PotentialWellReport,
    RegimeBounds,
    ReportRecord,
    StabilityVerdict,
    SweepQuantity,
    Verdict,
    WaveParams,
)
from cnoidal.types import Modulus
from cnoidal.util import l2_inner

log = logging.getLogger(__name__)
logging.basicConfig(format="%(asctime)s %(levelname)s %(name)s %(message)s")

# Central differences use this step relative to the differentiated parameter
FD_RELATIVE_STEP = 1e-4
DPP_OMEGA_AGREEMENT = 1e-4
DPP_C_AGREEMENT = 1e-5
# Below this speed d''(c) is evaluated next to w = 1 and is flagged
SMALL_SPEED = 1e-3
K1_BRACKET = (0.75, 0.85)
K1_XTOL = 1e-12
DEFAULT_N = 256
QUADRATURE_N = 512


def phi_prime_l2(period: float, k: float) -> float:
    """int_0^L (phi')^2 = 32K ((2k^2-1)E + (1-k^2)K) / (3 (2k^2-1) L)"""
    params = waves.kg_from_k(period, k)
    pair = complete_elliptic(params.k)
    k2 = params.k**2
    two_k2m1 = 2.0 * k2 - 1.0
    return (
        32.0
        * pair.bigK
        * (two_k2m1 * pair.bigE + (1.0 - k2) * pair.bigK)
        / (3.0 * two_k2m1 * period)
    )


def phi_prime_l2_quadrature(params: WaveParams, n_points: int = QUADRATURE_N) -> float:
    """Rectangle rule on the analytic phi' samples"""
    xs = waves.sample(params, n_points).xs
    derivative = np.asarray(waves.profile_derivative(params, xs))
    return l2_inner(derivative, derivative, params.L)


def _g_and_derivative(k: float) -> Tuple[float, float]:
    """G(k) = K E + (1-k^2) K^2 / (2k^2-1), so that int (phi')^2 = 32 G / (3L)"""
    pair = complete_elliptic(k)
    big_k, big_e = pair.bigK, pair.bigE
    dk_big, de_big = d_bigK_dk(k), d_bigE_dk(k)
    k2 = k * k
    two_k2m1 = 2.0 * k2 - 1.0
    value = big_k * big_e + (1.0 - k2) * big_k**2 / two_k2m1
    derivative = (
        dk_big * big_e
        + big_k * de_big
        + (-2.0 * k * big_k**2 + 2.0 * (1.0 - k2) * big_k * dk_big) / two_k2m1
        - 4.0 * k * (1.0 - k2) * big_k**2 / two_k2m1**2
    )
    return value, derivative


def _kg_omega_derivative(params: WaveParams) -> float:
    """dw/dk at fixed L for w = L^2 / (16 K^2 (2k^2 - 1))"""
    k = params.k
    big_k = complete_elliptic(k).bigK
    return -params.omega * (
        2.0 * d_bigK_dk(k) / big_k + 4.0 * k / (2.0 * k * k - 1.0)
    )


def dpp_c(period: float, k: float, cross_check: bool = True) -> float:
    """
    d''(c) = m(k) + n(k) with
      m = -int (phi')^2,
      n = 2 (1 - w) d/dw int (phi')^2 = 64 (1 - w) / (3L) G'(k) / w'(k).
    With `cross_check` the value is compared with dpp_c_finite_difference and a
    relative gap above DPP_C_AGREEMENT raises ConsistencyError.
    """
    params = waves.kg_from_k(period, k)
    if params.c is not None and params.c < SMALL_SPEED:
        log.warning(
            f"d''(c) at c={params.c:.3g} sits next to w = 1 where dk/dc is magnified"
        )
    _, g_prime = _g_and_derivative(params.k)
    m_term = -phi_prime_l2(period, params.k)
    n_term = (
        64.0 * (1.0 - params.omega) / (3.0 * period)
        * g_prime / _kg_omega_derivative(params)
    )
    value = m_term + n_term
    if not cross_check:
        return value
    witness = dpp_c_finite_difference(period, params.k)
    if witness is not None and abs(witness - value) > DPP_C_AGREEMENT * abs(value):
        raise ConsistencyError(
            "dpp-c",
            f"analytic {value:.10g} vs finite difference {witness:.10g} at {params}",
        )
    return value


def dpp_c_finite_difference(period: float, k: float) -> Optional[float]:
    """
    Central difference of d'(c) = -c int (phi')^2 in c; None when the stencil
    would leave [0, c_max).
    """
    params = waves.kg_from_k(period, k)
    speed = params.c
    if speed is None or speed < SMALL_SPEED:
        return None
    step = FD_RELATIVE_STEP * speed

    def d_prime(c: float) -> float:
        return -c * phi_prime_l2(period, waves.kg_k_from_c(period, c))

    try:
        return (d_prime(speed + step) - d_prime(speed - step)) / (2.0 * step)
    except DomainError:
        return None


def _nls_half_mass(period: float, omega: float) -> float:
    params = waves.nls_from_k(period, waves.nls_k_from_omega(period, omega))
    return 0.5 * waves.mass(params)


def dpp_omega(
    period: float, omega: float, n_points: int = QUADRATURE_N
) -> DppOmegaReport:
    """
    d''(w) by central differences of 1/2 int phi_w^2 and by -(chi, phi) with
    L2 chi = phi (deflated solve). Disagreement beyond DPP_OMEGA_AGREEMENT
    raises ConsistencyError.
    """
    k = waves.nls_k_from_omega(period, omega)
    params = waves.nls_from_k(period, k)
    step = FD_RELATIVE_STEP * omega
    finite_difference = (
        _nls_half_mass(period, omega + step) - _nls_half_mass(period, omega - step)
    ) / (2.0 * step)

    matrix = operators.build(OperatorKind.NLS_L2, params, n_points)
    kernel = operators.spectrum(matrix, with_vectors=True).kernel()
    phi = waves.sample(params, n_points).values
    chi = index.deflated_solve(matrix, phi, kernel)
    report = DppOmegaReport(
        omega=params.omega,
        finite_difference=finite_difference,
        chi_solve=-l2_inner(chi, phi, period),
    )
    if report.relative_gap > DPP_OMEGA_AGREEMENT:
        raise ConsistencyError(
            "dpp-omega",
            f"finite difference {report.finite_difference:.10g} vs chi-solve "
            f"{report.chi_solve:.10g} at {params}",
        )
    return report


def potential_closed_form(period: float, k: float) -> float:
    """
    -L (K - 2) ((k^4 - 5/3 k^2 + 2/3) K + (4/3 k^2 - 2/3) E) / (K (2k^2 - 1)^2)
    """
    pair = complete_elliptic(k)
    k2 = k * k
    bracket = (k2 * k2 - 5.0 / 3.0 * k2 + 2.0 / 3.0) * pair.bigK + (
        4.0 / 3.0 * k2 - 2.0 / 3.0
    ) * pair.bigE
    return (
        -period * (pair.bigK - 2.0) * bracket / (pair.bigK * (2.0 * k2 - 1.0) ** 2)
    )


def action_functional(params: WaveParams, n_points: int = QUADRATURE_N) -> float:
    """
    P_w(phi) = 1/2 int (w phi'^2 + phi^2) - 1/4 int phi^4 by the rectangle rule.
    On a wave -w phi'' + phi - phi^3 = 0 it reduces to 1/4 int phi^4.
    """
    sampled = waves.sample(params, n_points)
    phi = sampled.values
    derivative = np.asarray(waves.profile_derivative(params, sampled.xs))
    weight = params.L / n_points
    return float(
        0.5 * np.sum(params.omega * derivative**2 + phi**2) * weight
        - 0.25 * np.sum(phi**4) * weight
    )


def potential_well(
    period: float, k: float, strict: bool = True, n_points: int = QUADRATURE_N
) -> PotentialWellReport:
    """
    P_w(phi_w) in closed form and the level d_w = P_w(phi_w).

    The scaling identity P_w(phi_w) = sqrt(w) P_1(phi_1) is checked on the
    functional itself: phi_1 is built independently as the wave of the same
    modulus at period L / sqrt(w), whose frequency is 1, and both sides are
    evaluated by quadrature.
    """
    params = waves.kg_from_k(period, k, strict=strict)
    value = potential_closed_form(period, params.k)
    functional = action_functional(params, n_points)
    unit = waves.kg_from_k(period / math.sqrt(params.omega), params.k, strict=False)
    unit_functional = action_functional(unit, n_points)
    gap = abs(functional - math.sqrt(params.omega) * unit_functional)
    scaling_check = gap / abs(functional)
    return PotentialWellReport(
        L=period,
        k=params.k,
        omega=params.omega,
        P_value=value,
        d_level=value,
        scaling_check=scaling_check,
        functional_value=functional,
    )


def find_k1() -> Modulus:
    """Unique root k1 of K(k) = 2, about 0.8024"""
    low, high = K1_BRACKET
    root = optimize.bisect(
        lambda k: complete_elliptic(k).bigK - 2.0, low, high, xtol=K1_XTOL
    )
    return Modulus.cnoidal(root)


def regime_bounds(period: float) -> RegimeBounds:
    """k*, k1 and the speed / frequency they induce at period L"""
    k1 = find_k1()
    return RegimeBounds(
        kstar=float(index.find_kstar()),
        k1=float(k1),
        c_k1=waves.kg_from_k(period, k1, strict=False).c,
        cstar=index.find_cstar(period),
        omegastar=index.find_omegastar(period),
    )


def _kg_verdict(params: WaveParams, n_points: int) -> StabilityVerdict:
    bounds = regime_bounds(params.L)
    report = index.index_report(OperatorKind.KG_L1, params, n_points)
    dpp = dpp_c(params.L, params.k)
    speed = params.c if params.c is not None else math.nan
    counts_ok = (report.constrained_n, report.constrained_z) == (1, 1)
    if not counts_ok:
        verdict = Verdict.INCONCLUSIVE
        reason = (
            f"n(L1_Pi)={report.constrained_n}, z(L1_Pi)={report.constrained_z}: "
            "the instability criterion needs one negative direction"
        )
    elif dpp >= 0.0:
        verdict, reason = Verdict.INCONCLUSIVE, f"d''(c)={dpp:.6g} is not negative"
    elif bounds.c_k1 is None:
        verdict = Verdict.INCONCLUSIVE
        reason = (
            f"d''<0 but k1 lies below k_min(L={params.L:.10g}): "
            "the global existence regime is empty"
        )
    elif speed < bounds.c_k1:
        verdict = Verdict.ORBITALLY_UNSTABLE
        reason = f"c={speed:.6g} in [0, c(k1)={bounds.c_k1:.6g}), d''(c)<0"
    else:
        verdict = Verdict.INCONCLUSIVE
        reason = (
            f"d''<0 but global existence regime not established "
            f"(c={speed:.6g} >= c(k1)={bounds.c_k1:.6g})"
        )
    return StabilityVerdict(
        model=Model.KG,
        L=params.L,
        k=params.k,
        omega=params.omega,
        c=params.c,
        dpp=dpp,
        constrained_n=report.constrained_n,
        constrained_z=report.constrained_z,
        verdict=verdict,
        reason=reason,
        regime_bounds=bounds,
    )


def _nls_verdict(params: WaveParams, n_points: int) -> StabilityVerdict:
    bounds = regime_bounds(params.L)
    l2_report = index.index_report(OperatorKind.NLS_L2, params, n_points)
    l3_report = index.index_report(OperatorKind.NLS_L3, params, n_points)
    dpp = dpp_omega(params.L, params.omega).chi_solve
    if params.omega >= bounds.omegastar:
        verdict = Verdict.INCONCLUSIVE
        reason = f"w={params.omega:.6g} >= w*={bounds.omegastar:.6g}"
    elif l2_report.constrained_n != 1 or l3_report.constrained_n != 0:
        verdict = Verdict.INCONCLUSIVE
        reason = (
            f"n(L2_Pi)={l2_report.constrained_n}, n(L3_Pi)={l3_report.constrained_n}"
        )
    elif dpp <= 0.0:
        verdict, reason = Verdict.INCONCLUSIVE, f"d''(w)={dpp:.6g} is not positive"
    else:
        verdict = Verdict.ORBITALLY_STABLE
        reason = (
            f"w={params.omega:.6g} in (0, w*={bounds.omegastar:.6g}), "
            "n(L2_Pi)=1, n(L3_Pi)=0, d''(w)>0"
        )
    return StabilityVerdict(
        model=Model.NLS,
        L=params.L,
        k=params.k,
        omega=params.omega,
        c=None,
        dpp=dpp,
        constrained_n=l2_report.constrained_n,
        constrained_z=l2_report.constrained_z,
        verdict=verdict,
        reason=reason,
        regime_bounds=bounds,
    )


def verdict(
    model: Model,
    period: float,
    *,
    speed: Optional[float] = None,
    omega: Optional[float] = None,
    k: Optional[float] = None,
    n_points: int = DEFAULT_N,
) -> StabilityVerdict:
    """
    Stability conclusion for the wave selected by exactly one of speed
    (KG only), omega (NLS only) or k.
    """
    given = [value is not None for value in (speed, omega, k)]
    if sum(given) != 1:
        raise DomainError("give exactly one of c, omega or k")
    if model == Model.KG:
        if omega is not None:
            raise DomainError("KG waves are selected by c or k")
        modulus = k if k is not None else waves.kg_k_from_c(period, float(speed))
        result = _kg_verdict(waves.kg_from_k(period, modulus), n_points)
    else:
        if speed is not None:
            raise DomainError("NLS waves are selected by omega or k")
        modulus = k if k is not None else waves.nls_k_from_omega(period, float(omega))
        result = _nls_verdict(waves.nls_from_k(period, modulus), n_points)
    log.info(f"{model.value} verdict at k={result.k:.10g}: {result.verdict.value}")
    return result


def sweep_point(
    quantity: SweepQuantity, period: float, k: float, ivp_steps: int
) -> ReportRecord:
    """One sweep row {k, <column>}"""
    if quantity == SweepQuantity.D1:
        value = index.d1_closed_form(period, k).value
    elif quantity == SweepQuantity.D3:
        params = waves.nls_from_k(period, k)
        value = index.d3_via_ivp(params, steps=ivp_steps)[0].value
    elif quantity == SweepQuantity.DPP:
        value = dpp_c(period, k)
    elif quantity == SweepQuantity.DPP_OMEGA:
        value = dpp_omega(period, waves.nls_from_k(period, k).omega).chi_solve
    else:
        value = potential_well(period, k, strict=False).P_value
    if not math.isfinite(value):
        raise ConsistencyError(quantity.value, f"non-finite value at k={k}")
    return {"k": k, quantity.column: value}


def _safe_point(
    quantity: SweepQuantity, period: float, k: float, ivp_steps: int
) -> Tuple[Optional[ReportRecord], Optional[ReportRecord]]:
    try:
        return sweep_point(quantity, period, k, ivp_steps), None
    except CnoidalError as err:
        log.warning(f"sweep {quantity.value} failed at k={k}: {err}")
        return None, {"k": k, "quantity": quantity.value, "error": str(err)}


def sweep(
    quantity: SweepQuantity,
    period: float,
    k_range: Tuple[float, float],
    steps: int,
    max_workers: int = 1,
    ivp_steps: int = index.DEFAULT_IVP_STEPS,
) -> Tuple[List[ReportRecord], List[ReportRecord]]:
    """
    Evaluates `quantity` on `steps` equispaced moduli in [kmin, kmax].
    Returns (rows, failures); rows stay in increasing k whatever the pool order.
    """
    k_low, k_high = k_range
    if steps < 2 or not k_low < k_high:
        raise DomainError(f"sweep needs kmin < kmax and steps >= 2, got {k_range}")
    grid = [float(k) for k in np.linspace(k_low, k_high, steps)]
    arguments = [(quantity, period, k, ivp_steps) for k in grid]
    if max_workers > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(_safe_point, *zip(*arguments)))
    else:
        results = [_safe_point(*args) for args in arguments]
    rows = [row for row, _ in results if row is not None]
    failures = [failure for _, failure in results if failure is not None]
    log.info(f"sweep {quantity.value}: {len(rows)} rows, {len(failures)} failures")
    return rows, failures
