"""
Cnoidal wave families of the Klein-Gordon and Schrodinger equations.

KG : -w phi'' + phi - phi^3 = 0,  w = 1 - c^2,
     phi(x) = sqrt(2) k / sqrt(2k^2 - 1) cn(4K(k) x / L, k),
     w = L^2 / (16 K(k)^2 (2k^2 - 1)).
NLS: -phi'' + w phi - phi^3 = 0,
     phi(x) = sqrt(2w) k / sqrt(2k^2 - 1) cn(4K(k) x / L, k),
     w = 16 K(k)^2 (2k^2 - 1) / L^2.
"""

from __future__ import annotations

import logging
import math
from functools import lru_cache

import numpy as np
from scipy import optimize

from cnoidal.elliptic import ArrayOrFloat, complete_elliptic, jacobi
from cnoidal.models import (
    DomainError,
    InadmissibleWaveError,
    Model,
    SampledProfile,
    WaveParams,
)
from cnoidal.types import K_BRANCH_FLOOR, K_MAX, Modulus
from cnoidal.util import check_grid_size, spectral_derivative, uniform_grid

log = logging.getLogger(__name__)
logging.basicConfig(format="%(asctime)s %(levelname)s %(name)s %(message)s")

# w may exceed 1 by this much before a KG wave is declared inadmissible
OMEGA_SLACK = 1e-12
# Root-finding tolerance on k for every inverse parameter map
K_XTOL = 1e-15
# Smallest modulus handed to root finders on the cnoidal branch
K_BRANCH_START = K_BRANCH_FLOOR + 1e-15
MIN_SAMPLES = 32
MIN_RESIDUAL_SAMPLES = 128


def _check_period(period: float) -> float:
    value = float(period)
    if not math.isfinite(value) or value <= 0.0:
        raise DomainError(f"period L={period} must be positive and finite")
    return value


def _kg_omega(period: float, k: float) -> float:
    big_k = complete_elliptic(k).bigK
    return period**2 / (16.0 * big_k**2 * (2.0 * k * k - 1.0))


def _nls_omega(period: float, k: float) -> float:
    big_k = complete_elliptic(k).bigK
    return 16.0 * big_k**2 * (2.0 * k * k - 1.0) / period**2


def _kg_speed(period: float, k: float) -> float:
    return math.sqrt(max(0.0, 1.0 - _kg_omega(period, k)))


def kg_width(k: float) -> float:
    """4K(k) sqrt(2k^2 - 1): the largest period admitting a KG wave of modulus k"""
    modulus = Modulus.cnoidal(k)
    return 4.0 * complete_elliptic(modulus).bigK * math.sqrt(2.0 * k * k - 1.0)


@lru_cache(maxsize=128)
def kg_kmin(period: float) -> Modulus:
    """
    Lower admissible modulus k_min(L): root of 4K(k) sqrt(2k^2 - 1) = L.
    KG waves of period L exist for k in [k_min(L), 1).
    """
    period = _check_period(period)
    if kg_width(K_MAX) <= period:
        raise DomainError(f"no admissible KG modulus for L={period}")
    root = optimize.bisect(
        lambda k: kg_width(k) - period, K_BRANCH_START, K_MAX, xtol=K_XTOL
    )
    log.debug(f"k_min(L={period}) = {root}")
    return Modulus.cnoidal(root)


def kg_from_k(period: float, k: float, strict: bool = True) -> WaveParams:
    """
    KG parameters for period L and modulus k, with c = +sqrt(1 - w).
    With strict=False parameters with w > 1 are returned with c = None, which is
    enough for operator-level quantities of -w d_xx - 3 phi^2 + 1.
    """
    period = _check_period(period)
    modulus = Modulus.cnoidal(k)
    pair = complete_elliptic(modulus)
    two_k2m1 = 2.0 * modulus * modulus - 1.0
    omega = period**2 / (16.0 * pair.bigK**2 * two_k2m1)
    speed = None
    if omega <= 1.0 + OMEGA_SLACK:
        speed = math.sqrt(max(0.0, 1.0 - omega))
    elif strict:
        raise InadmissibleWaveError(period, modulus, omega)
    else:
        log.info(f"KG (L={period}, k={k}) has w={omega:.6g} > 1: no real speed")
    return WaveParams(
        model=Model.KG,
        L=period,
        k=float(modulus),
        omega=omega,
        c=speed,
        amplitude=math.sqrt(2.0) * modulus / math.sqrt(two_k2m1),
        scale=4.0 * pair.bigK / period,
    )


def kg_k_from_c(period: float, speed: float) -> Modulus:
    """Unique k with kg_from_k(L, k).c = c, by bracketed root finding"""
    period = _check_period(period)
    if not 0.0 <= speed < 1.0:
        raise DomainError(f"speed c={speed} must lie in [0, 1)")
    k_low = kg_kmin(period)
    if speed == 0.0:
        return k_low
    c_max = _kg_speed(period, K_MAX)
    if speed >= c_max:
        raise DomainError(
            f"speed c={speed} unattainable for L={period} (supremum {c_max:.12g})"
        )
    root = optimize.brentq(
        lambda k: _kg_speed(period, k) - speed, float(k_low), K_MAX, xtol=K_XTOL
    )
    return Modulus.cnoidal(root)


def nls_from_k(period: float, k: float) -> WaveParams:
    """NLS parameters for period L and modulus k"""
    period = _check_period(period)
    modulus = Modulus.cnoidal(k)
    pair = complete_elliptic(modulus)
    two_k2m1 = 2.0 * modulus * modulus - 1.0
    omega = 16.0 * pair.bigK**2 * two_k2m1 / period**2
    return WaveParams(
        model=Model.NLS,
        L=period,
        k=float(modulus),
        omega=omega,
        amplitude=math.sqrt(2.0 * omega) * modulus / math.sqrt(two_k2m1),
        scale=4.0 * pair.bigK / period,
    )


def nls_k_from_omega(period: float, omega: float) -> Modulus:
    """Unique k with nls_from_k(L, k).omega = w (k -> K(k)^2 (2k^2 - 1) increases)"""
    period = _check_period(period)
    if not math.isfinite(omega) or omega <= 0.0:
        raise DomainError(f"frequency w={omega} must be positive")
    omega_max = _nls_omega(period, K_MAX)
    if omega >= omega_max:
        raise DomainError(
            f"frequency w={omega} unattainable for L={period} "
            f"(supremum {omega_max:.12g})"
        )
    root = optimize.brentq(
        lambda k: _nls_omega(period, k) - omega, K_BRANCH_START, K_MAX, xtol=K_XTOL
    )
    return Modulus.cnoidal(root)


def from_k(model: Model, period: float, k: float, strict: bool = True) -> WaveParams:
    """Dispatches on the model"""
    if model == Model.KG:
        return kg_from_k(period, k, strict=strict)
    return nls_from_k(period, k)


def profile(params: WaveParams, x: ArrayOrFloat) -> ArrayOrFloat:
    """phi(x) = amplitude cn(scale x, k)"""
    return params.amplitude * jacobi(params.scale * np.asarray(x), params.k).cn


def profile_derivative(params: WaveParams, x: ArrayOrFloat) -> ArrayOrFloat:
    """phi'(x) = -amplitude scale sn dn"""
    triple = jacobi(params.scale * np.asarray(x), params.k)
    return -params.amplitude * params.scale * triple.sn * triple.dn


def profile_second_derivative(params: WaveParams, x: ArrayOrFloat) -> ArrayOrFloat:
    """phi''(x) = amplitude scale^2 ((2k^2 - 1) cn - 2k^2 cn^3)"""
    cn = jacobi(params.scale * np.asarray(x), params.k).cn
    k2 = params.k**2
    cubic = (2.0 * k2 - 1.0) * cn - 2.0 * k2 * cn**3
    return params.amplitude * params.scale**2 * cubic


def sample(params: WaveParams, n_points: int) -> SampledProfile:
    """phi on the uniform grid x_j = j L / N"""
    check_grid_size(n_points, MIN_SAMPLES)
    xs = uniform_grid(params.L, n_points)
    values = np.asarray(profile(params, xs))
    return SampledProfile(params=params, xs=xs, values=values)


def integration_constant(params: WaveParams) -> float:
    """
    A in the first integral of the profile ODE, fixed by phi' = 0 at phi = amplitude.
    KG : (phi')^2 = (2 phi^2 - phi^4 + 4A) / (2w), A = beta_1^2 beta_2^2 / 4
    NLS: (phi')^2 = (2 w phi^2 - phi^4 + 4A) / 2
    """
    beta2 = params.amplitude**2
    if params.model == Model.KG:
        return beta2 * (beta2 - 2.0) / 4.0
    return beta2 * (beta2 - 2.0 * params.omega) / 4.0


def _first_integral_rhs(params: WaveParams, phi: np.ndarray) -> np.ndarray:
    four_a = 4.0 * integration_constant(params)
    if params.model == Model.KG:
        return (2.0 * phi**2 - phi**4 + four_a) / (2.0 * params.omega)
    return (2.0 * params.omega * phi**2 - phi**4 + four_a) / 2.0


def ode_residual(sampled: SampledProfile) -> float:
    """
    max over the grid of the profile ODE residual (second derivative by
    spectral differentiation), together with the first-integral residual.
    """
    check_grid_size(sampled.size, MIN_RESIDUAL_SAMPLES)
    params = sampled.params
    phi = sampled.values
    d1 = spectral_derivative(phi, params.L, order=1)
    d2 = spectral_derivative(phi, params.L, order=2)
    if params.model == Model.KG:
        ode = -params.omega * d2 + phi - phi**3
    else:
        ode = -d2 + params.omega * phi - phi**3
    ode_max = float(np.max(np.abs(ode)))
    integral_max = float(np.max(np.abs(d1**2 - _first_integral_rhs(params, phi))))
    log.debug(
        f"{params}: ODE residual {ode_max:.3e}, first integral {integral_max:.3e}"
    )
    return max(ode_max, integral_max)


def mass(params: WaveParams) -> float:
    """int_0^L phi^2 dx = amplitude^2 L (E - k'^2 K) / (K k^2)"""
    pair = complete_elliptic(params.k)
    k2 = params.k**2
    return (
        params.amplitude**2
        * params.L
        * (pair.bigE - (1.0 - k2) * pair.bigK)
        / (pair.bigK * k2)
    )
