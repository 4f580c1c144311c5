"""
Complete elliptic integrals and Jacobi elliptic functions.

K and E come from the arithmetic-geometric mean with the usual c_n^2
accumulation for E; sn, cn, dn from the descending Landen transformation,
i.e. the same AGM sequence run backwards from the amplitude 2^n a_n u.
"""

from __future__ import annotations

import logging
import math
from typing import List, Tuple, Union

import numpy as np

from cnoidal.models import DomainError, EllipticPair, JacobiTriple
from cnoidal.types import Modulus

log = logging.getLogger(__name__)
logging.basicConfig(format="%(asctime)s %(levelname)s %(name)s %(message)s")

# AGM stops once |a_n - b_n| < AGM_TOLERANCE * a_n
AGM_TOLERANCE = 1e-15
AGM_MAX_ITERATIONS = 40

ArrayOrFloat = Union[float, np.ndarray]


def _agm_sequence(k: Modulus) -> Tuple[List[float], List[float]]:
    """Returns the sequences a_n and c_n of the AGM started at (1, k')"""
    a_seq, c_seq = [1.0], [float(k)]
    b = k.complementary
    for _ in range(AGM_MAX_ITERATIONS):
        a = a_seq[-1]
        if abs(a - b) < AGM_TOLERANCE * a:
            break
        c_seq.append(0.5 * (a - b))
        a_seq.append(0.5 * (a + b))
        b = math.sqrt(a * b)
    else:
        log.warning(f"AGM for k={k} hit the iteration cap {AGM_MAX_ITERATIONS}")
    log.debug(f"AGM for k={k} converged in {len(a_seq) - 1} iterations")
    return a_seq, c_seq


def complete_elliptic(k: float) -> EllipticPair:
    """
    (K(k), E(k)) for 0 < k < 1 by the arithmetic-geometric mean.
    E = K (1 - 1/2 sum_n 2^n c_n^2) with c_0 = k.
    """
    modulus = Modulus(k)
    a_seq, c_seq = _agm_sequence(modulus)
    big_k = math.pi / (2.0 * a_seq[-1])
    weighted = sum(2.0**n * c * c for n, c in enumerate(c_seq))
    return EllipticPair(bigK=big_k, bigE=big_k * (1.0 - 0.5 * weighted))


def jacobi(u: ArrayOrFloat, k: float) -> JacobiTriple:
    """
    sn, cn, dn at u (a float or a numpy array) by descending Landen.
    """
    modulus = Modulus(k)
    points = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(points)):
        raise DomainError("jacobi: u must be finite")
    a_seq, c_seq = _agm_sequence(modulus)
    depth = len(a_seq) - 1
    phi = (2.0**depth) * a_seq[-1] * points
    for n in range(depth, 0, -1):
        phi = 0.5 * (np.arcsin(c_seq[n] * np.sin(phi) / a_seq[n]) + phi)
    sn = np.sin(phi)
    cn = np.cos(phi)
    dn = np.sqrt(1.0 - modulus * modulus * sn * sn)
    if points.ndim == 0:
        return JacobiTriple(sn=float(sn), cn=float(cn), dn=float(dn))
    return JacobiTriple(sn=sn, cn=cn, dn=dn)


def d_bigK_dk(k: float) -> float:  # pylint: disable=invalid-name
    """dK/dk = (E - k'^2 K) / (k k'^2)"""
    modulus = Modulus(k)
    pair = complete_elliptic(modulus)
    kp2 = (1.0 - modulus) * (1.0 + modulus)
    return (pair.bigE - kp2 * pair.bigK) / (modulus * kp2)


def d_bigE_dk(k: float) -> float:  # pylint: disable=invalid-name
    """dE/dk = (E - K) / k"""
    modulus = Modulus(k)
    pair = complete_elliptic(modulus)
    return (pair.bigE - pair.bigK) / modulus
