"""
Validated value types. The elliptic modulus is checked once, on construction,
so downstream code can treat it as a plain float.
"""

from __future__ import annotations

import math

from cnoidal.models import DomainError

# Moduli with k^2 above this are rejected rather than approximated
# (the solitary-wave limit K -> infinity).
K_SQUARED_CEILING = 1.0 - 1e-12
# Lower end of the cnoidal branch, k^2 = 1/2.
K_BRANCH_FLOOR = 1.0 / math.sqrt(2.0)
# Largest modulus handed out by root finders (strictly inside the ceiling).
K_MAX = math.sqrt(K_SQUARED_CEILING) - 1e-15


class Modulus(float):
    """
    Elliptic modulus k, strictly inside (0, 1).
    Upon creation the value is validated; moduli whose square exceeds
    K_SQUARED_CEILING are rejected to avoid silent precision loss.
    """

    def __new__(cls, k: float) -> Modulus:
        value = float(k)
        if not math.isfinite(value) or not 0.0 < value < 1.0:
            raise DomainError(f"Invalid elliptic modulus {k}: need 0 < k < 1")
        if value * value > K_SQUARED_CEILING:
            raise DomainError(
                f"Invalid elliptic modulus {k}: k^2 > 1 - 1e-12 is too close to 1"
            )
        return super().__new__(cls, value)

    @property
    def complementary(self) -> float:
        """k' = sqrt(1 - k^2)"""
        return math.sqrt((1.0 - self) * (1.0 + self))

    @property
    def on_cnoidal_branch(self) -> bool:
        """True when k lies in (1/sqrt(2), 1)"""
        return self > K_BRANCH_FLOOR

    @classmethod
    def cnoidal(cls, k: float) -> Modulus:
        """Constructs a modulus restricted to the cnoidal branch (1/sqrt(2), 1)"""
        modulus = cls(k)
        if not modulus.on_cnoidal_branch:
            raise DomainError(f"Invalid cnoidal modulus {k}: need 1/sqrt(2) < k < 1")
        return modulus
