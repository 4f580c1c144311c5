import math
import unittest

from cnoidal.models import DomainError
from cnoidal.types import K_BRANCH_FLOOR, K_MAX, K_SQUARED_CEILING, Modulus


class TestModulus(unittest.TestCase):
    def test_valid(self):
        modulus = Modulus(0.9)
        self.assertEqual(0.9, modulus)
        self.assertIsInstance(modulus, float)
        self.assertAlmostEqual(math.sqrt(0.19), modulus.complementary, places=15)

    def test_invalid(self):
        for value in [0.0, 1.0, -0.3, 1.5, math.nan, math.inf]:
            with self.assertRaises(DomainError, msg=f"accepted {value}"):
                Modulus(value)

    def test_too_close_to_one(self):
        with self.assertRaises(DomainError):
            Modulus(1.0 - 1e-14)
        # the largest modulus handed out by root finders is still valid
        self.assertLessEqual(Modulus(K_MAX) ** 2, K_SQUARED_CEILING)

    def test_domain_error_is_value_error(self):
        with self.assertRaises(ValueError):
            Modulus(2.0)

    def test_cnoidal_branch(self):
        self.assertTrue(Modulus(0.72).on_cnoidal_branch)
        self.assertFalse(Modulus(0.5).on_cnoidal_branch)
        with self.assertRaises(DomainError):
            Modulus.cnoidal(K_BRANCH_FLOOR)
        with self.assertRaises(DomainError):
            Modulus.cnoidal(0.7)
        self.assertEqual(0.9, Modulus.cnoidal(0.9))


if __name__ == "__main__":
    unittest.main()
