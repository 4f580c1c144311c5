import math
import unittest

import numpy as np

from cnoidal import index, stability, waves
from cnoidal.elliptic import complete_elliptic
from cnoidal.models import OperatorKind, SweepQuantity

TWO_PI = 2.0 * math.pi


class TestConstrainedQuantitySweeps(unittest.TestCase):
    def test_d1_closed_form_against_linear_solve(self):
        for k in np.linspace(0.75, 0.97, 12):
            params = waves.kg_from_k(TWO_PI, k, strict=False)
            solved = index.d_linear_solve(OperatorKind.KG_L1, params, 512).value
            closed = index.d1_closed_form(TWO_PI, k).value
            self.assertAlmostEqual(1.0, solved / closed, delta=1e-8, msg=f"k={k}")

    def test_d1_changes_sign_once(self):
        rows, failures = stability.sweep(SweepQuantity.D1, TWO_PI, (0.71, 0.99), 57)
        self.assertEqual([], failures)
        signs = np.sign([row["D1"] for row in rows])
        self.assertEqual(1, int(np.count_nonzero(np.diff(signs))))
        kstar = float(index.find_kstar())
        for row, sign in zip(rows, signs):
            self.assertEqual(np.sign(row["k"] - kstar), sign)

    def test_d3_negative(self):
        rows, failures = stability.sweep(SweepQuantity.D3, TWO_PI, (0.75, 0.97), 20)
        self.assertEqual([], failures)
        self.assertEqual(20, len(rows))
        for row in rows:
            self.assertLess(row["D3"], 0.0, msg=f"k={row['k']}")

    def test_d3_ivp_against_linear_solve(self):
        for k in [0.75, 0.85, 0.95]:
            params = waves.nls_from_k(TWO_PI, k)
            ivp = index.d3_via_ivp(params)[0].value
            solved = index.d_linear_solve(OperatorKind.NLS_L3, params, 512).value
            self.assertAlmostEqual(1.0, ivp / solved, delta=1e-7, msg=f"k={k}")


class TestStabilitySweeps(unittest.TestCase):
    def test_dpp_witness_along_the_family(self):
        k_min = waves.kg_kmin(TWO_PI)
        rows, failures = stability.sweep(
            SweepQuantity.DPP, TWO_PI, (k_min + 0.005, 0.99), 30
        )
        self.assertEqual([], failures)
        for row in rows:
            witness = stability.dpp_c_finite_difference(TWO_PI, row["k"])
            self.assertIsNotNone(witness)
            self.assertAlmostEqual(
                1.0, witness / row["dpp"], delta=1e-5, msg=f"k={row['k']}"
            )

    def test_dpp_omega_routes_agree(self):
        for k in [0.75, 0.8, 0.85, 0.9, 0.95]:
            omega = waves.nls_from_k(TWO_PI, k).omega
            report = stability.dpp_omega(TWO_PI, omega)
            self.assertLess(report.relative_gap, 1e-4, msg=f"k={k}")

    def test_potential_sign_follows_k1(self):
        rows, failures = stability.sweep(
            SweepQuantity.POTENTIAL, 4.0, (0.72, 0.98), 27
        )
        self.assertEqual([], failures)
        for row in rows:
            expected = -np.sign(complete_elliptic(row["k"]).bigK - 2.0)
            self.assertEqual(expected, np.sign(row["P"]), msg=f"k={row['k']}")

    def test_pool_matches_serial(self):
        serial = stability.sweep(SweepQuantity.D1, TWO_PI, (0.75, 0.95), 8)
        pooled = stability.sweep(
            SweepQuantity.D1, TWO_PI, (0.75, 0.95), 8, max_workers=2
        )
        self.assertEqual(serial, pooled)


if __name__ == "__main__":
    unittest.main()
