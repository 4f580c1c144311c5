import math
import unittest

import numpy as np

from cnoidal import waves
from cnoidal.elliptic import complete_elliptic
from cnoidal.models import (
    DomainError,
    InadmissibleWaveError,
    Model,
    SampledProfile,
)

TWO_PI = 2.0 * math.pi


class TestKleinGordonWaves(unittest.TestCase):
    def test_parameters(self):
        params = waves.kg_from_k(TWO_PI, 0.9)
        self.assertEqual(Model.KG, params.model)
        self.assertAlmostEqual(0.76519, params.omega, delta=1e-4)
        self.assertAlmostEqual(0.48457, params.c, delta=1e-4)
        self.assertAlmostEqual(1.0, params.omega + params.c**2, places=14)
        self.assertAlmostEqual(
            4 * complete_elliptic(0.9).bigK / TWO_PI, params.scale, places=14
        )
        self.assertTrue(params.has_speed)

    def test_inadmissible(self):
        with self.assertRaises(InadmissibleWaveError):
            waves.kg_from_k(TWO_PI, 0.72)
        relaxed = waves.kg_from_k(TWO_PI, 0.72, strict=False)
        self.assertIsNone(relaxed.c)
        self.assertGreater(relaxed.omega, 1.0)
        self.assertFalse(relaxed.has_speed)

    def test_off_branch(self):
        with self.assertRaises(DomainError):
            waves.kg_from_k(TWO_PI, 0.6)
        with self.assertRaises(DomainError):
            waves.kg_from_k(-1.0, 0.9)

    def test_kmin(self):
        k_min = waves.kg_kmin(TWO_PI)
        self.assertAlmostEqual(TWO_PI, waves.kg_width(k_min), delta=1e-12)
        self.assertGreater(k_min, 0.86)
        self.assertLess(k_min, 0.88)
        params = waves.kg_from_k(TWO_PI, k_min + 1e-6)
        self.assertLess(params.c, 0.05)
        self.assertLess(params.omega, 1.0)

    def test_speed_round_trip(self):
        for k in [0.9, 0.95]:
            speed = waves.kg_from_k(TWO_PI, k).c
            self.assertAlmostEqual(k, waves.kg_k_from_c(TWO_PI, speed), delta=1e-9)
        self.assertAlmostEqual(0.9, waves.kg_k_from_c(TWO_PI, 0.48459), delta=1e-3)

    def test_speed_zero_is_kmin(self):
        self.assertEqual(waves.kg_kmin(4.0), waves.kg_k_from_c(4.0, 0.0))

    def test_unattainable_speed(self):
        with self.assertRaises(DomainError):
            waves.kg_k_from_c(TWO_PI, 1.0)
        with self.assertRaises(DomainError):
            waves.kg_k_from_c(TWO_PI, -0.1)

    def test_speed_increases_with_k(self):
        k_min = waves.kg_kmin(TWO_PI)
        grid = np.linspace(k_min + 1e-4, 0.99, 25)
        speeds = [waves.kg_from_k(TWO_PI, k).c for k in grid]
        self.assertTrue(np.all(np.diff(speeds) > 0))

    def test_amplitude_above_sqrt2(self):
        for k in [0.88, 0.9, 0.95, 0.99]:
            self.assertGreater(waves.kg_from_k(TWO_PI, k).amplitude, math.sqrt(2))


class TestSchrodingerWaves(unittest.TestCase):
    def test_parameters(self):
        params = waves.nls_from_k(TWO_PI, 0.9)
        self.assertAlmostEqual(1.30686, params.omega, delta=1e-4)
        self.assertIsNone(params.c)
        kg = waves.kg_from_k(TWO_PI, 0.9)
        self.assertAlmostEqual(1.0, kg.omega * params.omega, places=14)

    def test_omega_round_trip(self):
        omega = waves.nls_from_k(TWO_PI, 0.9).omega
        self.assertAlmostEqual(0.9, waves.nls_k_from_omega(TWO_PI, omega), delta=1e-10)

    def test_small_frequency_near_branch_floor(self):
        params = waves.nls_from_k(TWO_PI, 1.0 / math.sqrt(2.0) + 1e-9)
        self.assertLess(params.omega, 1e-7)

    def test_omega_increases_with_k(self):
        grid = np.linspace(0.71, 0.99, 25)
        omegas = [waves.nls_from_k(TWO_PI, k).omega for k in grid]
        self.assertTrue(np.all(np.diff(omegas) > 0))

    def test_invalid_frequency(self):
        with self.assertRaises(DomainError):
            waves.nls_k_from_omega(TWO_PI, -1.0)
        with self.assertRaises(DomainError):
            waves.nls_k_from_omega(TWO_PI, 1e6)


class TestProfile(unittest.TestCase):
    def setUp(self) -> None:
        self.kg = waves.kg_from_k(TWO_PI, 0.9)
        self.nls = waves.nls_from_k(TWO_PI, 0.9)

    def test_landmarks(self):
        for params in [self.kg, self.nls]:
            self.assertAlmostEqual(params.amplitude, waves.profile(params, 0.0))
            self.assertAlmostEqual(
                0.0, waves.profile(params, params.L / 4), delta=1e-10
            )
            self.assertAlmostEqual(
                -params.amplitude, waves.profile(params, params.L / 2), delta=1e-10
            )

    def test_sample_grid(self):
        sampled = waves.sample(self.nls, 64)
        self.assertEqual(64, sampled.size)
        self.assertAlmostEqual(TWO_PI / 64, sampled.spacing)
        self.assertAlmostEqual(TWO_PI / 64 * 63, sampled.xs[-1])
        self.assertAlmostEqual(0.0, float(np.mean(sampled.values)), delta=1e-10)

    def test_sample_rejects_bad_sizes(self):
        with self.assertRaises(DomainError):
            waves.sample(self.kg, 31)
        with self.assertRaises(DomainError):
            waves.sample(self.kg, 16)

    def test_derivatives(self):
        xs = np.linspace(0.0, TWO_PI, 9)
        step = 1e-6
        slope = (
            waves.profile(self.kg, xs + step) - waves.profile(self.kg, xs - step)
        ) / (2 * step)
        np.testing.assert_allclose(
            waves.profile_derivative(self.kg, xs), slope, atol=1e-7
        )
        curvature = (
            waves.profile_derivative(self.kg, xs + step)
            - waves.profile_derivative(self.kg, xs - step)
        ) / (2 * step)
        np.testing.assert_allclose(
            waves.profile_second_derivative(self.kg, xs), curvature, atol=1e-7
        )

    def test_ode_residual_exact(self):
        for params in [self.kg, self.nls]:
            residual = waves.ode_residual(waves.sample(params, 256))
            self.assertLess(residual, 1e-8, msg=str(params))

    def test_ode_residual_perturbed(self):
        sampled = waves.sample(self.nls, 256)
        bumped = SampledProfile(
            params=self.nls,
            xs=sampled.xs,
            values=sampled.values + 0.01 * np.sin(sampled.xs),
        )
        self.assertGreater(waves.ode_residual(bumped), 1e-3)

    def test_periodic(self):
        for params in [self.kg, self.nls]:
            xs = np.linspace(0.0, params.L, 17)
            np.testing.assert_allclose(
                waves.profile(params, xs),
                waves.profile(params, xs + params.L),
                atol=1e-10,
                err_msg=str(params),
            )

    def test_ode_residual_falls_with_resolution(self):
        # near k = 1 the Fourier tail is slow enough for N = 128 to truncate
        steep = waves.kg_from_k(TWO_PI, 1.0 - 1e-8)
        coarse = waves.ode_residual(waves.sample(steep, 128))
        fine = waves.ode_residual(waves.sample(steep, 512))
        self.assertGreater(coarse, 1e-6)
        self.assertLess(fine, 1e-3 * coarse)

    def test_ode_residual_needs_resolution(self):
        with self.assertRaises(DomainError):
            waves.ode_residual(waves.sample(self.nls, 64))

    def test_mass(self):
        for params in [self.kg, self.nls]:
            sampled = waves.sample(params, 256)
            quadrature = float(np.sum(sampled.values**2)) * sampled.spacing
            self.assertAlmostEqual(1.0, waves.mass(params) / quadrature, delta=1e-10)

    def test_from_k_dispatch(self):
        self.assertEqual(self.kg, waves.from_k(Model.KG, TWO_PI, 0.9))
        self.assertEqual(self.nls, waves.from_k(Model.NLS, TWO_PI, 0.9))


if __name__ == "__main__":
    unittest.main()
