import json
import math
import unittest

import numpy as np

from cnoidal.models import (
    BlowUpError,
    CnoidalError,
    ConservedPair,
    ConsistencyError,
    DomainError,
    DppOmegaReport,
    ExperimentConfig,
    ExperimentReport,
    IndexReport,
    InadmissibleWaveError,
    Model,
    OperatorKind,
    OrbitDistanceSeries,
    Perturbation,
    SweepQuantity,
    Verdict,
)


class TestEnums(unittest.TestCase):
    def test_model_from_string(self):
        self.assertEqual(Model.KG, Model.from_string("kg"))
        self.assertEqual(Model.NLS, Model.from_string(" NLS "))
        with self.assertRaises(DomainError):
            Model.from_string("kdv")

    def test_operator_kind_from_cli(self):
        self.assertEqual(OperatorKind.KG_L1, OperatorKind.from_cli(Model.KG, "L1"))
        self.assertEqual(
            OperatorKind.NLS_BLOCK, OperatorKind.from_cli(Model.NLS, "block")
        )
        with self.assertRaises(DomainError):
            OperatorKind.from_cli(Model.KG, "l3")

    def test_operator_kind_properties(self):
        self.assertEqual(Model.KG, OperatorKind.KG_BLOCK.model)
        self.assertEqual(Model.NLS, OperatorKind.NLS_L3.model)
        self.assertTrue(OperatorKind.NLS_BLOCK.is_block)
        self.assertFalse(OperatorKind.KG_L1.is_block)

    def test_sweep_quantity(self):
        self.assertEqual("D3", SweepQuantity.from_string("d3").column)
        self.assertEqual("P", SweepQuantity.POTENTIAL.column)
        with self.assertRaises(DomainError):
            SweepQuantity.from_string("d4")

    def test_perturbation(self):
        self.assertEqual(Perturbation.MODE, Perturbation.from_string("mode-m"))
        with self.assertRaises(DomainError):
            Perturbation.from_string("gaussian")


class TestErrors(unittest.TestCase):
    def test_hierarchy(self):
        self.assertTrue(issubclass(InadmissibleWaveError, DomainError))
        self.assertTrue(issubclass(DomainError, ValueError))
        self.assertTrue(issubclass(ConsistencyError, CnoidalError))
        self.assertTrue(issubclass(BlowUpError, CnoidalError))

    def test_inadmissible_message(self):
        err = InadmissibleWaveError(2 * math.pi, 0.72, 19.0)
        self.assertIn("w < 1", str(err))
        self.assertEqual(19.0, err.omega)

    def test_consistency_error_logs(self):
        with self.assertLogs(level="ERROR") as logs:
            err = ConsistencyError("dpp-omega", "1.0 vs 2.0")
        self.assertEqual("dpp-omega", err.check)
        self.assertIn("dpp-omega", logs.output[0])


class TestReports(unittest.TestCase):
    def test_index_report_from_counts(self):
        report = IndexReport.from_counts(
            OperatorKind.KG_L1, (2, 1), np.array([[-0.107]]), tie_tol=1e-8
        )
        self.assertEqual((1, 0), (report.n0, report.z0))
        self.assertEqual((1, 1), (report.constrained_n, report.constrained_z))
        self.assertFalse(report.consistent)
        report.projected_n, report.projected_z = 1, 1
        self.assertTrue(report.consistent)

    def test_index_report_tie(self):
        report = IndexReport.from_counts(
            OperatorKind.KG_L1, (2, 1), np.array([[1e-12]]), tie_tol=1e-8
        )
        self.assertEqual((0, 1), (report.n0, report.z0))
        self.assertEqual((1, 2), (report.constrained_n, report.constrained_z))

    def test_index_report_block(self):
        d_matrix = np.diag([-0.1, 2.0 * math.pi])
        report = IndexReport.from_counts(
            OperatorKind.KG_BLOCK, (2, 1), d_matrix, tie_tol=1e-8
        )
        self.assertEqual(1, report.n0)
        self.assertEqual([[-0.1, 0.0], [0.0, 2.0 * math.pi]], report.d_matrix)
        self.assertEqual("KgBlock", json.loads(report.to_json())["kind"])

    def test_relative_drift(self):
        now = ConservedPair(energy=1.01, momentum_or_mass=0.5)
        then = ConservedPair(energy=1.0, momentum_or_mass=0.0)
        drift = now.relative_drift(then)
        self.assertAlmostEqual(0.01, drift.energy)
        self.assertEqual(0.5, drift.momentum_or_mass)

    def test_dpp_omega_gap(self):
        report = DppOmegaReport(omega=1.0, finite_difference=1.0001, chi_solve=1.0)
        self.assertAlmostEqual(1e-4, report.relative_gap)

    def test_series_rows(self):
        series = OrbitDistanceSeries()
        zero = ConservedPair(energy=0.0, momentum_or_mass=0.0)
        series.append(0.0, 1e-3, zero)
        series.append(0.5, 2e-3, ConservedPair(energy=1e-9, momentum_or_mass=2e-9))
        rows = series.to_rows()
        self.assertEqual(
            ["t", "distance", "energy_drift", "second_invariant_drift"],
            list(rows[0].keys()),
        )
        self.assertEqual(2e-9, rows[1]["second_invariant_drift"])

    def test_growth_factor(self):
        config = ExperimentConfig(model=Model.NLS, L=2 * math.pi, k=0.85)
        series = OrbitDistanceSeries(times=[0.0, 1.0], distances=[1e-3, 4e-3])
        zero = ConservedPair(energy=0.0, momentum_or_mass=0.0)
        report = ExperimentReport(config=config, series=series, max_drift=zero)
        self.assertAlmostEqual(4.0, report.growth_factor)
        report.blow_up = True
        self.assertEqual(math.inf, report.growth_factor)

    def test_experiment_config_json(self):
        config = ExperimentConfig(
            model=Model.KG, L=4.0, k=0.797, perturbation=Perturbation.MODE, mode=3
        )
        record = json.loads(config.to_json())
        self.assertEqual("KG", record["model"])
        self.assertEqual("mode-m", record["perturbation"])
        self.assertEqual(config, ExperimentConfig.from_json(config.to_json()))

    def test_verdict_values(self):
        self.assertEqual("OrbitallyUnstable", Verdict.ORBITALLY_UNSTABLE.value)


if __name__ == "__main__":
    unittest.main()
