import contextlib
import io
import os
import tempfile
import unittest

import numpy as np
import pandas

from cnoidal import cli, waves
from cnoidal.cli import Settings
from cnoidal.file.interface import ArtifactDir


class TestArtifacts(unittest.TestCase):
    def setUp(self) -> None:
        self.tmp = tempfile.TemporaryDirectory()
        self.settings = Settings(threads=2, log_level="WARNING")

    def tearDown(self) -> None:
        self.tmp.cleanup()

    def _run(self, *argv: str) -> int:
        with contextlib.redirect_stderr(io.StringIO()):
            return cli.dispatch(list(argv), settings=self.settings)

    def _path(self, name: str) -> str:
        return os.path.join(self.tmp.name, name)

    def test_d1_table(self):
        target = self._path("d1.csv")
        argv = "sweep --quantity d1 --kmin 0.75 --kmax 0.95 --steps 21 --out"
        self.assertEqual(0, self._run(*argv.split(), target))
        table = pandas.read_csv(target)
        self.assertEqual(["k", "D1"], list(table.columns))
        self.assertEqual(21, len(table))
        self.assertTrue(table["k"].is_monotonic_increasing)
        self.assertEqual(1, int(np.count_nonzero(np.diff(np.sign(table["D1"])))))

    def test_wave_profile(self):
        target = self._path("profile.csv")
        argv = "wave --model kg --k 0.9 --samples 64 --out"
        self.assertEqual(0, self._run(*argv.split(), target))
        table = pandas.read_csv(target)
        self.assertEqual(["x", "phi"], list(table.columns))
        self.assertEqual(64, len(table))
        params = waves.kg_from_k(2.0 * np.pi, 0.9)
        np.testing.assert_allclose(
            waves.profile(params, table["x"].to_numpy()), table["phi"], atol=1e-14
        )
        self.assertAlmostEqual(params.amplitude, table["phi"].iloc[0], places=14)

    def test_wave_parameters_to_json(self):
        target = self._path("wave.json")
        argv = "wave --model kg --k 0.9 --out"
        self.assertEqual(0, self._run(*argv.split(), target))
        (record,) = ArtifactDir(self.tmp.name).load("wave.json")
        self.assertLess(record["ode_residual"], 1e-8)

    def test_reruns_are_byte_identical(self):
        first, second = self._path("first.csv"), self._path("second.csv")
        argv = "sweep --quantity potential --kmin 0.72 --kmax 0.98 --steps 14 --out"
        self.assertEqual(0, self._run(*argv.split(), first))
        self.assertEqual(0, self._run(*argv.split(), second, "--workers", "2"))
        with open(first, "rb") as left, open(second, "rb") as right:
            self.assertEqual(left.read(), right.read())

    def test_failure_sidecar(self):
        target = self._path("dpp.csv")
        argv = "sweep --quantity dpp --kmin 0.75 --kmax 0.95 --steps 9 --out"
        self.assertEqual(0, self._run(*argv.split(), target))
        k_min = waves.kg_kmin(2.0 * np.pi)
        grid = np.linspace(0.75, 0.95, 9)
        failures = ArtifactDir(self.tmp.name).load("dpp.csv.failures.ndjson")
        self.assertEqual(int(np.sum(grid < k_min)), len(failures))
        self.assertEqual(int(np.sum(grid >= k_min)), len(pandas.read_csv(target)))

    def test_evolution_series(self):
        target = self._path("series.csv")
        argv = (
            "evolve --model nls --k 0.85 --T 2 --dt 0.001 --N 64 --order 4 "
            "--perturbation mode-m --mode 2 --sample-every 0.25 --out"
        )
        self.assertEqual(0, self._run(*argv.split(), target))
        series = pandas.read_csv(target)
        self.assertEqual(
            ["t", "distance", "energy_drift", "second_invariant_drift"],
            list(series.columns),
        )
        self.assertEqual(9, len(series))
        self.assertAlmostEqual(1e-3, series["distance"].iloc[0], delta=1e-9)
        self.assertLess(series["second_invariant_drift"].max(), 1e-12)


if __name__ == "__main__":
    unittest.main()
