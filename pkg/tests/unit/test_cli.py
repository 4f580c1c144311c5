import contextlib
import io
import json
import os
import tempfile
import unittest
from unittest import mock

from cnoidal import cli
from cnoidal.cli import Settings

SETTINGS = Settings(threads=1, log_level="WARNING")


def run(*argv: str) -> tuple[int, str]:
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = cli.dispatch(list(argv), settings=SETTINGS)
    return code, out.getvalue()


class TestSettings(unittest.TestCase):
    def test_from_env(self):
        env = {"CNOIDAL_THREADS": "3", "CNOIDAL_LOG_LEVEL": "debug"}
        with mock.patch.dict(os.environ, env):
            settings = Settings.from_env()
        self.assertEqual(Settings(threads=3, log_level="DEBUG"), settings)

    def test_defaults(self):
        with mock.patch.dict(os.environ, {}, clear=True):
            settings = Settings.from_env()
        self.assertEqual("WARNING", settings.log_level)
        self.assertGreaterEqual(settings.threads, 1)

    def test_threads_floor(self):
        with mock.patch.dict(os.environ, {"CNOIDAL_THREADS": "0"}):
            self.assertEqual(1, Settings.from_env().threads)


class TestExitCodes(unittest.TestCase):
    def test_usage_errors(self):
        malformed = [
            [],
            ["kdv"],
            ["elliptic"],
            ["wave", "--model", "kg"],
            ["wave", "--model", "kg", "--k", "0.9", "--c", "0.4"],
            ["evolve", "--model", "kg", "--k", "0.9", "--order", "3"],
        ]
        for argv in malformed:
            self.assertEqual(64, run(*argv)[0], msg=" ".join(argv))

    def test_domain_errors(self):
        rejected = [
            ["elliptic", "--k", "0"],
            ["wave", "--model", "kg", "--k", "0.72"],
            ["wave", "--model", "kg", "--omega", "0.5"],
            ["spectrum", "--model", "kg", "--op", "l3", "--k", "0.9"],
        ]
        for argv in rejected:
            self.assertEqual(1, run(*argv)[0], msg=" ".join(argv))


class TestCommands(unittest.TestCase):
    def test_elliptic(self):
        code, out = run("elliptic", "--k", "0.9")
        self.assertEqual(0, code)
        record = json.loads(out)
        self.assertEqual({"K", "E", "dK_dk", "dE_dk", "k"}, set(record))
        self.assertAlmostEqual(2.280549138, record["K"], places=9)

    def test_wave(self):
        code, out = run("wave", "--model", "kg", "--k", "0.9")
        self.assertEqual(0, code)
        record = json.loads(out)
        self.assertEqual("KG", record["model"])
        self.assertAlmostEqual(0.76519, record["omega"], delta=1e-4)
        self.assertLess(record["ode_residual"], 1e-8)
        self.assertGreater(0.9, record["kmin"])

    def test_wave_samples_csv(self):
        argv = "wave --model nls --k 0.85 --samples 32 --format csv"
        code, out = run(*argv.split())
        self.assertEqual(0, code)
        lines = out.splitlines()
        self.assertEqual("x,phi", lines[0])
        self.assertEqual(33, len(lines))
        self.assertEqual("0", lines[1].split(",")[0])

    def test_wave_by_frequency(self):
        omega = json.loads(run("wave", "--model", "nls", "--k", "0.9")[1])["omega"]
        code, out = run("wave", "--model", "nls", "--omega", repr(omega))
        self.assertEqual(0, code)
        self.assertAlmostEqual(0.9, json.loads(out)["k"], delta=1e-9)

    def test_spectrum(self):
        code, out = run(
            "spectrum", "--model", "nls", "--op", "L3", "--k", "0.9", "--N", "128"
        )
        self.assertEqual(0, code)
        record = json.loads(out)
        self.assertEqual((1, 1), (record["n"], record["z"]))
        self.assertEqual("NlsL3", record["kind"])

    def test_constrained_spectrum(self):
        code, out = run(
            "spectrum",
            "--model",
            "nls",
            "--op",
            "l3",
            "--k",
            "0.9",
            "--N",
            "128",
            "--constrained",
        )
        self.assertEqual(0, code)
        record = json.loads(out)
        self.assertEqual((0, 1), (record["n"], record["z"]))

    def test_index(self):
        code, out = run(
            "index", "--model", "nls", "--op", "l3", "--k", "0.9", "--N", "128"
        )
        self.assertEqual(0, code)
        record = json.loads(out)
        self.assertEqual((0, 1), (record["constrained_n"], record["constrained_z"]))

    def test_index_kg_carries_block(self):
        code, out = run("index", "--model", "kg", "--k", "0.9", "--N", "128")
        self.assertEqual(0, code)
        record = json.loads(out)
        self.assertEqual("KgL1", record["kind"])
        self.assertEqual(2, len(record["block_d_matrix"]))

    def test_critical(self):
        code, out = run("critical")
        self.assertEqual(0, code)
        record = json.loads(out)
        self.assertAlmostEqual(0.9089, record["kstar"], delta=5e-4)
        self.assertAlmostEqual(0.8024, record["k1"], delta=5e-4)
        self.assertIsNone(record["c_k1"])

    def test_verdict(self):
        code, out = run("verdict", "--model", "nls", "--k", "0.85", "--N", "128")
        self.assertEqual(0, code)
        self.assertEqual("OrbitallyStable", json.loads(out)["verdict"])

    def test_sweep_csv(self):
        argv = "sweep --quantity d1 --kmin 0.75 --kmax 0.95 --steps 3"
        code, out = run(*argv.split())
        self.assertEqual(0, code)
        lines = out.splitlines()
        self.assertEqual("k,D1", lines[0])
        self.assertEqual(4, len(lines))

    def test_sweep_d3(self):
        code, out = run(
            "sweep",
            "--quantity",
            "d3",
            "--kmin",
            "0.8",
            "--kmax",
            "0.9",
            "--steps",
            "2",
            "--ivp-steps",
            "10000",
        )
        self.assertEqual(0, code)
        self.assertEqual("k,D3", out.splitlines()[0])

    def test_sweep_json(self):
        code, out = run(
            "sweep",
            "--quantity",
            "potential",
            "--kmin",
            "0.75",
            "--kmax",
            "0.95",
            "--steps",
            "3",
            "--format",
            "json",
        )
        self.assertEqual(0, code)
        rows = json.loads(out)
        self.assertEqual(["P", "k"], sorted(rows[0]))

    def test_sweep_output_is_deterministic(self):
        with tempfile.TemporaryDirectory() as tmp:
            target = os.path.join(tmp, "dpp.csv")
            argv = [
                "sweep",
                "--quantity",
                "dpp",
                "--kmin",
                "0.8",
                "--kmax",
                "0.95",
                "--steps",
                "4",
                "--out",
                target,
            ]
            self.assertEqual(0, run(*argv)[0])
            with open(target, "rb") as first:
                before = first.read()
            self.assertEqual(0, run(*argv)[0])
            with open(target, "rb") as second:
                self.assertEqual(before, second.read())
            self.assertTrue(os.path.exists(target + ".failures.ndjson"))

    def test_evolve_series(self):
        code, out = run(
            "evolve",
            "--model",
            "nls",
            "--k",
            "0.85",
            "--T",
            "0.01",
            "--N",
            "64",
            "--sample-every",
            "0.005",
        )
        self.assertEqual(0, code)
        lines = out.splitlines()
        self.assertEqual("t,distance,energy_drift,second_invariant_drift", lines[0])
        self.assertEqual(4, len(lines))

    def test_evolve_summary(self):
        code, out = run(
            "evolve",
            "--model",
            "kg",
            "--k",
            "0.9",
            "--T",
            "0.01",
            "--N",
            "64",
            "--eps",
            "0",
            "--summary",
        )
        self.assertEqual(0, code)
        record = json.loads(out)
        self.assertFalse(record["blow_up"])
        self.assertLess(record["final_distance"], 1e-6)

    def test_json_to_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            target = os.path.join(tmp, "nested", "critical.json")
            code, out = run("critical", "--L", "4", "--out", target)
            self.assertEqual(0, code)
            self.assertEqual("", out)
            with open(target, encoding="utf-8") as report:
                self.assertIsNotNone(json.load(report)["c_k1"])


if __name__ == "__main__":
    unittest.main()
