"""
Command line entry point: `cnoidal <subcommand> [flags]`.

Exit codes: 0 success, 1 domain (input) error, 2 failed internal consistency
check or eigensolver failure, 64 malformed command line.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, NoReturn, Optional, Sequence

from dataclasses_json import DataClassJsonMixin

from cnoidal import elliptic, evolution, index, operators, stability, waves
from cnoidal.file.base import CSVFile, dumps
from cnoidal.file.interface import ArtifactDir
from cnoidal.models import (
    CnoidalError,
    ConsistencyError,
    DomainError,
    EigensolverError,
    ExperimentConfig,
    Model,
    OperatorKind,
    Perturbation,
    ReportRecord,
    SweepQuantity,
)
from cnoidal.util import get_package_version

log = logging.getLogger(__name__)
logging.basicConfig(format="%(asctime)s %(levelname)s %(name)s %(message)s")

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_CONSISTENCY = 2
EXIT_USAGE = 64
DEFAULT_PERIOD = 2.0 * math.pi
OPERATOR_CHOICES = ["L1", "L2", "L3", "block", "l1", "l2", "l3"]


@dataclass(frozen=True)
class Settings:
    """Environment configuration of the command line tool"""

    threads: int
    log_level: str

    @classmethod
    def from_env(cls) -> Settings:
        """
        `CNOIDAL_THREADS` caps the sweep worker pool (default: cpu count),
        `CNOIDAL_LOG_LEVEL` is the default for --log-level (default WARNING).
        """
        threads = os.environ.get("CNOIDAL_THREADS")
        return cls(
            threads=max(1, int(threads)) if threads else (os.cpu_count() or 1),
            log_level=os.environ.get("CNOIDAL_LOG_LEVEL", "WARNING").upper(),
        )


class CnoidalArgumentParser(argparse.ArgumentParser):
    """Reports flag-grammar errors with exit code 64"""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _record(report: DataClassJsonMixin) -> ReportRecord:
    record: ReportRecord = json.loads(report.to_json())
    return record


def emit(report: Any, fmt: str, path: Optional[str]) -> None:
    """
    Writes a report: JSON (sorted keys, round-trip floats) or CSV (list of
    rows with a fixed header, 17 significant digits), to `path` or stdout.
    """
    if fmt == "csv":
        rows: List[ReportRecord] = report if isinstance(report, list) else [report]
        if path is None:
            CSVFile(".", "-").dump(sys.stdout, rows, header=True)
            return
        ArtifactDir.for_target(path).write_table(rows, Path(path).name)
        return
    if path is None:
        sys.stdout.write(dumps(report) + "\n")
        return
    ArtifactDir.for_target(path).write_report(report, Path(path).name)


def _wave_from_args(args: argparse.Namespace) -> Any:
    model = Model.from_string(args.model)
    if args.k is not None:
        return waves.from_k(model, args.L, args.k)
    if model == Model.KG:
        if args.c is None:
            raise DomainError("KG waves are selected by --k or --c")
        return waves.kg_from_k(args.L, waves.kg_k_from_c(args.L, args.c))
    if args.omega is None:
        raise DomainError("NLS waves are selected by --k or --omega")
    return waves.nls_from_k(args.L, waves.nls_k_from_omega(args.L, args.omega))


def cmd_elliptic(args: argparse.Namespace) -> Any:
    """K, E and their k-derivatives"""
    record = elliptic.complete_elliptic(args.k).to_record()
    record["dK_dk"] = elliptic.d_bigK_dk(args.k)
    record["dE_dk"] = elliptic.d_bigE_dk(args.k)
    record["k"] = args.k
    return record


def cmd_wave(args: argparse.Namespace) -> Any:
    """Profile samples x,phi (CSV) or the wave parameters with the ODE residual"""
    params = _wave_from_args(args)
    sampled = waves.sample(params, args.samples)
    if _output_format(args) == "csv":
        return [
            {"x": float(x), "phi": float(value)}
            for x, value in zip(sampled.xs, sampled.values)
        ]
    record = _record(params)
    record["ode_residual"] = waves.ode_residual(sampled)
    if params.model == Model.KG:
        record["kmin"] = float(waves.kg_kmin(args.L))
    return record


def cmd_spectrum(args: argparse.Namespace) -> Any:
    """First eigenvalues and the counts n, z"""
    model = Model.from_string(args.model)
    kind = OperatorKind.from_cli(model, args.op)
    params = waves.from_k(model, args.L, args.k, strict=kind.is_block)
    matrix = operators.build(kind, params, args.N)
    report = operators.spectrum(matrix, zero_tol=args.zero_tol)
    if args.constrained:
        report = operators.projected_spectrum(matrix, report.zero_tol)
    record = report.to_record()
    record["kind"] = kind.value
    if args.hamiltonian and kind.is_block:
        record["max_real_growth"] = float(
            max(value.real for value in operators.hamiltonian_spectrum(matrix))
        )
    return record


def cmd_index(args: argparse.Namespace) -> Any:
    """Index report; KG adds the block D-matrix when the wave has a speed"""
    model = Model.from_string(args.model)
    default_op = "l1" if model == Model.KG else "l2"
    kind = OperatorKind.from_cli(model, args.op or default_op)
    params = waves.from_k(model, args.L, args.k, strict=kind.is_block)
    record = _record(index.index_report(kind, params, args.N))
    if model == Model.KG and params.c is not None:
        block = index.kg_block_dmatrix(params, args.N)
        record["block_d_matrix"] = [[float(v) for v in row] for row in block]
    return record


def cmd_critical(args: argparse.Namespace) -> Any:
    """k*, k1 and the speeds / frequency they induce at L"""
    record = _record(stability.regime_bounds(args.L))
    record["L"] = args.L
    record["kmin"] = float(waves.kg_kmin(args.L))
    return record


def cmd_verdict(args: argparse.Namespace) -> Any:
    """Stability verdict"""
    model = Model.from_string(args.model)
    result = stability.verdict(
        model, args.L, speed=args.c, omega=args.omega, k=args.k, n_points=args.N
    )
    return _record(result)


def cmd_sweep(args: argparse.Namespace, settings: Settings) -> Any:
    """Quantity over a modulus grid; failures go to <out>.failures.ndjson"""
    quantity = SweepQuantity.from_string(args.quantity)
    workers = min(args.workers or settings.threads, settings.threads)
    rows, failures = stability.sweep(
        quantity,
        args.L,
        (args.kmin, args.kmax),
        args.steps,
        max_workers=workers,
        ivp_steps=args.ivp_steps,
    )
    if failures and args.out is not None:
        target = Path(args.out)
        ArtifactDir.for_target(target).append_failures(
            failures, target.name + ".failures.ndjson"
        )
    return rows


def _finite_or_none(value: float) -> Optional[float]:
    return value if math.isfinite(value) else None


def cmd_evolve(args: argparse.Namespace) -> Any:
    """Runs one experiment; the series is the CSV artifact"""
    config = ExperimentConfig(
        model=Model.from_string(args.model),
        L=args.L,
        k=args.k,
        eps=args.eps,
        T=args.T,
        dt=args.dt,
        N=args.N,
        seed=args.seed,
        perturbation=Perturbation.from_string(args.perturbation),
        mode=args.mode,
        project_zero_mean=args.project,
        sample_every=args.sample_every,
        nls_order=args.order,
    )
    report = evolution.run_experiment(config)
    if args.summary:
        return {
            "initial_distance": report.initial_distance,
            "final_distance": report.series.distances[-1],
            "growth_factor": _finite_or_none(report.growth_factor),
            "blow_up": report.blow_up,
            "blow_up_time": report.blow_up_time,
            "max_energy_drift": report.max_drift.energy,
            "max_second_invariant_drift": report.max_drift.momentum_or_mass,
        }
    return report.series.to_rows()


def _add_common(sub: argparse.ArgumentParser, with_model: bool = True) -> None:
    if with_model:
        sub.add_argument("--model", choices=["kg", "nls", "KG", "NLS"], required=True)
    sub.add_argument("--L", type=float, default=DEFAULT_PERIOD, help="period")
    sub.add_argument("--out", default=None, help="output file (default: stdout)")


def _add_selector(sub: argparse.ArgumentParser, allow_k: bool = True) -> None:
    group = sub.add_mutually_exclusive_group(required=True)
    if allow_k:
        group.add_argument("--k", type=float, help="elliptic modulus")
    group.add_argument("--c", type=float, help="KG speed")
    group.add_argument("--omega", type=float, help="NLS frequency")


def build_parser(settings: Settings) -> CnoidalArgumentParser:
    """The full flag grammar"""
    parser = CnoidalArgumentParser(prog="cnoidal", description=__doc__)
    parser.add_argument(
        "--version", action="version", version=get_package_version("cnoidal") or "dev"
    )
    parser.add_argument(
        "--log-level",
        default=settings.log_level,
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        type=str.upper,
    )
    subparsers = parser.add_subparsers(dest="subcommand", required=True)

    sub = subparsers.add_parser("elliptic", help="K(k), E(k)")
    sub.add_argument("--k", type=float, required=True)
    sub.add_argument("--out", default=None)

    sub = subparsers.add_parser("wave", help="wave profile or parameters")
    _add_common(sub)
    _add_selector(sub)
    sub.add_argument("--samples", "--N", dest="samples", type=int, default=256)
    sub.add_argument(
        "--format",
        choices=["csv", "json"],
        default=None,
        help="csv: x,phi samples; json: parameters (default: by --out suffix)",
    )

    sub = subparsers.add_parser("spectrum", help="operator spectrum")
    _add_common(sub)
    sub.add_argument("--op", required=True, choices=OPERATOR_CHOICES)
    sub.add_argument("--k", type=float, required=True)
    sub.add_argument("--N", type=int, default=256)
    sub.add_argument("--zero-tol", type=float, default=None)
    sub.add_argument("--constrained", action="store_true")
    sub.add_argument("--hamiltonian", action="store_true", help="report max Re(J M)")

    sub = subparsers.add_parser("index", help="constrained counts")
    _add_common(sub)
    sub.add_argument("--op", default=None, choices=OPERATOR_CHOICES)
    sub.add_argument("--k", type=float, required=True)
    sub.add_argument("--N", type=int, default=256)

    sub = subparsers.add_parser("critical", help="k*, k1, c*, w*")
    _add_common(sub, with_model=False)

    sub = subparsers.add_parser("verdict", help="stability verdict")
    _add_common(sub)
    _add_selector(sub)
    sub.add_argument("--N", type=int, default=256)

    sub = subparsers.add_parser("sweep", help="tabulate a quantity in k")
    _add_common(sub, with_model=False)
    sub.add_argument(
        "--quantity", required=True, choices=[q.value for q in SweepQuantity]
    )
    sub.add_argument("--kmin", type=float, required=True)
    sub.add_argument("--kmax", type=float, required=True)
    sub.add_argument("--steps", type=int, required=True)
    sub.add_argument("--ivp-steps", type=int, default=index.DEFAULT_IVP_STEPS)
    sub.add_argument("--workers", type=int, default=None)
    sub.add_argument("--format", choices=["csv", "json"], default="csv")

    sub = subparsers.add_parser("evolve", help="evolution experiment")
    _add_common(sub)
    sub.add_argument("--k", type=float, required=True)
    sub.add_argument("--eps", type=float, default=1e-3)
    sub.add_argument("--T", type=float, default=10.0)
    sub.add_argument("--dt", type=float, default=1e-3)
    sub.add_argument("--N", type=int, default=256)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument(
        "--perturbation",
        choices=[p.value for p in Perturbation],
        default=Perturbation.ZERO_MEAN_RANDOM.value,
    )
    sub.add_argument("--mode", type=int, default=1)
    sub.add_argument("--project", action="store_true", help="zero-mean projection")
    sub.add_argument("--order", type=int, choices=[2, 4], default=2)
    sub.add_argument("--sample-every", type=float, default=0.5)
    sub.add_argument("--summary", action="store_true", help="JSON summary, no CSV")
    return parser


_COMMANDS: Dict[str, Callable[[argparse.Namespace], Any]] = {
    "elliptic": cmd_elliptic,
    "wave": cmd_wave,
    "spectrum": cmd_spectrum,
    "index": cmd_index,
    "critical": cmd_critical,
    "verdict": cmd_verdict,
    "evolve": cmd_evolve,
}


def _output_format(args: argparse.Namespace) -> str:
    if args.subcommand == "sweep":
        return str(args.format)
    if args.subcommand == "wave":
        if args.format is not None:
            return str(args.format)
        suffix = "" if args.out is None else Path(args.out).suffix.lower()
        return "csv" if suffix == ".csv" else "json"
    if args.subcommand == "evolve" and not args.summary:
        return "csv"
    return "json"


def dispatch(argv: Sequence[str], settings: Optional[Settings] = None) -> int:
    """Runs one command line and returns its exit code"""
    settings = settings or Settings.from_env()
    parser = build_parser(settings)
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exit_:
        return int(exit_.code or 0)
    logging.getLogger("cnoidal").setLevel(args.log_level)
    try:
        if args.subcommand == "sweep":
            report = cmd_sweep(args, settings)
        else:
            report = _COMMANDS[args.subcommand](args)
        emit(report, _output_format(args), args.out)
    except DomainError as err:
        sys.stderr.write(f"domain error: {err}\n")
        return EXIT_DOMAIN
    except (ConsistencyError, EigensolverError) as err:
        sys.stderr.write(f"consistency failure: {err}\n")
        return EXIT_CONSISTENCY
    except CnoidalError as err:
        sys.stderr.write(f"error: {err}\n")
        return EXIT_CONSISTENCY
    except OSError as err:
        sys.stderr.write(f"{err}\n")
        return EXIT_DOMAIN
    return EXIT_OK


def main() -> None:
    """console_scripts entry point"""
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
