"""
Dataclasses encoding waves, operator discretisations and the reports
produced by the index, stability and evolution computations.
"""

from __future__ import annotations

import logging.config
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
from dataclasses_json import DataClassJsonMixin

log = logging.getLogger(__name__)
logging.basicConfig(format="%(asctime)s %(levelname)s %(name)s %(message)s")

ReportRecord = Dict[str, Any]


class CnoidalError(Exception):
    """Base class of every error raised by this package"""


class DomainError(CnoidalError, ValueError):
    """An input lies outside the domain of the requested operation"""


class InadmissibleWaveError(DomainError):
    """
    The pair (L, k) does not give a Klein-Gordon wave with real speed,
    i.e. w = L^2 / (16 K(k)^2 (2k^2 - 1)) exceeds 1.
    """

    def __init__(self, period: float, k: float, omega: float):
        self.period = period
        self.k = k
        self.omega = omega
        super().__init__(
            f"(L={period}, k={k}) violates the admissibility constraint w < 1 "
            f"(w={omega:.12g}); need L < 4K(k)sqrt(2k^2-1)"
        )


class ConsistencyError(CnoidalError):
    """
    Two independent computations of the same quantity disagree.
    Examples: index formula vs explicit projection, chi-solve vs finite difference.
    """

    def __init__(self, check: str, detail: str):
        self.check = check
        message = f"consistency check '{check}' failed: {detail}"
        log.error(message)
        super().__init__(message)


class EigensolverError(CnoidalError):
    """The dense symmetric eigensolver did not converge"""

    def __init__(self, kind: str, err: Exception):
        message = f"eigensolver failed on {kind}: {err}"
        log.error(message)
        super().__init__(message)


class BlowUpError(CnoidalError):
    """A trajectory produced non-finite or runaway values"""

    def __init__(self, time: float, sup_norm: float):
        self.time = time
        self.sup_norm = sup_norm
        super().__init__(f"blow-up detected at t={time:.6g} (sup norm {sup_norm:.6g})")


class Model(Enum):
    """The two evolution equations whose cnoidal waves are studied"""

    KG = "KG"
    NLS = "NLS"

    @classmethod
    def from_string(cls, model_str: str) -> Model:
        """Parses `kg`, `KG`, `nls`, ... into a Model"""
        lowered = model_str.strip().lower()
        for model in cls:
            if model.value.lower() == lowered:
                return model
        raise DomainError(f"could not parse Model from '{model_str}'")


class OperatorKind(Enum):
    """
    Linearised operators around a cnoidal wave.

    KgL1     -w d_xx - 3 phi^2 + 1
    NlsL2    -d_xx + w - 3 phi^2
    NlsL3    -d_xx + w - phi^2
    KgBlock  [[-d_xx - 3 phi^2 + 1, c d_x], [-c d_x, 1]]
    NlsBlock diag(NlsL2, NlsL3)
    """

    KG_L1 = "KgL1"
    NLS_L2 = "NlsL2"
    NLS_L3 = "NlsL3"
    KG_BLOCK = "KgBlock"
    NLS_BLOCK = "NlsBlock"

    @property
    def model(self) -> Model:
        """The wave model this operator linearises"""
        if self in (OperatorKind.KG_L1, OperatorKind.KG_BLOCK):
            return Model.KG
        return Model.NLS

    @property
    def is_block(self) -> bool:
        """True for the 2x2 matrix operators"""
        return self in (OperatorKind.KG_BLOCK, OperatorKind.NLS_BLOCK)

    @classmethod
    def from_cli(cls, model: Model, op_str: str) -> OperatorKind:
        """Maps the CLI pair (--model, --op) onto an operator kind"""
        table = {
            (Model.KG, "l1"): cls.KG_L1,
            (Model.KG, "block"): cls.KG_BLOCK,
            (Model.NLS, "l2"): cls.NLS_L2,
            (Model.NLS, "l3"): cls.NLS_L3,
            (Model.NLS, "block"): cls.NLS_BLOCK,
        }
        try:
            return table[(model, op_str.lower())]
        except KeyError as err:
            raise DomainError(
                f"operator '{op_str}' is not defined for model {model.value}"
            ) from err


class DMethod(Enum):
    """How a constrained quantity D_i was obtained"""

    CLOSED_FORM = "ClosedForm"
    LINEAR_SOLVE = "LinearSolve"
    IVP = "IVP"


class Verdict(Enum):
    """Outcome of the stability analysis"""

    ORBITALLY_UNSTABLE = "OrbitallyUnstable"
    ORBITALLY_STABLE = "OrbitallyStable"
    INCONCLUSIVE = "Inconclusive"


class Perturbation(Enum):
    """Initial perturbations available to the evolution experiments"""

    NONE = "none"
    ZERO_MEAN_RANDOM = "zero-mean-random"
    MODE = "mode-m"

    @classmethod
    def from_string(cls, kind_str: str) -> Perturbation:
        """Parses the CLI spelling"""
        for kind in cls:
            if kind.value == kind_str.strip().lower():
                return kind
        raise DomainError(f"could not parse Perturbation from '{kind_str}'")


class SweepQuantity(Enum):
    """Quantities tabulated over a modulus grid, with their CSV column"""

    D1 = "d1"
    D3 = "d3"
    DPP = "dpp"
    DPP_OMEGA = "dpp_omega"
    POTENTIAL = "potential"

    @property
    def column(self) -> str:
        """Header of the value column"""
        return {
            SweepQuantity.D1: "D1",
            SweepQuantity.D3: "D3",
            SweepQuantity.DPP: "dpp",
            SweepQuantity.DPP_OMEGA: "dpp_omega",
            SweepQuantity.POTENTIAL: "P",
        }[self]

    @classmethod
    def from_string(cls, quantity_str: str) -> SweepQuantity:
        """Parses `d1`, `d3`, `dpp`, `dpp_omega` or `potential`"""
        for quantity in cls:
            if quantity.value == quantity_str.strip().lower():
                return quantity
        raise DomainError(f"unknown sweep quantity '{quantity_str}'")


@dataclass(frozen=True)
class EllipticPair(DataClassJsonMixin):
    """Complete elliptic integrals K(k) and E(k)"""

    bigK: float  # pylint: disable=invalid-name
    bigE: float  # pylint: disable=invalid-name

    def to_record(self) -> ReportRecord:
        """Stable key names used by the CLI"""
        return {"K": self.bigK, "E": self.bigE}


@dataclass(frozen=True)
class JacobiTriple:
    """
    Values of sn, cn and dn at a point (floats) or on a grid (arrays).
    """

    sn: Any
    cn: Any
    dn: Any


@dataclass(frozen=True)
class WaveParams(DataClassJsonMixin):
    """
    Full parameter record of one cnoidal wave phi(x) = amplitude * cn(scale x, k).

    KG : omega = 1 - c^2, amplitude = sqrt(2) k / sqrt(2k^2 - 1)
    NLS: omega is the standing frequency, amplitude = sqrt(2 omega) k / sqrt(2k^2 - 1)
    In both cases scale = 4K(k)/L. `c` is None for NLS and for KG parameters
    built outside the admissible range (omega > 1).
    """

    # pylint: disable=too-many-instance-attributes,invalid-name

    model: Model
    L: float
    k: float
    omega: float
    amplitude: float
    scale: float
    c: Optional[float] = None

    @property
    def has_speed(self) -> bool:
        """True for admissible KG parameters"""
        return self.model == Model.KG and self.c is not None

    def __str__(self) -> str:
        speed = "" if self.c is None else f", c={self.c:.10g}"
        return (
            f"{self.model.value}(L={self.L:.10g}, k={self.k:.10g}, "
            f"omega={self.omega:.10g}{speed})"
        )


@dataclass
class SampledProfile:
    """A wave sampled on the left-closed uniform grid x_j = jL/N"""

    params: WaveParams
    xs: np.ndarray
    values: np.ndarray

    @property
    def size(self) -> int:
        """Number of grid points"""
        return int(self.xs.shape[0])

    @property
    def spacing(self) -> float:
        """Grid spacing L/N"""
        return self.params.L / self.size


@dataclass
class OperatorMatrix:
    """Dense symmetric discretisation of a linearised operator"""

    kind: OperatorKind
    params: WaveParams
    N: int  # pylint: disable=invalid-name
    entries: np.ndarray

    @property
    def dimension(self) -> int:
        """N for scalar kinds, 2N for block kinds"""
        return int(self.entries.shape[0])

    def asymmetry(self) -> float:
        """max |M - M^T|"""
        return float(np.max(np.abs(self.entries - self.entries.T)))


@dataclass
class SpectrumReport:
    """Sorted eigenvalues and the counts n (negative) and z (kernel)"""

    eigenvalues: np.ndarray
    zero_tol: float
    n_neg: int
    z_dim: int
    eigenvectors: Optional[np.ndarray] = None

    @property
    def n_pos(self) -> int:
        """Number of eigenvalues above the zero tolerance"""
        return int(self.eigenvalues.shape[0]) - self.n_neg - self.z_dim

    def kernel(self) -> np.ndarray:
        """Eigenvectors whose eigenvalues lie within the zero tolerance"""
        assert self.eigenvectors is not None, "spectrum computed without vectors"
        return self.eigenvectors[:, self.n_neg : self.n_neg + self.z_dim]

    def to_record(self, limit: int = 10) -> ReportRecord:
        """JSON-ready summary with the first `limit` eigenvalues"""
        return {
            "eigenvalues": [float(v) for v in self.eigenvalues[:limit]],
            "n": self.n_neg,
            "z": self.z_dim,
            "zero_tol": self.zero_tol,
        }


@dataclass(frozen=True)
class DQuantity(DataClassJsonMixin):
    """One of the constrained quantities D_i = (L_i^{-1} 1, 1)"""

    which: str
    value: float
    method: DMethod


@dataclass
class GreenSolve:
    """
    Solution of an IVP on the wave's period: p solves -p'' + w p - phi^2 p = 1,
    y solves the homogeneous equation with y(0) = 0, y'(0) = 1/phi(0).
    """

    # pylint: disable=too-many-instance-attributes

    xs: np.ndarray
    p: np.ndarray
    dp: np.ndarray
    theta: Optional[float] = None
    periodicity_defect: float = 0.0
    derivative_defect: float = 0.0
    wronskian_defect: Optional[float] = None
    flagged: bool = False
    y: Optional[np.ndarray] = None
    y_integral: Optional[float] = None


@dataclass
class IndexReport(DataClassJsonMixin):
    """
    Unconstrained counts, the D-matrix of the zero-mean constraint and the
    constrained counts n(A_Pi) = n(A) - n0 - z0, z(A_Pi) = z(A) + z0.
    The projected_* fields hold the counts of the explicitly projected matrix.
    """

    # pylint: disable=too-many-instance-attributes

    kind: OperatorKind
    unconstrained_n: int
    unconstrained_z: int
    d_value: float
    d_matrix: List[List[float]]
    n0: int
    z0: int
    constrained_n: int
    constrained_z: int
    projected_n: int = -1
    projected_z: int = -1

    @classmethod
    def from_counts(
        cls,
        kind: OperatorKind,
        counts: tuple[int, int],
        d_matrix: np.ndarray,
        tie_tol: float,
    ) -> IndexReport:
        """Applies the index formulas to the counts and the D-matrix"""
        d_eigs = np.linalg.eigvalsh(d_matrix)
        n0 = int(np.sum(d_eigs < -tie_tol))
        z0 = int(np.sum(np.abs(d_eigs) <= tie_tol))
        n_neg, z_dim = counts
        return cls(
            kind=kind,
            unconstrained_n=n_neg,
            unconstrained_z=z_dim,
            d_value=float(d_matrix[0, 0]),
            d_matrix=[[float(v) for v in row] for row in d_matrix],
            n0=n0,
            z0=z0,
            constrained_n=n_neg - n0 - z0,
            constrained_z=z_dim + z0,
        )

    @property
    def consistent(self) -> bool:
        """Formula and projection agree"""
        return (self.constrained_n, self.constrained_z) == (
            self.projected_n,
            self.projected_z,
        )


@dataclass(frozen=True)
class PotentialWellReport(DataClassJsonMixin):
    """
    Closed-form value of the potential P_w at the wave and the level d_w.
    `functional_value` is the defining functional P_w evaluated by quadrature;
    on the wave it equals 1/4 int phi^4, so it stays positive where the closed
    form changes sign at K(k) = 2. `scaling_check` is the relative gap of
    P_w(phi_w) = sqrt(w) P_1(phi_1) with both sides taken by quadrature.
    """

    # pylint: disable=invalid-name

    L: float
    k: float
    omega: float
    P_value: float
    d_level: float
    scaling_check: float
    functional_value: float


@dataclass(frozen=True)
class DppOmegaReport(DataClassJsonMixin):
    """
    d''(w) by two independent routes: central differences of d'(w) = 1/2 int phi^2,
    and -(chi, phi) with L2 chi = phi.
    """

    omega: float
    finite_difference: float
    chi_solve: float

    @property
    def relative_gap(self) -> float:
        """|a - b| / |b|"""
        return abs(self.finite_difference - self.chi_solve) / abs(self.chi_solve)


@dataclass(frozen=True)
class RegimeBounds(DataClassJsonMixin):
    """Critical moduli and the speeds / frequencies they induce at fixed L"""

    kstar: float
    k1: float
    c_k1: Optional[float]
    cstar: Optional[float]
    omegastar: float


@dataclass
class StabilityVerdict(DataClassJsonMixin):
    """d'' value, constrained counts and the resulting conclusion"""

    # pylint: disable=too-many-instance-attributes,invalid-name

    model: Model
    L: float
    k: float
    omega: float
    c: Optional[float]
    dpp: float
    constrained_n: int
    constrained_z: int
    verdict: Verdict
    reason: str
    regime_bounds: RegimeBounds


@dataclass
class FieldState:
    """
    A point of the phase space on the periodic grid.
    KG : u is the real displacement, v = u_t.
    NLS: u is the complex field, v is None.
    """

    model: Model
    t: float
    L: float  # pylint: disable=invalid-name
    u: np.ndarray
    v: Optional[np.ndarray] = None

    @property
    def N(self) -> int:  # pylint: disable=invalid-name
        """Number of grid points"""
        return int(self.u.shape[0])

    def copy(self) -> FieldState:
        """Deep copy of the arrays"""
        return FieldState(
            model=self.model,
            t=self.t,
            L=self.L,
            u=self.u.copy(),
            v=None if self.v is None else self.v.copy(),
        )

    def sup_norm(self) -> float:
        """max |u| (and |v| for KG)"""
        sup = float(np.max(np.abs(self.u)))
        if self.v is not None:
            sup = max(sup, float(np.max(np.abs(self.v))))
        return sup

    def is_finite(self) -> bool:
        """False once any entry is NaN or infinite"""
        finite = bool(np.all(np.isfinite(self.u)))
        if self.v is not None:
            finite = finite and bool(np.all(np.isfinite(self.v)))
        return finite


@dataclass(frozen=True)
class ConservedPair(DataClassJsonMixin):
    """
    KG : (E, F) energy and momentum.
    NLS: (script E, script F) energy and mass.
    """

    energy: float
    momentum_or_mass: float

    def relative_drift(self, reference: ConservedPair) -> ConservedPair:
        """|Q(t) - Q(0)| / |Q(0)| componentwise (absolute when Q(0) = 0)"""

        def rel(now: float, then: float) -> float:
            scale = abs(then) if then != 0.0 else 1.0
            return abs(now - then) / scale

        return ConservedPair(
            energy=rel(self.energy, reference.energy),
            momentum_or_mass=rel(self.momentum_or_mass, reference.momentum_or_mass),
        )


@dataclass
class OrbitDistanceSeries:
    """Orbital distance and conservation drift sampled along a trajectory"""

    times: List[float] = field(default_factory=list)
    distances: List[float] = field(default_factory=list)
    energy_drift: List[float] = field(default_factory=list)
    second_invariant_drift: List[float] = field(default_factory=list)

    def append(self, time: float, distance: float, drift: ConservedPair) -> None:
        """Adds one sample"""
        self.times.append(time)
        self.distances.append(distance)
        self.energy_drift.append(drift.energy)
        self.second_invariant_drift.append(drift.momentum_or_mass)

    def to_rows(self) -> List[ReportRecord]:
        """Rows with the documented CSV columns"""
        return [
            {
                "t": t,
                "distance": d,
                "energy_drift": e,
                "second_invariant_drift": s,
            }
            for t, d, e, s in zip(
                self.times,
                self.distances,
                self.energy_drift,
                self.second_invariant_drift,
            )
        ]


@dataclass(frozen=True)
class ExperimentConfig(DataClassJsonMixin):
    """Everything that determines one evolution experiment"""

    # pylint: disable=too-many-instance-attributes,invalid-name

    model: Model
    L: float
    k: float
    eps: float = 1e-3
    T: float = 10.0
    dt: float = 1e-3
    N: int = 256
    seed: int = 0
    perturbation: Perturbation = Perturbation.ZERO_MEAN_RANDOM
    mode: int = 1
    project_zero_mean: bool = False
    sample_every: float = 0.5
    nls_order: int = 2


@dataclass
class ExperimentReport:
    """Result of `evolution.run_experiment`"""

    config: ExperimentConfig
    series: OrbitDistanceSeries
    max_drift: ConservedPair
    blow_up: bool = False
    blow_up_time: Optional[float] = None

    @property
    def initial_distance(self) -> float:
        """Orbital distance at t = 0"""
        return self.series.distances[0]

    @property
    def growth_factor(self) -> float:
        """max distance / initial distance (inf after blow-up)"""
        if self.blow_up:
            return math.inf
        initial = self.initial_distance
        peak = max(self.series.distances)
        return peak / initial if initial > 0 else math.inf
