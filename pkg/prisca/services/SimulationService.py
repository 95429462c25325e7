import logging
import math
import time
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from opentelemetry import metrics, trace
from pydantic import BaseModel, ConfigDict, Field

from ..core.model_core import TimeSeries
from ..core.summaries import ChangePointReport, detect
from ..helpers.config import ModelConfig
from ..helpers.constants import (
    PLACEMENT_MAX_ATTEMPTS, SIMULATION_LOG_SD, SIMULATION_MAX_SPACING, SIMULATION_REPLICATES
)
from ..helpers.enums import FitMethod
from ..helpers.errors import InfeasibleSpecError
from ..helpers.MethodFactory import MethodFactory
from .metrics import coverage_counts, hausdorff_like

logger = logging.getLogger(__name__)
tracer = trace.get_tracer(__name__)
meter = metrics.get_meter(__name__)

counter_replicates = meter.create_counter(
    name="prisca_benchmark_replicates_total",
    unit="1",
    description="The number of benchmark replicates run",
)


class SimulationSpec(BaseModel):
    """
    Design of the simulation study.

    Attributes:
        T: Series length
        K: Number of changes; floor(sqrt(T)/4) if None
        replicates: Number of datasets
        seed: Base seed; replicate i uses the stream (seed, i)
        log_sd: Standard deviation of the segment log-variances
    """
    model_config = ConfigDict(frozen=True)

    T: int = Field(..., ge=2)
    K: Optional[int] = Field(None, ge=0)
    replicates: int = Field(SIMULATION_REPLICATES, ge=0)
    seed: int = 0
    log_sd: float = Field(SIMULATION_LOG_SD, gt=0)

    @property
    def n_changes(self) -> int:
        return self.K if self.K is not None else math.floor(math.sqrt(self.T) / 4)

    @property
    def min_spacing(self) -> float:
        return min(math.sqrt(self.T), SIMULATION_MAX_SPACING)

    @property
    def detection_radius(self) -> float:
        return self.min_spacing / 2

    def check_feasible(self) -> None:
        """
        Raises:
            InfeasibleSpecError: If there is no change to place or the changes
                cannot be spaced inside 2..T-2
        """
        K = self.n_changes
        if K < 1:
            raise InfeasibleSpecError(
                f"T={self.T} gives K={K}: no change points to place"
            )
        gap = math.ceil(self.min_spacing)
        if K > self.T - 3 or K * self.min_spacing >= self.T or (K - 1) * gap > self.T - 4:
            raise InfeasibleSpecError(
                f"cannot place {K} changes {self.min_spacing:.2f} apart in a series of length {self.T}"
            )


@dataclass(frozen=True)
class SimulatedDataset:
    series: TimeSeries
    change_points: Tuple[int, ...]
    variances: Tuple[float, ...]


class BenchmarkMetrics(BaseModel):
    """Averages over the successful replicates of a benchmark."""
    model_config = ConfigDict(frozen=True)

    method: str
    T: int
    n_replicates: int
    n_failed: int = 0
    bias: float
    hausdorff: float
    mean_set_length: float
    conditional_coverage: float
    mean_runtime_seconds: float


@dataclass(frozen=True)
class ReplicateOutcome:
    index: int
    failed: bool
    bias: float = math.nan
    hausdorff: float = math.nan
    set_lengths: Tuple[int, ...] = ()
    covered: int = 0
    detected: int = 0
    runtime: float = math.nan


def generate_dataset(spec: SimulationSpec, replicate: int) -> SimulatedDataset:
    """
    Draw one dataset of the simulation study.

    Change instants are uniform on 2..T-2, redrawn until every gap is at least
    min(sqrt(T), 30); segment variances are lognormal(0, log_sd). Output is
    determined by (spec.seed, replicate).

    Args:
        spec: Simulation design
        replicate: Replicate index

    Returns:
        SimulatedDataset with 1-based change instants (first instant of each
        new segment)

    Raises:
        InfeasibleSpecError: If the changes cannot be placed
    """
    spec.check_feasible()
    rng = np.random.default_rng([spec.seed, replicate])
    K, T = spec.n_changes, spec.T

    for _ in range(PLACEMENT_MAX_ATTEMPTS):
        locations = np.sort(rng.choice(np.arange(2, T - 1), size=K, replace=False))
        if K == 1 or np.min(np.diff(locations)) >= spec.min_spacing:
            break
    else:
        raise InfeasibleSpecError(
            f"no admissible placement of {K} changes after {PLACEMENT_MAX_ATTEMPTS} draws"
        )

    variances = np.exp(rng.normal(0.0, spec.log_sd, size=K + 1))
    segment = np.searchsorted(locations, np.arange(1, T + 1), side="right")
    values = rng.standard_normal(T) * np.sqrt(variances[segment])
    return SimulatedDataset(
        series=TimeSeries(values),
        change_points=tuple(int(c) for c in locations),
        variances=tuple(float(v) for v in variances),
    )


def run_replicate(spec: SimulationSpec,
                  method: FitMethod,
                  config: ModelConfig,
                  index: int,
                  L: Optional[int] = None) -> ReplicateOutcome:
    """Generate, fit, detect and score one replicate; failures are reported, not raised."""
    try:
        data = generate_dataset(spec, index)
        truth = data.change_points
        fitter = MethodFactory().create_fitter(method, config, L=L, true_K=len(truth))

        start = time.perf_counter()
        result = fitter(data.series)
        runtime = time.perf_counter() - start

        return score_report(detect(result), truth, spec, index=index, runtime=runtime)
    except Exception as e:
        logger.warning("replicate %d failed: %s", index, e)
        return ReplicateOutcome(index=index, failed=True)


def score_report(report: ChangePointReport,
                 truth: Sequence[int],
                 spec: SimulationSpec,
                 index: int = 0,
                 runtime: float = math.nan) -> ReplicateOutcome:
    """
    Score one detection report against the planted changes.

    Detections flagged as baseline changes are left out: they describe the
    unknown starting variance, not a planted change.
    """
    scored = [d for d in report.detections if not d.baseline]
    estimates = [d.estimate for d in scored]
    sets = [d.credible_set.indices for d in scored]
    covered, detected = coverage_counts(estimates, sets, truth, spec.detection_radius)
    return ReplicateOutcome(
        index=index,
        failed=False,
        bias=float(len(truth) - len(scored)),
        hausdorff=hausdorff_like(estimates, truth, spec.T),
        set_lengths=tuple(len(s) for s in sets),
        covered=covered,
        detected=detected,
        runtime=runtime,
    )


def _mean(values: List[float]) -> float:
    return float(np.mean(values)) if values else math.nan


def aggregate(method: FitMethod, spec: SimulationSpec, outcomes: List[ReplicateOutcome]) -> BenchmarkMetrics:
    """Average replicate outcomes in replicate order."""
    ok = [o for o in sorted(outcomes, key=lambda o: o.index) if not o.failed]
    lengths = [n for o in ok for n in o.set_lengths]
    detected = sum(o.detected for o in ok)
    return BenchmarkMetrics(
        method=method.value,
        T=spec.T,
        n_replicates=len(ok),
        n_failed=len(outcomes) - len(ok),
        bias=_mean([o.bias for o in ok]),
        hausdorff=_mean([o.hausdorff for o in ok]),
        mean_set_length=_mean(lengths),
        conditional_coverage=sum(o.covered for o in ok) / detected if detected else math.nan,
        mean_runtime_seconds=_mean([o.runtime for o in ok]),
    )


class SimulationService:
    """Runs the simulation study for one method."""

    def __init__(self, config: ModelConfig, jobs: int = 1):
        """
        Initialize the simulation service.

        Args:
            config: Model configuration shared by every replicate
            jobs: Number of parallel workers (joblib semantics, -1 for all cores)
        """
        self.config = config
        self.jobs = jobs

    def run_benchmark(self,
                      spec: SimulationSpec,
                      method: FitMethod,
                      L: Optional[int] = None) -> BenchmarkMetrics:
        """
        Run every replicate of spec and average the metrics.

        Args:
            spec: Simulation design
            method: PRISCA, auto-PRISCA or the oracle
            L: Number of effects for FitMethod.PRISCA; floor(T/30) if None

        Returns:
            BenchmarkMetrics; NaN averages when no replicate succeeded

        Raises:
            InfeasibleSpecError: If spec cannot be simulated
        """
        with tracer.start_as_current_span("run_benchmark") as span:
            span.set_attribute("series_length", spec.T)
            span.set_attribute("replicates", spec.replicates)
            span.set_attribute("method", method.value)
            spec.check_feasible()

            outcomes = Parallel(n_jobs=self.jobs)(
                delayed(run_replicate)(spec, method, self.config, i, L)
                for i in range(spec.replicates)
            ) if spec.replicates else []
            counter_replicates.add(len(outcomes))

            result = aggregate(method, spec, list(outcomes))
            if result.n_failed:
                logger.warning("%d of %d replicates failed", result.n_failed, spec.replicates)
            span.set_attribute("failed", result.n_failed)
            return result


def run_benchmark(spec: SimulationSpec,
                  method: FitMethod,
                  config: ModelConfig,
                  L: Optional[int] = None,
                  jobs: int = 1) -> BenchmarkMetrics:
    """Functional form of SimulationService.run_benchmark."""
    return SimulationService(config, jobs=jobs).run_benchmark(spec, method, L=L)
