import json
import logging
from pathlib import Path
from typing import List, Optional

import click
import pandas as pd
from opentelemetry import trace
from pydantic import ValidationError

from ..helpers.config import ModelConfig
from ..helpers.constants import (
    BENCHMARK_BASELINE_WINDOW, DEFAULT_A0, DEFAULT_JOBS, DEFAULT_LEVEL, EXIT_DATA, EXIT_OK, EXIT_USAGE, SIMULATION_REPLICATES
)
from ..helpers.enums import FitMethod
from ..helpers.errors import PriscaError
from ..services.SimulationService import BenchmarkMetrics, SimulationService, SimulationSpec, generate_dataset

logger = logging.getLogger(__name__)
tracer = trace.get_tracer(__name__)

BENCHMARK_COLUMNS = [
    "method", "bias", "hausdorff", "time", "length", "conditional_coverage", "T", "replicates", "failed",
]


def benchmark_row(metrics: BenchmarkMetrics) -> pd.DataFrame:
    """One CSV row in the benchmark output layout."""
    return pd.DataFrame([{
        "method": metrics.method,
        "bias": metrics.bias,
        "hausdorff": metrics.hausdorff,
        "time": metrics.mean_runtime_seconds,
        "length": metrics.mean_set_length,
        "conditional_coverage": metrics.conditional_coverage,
        "T": metrics.T,
        "replicates": metrics.n_replicates,
        "failed": metrics.n_failed,
    }], columns=BENCHMARK_COLUMNS)


class BenchmarkController:
    """Controller for the simulation commands."""

    def __init__(self, simulation_service_cls=SimulationService):
        """
        Initialize the controller.

        Args:
            simulation_service_cls: Class used to run benchmarks
        """
        self.simulation_service_cls = simulation_service_cls
        self.commands: List[click.Command] = []
        self._register_commands()

    def _register_commands(self):
        """Register CLI commands."""

        @click.command("benchmark")
        @click.option("--T", "T", type=click.IntRange(min=2), required=True, help="Series length.")
        @click.option("--reps", type=click.IntRange(min=0), default=SIMULATION_REPLICATES, show_default=True)
        @click.option("--seed", type=int, default=0, show_default=True)
        @click.option("--method", type=click.Choice([m.value for m in FitMethod]),
                      default=FitMethod.PRISCA.value, show_default=True)
        @click.option("--L", "L", type=click.IntRange(min=1), default=None,
                      help="Effects for --method prisca (default floor(T/30)).")
        @click.option("--K", "K", type=click.IntRange(min=0), default=None,
                      help="True number of changes (default floor(sqrt(T)/4)).")
        @click.option("--a0", type=click.FloatRange(min=0, min_open=True), default=DEFAULT_A0, show_default=True)
        @click.option("--p", "p", type=click.FloatRange(0, 1, min_open=True, max_open=True),
                      default=DEFAULT_LEVEL, show_default=True)
        @click.option("--baseline-window", type=click.IntRange(min=0), default=BENCHMARK_BASELINE_WINDOW,
                      show_default=True, help="Detections at or before this index are not scored.")
        @click.option("--jobs", type=int, default=DEFAULT_JOBS, show_default=True)
        @click.option("--out", type=click.Path(dir_okay=False), default=None)
        @click.pass_context
        def benchmark_command(ctx, T, reps, seed, method, L, K, a0, p, baseline_window, jobs, out):
            """Run the simulation study and print averaged metrics as CSV."""
            try:
                spec = SimulationSpec(T=T, K=K, replicates=reps, seed=seed)
                config = ModelConfig(a0=a0, p=p, baseline_window=baseline_window)
            except ValidationError as e:
                click.echo(f"error: {e}", err=True)
                ctx.exit(EXIT_USAGE)

            with tracer.start_as_current_span("benchmark_command"):
                try:
                    result = self.simulation_service_cls(config, jobs=jobs).run_benchmark(
                        spec, FitMethod(method), L=L)
                except PriscaError as e:
                    click.echo(f"error: {e}", err=True)
                    ctx.exit(EXIT_DATA)

            text = benchmark_row(result).to_csv(index=False, lineterminator="\n")
            if out:
                Path(out).write_text(text, encoding="utf-8")
            else:
                click.echo(text, nl=False)
            ctx.exit(EXIT_OK)

        @click.command("simulate")
        @click.option("--T", "T", type=click.IntRange(min=2), required=True, help="Series length.")
        @click.option("--seed", type=int, default=0, show_default=True)
        @click.option("--replicate", type=click.IntRange(min=0), default=0, show_default=True)
        @click.option("--K", "K", type=click.IntRange(min=0), default=None,
                      help="Number of changes (default floor(sqrt(T)/4)).")
        @click.option("--out", type=click.Path(dir_okay=False), required=True,
                      help="CSV file for time,value; the truth goes to <out>.truth.json.")
        @click.pass_context
        def simulate_command(ctx, T, seed, replicate, K, out):
            """Write one simulated dataset and its true change points."""
            try:
                data = generate_dataset(SimulationSpec(T=T, K=K, seed=seed), replicate)
            except PriscaError as e:
                click.echo(f"error: {e}", err=True)
                ctx.exit(EXIT_DATA)

            out_path = Path(out)
            pd.DataFrame({
                "time": range(1, T + 1),
                "value": data.series.values,
            }).to_csv(out_path, index=False, lineterminator="\n", float_format="%.17g")
            truth_path = truth_path_for(out_path)
            truth_path.write_text(json.dumps({
                "T": T,
                "seed": seed,
                "replicate": replicate,
                "change_points": list(data.change_points),
                "variances": list(data.variances),
            }, indent=2) + "\n", encoding="utf-8")
            logger.info("wrote %s and %s", out_path, truth_path)
            ctx.exit(EXIT_OK)

        self.commands.extend([benchmark_command, simulate_command])


def truth_path_for(out: Path) -> Path:
    return out.with_name(out.name + ".truth.json")
