import logging
import time
from pathlib import Path
from typing import List, Optional, Tuple

import click
import pandas as pd
from joblib import Parallel, delayed
from opentelemetry import trace
from pydantic import BaseModel, ConfigDict, ValidationError

from ..core.extensions.ArResidualizer import ArSpec, ar_residualize
from ..core.extensions.differencing import fold_periodic, thin
from ..core.PriscaEngine import default_L
from ..core.summaries import detect
from ..helpers.config import ModelConfig
from ..helpers.constants import (
    DEFAULT_A0, DEFAULT_EPSILON, DEFAULT_JOBS, DEFAULT_LEVEL, DEFAULT_MAX_ITER,
    EXIT_DATA, EXIT_NOT_CONVERGED, EXIT_OK, EXIT_USAGE
)
from ..helpers.enums import DetrendKind, FitMethod, LRule, ReportFormat
from ..helpers.errors import InvalidConfigError, PriscaError
from ..helpers.MethodFactory import MethodFactory
from ..services.ingest import ingest
from ..services.ReportService import InputDigest, ReportDocument, build_report, plot_table, serialize

logger = logging.getLogger(__name__)
tracer = trace.get_tracer(__name__)


class DetectOptions(BaseModel):
    """Everything the detect command needs to process one file."""
    model_config = ConfigDict(frozen=True)

    config: ModelConfig
    method: FitMethod
    L: Optional[int] = None
    detrend: DetrendKind = DetrendKind.NONE
    ar_order: int = 0
    period: Optional[int] = None
    thin_step: Optional[int] = None
    emit_alpha: bool = False
    emit_variance: bool = False
    with_meta: bool = True


def detect_file(path: str, options: DetectOptions,
                factory: Optional[MethodFactory] = None) -> Tuple[ReportDocument, pd.DataFrame]:
    """
    Run ingest -> preprocessing -> fit -> detect on one file.

    Args:
        path: Input file
        options: Command options
        factory: MethodFactory to build detrenders and fitters

    Returns:
        The report document and the plot-data table
    """
    factory = factory or MethodFactory()
    with tracer.start_as_current_span("detect_file") as span:
        span.set_attribute("source", path)
        start = time.perf_counter()
        series = ingest(path)
        steps: List[str] = []

        if options.thin_step and options.thin_step > 1:
            series = thin(series, options.thin_step)
            steps.append(f"thin:{options.thin_step}")
        if options.period:
            series = fold_periodic(series, options.period)
            steps.append(f"fold:{options.period}")

        detrender = factory.create_detrender(options.detrend)
        series = detrender.apply(series)
        axis_note = detrender.axis_note
        if options.detrend != DetrendKind.NONE:
            steps.append(options.detrend.value)

        ar_spec = None
        offset = 0
        if options.ar_order > 0:
            L = options.L if options.L is not None else default_L(series.T - options.ar_order, LRule.TABLE)
            config = options.config.model_copy(update={"L": L})
            ar_spec, series, result = ar_residualize(series, ArSpec(order=options.ar_order), config)
            offset = options.ar_order
            steps.append(f"ar:{options.ar_order}")
            axis_note += f"; AR residual index i is instant i+{offset}"
        else:
            fitter = factory.create_fitter(options.method, options.config, L=options.L)
            result = fitter(series)

        report = detect(result)
        digest = InputDigest(
            source=Path(path).name,
            length=series.T,
            samples=int(series.values.size),
            preprocessing=tuple(steps),
            index_offset=offset,
            axis_note=axis_note,
        )
        elapsed = time.perf_counter() - start if options.with_meta else None
        document = build_report(result, report, digest, options.method.value,
                                emit_alpha=options.emit_alpha, emit_variance=options.emit_variance,
                                ar=ar_spec, elapsed=elapsed)
        span.set_attribute("k_hat", report.k_hat)
        return document, plot_table(result, report, source=digest.source)


class DetectController:
    """Controller for the detect command."""

    def __init__(self, method_factory: Optional[MethodFactory] = None):
        """
        Initialize the controller.

        Args:
            method_factory: Optional MethodFactory instance
        """
        self.method_factory = method_factory or MethodFactory()
        self.commands: List[click.Command] = []
        self._register_commands()

    def _register_commands(self):
        """Register CLI commands."""

        @click.command("detect")
        @click.argument("paths", nargs=-1, required=True, type=click.Path(dir_okay=False))
        @click.option("--L", "L", type=click.IntRange(min=1), default=None,
                      help="Number of effects (default floor(T/30)).")
        @click.option("--auto", "auto", is_flag=True, help="Choose L automatically.")
        @click.option("--a0", type=click.FloatRange(min=0, min_open=True), default=DEFAULT_A0, show_default=True)
        @click.option("--p", "p", type=click.FloatRange(0, 1, min_open=True, max_open=True),
                      default=DEFAULT_LEVEL, show_default=True, help="Credible level.")
        @click.option("--epsilon", type=click.FloatRange(min=0, min_open=True), default=DEFAULT_EPSILON,
                      show_default=True, help="ELBO convergence tolerance.")
        @click.option("--max-iter", type=click.IntRange(min=1), default=DEFAULT_MAX_ITER, show_default=True)
        @click.option("--diff", is_flag=True, help="Model first-order differences.")
        @click.option("--ar", "ar_order", type=click.IntRange(min=0), default=0,
                      help="Autoregressive order of the noise.")
        @click.option("--period", type=click.IntRange(min=1), default=None,
                      help="Fold cycles of this length into repeated observations.")
        @click.option("--thin", "thin_step", type=click.IntRange(min=1), default=None,
                      help="Keep every n-th observation.")
        @click.option("--threshold", type=click.IntRange(min=1), default=None,
                      help="Largest credible set counted as a detection (default floor(T/2)).")
        @click.option("--baseline-window", type=click.IntRange(min=0), default=0,
                      help="Flag detections at or before this index as baseline changes.")
        @click.option("--emit-alpha", is_flag=True, help="Include alpha vectors in the report.")
        @click.option("--emit-variance", is_flag=True, help="Include the posterior variance at every instant.")
        @click.option("--plot-data", type=click.Path(dir_okay=False), default=None,
                      help="Write t,effect,alpha,in_credible_set CSV here.")
        @click.option("--seed", type=int, default=None, help="Reserved; detection is deterministic.")
        @click.option("--format", "fmt", type=click.Choice([f.value for f in ReportFormat]),
                      default=ReportFormat.JSON.value, show_default=True)
        @click.option("--out", type=click.Path(dir_okay=False), default=None,
                      help="Write the report here instead of standard output.")
        @click.option("--no-meta", is_flag=True, help="Omit timing so reports are byte-identical.")
        @click.option("--jobs", type=int, default=DEFAULT_JOBS, show_default=True)
        @click.pass_context
        def detect_command(ctx, paths, L, auto, a0, p, epsilon, max_iter, diff, ar_order, period,
                           thin_step, threshold, baseline_window, emit_alpha, emit_variance, plot_data, seed,
                           fmt, out, no_meta, jobs):
            """Detect variance change points in one or more series files."""
            if L is not None and auto:
                raise click.UsageError("--L and --auto are mutually exclusive")
            if auto and ar_order:
                raise click.UsageError("--ar cannot be combined with --auto")
            if period and diff:
                raise click.UsageError("--period cannot be combined with --diff")

            try:
                options = DetectOptions(
                    config=ModelConfig(a0=a0, p=p, epsilon=epsilon, max_iter=max_iter,
                                       diffuse_threshold=threshold, baseline_window=baseline_window),
                    method=FitMethod.AUTO if auto else FitMethod.PRISCA,
                    L=L,
                    detrend=DetrendKind.DIFF if diff else DetrendKind.NONE,
                    ar_order=ar_order,
                    period=period,
                    thin_step=thin_step,
                    emit_alpha=emit_alpha,
                    emit_variance=emit_variance,
                    with_meta=not no_meta,
                )
            except (ValidationError, InvalidConfigError) as e:
                click.echo(f"error: {e}", err=True)
                ctx.exit(EXIT_USAGE)

            ordered = sorted(paths, key=lambda s: Path(s).name)
            try:
                results = Parallel(n_jobs=jobs)(
                    delayed(detect_file)(path, options, self.method_factory) for path in ordered
                ) if len(ordered) > 1 else [detect_file(ordered[0], options, self.method_factory)]
            except PriscaError as e:
                click.echo(f"error: {e}", err=True)
                ctx.exit(EXIT_DATA)

            documents = [doc for doc, _ in results]
            text = serialize(documents, fmt)
            if out:
                Path(out).write_text(text, encoding="utf-8")
            else:
                click.echo(text, nl=False)
            if plot_data:
                pd.concat([table for _, table in results], ignore_index=True).to_csv(
                    plot_data, index=False, lineterminator="\n")

            if not all(doc.converged for doc in documents):
                click.echo("warning: fit did not converge within --max-iter sweeps", err=True)
                ctx.exit(EXIT_NOT_CONVERGED)
            ctx.exit(EXIT_OK)

        self.commands.append(detect_command)
