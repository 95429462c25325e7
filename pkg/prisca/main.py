import logging
import sys

import click

from .controller.BenchmarkController import BenchmarkController
from .controller.DetectController import DetectController
from .helpers.constants import EXIT_USAGE, LOG_LEVEL
from .helpers.MethodFactory import MethodFactory
from .otel_setup import configure_logging, initialize_opentelemetry

logger = logging.getLogger(__name__)


class PriscaGroup(click.Group):
    """Click group that maps every usage problem to exit code 1."""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        if not standalone_mode:
            return super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
        try:
            rv = super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
        except click.ClickException as e:
            e.show()
            sys.exit(EXIT_USAGE)
        except click.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(EXIT_USAGE)
        sys.exit(rv or 0)


def create_cli() -> click.Group:
    """
    Create and configure the command line application.

    Returns:
        Click group with the detect, benchmark and simulate commands
    """

    @click.group(cls=PriscaGroup)
    @click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
                  default=LOG_LEVEL, show_default=True)
    def cli(log_level):
        """Bayesian detection of variance change points."""
        configure_logging(log_level)

    method_factory = MethodFactory()
    detect_controller = DetectController(method_factory)
    benchmark_controller = BenchmarkController()

    for command in detect_controller.commands + benchmark_controller.commands:
        cli.add_command(command)

    return cli


# Initialize opentelemetry
try:
    initialize_opentelemetry()
except Exception as e:
    logger.warning("Failed to initialize OpenTelemetry: %s", e)

# Create the command line application instance
cli = create_cli()
