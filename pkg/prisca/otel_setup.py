import logging
from typing import Optional

from .helpers.constants import LOG_LEVEL, OTEL_ENDPOINT, OTEL_PROTOCOL, SERVICE_NAME

logger = logging.getLogger(__name__)


def configure_logging(level: str = LOG_LEVEL):
    """
    Configure log records to carry trace and span ids.

    Args:
        level: Root log level name
    """
    from opentelemetry.instrumentation.logging import LoggingInstrumentor
    LoggingInstrumentor().instrument(set_logging_format=True, log_level=getattr(logging, level.upper(), logging.WARNING))
    logging.getLogger().setLevel(level.upper())
    logging.getLogger("joblib").setLevel(logging.WARNING)


def initialize_opentelemetry(
    service_name: str = SERVICE_NAME,
    endpoint: Optional[str] = OTEL_ENDPOINT,
    protocol: str = OTEL_PROTOCOL,
):
    """
    Initialize OpenTelemetry tracing and metrics export.

    Without an endpoint nothing is installed and the API stays in no-op mode.

    Args:
        service_name: Name of the service
        endpoint: OTLP exporter endpoint
        protocol: OTLP protocol (grpc or http/protobuf)

    Returns:
        True if providers were installed
    """
    if not endpoint:
        return False

    # Set up resource attributes with service name
    from opentelemetry.sdk.resources import Resource
    resource = Resource.create({"service.name": service_name})

    # tracing setup
    from opentelemetry.trace import set_tracer_provider
    from opentelemetry.sdk.trace import TracerProvider
    from opentelemetry.sdk.trace.export import BatchSpanProcessor

    if protocol.lower() == "grpc":
        from opentelemetry.exporter.otlp.proto.grpc.trace_exporter import OTLPSpanExporter
    else:
        from opentelemetry.exporter.otlp.proto.http.trace_exporter import OTLPSpanExporter
    span_exporter = OTLPSpanExporter(endpoint=endpoint)

    tracer_provider = TracerProvider(resource=resource)
    tracer_provider.add_span_processor(BatchSpanProcessor(span_exporter))
    set_tracer_provider(tracer_provider)

    # metrics setup
    from opentelemetry.metrics import set_meter_provider
    from opentelemetry.sdk.metrics import MeterProvider
    from opentelemetry.sdk.metrics.export import PeriodicExportingMetricReader

    if protocol.lower() == "grpc":
        from opentelemetry.exporter.otlp.proto.grpc.metric_exporter import OTLPMetricExporter
    else:
        from opentelemetry.exporter.otlp.proto.http.metric_exporter import OTLPMetricExporter
    metric_exporter = OTLPMetricExporter(endpoint=endpoint)

    meter_provider = MeterProvider(
        resource=resource,
        metric_readers=[PeriodicExportingMetricReader(metric_exporter)],
    )
    set_meter_provider(meter_provider)

    logger.info("OTEL setup completed (service: %s, endpoint: %s)", service_name, endpoint)
    return True
