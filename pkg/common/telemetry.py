"""Metrics, tracing and logging setup shared by the computation packages."""
import logging
import os

from opentelemetry import trace
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import SimpleSpanProcessor, ConsoleSpanExporter
from prometheus_client import Counter, REGISTRY

# Configuration
SERVICE_NAME = "steenrod-twist-lab"
LOG_LEVEL = os.getenv("LOG_LEVEL", "WARNING").upper()
# Console exporter is disabled by default (set ENABLE_TRACING=1 to enable)
ENABLE_TRACING = os.getenv("ENABLE_TRACING", "0").lower() in ("1", "true", "yes")

LOGGER_NAMES = ("linalg", "algebra", "module", "twist", "resolution", "corpus")


def get_or_create_counter(name, description):
    """Get existing counter or create new one."""
    try:
        collector = REGISTRY._names_to_collectors.get(name)
        if collector:
            return collector
    except (KeyError, AttributeError):
        pass
    return Counter(name, description)


RESOLUTION_CELLS = get_or_create_counter(
    "resolution_cells_total", "Total (s, t) cells computed by minimal resolutions")
RESOLUTION_GENERATORS = get_or_create_counter(
    "resolution_generators_total", "Total free generators added by minimal resolutions")
MODULE_VALIDATIONS = get_or_create_counter(
    "module_validations_total", "Total module validations run")
MODULE_VALIDATION_FAILURES = get_or_create_counter(
    "module_validation_failures_total", "Total module validations that found violations")
CHAIN_MAP_LIFTS = get_or_create_counter(
    "chain_map_lifts_total", "Total generator images solved while lifting chain maps")


def setup_tracing():
    """Install a console-exporting tracer provider when ENABLE_TRACING is set."""
    if not ENABLE_TRACING:
        return
    current_provider = trace.get_tracer_provider()
    # Leave an already configured SDK provider alone
    if hasattr(current_provider, "add_span_processor"):
        return
    from opentelemetry.sdk.resources import Resource
    provider = TracerProvider(resource=Resource.create({"service.name": SERVICE_NAME}))
    provider.add_span_processor(SimpleSpanProcessor(ConsoleSpanExporter()))
    trace.set_tracer_provider(provider)


def configure_logging(level=None):
    """Attach a stderr handler to the package loggers."""
    level = level or LOG_LEVEL
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter("%(asctime)s %(name)s %(levelname)s %(message)s"))
    for name in LOGGER_NAMES:
        logger = logging.getLogger(name)
        if not logger.handlers:
            logger.addHandler(handler)
        logger.setLevel(level)


setup_tracing()
tracer = trace.get_tracer(SERVICE_NAME)
