"""Constants for the application."""
import math
import os

from dotenv import load_dotenv

load_dotenv()

# Model defaults
DEFAULT_A0 = float(os.getenv("PRISCA_A0", "0.001"))
DEFAULT_SIGMA2 = 1.0
DEFAULT_LEVEL = float(os.getenv("PRISCA_LEVEL", "0.9"))
DEFAULT_EPSILON = float(os.getenv("PRISCA_EPSILON", "1e-3"))
DEFAULT_MAX_ITER = int(os.getenv("PRISCA_MAX_ITER", "1000"))

# Numerical guards
PRIOR_SUM_TOLERANCE = 1e-12
DIVISION_FLOOR = 1e-12  # below this, residual products are rebuilt by exclusion

# Simulation study
SIMULATION_LOG_SD = math.log(10) / 2
SIMULATION_REPLICATES = 300
SIMULATION_MAX_SPACING = 30
PLACEMENT_MAX_ATTEMPTS = 100_000
TABLE_L_DIVISOR = 30  # L = floor(T / 30)
BENCHMARK_BASELINE_WINDOW = 5  # benchmark detections at t <= 5 belong to the baseline

# AR adapter
AR_MAX_OUTER_ITER = 10
AR_TOLERANCE = 1e-6
RANK_TOLERANCE = 1e-10

# Execution
DEFAULT_JOBS = int(os.getenv("PRISCA_JOBS", "1"))

# Telemetry
SERVICE_NAME = os.getenv("PRISCA_SERVICE_NAME", "prisca")
OTEL_ENDPOINT = os.getenv("PRISCA_OTEL_ENDPOINT", "")
OTEL_PROTOCOL = os.getenv("PRISCA_OTEL_PROTOCOL", "grpc")
LOG_LEVEL = os.getenv("PRISCA_LOG_LEVEL", "WARNING")

# CLI exit codes
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NOT_CONVERGED = 3
