"""
Planner Configuration

Documented defaults, tolerances and the output/logging setup shared by the
CLI and the dashboard.
"""

import logging
import os
import sys


# Physical defaults
MAX_LINK_RANGE_KM = 165.0
EARTH_RADIUS_KM = 6371.0
DEFAULT_OGS_COST = 1_000_000.0
DEFAULT_WINDOW_DURATION_S = 3600.0
DEFAULT_CUSTOM_RESERVE_FRACTION = 0.0

# Numerical tolerances
FEASIBILITY_TOL = 1e-7
INTEGRALITY_TOL = 1e-6
FLOW_TOL = 1e-6
PIVOT_TOL = 1e-9
MAX_SIMPLEX_ITERATIONS = 50_000

# Scenario files
SCHEMA_VERSION = 1
FLOAT_FORMAT = '%.6f'
OUTPUT_DIR_ENV = 'FEDQCI_OUT'

# Exit codes
EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_INPUT_ERROR = 2

# Color scheme
COLORS = {
    'national': '#6c757d',
    'international': '#f39c12',
    'built': '#06A77D',
    'candidate': '#A3CEF1',
    'blocked': '#e74c3c',
    'federated': '#2E86AB',
    'custom': '#5d3a9b',
}

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


def get_output_dir(cli_value=None):
    """
    Resolve the artifact directory.

    Args:
        cli_value: Value of ``--out`` (takes precedence)

    Returns:
        str or None: Directory to write artifacts into, None for no artifacts
    """
    if cli_value:
        return cli_value
    return os.environ.get(OUTPUT_DIR_ENV) or None


def configure_logging(verbosity=0):
    """Route log records to stderr; 0 = WARNING, 1 = INFO, 2+ = DEBUG."""
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG

    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)
