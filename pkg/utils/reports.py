"""
Report Tables

Turns planner, VNet, survivability and scheduling results into pandas
DataFrames and writes them as CSV with a fixed float format, so repeated runs
produce byte-identical files.
"""

import logging
from pathlib import Path

import pandas as pd

from utils.config import FLOAT_FORMAT
from utils.planner import arc_endpoints
from utils.satellite import Pass


logger = logging.getLogger(__name__)

PASS_COLUMNS = ['id', 'satellite', 'ogs', 'window', 'expected_yield', 'weather_factor']


def diagnostics_frame(diagnostics):
    """
    Tabulate diagnostics.

    Args:
        diagnostics: iterable of Diagnostic

    Returns:
        DataFrame: code, subject, detail, witness (ids joined with ';')
    """
    rows = [
        {'code': d.code.value, 'subject': d.subject, 'detail': d.detail, 'witness': ';'.join(d.witness)}
        for d in diagnostics
    ]
    return pd.DataFrame(rows, columns=['code', 'subject', 'detail', 'witness'])


def flows_frame(solution, topology):
    """
    Net flow per use-case, link and window.

    Args:
        solution: DesignSolution
        topology: NetworkTopology the solution belongs to

    Returns:
        DataFrame: use_case, link, a, b, window, rate; rate is signed in the
        a -> b direction
    """
    rows = []
    for (u_id, arc_id, window), rate in sorted(solution.flows.items()):
        a, b = arc_endpoints(topology, arc_id)
        rows.append({'use_case': u_id, 'link': arc_id, 'a': a, 'b': b, 'window': window, 'rate': rate})
    return pd.DataFrame(rows, columns=['use_case', 'link', 'a', 'b', 'window', 'rate'])


def budget_frame(solution):
    """Budget share per country, with the total as its own row."""
    rows = sorted(solution.budget_shares.items()) + [('TOTAL', solution.total_cost)]
    return pd.DataFrame(rows, columns=['country', 'share'])


def served_frame(problem, solution):
    """Required versus served rate for every scheduled window of every use-case."""
    rows = []
    for u in problem.use_cases:
        for window in u.schedule:
            served = solution.served.get(u.id, {}).get(window, 0.0)
            rows.append({
                'use_case': u.id, 'window': window, 'required': float(u.required_rate), 'served': served,
                'shortfall': max(0.0, float(u.required_rate) - served),
            })
    return pd.DataFrame(rows, columns=['use_case', 'window', 'required', 'served', 'shortfall'])


def allocations_frame(allocations):
    """
    One row per virtual sub-link allocation.

    Args:
        allocations: iterable of VNetAllocation

    Returns:
        DataFrame: link, window, capacity, national, federated, custom
    """
    rows = [
        {
            'link': a.link, 'window': a.window, 'capacity': a.capacity,
            'national': a.national_share, 'federated': a.federated_share, 'custom': a.custom_reserve,
        }
        for a in allocations
    ]
    return pd.DataFrame(rows, columns=['link', 'window', 'capacity', 'national', 'federated', 'custom'])


def violations_frame(violations):
    rows = [
        {'link': v.link, 'window': v.window, 'kind': v.kind, 'flow': v.flow, 'limit': v.limit}
        for v in violations
    ]
    return pd.DataFrame(rows, columns=['link', 'window', 'kind', 'flow', 'limit'])


def survivability_frame(report):
    """Failed link against the use-cases it leaves unservable (';'-joined)."""
    rows = [{'failed_link': link_id, 'unservable': ';'.join(lost)} for link_id, lost in report]
    return pd.DataFrame(rows, columns=['failed_link', 'unservable'])


def schedule_frame(schedule):
    """
    Pass-pair assignments in the order the scheduler made them.

    Args:
        schedule: SatSchedule

    Returns:
        DataFrame: window, satellite, pass_a, pass_b, ogs_a, ogs_b, request, bits
    """
    rows = [
        {
            'window': a.window, 'satellite': a.satellite,
            'pass_a': a.passes[0], 'pass_b': a.passes[1],
            'ogs_a': a.ogs_pair[0], 'ogs_b': a.ogs_pair[1],
            'request': a.request, 'bits': a.bits,
        }
        for a in schedule.assignments
    ]
    return pd.DataFrame(
        rows, columns=['window', 'satellite', 'pass_a', 'pass_b', 'ogs_a', 'ogs_b', 'request', 'bits']
    )


def delivery_frame(schedule, requests):
    """Delivered versus required bits per request, sorted by request id."""
    rows = []
    for r in sorted(requests, key=lambda r: r.id):
        delivered = schedule.delivered.get(r.id, 0.0)
        rows.append({
            'request': r.id, 'requester': r.requester, 'counterparty': r.counterparty,
            'required_bits': float(r.required_bits), 'delivered_bits': delivered,
            'served': delivered >= r.required_bits,
        })
    return pd.DataFrame(
        rows, columns=['request', 'requester', 'counterparty', 'required_bits', 'delivered_bits', 'served']
    )


def load_passes_csv(path):
    """
    Read a pass table from CSV.

    Args:
        path: CSV with columns id, satellite, ogs, window, expected_yield and
            optionally weather_factor

    Returns:
        list[Pass]
    """
    df = pd.read_csv(path)
    if 'weather_factor' not in df.columns:
        df['weather_factor'] = 1.0
    missing = [c for c in PASS_COLUMNS if c not in df.columns]
    if missing:
        raise ValueError(f"pass table {path} is missing columns {missing}")
    df = df.astype({'id': str, 'satellite': str, 'ogs': str})
    return [
        Pass(row.id, row.satellite, row.ogs, int(row.window), float(row.expected_yield), float(row.weather_factor))
        for row in df[PASS_COLUMNS].itertuples(index=False)
    ]


def frame_to_csv(df):
    """CSV text with the shared float format and Unix line endings."""
    return df.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator='\n')


def frame_to_text(df):
    """Fixed-width text rendering for terminal reports."""
    if df.empty:
        return '(none)'
    return df.to_string(index=False, float_format=lambda v: f"{v:.6f}")


def write_csv(df, out_dir, name):
    """
    Write a DataFrame under an output directory.

    Args:
        df: DataFrame
        out_dir: Directory (created when missing)
        name: File name

    Returns:
        Path: File written
    """
    path = Path(out_dir) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(frame_to_csv(df), encoding='utf-8')
    logger.info('wrote %s (%d rows)', path, len(df))
    return path
