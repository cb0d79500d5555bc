import logging
from typing import Dict, List

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

SERIES_COLUMNS = ['n', 're_x1', 'im_x1', 're_x2', 'im_x2', 're_p1', 'im_p1', 're_p2', 'im_p2', 'delta', 'leakage']
SWEEP_COLUMNS = ['index', 'value', 'status', 'lambda_hat', 'degree_hat', 'verdict', 'error']


def series_frame(series) -> pd.DataFrame:
    """Per-step table of the four normalized traces, Delta(n) and leakage"""
    traces = series.traces
    if traces is None:
        traces = np.full((len(series.steps), 4), np.nan, dtype=complex)
    frame = pd.DataFrame({'n': series.steps})
    for column, name in enumerate(['x1', 'x2', 'p1', 'p2']):
        frame[f're_{name}'] = traces[:, column].real
        frame[f'im_{name}'] = traces[:, column].imag
    frame['delta'] = series.delta
    frame['leakage'] = series.leakage
    return frame[SERIES_COLUMNS]


def summarize_sweep(points: List[Dict]) -> pd.DataFrame:
    """Aggregate sweep point results in point order"""
    rows = []
    for point in sorted(points, key=lambda p: p['index']):
        report = point.get('report') or {}
        rows.append({
            'index': point['index'],
            'value': point['value'],
            'status': point['status'],
            'lambda_hat': report.get('lambda_hat'),
            'degree_hat': report.get('degree_hat'),
            'verdict': report.get('verdict'),
            'error': point.get('error'),
        })
    frame = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
    failed = int((frame['status'] != 'ok').sum())
    logger.info(f"Sweep summary: {len(frame)} points, {failed} failed")
    return frame


def rate_spread(frame: pd.DataFrame) -> float:
    """Relative spread (max - min) / |mean| of lambda_hat over successful points"""
    rates = frame.loc[frame['status'] == 'ok', 'lambda_hat'].dropna().astype(float)
    if len(rates) < 2:
        return 0.0
    mean = rates.mean()
    if mean == 0:
        return float(rates.max() - rates.min())
    return float((rates.max() - rates.min()) / abs(mean))


def compare_sweep_points(frame: pd.DataFrame) -> Dict:
    """Rank successful sweep points by rate, then degree"""
    comparison = {}
    ok = frame[frame['status'] == 'ok']

    for _, row in ok.iterrows():
        comparison[str(row['value'])] = {
            'lambda_hat': row['lambda_hat'],
            'degree_hat': row['degree_hat'],
            'verdict': row['verdict'],
        }

    ranked = sorted(
        comparison.items(),
        key=lambda x: (
            -x[1]['lambda_hat'],  # fastest growth first
            -x[1]['degree_hat']
        )
    )

    comparison['ranking'] = [point[0] for point in ranked]
    comparison['fastest'] = ranked[0][0] if ranked else None
    comparison['rate_spread'] = rate_spread(frame)

    return comparison
