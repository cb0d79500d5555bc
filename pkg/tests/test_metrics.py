import numpy as np
import pandas as pd
import pytest

from src.analysis.growth import TraceSeries
from src.utils.metrics import (
    SERIES_COLUMNS,
    SWEEP_COLUMNS,
    compare_sweep_points,
    rate_spread,
    series_frame,
    summarize_sweep,
)


def _point(index, value, lam=None, degree=None, verdict=None, error=None):
    point = {'index': index, 'value': value, 'status': 'ok' if error is None else 'error', 'error': error}
    if error is None:
        point['report'] = {'lambda_hat': lam, 'degree_hat': degree, 'verdict': verdict}
    return point


def test_series_frame_columns():
    traces = np.array([[1 + 0j, 1, 1, 1], [2 + 1j, 1, 0.5, 1]])
    series = TraceSeries(steps=[0, 1], delta=[2.0, 2.5], leakage=[0.0, 1e-9], traces=traces)
    frame = series_frame(series)
    assert list(frame.columns) == SERIES_COLUMNS
    assert frame.loc[1, 're_x1'] == 2.0
    assert frame.loc[1, 'im_x1'] == 1.0
    assert frame.loc[1, 're_p1'] == 0.5


def test_series_frame_without_traces():
    frame = series_frame(TraceSeries.synthetic([1.0, 2.0, 3.0]))
    assert frame['re_x1'].isna().all()
    assert frame['delta'].tolist() == [1.0, 2.0, 3.0]


def test_sweep_summary_is_in_point_order():
    points = [
        _point(2, 1.0, 0.01, 1.0, 'polynomial'),
        _point(0, 0.0, error='ConfigError: lattice.K: must be >= 1, got 0'),
        _point(1, 0.5, 0.02, 1.1, 'polynomial'),
    ]
    frame = summarize_sweep(points)
    assert list(frame.columns) == SWEEP_COLUMNS
    assert frame['index'].tolist() == [0, 1, 2]
    assert frame.loc[0, 'status'] == 'error'
    assert pd.isna(frame.loc[0, 'lambda_hat'])


def test_rate_spread():
    frame = summarize_sweep([
        _point(0, 32, 0.95, 0.0, 'exponential'),
        _point(1, 64, 1.00, 0.0, 'exponential'),
        _point(2, 128, 1.05, 0.0, 'exponential'),
        _point(3, 0, error='failed'),
    ])
    assert rate_spread(frame) == pytest.approx(0.1)


def test_rate_spread_single_point():
    assert rate_spread(summarize_sweep([_point(0, 1, 0.5, 0.0, 'exponential')])) == 0.0


def test_compare_sweep_points_ranks_by_rate():
    frame = summarize_sweep([
        _point(0, 0.0, 0.0, 1.0, 'polynomial'),
        _point(1, 0.5, 0.9, 0.1, 'exponential'),
        _point(2, 1.0, 0.0, 2.0, 'polynomial'),
    ])
    comparison = compare_sweep_points(frame)
    assert comparison['ranking'] == ['0.5', '1.0', '0.0']
    assert comparison['fastest'] == '0.5'
