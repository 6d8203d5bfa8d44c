"""
Parameter sweeps: every grid point runs cfg.trials independent trials in a thread pool, rows come out ordered by
(point, trial) regardless of completion order, and one aggregate row per point is appended after the trial rows.
"""

import concurrent.futures
import csv
import math
import time
from collections import namedtuple
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from sortedcontainers import SortedDict

from util.detail import LOGGER, max_threads
from util.errors import require
from util.event_stats import Event
from .config import ExperimentConfig, config_to_row
from .trials import run_trial

TRIAL_COMPLETED_EVENT = Event('trial_completed')
TRIAL_FAILED_EVENT = Event('trial_failed')

COLUMNS = (
    'row_type', 'point', 'trial', 'seed', 'kind', 'design', 'learner', 'recovery', 'n', 'nhat', 'm', 'k',
    'noise_var', 'train_count', 'alpha', 'beta', 'gamma', 'mse', 'mse_stderr', 'psnr', 'psnr_stderr', 'are',
    'objective', 'iterations', 'objective_trace', 'are_trace', 'psnr_trace', 'wall_time', 'error',
)

SweepResult = namedtuple('SweepResult', ('records', 'aggregates'))


def trial_seed(master: int, point: int, trial: int) -> int:
    """Per-trial seed derived from the master seed by counter, independent of scheduling."""
    return int(np.random.SeedSequence([master, point, trial]).generate_state(1)[0])


def _number(value) -> str:
    if value is None:
        return ''
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return repr(float(value))


def _trace(values) -> str:
    return ' '.join(repr(float(v)) for v in values)


@dataclass
class TrialRecord:
    point: int
    trial: int
    seed: int
    config: ExperimentConfig
    metrics: Dict[str, Any] = field(default_factory=dict)
    wall_time: float = 0.0
    error: str = ''

    @property
    def ok(self) -> bool:
        return not self.error

    def to_row(self) -> Dict[str, str]:
        row = dict.fromkeys(COLUMNS, '')
        row.update(config_to_row(self.config))
        row.update({
            'row_type': 'trial',
            'point': str(self.point),
            'trial': str(self.trial),
            'seed': str(self.seed),
            'wall_time': repr(float(self.wall_time)),
            'error': self.error,
        })
        for key in ('mse', 'psnr', 'are', 'objective', 'iterations'):
            row[key] = _number(self.metrics.get(key))
        for key in ('objective_trace', 'are_trace', 'psnr_trace'):
            row[key] = _trace(self.metrics.get(key, []))
        return row


def _mean_stderr(values: List[float]):
    if not values:
        return None, None
    mean = float(np.mean(values))
    if len(values) == 1:
        return mean, 0.0
    return mean, float(np.std(values, ddof=1) / math.sqrt(len(values)))


def aggregate(point: int, records: Sequence[TrialRecord]) -> Dict[str, str]:
    """Mean and standard error over the successful trials of one grid point."""
    require(len(records) > 0, f"No trials for point {point}")
    succeeded = [r for r in records if r.ok]

    row = dict.fromkeys(COLUMNS, '')
    row.update(config_to_row(records[0].config))
    row['row_type'] = 'aggregate'
    row['point'] = str(point)
    row['wall_time'] = repr(float(sum(r.wall_time for r in records)))

    for key in ('mse', 'psnr'):
        values = [r.metrics[key] for r in succeeded if r.metrics.get(key) is not None]
        mean, stderr = _mean_stderr(values)
        row[key] = _number(mean)
        row[f'{key}_stderr'] = _number(stderr)
    mean_are, _ = _mean_stderr([r.metrics['are'] for r in succeeded if r.metrics.get('are') is not None])
    row['are'] = _number(mean_are)

    failed = len(records) - len(succeeded)
    if failed:
        row['error'] = f"{failed} of {len(records)} trials failed"
    return row


def _run_one(point: int, trial: int, cfg: ExperimentConfig) -> TrialRecord:
    seed = trial_seed(cfg.seed, point, trial)
    record = TrialRecord(point, trial, seed, cfg)
    start = time.perf_counter()
    try:
        record.metrics = run_trial(cfg, seed)
        TRIAL_COMPLETED_EVENT.increment()
    except Exception as e:
        LOGGER.exception(f"Trial {trial} of point {point} failed")
        record.error = f"{type(e).__name__}: {e}"
        TRIAL_FAILED_EVENT.increment()
    record.wall_time = time.perf_counter() - start
    return record


def run_sweep(points: Sequence[ExperimentConfig], out: Optional[str] = None,
              threads: Optional[int] = None) -> SweepResult:
    """
    :param points: Expanded grid, see config.expand_grid
    :param out: CSV path, nothing is written when None
    :param threads: Worker count, defaults to max_threads()
    """
    require(len(points) > 0, "Sweep has no grid points")
    jobs = [(p, t, cfg) for p, cfg in enumerate(points) for t in range(cfg.trials)]
    workers = max(1, min(threads or max_threads(), len(jobs)))
    LOGGER.info(f"Running {len(jobs)} trials over {len(points)} grid points with {workers} threads")

    completed = SortedDict()
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
        futures = [executor.submit(_run_one, *job) for job in jobs]
        for future in concurrent.futures.as_completed(futures):
            record = future.result()
            completed[(record.point, record.trial)] = record

    records = list(completed.values())
    aggregates = [aggregate(p, [r for r in records if r.point == p]) for p in range(len(points))]

    if out is not None:
        write_csv(out, records, aggregates)
    return SweepResult(records, aggregates)


def write_csv(path: str, records: Sequence[TrialRecord], aggregates: Sequence[Dict[str, str]]) -> None:
    with open(path, 'w', newline='') as f:
        writer = csv.DictWriter(f, fieldnames=COLUMNS)
        writer.writeheader()
        for record in records:
            writer.writerow(record.to_row())
        for row in aggregates:
            writer.writerow(row)
    LOGGER.info(f"Wrote {len(records)} trial rows and {len(aggregates)} aggregate rows to {path}")


def read_csv(path: str) -> List[Dict[str, str]]:
    with open(path, 'r', newline='') as f:
        return list(csv.DictReader(f))
