# monitoring.py
# Tracks reproduction runs: per-experiment timings and status counts.
# Called by cli.py after each `reproduce` run; writes run_summary.json.

import json
import logging
import os
from datetime import datetime

import numpy as np

from config import TIME_BUDGET_SECONDS

logger = logging.getLogger(__name__)

SUMMARY_FILE = 'run_summary.json'


class RunMonitor:

    def __init__(self, budget_seconds: float = TIME_BUDGET_SECONDS, history_path: str = None):
        self.budget_seconds = budget_seconds
        self.history_path = history_path
        self.runs = []
        self.history = self._load()

    def _load(self):
        if not self.history_path:
            return []
        try:
            with open(self.history_path, 'r') as f:
                return json.load(f)
        except FileNotFoundError:
            return []

    def _save(self):
        if self.history_path:
            with open(self.history_path, 'w') as f:
                json.dump(self.history, f, indent=2)

    def log_experiment(self, report) -> dict:
        counts = report.counts()
        entry = {
            'timestamp':  datetime.now().isoformat(),
            'experiment': report.name,
            'items':      len(report.items),
            'elapsed':    round(float(report.elapsed_seconds), 3),
            **counts,
        }
        if counts['mismatch']:
            logger.warning('%s: %d item(s) disagree with published values', report.name, counts['mismatch'])
        self.runs.append(entry)
        return entry

    def summary(self) -> dict:
        if not self.runs:
            return {'experiments': 0, 'total_seconds': 0.0, 'within_budget': True}
        elapsed = np.array([r['elapsed'] for r in self.runs])
        total = round(float(elapsed.sum()), 3)
        within = total <= self.budget_seconds
        if not within:
            logger.warning('Run took %.1fs, over the %.0fs budget', total, self.budget_seconds)
        return {
            'experiments':    len(self.runs),
            'total_seconds':  total,
            'slowest':        self.runs[int(elapsed.argmax())]['experiment'],
            'mean_seconds':   round(float(elapsed.mean()), 3),
            'mismatches':     int(sum(r['mismatch'] for r in self.runs)),
            'within_budget':  within,
            'budget_seconds': self.budget_seconds,
            'runs':           self.runs,
        }

    def save(self, out_dir: str = None):
        """Append the run to the history file, and write run_summary.json when out_dir is given."""
        summary = self.summary()
        self.history.append({'timestamp': datetime.now().isoformat(),
                             **{k: v for k, v in summary.items() if k != 'runs'}})
        self._save()
        if not out_dir:
            return None
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, SUMMARY_FILE)
        with open(path, 'w') as f:
            json.dump(summary, f, indent=2)
        return path

    def get_recent_runs(self, n=5):
        recent = self.history[-n:] if self.history else []
        if not recent:
            return None
        return {
            'avg_seconds':    round(float(np.mean([r['total_seconds'] for r in recent])), 3),
            'avg_mismatches': round(float(np.mean([r.get('mismatches', 0) for r in recent])), 2),
            'runs':           len(recent),
        }
