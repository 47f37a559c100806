import csv
import json
import logging
import os
import numpy as np
from .Utils import format_float

# Writes every result artifact of a run into one output directory. Floats are written with repr so
# files round-trip exactly and reruns produce identical bytes.


def _cell(value):
    if isinstance(value, (int, np.integer, np.bool_)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


class DataLogger:
    def __init__(self, out_dir):
        self.out_dir = out_dir

    def path(self, name, create = False):
        target = os.path.join(self.out_dir, name)
        if create:
            os.makedirs(os.path.dirname(target), exist_ok=True)
        return target

    def _write_csv(self, name, header, rows):
        target = self.path(name, create=True)
        with open(target, 'w', newline='') as handle:
            writer = csv.writer(handle, lineterminator='\n')
            writer.writerow(header)
            for row in rows:
                writer.writerow([_cell(v) for v in row])
        logging.info(f"Wrote {target}")
        return target

    def _write_json(self, name, data):
        target = self.path(name, create=True)
        with open(target, 'w') as handle:
            json.dump(data, handle, indent=2, sort_keys=True)
            handle.write('\n')
        logging.info(f"Wrote {target}")
        return target

    def log_curve(self, curve, n_models, name = 'curve.csv'):
        header = ['budget', 'mean_cost', 'mean_perf'] + [f"calls_model_{j}" for j in range(n_models)] + ['clamped']
        rows = ([p.budget, p.mean_cost, p.mean_perf, *p.calls, p.clamped] for p in curve.points)
        return self._write_csv(name, header, rows)

    def log_metrics(self, summary, name = 'metrics.json', extra = None):
        data = summary.as_dict()
        if extra:
            data.update(extra)
        return self._write_json(name, data)

    def log_rci(self, collapse, name = 'rci_detail.csv'):
        return self._write_csv(name, ['n', 'm_n', 'a_sel', 'a_star', 'X_n', 'K_n', 's_n'], collapse.rows())

    def log_noise(self, rows, name = 'noise.csv'):
        return self._write_csv(name, ['sigma', 'accuracy', 'strongest_share', 'cheapest_share'], ((r.sigma, r.accuracy, r.strongest_share, r.cheapest_share) for r in rows))

    def log_margins(self, stats, name = 'margins.csv'):
        return self._write_csv(name, ['threshold', 'cdf'], sorted(stats.cdf_at.items()))

    def log_callrates(self, curve, rates, strongest, cheapest, name = 'callrates.csv'):
        n_models = rates.shape[1]
        header = ['budget', 'mean_cost'] + [f"share_model_{j}" for j in range(n_models)] + ['strongest_share', 'cheapest_share']
        rows = ([p.budget, p.mean_cost, *r, r[strongest], r[cheapest]] for p, r in zip(curve.points, rates))
        return self._write_csv(name, header, rows)

    def log_training(self, log, name):
        rows = ((e, '' if t is None else t, '' if v is None else v) for e, t, v in log.rows)
        return self._write_csv(name, ['epoch', 'train_loss', 'valid_loss'], rows)

    def log_mc(self, frequencies, stderrs, name = 'mc_frequencies.csv'):
        return self._write_csv(name, ['model', 'frequency', 'stderr'], ((j, f, s) for j, (f, s) in enumerate(zip(frequencies, stderrs))))

    def log_json(self, data, name):
        return self._write_json(name, data)
