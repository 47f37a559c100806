import logging
import os
import numpy as np
from .CostPredictor import CostPredictor
from .DataLogger import DataLogger
from .Diagnostics import max_budget, mc_report, noise_sensitivity, training_set_eval
from .EquiRouter import EquiRouter, EquiRouterParams, train_equirouter, train_mse_ablation, train_no_joint_ablation
from .KnnRouter import KnnRouter
from .Metrics import check_thresholds, summarize
from .MlpRouter import MlpRouter
from .Oracle import margin_stats
from .OracleRouter import OracleRouter
from .RoutingTable import SPLIT_FILE, load_split, load_table, make_split, save_split, save_table
from .Synthetic import generate_synthetic
from .Utils import ConfigError, ThresholdError

# Command bodies behind main.py. Every command rebuilds the table from the config (loading it or
# regenerating it from the synth settings) and reads/writes artifacts under cfg.out.

TABLE_DIR = 'table'
COST_CHECKPOINT = 'checkpoint_cost.bin'


def checkpoint_kind(router):
    return router.replace('-', '_')


def train_router(kind, table, split, hyper):
    if kind == 'equirouter':
        params, log = train_equirouter(table, split, hyper)
        return EquiRouter(params), log
    elif kind == 'equirouter-nojoint':
        params, log = train_no_joint_ablation(table, split, hyper)
        return EquiRouter(params), log
    elif kind == 'mse':
        params, log = train_mse_ablation(table, split, hyper)
        return EquiRouter(params), log
    elif kind == 'mlp':
        return MlpRouter.train(table, split, hyper)
    elif kind == 'knn':
        return KnnRouter.train(table, split, hyper)
    elif kind == 'oracle':
        return OracleRouter(), None
    raise ConfigError(f"unknown router kind '{kind}'")


def load_router(kind, path, table):
    if kind in ('equirouter', 'equirouter-nojoint', 'mse'):
        return EquiRouter(EquiRouterParams.load(path))
    elif kind == 'mlp':
        return MlpRouter.load(path)
    elif kind == 'knn':
        return KnnRouter.load(path, table)
    elif kind == 'oracle':
        return OracleRouter()
    raise ConfigError(f"unknown router kind '{kind}'")


class ExperimentInstance:
    def __init__(self, cfg):
        self.cfg = cfg
        self.data_logger = DataLogger(cfg.out)
        self._table = None
        self._split = None

    def checkpoint_path(self, create = False):
        return self.data_logger.path(f"checkpoint_{checkpoint_kind(self.cfg.router)}.bin", create)

    def table_and_split(self):
        if self._table is None:
            if self.cfg.table is not None:
                self._table = load_table(self.cfg.table)
                split_path = os.path.join(self.cfg.table, SPLIT_FILE)
            else:
                self._table = generate_synthetic(self.cfg.synth)
                split_path = self.data_logger.path(os.path.join(TABLE_DIR, SPLIT_FILE))
            if os.path.isfile(split_path):
                self._split = load_split(split_path, self._table.n_queries)
            else:
                self._split = make_split(self._table.n_queries, self.cfg.split_ratio, self.cfg.split_seed)
        return self._table, self._split

    def run_synth(self):
        if self.cfg.synth is None:
            raise ConfigError("synth needs synth settings, the config points at an existing table")
        table = generate_synthetic(self.cfg.synth)
        split = make_split(table.n_queries, self.cfg.split_ratio, self.cfg.split_seed)
        target = self.data_logger.path(TABLE_DIR)
        save_table(table, target)
        save_split(split, os.path.join(target, SPLIT_FILE))

        stats = margin_stats(table, np.inf, self.cfg.margin_thresholds)
        means = table.cost.mean(axis=0)
        self.data_logger.log_json({
            'n_queries': table.n_queries,
            'n_models': table.n_models,
            'embed_dim': table.embed_dim,
            'tie_rate': stats.tie_rate,
            'cost_ratio': float(means.max() / means.min()),
            'split_sizes': [len(split.train), len(split.valid), len(split.test)],
        }, os.path.join(TABLE_DIR, 'synth_summary.json'))
        logging.info(f"Synthetic table: tie rate {stats.tie_rate:.4f}, cost ratio {means.max() / means.min():.2f}")
        self._table, self._split = table, split
        return target

    def train_cost_predictor(self, table, split):
        predictor, log = CostPredictor.train(table, split, self.cfg.hyper)
        predictor.save(self.data_logger.path(COST_CHECKPOINT, create=True))
        self.data_logger.log_training(log, 'training_cost.csv')
        return predictor

    def run_train(self):
        table, split = self.table_and_split()
        kind = self.cfg.router
        router, log = train_router(kind, table, split, self.cfg.hyper)
        if kind != 'oracle':
            router.save(self.checkpoint_path(create=True))
        if log is not None:
            self.data_logger.log_training(log, f"training_{checkpoint_kind(kind)}.csv")
        if self.cfg.cost_source == 'predicted':
            router.cost_predictor = self.train_cost_predictor(table, split)
        return router

    def load_trained(self):
        table, _ = self.table_and_split()
        path = self.checkpoint_path()
        if self.cfg.router != 'oracle' and not os.path.isfile(path):
            raise ConfigError(f"no checkpoint at {path}, run train first")
        router = load_router(self.cfg.router, path, table)
        if self.cfg.cost_source == 'predicted':
            cost_path = self.data_logger.path(COST_CHECKPOINT)
            if not os.path.isfile(cost_path):
                raise ConfigError(f"no cost predictor at {cost_path}, run train first")
            router.cost_predictor = CostPredictor.load(cost_path)
        return router

    def run_sweep(self, router = None):
        table, split = self.table_and_split()
        router = self.load_trained() if router is None else router
        curve, summary, collapse = summarize(router, table, split.part('test'), self.cfg.grid_points, self.cfg.cost_source, self.cfg.workers)
        self.data_logger.log_curve(curve, table.n_models)
        self.data_logger.log_metrics(summary)
        self.data_logger.log_rci(collapse)

        failures = check_thresholds(summary, self.cfg.acceptance)
        if failures:
            raise ThresholdError("; ".join(failures))
        return summary

    def trainset_trainer(self, table, split):
        router, _ = train_router(self.cfg.router, table, split, self.cfg.hyper)
        if self.cfg.cost_source == 'predicted':
            router.cost_predictor, _ = CostPredictor.train(table, split, self.cfg.hyper)
        return router

    def run_diagnose(self):
        table, _ = self.table_and_split()
        budget = max_budget(table)

        stats = margin_stats(table, budget, self.cfg.margin_thresholds)
        self.data_logger.log_margins(stats)

        noise = noise_sensitivity(table, self.cfg.sigmas, budget, self.cfg.hyper.seed)
        self.data_logger.log_noise(noise)

        positive = [s for s in self.cfg.sigmas if s > 0]
        if positive:
            freq, stderr = mc_report(table, positive[0], self.cfg.mc_trials, self.cfg.hyper.seed)
            self.data_logger.log_mc(freq, stderr)

        report = training_set_eval(self.trainset_trainer, table, self.cfg.grid_points, self.cfg.cost_source, self.cfg.workers, self.cfg.split_seed)
        self.data_logger.log_metrics(report.summary, 'trainset_metrics.json', extra={'tie_rate': stats.tie_rate})
        self.data_logger.log_callrates(report.curve, report.call_rates, report.strongest, report.cheapest)
        return report

    def run_pipeline(self):
        if self.cfg.synth is not None:
            self.run_synth()
        router = self.run_train()
        self.run_diagnose()
        return self.run_sweep(router)
