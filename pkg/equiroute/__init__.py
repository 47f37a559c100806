from .RoutingTable import ModelInfo, RoutingTable, SplitIndices, load_table, save_table, make_split, load_split, save_split
from .Synthetic import SynthConfig, generate_synthetic
from .Oracle import FeasibleSet, MarginStats, NoiseConfig, feasible_set, oracle_select, margin, margin_stats, inject_noise, mc_selection_frequencies
from .NeuralNet import DenseLayer, Sequential, Adam, grad_check
from .Checkpoint import save_checkpoint, load_checkpoint
from .BaseRouter import BaseRouter, RouterDecision, RouterHyper, route
from .EquiRouter import EquiRouter, EquiRouterParams, film_modulate, joint_feature, score_all, build_pairs, ranking_loss, train_equirouter, train_mse_ablation, train_no_joint_ablation
from .CostPredictor import CostPredictor
from .KnnRouter import KnnRouter
from .MlpRouter import MlpRouter
from .OracleRouter import OracleRouter, NoisyOracleRouter
from .Metrics import SweepCurve, MetricsSummary, CollapseReport, budget_grid, sweep, nauc, peak_score, qnc, rci, call_rate_curve
from .Diagnostics import training_set_eval, noise_sensitivity
from .DataLogger import DataLogger
from .Utils import *
