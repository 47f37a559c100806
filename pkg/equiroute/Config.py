import logging
import os
import configparser
from typing import Literal, Optional
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from .BaseRouter import COST_SOURCES, RouterHyper
from .Oracle import DEFAULT_MARGIN_THRESHOLDS
from .Synthetic import SynthConfig
from .Utils import ConfigError, parse_list, parse_ratio

# Experiment configuration: config.ini (or EQUIROUTE_<SECTION>_<KEY> environment variables when
# USE_ENV_CONFIG is set) merged with command-line overrides, then validated into ExperimentConfig.

ROUTER_CHOICES = ('oracle', 'equirouter', 'equirouter-nojoint', 'mse', 'knn', 'mlp')

DEFAULTS = {
    'data': {
        'table': '',
        'synth_n_queries': '2000',
        'synth_n_models': '6',
        'synth_embed_dim': '16',
        'synth_tie_fraction': '0.949',
        'synth_margin_scale': '0.1',
        'synth_band_width': '0.5',
        'synth_cost_spread': '100',
        'synth_noise_seed': '0',
    },
    'split': {'ratio': '3:1:6', 'seed': '42'},
    'router': {
        'kind': 'equirouter',
        'hidden': '128',
        'model_dim': '64',
        'l2': '1e-4',
        'lr': '1e-3',
        'epochs': '30',
        'batch_size': '2048',
        'seed': '0',
        'knn_k': '50',
        'cost_hidden': '128',
        'cost_epochs': '200',
    },
    'sweep': {'cost_source': 'predicted', 'grid_points': '100', 'workers': '1'},
    'diagnose': {
        'thresholds': ', '.join(str(t) for t in DEFAULT_MARGIN_THRESHOLDS),
        'sigmas': '0, 0.05, 0.1, 0.2, 0.4',
        'mc_trials': '100000',
    },
    'output': {'out': 'runs/default'},
    'thresholds': {'min_nauc': '', 'max_rci': '', 'max_qnc_relative': '', 'min_peak_score': ''},
}

# command-line flag -> (section, key)
OVERRIDES = {
    'table': ('data', 'table'),
    'router': ('router', 'kind'),
    'cost_source': ('sweep', 'cost_source'),
    'grid_points': ('sweep', 'grid_points'),
    'seed': ('router', 'seed'),
    'out': ('output', 'out'),
}


class AcceptanceThresholds(BaseModel):
    model_config = ConfigDict(frozen=True)

    min_nauc: Optional[float] = None
    max_rci: Optional[float] = None
    max_qnc_relative: Optional[float] = None
    min_peak_score: Optional[float] = None


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    table: Optional[str] = None
    synth: Optional[SynthConfig] = None
    split_ratio: tuple[float, float, float] = (3.0, 1.0, 6.0)
    split_seed: int = 42
    router: Literal[ROUTER_CHOICES] = 'equirouter'
    hyper: RouterHyper = RouterHyper()
    cost_source: Literal[COST_SOURCES] = 'predicted'
    grid_points: int = Field(default=100, ge=2)
    workers: int = Field(default=1, ge=1)
    margin_thresholds: tuple[float, ...] = DEFAULT_MARGIN_THRESHOLDS
    sigmas: tuple[float, ...] = (0.0, 0.05, 0.1, 0.2, 0.4)
    mc_trials: int = Field(default=100000, ge=1)
    out: str = 'runs/default'
    acceptance: AcceptanceThresholds = AcceptanceThresholds()

    @model_validator(mode='after')
    def check(self):
        if (self.table is None) == (self.synth is None):
            raise ValueError("exactly one of table path and synth settings must be set")
        if any(r <= 0 for r in self.split_ratio):
            raise ValueError(f"split ratio parts must be positive, got {self.split_ratio}")
        if list(self.margin_thresholds) != sorted(self.margin_thresholds):
            raise ValueError("margin thresholds must be sorted ascending")
        if any(s < 0 for s in self.sigmas):
            raise ValueError("noise sigmas must be >= 0")
        if self.table is not None and not os.path.isdir(self.table):
            raise ValueError(f"table directory {self.table} not found")
        return self


def read_config(config_file = None):
    config = configparser.ConfigParser(inline_comment_prefixes=('#',))
    config.read_dict(DEFAULTS)
    load_dotenv()
    use_env_config = os.getenv('USE_ENV_CONFIG', 'false')
    if use_env_config.lower() in ('true', '1'):
        logging.info("Loading environment config...")
        for section, keys in DEFAULTS.items():
            for key, default in keys.items():
                config[section][key] = os.getenv(f"EQUIROUTE_{section.upper()}_{key.upper()}", default)
    elif config_file is not None:
        if not os.path.isfile(config_file):
            raise ConfigError(f"config file {config_file} not found")
        logging.info(f"Loading {config_file}...")
        config.read(config_file)
    return config


def apply_overrides(config, **overrides):
    for name, value in overrides.items():
        if value is None:
            continue
        if name not in OVERRIDES:
            raise ConfigError(f"unknown override '{name}'")
        section, key = OVERRIDES[name]
        config[section][key] = str(value)
    return config


def log_config(config):
    for section in config.sections():
        logging.info(f'[{section}]')
        for key, value in config.items(section):
            logging.info(f'{key} = {value}')
        logging.info("")


def _optional_float(value):
    return float(value) if value.strip() else None


def build_experiment(config):
    """Validate a merged ConfigParser into an ExperimentConfig; any invalid value raises ConfigError."""
    try:
        data = config['data']
        table = data['table'].strip() or None
        synth = None
        if table is None:
            synth = SynthConfig(
                n_queries=data.getint('synth_n_queries'),
                n_models=data.getint('synth_n_models'),
                embed_dim=data.getint('synth_embed_dim'),
                tie_fraction=data.getfloat('synth_tie_fraction'),
                margin_scale=data.getfloat('synth_margin_scale'),
                band_width=data.getfloat('synth_band_width'),
                cost_spread=data.getfloat('synth_cost_spread'),
                noise_seed=data.getint('synth_noise_seed'),
            )
        router = config['router']
        hyper = RouterHyper(
            hidden=router.getint('hidden'),
            model_dim=router.getint('model_dim'),
            l2=router.getfloat('l2'),
            lr=router.getfloat('lr'),
            epochs=router.getint('epochs'),
            batch_size=router.getint('batch_size'),
            seed=router.getint('seed'),
            knn_k=router.getint('knn_k'),
            cost_hidden=router.getint('cost_hidden'),
            cost_epochs=router.getint('cost_epochs'),
        )
        thresholds = config['thresholds']
        return ExperimentConfig(
            table=table,
            synth=synth,
            split_ratio=parse_ratio(config['split']['ratio']),
            split_seed=config['split'].getint('seed'),
            router=router['kind'].strip(),
            hyper=hyper,
            cost_source=config['sweep']['cost_source'].strip(),
            grid_points=config['sweep'].getint('grid_points'),
            workers=config['sweep'].getint('workers'),
            margin_thresholds=tuple(parse_list(config['diagnose']['thresholds'], float)),
            sigmas=tuple(parse_list(config['diagnose']['sigmas'], float)),
            mc_trials=config['diagnose'].getint('mc_trials'),
            out=config['output']['out'].strip(),
            acceptance=AcceptanceThresholds(**{key: _optional_float(thresholds[key]) for key in DEFAULTS['thresholds']}),
        )
    except ConfigError:
        raise
    except (ValidationError, ValueError) as e:
        raise ConfigError(f"invalid configuration: {e}") from e


def load_experiment(config_file = None, **overrides):
    config = apply_overrides(read_config(config_file), **overrides)
    log_config(config)
    return build_experiment(config)
