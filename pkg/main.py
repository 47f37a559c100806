import sys
import logging
import click
from equiroute.Config import ROUTER_CHOICES, load_experiment
from equiroute.ExperimentEntry import ExperimentInstance
from equiroute.Utils import ConfigError, NumericsError, TableError, ThresholdError

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RUNTIME = 2
EXIT_THRESHOLD = 3


def run_command(ctx, command, **overrides):
    try:
        cfg = load_experiment(ctx.obj['config'], **overrides)
        instance = ExperimentInstance(cfg)
        getattr(instance, f"run_{command}")()
    except (ConfigError, TableError) as e:
        logging.error(f"{command}: {e}")
        sys.exit(EXIT_INVALID)
    except ThresholdError as e:
        logging.error(f"{command}: acceptance thresholds failed: {e}")
        sys.exit(EXIT_THRESHOLD)
    except NumericsError as e:
        logging.error(f"{command}: {e}")
        sys.exit(EXIT_RUNTIME)
    except Exception as e:
        logging.error(f"{command}: an error occurred: {e}")
        sys.exit(EXIT_RUNTIME)
    logging.info(f"{command}: done")


def experiment_options(f):
    f = click.option('--out', default=None, help='Output directory.')(f)
    f = click.option('--seed', type=int, default=None, help='Router training seed.')(f)
    f = click.option('--grid-points', type=int, default=None, help='Budget grid size (default 100).')(f)
    f = click.option('--cost-source', type=click.Choice(['predicted', 'oracle']), default=None, help='Costs used for the feasibility filter.')(f)
    f = click.option('--router', type=click.Choice(ROUTER_CHOICES), default=None, help='Router kind.')(f)
    f = click.option('--table', default=None, help='Routing table directory (empty config value selects synthesis).')(f)
    return f


@click.group()
@click.option('--config', 'config_file', default=None, help='Path to config.ini.')
@click.option('--log-level', default='INFO', type=click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR']))
@click.pass_context
def cli(ctx, config_file, log_level):
    logging.basicConfig(level=getattr(logging, log_level), force=True)
    ctx.ensure_object(dict)
    ctx.obj['config'] = config_file


@cli.command()
@experiment_options
@click.pass_context
def synth(ctx, **overrides):
    """Generate a synthetic routing table and its split."""
    run_command(ctx, 'synth', **overrides)


@cli.command()
@experiment_options
@click.pass_context
def train(ctx, **overrides):
    """Train the configured router (and the cost predictor for predicted costs)."""
    run_command(ctx, 'train', **overrides)


@cli.command()
@experiment_options
@click.pass_context
def sweep(ctx, **overrides):
    """Sweep the budget grid on the test split and write curve and metrics."""
    run_command(ctx, 'sweep', **overrides)


@cli.command()
@experiment_options
@click.pass_context
def diagnose(ctx, **overrides):
    """Margin statistics, noise sensitivity, Monte Carlo check and training-set evaluation."""
    run_command(ctx, 'diagnose', **overrides)


@cli.command()
@experiment_options
@click.pass_context
def pipeline(ctx, **overrides):
    """synth -> train -> diagnose -> sweep."""
    run_command(ctx, 'pipeline', **overrides)


if __name__ == "__main__":
    cli()
