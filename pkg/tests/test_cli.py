import csv
import json
import pytest
from click.testing import CliRunner
from equiroute.Checkpoint import load_checkpoint
from main import EXIT_INVALID, EXIT_OK, EXIT_THRESHOLD, cli

CONFIG = """
[data]
table =
synth_n_queries = {n_queries}
synth_n_models = 4
synth_embed_dim = 8

[router]
kind = mlp
hidden = 16
model_dim = 8
epochs = 3
batch_size = 64
knn_k = 10
cost_hidden = 16

[sweep]
cost_source = predicted
grid_points = 20

[diagnose]
sigmas = 0, 0.1
mc_trials = 2000

[output]
out = {out}

[thresholds]
min_nauc = {min_nauc}
"""

OUTPUTS = ['curve.csv', 'metrics.json', 'rci_detail.csv', 'margins.csv', 'noise.csv', 'mc_frequencies.csv',
           'trainset_metrics.json', 'callrates.csv', 'training_mlp.csv', 'checkpoint_mlp.bin', 'checkpoint_cost.bin']


@pytest.fixture(autouse=True)
def file_config(monkeypatch, tmp_path):
    monkeypatch.delenv('USE_ENV_CONFIG', raising=False)
    monkeypatch.chdir(tmp_path)


def write_config(tmp_path, min_nauc = '', out = None, n_queries = 200):
    path = tmp_path / 'config.ini'
    path.write_text(CONFIG.format(out=out or tmp_path / 'run', min_nauc=min_nauc, n_queries=n_queries))
    return str(path)


def invoke(*args):
    return CliRunner().invoke(cli, list(args))


def read_csv(path):
    with open(path) as handle:
        return list(csv.DictReader(handle))


def test_pipeline_writes_every_artifact(tmp_path):
    config = write_config(tmp_path)
    result = invoke('--config', config, 'pipeline')
    assert result.exit_code == EXIT_OK, result.output
    run = tmp_path / 'run'
    for name in OUTPUTS:
        assert (run / name).is_file(), name
    assert (run / 'table' / 'split.json').is_file()

    metrics = json.loads((run / 'metrics.json').read_text())
    assert {'nauc', 'peak_score', 'qnc', 'qnc_relative', 'rci'} <= set(metrics)
    cdf = [float(row['cdf']) for row in read_csv(run / 'margins.csv')]
    assert cdf == sorted(cdf)
    assert 'strongest_share' in read_csv(run / 'callrates.csv')[0]
    assert load_checkpoint(run / 'checkpoint_mlp.bin')[0] == 'mlp'


def test_pipeline_is_byte_reproducible(tmp_path):
    config = write_config(tmp_path)
    for out in ('a', 'b'):
        assert invoke('--config', config, 'pipeline', '--out', str(tmp_path / out)).exit_code == EXIT_OK
    for name in OUTPUTS:
        assert (tmp_path / 'a' / name).read_bytes() == (tmp_path / 'b' / name).read_bytes(), name


def test_equirouter_pipeline_is_byte_reproducible(tmp_path):
    config = write_config(tmp_path)
    for out in ('a', 'b'):
        result = invoke('--config', config, 'pipeline', '--router', 'equirouter', '--out', str(tmp_path / out))
        assert result.exit_code == EXIT_OK, result.output
    for name in ('checkpoint_equirouter.bin', 'checkpoint_cost.bin', 'trainset_metrics.json', 'metrics.json', 'curve.csv'):
        assert (tmp_path / 'a' / name).read_bytes() == (tmp_path / 'b' / name).read_bytes(), name


def test_predicted_costs_train_and_sweep(tmp_path):
    config = write_config(tmp_path)
    result = invoke('--config', config, 'train', '--router', 'knn')
    assert result.exit_code == EXIT_OK, result.output
    assert load_checkpoint(tmp_path / 'run' / 'checkpoint_cost.bin')[0] == 'cost'
    assert len(read_csv(tmp_path / 'run' / 'training_cost.csv')) == 201
    result = invoke('--config', config, 'sweep', '--router', 'knn')
    assert result.exit_code == EXIT_OK, result.output
    assert len(read_csv(tmp_path / 'run' / 'curve.csv')) == 20


def test_synth_is_idempotent(tmp_path):
    config = write_config(tmp_path)
    for out in ('a', 'b'):
        assert invoke('--config', config, 'synth', '--out', str(tmp_path / out)).exit_code == EXIT_OK
    files = sorted(p.name for p in (tmp_path / 'a' / 'table').iterdir())
    assert 'split.json' in files and 'synth_summary.json' in files
    for name in files:
        assert (tmp_path / 'a' / 'table' / name).read_bytes() == (tmp_path / 'b' / 'table' / name).read_bytes(), name


def test_oracle_sweep_has_no_collapse(tmp_path):
    config = write_config(tmp_path)
    assert invoke('--config', config, 'synth').exit_code == EXIT_OK
    result = invoke('--config', config, 'sweep', '--router', 'oracle', '--cost-source', 'oracle')
    assert result.exit_code == EXIT_OK, result.output
    metrics = json.loads((tmp_path / 'run' / 'metrics.json').read_text())
    assert metrics['rci'] == 0.0
    assert len(read_csv(tmp_path / 'run' / 'curve.csv')) == 20


def test_train_tags_the_mse_checkpoint(tmp_path):
    config = write_config(tmp_path)
    result = invoke('--config', config, 'train', '--router', 'mse', '--cost-source', 'oracle')
    assert result.exit_code == EXIT_OK, result.output
    assert load_checkpoint(tmp_path / 'run' / 'checkpoint_mse.bin')[0] == 'mse'
    assert not (tmp_path / 'run' / 'checkpoint_cost.bin').exists()


def test_violated_threshold_exits_with_three(tmp_path):
    config = write_config(tmp_path, min_nauc='1.5')
    result = invoke('--config', config, 'sweep', '--router', 'oracle', '--cost-source', 'oracle')
    assert result.exit_code == EXIT_THRESHOLD


def test_invalid_configuration_exits_with_one(tmp_path):
    config = write_config(tmp_path)
    assert invoke('--config', config, 'sweep', '--grid-points', '1').exit_code == EXIT_INVALID
    assert invoke('--config', str(tmp_path / 'missing.ini'), 'synth').exit_code == EXIT_INVALID
    assert not (tmp_path / 'run').exists()


def test_missing_table_exits_with_one_before_writing(tmp_path):
    config = write_config(tmp_path)
    for command in ('train', 'synth', 'pipeline'):
        result = invoke('--config', config, command, '--table', str(tmp_path / 'nowhere'))
        assert result.exit_code == EXIT_INVALID, command
    assert not (tmp_path / 'run').exists()


def test_too_few_queries_to_split_exits_with_one(tmp_path):
    config = write_config(tmp_path, n_queries=2)
    assert invoke('--config', config, 'synth').exit_code == EXIT_INVALID
    assert invoke('--config', config, 'train').exit_code == EXIT_INVALID


def test_sweep_before_train_exits_with_one(tmp_path):
    config = write_config(tmp_path)
    assert invoke('--config', config, 'sweep').exit_code == EXIT_INVALID


def test_environment_config(monkeypatch, tmp_path):
    monkeypatch.setenv('USE_ENV_CONFIG', 'true')
    monkeypatch.setenv('EQUIROUTE_DATA_SYNTH_N_QUERIES', '100')
    monkeypatch.setenv('EQUIROUTE_OUTPUT_OUT', str(tmp_path / 'env'))
    assert invoke('synth').exit_code == EXIT_OK
    summary = json.loads((tmp_path / 'env' / 'table' / 'synth_summary.json').read_text())
    assert summary['n_queries'] == 100
