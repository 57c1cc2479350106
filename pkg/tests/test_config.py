import argparse
import json
import os

import pytest

from src.config_handler import ConfigHandler
from src.config_manager import ConfigManager, ExperimentSpec, validate_config
from src.errors import ValidationError
from src.link_model import SystemParams


EXPERIMENTS = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'experiments')


def _write(tmp_path, config, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(config) if not isinstance(config, str) else config)
    return str(path)


def _args(**values):
    defaults = dict(command='eval', config=None, out=None, eq7=None, optimizer=None,
                    seed=None, slots=None, reps=None, workers=None, mode=None)
    defaults.update(values)
    return argparse.Namespace(**defaults)


def test_empty_config_takes_defaults(tmp_path):
    spec = validate_config(_write(tmp_path, {}))
    assert spec.base == SystemParams()
    assert spec.mode == 'analytic'
    assert spec.optimizer == 'enum'
    assert spec.policy is None
    assert len(spec.grid()) == 1


def test_blank_file_is_an_empty_config(tmp_path):
    assert validate_config(_write(tmp_path, "   \n")).base == SystemParams()


def test_no_file_means_defaults():
    manager = ConfigManager()
    assert manager.load_config() == {}
    assert manager.resolve({}).base.energy_capacity == 4


def test_missing_file(tmp_path):
    with pytest.raises(ValidationError):
        validate_config(str(tmp_path / "absent.json"))


def test_invalid_json(tmp_path):
    with pytest.raises(ValidationError) as excinfo:
        validate_config(_write(tmp_path, "{not json"))
    assert 'invalid JSON' in str(excinfo.value)


def test_sensing_longer_than_slot_names_both_fields(tmp_path):
    path = _write(tmp_path, {'params': {'slot_duration_s': 1.0, 'sensing_duration_s': 1.0}})
    with pytest.raises(ValidationError) as excinfo:
        validate_config(path)
    message = str(excinfo.value)
    assert 'sensing_duration_s' in message and 'slot_duration_s' in message


def test_unknown_keys_list_valid_keys(tmp_path):
    with pytest.raises(ValidationError) as excinfo:
        validate_config(_write(tmp_path, {'parameters': {}, 'params': {'lambda_p': 0.3}}))
    errors = excinfo.value.errors
    assert any("unknown key 'parameters'" in e and 'params' in e and 'sweep' in e for e in errors)
    assert any("unknown key 'lambda_p'" in e and 'primary_arrival_rate' in e for e in errors)


def test_every_problem_reported(tmp_path):
    config = {
        'params': {'primary_arrival_rate': 2.0, 'energy_capacity': 'four'},
        'mode': 'exact',
        'optimizer': 'greedy',
        'sim': {'slots': 10, 'colour': 'red'},
    }
    with pytest.raises(ValidationError) as excinfo:
        validate_config(_write(tmp_path, config))
    errors = excinfo.value.errors
    assert len(errors) >= 5
    assert any(e.startswith('mode') for e in errors)
    assert any('colour' in e for e in errors)


def test_sweep_values_and_range(tmp_path):
    config = {
        'sweep': [
            {'parameter': 'energy_arrival_rate', 'values': [0.1, 0.5, 1.0]},
            {'parameter': 'primary_arrival_rate', 'start': 0.0, 'stop': 0.75, 'step': 0.05},
        ],
    }
    spec = validate_config(_write(tmp_path, config))
    grid = spec.grid()
    assert len(grid) == 3 * 16
    assert grid[0][0] == {'energy_arrival_rate': 0.1, 'primary_arrival_rate': 0.0}
    assert grid[1][0] == {'energy_arrival_rate': 0.1, 'primary_arrival_rate': 0.05}
    assert grid[-1][1].primary_arrival_rate == 0.75
    assert grid[-1][1].energy_arrival_rate == 1.0


def test_capacity_sweep_is_integral(tmp_path):
    spec = validate_config(_write(tmp_path, {'sweep': {'parameter': 'energy_capacity', 'values': [1, 2, 3]}}))
    assert [params.energy_capacity for _, params in spec.grid()] == [1, 2, 3]
    assert all(isinstance(params.energy_capacity, int) for _, params in spec.grid())


@pytest.mark.parametrize("axis", [
    {'parameter': 'eq7_literal', 'values': [0, 1]},
    {'parameter': 'energy_arrival_rate', 'values': [1.0, 0.5]},
    {'parameter': 'energy_arrival_rate', 'values': []},
    {'parameter': 'primary_arrival_rate', 'values': [0.5, 1.5]},
    {'parameter': 'energy_arrival_rate'},
])
def test_bad_sweeps(tmp_path, axis):
    with pytest.raises(ValidationError):
        validate_config(_write(tmp_path, {'sweep': [axis]}))


def test_too_many_sweep_axes(tmp_path):
    axes = [{'parameter': name, 'values': [1.0]} for name in ('energy_arrival_rate', 'gain_ssd', 'gain_ppd')]
    with pytest.raises(ValidationError):
        validate_config(_write(tmp_path, {'sweep': axes}))


def test_explicit_policy(tmp_path):
    config = {'params': {'energy_capacity': 2}, 'policy': [[1], [0, 1], [0, 0.5, 0.5]]}
    spec = validate_config(_write(tmp_path, config))
    assert spec.policy.energy_capacity == 2
    with pytest.raises(ValidationError):
        validate_config(_write(tmp_path, dict(config, policy=[[1], [0.5, 0.6], [0, 0, 1]])))


def test_fixed_strategy_must_fit_buffer(tmp_path):
    with pytest.raises(ValidationError):
        validate_config(_write(tmp_path, {'optimizer': 'fixed:7'}))
    assert validate_config(_write(tmp_path, {'optimizer': 'fixed:2'})).optimizer == 'fixed:2'


def test_every_grid_point_is_checked(tmp_path):
    config = {
        'sweep': [
            {'parameter': 'sensing_duration_s', 'values': [0.1, 0.5]},
            {'parameter': 'slot_duration_s', 'values': [0.3, 1.0]},
        ],
    }
    with pytest.raises(ValidationError) as info:
        validate_config(_write(tmp_path, config))
    assert len(info.value.errors) == 1
    assert 'sensing_duration_s=0.5, slot_duration_s=0.3' in info.value.errors[0]


def test_invalid_grid_points_are_summarised(tmp_path):
    config = {
        'sweep': [
            {'parameter': 'sensing_duration_s', 'values': [0.1, 0.6, 0.7, 0.8]},
            {'parameter': 'slot_duration_s', 'values': [0.2, 0.3, 0.5, 1.0]},
        ],
    }
    with pytest.raises(ValidationError) as info:
        validate_config(_write(tmp_path, config))
    assert len(info.value.errors) == 6
    assert info.value.errors[-1] == "sweep: 4 more invalid grid point(s)"


def test_fixed_strategy_must_fit_every_swept_buffer(tmp_path):
    config = {'sweep': {'parameter': 'energy_capacity', 'values': [1, 2, 3]}, 'optimizer': 'fixed:2'}
    with pytest.raises(ValidationError) as info:
        validate_config(_write(tmp_path, config))
    assert 'E_max = 1 < G = 2' in info.value.errors[0]
    spec = validate_config(_write(tmp_path, dict(config, optimizer='fixed:1')))
    assert spec.optimizer == 'fixed:1'


def test_optimizer_list(tmp_path):
    config = {'params': {'energy_capacity': 3}, 'optimizer': ['enum', 'fixed:1', 'fixed:3']}
    spec = validate_config(_write(tmp_path, config))
    assert spec.optimizers == ('enum', 'fixed:1', 'fixed:3')
    assert spec.optimizer == 'enum'
    assert spec.to_config()['optimizer'] == ['enum', 'fixed:1', 'fixed:3']
    assert ConfigManager().resolve(spec.to_config()).optimizers == spec.optimizers


@pytest.mark.parametrize("optimizer", [
    [],
    ['enum', 'enum'],
    ['enum', 'fixed:5'],
    ['enum', 'newton'],
    'fixed:0',
])
def test_bad_optimizer_lists(tmp_path, optimizer):
    with pytest.raises(ValidationError):
        validate_config(_write(tmp_path, {'params': {'energy_capacity': 3}, 'optimizer': optimizer}))


def test_explicit_policy_excludes_optimizer_list(tmp_path):
    config = {'params': {'energy_capacity': 1}, 'policy': [[1], [0, 1]], 'optimizer': ['enum', 'vi']}
    with pytest.raises(ValidationError):
        validate_config(_write(tmp_path, config))


@pytest.mark.parametrize("name", ['load_sweep', 'fixed_vs_optimal', 'buffer_size', 'packet_energy'])
def test_shipped_experiments_validate(name):
    spec = validate_config(os.path.join(EXPERIMENTS, f"{name}.json"))
    assert spec.output_csv == f"results/{name}.csv"
    assert [axis.parameter for axis in spec.sweep][-1] == 'primary_arrival_rate'
    assert spec.sweep[-1].values == tuple(round(0.05 * k, 2) for k in range(16))


def test_eq7_mode_names(tmp_path):
    spec = validate_config(_write(tmp_path, {'params': {'eq7_literal': 'bandwidth'}}))
    assert spec.base.eq7_mode == 'bandwidth'


def test_manifest_path_defaults_next_to_csv(tmp_path):
    spec = validate_config(_write(tmp_path, {'output': {'csv': 'out/load_sweep.csv'}}))
    assert spec.output_manifest == 'out/load_sweep.manifest.json'


def test_resolved_config_round_trips(tmp_path):
    config = {
        'params': {'energy_capacity': 3, 'eq7_literal': False},
        'sweep': [{'parameter': 'energy_arrival_rate', 'values': [0.5, 1.0]}],
        'mode': 'both',
        'optimizer': 'vi',
        'sim': {'slots': 20000, 'seed': 12},
    }
    spec = validate_config(_write(tmp_path, config))
    again = ConfigManager().resolve(json.loads(json.dumps(spec.to_config())))
    assert isinstance(again, ExperimentSpec)
    assert again.to_config() == spec.to_config()


def test_manifest_is_accepted_as_config(tmp_path):
    spec = validate_config(_write(tmp_path, {'params': {'energy_arrival_rate': 0.5}}))
    manifest = {'manifest_version': 1, 'command': 'sweep', 'config': spec.to_config()}
    assert validate_config(_write(tmp_path, manifest, "run.manifest.json")).base.energy_arrival_rate == 0.5


def test_command_line_overrides():
    handler = ConfigHandler(ConfigManager())
    raw = {'sim': {'slots': 50000}, 'output': {'csv': 'a.csv', 'manifest': 'a.json'}}
    args = _args(command='sweep', eq7='bandwidth', optimizer='vi', seed=9, reps=3, mode='both', out='b.csv')
    config = handler.apply_overrides(raw, args)
    assert config['params']['eq7_literal'] is False
    assert config['optimizer'] == 'vi'
    assert config['sim'] == {'slots': 50000, 'seed': 9, 'replications': 3}
    assert config['solver'] == {'seed': 9}
    assert config['mode'] == 'both'
    assert config['output'] == {'csv': 'b.csv'}
    assert raw['output'] == {'csv': 'a.csv', 'manifest': 'a.json'}


def test_out_is_not_a_csv_outside_sweeps():
    handler = ConfigHandler(ConfigManager())
    assert 'output' not in handler.apply_overrides({}, _args(command='eval', out='result.json'))


def test_handle_validate_writes_resolved_config(tmp_path, capsys):
    path = _write(tmp_path, {'params': {'energy_capacity': 2}})
    out = tmp_path / "resolved.json"
    handler = ConfigHandler(ConfigManager(path))
    spec = handler.handle_validate(_args(command='validate', config=path, out=str(out)))
    assert spec is not None
    assert json.loads(out.read_text())['params']['energy_capacity'] == 2
    assert 'Configuration is valid' in capsys.readouterr().out


def test_handle_validate_reports_bad_grid_points(tmp_path, capsys):
    config = {
        'sweep': [
            {'parameter': 'sensing_duration_s', 'values': [0.1, 0.5]},
            {'parameter': 'slot_duration_s', 'values': [0.3, 1.0]},
        ],
    }
    path = _write(tmp_path, config)
    handler = ConfigHandler(ConfigManager(path))
    assert handler.handle_validate(_args(command='validate', config=path)) is None
    assert 'Configuration has 1 problem(s)' in capsys.readouterr().out


def test_handle_validate_reports_problems(tmp_path, capsys):
    path = _write(tmp_path, {'params': {'gain_ssd': -1}})
    handler = ConfigHandler(ConfigManager(path))
    assert handler.handle_validate(_args(command='validate', config=path)) is None
    assert 'gain_ssd' in capsys.readouterr().out
