"""
Configuration Manager for the energy-harvesting access toolkit

Loads and saves JSON experiment files and resolves them into a fully
defaulted ExperimentSpec. Omitted model constants take the common simulation
parameters; every malformed field is reported at once.
"""

import itertools
import json
import os
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .energy_chain import AccessPolicy
from .errors import ValidationError
from .link_model import SystemParams
from .optimizer import SolverSettings, parse_optimizer_choice
from .simulator import SimConfig

TOP_LEVEL_KEYS = ('params', 'sweep', 'mode', 'optimizer', 'policy', 'output', 'sim', 'solver')
MODES = ('analytic', 'simulate', 'both')
SIM_KEYS = ('slots', 'seed', 'replications', 'warmup_slots', 'pu_service', 'pu_activity', 'workers')
SOLVER_KEYS = ('tolerance', 'max_iters', 'ascent_starts', 'ascent_max_iters', 'seed')
OUTPUT_KEYS = ('csv', 'manifest')
MAX_SWEEP_AXES = 2
MAX_REPORTED_POINTS = 5
MANIFEST_VERSION = 1


@dataclass(frozen=True)
class SweepAxis:
    parameter: str
    values: Tuple[float, ...]


@dataclass(frozen=True)
class ExperimentSpec:
    """Fully resolved experiment: base parameters, sweep grid, solver and outputs."""

    base: SystemParams = field(default_factory=SystemParams)
    sweep: List[SweepAxis] = field(default_factory=list)
    mode: str = 'analytic'
    optimizers: Tuple[str, ...] = ('enum',)
    policy: Optional[AccessPolicy] = None
    output_csv: Optional[str] = None
    output_manifest: Optional[str] = None
    sim: SimConfig = field(default_factory=SimConfig)
    solver: SolverSettings = field(default_factory=SolverSettings)

    @property
    def optimizer(self):
        """The first configured optimizer; single-point verbs use this one."""
        return self.optimizers[0]

    def grid(self):
        """Parameter sets in deterministic grid order (first axis outermost)."""
        return [(point, self.base.replace(**point)) for point in grid_points(self.sweep)]

    def to_config(self):
        """Plain JSON-ready config that resolves back to this spec."""
        config = {
            'params': self.base.to_dict(),
            'sweep': [{'parameter': a.parameter, 'values': list(a.values)} for a in self.sweep],
            'mode': self.mode,
            'optimizer': self.optimizer if len(self.optimizers) == 1 else list(self.optimizers),
            'output': {'csv': self.output_csv, 'manifest': self.output_manifest},
            'sim': {key: getattr(self.sim, key) for key in SIM_KEYS},
            'solver': {key: getattr(self.solver, key) for key in SOLVER_KEYS},
        }
        if self.policy is not None:
            config['policy'] = self.policy.to_list()
        return config


def grid_points(axes):
    """Every combination of axis values as a dict, first axis outermost."""
    names = [axis.parameter for axis in axes]
    return [dict(zip(names, values)) for values in itertools.product(*(axis.values for axis in axes))]


def describe_point(point):
    return ", ".join(f"{name}={value:g}" for name, value in point.items()) or "base parameters"


def _is_number(value):
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _coerce_param(name, value, errors):
    """Convert a JSON value to the type of a SystemParams field."""
    if name == 'eq7_literal':
        if isinstance(value, bool):
            return value
        if value in ('literal', 'bandwidth'):
            return value == 'literal'
        errors.append(f"params.eq7_literal: expected true/false or 'literal'/'bandwidth', got {value!r}")
        return None
    if name == 'energy_capacity':
        if _is_number(value) and float(value).is_integer():
            return int(value)
        errors.append(f"params.energy_capacity: expected a non-negative integer, got {value!r}")
        return None
    if not _is_number(value):
        errors.append(f"params.{name}: expected a number, got {value!r}")
        return None
    return float(value)


def _expand_grid(axis, path, errors):
    """Grid values from either 'values' or 'start'/'stop'/'step'."""
    if 'values' in axis:
        values = axis['values']
        if not isinstance(values, list) or not values:
            errors.append(f"{path}.values: expected a non-empty list of numbers")
            return None
        return values
    if all(key in axis for key in ('start', 'stop', 'step')):
        start, stop, step = axis['start'], axis['stop'], axis['step']
        if not all(_is_number(v) for v in (start, stop, step)) or step <= 0 or stop < start:
            errors.append(f"{path}: expected numbers with step > 0 and stop >= start")
            return None
        count = int(round((stop - start) / step)) + 1
        return [float(round(start + step * k, 12)) for k in range(count)]
    errors.append(f"{path}: expected 'values' or 'start'/'stop'/'step'")
    return None


class ConfigManager:
    """Load, save and resolve experiment configuration files."""

    def __init__(self, config_file=None):
        """Initialize configuration manager; no file means all defaults."""
        self.config_file = config_file

    def load_config(self):
        """Load configuration from file.

        A run manifest is accepted too: its 'config' member is used.
        """
        if not self.config_file:
            return {}
        if not os.path.exists(self.config_file):
            raise ValidationError(f"config file not found: {self.config_file}")

        try:
            with open(self.config_file, 'r') as f:
                text = f.read()
        except OSError as e:
            raise ValidationError(f"could not read config file {self.config_file}: {e}")
        if not text.strip():
            return {}
        try:
            config = json.loads(text)
        except json.JSONDecodeError as e:
            raise ValidationError(f"{self.config_file}: invalid JSON ({e})")
        if not isinstance(config, dict):
            raise ValidationError(f"{self.config_file}: expected a JSON object at the top level")
        if 'manifest_version' in config and isinstance(config.get('config'), dict):
            return config['config']
        return config

    def save_config(self, config, path=None):
        """Save configuration to file as indented JSON."""
        path = path or self.config_file
        try:
            config_dir = os.path.dirname(path)
            if config_dir and not os.path.exists(config_dir):
                os.makedirs(config_dir)
            with open(path, 'w') as f:
                json.dump(config, f, indent=2)
        except OSError as e:
            raise ValidationError(f"could not write {path}: {e}")
        return path

    def resolve(self, raw):
        """Resolve a raw config dict into an ExperimentSpec.

        Raises:
            ValidationError: listing every malformed field
        """
        errors = []
        unknown = sorted(set(raw) - set(TOP_LEVEL_KEYS))
        for key in unknown:
            errors.append(f"unknown key '{key}'; valid keys: {', '.join(TOP_LEVEL_KEYS)}")

        base = self._resolve_params(raw.get('params', {}), errors)
        sweep = self._resolve_sweep(raw.get('sweep', []), base, errors)

        mode = raw.get('mode', 'analytic')
        if mode not in MODES:
            errors.append(f"mode: expected one of {', '.join(MODES)}, got {mode!r}")

        optimizers = self._resolve_optimizers(raw.get('optimizer', 'enum'), base, sweep, errors)

        policy = None
        if raw.get('policy') is not None:
            if any(axis.parameter == 'energy_capacity' for axis in sweep):
                errors.append("policy: an explicit policy cannot be combined with an energy_capacity sweep")
            elif len(optimizers) > 1:
                errors.append("policy: an explicit policy cannot be combined with a list of optimizers")
            elif base is not None:
                try:
                    policy = AccessPolicy.from_rows(raw['policy'], base.energy_capacity)
                except (ValidationError, TypeError, ValueError) as e:
                    errors.append(f"policy: {e}")

        output = self._section(raw, 'output', OUTPUT_KEYS, errors)
        csv_path = output.get('csv')
        manifest_path = output.get('manifest')
        if csv_path and not manifest_path:
            manifest_path = os.path.splitext(csv_path)[0] + '.manifest.json'

        sim = self._build(SimConfig, self._section(raw, 'sim', SIM_KEYS, errors), errors)
        solver_raw = self._section(raw, 'solver', SOLVER_KEYS, errors)
        solver = self._build(SolverSettings, solver_raw, errors)
        if solver is not None and (solver.tolerance <= 0 or solver.max_iters < 1 or solver.ascent_starts < 1):
            errors.append("solver: tolerance must be > 0, max_iters and ascent_starts >= 1")

        if errors:
            raise ValidationError(errors)
        return ExperimentSpec(
            base=base, sweep=sweep, mode=mode, optimizers=optimizers, policy=policy,
            output_csv=csv_path, output_manifest=manifest_path, sim=sim, solver=solver,
        )

    def _resolve_optimizers(self, raw_optimizer, base, sweep, errors):
        """Optimizer choices as a tuple; a list compares several on one grid.

        fixed:G must fit the buffer at every grid point.
        """
        choices = raw_optimizer if isinstance(raw_optimizer, list) else [raw_optimizer]
        if not choices:
            errors.append("optimizer: expected a choice or a non-empty list of choices")
            return ('enum',)
        if len(set(map(str, choices))) != len(choices):
            errors.append(f"optimizer: duplicate choices in {choices}")

        capacities = [base.energy_capacity] if base is not None else []
        for axis in sweep:
            if axis.parameter == 'energy_capacity':
                capacities = list(axis.values)

        resolved = []
        for choice in map(str, choices):
            try:
                method, packets = parse_optimizer_choice(choice)
            except ValidationError as e:
                errors.extend(e.errors)
                continue
            if method == 'fixed' and packets < 1:
                errors.append(f"optimizer: {choice} needs G >= 1")
            elif method == 'fixed':
                too_small = [cap for cap in capacities if packets > cap]
                if too_small:
                    errors.append(
                        f"optimizer: {choice} needs 1 <= G <= E_max at every grid point, "
                        f"but E_max = {too_small[0]} < G = {packets}"
                    )
            resolved.append(choice)
        return tuple(resolved) or ('enum',)

    def _section(self, raw, name, keys, errors):
        section = raw.get(name, {}) or {}
        if not isinstance(section, dict):
            errors.append(f"{name}: expected an object")
            return {}
        for key in sorted(set(section) - set(keys)):
            errors.append(f"{name}: unknown key '{key}'; valid keys: {', '.join(keys)}")
        return {k: v for k, v in section.items() if k in keys}

    def _build(self, cls, values, errors):
        try:
            return cls(**values)
        except ValidationError as e:
            errors.extend(e.errors)
        except TypeError as e:
            errors.append(f"{cls.__name__}: {e}")
        return None

    def _resolve_params(self, raw_params, errors):
        if not isinstance(raw_params, dict):
            errors.append("params: expected an object")
            return None
        valid = SystemParams.field_names()
        values = {}
        for name, value in raw_params.items():
            if name not in valid:
                errors.append(f"params: unknown key '{name}'; valid keys: {', '.join(valid)}")
                continue
            coerced = _coerce_param(name, value, errors)
            if coerced is not None:
                values[name] = coerced
        try:
            return SystemParams(**values)
        except ValidationError as e:
            errors.extend(f"params.{message}" for message in e.errors)
            return None

    def _resolve_sweep(self, raw_sweep, base, errors):
        if isinstance(raw_sweep, dict):
            raw_sweep = [raw_sweep]
        if not isinstance(raw_sweep, list):
            errors.append("sweep: expected a list of axes")
            return []
        if len(raw_sweep) > MAX_SWEEP_AXES:
            errors.append(f"sweep: at most {MAX_SWEEP_AXES} axes are supported, got {len(raw_sweep)}")

        sweepable = [name for name in SystemParams.field_names() if name != 'eq7_literal']
        axes = []
        seen = set()
        for index, axis in enumerate(raw_sweep[:MAX_SWEEP_AXES]):
            path = f"sweep[{index}]"
            if not isinstance(axis, dict):
                errors.append(f"{path}: expected an object")
                continue
            name = axis.get('parameter')
            if name not in sweepable:
                errors.append(f"{path}.parameter: {name!r} is not a sweepable field; valid: {', '.join(sweepable)}")
                continue
            if name in seen:
                errors.append(f"{path}.parameter: {name!r} is swept twice")
                continue
            seen.add(name)
            values = _expand_grid(axis, path, errors)
            if values is None:
                continue
            local = []
            coerced = [_coerce_param(name, v, local) for v in values]
            if local:
                errors.extend(f"{path}: {message}" for message in local)
                continue
            if np.any(np.diff(coerced) <= 0):
                errors.append(f"{path}.values: grid must be strictly increasing")
                continue
            axes.append(SweepAxis(name, tuple(coerced)))
        if base is not None:
            self._check_grid(base, axes, errors)
        return axes

    def _check_grid(self, base, axes, errors):
        """Every grid point, not only each axis on its own, must be a valid parameter set."""
        bad = []
        for point in grid_points(axes):
            try:
                base.replace(**point)
            except ValidationError as e:
                bad.append(f"sweep: grid point {describe_point(point)} is invalid ({e})")
        errors.extend(bad[:MAX_REPORTED_POINTS])
        if len(bad) > MAX_REPORTED_POINTS:
            errors.append(f"sweep: {len(bad) - MAX_REPORTED_POINTS} more invalid grid point(s)")


def validate_config(path):
    """Parse and resolve a config file.

    Returns:
        ExperimentSpec

    Raises:
        ValidationError: every problem found, each naming its field
    """
    manager = ConfigManager(path)
    return manager.resolve(manager.load_config())
