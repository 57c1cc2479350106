"""
Configuration Handler for the energy-harvesting access toolkit

Merges command-line overrides into a loaded configuration and resolves it,
and handles the validate workflow.
"""

import copy

from .errors import ValidationError


class ConfigHandler:
    """Handle configuration operations for the CLI verbs."""

    def __init__(self, config_manager):
        """Initialize with a ConfigManager instance."""
        self.config_manager = config_manager

    def apply_overrides(self, raw, args):
        """Return a copy of raw with command-line flags applied on top."""
        config = copy.deepcopy(raw)

        def section(name):
            value = config.get(name)
            if not isinstance(value, dict):
                value = {}
                config[name] = value
            return value

        if getattr(args, 'eq7', None):
            section('params')['eq7_literal'] = args.eq7 == 'literal'
        if getattr(args, 'optimizer', None):
            config['optimizer'] = args.optimizer
        if getattr(args, 'seed', None) is not None:
            section('sim')['seed'] = args.seed
            section('solver')['seed'] = args.seed
        if getattr(args, 'slots', None) is not None:
            section('sim')['slots'] = args.slots
        if getattr(args, 'reps', None) is not None:
            section('sim')['replications'] = args.reps
        if getattr(args, 'workers', None) is not None:
            section('sim')['workers'] = args.workers
        if getattr(args, 'mode', None):
            config['mode'] = args.mode
        if getattr(args, 'out', None) and getattr(args, 'command', None) == 'sweep':
            output = section('output')
            output['csv'] = args.out
            output.pop('manifest', None)
        return config

    def load_spec(self, args):
        """Load the config named by --config, apply overrides and resolve it."""
        raw = self.config_manager.load_config()
        if self.config_manager.config_file:
            print(f"🔧 Using configuration: {self.config_manager.config_file}")
        return self.config_manager.resolve(self.apply_overrides(raw, args))

    def handle_validate(self, args):
        """Validate the configuration, optionally writing the resolved form.

        Returns:
            ExperimentSpec, or None when validation failed
        """
        try:
            spec = self.load_spec(args)
            grid_size = len(spec.grid())
        except ValidationError as e:
            print(f"❌ Configuration has {len(e.errors)} problem(s):")
            for message in e.errors:
                print(f"   - {message}")
            return None

        print("✅ Configuration is valid")
        print(f"   Mode: {spec.mode}   Optimizer: {', '.join(spec.optimizers)}   SU success formula: {spec.base.eq7_mode}")
        print(f"   Grid points: {grid_size}   Rows per run: {grid_size * len(spec.optimizers)}")
        if getattr(args, 'out', None):
            path = self.config_manager.save_config(spec.to_config(), args.out)
            print(f"✅ Resolved configuration saved to: {path}")
        return spec
