"""
Command Line Argument Parser for the energy-harvesting access toolkit

Defines the verbs (eval, optimize, simulate, sweep, validate) and their flags.
"""

import argparse


def _u64(text):
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


class ArgumentParser:
    """Handle command line argument parsing."""

    COMMANDS = ('eval', 'optimize', 'simulate', 'sweep', 'validate')

    def __init__(self):
        """Initialize the argument parser."""
        self.parser = self._create_parser()

    def _create_parser(self):
        """Create and configure the argument parser."""
        parser = argparse.ArgumentParser(
            description='Throughput analysis, optimisation and simulation of an energy-harvesting '
                        'secondary user sharing a slotted channel with a primary user',
            formatter_class=argparse.RawDescriptionHelpFormatter,
            epilog="""
Examples:
  # Optimal policy and throughput with the common parameters
  python eh_access.py optimize

  # Evaluate the fixed G = 2 strategy with the bandwidth-consistent success formula
  python eh_access.py eval --optimizer fixed:2 --eq7 bandwidth

  # Simulate the optimal policy, 5 replications of 200000 slots
  python eh_access.py simulate --reps 5 --slots 200000 --seed 7

  # Parameter sweep written to CSV plus a JSON run manifest
  python eh_access.py sweep --config experiments/load_sweep.json --out results/load_sweep.csv

  # Optimal policy against the fixed G = 1, 2, 3 strategies on one load grid
  python eh_access.py sweep --config experiments/fixed_vs_optimal.json

  # Re-run a sweep from its manifest
  python eh_access.py sweep --config results/load_sweep.manifest.json

  # Check a configuration file and write its fully defaulted form
  python eh_access.py validate --config experiments/load_sweep.json --out resolved.json

Exit codes: 0 success, 1 validation error, 2 numerical failure.
            """
        )
        subparsers = parser.add_subparsers(dest='command', metavar='COMMAND')
        subparsers.required = True

        helps = {
            'eval': 'Evaluate mu_p, Pi_p, mu_e and mu_s for one policy',
            'optimize': 'Find the throughput-maximising access policy',
            'simulate': 'Monte Carlo simulation of one policy',
            'sweep': 'Run a parameter sweep and write CSV + manifest',
            'validate': 'Validate a configuration file',
        }
        for command in self.COMMANDS:
            sub = subparsers.add_parser(command, help=helps[command])
            self._add_common(sub)
            if command == 'eval':
                sub.add_argument('--dump-chain', metavar='PATH',
                                 help='Write the transition matrix and stationary vector as CSV')
            if command == 'sweep':
                sub.add_argument('--mode', choices=['analytic', 'simulate', 'both'],
                                 help='Override the evaluation mode of the config')
        return parser

    def _add_common(self, sub):
        config_group = sub.add_argument_group('Configuration')
        config_group.add_argument('--config', metavar='PATH', help='JSON config or run manifest')
        config_group.add_argument('--out', metavar='PATH',
                                  help='Output file (JSON result, sweep CSV or resolved config)')
        config_group.add_argument('--verbose', action='store_true', help='Enable debug logging')

        model_group = sub.add_argument_group('Model and solver')
        model_group.add_argument('--eq7', choices=['literal', 'bandwidth'],
                                 help='Secondary success formula: literal N0 or bandwidth-consistent N0*W')
        model_group.add_argument('--optimizer', metavar='{enum,vi,ascent,fixed:G}',
                                 help='Policy source (default: enum)')

        sim_group = sub.add_argument_group('Simulation')
        sim_group.add_argument('--seed', type=_u64, help='Master seed (unsigned 64-bit)')
        sim_group.add_argument('--slots', type=_positive_int, help='Slots per replication, warmup included')
        sim_group.add_argument('--reps', type=_positive_int, help='Number of replications')
        sim_group.add_argument('--workers', type=_positive_int, help='Worker processes for grid points/replications')

    def parse_args(self, argv=None):
        """Parse command line arguments and return parsed args."""
        return self.parser.parse_args(argv)

    def print_help(self):
        """Print help message."""
        self.parser.print_help()
