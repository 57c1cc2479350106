#!/usr/bin/env python3
"""
Energy-Harvesting Spectrum Access

Computes, optimises and simulates the throughput of an energy-harvesting
secondary user that opportunistically shares a slotted channel with a primary
user.

Features:
- Closed-form primary/secondary outage probabilities under Rayleigh fading
- Energy-buffer Markov chain and its stationary distribution
- Optimal buffer-state access policy (enumeration, value iteration, randomised ascent)
- Fixed-strategy baseline spending G packets whenever available
- Monte Carlo slot simulator with 99% confidence half-widths
- Parameter sweeps written as CSV plus a reproducible JSON run manifest

Usage:
    python eh_access.py eval [--config FILE] [--optimizer {enum,vi,ascent,fixed:G}] [--eq7 {literal,bandwidth}]
    python eh_access.py optimize [--config FILE] [--out result.json]
    python eh_access.py simulate [--config FILE] [--slots N] [--reps N] [--seed S]
    python eh_access.py sweep --config FILE [--out results.csv]
    python eh_access.py validate --config FILE [--out resolved.json]

eval, optimize and simulate print their JSON result alone on stdout (status
lines go to stderr) unless --out names a file.

Exit codes: 0 success, 1 validation error, 2 numerical failure.

Requirements:
- Python 3.8+
- numpy, scipy (pip install -r requirements.txt)
"""

import json
import logging
import sys
from contextlib import redirect_stdout

from src import ArgumentParser, ConfigHandler, ConfigManager, run_eval, run_experiment, run_optimize, run_simulate
from src.errors import NumericalError, ValidationError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2


def _emit(result, path):
    """Write a JSON result to path, or to stdout when no path is given.

    Stdout then carries nothing but the JSON document.
    """
    text = json.dumps(result, indent=2)
    if not path:
        print(text)
        return
    with open(path, 'w') as f:
        f.write(text + "\n")
    print(f"📝 Result saved to: {path}", file=sys.stderr)


def _run_single(args, spec):
    """Run eval, optimize or simulate at the base parameters; returns the JSON result."""
    if args.command == 'eval':
        return run_eval(spec, dump_chain=args.dump_chain).to_dict()
    if args.command == 'optimize':
        return run_optimize(spec).to_dict()
    outcome = run_simulate(spec)
    return {
        'policy': outcome['policy'].to_list(),
        'policy_id': outcome['policy'].policy_id,
        'analytic': outcome['report'].to_dict(),
        'simulated': outcome['stats'].to_dict(),
    }


def main(argv=None):
    """Main function - orchestrates the entire application."""

    arg_parser = ArgumentParser()
    args = arg_parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    )

    config_manager = ConfigManager(args.config)
    config_handler = ConfigHandler(config_manager)

    if args.command == 'validate':
        spec = config_handler.handle_validate(args)
        return EXIT_OK if spec is not None else EXIT_VALIDATION

    try:
        if args.command == 'sweep':
            run_experiment(config_handler.load_spec(args))
            return EXIT_OK

        with redirect_stdout(sys.stderr):
            result = _run_single(args, config_handler.load_spec(args))
        _emit(result, args.out)
        return EXIT_OK

    except ValidationError as e:
        print("❌ Validation error:", file=sys.stderr)
        for message in e.errors:
            print(f"   - {message}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as e:
        print(f"❌ Numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as e:
        print(f"❌ Cannot write output: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except KeyboardInterrupt:
        print("\n🛑 Interrupted by user", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
