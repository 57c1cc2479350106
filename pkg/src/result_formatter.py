"""
Result Formatter

Turns reports, simulation statistics and run metadata into flat CSV rows,
JSON objects and run manifests. The column contract is what external plotting
tools rely on.
"""

import numpy
import scipy

from .config_manager import MANIFEST_VERSION
from .throughput import CSV_COLUMNS

SIM_COLUMNS = [
    'est_mu_p', 'est_pi_p', 'est_mu_e', 'est_mu_s',
    'hw99_mu_p', 'hw99_pi_p', 'hw99_mu_e', 'hw99_mu_s',
]
PARAM_COLUMNS = {
    'primary_arrival_rate': 'lambda_p',
    'energy_arrival_rate': 'lambda_e',
    'energy_per_packet_j': 'e_joules',
    'energy_capacity': 'E_max',
}


class ResultFormatter:
    """Format analytics and simulation results."""

    @staticmethod
    def columns(mode, sweep_parameters=(), optimizers=()):
        """CSV header for a mode.

        Swept fields outside the standard columns lead as sweep_<name>; a run
        comparing several optimizers adds an 'optimizer' column after them.
        """
        extra = [f"sweep_{name}" for name in sweep_parameters if name not in PARAM_COLUMNS]
        if len(optimizers) > 1:
            extra.append('optimizer')
        if mode == 'analytic':
            return extra + list(CSV_COLUMNS)
        if mode == 'simulate':
            return extra + CSV_COLUMNS[:4] + SIM_COLUMNS + ['policy_id', 'eq7_mode', 'seed']
        return extra + list(CSV_COLUMNS) + SIM_COLUMNS + ['seed']

    @staticmethod
    def param_fields(params):
        return {
            'lambda_p': params.primary_arrival_rate,
            'lambda_e': params.energy_arrival_rate,
            'e_joules': params.energy_per_packet_j,
            'E_max': params.energy_capacity,
            'eq7_mode': params.eq7_mode,
        }

    @staticmethod
    def sim_fields(stats):
        fields = {
            'est_mu_p': stats.est_mu_p,
            'est_pi_p': stats.est_pi_p,
            'est_mu_e': stats.est_mu_e,
            'est_mu_s': stats.est_mu_s,
            'seed': stats.seed,
        }
        for name, width in stats.half_width_99.items():
            fields[f"hw99_{name}"] = width
        return fields

    @staticmethod
    def grid_row(point, params, policy, report=None, stats=None, optimizer=None):
        """Flat dict holding every column any mode may ask for."""
        row = {f"sweep_{name}": value for name, value in point.items() if name not in PARAM_COLUMNS}
        row['optimizer'] = optimizer
        row.update(ResultFormatter.param_fields(params))
        row['policy_id'] = policy.policy_id
        if report is not None:
            row.update(report.to_dict())
        if stats is not None:
            row.update(ResultFormatter.sim_fields(stats))
        return row

    @staticmethod
    def csv_values(row, columns):
        """Row values in column order; missing values become empty cells."""
        values = []
        for column in columns:
            value = row.get(column)
            values.append('' if value is None else value)
        return values

    @staticmethod
    def manifest(command, spec, columns, grid_points, unstable_points, csv_path, rows=None):
        """Run manifest: the resolved config plus what is needed to reproduce the run."""
        config = spec.to_config()
        return {
            'manifest_version': MANIFEST_VERSION,
            'command': command,
            'config': config,
            'eq7_mode': spec.base.eq7_mode,
            'optimizer': config['optimizer'],
            'seeds': {'sim': spec.sim.seed, 'solver': spec.solver.seed},
            'csv': csv_path,
            'columns': list(columns),
            'grid_points': grid_points,
            'rows': grid_points if rows is None else rows,
            'unstable_points': unstable_points,
            'versions': {'numpy': numpy.__version__, 'scipy': scipy.__version__},
        }
