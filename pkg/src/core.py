"""
Energy-Harvesting Access Core Functions

Workflows behind the CLI verbs: evaluate, optimise, simulate and sweep.
"""

from contextlib import nullcontext
from dataclasses import dataclass, replace
from typing import Optional

from .config_manager import ExperimentSpec, describe_point
from .energy_chain import AccessPolicy, build_energy_chain, dump_chain_csv
from .link_model import SystemParams
from .optimizer import SolverSettings, optimize
from .result_formatter import ResultFormatter
from .result_writer import ResultWriter
from .simulator import SimConfig, simulate
from .sweep_runner import SweepRunner
from .throughput import evaluate_policy, pu_is_stable


@dataclass(frozen=True)
class GridJob:
    """Everything one grid point needs, picklable for worker processes."""

    point: dict
    params: SystemParams
    mode: str
    optimizer: str
    solver: SolverSettings
    sim: SimConfig
    policy: Optional[AccessPolicy] = None


def resolve_policy(params, optimizer, solver, policy=None):
    """Explicit policy if given, otherwise the optimizer's answer.

    Returns:
        tuple: (AccessPolicy, OptimizationResult or None)
    """
    if policy is not None:
        return policy, None
    result = optimize(params, optimizer, solver)
    return result.best_policy, result


def evaluate_grid_point(job):
    """Optimise (or apply the fixed policy), then evaluate and/or simulate one grid point."""
    policy, optimization = resolve_policy(job.params, job.optimizer, job.solver, job.policy)
    report = evaluate_policy(job.params, policy) if job.mode in ('analytic', 'both') else None
    stats = simulate(job.params, policy, job.sim) if job.mode in ('simulate', 'both') else None
    return {
        'row': ResultFormatter.grid_row(job.point, job.params, policy, report, stats, optimizer=job.optimizer),
        'report': report,
        'stats': stats,
        'optimization': optimization,
        'unstable': not pu_is_stable(job.params),
    }


def run_experiment(spec: ExperimentSpec, command='sweep'):
    """Run every grid point of spec and return the result rows in grid order.

    Each grid point yields one row per configured optimizer, optimizers
    innermost. When spec.output_csv is set, rows go to CSV as they complete
    (in grid order) and a JSON run manifest is written next to them; a failed
    run leaves any previous CSV untouched.

    Returns:
        list: one flat row dict per grid point and optimizer
    """
    grid = spec.grid()
    sim = replace(spec.sim, workers=1) if spec.sim.workers > 1 else spec.sim
    jobs = [
        GridJob(point=point, params=params, mode=spec.mode, optimizer=optimizer,
                solver=spec.solver, sim=sim, policy=spec.policy)
        for point, params in grid
        for optimizer in spec.optimizers
    ]
    columns = ResultFormatter.columns(spec.mode, [axis.parameter for axis in spec.sweep], spec.optimizers)
    compare = len(spec.optimizers) > 1

    print("📈 Energy-harvesting access sweep")
    print("=" * 50)
    print(f"Grid points: {len(grid)}   Mode: {spec.mode}   Optimizer: {', '.join(spec.optimizers)}   "
          f"SU success formula: {spec.base.eq7_mode}")
    print()

    rows, unstable = [], []
    sink = ResultWriter(spec.output_csv, spec.output_manifest, columns) if spec.output_csv else nullcontext()

    with sink as writer:
        def on_result(index, result):
            rows.append(result['row'])
            job = jobs[index]
            if result['unstable'] and job.optimizer == spec.optimizer:
                unstable.append(dict(job.point))
            if writer:
                writer.write_row(result['row'], result['report'])
            value = result['report'].mu_s if result['report'] else result['stats'].est_mu_s
            flag = "  ⚠️  PU unstable (Pi_p = 0)" if result['unstable'] else ""
            label = f" [{job.optimizer}]" if compare else ""
            print(f"✅ [{index + 1}/{len(jobs)}] {describe_point(job.point)}{label} -> mu_s = {value:.6g}{flag}")

        SweepRunner(jobs, evaluate_grid_point, workers=spec.sim.workers, on_result=on_result).start()
        if writer:
            writer.write_manifest(
                ResultFormatter.manifest(command, spec, columns, len(grid), unstable, spec.output_csv, rows=len(rows))
            )

    print("\n" + "=" * 50)
    if unstable:
        print(f"⚠️  {len(unstable)} grid point(s) with an unstable primary queue were reported with Pi_p = 0")
    print(f"🎉 {len(rows)} row(s) evaluated")
    return rows


def _single_optimizer(spec):
    if len(spec.optimizers) > 1:
        print(f"⚠️  {len(spec.optimizers)} optimizers configured; using the first, '{spec.optimizer}'")
    return spec.optimizer


def run_eval(spec, dump_chain=None):
    """Evaluate the configured (or optimised) policy at the base parameters."""
    params = spec.base
    policy, _ = resolve_policy(params, _single_optimizer(spec), spec.solver, spec.policy)
    report = evaluate_policy(params, policy)

    print(f"📡 Evaluating policy {report.policy_id} (E_max = {params.energy_capacity}, eq7 {params.eq7_mode})")
    print(f"   mu_p = {report.mu_p:.6g}   Pi_p = {report.pi_p:.6g}   mu_e = {report.mu_e:.6g}   mu_s = {report.mu_s:.6g}")
    if not report.pu_stable:
        print("⚠️  Primary queue is unstable (lambda_p >= mu_p); Pi_p reported as 0")

    if dump_chain:
        chain = build_energy_chain(params, policy, report.pi_p)
        dump_chain_csv(chain, dump_chain)
        print(f"📝 Chain written to: {dump_chain}")
    return report


def run_optimize(spec):
    """Solve for the throughput-maximising policy at the base parameters."""
    optimizer = _single_optimizer(spec)
    print(f"🔍 Optimising with '{optimizer}' (E_max = {spec.base.energy_capacity})")
    result = optimize(spec.base, optimizer, spec.solver)
    print(f"✅ {result.method}: mu_s = {result.best_mu_s:.6g} after {result.evaluations} evaluations")
    actions = result.best_policy.actions()
    if actions is not None:
        print(f"   Packets spent per buffer state: {list(actions)}")
    if result.stalled:
        print("   Randomised policies did not improve on the deterministic optimum")
    return result


def run_simulate(spec):
    """Simulate the configured (or optimised) policy at the base parameters.

    Returns:
        dict: 'policy', 'stats' (SimStats) and 'report' (analytical counterpart)
    """
    params = spec.base
    policy, _ = resolve_policy(params, _single_optimizer(spec), spec.solver, spec.policy)
    config = spec.sim
    print(f"🎲 Simulating policy {policy.policy_id}: {config.replications} x {config.slots} slots, "
          f"seed {config.seed}, PU {config.pu_activity}/{config.pu_service}")

    stats = simulate(params, policy, config)
    report = evaluate_policy(params, policy)
    for name in ('pi_p', 'mu_e', 'mu_s'):
        estimate = getattr(stats, f"est_{name}")
        width = stats.half_width_99[name]
        band = f" ± {width:.2g}" if width is not None else ""
        print(f"   {name}: simulated {estimate:.6g}{band}   analytical {getattr(report, name):.6g}")
    return {'policy': policy, 'stats': stats, 'report': report}
