"""
Throughput Analytics

Closed-form performance of one parameter set under one access policy:
primary service rate mu_p, PU idle probability Pi_p, energy service rate mu_e
and secondary throughput mu_s.
"""

from dataclasses import dataclass, field
from typing import List

from .energy_chain import build_energy_chain
from .errors import ValidationError
from .link_model import primary_success_prob, success_table

CSV_COLUMNS = [
    'lambda_p', 'lambda_e', 'e_joules', 'E_max',
    'mu_p', 'pi_p', 'mu_e', 'mu_s', 'policy_id', 'eq7_mode',
]


@dataclass(frozen=True)
class ThroughputReport:
    """Analytical results for one (params, policy) pair."""

    lambda_p: float
    lambda_e: float
    e_joules: float
    energy_capacity: int
    mu_p: float
    pi_p: float
    mu_e: float
    mu_s: float
    per_state_contrib: List[float]
    chi: List[float]
    pu_stable: bool
    policy_id: str
    eq7_mode: str
    policy: List[List[float]] = field(default_factory=list)

    def invariant_errors(self):
        """Return violated report invariants (empty when consistent)."""
        errors = []
        if abs(self.mu_s - self.pi_p * sum(self.per_state_contrib)) > 1e-12:
            errors.append("mu_s differs from pi_p * sum(per_state_contrib)")
        if not -1e-12 <= self.mu_s <= self.pi_p + 1e-12:
            errors.append(f"mu_s = {self.mu_s} outside [0, pi_p = {self.pi_p}]")
        if not -1e-12 <= self.mu_e <= self.pi_p * self.energy_capacity + 1e-12:
            errors.append(f"mu_e = {self.mu_e} outside [0, pi_p * E_max]")
        return errors

    def to_dict(self):
        return {
            'lambda_p': self.lambda_p,
            'lambda_e': self.lambda_e,
            'e_joules': self.e_joules,
            'E_max': self.energy_capacity,
            'mu_p': self.mu_p,
            'pi_p': self.pi_p,
            'mu_e': self.mu_e,
            'mu_s': self.mu_s,
            'policy_id': self.policy_id,
            'eq7_mode': self.eq7_mode,
            'pu_stable': self.pu_stable,
            'chi': list(self.chi),
            'per_state_contrib': list(self.per_state_contrib),
            'policy': self.policy,
        }

    def csv_row(self):
        flat = self.to_dict()
        return [flat[column] for column in CSV_COLUMNS]


def pu_is_stable(params):
    """True when the primary queue drains: lambda_p = 0 or lambda_p < mu_p."""
    lambda_p = params.primary_arrival_rate
    return lambda_p == 0 or lambda_p < primary_success_prob(params)


def pu_idle_prob(params):
    """Probability the primary queue is empty, 1 - lambda_p / mu_p.

    Without primary traffic the channel is always idle (1.0), even when mu_p
    underflows to 0. An unstable primary queue never yields the channel: 0.
    """
    if params.primary_arrival_rate == 0:
        return 1.0
    if not pu_is_stable(params):
        return 0.0
    return 1.0 - params.primary_arrival_rate / primary_success_prob(params)


def _check_solved(params, policy, chain):
    if chain.stationary is None:
        raise ValidationError("energy chain has no stationary distribution; solve it first")
    if chain.n_states != policy.energy_capacity + 1 or policy.energy_capacity != params.energy_capacity:
        raise ValidationError(
            f"policy (E_max = {policy.energy_capacity}), chain ({chain.n_states} states) and "
            f"parameters (E_max = {params.energy_capacity}) do not match"
        )


def energy_service_rate(params, policy, chain):
    """Mean energy packets consumed per slot: Pi_p sum_{i>=1} chi_i sum_{j>=1} omega_ij j."""
    _check_solved(params, policy, chain)
    total = float(chain.stationary[1:] @ policy.expected_spend()[1:])
    return pu_idle_prob(params) * total


def _per_state_contrib(params, policy, chain):
    success = success_table(params)
    chi = chain.stationary
    omega = policy.omega
    contrib = [0.0]
    for i in range(1, params.energy_capacity + 1):
        contrib.append(float(chi[i] * (omega[i, :i + 1] @ success[:i + 1])))
    return contrib


def su_throughput(params, policy, chain):
    """Secondary throughput: Pi_p sum_{i>=1} chi_i sum_{j>=0} omega_ij Pbar_ssd,j.

    Pbar_ssd,0 = 0, so the j = 0 term never contributes.
    """
    _check_solved(params, policy, chain)
    return pu_idle_prob(params) * sum(_per_state_contrib(params, policy, chain))


def evaluate_policy(params, policy, method='direct'):
    """Run the full pipeline and return a ThroughputReport.

    Args:
        params (SystemParams): model constants
        policy (AccessPolicy): access policy sized for params.energy_capacity
        method (str): stationary solver, 'direct' or 'power'

    Returns:
        ThroughputReport
    """
    mu_p = primary_success_prob(params)
    pi_p = pu_idle_prob(params)
    chain = build_energy_chain(params, policy, pi_p, method=method)
    contrib = _per_state_contrib(params, policy, chain)

    return ThroughputReport(
        lambda_p=params.primary_arrival_rate,
        lambda_e=params.energy_arrival_rate,
        e_joules=params.energy_per_packet_j,
        energy_capacity=params.energy_capacity,
        mu_p=mu_p,
        pi_p=pi_p,
        mu_e=energy_service_rate(params, policy, chain),
        mu_s=pi_p * sum(contrib),
        per_state_contrib=contrib,
        chi=[float(x) for x in chain.stationary],
        pu_stable=pu_is_stable(params),
        policy_id=policy.policy_id,
        eq7_mode=params.eq7_mode,
        policy=policy.to_list(),
    )
