"""
Policy Optimizer

Maximises the secondary throughput over row-stochastic access policies.

The problem is a finite average-reward decision process: state = buffer level,
action = packets spent, per-slot reward = Pi_p * Pbar_ssd,j, transitions from the
energy-chain kernel. Such a process always has a deterministic optimal
stationary policy, so exhaustive enumeration of deterministic policies is exact
for small buffers; relative value iteration scales further; projected ascent
over randomised policies checks that randomisation gains nothing.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .energy_chain import AccessPolicy, _power_iteration, action_kernel
from .errors import CapacityError, NumericalError, ValidationError
from .link_model import success_table
from .throughput import evaluate_policy, pu_idle_prob

logger = logging.getLogger(__name__)

MAX_ENUMERATED_POLICIES = 10 ** 6
TIE_TOLERANCE = 1e-12

METHOD_NAMES = {
    'enum': 'enumeration',
    'vi': 'value-iteration',
    'ascent': 'randomized-ascent',
    'fixed': 'fixed',
}


@dataclass(frozen=True)
class OptimizationResult:
    """Best policy found and how it was found."""

    best_policy: AccessPolicy
    best_mu_s: float
    method: str
    evaluations: int
    residual: float
    iterations: int = 0
    stalled: bool = False
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        data = {
            'policy': self.best_policy.to_list(),
            'policy_id': self.best_policy.policy_id,
            'method': self.method,
            'mu_s': self.best_mu_s,
            'residual': self.residual,
            'evaluations': self.evaluations,
            'iterations': self.iterations,
            'stalled': self.stalled,
        }
        data.update(self.extra)
        return data


@dataclass(frozen=True)
class SolverSettings:
    """Knobs shared by the iterative solvers."""

    tolerance: float = 1e-10
    max_iters: int = 100000
    ascent_starts: int = 8
    ascent_max_iters: int = 300
    seed: int = 0


class PolicyEvaluator:
    """Fast mu_s evaluation for many policies under one parameter set.

    Lambda is assembled from the action kernel instead of case by case; the
    final answer of every solver is re-evaluated through evaluate_policy.
    """

    def __init__(self, params):
        self.params = params
        self.pi_p = pu_idle_prob(params)
        self.kernel = action_kernel(params, self.pi_p)
        self.n_states = params.energy_capacity + 1
        # reward[i, j]: expected deliveries in a slot where state i spends j
        self.reward = np.tril(np.tile(self.pi_p * success_table(params), (self.n_states, 1)))
        self.evaluations = 0

    def _stationary(self, transition):
        n = self.n_states
        if n == 1:
            return np.ones(1)
        system = transition.T - np.eye(n)
        system[-1, :] = 1.0
        rhs = np.zeros(n)
        rhs[-1] = 1.0
        try:
            chi = linalg.solve(system, rhs)
            if np.all(np.isfinite(chi)) and np.max(np.abs(chi @ transition - chi)) < 1e-9:
                return chi
        except linalg.LinAlgError:
            pass
        # several closed classes
        return _power_iteration(transition, 1e-14, 200000)

    def value(self, omega):
        """mu_s for a (possibly slightly perturbed) policy matrix."""
        self.evaluations += 1
        transition = np.einsum('ij,ijk->ik', omega, self.kernel)
        chi = self._stationary(transition)
        return float(chi @ np.sum(omega * self.reward, axis=1))

    def deterministic_value(self, actions):
        self.evaluations += 1
        states = np.arange(self.n_states)
        transition = self.kernel[states, actions]
        chi = self._stationary(transition)
        return float(chi @ self.reward[states, actions])


def parse_optimizer_choice(text):
    """Parse 'enum', 'vi', 'ascent' or 'fixed:G' into (method, G)."""
    text = str(text).strip().lower()
    if text in ('enum', 'vi', 'ascent'):
        return text, None
    if text.startswith('fixed:'):
        try:
            packets = int(text.split(':', 1)[1])
        except ValueError:
            raise ValidationError(f"optimizer {text!r}: expected fixed:G with an integer G")
        return 'fixed', packets
    raise ValidationError(f"optimizer {text!r}: expected one of enum, vi, ascent, fixed:G")


def _finish(params, policy, method, evaluations, residual, iterations=0, stalled=False, extra=None):
    report = evaluate_policy(params, policy)
    return OptimizationResult(
        best_policy=policy,
        best_mu_s=report.mu_s,
        method=method,
        evaluations=evaluations,
        residual=float(residual),
        iterations=iterations,
        stalled=stalled,
        extra=extra or {},
    )


def enumerate_deterministic(params, max_policies=MAX_ENUMERATED_POLICIES):
    """Evaluate every deterministic policy and return the best.

    Ties (within 1e-12) go to the policy spending fewer packets in total, then
    to the lexicographically smallest action vector.

    Raises:
        CapacityError: more than max_policies candidates ((E_max + 1)! of them)
    """
    cap = params.energy_capacity
    count = math.factorial(cap + 1)
    if count > max_policies:
        raise CapacityError(
            f"E_max = {cap} gives {count} deterministic policies (limit {max_policies}); "
            f"use value iteration (--optimizer vi) instead"
        )

    evaluator = PolicyEvaluator(params)
    best_actions, best_value = None, -np.inf
    for actions in itertools.product(*(range(i + 1) for i in range(cap + 1))):
        value = evaluator.deterministic_value(list(actions))
        if value > best_value + TIE_TOLERANCE:
            best_actions, best_value = actions, value
        elif abs(value - best_value) <= TIE_TOLERANCE and (sum(actions), actions) < (sum(best_actions), best_actions):
            best_actions = actions

    logger.info("enumerated %d policies, best %s -> mu_s %.6g", count, best_actions, best_value)
    return _finish(params, AccessPolicy.deterministic(best_actions), 'enumeration', evaluator.evaluations, 0.0)


def value_iteration(params, tolerance=1e-10, max_iters=100000, step_size=0.5, reference_state=0):
    """Relative value iteration on the buffer-level decision process.

    The damped update h <- h + step_size (T h - h), re-centred on the reference
    state, stops once the span of T h - h falls below tolerance; the greedy
    policy (smallest spend on ties) is then optimal.

    Raises:
        NumericalError: no convergence within max_iters, carrying the final span
    """
    if tolerance <= 0:
        raise ValidationError(f"tolerance must be > 0, got {tolerance!r}")
    if not 0 < step_size <= 1:
        raise ValidationError(f"step_size must lie in (0, 1], got {step_size!r}")

    evaluator = PolicyEvaluator(params)
    kernel, reward = evaluator.kernel, evaluator.reward
    n = evaluator.n_states
    valid = np.tril(np.ones((n, n), dtype=bool))

    h = np.zeros(n)
    span = np.inf
    for iteration in range(1, max_iters + 1):
        q = np.where(valid, reward + kernel @ h, -np.inf)
        diff = q.max(axis=1) - h
        span = float(diff.max() - diff.min())
        if span < tolerance:
            break
        h = h + step_size * diff
        h -= h[reference_state]
    else:
        raise NumericalError(f"value iteration did not converge in {max_iters} iterations", span)

    q = np.where(valid, reward + kernel @ h, -np.inf)
    best = q.max(axis=1, keepdims=True)
    actions = [int(np.flatnonzero(row >= top - TIE_TOLERANCE)[0]) for row, top in zip(q, best[:, 0])]
    gain = float(0.5 * (diff.max() + diff.min()))
    logger.info("value iteration converged after %d iterations, gain %.6g, span %.2e", iteration, gain, span)
    return _finish(params, AccessPolicy.deterministic(actions), 'value-iteration', iteration, span,
                   iterations=iteration, extra={'gain_estimate': gain})


def project_simplex(v):
    """Euclidean projection of v onto the probability simplex.

    Sort-and-threshold method: argmin_{y >= 0, sum(y) = 1} ||y - v||^2.
    """
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    cssv = np.cumsum(u) - 1.0
    ind = np.arange(1, len(v) + 1)
    rho = np.count_nonzero(u - cssv / ind > 0)
    theta = cssv[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def _project_rows(omega):
    projected = np.zeros_like(omega)
    for i in range(omega.shape[0]):
        projected[i, :i + 1] = project_simplex(omega[i, :i + 1])
    return projected


def _gradient(evaluator, omega, fd_step):
    """Central differences along e_ij - e_i0, which keep every row summing to 1."""
    grad = np.zeros_like(omega)
    for i in range(1, omega.shape[0]):
        for j in range(1, i + 1):
            direction = np.zeros_like(omega)
            direction[i, j], direction[i, 0] = 1.0, -1.0
            up = evaluator.value(omega + fd_step * direction)
            down = evaluator.value(omega - fd_step * direction)
            grad[i, j] = (up - down) / (2.0 * fd_step)
    return grad


def _ascend(evaluator, omega, step_size, tolerance, max_iters, fd_step):
    value = evaluator.value(omega)
    step = step_size
    residual = np.inf
    for iteration in range(1, max_iters + 1):
        grad = _gradient(evaluator, omega, fd_step)
        residual = float(np.max(np.abs(_project_rows(omega + grad) - omega)))
        eta, moved, gained = step, False, 0.0
        while eta >= 1e-12:
            candidate = _project_rows(omega + eta * grad)
            if np.max(np.abs(candidate - omega)) < tolerance:
                break
            candidate_value = evaluator.value(candidate)
            if candidate_value > value:
                gained = candidate_value - value
                omega, value, moved = candidate, candidate_value, True
                step = min(eta * 2.0, 1e6)
                break
            eta /= 2.0
        if not moved or gained < tolerance:
            return omega, value, iteration, residual
    logger.debug("ascent hit the iteration cap (%d)", max_iters)
    return omega, value, max_iters, residual


def randomized_ascent(params, starts=8, step_size=1.0, tolerance=1e-10, max_iters=300, seed=0,
                      initial_policy=None, reference_mu_s=None, fd_step=1e-6):
    """Multi-start projected gradient ascent over randomised policies.

    Each row of omega lives on its own simplex; steps double after a success
    and halve after a failure. The first start is initial_policy when given,
    the rest are uniform random policies drawn from seed.

    The result is flagged stalled when no start beats the best deterministic
    reference (reference_mu_s, or the rounding of the best policy found) by
    more than tolerance.
    """
    if starts < 1:
        raise ValidationError(f"starts must be >= 1, got {starts!r}")

    evaluator = PolicyEvaluator(params)
    rng = np.random.default_rng(seed)
    cap = params.energy_capacity
    initial = []
    if initial_policy is not None:
        if initial_policy.energy_capacity != cap:
            raise ValidationError("initial policy does not match E_max")
        initial.append(np.array(initial_policy.omega))
    while len(initial) < starts:
        initial.append(np.array(AccessPolicy.random(cap, rng).omega))

    best = None
    total_iterations = 0
    for index, omega in enumerate(initial):
        omega, value, iterations, residual = _ascend(evaluator, omega, step_size, tolerance, max_iters, fd_step)
        total_iterations += iterations
        logger.debug("ascent start %d: mu_s %.8g after %d iterations", index, value, iterations)
        if best is None or value > best[1] + TIE_TOLERANCE:
            best = (omega, value, residual)

    omega, value, residual = best
    policy = AccessPolicy(_project_rows(omega))
    rounded = AccessPolicy.deterministic([int(j) for j in policy.omega.argmax(axis=1)])
    reference = evaluator.value(rounded.omega)
    if reference_mu_s is not None:
        reference = max(reference, reference_mu_s)
    stalled = value <= reference + tolerance
    if stalled:
        logger.info("randomised ascent found nothing better than the deterministic reference %.8g", reference)
    return _finish(params, policy, 'randomized-ascent', evaluator.evaluations, residual,
                   iterations=total_iterations, stalled=stalled)


def fixed_strategy_policy(params, packets):
    """Baseline spending exactly G packets whenever at least G are stored, silent otherwise."""
    cap = params.energy_capacity
    if isinstance(packets, bool) or not isinstance(packets, (int, np.integer)) or not 1 <= packets <= cap:
        raise ValidationError(f"fixed strategy needs 1 <= G <= E_max = {cap}, got {packets!r}")
    return AccessPolicy.deterministic([packets if i >= packets else 0 for i in range(cap + 1)])


def optimize(params, choice='enum', settings=None):
    """Dispatch to the solver named by an optimizer choice string.

    Args:
        params (SystemParams): model constants
        choice (str): 'enum', 'vi', 'ascent' or 'fixed:G'
        settings (SolverSettings): solver knobs

    Returns:
        OptimizationResult
    """
    settings = settings or SolverSettings()
    method, packets = parse_optimizer_choice(choice)
    if method == 'enum':
        return enumerate_deterministic(params)
    if method == 'vi':
        return value_iteration(params, tolerance=settings.tolerance, max_iters=settings.max_iters)
    if method == 'ascent':
        return randomized_ascent(params, starts=settings.ascent_starts, tolerance=settings.tolerance,
                                 max_iters=settings.ascent_max_iters, seed=settings.seed)
    policy = fixed_strategy_policy(params, packets)
    return _finish(params, policy, 'fixed', 1, 0.0, extra={'G': packets})
