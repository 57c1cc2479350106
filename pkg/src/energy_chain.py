"""
Energy Chain

Markov chain of the secondary user's energy buffer: Poisson energy arrivals,
the access policy omega, the transition kernel Lambda and its stationary
distribution chi.

Within a slot the buffer first pays for the chosen transmission (only when the
primary user is idle), then receives the harvested packets, then is capped at
E_max.
"""

import csv
import hashlib
import logging
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg
from scipy.special import gammainc, gammaln, xlogy

from .errors import NumericalError, ValidationError

logger = logging.getLogger(__name__)

ROW_SUM_TOLERANCE = 1e-10
POLICY_TOLERANCE = 1e-9


def _frozen(array):
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


def poisson_pmf(rate, k):
    """Probability of harvesting exactly k energy packets in one slot.

    Evaluated in log space, so large k neither overflows k! nor rate**k.

    Args:
        rate (float): mean packets per slot, lambda_e * T
        k (int): packet count

    Returns:
        float: (rate^k) exp(-rate) / k!
    """
    if rate < 0 or k < 0:
        raise ValidationError(f"poisson_pmf needs rate >= 0 and k >= 0, got rate={rate!r}, k={k!r}")
    return float(np.exp(xlogy(k, rate) - rate - gammaln(k + 1)))


@dataclass(frozen=True)
class PoissonArrivals:
    """Per-slot energy-packet arrivals with mean rate_per_slot."""

    rate_per_slot: float

    def __post_init__(self):
        if self.rate_per_slot < 0:
            raise ValidationError(f"arrival rate must be >= 0, got {self.rate_per_slot!r}")

    @classmethod
    def from_params(cls, params):
        return cls(params.energy_arrival_rate * params.slot_duration_s)

    def pmf(self, k):
        return poisson_pmf(self.rate_per_slot, k)

    def pmf_vector(self, n):
        """pmf for k = 0..n-1."""
        k = np.arange(n)
        return np.exp(xlogy(k, self.rate_per_slot) - self.rate_per_slot - gammaln(k + 1))

    def tail(self, k):
        """P{H >= k}."""
        if k <= 0:
            return 1.0
        return float(gammainc(k, self.rate_per_slot))


@dataclass(frozen=True)
class AccessPolicy:
    """Lower-triangular row-stochastic matrix: omega[i][j] = P(spend j | buffer holds i)."""

    omega: np.ndarray

    def __post_init__(self):
        omega = np.array(self.omega, dtype=float)
        errors = []
        if omega.ndim != 2 or omega.shape[0] != omega.shape[1] or omega.shape[0] == 0:
            raise ValidationError(f"policy must be a non-empty square matrix, got shape {omega.shape}")
        if not np.all(np.isfinite(omega)):
            errors.append("policy entries must be finite")
        if np.any(omega < -POLICY_TOLERANCE) or np.any(omega > 1 + POLICY_TOLERANCE):
            errors.append("policy entries must lie in [0, 1]")
        if np.any(np.abs(np.triu(omega, k=1)) > POLICY_TOLERANCE):
            errors.append("policy cannot spend more packets than the buffer holds (omega[i][j] = 0 for j > i)")
        sums = omega.sum(axis=1)
        bad_rows = [i for i, s in enumerate(sums) if abs(s - 1.0) > POLICY_TOLERANCE]
        if bad_rows:
            errors.append(f"policy rows must sum to 1; rows {bad_rows} do not")
        if errors:
            raise ValidationError(errors)
        omega = np.clip(np.tril(omega), 0.0, 1.0)
        object.__setattr__(self, 'omega', _frozen(omega))

    @property
    def energy_capacity(self):
        return self.omega.shape[0] - 1

    @classmethod
    def silent(cls, energy_capacity):
        omega = np.zeros((energy_capacity + 1, energy_capacity + 1))
        omega[:, 0] = 1.0
        return cls(omega)

    @classmethod
    def deterministic(cls, actions):
        """Policy spending actions[i] packets in state i with certainty."""
        n = len(actions)
        omega = np.zeros((n, n))
        for i, j in enumerate(actions):
            if not 0 <= j <= i:
                raise ValidationError(f"state {i} cannot spend {j} packets")
            omega[i, j] = 1.0
        return cls(omega)

    @classmethod
    def random(cls, energy_capacity, rng):
        """Policy with each row drawn uniformly from its simplex."""
        omega = np.zeros((energy_capacity + 1, energy_capacity + 1))
        for i in range(energy_capacity + 1):
            omega[i, :i + 1] = rng.dirichlet(np.ones(i + 1))
        return cls(omega)

    @classmethod
    def from_rows(cls, rows, energy_capacity=None):
        """Build from nested lists, padding short rows with zeros."""
        n = len(rows) if energy_capacity is None else energy_capacity + 1
        if len(rows) != n:
            raise ValidationError(f"policy needs {n} rows (E_max + 1), got {len(rows)}")
        omega = np.zeros((n, n))
        for i, row in enumerate(rows):
            if len(row) > n:
                raise ValidationError(f"policy row {i} has {len(row)} entries, at most {n} allowed")
            omega[i, :len(row)] = row
        return cls(omega)

    def actions(self):
        """Action vector when every row is a unit vector, otherwise None."""
        if not np.all(np.isclose(self.omega.max(axis=1), 1.0)):
            return None
        return tuple(int(j) for j in self.omega.argmax(axis=1))

    def expected_spend(self):
        """Mean packets spent in each state when the PU is idle."""
        return self.omega @ np.arange(self.omega.shape[0])

    @property
    def policy_id(self):
        digest = hashlib.sha1(np.round(self.omega, 12).tobytes()).hexdigest()
        return digest[:10]

    def to_list(self):
        return [[float(x) for x in row[:i + 1]] for i, row in enumerate(self.omega)]


@dataclass(frozen=True)
class EnergyChain:
    """Transition matrix Lambda and, once solved, its stationary vector chi."""

    transition: np.ndarray
    stationary: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, 'transition', _frozen(self.transition))
        if self.stationary is not None:
            object.__setattr__(self, 'stationary', _frozen(self.stationary))

    @property
    def n_states(self):
        return self.transition.shape[0]

    def solved(self, method='direct'):
        return EnergyChain(self.transition, stationary_distribution(self, method=method))


def _check_policy_matches(params, policy):
    if policy.energy_capacity != params.energy_capacity:
        raise ValidationError(
            f"policy is sized for E_max = {policy.energy_capacity}, parameters have "
            f"E_max = {params.energy_capacity}"
        )


def _check_idle_prob(pu_idle_prob):
    if not 0.0 <= pu_idle_prob <= 1.0:
        raise ValidationError(f"PU idle probability must lie in [0, 1], got {pu_idle_prob!r}")


def build_transition_matrix(params, policy, pu_idle_prob):
    """Assemble Lambda[n][k] case by case.

    For k < E_max the next state is reached exactly (k < n needs at least n - k
    packets spent); the k = E_max column collects every arrival that overflows
    the buffer. Empty sums are zero.

    Args:
        params (SystemParams): model constants
        policy (AccessPolicy): omega, sized E_max + 1
        pu_idle_prob (float): Pi_p

    Returns:
        EnergyChain: transition part only
    """
    _check_policy_matches(params, policy)
    _check_idle_prob(pu_idle_prob)

    cap = params.energy_capacity
    omega = policy.omega
    pmf = PoissonArrivals.from_params(params).pmf_vector(cap + 1)
    # below[m] = sum of pmf[0..m-1]
    below = np.concatenate(([0.0], np.cumsum(pmf)))
    idle, busy = pu_idle_prob, 1.0 - pu_idle_prob

    transition = np.zeros((cap + 1, cap + 1))
    for n in range(cap + 1):
        for k in range(cap):
            if k < n:
                total = sum(omega[n, m] * pmf[k - (n - m)] for m in range(n - k, n + 1))
                transition[n, k] = idle * total
            else:
                total = sum(omega[n, m] * pmf[k - (n - m)] for m in range(n + 1))
                transition[n, k] = idle * total + busy * pmf[k - n]
        overflow = sum(omega[n, m] * max(1.0 - below[cap - (n - m)], 0.0) for m in range(n + 1))
        transition[n, cap] = idle * overflow + busy * max(1.0 - below[cap - n], 0.0)
    return EnergyChain(transition)


def action_kernel(params, pu_idle_prob):
    """Tensor K[i, j, k]: P(next buffer = k | buffer i, j packets chosen).

    The choice is only carried out in idle slots. For any policy,
    Lambda[i] = sum_j omega[i][j] K[i, j].
    """
    _check_idle_prob(pu_idle_prob)
    cap = params.energy_capacity
    pmf = PoissonArrivals.from_params(params).pmf_vector(cap + 1)
    below = np.concatenate(([0.0], np.cumsum(pmf)))

    # after[s, k]: buffer at s after spending, k after harvesting and capping
    after = np.zeros((cap + 1, cap + 1))
    for s in range(cap + 1):
        after[s, s:cap] = pmf[:cap - s]
        after[s, cap] = max(1.0 - below[cap - s], 0.0)

    kernel = np.zeros((cap + 1, cap + 1, cap + 1))
    for i in range(cap + 1):
        for j in range(i + 1):
            kernel[i, j] = pu_idle_prob * after[i - j] + (1.0 - pu_idle_prob) * after[i]
    return kernel


def _power_iteration(transition, tolerance, max_iters):
    n = transition.shape[0]
    chi = np.full(n, 1.0 / n)
    residual = np.inf
    for _ in range(max_iters):
        nxt = chi @ transition
        residual = np.max(np.abs(nxt - chi))
        chi = nxt
        if residual < tolerance:
            return chi / chi.sum()
    raise NumericalError(f"power iteration did not converge in {max_iters} iterations", residual)


def stationary_distribution(chain, method='direct', tolerance=1e-14, max_iters=200000):
    """Solve chi = chi Lambda with sum(chi) = 1.

    The direct method replaces one balance equation with the normalisation and
    solves the linear system; it needs a single closed class. Chains with several
    closed classes (for example no energy arrivals and silent states) fall back
    to power iteration from the uniform vector.

    Args:
        chain (EnergyChain): chain with a row-stochastic transition matrix
        method (str): 'direct' or 'power'
        tolerance (float): power-iteration step tolerance
        max_iters (int): power-iteration cap

    Returns:
        numpy.ndarray: chi, length E_max + 1
    """
    transition = chain.transition
    if np.any(transition < -ROW_SUM_TOLERANCE):
        raise ValidationError("transition matrix has negative entries")
    row_error = np.max(np.abs(transition.sum(axis=1) - 1.0))
    if row_error > ROW_SUM_TOLERANCE:
        raise ValidationError(f"transition matrix rows must sum to 1 (worst deviation {row_error:.3e})")
    if method not in ('direct', 'power'):
        raise ValidationError(f"unknown stationary method {method!r}; expected 'direct' or 'power'")

    n = transition.shape[0]
    if n == 1:
        return np.ones(1)

    if method == 'direct':
        system = transition.T - np.eye(n)
        if np.linalg.matrix_rank(system) == n - 1:
            system[-1, :] = 1.0
            rhs = np.zeros(n)
            rhs[-1] = 1.0
            chi = linalg.solve(system, rhs)
            chi = np.clip(chi, 0.0, None)
            chi /= chi.sum()
            if np.max(np.abs(chi @ transition - chi)) <= ROW_SUM_TOLERANCE:
                return chi
            logger.warning("direct stationary solve left a large residual; retrying with power iteration")
        else:
            logger.debug("chain has several closed classes; using power iteration")

    return _power_iteration(transition, tolerance, max_iters)


def build_energy_chain(params, policy, pu_idle_prob, method='direct'):
    """Transition matrix plus stationary vector in one call."""
    return build_transition_matrix(params, policy, pu_idle_prob).solved(method)


def dump_chain_csv(chain, path):
    """Write Lambda (one row per state) followed by chi as CSV."""
    directory = os.path.dirname(path)
    if directory and not os.path.exists(directory):
        os.makedirs(directory)

    header = ['row'] + [f"state_{k}" for k in range(chain.n_states)]
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for n, row in enumerate(chain.transition):
            writer.writerow([f"lambda_{n}"] + [repr(float(x)) for x in row])
        if chain.stationary is not None:
            writer.writerow(['chi'] + [repr(float(x)) for x in chain.stationary])
