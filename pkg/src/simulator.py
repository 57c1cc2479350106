"""
Monte Carlo Slot Simulator

Slot-by-slot simulation of the primary queue, energy harvesting into the
capped buffer, perfect sensing, randomised policy execution and Bernoulli
channel outcomes. Used to validate every analytical quantity.

Slot order: primary arrival, primary transmission if its queue is non-empty,
otherwise the secondary user spends j ~ omega[buffer] packets and succeeds with
probability Pbar_ssd,j, then harvested packets are added and the buffer is
capped at E_max. The buffer starts empty.
"""

import logging
import math
from bisect import bisect_right
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from scipy import stats

from .errors import ValidationError
from .link_model import primary_gain_threshold, primary_success_prob, success_table
from .throughput import pu_idle_prob

logger = logging.getLogger(__name__)

CHUNK_SLOTS = 1 << 16
MIN_SLOTS = 10 ** 4
PU_SERVICE_MODES = ('bernoulli', 'gain')
PU_ACTIVITY_MODES = ('queue', 'independent')
ESTIMATES = ('mu_p', 'pi_p', 'mu_e', 'mu_s')


@dataclass(frozen=True)
class SimConfig:
    """Run length, seeding and modelling switches of a simulation.

    slots counts every simulated slot of a replication, warmup included.
    """

    slots: int = 200000
    seed: int = 0
    replications: int = 5
    warmup_slots: int = 1000
    pu_service: str = 'bernoulli'
    pu_activity: str = 'queue'
    workers: int = 1

    def __post_init__(self):
        errors = []
        for name in ('slots', 'seed', 'replications', 'warmup_slots', 'workers'):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                errors.append(f"sim.{name}: expected an integer, got {value!r}")
        if errors:
            raise ValidationError(errors)
        if self.slots < MIN_SLOTS:
            errors.append(f"sim.slots: expected at least {MIN_SLOTS}, got {self.slots}")
        if not 0 <= self.warmup_slots < self.slots:
            errors.append(f"sim.warmup_slots ({self.warmup_slots}) must be >= 0 and below sim.slots ({self.slots})")
        if self.replications < 1:
            errors.append(f"sim.replications: expected >= 1, got {self.replications}")
        if not 0 <= self.seed < 2 ** 64:
            errors.append(f"sim.seed: expected an unsigned 64-bit integer, got {self.seed}")
        if self.workers < 1:
            errors.append(f"sim.workers: expected >= 1, got {self.workers}")
        if self.pu_service not in PU_SERVICE_MODES:
            errors.append(f"sim.pu_service: expected one of {', '.join(PU_SERVICE_MODES)}, got {self.pu_service!r}")
        if self.pu_activity not in PU_ACTIVITY_MODES:
            errors.append(f"sim.pu_activity: expected one of {', '.join(PU_ACTIVITY_MODES)}, got {self.pu_activity!r}")
        if errors:
            raise ValidationError(errors)

    @property
    def measured_slots(self):
        return self.slots - self.warmup_slots


@dataclass(frozen=True)
class SimStats:
    """Pooled estimates over replications, with 99% half-widths of the replication means."""

    est_mu_p: Optional[float]
    est_pi_p: float
    est_mu_e: float
    est_mu_s: float
    half_width_99: Dict[str, Optional[float]]
    state_histogram: List[float]
    state_histogram_se: List[Optional[float]]
    seed: int
    replications: int
    measured_slots: int
    delivered: int
    idle_slots: int
    busy_slots: int
    energy_harvested: int
    energy_consumed: int
    initial_energy: int
    replication_estimates: List[dict] = field(default_factory=list)

    def to_dict(self):
        return {
            'est_mu_p': self.est_mu_p,
            'est_pi_p': self.est_pi_p,
            'est_mu_e': self.est_mu_e,
            'est_mu_s': self.est_mu_s,
            'half_width_99': dict(self.half_width_99),
            'state_histogram': list(self.state_histogram),
            'state_histogram_se': list(self.state_histogram_se),
            'seed': self.seed,
            'replications': self.replications,
            'measured_slots': self.measured_slots,
            'delivered': self.delivered,
            'idle_slots': self.idle_slots,
            'busy_slots': self.busy_slots,
            'energy_harvested': self.energy_harvested,
            'energy_consumed': self.energy_consumed,
            'initial_energy': self.initial_energy,
            'replications_detail': list(self.replication_estimates),
        }

    def interval_half_widths(self, comparisons=1, confidence=0.99):
        """Student-t half-widths holding jointly over `comparisons` intervals.

        Each interval is widened to level 1 - (1 - confidence) / comparisons
        (Bonferroni), so all of them cover their targets together with
        probability at least `confidence`.

        Returns:
            tuple: (dict of estimate half-widths, list of per-state chi half-widths),
            None wherever fewer than two replications carry the estimate
        """
        level = 1 - (1 - confidence) / comparisons
        widths = {
            name: _half_width([r[name] for r in self.replication_estimates], level)
            for name in ESTIMATES
        }
        if self.replications < 2:
            return widths, [None] * len(self.state_histogram)
        quantile = stats.t.ppf(1 - (1 - level) / 2, df=self.replications - 1)
        return widths, [float(quantile * se) for se in self.state_histogram_se]


class _Replication:
    """State and counters of one independent replication."""

    def __init__(self, params, policy, config, seed_sequence):
        self.rng = np.random.default_rng(seed_sequence)
        self.config = config
        self.cap = params.energy_capacity
        self.lambda_p = params.primary_arrival_rate
        self.mu_p = primary_success_prob(params)
        self.pi_p = pu_idle_prob(params)
        self.gain_ppd = params.gain_ppd
        self.gain_threshold = primary_gain_threshold(params)
        self.harvest_rate = params.energy_arrival_rate * params.slot_duration_s
        self.success = success_table(params).tolist()
        self.cumulative = [np.cumsum(policy.omega[i, :i + 1]).tolist() for i in range(self.cap + 1)]

        self.queue = 0
        self.buffer = 0
        self.reset_counters()

    def reset_counters(self):
        self.occupancy = [0] * (self.cap + 1)
        self.busy = 0
        self.departures = 0
        self.idle = 0
        self.delivered = 0
        self.consumed = 0
        self.harvested = 0
        self.initial_energy = self.buffer

    def _draw(self, count):
        rng = self.rng
        if self.config.pu_activity == 'queue':
            activity = (rng.random(count) < self.lambda_p).tolist()
        else:
            activity = (rng.random(count) >= self.pi_p).tolist()
        if self.config.pu_service == 'bernoulli':
            served = (rng.random(count) < self.mu_p).tolist()
        else:
            served = (rng.exponential(self.gain_ppd, count) >= self.gain_threshold).tolist()
        harvest = rng.poisson(self.harvest_rate, count).tolist()
        choice = rng.random(count).tolist()
        outcome = rng.random(count).tolist()
        return activity, served, harvest, choice, outcome

    def run(self, count):
        queue_mode = self.config.pu_activity == 'queue'
        cap, success, cumulative = self.cap, self.success, self.cumulative
        occupancy = self.occupancy
        queue, buffer = self.queue, self.buffer
        busy = departures = idle = delivered = consumed = harvested = 0

        remaining = count
        while remaining > 0:
            size = min(CHUNK_SLOTS, remaining)
            remaining -= size
            activity, served, harvest, choice, outcome = self._draw(size)
            for t in range(size):
                occupancy[buffer] += 1
                if queue_mode:
                    queue += activity[t]
                    pu_busy = queue > 0
                else:
                    pu_busy = activity[t]

                if pu_busy:
                    busy += 1
                    if served[t]:
                        departures += 1
                        if queue_mode:
                            queue -= 1
                else:
                    idle += 1
                    j = bisect_right(cumulative[buffer], choice[t])
                    if j > buffer:
                        j = buffer
                    if j:
                        buffer -= j
                        consumed += j
                        if outcome[t] < success[j]:
                            delivered += 1

                arrived = harvest[t]
                harvested += arrived
                buffer += arrived
                if buffer > cap:
                    buffer = cap

        self.queue, self.buffer = queue, buffer
        self.busy += busy
        self.departures += departures
        self.idle += idle
        self.delivered += delivered
        self.consumed += consumed
        self.harvested += harvested

    def summary(self, measured):
        return {
            'mu_p': self.departures / self.busy if self.busy else None,
            'pi_p': self.idle / measured,
            'mu_e': self.consumed / measured,
            'mu_s': self.delivered / measured,
            'histogram': [c / measured for c in self.occupancy],
            'delivered': self.delivered,
            'idle': self.idle,
            'busy': self.busy,
            'harvested': self.harvested,
            'consumed': self.consumed,
            'initial_energy': self.initial_energy,
        }


def _run_replication(params, policy, config, seed_sequence):
    replication = _Replication(params, policy, config, seed_sequence)
    replication.run(config.warmup_slots)
    replication.reset_counters()
    replication.run(config.measured_slots)
    return replication.summary(config.measured_slots)


def _half_width(samples, confidence=0.99):
    """Student-t half-width of the mean of independent replication estimates."""
    samples = [s for s in samples if s is not None]
    n = len(samples)
    if n < 2:
        return None
    quantile = stats.t.ppf(1 - (1 - confidence) / 2, df=n - 1)
    return float(quantile * np.std(samples, ddof=1) / math.sqrt(n))


def _mean(samples):
    samples = [s for s in samples if s is not None]
    return float(np.mean(samples)) if samples else None


def simulate(params, policy, config=None):
    """Simulate the system and pool the replications.

    Replication r draws from the r-th child of SeedSequence(config.seed), so
    results depend only on (params, policy, config) and not on worker count.

    Args:
        params (SystemParams): model constants
        policy (AccessPolicy): policy sized for params.energy_capacity
        config (SimConfig): run settings

    Returns:
        SimStats
    """
    config = config or SimConfig()
    if policy.energy_capacity != params.energy_capacity:
        raise ValidationError(
            f"policy is sized for E_max = {policy.energy_capacity}, parameters have E_max = {params.energy_capacity}"
        )

    children = np.random.SeedSequence(config.seed).spawn(config.replications)
    jobs = [(params, policy, config, child) for child in children]
    if config.workers > 1 and config.replications > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_run_replication, *zip(*jobs)))
    else:
        results = [_run_replication(*job) for job in jobs]
    logger.debug("simulated %d replications of %d slots", config.replications, config.slots)

    histograms = np.array([r['histogram'] for r in results])
    if len(results) > 1:
        histogram_se = (histograms.std(axis=0, ddof=1) / math.sqrt(len(results))).tolist()
    else:
        histogram_se = [None] * histograms.shape[1]

    return SimStats(
        est_mu_p=_mean([r['mu_p'] for r in results]),
        est_pi_p=_mean([r['pi_p'] for r in results]),
        est_mu_e=_mean([r['mu_e'] for r in results]),
        est_mu_s=_mean([r['mu_s'] for r in results]),
        half_width_99={name: _half_width([r[name] for r in results]) for name in ESTIMATES},
        state_histogram=histograms.mean(axis=0).tolist(),
        state_histogram_se=histogram_se,
        seed=config.seed,
        replications=config.replications,
        measured_slots=config.measured_slots,
        delivered=sum(r['delivered'] for r in results),
        idle_slots=sum(r['idle'] for r in results),
        busy_slots=sum(r['busy'] for r in results),
        energy_harvested=sum(r['harvested'] for r in results),
        energy_consumed=sum(r['consumed'] for r in results),
        initial_energy=sum(r['initial_energy'] for r in results),
        replication_estimates=[{name: r[name] for name in ESTIMATES} for r in results],
    )
