import numpy as np
import pytest

from conftest import random_params, random_policy
from src.energy_chain import build_transition_matrix
from src.errors import CapacityError, NumericalError, ValidationError
from src.optimizer import (
    SolverSettings, enumerate_deterministic, fixed_strategy_policy, optimize,
    parse_optimizer_choice, project_simplex, randomized_ascent, value_iteration,
)
from src.throughput import evaluate_policy, pu_idle_prob, su_throughput


LOAD_GRID = [round(0.05 * k, 2) for k in range(16)]


def test_single_packet_buffer(common_params):
    params = common_params.replace(energy_capacity=1)
    result = enumerate_deterministic(params)
    assert result.evaluations == 2
    assert result.best_policy.actions() == (0, 1)
    assert result.best_mu_s > 0.0


def test_enumeration_count(common_params):
    result = enumerate_deterministic(common_params)
    assert result.evaluations == 120
    assert result.method == 'enumeration'


def test_capacity_guard(common_params):
    with pytest.raises(CapacityError) as excinfo:
        enumerate_deterministic(common_params.replace(energy_capacity=9))
    assert isinstance(excinfo.value, ValidationError)
    assert '--optimizer vi' in str(excinfo.value)


def test_value_iteration_matches_enumeration(rng):
    for _ in range(12):
        params = random_params(rng, max_capacity=5, energy_capacity=int(rng.integers(1, 6)))
        enum = enumerate_deterministic(params)
        vi = value_iteration(params)
        assert vi.best_mu_s == pytest.approx(enum.best_mu_s, abs=1e-8)
        assert vi.residual < 1e-10
        assert vi.extra['gain_estimate'] == pytest.approx(enum.best_mu_s, abs=1e-8)


def test_value_iteration_larger_buffer(common_params):
    params = common_params.replace(energy_capacity=6, eq7_literal=False)
    assert value_iteration(params).best_mu_s == pytest.approx(enumerate_deterministic(params).best_mu_s, abs=1e-8)


def test_value_iteration_iteration_cap(common_params):
    with pytest.raises(NumericalError) as excinfo:
        value_iteration(common_params, max_iters=1)
    assert excinfo.value.residual > 0


@pytest.mark.slow
def test_three_solvers_agree(rng):
    for _ in range(10):
        params = random_params(rng, energy_capacity=int(rng.integers(1, 5)))
        enum = enumerate_deterministic(params)
        vi = value_iteration(params)
        ascent = randomized_ascent(params, starts=3, max_iters=200, seed=int(rng.integers(1000)))
        assert vi.best_mu_s == pytest.approx(enum.best_mu_s, abs=1e-8)
        assert ascent.best_mu_s <= enum.best_mu_s + 1e-6
        assert ascent.best_mu_s == pytest.approx(enum.best_mu_s, abs=1e-4)


def test_ascent_reaches_deterministic_optimum(common_params):
    params = common_params.replace(energy_capacity=3)
    enum = enumerate_deterministic(params)
    ascent = randomized_ascent(params, starts=8, seed=11)
    assert ascent.best_mu_s == pytest.approx(enum.best_mu_s, abs=1e-4)
    assert ascent.best_mu_s <= enum.best_mu_s + 1e-6


def test_ascent_from_optimum_stops_immediately(common_params):
    params = common_params.replace(energy_capacity=3, eq7_literal=False)
    enum = enumerate_deterministic(params)
    result = randomized_ascent(params, starts=1, initial_policy=enum.best_policy, reference_mu_s=enum.best_mu_s)
    assert result.iterations == 1
    assert result.stalled
    assert result.best_mu_s == pytest.approx(enum.best_mu_s, abs=1e-10)


def test_fixed_strategy_rows(common_params):
    policy = fixed_strategy_policy(common_params, 2)
    assert policy.actions() == (0, 0, 2, 2, 2)
    with pytest.raises(ValidationError):
        fixed_strategy_policy(common_params, 0)
    with pytest.raises(ValidationError):
        fixed_strategy_policy(common_params, 5)


def test_optimum_dominates_random_and_fixed_policies(common_params, rng):
    best = enumerate_deterministic(common_params).best_mu_s
    for _ in range(100):
        assert evaluate_policy(common_params, random_policy(rng, 4)).mu_s <= best + 1e-12
    for packets in range(1, 5):
        assert evaluate_policy(common_params, fixed_strategy_policy(common_params, packets)).mu_s <= best + 1e-12


def test_optimum_beats_fixed_strategies_across_primary_load(common_params):
    base = common_params.replace(energy_capacity=3, energy_arrival_rate=0.5)
    strict = 0
    for lambda_p in LOAD_GRID:
        params = base.replace(primary_arrival_rate=lambda_p)
        best = enumerate_deterministic(params).best_mu_s
        fixed = [evaluate_policy(params, fixed_strategy_policy(params, g)).mu_s for g in range(1, 4)]
        assert all(value <= best + 1e-12 for value in fixed)
        strict += best > max(fixed) + 1e-9
    assert strict >= 1


def test_unusable_channel_gives_silent_policy(common_params):
    params = common_params.replace(primary_arrival_rate=0.95)
    for result in (enumerate_deterministic(params), value_iteration(params)):
        assert result.best_mu_s == 0.0
        assert result.best_policy.actions() == (0, 0, 0, 0, 0)


def test_no_harvest_gives_zero(common_params):
    params = common_params.replace(energy_arrival_rate=0.0)
    assert enumerate_deterministic(params).best_mu_s == pytest.approx(0.0, abs=1e-12)
    assert value_iteration(params).best_mu_s == pytest.approx(0.0, abs=1e-12)


def test_reported_value_is_reevaluated(rng):
    for _ in range(5):
        params = random_params(rng, energy_capacity=int(rng.integers(1, 5)))
        result = value_iteration(params)
        policy = result.best_policy
        solved = build_transition_matrix(params, policy, pu_idle_prob(params)).solved()
        assert result.best_mu_s == pytest.approx(su_throughput(params, policy, solved), abs=1e-10)


def test_throughput_falls_with_primary_load(common_params):
    for lambda_e in (0.1, 0.5, 1.0):
        values = []
        for lambda_p in LOAD_GRID:
            params = common_params.replace(energy_arrival_rate=lambda_e, primary_arrival_rate=lambda_p)
            values.append(enumerate_deterministic(params).best_mu_s)
        assert all(later <= earlier + 1e-12 for earlier, later in zip(values, values[1:]))


@pytest.mark.parametrize("lambda_p", LOAD_GRID)
def test_throughput_grows_with_harvest_rate(common_params, lambda_p):
    params = common_params.replace(primary_arrival_rate=lambda_p, energy_capacity=4)
    values = [enumerate_deterministic(params.replace(energy_arrival_rate=rate)).best_mu_s
              for rate in (0.1, 0.5, 1.0)]
    assert values[0] <= values[1] + 1e-12
    assert values[1] <= values[2] + 1e-12


@pytest.mark.slow
@pytest.mark.parametrize("lambda_p", LOAD_GRID)
def test_throughput_grows_with_buffer_size(common_params, lambda_p):
    params = common_params.replace(primary_arrival_rate=lambda_p, energy_arrival_rate=1.0)
    values = [enumerate_deterministic(params.replace(energy_capacity=cap)).best_mu_s
              for cap in range(1, 6)]
    assert all(later >= earlier - 1e-12 for earlier, later in zip(values, values[1:]))


@pytest.mark.parametrize("eq7_literal", [True, False])
@pytest.mark.parametrize("lambda_p", LOAD_GRID)
def test_throughput_grows_with_packet_energy(common_params, lambda_p, eq7_literal):
    params = common_params.replace(primary_arrival_rate=lambda_p, energy_capacity=3, energy_arrival_rate=1.0,
                                   eq7_literal=eq7_literal)
    values = [enumerate_deterministic(params.replace(energy_per_packet_j=e)).best_mu_s
              for e in (0.5e-3, 1e-3, 2e-3)]
    assert all(later >= earlier - 1e-12 for earlier, later in zip(values, values[1:]))
    if not eq7_literal:
        assert values[0] < values[1] < values[2]


def test_parse_optimizer_choice():
    assert parse_optimizer_choice('enum') == ('enum', None)
    assert parse_optimizer_choice(' VI ') == ('vi', None)
    assert parse_optimizer_choice('fixed:3') == ('fixed', 3)
    for bad in ('fixed:x', 'greedy', ''):
        with pytest.raises(ValidationError):
            parse_optimizer_choice(bad)


def test_optimize_dispatch(common_params):
    fixed = optimize(common_params, 'fixed:1')
    assert fixed.method == 'fixed'
    assert fixed.extra == {'G': 1}
    assert fixed.to_dict()['G'] == 1
    vi = optimize(common_params, 'vi', SolverSettings(tolerance=1e-11))
    assert vi.method == 'value-iteration'
    assert vi.best_mu_s >= fixed.best_mu_s - 1e-12


def test_project_simplex(rng):
    for _ in range(50):
        v = rng.normal(size=int(rng.integers(1, 7)))
        y = project_simplex(v)
        assert y.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(y >= 0.0)
    point = np.array([0.2, 0.3, 0.5])
    np.testing.assert_allclose(project_simplex(point), point, atol=1e-15)
    np.testing.assert_allclose(project_simplex([5.0, 0.0]), [1.0, 0.0])


def test_small_buffer_ascent_matches_enumeration(common_params):
    params = common_params.replace(energy_capacity=2)
    enum = enumerate_deterministic(params)
    ascent = randomized_ascent(params, starts=8, seed=0)
    assert ascent.best_mu_s == pytest.approx(enum.best_mu_s, abs=1e-6)


def test_fixed_strategy_small_buffer(common_params):
    params = common_params.replace(energy_capacity=3)
    assert fixed_strategy_policy(params, 1).actions() == (0, 1, 1, 1)
    assert fixed_strategy_policy(params, 3).actions() == (0, 0, 0, 3)
