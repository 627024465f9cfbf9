import logging
from datetime import date

import numpy as np
import pytest

from epimix.core import ShiftedSirParams, SirParams, SirState, new_weekly_series
from epimix.errors import ParameterError, TooShort
from epimix.sir import (
    fit_classical,
    forecast_from,
    one_step_predictions,
    shifted_infected,
    simulate,
    simulate_shifted,
    simulate_shifted_states,
    step,
)

START = date(2020, 7, 30)


def test_step_conserves_and_stays_non_negative(rng):
    for _ in range(10_000):
        state = SirState(*rng.uniform(0, 1e6, 3))
        params = SirParams(beta=rng.uniform(0, 5), gamma=rng.uniform(0, 5), n=rng.uniform(1, 2e6))
        nxt = step(state, params)
        assert abs(nxt.total - state.total) <= 1e-9 * state.total
        assert nxt.s >= 0 and nxt.i >= 0 and nxt.r >= 0
        assert nxt.r >= state.r
        assert nxt.s <= state.s


def test_simulate_trajectory():
    params = SirParams(beta=0.6, gamma=0.4, n=1e6)
    traj = simulate(SirState(1e6 - 100, 100, 0), params, 52)
    assert len(traj) == 53
    assert np.all(np.diff(traj.r) >= 0)
    assert np.all(np.diff(traj.s) <= 0)
    assert np.allclose(traj.s + traj.i + traj.r, 1e6, rtol=1e-12)
    assert len(simulate(SirState(1, 1, 0), params, 0)) == 1
    with pytest.raises(ParameterError):
        simulate(SirState(1, 1, 0), params, -1)


def test_shifted_zero_before_shift_and_injection_identity(rng):
    for _ in range(200):
        k = int(rng.integers(0, 40))
        params = ShiftedSirParams(s0=rng.uniform(1e3, 1e6), beta=rng.uniform(0, 1), gamma=rng.uniform(0, 1),
                                  c=rng.uniform(0, 1e3), k=k)
        infected = simulate_shifted(params, 52)
        assert infected.shape == (53,)
        assert np.all(infected[:k] == 0.0)
        assert infected[k] == params.c
        assert np.all(infected >= 0)


def test_shift_beyond_horizon_rejected():
    with pytest.raises(ParameterError):
        simulate_shifted(ShiftedSirParams(s0=1e4, beta=0.5, gamma=0.5, c=10, k=20), 10)


def test_vectorized_rows_match_scalar_runs():
    s0 = np.array([1e4, 5e4])
    rows = shifted_infected(s0, [0.7, 0.9], [0.5, 0.5], [100, 100], [0, 18], 52)
    for j, k in enumerate((0, 18)):
        single = simulate_shifted(ShiftedSirParams(s0=s0[j], beta=[0.7, 0.9][j], gamma=0.5, c=100, k=k), 52)
        assert np.array_equal(rows[j], single)


def test_fit_recovers_rates():
    params = SirParams(beta=0.6, gamma=0.4, n=1e6)
    infected = simulate(SirState(1e6 - 100, 100, 0), params, 52).i
    fit = fit_classical(new_weekly_series("Sim", START, infected))
    assert fit.params.beta == pytest.approx(0.6, abs=1e-3)
    assert fit.params.gamma == pytest.approx(0.4, abs=1e-3)
    assert not fit.degenerate
    assert fit.initial_state.i == 100


def test_one_step_predictions_on_exact_data():
    params = SirParams(beta=0.6, gamma=0.4, n=1e6)
    infected = simulate(SirState(1e6 - 100, 100, 0), params, 30).i
    assert np.allclose(one_step_predictions(infected, params), infected[1:], rtol=1e-9)


def test_forecast_continues_recursion():
    params = SirParams(beta=0.6, gamma=0.4, n=1e6)
    infected = simulate(SirState(1e6 - 100, 100, 0), params, 30).i
    ahead = forecast_from(infected[:21], params, 4)
    assert np.allclose(ahead, infected[21:25], rtol=1e-9)


def test_all_zero_series_is_degenerate(caplog):
    with caplog.at_level(logging.WARNING, logger="epimix.sir"):
        fit = fit_classical(new_weekly_series("Zero", START, np.zeros(10)))
    assert fit.degenerate
    assert fit.params.beta == 0.0
    assert "all-zero" in caplog.text


def test_fit_needs_three_weeks():
    with pytest.raises(TooShort):
        fit_classical(new_weekly_series("Short", START, [1.0, 2.0]))


def test_step_by_hand():
    nxt = step(SirState(990.0, 10.0, 0.0), SirParams(beta=0.5, gamma=0.5, n=1000.0))
    assert nxt.s == pytest.approx(985.05, abs=1e-9)
    assert nxt.i == pytest.approx(9.95, abs=1e-9)
    assert nxt.r == pytest.approx(5.0, abs=1e-9)


def test_shifted_peak_matches_plain_recursion():
    params = ShiftedSirParams(s0=1e5, beta=0.6, gamma=0.5, c=100.0, k=0)
    infected = simulate_shifted(params, 52)
    plain = simulate(SirState(1e5 - 100.0, 100.0, 0.0), SirParams(beta=0.6, gamma=0.5, n=1e5 + 100.0), 52).i
    assert int(np.argmax(infected)) == int(np.argmax(plain))
    assert infected.max() == pytest.approx(plain.max(), rel=1e-12)
    assert np.allclose(infected, plain, rtol=1e-12, atol=0)


def test_shifted_compartments_conserve_and_r_grows(rng):
    for _ in range(200):
        params = ShiftedSirParams(s0=rng.uniform(1e3, 1e6), beta=rng.uniform(0, 1), gamma=rng.uniform(0, 1),
                                  c=rng.uniform(0, 1e3), k=int(rng.integers(0, 40)))
        traj = simulate_shifted_states(params, 52)
        assert np.array_equal(traj.i, simulate_shifted(params, 52))
        assert np.all(np.diff(traj.r) >= 0)
        assert np.all(np.diff(traj.s) <= 0)
        assert np.allclose(traj.s + traj.i + traj.r, params.s0, rtol=1e-9, atol=0)


def test_shifted_curves_are_unimodal(rng):
    for _ in range(500):
        params = ShiftedSirParams(s0=10.0 ** rng.uniform(0, 8), beta=rng.uniform(0, 1),
                                  gamma=rng.uniform(1e-3, 1), c=rng.uniform(1e-3, 1e3),
                                  k=int(rng.integers(0, 51)))
        infected = simulate_shifted(params, 52)
        slack = 1e-12 * infected.max()
        steps = np.diff(infected)
        falling = np.flatnonzero(steps < -slack)
        if falling.size:
            assert not np.any(steps[falling[0]:] > slack)


def test_injection_capped_by_susceptibles():
    infected = simulate_shifted(ShiftedSirParams(s0=10.0, beta=0.5, gamma=0.5, c=100.0, k=3), 10)
    assert infected[3] == 10.0
