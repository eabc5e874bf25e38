import math

import numpy as np
import pytest

from dnlsmi.model import ModelParams, LatticeState, conserved_quantities
from dnlsmi.bogoliubov import CarrierSpec
from dnlsmi.integrator import (IntegratorConfig, step_rk4, evolve, drift_report, STATUS_COMPLETED,
                               STATUS_DIVERGED, STATUS_NORM_DRIFT, STATUS_ENERGY_DRIFT)
from dnlsmi.experiments import ModulatedStateSpec, build_modulated_state
from dnlsmi.utils import DivergedStateError, DriftToleranceError, read_jsonl

# Carrier at k = pi with mu = 12 makes the time-stepping error visible
FAST = ModelParams(K1=1.0, K2=1.0, lambda11=5.0, lambda22=5.0, lambda12=5.0)


def _exact(carrier, sites, t):
  j = np.arange(sites)
  return np.vstack([carrier.psi0_1 * np.exp(1j * (carrier.k * j - carrier.mu1 * t)),
                    carrier.psi0_2 * np.exp(1j * (carrier.k * j - carrier.mu2 * t))])


class TestConfig:
  @pytest.mark.parametrize('values', [{'dt': 0.0}, {'t_end': -1.0}, {'observe_every': 0},
                                      {'snapshot_every': -1}, {'norm_drift_tol': 0.0}])
  def test_rejects_invalid(self, values):
    with pytest.raises(ValueError):
      IntegratorConfig(**values)

  def test_dict_round_trip(self):
    config = IntegratorConfig(dt=0.01, t_end=3.0)
    assert IntegratorConfig.from_dict(config.to_dict()) == config
    with pytest.raises(ValueError):
      IntegratorConfig.from_dict({'steps': 10})


class TestStep:
  def test_local_error_is_fifth_order(self):
    carrier = CarrierSpec.create(FAST, math.pi, 1.0, 1.0)
    state = LatticeState.plane_wave(8, math.pi, 1.0, 1.0)
    errors = []
    for h in (0.01, 0.005):
      stepped = step_rk4(state, FAST, h)
      errors.append(np.max(np.abs(stepped.amps - _exact(carrier, 8, h))))
    assert 25 < errors[0] / errors[1] < 40

  def test_backward_step_inverts(self, miscible):
    state = build_modulated_state(ModulatedStateSpec.normalized(3, 1, M=8))
    there = step_rk4(state, miscible, 1e-3)
    back = step_rk4(there, miscible, -1e-3)
    assert back.t == pytest.approx(0.0)
    np.testing.assert_allclose(back.amps, state.amps, atol=1e-12)

  def test_rejects_non_finite(self, miscible):
    amps = np.ones((2, 8), dtype=complex)
    amps[0, 0] = np.inf
    with pytest.raises(DivergedStateError):
      step_rk4(LatticeState(0.0, amps), miscible, 1e-3)


class TestEvolve:
  def test_global_error_is_fourth_order(self):
    carrier = CarrierSpec.create(FAST, math.pi, 1.0, 1.0)
    steps = np.array([2e-3, 1e-3, 5e-4])
    errors = []
    for dt in steps:
      config = IntegratorConfig(dt=dt, t_end=1.0, observe_every=100, snapshot_every=0,
                                norm_drift_tol=1.0, energy_drift_tol=1.0)
      trajectory = evolve(LatticeState.plane_wave(8, math.pi, 1.0, 1.0), FAST, config)
      final = trajectory.final_state
      errors.append(np.max(np.abs(final.amps - _exact(carrier, 8, final.t))))
    order, _ = np.polyfit(np.log(steps), np.log(errors), 1)
    assert order == pytest.approx(4.0, abs=0.2)

  def test_records_and_conservation(self, miscible):
    state = build_modulated_state(ModulatedStateSpec.normalized(150, 50))
    config = IntegratorConfig(dt=1e-3, t_end=1.0, observe_every=100, snapshot_every=250)
    trajectory = evolve(state, miscible, config)
    assert trajectory.status == STATUS_COMPLETED
    np.testing.assert_allclose(trajectory.times(), np.linspace(0.0, 1.0, 11), atol=1e-12)
    assert trajectory.snapshot_times == pytest.approx([0.0, 0.25, 0.5, 0.75, 1.0])
    drift = drift_report(trajectory)
    assert drift.norm <= 1e-8
    assert drift.energy <= 1e-8
    assert trajectory.final_state.diverged is False
    final = conserved_quantities(trajectory.final_state, miscible)
    assert final.norm1 == pytest.approx(trajectory.records[0]['norm1'], rel=1e-8)

  def test_observers_see_copies(self, miscible):
    seen = []
    def observer(view):
      seen.append(view.t)
      view.amps[:] = 0
      return {'marker': 1}
    state = build_modulated_state(ModulatedStateSpec.normalized(3, 1, M=8))
    trajectory = evolve(state, miscible, IntegratorConfig(dt=1e-3, t_end=0.01, observe_every=5), observers=[observer])
    assert len(seen) == 3
    assert all(r['marker'] == 1 for r in trajectory.records)
    assert trajectory.final_state.density().sum() > 0

  def test_drift_guard_trips_at_large_step(self, miscible):
    state = build_modulated_state(ModulatedStateSpec.normalized(150, 50))
    messages = []
    trajectory = evolve(state, miscible, IntegratorConfig(dt=0.5, t_end=20.0, observe_every=1),
                        logger=messages.append)
    assert trajectory.status in (STATUS_NORM_DRIFT, STATUS_ENERGY_DRIFT)
    assert 'aborted' in trajectory.records[-1]
    assert trajectory.t_last_finite < 20.0
    assert any('aborted' in m for m in messages)
    with pytest.raises(DriftToleranceError):
      trajectory.raise_for_status()

  def test_divergence_truncates(self, miscible):
    state = LatticeState.plane_wave(8, 0.0, 1e60, 1e60)
    with np.errstate(all='ignore'):
      trajectory = evolve(state, miscible, IntegratorConfig(dt=1e-3, t_end=1.0))
    assert trajectory.status == STATUS_DIVERGED
    assert trajectory.t_last_finite == 0.0
    assert len(trajectory.records) == 1
    assert trajectory.final_state.is_finite()
    assert trajectory.final_state.diverged is True
    with pytest.raises(DivergedStateError) as info:
      trajectory.raise_for_status()
    assert info.value.t_last_finite == 0.0

  def test_carrier_density_is_stationary(self, miscible, psi0_sq):
    psi0 = math.sqrt(psi0_sq)
    state = LatticeState.plane_wave(16, 3 * math.pi / 4, psi0, psi0)
    trajectory = evolve(state, miscible, IntegratorConfig(dt=1e-3, t_end=10.0, observe_every=1000, snapshot_every=0))
    assert trajectory.status == STATUS_COMPLETED
    assert np.max(np.abs(trajectory.final_state.density() - psi0_sq)) <= 1e-8

  @pytest.mark.parametrize('theta', [0.7, math.pi / 2, -2.4])
  def test_phase_equivariance(self, miscible, theta):
    state = build_modulated_state(ModulatedStateSpec.normalized(3, 1, M=8))
    config = IntegratorConfig(dt=1e-3, t_end=0.5, observe_every=100, snapshot_every=0)
    plain = evolve(state, miscible, config).final_state
    rotated = evolve(state.with_phase(theta), miscible, config).final_state
    np.testing.assert_allclose(rotated.amps, np.exp(1j * theta) * plain.amps, atol=1e-12)

  def test_forward_then_backward_within_drift(self):
    params = ModelParams(K1=1.0, K2=1.0, lambda11=0.5, lambda22=0.5, lambda12=0.5)
    dt, steps = 0.05, 20
    state = LatticeState.plane_wave(8, math.pi, 1.0, 1.0)
    config = IntegratorConfig(dt=dt, t_end=dt * steps, observe_every=steps, snapshot_every=0,
                              norm_drift_tol=1.0, energy_drift_tol=1.0)
    trajectory = evolve(state, params, config)
    forward = drift_report(trajectory).norm
    assert forward > 1e-8
    back = trajectory.final_state
    for _ in range(steps):
      back = step_rk4(back, params, -dt)
    assert back.t == pytest.approx(0.0, abs=1e-12)
    error = np.max(np.abs(back.amps - state.amps)) / np.max(np.abs(state.amps))
    assert error <= 10 * forward

  def test_exports(self, miscible, tmp_path):
    state = build_modulated_state(ModulatedStateSpec.normalized(3, 1, M=8))
    trajectory = evolve(state, miscible, IntegratorConfig(dt=1e-3, t_end=0.1, observe_every=10, snapshot_every=50))
    trajectory.write_jsonl(tmp_path / 'trajectory.jsonl')
    records = read_jsonl(tmp_path / 'trajectory.jsonl')
    assert len(records) == 11
    assert set(records[0]) == {'t', 'norm1', 'norm2', 'H', 'max_density1', 'max_density2'}
    trajectory.write_density_csv(tmp_path / 'density_s1.csv', 1)
    rows = np.loadtxt(tmp_path / 'density_s1.csv', delimiter=',', ndmin=2)
    assert rows.shape == (3, 9)
    np.testing.assert_allclose(rows[:, 0], [0.0, 0.05, 0.1], atol=1e-9)
