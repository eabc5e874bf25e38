"""Self-checks of a build against independent references.

Four suites, each returning a dict with a boolean "passed":

  oracle           closed-form branches vs eigenvalues of the 4 x 4
                   linearization over random parameter sets
  long_wavelength  closed form vs its small k, q expansion
  convergence      RK4 global error on the exact plane-wave solution
  conservation     norm and energy drift at the production step, and the
                   drift guard tripping at an oversized step

The oracle suite can be run against a deliberately broken closed form
(mutate=True, the sign of the Lambda22 psi2^2 term in Delta flipped) to
show that it detects errors.
"""

import math
import itertools

import numpy as np

from .model import ModelParams, LatticeState
from .bogoliubov import (CarrierSpec, spectrum, spectrum_long_wavelength, bogoliubov_matrix,
                         closed_form_from_trig, _deltas)
from .integrator import IntegratorConfig, evolve, drift_report
from .experiments import ModulatedStateSpec, build_modulated_state
from .presets import MISCIBLE, IMMISCIBLE
from .utils import EigenSolverError

ORACLE_TOLERANCE = 1e-9
LONG_WAVELENGTH_TOLERANCE = 1e-4
ORDER_TARGET = 4.0
ORDER_TOLERANCE = 0.2
DRIFT_TOLERANCE = 1e-8

SUITES = ('oracle', 'long_wavelength', 'convergence', 'conservation')

#region Oracle
def _random_case(rng):
  K = 2.0 * (1.0 - rng.random())
  l11, l22, l12 = rng.uniform(0.0, 200.0, 3)
  p1 = math.sqrt(0.01 * (1.0 - rng.random()))
  p2 = math.sqrt(0.01 * (1.0 - rng.random()))
  k, q = rng.uniform(0.0, 2 * math.pi, 2)
  params = ModelParams(K1=K, K2=K, lambda11=l11, lambda22=l22, lambda12=l12)
  return params, CarrierSpec.create(params, k, p1, p2), float(q)

def _closed_branches(params, carrier, q, mutate):
  if not mutate:
    return np.array(spectrum(params, carrier, q).omega)
  d1, d2 = _deltas(params.lambda11, -params.lambda22, params.lambda12, carrier.psi0_1, carrier.psi0_2)
  arrays = closed_form_from_trig(params.K1, math.cos(carrier.k), math.sin(carrier.k), math.sin(q),
                                 math.sin(q / 2.0)**2, d1, d2)
  return np.array([complex(arrays[name]) for name in
                   ('omega_plus_1', 'omega_minus_1', 'omega_plus_2', 'omega_minus_2')])

def _matched_error(closed, eigenvalues):
  """Largest pairwise gap under the best one-to-one matching of the two sets."""
  return min(float(np.max(np.abs(closed - eigenvalues[list(perm)])))
             for perm in itertools.permutations(range(len(eigenvalues))))

def oracle_suite(samples=1000, seed=0, mutate=False, logger=lambda s: None):
  if samples < 1:
    raise ValueError(f'Sample count must be positive, got {samples}')
  rng = np.random.default_rng(seed)
  failures = []
  worst = 0.0
  for i in range(samples):
    params, carrier, q = _random_case(rng)
    try:
      modes = bogoliubov_matrix(params, carrier, q)
    except EigenSolverError as e:
      failures.append({'sample': i, 'reason': str(e)})
      continue
    scale = max(1.0, float(np.linalg.norm(modes.matrix, 2)))
    error = _matched_error(_closed_branches(params, carrier, q, mutate), modes.eigenvalues) / scale
    worst = max(worst, error)
    if not error <= ORACLE_TOLERANCE:
      failures.append({'sample': i, 'error': error, 'k': carrier.k, 'q': q})
  logger(f'oracle: {samples - len(failures)}/{samples} samples within {ORACLE_TOLERANCE:g}')
  return {'passed': not failures, 'samples': samples, 'seed': seed, 'mutated': mutate,
          'tolerance': ORACLE_TOLERANCE, 'max_error': worst,
          'failures': len(failures), 'first_failures': failures[:5]}
#endregion

#region Long wavelength
def long_wavelength_suite(k=1e-3, q=1e-3, psi0_sq=1.0 / 801, logger=lambda s: None):
  cases = []
  for name, params in (('miscible', MISCIBLE), ('immiscible', IMMISCIBLE)):
    carrier = CarrierSpec.equal(params, k, psi0_sq)
    full = np.array(spectrum(params, carrier, q).omega)
    approx = np.array(spectrum_long_wavelength(params, carrier, q).omega)
    error = float(np.max(np.abs(full - approx)) / np.max(np.abs(full)))
    cases.append({'set': name, 'error': error, 'passed': error <= LONG_WAVELENGTH_TOLERANCE})
    logger(f'long_wavelength: {name} relative error {error:.3e}')
  return {'passed': all(c['passed'] for c in cases), 'tolerance': LONG_WAVELENGTH_TOLERANCE,
          'k': k, 'q': q, 'cases': cases}
#endregion

#region Integrator
def _plane_wave_error(params, carrier, sites, dt, t_end):
  state = LatticeState.plane_wave(sites, carrier.k, carrier.psi0_1, carrier.psi0_2)
  config = IntegratorConfig(dt=dt, t_end=t_end, observe_every=max(1, int(round(t_end / dt))),
                            snapshot_every=0, norm_drift_tol=1.0, energy_drift_tol=1.0)
  trajectory = evolve(state, params, config)
  trajectory.raise_for_status()
  final = trajectory.final_state
  exact = np.vstack([carrier.psi0_1 * np.exp(1j * (carrier.k * np.arange(sites) - carrier.mu1 * final.t)),
                     carrier.psi0_2 * np.exp(1j * (carrier.k * np.arange(sites) - carrier.mu2 * final.t))])
  return float(np.max(np.abs(final.amps - exact)))

def convergence_suite(steps=(2e-3, 1e-3, 5e-4), t_end=1.0, logger=lambda s: None):
  """Fits the global error exponent on a carrier with mu = 12."""
  params = ModelParams(K1=1.0, K2=1.0, lambda11=5.0, lambda22=5.0, lambda12=5.0)
  carrier = CarrierSpec.create(params, math.pi, 1.0, 1.0)
  errors = [_plane_wave_error(params, carrier, 8, dt, t_end) for dt in steps]
  order, _ = np.polyfit(np.log(steps), np.log(errors), 1)
  logger(f'convergence: fitted order {order:.3f}')
  return {'passed': abs(order - ORDER_TARGET) <= ORDER_TOLERANCE, 'order': float(order),
          'target': ORDER_TARGET, 'tolerance': ORDER_TOLERANCE,
          'dt': list(steps), 'errors': errors}

def conservation_suite(t_end=2.0, logger=lambda s: None):
  state = build_modulated_state(ModulatedStateSpec.normalized(150, 50))
  fine = evolve(state, MISCIBLE, IntegratorConfig(dt=1e-3, t_end=t_end, observe_every=100, snapshot_every=0))
  drift = drift_report(fine)
  coarse = evolve(state, MISCIBLE, IntegratorConfig(dt=0.5, t_end=20.0, observe_every=1, snapshot_every=0))
  logger(f'conservation: norm drift {drift.norm:.3e}, energy drift {drift.energy:.3e}, dt=0.5 run {coarse.status}')
  within = fine.ok and drift.norm <= DRIFT_TOLERANCE and drift.energy <= DRIFT_TOLERANCE
  return {'passed': bool(within and not coarse.ok), 'tolerance': DRIFT_TOLERANCE,
          'drift': drift.to_dict(), 'status': fine.status, 'guard_status': coarse.status}
#endregion

def run_validation(samples=1000, seed=0, mutate=False, suites=SUITES, logger=lambda s: None):
  """Runs the selected suites and reports pass/fail per suite."""
  unknown = set(suites) - set(SUITES)
  if unknown:
    raise ValueError(f'Unknown validation suites: {sorted(unknown)}')
  runners = {'oracle': lambda: oracle_suite(samples, seed, mutate, logger=logger),
             'long_wavelength': lambda: long_wavelength_suite(logger=logger),
             'convergence': lambda: convergence_suite(logger=logger),
             'conservation': lambda: conservation_suite(logger=logger)}
  report = {name: runners[name]() for name in SUITES if name in suites}
  return {'passed': all(r['passed'] for r in report.values()), 'suites': report}
