"""Fixed-step classical Runge-Kutta integration of the coupled DNLS.

evolve() never raises for a failed run. It stops at the first non-finite
state or at the first observation whose norm or energy drift exceeds the
configured tolerance, records why in Trajectory.status, and keeps every
sample taken before that point. Trajectory.raise_for_status() turns the
flag into an exception for callers that want one.
"""

from dataclasses import dataclass, field, asdict

import numpy as np

from .model import LatticeState, _rhs, _conserved, check_finite
from .utils import DivergedStateError, DriftToleranceError, write_jsonl, write_matrix_csv

STATUS_COMPLETED = 'completed'
STATUS_DIVERGED = 'diverged'
STATUS_NORM_DRIFT = 'norm_drift'
STATUS_ENERGY_DRIFT = 'energy_drift'

#region Configuration
@dataclass(frozen=True)
class IntegratorConfig:
  dt: float = 1e-3
  t_end: float = 60.0
  observe_every: int = 10
  snapshot_every: int = 500         # steps between density snapshots; 0 disables them
  norm_drift_tol: float = 1e-6
  energy_drift_tol: float = 1e-6

  def __post_init__(self):
    if not self.dt > 0:
      raise ValueError(f'Time step must be positive, got {self.dt}')
    if not self.t_end > 0:
      raise ValueError(f'Final time must be positive, got {self.t_end}')
    if int(self.observe_every) != self.observe_every or self.observe_every < 1:
      raise ValueError(f'observe_every must be an integer >= 1, got {self.observe_every}')
    if int(self.snapshot_every) != self.snapshot_every or self.snapshot_every < 0:
      raise ValueError(f'snapshot_every must be a nonnegative integer, got {self.snapshot_every}')
    if not (self.norm_drift_tol > 0 and self.energy_drift_tol > 0):
      raise ValueError('Drift tolerances must be positive')

  def to_dict(self):
    return asdict(self)

  @classmethod
  def from_dict(cls, d):
    unknown = set(d) - set(cls.__dataclass_fields__)
    if unknown:
      raise ValueError(f'Unknown integrator settings: {sorted(unknown)}')
    return cls(**d)
#endregion

#region Stepping
def _rk4(psi, dt, hop, coupling):
  k1 = _rhs(psi, hop, coupling)
  k2 = _rhs(psi + (0.5 * dt) * k1, hop, coupling)
  k3 = _rhs(psi + (0.5 * dt) * k2, hop, coupling)
  k4 = _rhs(psi + dt * k3, hop, coupling)
  return psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

def step_rk4(state, params, dt):
  """One classical RK4 step of size dt (negative dt integrates backwards)."""
  check_finite(state)
  psi = _rk4(state.amps, dt, params.hopping, params.coupling)
  if not np.isfinite(psi).all():
    raise DivergedStateError(f'Non-finite amplitudes after step from t={state.t:g}', t_last_finite=state.t)
  return LatticeState(state.t + dt, psi)
#endregion

#region Trajectories
@dataclass(eq=False)
class Trajectory:
  """Sampled observables of one run plus optional density snapshots."""
  records: list = field(default_factory=list)
  snapshot_times: list = field(default_factory=list)
  snapshots: list = field(default_factory=list)
  status: str = STATUS_COMPLETED
  message: str = ''
  final_state: LatticeState = None
  t_last_finite: float = None

  @property
  def ok(self):
    return self.status == STATUS_COMPLETED

  def times(self):
    return np.array([r['t'] for r in self.records])

  def column(self, name):
    return np.array([r[name] for r in self.records])

  def raise_for_status(self):
    if self.status == STATUS_DIVERGED:
      raise DivergedStateError(self.message, t_last_finite=self.t_last_finite)
    if self.status in (STATUS_NORM_DRIFT, STATUS_ENERGY_DRIFT):
      last = self.records[-1]
      raise DriftToleranceError(last['aborted']['quantity'], last['aborted']['drift'],
                                last['aborted']['tolerance'], t=last['t'])

  def write_jsonl(self, path):
    write_jsonl(path, self.records)

  def density_matrix(self, species):
    """Snapshots of |psi_j|^2 for one species as a (samples x sites) array."""
    if not self.snapshots:
      return np.zeros((0, 0))
    return np.array([snap[species - 1] for snap in self.snapshots])

  def write_density_csv(self, path, species):
    """One row per snapshot: the time, then |psi_j|^2 on every site."""
    matrix = self.density_matrix(species)
    if len(matrix):
      matrix = np.column_stack([self.snapshot_times, matrix])
    write_matrix_csv(path, matrix)


def _relative(value, reference):
  if reference == 0:
    return abs(value)
  return abs(value - reference) / abs(reference)

def _observe(t, psi, hop, coupling, observers):
  n1, n2, h = _conserved(psi, hop, coupling)
  dens = psi.real**2 + psi.imag**2
  record = {'t': t, 'norm1': n1, 'norm2': n2, 'H': h,
            'max_density1': float(dens[0].max()), 'max_density2': float(dens[1].max())}
  if observers:
    view = LatticeState(t, psi.copy())
    for observer in observers:
      record.update(observer(view))
  return record

def evolve(state, params, config, observers=(), logger=lambda s: None):
  """Integrates from state.t to config.t_end with fixed RK4 steps.

  Every observe_every steps (and at the final step) a record with the
  norms, the Hamiltonian, the peak densities and the output of every
  observer callable is appended. Observers receive a copy of the state and
  return a dict merged into the record.
  """
  check_finite(state)
  hop, coupling = params.hopping, params.coupling
  dt = config.dt
  t0 = state.t
  n_steps = max(0, int(round((config.t_end - t0) / dt)))
  psi = state.amps.copy()
  trajectory = Trajectory()

  first = _observe(t0, psi, hop, coupling, observers)
  trajectory.records.append(first)
  reference = (first['norm1'], first['norm2'], first['H'])
  if config.snapshot_every:
    trajectory.snapshot_times.append(t0)
    trajectory.snapshots.append(psi.real**2 + psi.imag**2)

  logger(f'Evolving {psi.shape[1]} sites for {n_steps} steps of dt={dt:g}')
  last_t = t0
  for n in range(1, n_steps + 1):
    new = _rk4(psi, dt, hop, coupling)
    t = t0 + n * dt
    if not np.isfinite(new).all():
      trajectory.status = STATUS_DIVERGED
      trajectory.t_last_finite = last_t
      trajectory.message = f'State diverged between t={last_t:g} and t={t:g}'
      logger(trajectory.message)
      break
    psi = new
    last_t = t

    if config.snapshot_every and n % config.snapshot_every == 0:
      trajectory.snapshot_times.append(t)
      trajectory.snapshots.append(psi.real**2 + psi.imag**2)

    if n % config.observe_every == 0 or n == n_steps:
      record = _observe(t, psi, hop, coupling, observers)
      norm_drift = max(_relative(record['norm1'], reference[0]), _relative(record['norm2'], reference[1]))
      energy_drift = _relative(record['H'], reference[2])
      if norm_drift > config.norm_drift_tol:
        record['aborted'] = {'quantity': 'norm', 'drift': norm_drift, 'tolerance': config.norm_drift_tol}
        trajectory.status = STATUS_NORM_DRIFT
      elif energy_drift > config.energy_drift_tol:
        record['aborted'] = {'quantity': 'energy', 'drift': energy_drift, 'tolerance': config.energy_drift_tol}
        trajectory.status = STATUS_ENERGY_DRIFT
      trajectory.records.append(record)
      if not trajectory.ok:
        trajectory.message = f'Run aborted at t={t:g}: {record["aborted"]["quantity"]} drift {record["aborted"]["drift"]:.3e}'
        logger(trajectory.message)
        break

  trajectory.final_state = LatticeState(last_t, psi, diverged=trajectory.status == STATUS_DIVERGED)
  trajectory.t_last_finite = last_t
  return trajectory


@dataclass(frozen=True)
class DriftReport:
  norm1: float
  norm2: float
  energy: float

  @property
  def norm(self):
    return max(self.norm1, self.norm2)

  def to_dict(self):
    return {'norm1': self.norm1, 'norm2': self.norm2, 'energy': self.energy}


def drift_report(trajectory):
  """Largest relative drift of each conserved quantity against the first record."""
  if not trajectory.records:
    raise ValueError('Cannot report drift of an empty trajectory')
  first = trajectory.records[0]
  drifts = {'norm1': 0.0, 'norm2': 0.0, 'H': 0.0}
  for record in trajectory.records[1:]:
    for name in drifts:
      drifts[name] = max(drifts[name], _relative(record[name], first[name]))
  return DriftReport(norm1=drifts['norm1'], norm2=drifts['norm2'], energy=drifts['H'])
#endregion
