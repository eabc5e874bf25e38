"""Modulated initial states and the analysis of their evolution.

The initial condition is a plane wave with a cosine modulation,

  psi_{j,1}(0) = psi_{j,2}(0) = [A + alpha cos(q j)] exp(i k j),

whose perturbation lives in the two sidebands k +/- q. Growth is measured
on those sideband amplitudes, either directly or after projecting them
onto the fastest-growing Bogoliubov mode.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .model import LatticeState, normalized_amplitude
from .bogoliubov import growth_time
from .utils import complex_pair, pair_complex

DEFAULT_ALPHA_RATIO = 0.05
MIN_FIT_SAMPLES = 20

FLAG_OK = 'ok'
FLAG_NO_GROWTH = 'no_growth'
FLAG_UNFITTABLE = 'unfittable'

#region Initial states
@dataclass(frozen=True)
class ModulatedStateSpec:
  """Background amplitude A, modulation alpha and wave indices on M sites."""
  A: float
  alpha: float
  l: int
  s: int
  M: int = 400

  def __post_init__(self):
    for name in ('l', 's'):
      index = getattr(self, name)
      if int(index) != index or not 0 <= index < self.M:
        raise ValueError(f'Wave index {name} must be an integer in [0, {self.M}), got {index}')
    if self.alpha < 0:
      raise ValueError(f'Modulation amplitude must be nonnegative, got {self.alpha}')

  @classmethod
  def normalized(cls, l, s, M=400, alpha_ratio=DEFAULT_ALPHA_RATIO, A=None):
    """Normalized background A = 1/sqrt(2M+1) with alpha = alpha_ratio * A."""
    A = normalized_amplitude(M) if A is None else A
    return cls(A=A, alpha=alpha_ratio * A, l=l, s=s, M=M)

  @property
  def k(self):
    return 2 * math.pi * self.l / self.M

  @property
  def q(self):
    return 2 * math.pi * self.s / self.M


def build_modulated_state(spec):
  j = np.arange(spec.M)
  row = (spec.A + spec.alpha * np.cos(2 * math.pi * ((spec.s * j) % spec.M) / spec.M)) \
        * np.exp(2j * math.pi * ((spec.l * j) % spec.M) / spec.M)
  return LatticeState(0.0, np.vstack([row, row]))
#endregion

#region Sidebands
@dataclass(frozen=True, eq=False)
class SidebandAmplitudes:
  """Per-species Fourier amplitudes at k (carrier), k+q (plus) and k-q (minus)."""
  carrier: np.ndarray
  plus: np.ndarray
  minus: np.ndarray

  def power(self):
    """|a+|^2 + |a-|^2 per species."""
    return np.abs(self.plus)**2 + np.abs(self.minus)**2

  def peak(self):
    """max(|a+|, |a-|) per species."""
    return np.maximum(np.abs(self.plus), np.abs(self.minus))

  def to_dict(self, l, s):
    return {'l': l, 's': s,
            'carrier': [complex_pair(z) for z in self.carrier],
            'plus': [complex_pair(z) for z in self.plus],
            'minus': [complex_pair(z) for z in self.minus]}

  @classmethod
  def from_dict(cls, d):
    return cls(carrier=np.array([pair_complex(p) for p in d['carrier']]),
               plus=np.array([pair_complex(p) for p in d['plus']]),
               minus=np.array([pair_complex(p) for p in d['minus']]))


def _fourier(psi, index):
  M = psi.shape[1]
  j = np.arange(M)
  return psi @ np.exp(-2j * math.pi * ((index * j) % M) / M) / M

def sideband_amplitudes(state, l, s):
  """a(+/-)_s = (1/M) sum_j psi_{j,s} exp(-i (k +/- q) j), plus the carrier projection."""
  M = state.sites
  for name, index in (('l', l), ('s', s)):
    if int(index) != index or not 0 <= index < M:
      raise ValueError(f'Wave index {name} must be an integer in [0, {M}), got {index}')
  psi = state.amps
  return SidebandAmplitudes(carrier=_fourier(psi, l % M),
                            plus=_fourier(psi, (l + s) % M),
                            minus=_fourier(psi, (l - s) % M))


class SidebandObserver:
  """Integrator observer recording carrier and sideband amplitudes."""
  def __init__(self, l, s):
    self.l = l
    self.s = s

  def __call__(self, state):
    return {'sideband': sideband_amplitudes(state, self.l, self.s).to_dict(self.l, self.s)}


def sideband_series(trajectory):
  """Times and SidebandAmplitudes of every record carrying sideband data."""
  times, series = [], []
  for record in trajectory.records:
    if 'sideband' in record:
      times.append(record['t'])
      series.append(SidebandAmplitudes.from_dict(record['sideband']))
  return np.array(times), series
#endregion

#region Growth fits
@dataclass(frozen=True)
class FitWindow:
  """Bounds of the log-linear fit window.

  A sample is fitted while the largest raw sideband is still at most
  upper_fraction times the background amplitude and the fitted amplitude
  is at least lower_factor times its initial value. lower_factor None
  picks 3 for the raw sideband fit and 1 for the mode projection.
  """
  lower_factor: float = None
  upper_fraction: float = 0.1
  min_samples: int = MIN_FIT_SAMPLES

  def lower_for(self, method):
    if self.lower_factor is not None:
      return self.lower_factor
    return 1.0 if method == 'mode' else 3.0


@dataclass(frozen=True)
class SpeciesFit:
  rate: float
  window: tuple
  residual: float
  samples: int
  flag: str


@dataclass(frozen=True)
class GrowthFit:
  """Fitted exponential growth per species, with the linear-theory rate."""
  species: tuple
  analytic_rate: float
  method: str

  @property
  def rate(self):
    return max(fit.rate for fit in self.species)

  @property
  def flag(self):
    flags = [fit.flag for fit in self.species]
    if FLAG_OK in flags:
      return FLAG_OK
    if FLAG_UNFITTABLE in flags:
      return FLAG_UNFITTABLE
    return FLAG_NO_GROWTH

  @property
  def relative_error(self):
    if not self.analytic_rate:
      return None
    return abs(self.rate - self.analytic_rate) / self.analytic_rate

  def species_rate(self, species):
    return self.species[species - 1].rate

  def to_dict(self):
    keys = ('1', '2')
    return {'rate': {k: f.rate for k, f in zip(keys, self.species)},
            'window': {k: (list(f.window) if f.window else None) for k, f in zip(keys, self.species)},
            'residual': {k: f.residual for k, f in zip(keys, self.species)},
            'samples': {k: f.samples for k, f in zip(keys, self.species)},
            'flags': {k: f.flag for k, f in zip(keys, self.species)},
            'flag': self.flag,
            'fitted_rate': self.rate,
            'analytic_rate': self.analytic_rate,
            'relative_error': self.relative_error,
            'growth_time': growth_time(self.rate),
            'method': self.method}


def _mode_vectors(series):
  """(u1, v1, u2, v2) in the frame co-rotating with each measured carrier."""
  rows = []
  for amps in series:
    magnitude = np.abs(amps.carrier)
    phase = np.ones(2, dtype=np.complex128)
    nonzero = magnitude > 0
    phase[nonzero] = amps.carrier[nonzero] / magnitude[nonzero]
    u = amps.plus * np.conj(phase)
    v = np.conj(amps.minus) * phase
    rows.append([u[0], v[0], u[1], v[1]])
  return np.array(rows)

def _fit_species(times, amplitude, raw_peak, background, lower, window):
  n = len(times)
  if n == 0 or amplitude[0] <= 0 or background <= 0:
    return SpeciesFit(rate=0.0, window=None, residual=0.0, samples=0, flag=FLAG_NO_GROWTH)
  if raw_peak[0] > window.upper_fraction * background:
    return SpeciesFit(rate=0.0, window=None, residual=0.0, samples=0, flag=FLAG_UNFITTABLE)

  over = np.nonzero(raw_peak > window.upper_fraction * background)[0]
  end = int(over[0]) if len(over) else n
  inside = np.nonzero(amplitude[:end] >= lower * amplitude[0])[0]
  if len(inside) == 0:
    return SpeciesFit(rate=0.0, window=None, residual=0.0, samples=0, flag=FLAG_NO_GROWTH)
  if len(inside) < window.min_samples:
    flag = FLAG_UNFITTABLE if len(over) else FLAG_NO_GROWTH
    return SpeciesFit(rate=0.0, window=None, residual=0.0, samples=int(len(inside)), flag=flag)

  t = times[inside]
  y = np.log(amplitude[inside])
  slope, intercept = np.polyfit(t, y, 1)
  residual = float(np.sqrt(np.mean((y - (slope * t + intercept))**2)))
  span = (float(t[0]), float(t[-1]))
  if slope <= 0:
    return SpeciesFit(rate=0.0, window=span, residual=residual, samples=int(len(t)), flag=FLAG_NO_GROWTH)
  return SpeciesFit(rate=float(slope), window=span, residual=residual, samples=int(len(t)), flag=FLAG_OK)

def measure_growth_rate(trajectory, analytic_rate, method='sideband', mode=None, window=None):
  """Least-squares e-folding rate of the sideband perturbation per species.

  method 'sideband' fits ln max(|a+|, |a-|). method 'mode' fits the
  projection of the sidebands onto `mode` (an UnstableMode); without a
  mode there is nothing to grow and the fit reports no growth.
  """
  if method not in ('sideband', 'mode'):
    raise ValueError(f'Unknown growth-fit method: {method}')
  window = window or FitWindow()
  times, series = sideband_series(trajectory)
  if not series:
    raise ValueError('Trajectory carries no sideband observables')

  raw = np.array([amps.peak() for amps in series])
  background = np.abs(series[0].carrier)
  lower = window.lower_for(method)

  if method == 'mode':
    if mode is None:
      none = SpeciesFit(rate=0.0, window=None, residual=0.0, samples=0, flag=FLAG_NO_GROWTH)
      return GrowthFit(species=(none, none), analytic_rate=analytic_rate, method=method)
    projection = np.abs(mode.project(_mode_vectors(series)))
    weights = [max(abs(mode.right[0]), abs(mode.right[1])), max(abs(mode.right[2]), abs(mode.right[3]))]
    amplitudes = [projection * w for w in weights]
  else:
    amplitudes = [raw[:, 0], raw[:, 1]]

  fits = tuple(_fit_species(times, amplitudes[i], raw[:, i], background[i], lower, window) for i in range(2))
  return GrowthFit(species=fits, analytic_rate=analytic_rate, method=method)
#endregion

#region Transfer and localization
@dataclass(frozen=True, eq=False)
class TransferMetric:
  """Share f_s(t) = P_s / (P_1 + P_2) of the sideband power held by each species."""
  times: np.ndarray
  fractions: np.ndarray
  crossings: list = field(default_factory=list)

  def dominant(self):
    return np.where(self.fractions[:, 0] > self.fractions[:, 1], 1,
                    np.where(self.fractions[:, 1] > self.fractions[:, 0], 2, 0))


def instability_transfer_metric(trajectory, tol=1e-12):
  """Per-species perturbation share and the times the dominant species changes.

  Samples with no sideband power at all are skipped. Crossing times are
  interpolated linearly between the two samples that bracket them.
  """
  times, series = sideband_series(trajectory)
  kept_t, kept_f = [], []
  for t, amps in zip(times, series):
    power = amps.power()
    total = power.sum()
    if total <= 0:
      continue
    kept_t.append(t)
    kept_f.append(power / total)
  kept_t = np.array(kept_t)
  kept_f = np.array(kept_f).reshape(-1, 2)

  crossings = []
  previous = None
  for i, (t, f) in enumerate(zip(kept_t, kept_f)):
    diff = f[0] - f[1]
    if abs(diff) <= tol:
      continue
    if previous is not None and np.sign(diff) != np.sign(previous[1]):
      t_a, d_a = previous
      t_cross = t_a + (t - t_a) * d_a / (d_a - diff)
      crossings.append({'t': float(t_cross), 'dominant': 1 if diff > 0 else 2})
    previous = (t, diff)
  return TransferMetric(times=kept_t, fractions=kept_f, crossings=crossings)

def participation_ratio(state, species):
  """(sum |psi|^2)^2 / sum |psi|^4: M for a uniform species, 1 for a single site."""
  dens = state.density()[species - 1]
  norm = dens.sum()
  if norm <= 0:
    raise ValueError(f'Species {species} has zero norm; participation ratio undefined')
  return float(norm**2 / np.sum(dens**2))

def _participation_or_none(state, species):
  if not state.density()[species - 1].sum() > 0:
    return None
  return participation_ratio(state, species)


class ParticipationObserver:
  """Integrator observer recording the participation ratio of both species.

  A species with zero norm is recorded as None.
  """
  def __call__(self, state):
    return {'participation1': _participation_or_none(state, 1),
            'participation2': _participation_or_none(state, 2)}


@dataclass(frozen=True)
class Localization:
  """Participation ratio of one species over a run."""
  final: float
  minimum: float
  t_min: float

  def to_dict(self):
    return {'final': self.final, 'min': self.minimum, 't_min': self.t_min}


def localization_history(trajectory):
  """Final and smallest participation ratio per species from the observation records.

  Localization comes and goes over the recurrence cycle of the instability,
  so the final value alone can miss it. Species never observed with a
  nonzero norm get None everywhere.
  """
  result = []
  for species in (1, 2):
    key = f'participation{species}'
    samples = [(r['t'], r[key]) for r in trajectory.records if r.get(key) is not None]
    if not samples:
      result.append(Localization(final=None, minimum=None, t_min=None))
      continue
    t_min, minimum = min(samples, key=lambda sample: sample[1])
    last = trajectory.records[-1].get(key)
    result.append(Localization(final=last, minimum=minimum, t_min=t_min))
  return tuple(result)
#endregion
