"""Run configuration: built-in defaults, JSON files and command-line overrides.

A configuration file mirrors RunConfig.to_dict():

  {"model": {...}, "lattice": {"sites": 400}, "state": {...},
   "integrator": {...}, "fit": {...}, "grid": {...},
   "out": "runs/custom", "workers": 1}

Every section is optional; missing values keep their defaults and unknown
keys are rejected.
"""

import os
import json
import math
from dataclasses import dataclass, field, asdict

from .model import ModelParams, LatticeConfig, normalized_amplitude
from .integrator import IntegratorConfig
from .experiments import ModulatedStateSpec, FitWindow, DEFAULT_ALPHA_RATIO
from .stability import GridSpec
from .bogoliubov import CarrierSpec

DEFAULT_OUT_ROOT = 'runs'
OUT_ROOT_ENV = 'DNLSMI_OUT'

#region Sections
@dataclass(frozen=True)
class StateConfig:
  l: int = 150
  s: int = 50
  amplitude: float = None           # None means 1/sqrt(2M+1)
  alpha_ratio: float = DEFAULT_ALPHA_RATIO
  atoms: float = None               # atom number N; enables the superfluid-regime check

  def __post_init__(self):
    if self.atoms is not None and not self.atoms > 0:
      raise ValueError(f'Atom number must be positive, got {self.atoms}')


@dataclass(frozen=True)
class FitConfig:
  method: str = 'mode'
  lower_factor: float = None
  upper_fraction: float = 0.1

  def __post_init__(self):
    if self.method not in ('mode', 'sideband'):
      raise ValueError(f'Unknown growth-fit method: {self.method}')

  def window(self):
    return FitWindow(lower_factor=self.lower_factor, upper_fraction=self.upper_fraction)


@dataclass(frozen=True)
class GridConfig:
  q_steps: int = 400
  k_steps: int = 400
  q_range: tuple = (0.0, 2 * math.pi)
  k_range: tuple = (0.0, 2 * math.pi)
  psi0_sq: float = None             # None means the normalized background A^2
  admissible: bool = False          # restrict axes to 2*pi*n/M


def _section(cls, d, name):
  d = d or {}
  unknown = set(d) - set(cls.__dataclass_fields__)
  if unknown:
    raise ValueError(f'Unknown keys in "{name}" section: {sorted(unknown)}')
  values = dict(d)
  for key in ('q_range', 'k_range'):
    if key in values:
      values[key] = tuple(values[key])
  return cls(**values)
#endregion

@dataclass(frozen=True)
class RunConfig:
  """Everything needed to reproduce one spectrum, scan or simulation."""
  model: ModelParams = field(default_factory=ModelParams)
  sites: int = 400
  state: StateConfig = field(default_factory=StateConfig)
  integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
  fit: FitConfig = field(default_factory=FitConfig)
  grid: GridConfig = field(default_factory=GridConfig)
  out: str = None
  workers: int = 1

  def __post_init__(self):
    LatticeConfig(self.sites)
    if int(self.workers) != self.workers or self.workers < 1:
      raise ValueError(f'Worker count must be a positive integer, got {self.workers}')

  #region Derived objects
  def lattice(self):
    return LatticeConfig(self.sites)

  def background_amplitude(self):
    if self.state.amplitude is None:
      return normalized_amplitude(self.sites)
    return self.state.amplitude

  def modulated_spec(self):
    A = self.background_amplitude()
    return ModulatedStateSpec(A=A, alpha=self.state.alpha_ratio * A, l=self.state.l, s=self.state.s, M=self.sites)

  def carrier(self):
    A = self.background_amplitude()
    return CarrierSpec.create(self.model, self.lattice().wave_number(self.state.l), A, A)

  def perturbation_q(self):
    return self.lattice().wave_number(self.state.s)

  def grid_psi0_sq(self):
    if self.grid.psi0_sq is None:
      return self.background_amplitude()**2
    return self.grid.psi0_sq

  def grid_spec(self):
    return GridSpec(q_steps=self.grid.q_steps, k_steps=self.grid.k_steps,
                    q_range=self.grid.q_range, k_range=self.grid.k_range,
                    sites=self.sites if self.grid.admissible else None)

  def out_dir(self, name='run'):
    if self.out:
      return self.out
    return os.path.join(os.environ.get(OUT_ROOT_ENV, DEFAULT_OUT_ROOT), name)
  #endregion

  #region Serialization
  def to_dict(self):
    return {'model': self.model.to_dict(),
            'lattice': {'sites': self.sites},
            'state': asdict(self.state),
            'integrator': self.integrator.to_dict(),
            'fit': asdict(self.fit),
            'grid': {**asdict(self.grid), 'q_range': list(self.grid.q_range), 'k_range': list(self.grid.k_range)},
            'out': self.out,
            'workers': self.workers}

  @classmethod
  def from_dict(cls, d, base=None):
    """Builds a config from a (possibly partial) dict layered over base."""
    base = base or cls()
    unknown = set(d) - {'model', 'lattice', 'state', 'integrator', 'fit', 'grid', 'out', 'workers'}
    if unknown:
      raise ValueError(f'Unknown configuration sections: {sorted(unknown)}')
    merged = base.to_dict()
    for name in ('model', 'lattice', 'state', 'integrator', 'fit', 'grid'):
      merged[name].update(d.get(name) or {})
    lattice = merged['lattice']
    if set(lattice) - {'sites'}:
      raise ValueError(f'Unknown keys in "lattice" section: {sorted(set(lattice) - {"sites"})}')
    return cls(model=ModelParams.from_dict(merged['model']),
               sites=int(lattice['sites']),
               state=_section(StateConfig, merged['state'], 'state'),
               integrator=IntegratorConfig.from_dict(merged['integrator']),
               fit=_section(FitConfig, merged['fit'], 'fit'),
               grid=_section(GridConfig, merged['grid'], 'grid'),
               out=d.get('out', merged['out']),
               workers=int(d.get('workers', merged['workers'])))

  @classmethod
  def load(cls, path, base=None):
    try:
      with open(path, 'r', encoding='utf-8') as f:
        data = json.load(f)
    except OSError as e:
      raise OSError(f'Unable to read configuration {path}: {e}') from e
    except json.JSONDecodeError as e:
      raise ValueError(f'Configuration {path} is not valid JSON: {e}') from e
    return cls.from_dict(data, base=base)

  def with_overrides(self, section, **values):
    """Replaces the given keys of one section, ignoring values that are None."""
    values = {k: v for k, v in values.items() if v is not None}
    if not values:
      return self
    return RunConfig.from_dict({section: values} if section not in ('out', 'workers') else values, base=self)
  #endregion
