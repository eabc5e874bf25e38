"""Named parameter bundles reproducing the published figures.

Each preset is a function returning a RunConfig, registered with the
@preset decorator under its figure name. Grid presets feed scan_plane,
simulation presets feed evolve and the growth fit.
"""

import math
from dataclasses import dataclass

from .model import ModelParams
from .config import RunConfig, StateConfig, GridConfig
from .integrator import IntegratorConfig

KIND_GRID = 'grid'
KIND_SIMULATION = 'simulation'

# Coupling sets at K = 1, Lambda = 100: a1:a12:a2 = 1.007:1:1.01 and 1.03:1:0.97
MISCIBLE = ModelParams(K1=1.0, K2=1.0, lambda11=100.0, lambda22=100.298, lambda12=99.3)
IMMISCIBLE = ModelParams(K1=1.0, K2=1.0, lambda11=100.0, lambda22=94.17, lambda12=97.09)

_presets = {}                       # Stores registered presets by name

@dataclass(frozen=True)
class Preset:
  name: str
  kind: str
  description: str
  build: object

  def config(self):
    return self.build()


def preset(name, kind, description=''):
  """Decorates a RunConfig factory to register it as a named preset."""
  def decorate(func):
    if kind not in (KIND_GRID, KIND_SIMULATION):
      raise ValueError(f'Unknown preset kind: {kind}')
    _presets[name] = Preset(name=name, kind=kind, description=description, build=func)
    return func
  return decorate

def preset_names():
  return sorted(_presets)

def get_preset(name):
  try:
    return _presets[name]
  except KeyError:
    raise ValueError(f'Unknown preset "{name}"; choose from {", ".join(preset_names())}') from None

def _simulation(params, l, s, t_end):
  return RunConfig(model=params, sites=400, state=StateConfig(l=l, s=s),
                   integrator=IntegratorConfig(dt=1e-3, t_end=t_end))

#region Phase diagrams
@preset('fig1a', KIND_GRID, 'Stability classes over the full (q, k) plane, miscible couplings')
def fig1a():
  return RunConfig(model=MISCIBLE, grid=GridConfig(q_steps=400, k_steps=400))

@preset('fig1b', KIND_GRID, 'Stability classes at small q, immiscible couplings')
def fig1b():
  # |Delta1| is tiny here, so the unstable band near k = 0 only shows at small q
  return RunConfig(model=IMMISCIBLE, grid=GridConfig(q_steps=400, k_steps=400, q_range=(0.0, math.pi / 4)))
#endregion

#region Simulations
@preset('fig2a', KIND_SIMULATION, 'Stable point k = pi/4, q = pi/2, miscible couplings')
def fig2a():
  return _simulation(MISCIBLE, 50, 100, 60.0)

@preset('fig2b', KIND_SIMULATION, 'Linearly stable point k = 3pi/4, q = pi/2, miscible couplings')
def fig2b():
  return _simulation(MISCIBLE, 150, 100, 60.0)

@preset('fig2c', KIND_SIMULATION, 'Partially unstable point k = 3pi/4, q = pi/4, miscible couplings')
def fig2c():
  return _simulation(MISCIBLE, 150, 50, 60.0)

@preset('fig3a', KIND_SIMULATION, 'Immiscible couplings at k = 3pi/4, q = pi/40')
def fig3a():
  return _simulation(IMMISCIBLE, 150, 5, 250.0)

@preset('fig3b', KIND_SIMULATION, 'Immiscible couplings at k = 3pi/4, q = pi/20')
def fig3b():
  return _simulation(IMMISCIBLE, 150, 10, 130.0)
#endregion
