"""Coupled DNLS model: parameters, lattice states and conserved quantities.

Two species of condensate amplitudes psi[sigma, j] live on a periodic
lattice of M sites and evolve under

  i dpsi_{j,s}/dt = -K_s (psi_{j-1,s} + psi_{j+1,s})
                    + (L_ss |psi_{j,s}|^2 + L_ss' |psi_{j,s'}|^2) psi_{j,s}

with hbar = 1. Amplitudes are stored species-major in one contiguous
2 x M complex array.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .utils import DivergedStateError

SUPERFLUID_THRESHOLD = 10.0       # r >= this counts as (N/M)K >> Lambda
MIN_SITES = 4

#region Parameters
@dataclass(frozen=True)
class ModelParams:
  """Hopping energies and the on-site interaction matrix.

  All values are dimensionless. Repulsive interactions (Lambda > 0) are the
  intended regime; negative couplings are accepted and reported by warnings().
  """
  K1: float = 1.0
  K2: float = 1.0
  lambda11: float = 100.0
  lambda22: float = 100.0
  lambda12: float = 100.0

  def __post_init__(self):
    if not (self.K1 > 0 and self.K2 > 0):
      raise ValueError(f'Hopping energies must be positive: K1={self.K1}, K2={self.K2}')
    for name in ('K1', 'K2', 'lambda11', 'lambda22', 'lambda12'):
      value = getattr(self, name)
      if not math.isfinite(value):
        raise ValueError(f'{name} must be finite, got {value}')

  @property
  def hopping(self):
    return np.array([self.K1, self.K2], dtype=float)

  @property
  def coupling(self):
    """The symmetric 2 x 2 interaction matrix."""
    return np.array([[self.lambda11, self.lambda12],
                     [self.lambda12, self.lambda22]], dtype=float)

  @property
  def equal_hopping(self):
    return self.K1 == self.K2

  def intra(self, species):
    return self.lambda11 if species == 1 else self.lambda22

  def hop(self, species):
    return self.K1 if species == 1 else self.K2

  def is_miscible(self):
    """Miscible when Lambda12^2 < Lambda11 * Lambda22."""
    return self.lambda12**2 < self.lambda11 * self.lambda22

  def miscibility_margin(self):
    """Lambda12^2 - Lambda11 * Lambda22; positive means phase separation."""
    return self.lambda12**2 - self.lambda11 * self.lambda22

  def warnings(self):
    found = []
    for name in ('lambda11', 'lambda22', 'lambda12'):
      value = getattr(self, name)
      if value < 0:
        found.append(f'{name}={value:g} is attractive; only repulsive couplings are covered by the analysis')
    return found

  def to_dict(self):
    return {'K1': self.K1, 'K2': self.K2, 'lambda11': self.lambda11,
            'lambda22': self.lambda22, 'lambda12': self.lambda12}

  @classmethod
  def from_dict(cls, d):
    unknown = set(d) - {'K1', 'K2', 'lambda11', 'lambda22', 'lambda12'}
    if unknown:
      raise ValueError(f'Unknown model parameters: {sorted(unknown)}')
    return cls(**{k: float(v) for k, v in d.items()})


def params_from_scattering_lengths(a1, a12, a2, Lambda=100.0, K=1.0):
  """Builds couplings from scattering-length ratios a1:a12:a2.

  The couplings scale with the scattering lengths and are normalized so
  that lambda11 equals Lambda.
  """
  if a1 <= 0:
    raise ValueError(f'a1 must be positive, got {a1}')
  return ModelParams(K1=K, K2=K, lambda11=Lambda,
                     lambda22=Lambda * a2 / a1, lambda12=Lambda * a12 / a1)
#endregion

#region Lattice
@dataclass(frozen=True)
class LatticeConfig:
  """A periodic chain of M sites."""
  sites: int = 400

  def __post_init__(self):
    if int(self.sites) != self.sites or self.sites < MIN_SITES:
      raise ValueError(f'Lattice needs an integer number of sites >= {MIN_SITES}, got {self.sites}')

  def wave_number(self, index):
    """The admissible wave number 2*pi*index/M for 0 <= index < M."""
    if int(index) != index or not 0 <= index < self.sites:
      raise ValueError(f'Wave index must be an integer in [0, {self.sites}), got {index}')
    return 2 * math.pi * index / self.sites

  def wave_numbers(self):
    return 2 * math.pi * np.arange(self.sites) / self.sites


def normalized_amplitude(sites):
  """Background amplitude A = 1/sqrt(2M+1) of the equal-filling normalization."""
  return 1.0 / math.sqrt(2 * sites + 1)


@dataclass(frozen=True, eq=False)
class LatticeState:
  """A time stamp and the 2 x M array of complex amplitudes."""
  t: float
  amps: np.ndarray
  diverged: bool = False

  def __post_init__(self):
    amps = np.ascontiguousarray(self.amps, dtype=np.complex128)
    if amps.ndim != 2 or amps.shape[0] != 2:
      raise ValueError(f'Amplitude array must have shape (2, M), got {amps.shape}')
    if amps.shape[1] < MIN_SITES:
      raise ValueError(f'Lattice needs at least {MIN_SITES} sites, got {amps.shape[1]}')
    object.__setattr__(self, 'amps', amps)

  @classmethod
  def zeros(cls, sites, t=0.0):
    return cls(t, np.zeros((2, sites), dtype=np.complex128))

  @classmethod
  def plane_wave(cls, sites, k, psi0_1, psi0_2, t=0.0):
    """The carrier psi0_s exp(i k j) on every site."""
    phase = np.exp(1j * k * np.arange(sites))
    return cls(t, np.vstack([psi0_1 * phase, psi0_2 * phase]))

  @property
  def sites(self):
    return self.amps.shape[1]

  def density(self):
    return self.amps.real**2 + self.amps.imag**2

  def is_finite(self):
    return bool(np.isfinite(self.amps).all())

  def with_phase(self, theta):
    return replace(self, amps=self.amps * np.exp(1j * theta))

  def shifted(self, n):
    return replace(self, amps=np.roll(self.amps, n, axis=1))

  def copy(self):
    return replace(self, amps=self.amps.copy())


def check_finite(state):
  if not state.is_finite():
    raise DivergedStateError(f'State at t={state.t:g} contains non-finite amplitudes', t_last_finite=None)
#endregion

#region Dynamics
def _rhs(psi, hop, coupling):
  """dpsi/dt for a raw 2 x M array; hop is (K1, K2), coupling the 2 x 2 matrix."""
  dens = psi.real**2 + psi.imag**2
  neighbours = np.roll(psi, 1, axis=1)
  neighbours += np.roll(psi, -1, axis=1)
  return 1j * (hop[:, None] * neighbours - (coupling @ dens) * psi)

def dnls_rhs(state, params):
  """Time derivative of every amplitude under the coupled DNLS equations."""
  check_finite(state)
  return _rhs(state.amps, params.hopping, params.coupling)
#endregion

#region Diagnostics
@dataclass(frozen=True)
class ConservedQuantities:
  norm1: float
  norm2: float
  hamiltonian: float
  total_norm: float = field(init=False)

  def __post_init__(self):
    object.__setattr__(self, 'total_norm', self.norm1 + self.norm2)

  def to_dict(self):
    return {'norm1': self.norm1, 'norm2': self.norm2,
            'total_norm': self.total_norm, 'H': self.hamiltonian}


def _conserved(psi, hop, coupling):
  dens = psi.real**2 + psi.imag**2
  norms = dens.sum(axis=1)
  bond = np.conj(psi) * np.roll(psi, -1, axis=1)
  kinetic = -2.0 * np.sum(hop * bond.real.sum(axis=1))
  onsite = 0.5 * (coupling[0, 0] * np.sum(dens[0]**2) + coupling[1, 1] * np.sum(dens[1]**2))
  cross = coupling[0, 1] * np.sum(dens[0] * dens[1])
  return float(norms[0]), float(norms[1]), float(kinetic + onsite + cross)

def conserved_quantities(state, params):
  """Per-species norms and the Hamiltonian generating the DNLS flow."""
  check_finite(state)
  n1, n2, h = _conserved(state.amps, params.hopping, params.coupling)
  return ConservedQuantities(norm1=n1, norm2=n2, hamiltonian=h)


@dataclass(frozen=True)
class SuperfluidReport:
  ratio: float
  threshold: float
  passed: bool

  @property
  def message(self):
    if self.passed:
      return f'superfluid regime satisfied: (N/M)K / Lambda = {self.ratio:g} >= {self.threshold:g}'
    return f'superfluid regime questionable: (N/M)K / Lambda = {self.ratio:g} < {self.threshold:g}'


def superfluid_regime_check(params, atom_number, sites, threshold=SUPERFLUID_THRESHOLD):
  """Checks (N/M) K_s >> Lambda_ss' using the weakest hopping and strongest coupling."""
  if atom_number <= 0:
    raise ValueError(f'Atom number must be positive, got {atom_number}')
  if sites < 1:
    raise ValueError(f'Site count must be positive, got {sites}')
  strongest = float(np.max(np.abs(params.coupling)))
  filling = atom_number / sites
  if strongest == 0:
    ratio = math.inf
  else:
    ratio = filling * min(params.K1, params.K2) / strongest
  return SuperfluidReport(ratio=ratio, threshold=threshold, passed=ratio >= threshold)
#endregion
