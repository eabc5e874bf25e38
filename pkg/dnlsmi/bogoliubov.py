"""Bogoliubov excitation spectrum of a two-species plane-wave carrier.

A carrier psi0_s exp(i(kj - mu_s t)) perturbed by u_s exp(i(qj - wt)) +
v_s^* exp(-i(qj - wt)) has, for K1 = K2 = K, the branches

  w(+/-)_{q,s} = 2K sin k sin q +/- sqrt(eps_q (eps_q + Delta_s))

with eps_q = 4K cos k sin^2(q/2). Negative radicands give imaginary
frequencies and exponential growth at rate sqrt(-eps_q (eps_q + Delta_s)).
The 4 x 4 linearization matrix is available for arbitrary K1, K2 and
serves as a numerical oracle for the closed form.
"""

import math
import enum
from dataclasses import dataclass

import numpy as np

from .utils import UnsupportedClosedFormError, EigenSolverError

EIGEN_RESIDUAL_TARGET = 1e-10

#region Types
@dataclass(frozen=True)
class CarrierSpec:
  """A plane-wave carrier with real, nonnegative per-species amplitudes.

  Build instances with create() or equal() so that mu1 and mu2 always
  agree with chemical_potential for the same inputs.
  """
  k: float
  psi0_1: float
  psi0_2: float
  mu1: float
  mu2: float

  @classmethod
  def create(cls, params, k, psi0_1, psi0_2):
    if psi0_1 < 0 or psi0_2 < 0:
      raise ValueError(f'Carrier amplitudes must be real and nonnegative, got {psi0_1}, {psi0_2}')
    mu1 = _chemical_potential(params, k, psi0_1, psi0_2, 1)
    mu2 = _chemical_potential(params, k, psi0_1, psi0_2, 2)
    return cls(k=float(k), psi0_1=float(psi0_1), psi0_2=float(psi0_2), mu1=mu1, mu2=mu2)

  @classmethod
  def equal(cls, params, k, psi0_sq):
    """Both species at the same background density psi0_sq."""
    if psi0_sq < 0:
      raise ValueError(f'Background density must be nonnegative, got {psi0_sq}')
    psi0 = math.sqrt(psi0_sq)
    return cls.create(params, k, psi0, psi0)

  def amplitude(self, species):
    return self.psi0_1 if species == 1 else self.psi0_2

  def mu(self, species):
    return self.mu1 if species == 1 else self.mu2


class StabilityClass(enum.Enum):
  STABLE = 'STABLE'
  UNSTABLE_1 = 'UNSTABLE_1'
  UNSTABLE_2 = 'UNSTABLE_2'
  UNSTABLE_BOTH = 'UNSTABLE_BOTH'
  FAILED = 'FAILED'

  @classmethod
  def from_growth(cls, growth1, growth2):
    if growth1 > 0 and growth2 > 0:
      return cls.UNSTABLE_BOTH
    if growth1 > 0:
      return cls.UNSTABLE_1
    if growth2 > 0:
      return cls.UNSTABLE_2
    return cls.STABLE

  @property
  def is_partial(self):
    return self in (StabilityClass.UNSTABLE_1, StabilityClass.UNSTABLE_2)

  @property
  def is_unstable(self):
    return self in (StabilityClass.UNSTABLE_1, StabilityClass.UNSTABLE_2, StabilityClass.UNSTABLE_BOTH)

  @property
  def unstable_component(self):
    """The single unstable species of a partially unstable point, else None."""
    return {StabilityClass.UNSTABLE_1: 1, StabilityClass.UNSTABLE_2: 2}.get(self)

  def describe(self):
    if self.is_partial:
      return f'PartiallyUnstable({self.unstable_component})'
    return {StabilityClass.STABLE: 'Stable', StabilityClass.UNSTABLE_BOTH: 'FullyUnstable',
            StabilityClass.FAILED: 'Failed'}[self]


@dataclass(frozen=True)
class SpectrumResult:
  """Branch frequencies at one perturbation wave number.

  omega holds (w+_1, w-_1, w+_2, w-_2).
  """
  q: float
  epsilon_q: float
  delta1: float
  delta2: float
  omega: tuple
  growth1: float
  growth2: float

  @property
  def stability(self):
    return StabilityClass.from_growth(self.growth1, self.growth2)

  @property
  def growth(self):
    return max(self.growth1, self.growth2)

  def branches(self, species):
    return self.omega[0:2] if species == 1 else self.omega[2:4]

  def to_dict(self):
    names = ['omega_plus_1', 'omega_minus_1', 'omega_plus_2', 'omega_minus_2']
    d = {'q': self.q, 'eps_q': self.epsilon_q, 'delta1': self.delta1, 'delta2': self.delta2,
         'growth1': self.growth1, 'growth2': self.growth2,
         'growth_time': growth_time(self.growth), 'class': self.stability.value,
         'class_name': self.stability.describe()}
    for name, w in zip(names, self.omega):
      d[name] = [w.real, w.imag]
    return d
#endregion

#region Closed forms
def _chemical_potential(params, k, psi0_1, psi0_2, species):
  own, other = (psi0_1, psi0_2) if species == 1 else (psi0_2, psi0_1)
  return (-2.0 * params.hop(species) * math.cos(k)
          + params.intra(species) * own**2 + params.lambda12 * other**2)

def chemical_potential(params, carrier, species):
  """mu_s = -2 K_s cos k + Lambda_ss psi0_s^2 + Lambda_ss' psi0_s'^2."""
  return _chemical_potential(params, carrier.k, carrier.psi0_1, carrier.psi0_2, species)

def epsilon_q(K, k, q):
  return 4.0 * K * np.cos(k) * np.sin(np.asarray(q) / 2.0)**2

def doppler_shift(K, k, q):
  return 2.0 * K * np.sin(k) * np.sin(q)

def _deltas(lambda1, lambda2, lambda12, psi0_1, psi0_2):
  a = lambda1 * np.square(psi0_1)
  b = lambda2 * np.square(psi0_2)
  root = np.hypot(a - b, 2.0 * lambda12 * psi0_1 * psi0_2)
  upper = a + b + root
  # Delta1 * Delta2 = 4 psi1^2 psi2^2 (L1 L2 - L12^2); avoids cancellation near the miscibility edge
  product = 4.0 * np.square(psi0_1 * psi0_2) * (lambda1 * lambda2 - lambda12**2)
  with np.errstate(divide='ignore', invalid='ignore'):
    lower = np.where(upper != 0, product / np.where(upper != 0, upper, 1.0), a + b - root)
  return np.minimum(lower, upper), upper

def delta_sigma(params, psi0_1, psi0_2, species):
  """Effective interaction Delta_s of the two collective branches (Delta1 <= Delta2)."""
  d1, d2 = _deltas(params.lambda11, params.lambda22, params.lambda12, psi0_1, psi0_2)
  return float(d1 if species == 1 else d2)

def omega_uniform(params, species):
  """Omega_s = Delta_s / psi0^2 for equal amplitudes psi0_1 = psi0_2."""
  return delta_sigma(params, 1.0, 1.0, species)

def growth_time(rate):
  """e-folding time of an unstable mode, inf when the rate is zero."""
  return math.inf if rate <= 0 else 1.0 / rate

def _require_equal_hopping(params):
  if not params.equal_hopping:
    raise UnsupportedClosedFormError(
      f'Closed-form spectrum needs K1 == K2 (got {params.K1}, {params.K2}); use bogoliubov_matrix instead')

def _branches(doppler, eps, delta):
  radicand = eps * (eps + delta)
  root = np.sqrt(np.abs(radicand))
  growth = np.where(radicand < 0, root, 0.0)
  real = np.where(radicand < 0, 0.0, root)
  plus = doppler + real + 1j * growth
  minus = doppler - real - 1j * growth
  return plus, minus, growth

def closed_form_from_trig(K, cos_k, sin_k, sin_q, half_sq, d1, d2):
  """Closed form from precomputed trigonometric factors.

  half_sq is sin^2(q/2). Only IEEE-exact arithmetic happens here, so the
  result for a cell does not depend on how the inputs were batched.
  """
  eps = np.asarray(4.0 * K * cos_k * half_sq)
  doppler = 2.0 * K * sin_k * sin_q
  p1, m1, g1 = _branches(doppler, eps, d1)
  p2, m2, g2 = _branches(doppler, eps, d2)
  return {'eps_q': eps, 'delta1': np.broadcast_to(d1, eps.shape), 'delta2': np.broadcast_to(d2, eps.shape),
          'growth1': g1, 'growth2': g2,
          'omega_plus_1': p1, 'omega_minus_1': m1, 'omega_plus_2': p2, 'omega_minus_2': m2}

def spectrum_arrays(params, k, q, psi0_1, psi0_2):
  """Vectorized closed form; k and q broadcast against each other.

  Returns a dict of arrays eps_q, delta1, delta2, growth1, growth2,
  omega_plus_1, omega_minus_1, omega_plus_2, omega_minus_2.
  """
  _require_equal_hopping(params)
  q = np.asarray(q, dtype=float)
  d1, d2 = _deltas(params.lambda11, params.lambda22, params.lambda12, psi0_1, psi0_2)
  return closed_form_from_trig(params.K1, np.cos(k), np.sin(k), np.sin(q), np.sin(q / 2.0)**2, d1, d2)

def _result(q, arrays):
  return SpectrumResult(
    q=float(q), epsilon_q=float(arrays['eps_q']),
    delta1=float(arrays['delta1']), delta2=float(arrays['delta2']),
    omega=(complex(arrays['omega_plus_1']), complex(arrays['omega_minus_1']),
           complex(arrays['omega_plus_2']), complex(arrays['omega_minus_2'])),
    growth1=float(arrays['growth1']), growth2=float(arrays['growth2']))

def spectrum(params, carrier, q):
  """Closed-form branch frequencies and growth rates at wave number q."""
  arrays = spectrum_arrays(params, carrier.k, q, carrier.psi0_1, carrier.psi0_2)
  return _result(q, arrays)

def spectrum_long_wavelength(params, carrier, q):
  """Small k, q form: w = 2Kqk +/- sqrt(Kq^2 (Kq^2 + Delta_s))."""
  _require_equal_hopping(params)
  K = params.K1
  kin = K * q * q
  doppler = 2.0 * K * q * carrier.k
  d1, d2 = _deltas(params.lambda11, params.lambda22, params.lambda12, carrier.psi0_1, carrier.psi0_2)
  p1, m1, g1 = _branches(doppler, kin, d1)
  p2, m2, g2 = _branches(doppler, kin, d2)
  return _result(q, {'eps_q': kin, 'delta1': d1, 'delta2': d2, 'growth1': g1, 'growth2': g2,
                     'omega_plus_1': p1, 'omega_minus_1': m1, 'omega_plus_2': p2, 'omega_minus_2': m2})

def classify(params, carrier, q):
  return spectrum(params, carrier, q).stability

def critical_amplitude(params):
  """Background density above which the instability covers every q.

  4K/Omega_1 for miscible couplings, 4K/|Omega_1| under phase separation;
  inf when Omega_1 vanishes. The exact boundary Lambda12^2 = L1 L2 counts
  as miscible.
  """
  _require_equal_hopping(params)
  omega1 = omega_uniform(params, 1)
  if omega1 == 0:
    return math.inf
  if params.miscibility_margin() <= 0:
    return 4.0 * params.K1 / omega1
  return 4.0 * params.K1 / abs(omega1)
#endregion

#region Linearization matrix
@dataclass(frozen=True, eq=False)
class BogoliubovModes:
  """Eigen-decomposition of the 4 x 4 linearization in the order (u1, v1, u2, v2)."""
  matrix: np.ndarray
  eigenvalues: np.ndarray
  eigenvectors: np.ndarray
  residual: float

  @property
  def growth_rate(self):
    return float(np.max(np.abs(self.eigenvalues.imag)))


def linearization_matrix(params, carrier, q):
  k = carrier.k
  blocks = []
  for species in (1, 2):
    K = params.hop(species)
    eps = 4.0 * K * math.cos(k) * math.sin(q / 2.0)**2
    doppler = 2.0 * K * math.sin(k) * math.sin(q)
    B = params.intra(species) * carrier.amplitude(species)**2
    blocks.append((doppler + eps + B, -doppler + eps + B, B))
  (a1p, a1m, b1), (a2p, a2m, b2) = blocks
  c = params.lambda12 * carrier.psi0_1 * carrier.psi0_2
  return np.array([[a1p, b1, c, c],
                   [-b1, -a1m, -c, -c],
                   [c, c, a2p, b2],
                   [-c, -c, -b2, -a2m]], dtype=np.complex128)

def bogoliubov_matrix(params, carrier, q):
  """Linearization of the DNLS flow around the carrier and its eigenvalues.

  The eigenvalues are the four branch frequencies; K1 != K2 is allowed.
  Raises EigenSolverError when the relative residual |Mv - wv| / |v|
  exceeds the target.
  """
  m = linearization_matrix(params, carrier, q)
  try:
    w, v = np.linalg.eig(m)
  except np.linalg.LinAlgError as e:
    raise EigenSolverError(f'Eigen-decomposition failed at q={q:g}: {e}', residual=math.inf) from e
  scale = max(1.0, float(np.linalg.norm(m, 2)))
  columns = np.linalg.norm(v, axis=0)
  residual = float(np.max(np.linalg.norm(m @ v - v * w, axis=0) / columns)) / scale
  if not residual <= EIGEN_RESIDUAL_TARGET:
    raise EigenSolverError(f'Eigen-decomposition residual {residual:.3e} above target at q={q:g}', residual=residual)
  return BogoliubovModes(matrix=m, eigenvalues=w, eigenvectors=v, residual=residual)


@dataclass(frozen=True, eq=False)
class UnstableMode:
  """The fastest-growing eigenmode with its dual (left) vector.

  right is scaled so that its largest component has modulus one, left so
  that left.conj() @ right == 1. Projecting a perturbation x onto the mode
  gives left.conj() @ x, which evolves as exp(-i omega t).
  """
  omega: complex
  right: np.ndarray
  left: np.ndarray

  @property
  def growth_rate(self):
    return float(self.omega.imag)

  def project(self, x):
    return np.asarray(x) @ self.left.conj()


def unstable_mode(params, carrier, q, tol=1e-12):
  """The eigenmode with the largest positive Im(omega), or None if all are real."""
  modes = bogoliubov_matrix(params, carrier, q)
  index = int(np.argmax(modes.eigenvalues.imag))
  omega = complex(modes.eigenvalues[index])
  if omega.imag <= tol * max(1.0, float(np.linalg.norm(modes.matrix, 2))):
    return None
  right = modes.eigenvectors[:, index]
  right = right / right[np.argmax(np.abs(right))]
  lw, lv = np.linalg.eig(modes.matrix.conj().T)
  left = lv[:, int(np.argmin(np.abs(lw - omega.conjugate())))]
  left = left / np.vdot(left, right).conjugate()
  return UnstableMode(omega=omega, right=right, left=left)
#endregion

def matrix_branch_growth(params, carrier, q, modes=None, tol=1e-12):
  """Growth rates (growth1, growth2) read off the linearization matrix.

  Each growing eigenvector is assigned to a collective branch through its
  density part (u1 + v1, u2 + v2): branch 2 is the eigenvector of the
  interaction matrix [[L11 psi1^2, C], [C, L22 psi2^2]] with the larger
  eigenvalue, branch 1 the other one. For K1 == K2 this reproduces the
  labels of the closed form.
  """
  if modes is None:
    modes = bogoliubov_matrix(params, carrier, q)
  c = params.lambda12 * carrier.psi0_1 * carrier.psi0_2
  density = np.array([[params.lambda11 * carrier.psi0_1**2, c],
                      [c, params.lambda22 * carrier.psi0_2**2]])
  _, basis = np.linalg.eigh(density)
  floor = tol * max(1.0, float(np.linalg.norm(modes.matrix, 2)))
  growth = [0.0, 0.0]
  for w, x in zip(modes.eigenvalues, modes.eigenvectors.T):
    if w.imag <= floor:
      continue
    part = np.array([x[0] + x[1], x[2] + x[3]])
    branch = 1 if abs(basis[:, 1] @ part) >= abs(basis[:, 0] @ part) else 0
    growth[branch] = max(growth[branch], float(w.imag))
  return growth[0], growth[1]
