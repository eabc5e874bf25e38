"""Stability maps over the (q, k) plane and along single lines.

Cells are independent; scan_plane can spread rows of constant k over a
process pool and always assembles the result in row-major order (k outer,
q inner), so output does not depend on the worker count.
"""

import math
from dataclasses import dataclass
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .bogoliubov import (CarrierSpec, StabilityClass, closed_form_from_trig, _deltas,
                         matrix_branch_growth, omega_uniform, epsilon_q)
from .model import LatticeConfig
from .utils import DnlsError, UnsupportedClosedFormError, format_float

CSV_HEADER = 'k,q,eps_q,delta1,delta2,growth1,growth2,class'
TWO_PI = 2 * math.pi

#region Grid specification
def _axis(steps, bounds, sites):
  lo, hi = bounds
  if sites:
    values = LatticeConfig(sites).wave_numbers()
    return values[(values >= lo) & (values < hi)]
  return lo + (hi - lo) * np.arange(steps) / steps


@dataclass(frozen=True)
class GridSpec:
  """Sampling of the (q, k) plane.

  Each axis samples the half-open range [lo, hi) at `steps` evenly spaced
  points. With `sites` set, the axes are instead the lattice-admissible
  wave numbers 2*pi*n/sites inside the ranges and the step counts follow
  from them.
  """
  q_steps: int = 400
  k_steps: int = 400
  q_range: tuple = (0.0, TWO_PI)
  k_range: tuple = (0.0, TWO_PI)
  sites: int = None

  def __post_init__(self):
    for name in ('q_range', 'k_range'):
      lo, hi = getattr(self, name)
      if not hi > lo:
        raise ValueError(f'{name} must be a nonempty interval, got [{lo}, {hi})')
      object.__setattr__(self, name, (float(lo), float(hi)))
    if self.sites:
      object.__setattr__(self, 'q_steps', len(self.q_values()))
      object.__setattr__(self, 'k_steps', len(self.k_values()))
    for name in ('q_steps', 'k_steps'):
      if int(getattr(self, name)) < 2:
        raise ValueError(f'{name} must be at least 2, got {getattr(self, name)}')

  def q_values(self):
    return _axis(self.q_steps, self.q_range, self.sites)

  def k_values(self):
    return _axis(self.k_steps, self.k_range, self.sites)

  @property
  def cell_count(self):
    return self.q_steps * self.k_steps
#endregion

#region Cells and grids
@dataclass(frozen=True)
class GridCell:
  k: float
  q: float
  eps_q: float
  delta1: float
  delta2: float
  growth1: float
  growth2: float
  stability: StabilityClass
  psi0_sq: float = None

  def csv_row(self, with_density=False):
    values = [self.k, self.q, self.eps_q, self.delta1, self.delta2, self.growth1, self.growth2]
    if with_density:
      values.insert(0, self.psi0_sq)
    return ','.join(format_float(v) for v in values) + ',' + self.stability.value


@dataclass(frozen=True, eq=False)
class StabilityGrid:
  """Per-cell spectra of a (q, k) scan, stored as k_steps x q_steps arrays."""
  spec: GridSpec
  psi0_sq: float
  k: np.ndarray
  q: np.ndarray
  eps_q: np.ndarray
  delta1: np.ndarray
  delta2: np.ndarray
  growth1: np.ndarray
  growth2: np.ndarray
  classes: np.ndarray

  def cells(self):
    for i, k in enumerate(self.k):
      for j, q in enumerate(self.q):
        yield GridCell(k=float(k), q=float(q), eps_q=float(self.eps_q[i, j]),
                       delta1=float(self.delta1[i, j]), delta2=float(self.delta2[i, j]),
                       growth1=float(self.growth1[i, j]), growth2=float(self.growth2[i, j]),
                       stability=StabilityClass(self.classes[i, j]), psi0_sq=self.psi0_sq)

  @property
  def failed_count(self):
    return int(np.sum(self.classes == StabilityClass.FAILED.value))


def class_counts(grid):
  """Number of cells per stability class, in declaration order, zeros omitted."""
  counts = {}
  for cls in StabilityClass:
    n = int(np.sum(grid.classes == cls.value))
    if n:
      counts[cls.value] = n
  return counts

def _classes(g1, g2, failed):
  out = np.full(g1.shape, StabilityClass.STABLE.value, dtype=object)
  out[(g1 > 0) & ~(g2 > 0)] = StabilityClass.UNSTABLE_1.value
  out[~(g1 > 0) & (g2 > 0)] = StabilityClass.UNSTABLE_2.value
  out[(g1 > 0) & (g2 > 0)] = StabilityClass.UNSTABLE_BOTH.value
  out[failed] = StabilityClass.FAILED.value
  return out
#endregion

#region Scanning
def _closed_rows(params, psi0_sq, cos_k, sin_k, q):
  psi0 = math.sqrt(psi0_sq)
  d1, d2 = _deltas(params.lambda11, params.lambda22, params.lambda12, psi0, psi0)
  arrays = closed_form_from_trig(params.K1, cos_k[:, None], sin_k[:, None],
                                 np.sin(q)[None, :], (np.sin(q / 2.0)**2)[None, :], d1, d2)
  shape = arrays['eps_q'].shape
  return (arrays['eps_q'], np.broadcast_to(arrays['delta1'], shape).copy(),
          np.broadcast_to(arrays['delta2'], shape).copy(), arrays['growth1'], arrays['growth2'])

def _matrix_rows(params, psi0_sq, k_values, q):
  rows = len(k_values)
  eps = np.full((rows, len(q)), np.nan)
  g1 = np.zeros_like(eps)
  g2 = np.zeros_like(eps)
  failed = np.zeros(eps.shape, dtype=bool)
  psi0 = math.sqrt(psi0_sq)
  d1, d2 = _deltas(params.lambda11, params.lambda22, params.lambda12, psi0, psi0)
  for i, k in enumerate(k_values):
    carrier = CarrierSpec.equal(params, k, psi0_sq)
    if params.equal_hopping:
      eps[i] = epsilon_q(params.K1, k, q)
    for j, qq in enumerate(q):
      try:
        g1[i, j], g2[i, j] = matrix_branch_growth(params, carrier, float(qq))
      except DnlsError:
        failed[i, j] = True
  return eps, np.full(eps.shape, float(d1)), np.full(eps.shape, float(d2)), g1, g2, failed

def _scan_chunk(args):
  params, psi0_sq, k_values, cos_k, sin_k, q, method = args
  if method == 'matrix':
    return _matrix_rows(params, psi0_sq, k_values, q)
  eps, d1, d2, g1, g2 = _closed_rows(params, psi0_sq, cos_k, sin_k, q)
  failed = ~(np.isfinite(eps) & np.isfinite(g1) & np.isfinite(g2))
  return eps, d1, d2, g1, g2, failed

def scan_plane(params, psi0_sq, grid=None, method=None, workers=1, logger=lambda s: None):
  """Classifies every (k, q) cell at equal background densities psi0_sq.

  method is 'closed' (K1 == K2 only) or 'matrix'; by default the closed
  form is used whenever it applies. Cells whose evaluation fails are
  marked FAILED instead of aborting the scan.
  """
  if not psi0_sq > 0:
    raise ValueError(f'Background density must be positive, got {psi0_sq}')
  grid = grid or GridSpec()
  if method is None:
    method = 'closed' if params.equal_hopping else 'matrix'
  if method not in ('closed', 'matrix'):
    raise ValueError(f'Unknown scan method: {method}')
  if method == 'closed' and not params.equal_hopping:
    raise ValueError('Closed-form scan needs K1 == K2; use method="matrix"')

  k_values = grid.k_values()
  q_values = grid.q_values()
  # trig factors are evaluated once on the full axes so chunking cannot change a cell
  cos_k = np.cos(k_values)
  sin_k = np.sin(k_values)
  workers = max(1, int(workers))
  bounds = np.linspace(0, len(k_values), min(workers, len(k_values)) + 1).astype(int)
  jobs = [(params, psi0_sq, k_values[a:b], cos_k[a:b], sin_k[a:b], q_values, method)
          for a, b in zip(bounds[:-1], bounds[1:])]

  logger(f'Scanning {grid.k_steps} x {grid.q_steps} cells ({method} form, {len(jobs)} chunk(s))')
  if len(jobs) == 1:
    parts = [_scan_chunk(jobs[0])]
  else:
    with ProcessPoolExecutor(max_workers=workers) as pool:
      parts = list(pool.map(_scan_chunk, jobs))

  eps, d1, d2, g1, g2, failed = (np.vstack(column) for column in zip(*parts))
  result = StabilityGrid(spec=grid, psi0_sq=psi0_sq, k=k_values, q=q_values, eps_q=eps,
                         delta1=d1, delta2=d2, growth1=g1, growth2=g2,
                         classes=_classes(g1, g2, failed))
  if result.failed_count:
    logger(f'{result.failed_count} cell(s) failed')
  return result

def scan_line(params, psi0_sq, k, q_values):
  """Cells along q at fixed carrier wave number k."""
  if not params.equal_hopping:
    raise UnsupportedClosedFormError(f'Growth curves need K1 == K2, got {params.K1}, {params.K2}')
  q_values = np.asarray(q_values, dtype=float)
  psi0 = math.sqrt(psi0_sq)
  d1, d2 = _deltas(params.lambda11, params.lambda22, params.lambda12, psi0, psi0)
  arrays = closed_form_from_trig(params.K1, math.cos(k), math.sin(k), np.sin(q_values),
                                 np.sin(q_values / 2.0)**2, d1, d2)
  return [GridCell(k=float(k), q=float(q), eps_q=float(arrays['eps_q'][i]),
                   delta1=float(d1), delta2=float(d2),
                   growth1=float(arrays['growth1'][i]), growth2=float(arrays['growth2'][i]),
                   stability=StabilityClass.from_growth(arrays['growth1'][i], arrays['growth2'][i]),
                   psi0_sq=psi0_sq)
          for i, q in enumerate(q_values)]

def scan_amplitude(params, k, q, psi0_sq_values):
  """Cells along the background density at fixed (k, q)."""
  cells = []
  for psi0_sq in psi0_sq_values:
    cells.extend(scan_line(params, float(psi0_sq), k, [q]))
  return cells
#endregion

#region Thresholds
def _onset(eps, omega):
  if eps < 0 and omega > 0:
    return -eps / omega
  if eps > 0 and omega < 0:
    return eps / abs(omega)
  return math.inf

def branch_thresholds(params, k, q):
  """Onset densities (psi0^2) of branches 1 and 2 at equal amplitudes."""
  eps = float(epsilon_q(params.K1, k, q))
  return _onset(eps, omega_uniform(params, 1)), _onset(eps, omega_uniform(params, 2))

def threshold_curve(params, k, q):
  """Smallest equal-amplitude density psi0^2 at which (k, q) turns unstable.

  inf where no density destabilizes the point, e.g. miscible couplings
  with cos k > 0.
  """
  return min(branch_thresholds(params, k, q))
#endregion

#region Export
def write_cells_csv(cells, path, with_density=False):
  header = ('psi0_sq,' if with_density else '') + CSV_HEADER
  try:
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
      f.write(header + '\n')
      for cell in cells:
        f.write(cell.csv_row(with_density) + '\n')
  except OSError as e:
    raise OSError(f'Unable to write stability data to {path}: {e}') from e

def export_csv(grid, path):
  """Writes the grid row-major (k outer, q inner) with a header line."""
  write_cells_csv(grid.cells(), path)
#endregion
