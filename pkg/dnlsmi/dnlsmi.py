"""Top-level API exposure of package actions"""

__version__ = "0.1.0"

import os
import math
from dataclasses import dataclass
from concurrent.futures import ProcessPoolExecutor

from .bogoliubov import (SpectrumResult, spectrum, bogoliubov_matrix, matrix_branch_growth,
                         unstable_mode, _deltas)
from .stability import scan_plane, scan_line, scan_amplitude, export_csv, write_cells_csv, class_counts
from .integrator import evolve, drift_report
from .experiments import (build_modulated_state, SidebandObserver, ParticipationObserver, measure_growth_rate,
                          instability_transfer_metric, localization_history)
from .model import superfluid_regime_check
from .presets import get_preset, KIND_GRID
from .utils import ensure_dir, write_json

def _warn(params, logger, atoms=None, sites=None):
  for warning in params.warnings():
    logger(f'Warning: {warning}')
  if atoms is not None:
    report = superfluid_regime_check(params, atoms, sites)
    logger(report.message if report.passed else f'Warning: {report.message}')

#region Spectra
def evaluate_spectrum(params, carrier, q, logger=lambda s: None):
  """Branch frequencies at q; falls back to the linearization matrix when K1 != K2.

  On the matrix path eps_q is nan (it is not a single number for unequal
  hopping) and omega lists the eigenvalues by decreasing real part.
  """
  _warn(params, logger)
  if params.equal_hopping:
    return spectrum(params, carrier, q)
  logger('K1 != K2, using the linearization matrix')
  modes = bogoliubov_matrix(params, carrier, q)
  g1, g2 = matrix_branch_growth(params, carrier, q, modes=modes)
  d1, d2 = _deltas(params.lambda11, params.lambda22, params.lambda12, carrier.psi0_1, carrier.psi0_2)
  omega = tuple(complex(w) for w in sorted(modes.eigenvalues, key=lambda w: (-w.real, -w.imag)))
  return SpectrumResult(q=float(q), epsilon_q=math.nan, delta1=float(d1), delta2=float(d2),
                        omega=omega, growth1=g1, growth2=g2)

def analytic_growth_rate(params, carrier, q):
  if params.equal_hopping:
    return spectrum(params, carrier, q).growth
  return max(matrix_branch_growth(params, carrier, q))
#endregion

#region Scans
def phase_diagram(params, psi0_sq, grid=None, method=None, workers=1, out=None, logger=lambda s: None):
  """Scans the (q, k) plane; writes grid.csv to out when given."""
  _warn(params, logger)
  result = scan_plane(params, psi0_sq, grid=grid, method=method, workers=workers, logger=logger)
  if out:
    ensure_dir(out)
    path = os.path.join(out, 'grid.csv')
    logger(f'Writing {path}')
    export_csv(result, path)
  return result

def growth_curve(params, psi0_sq, k, q_values=None, psi0_sq_values=None, q=None, path=None, logger=lambda s: None):
  """Cells along q at fixed k, or along psi0^2 at fixed (k, q)."""
  _warn(params, logger)
  if psi0_sq_values is not None:
    if q is None:
      raise ValueError('A density sweep needs a fixed q')
    cells = scan_amplitude(params, k, q, psi0_sq_values)
  else:
    cells = scan_line(params, psi0_sq, k, q_values)
  if path:
    logger(f'Writing {path}')
    write_cells_csv(cells, path, with_density=psi0_sq_values is not None)
  return cells
#endregion

#region Simulations
@dataclass(eq=False)
class SimulationResult:
  config: object
  trajectory: object
  fit: object
  analytic_rate: float
  transfer: object
  localization: tuple

  def summary(self):
    drift = drift_report(self.trajectory)
    return {'status': self.trajectory.status, 'message': self.trajectory.message,
            't_final': self.trajectory.t_last_finite,
            'fit': self.fit.to_dict(),
            'drift': drift.to_dict(),
            'participation_ratio': {'1': self.localization[0].to_dict(), '2': self.localization[1].to_dict()},
            'transfer_crossings': self.transfer.crossings}


def simulate(config, logger=lambda s: None):
  """Evolves the modulated plane wave described by config and fits its growth."""
  params = config.model
  _warn(params, logger, atoms=config.state.atoms, sites=config.sites)
  spec = config.modulated_spec()
  carrier = config.carrier()
  q = config.perturbation_q()
  logger(f'Simulating l={spec.l}, s={spec.s} on {spec.M} sites')

  state = build_modulated_state(spec)
  trajectory = evolve(state, params, config.integrator,
                      observers=[SidebandObserver(spec.l, spec.s), ParticipationObserver()], logger=logger)
  analytic = analytic_growth_rate(params, carrier, q)
  mode = unstable_mode(params, carrier, q) if config.fit.method == 'mode' else None
  fit = measure_growth_rate(trajectory, analytic, method=config.fit.method, mode=mode,
                            window=config.fit.window())
  logger(f'Fitted growth rate {fit.rate:.6g} ({fit.flag}), analytic {analytic:.6g}')
  return SimulationResult(config=config, trajectory=trajectory, fit=fit, analytic_rate=analytic,
                          transfer=instability_transfer_metric(trajectory),
                          localization=localization_history(trajectory))

def write_run(result, out, logger=lambda s: None):
  """Writes trajectory.jsonl, density CSVs, growthfit.json, summary.json and config.json to out."""
  ensure_dir(out)
  logger(f'Writing run artifacts to {out}')
  result.trajectory.write_jsonl(os.path.join(out, 'trajectory.jsonl'))
  for species in (1, 2):
    result.trajectory.write_density_csv(os.path.join(out, f'density_s{species}.csv'), species)
  write_json(os.path.join(out, 'growthfit.json'), result.fit.to_dict())
  write_json(os.path.join(out, 'summary.json'), result.summary())
  write_json(os.path.join(out, 'config.json'), result.config.to_dict())
#endregion

#region Presets
@dataclass(eq=False)
class PresetResult:
  name: str
  kind: str
  out: str
  grid: object = None
  simulation: object = None

  def summary(self):
    d = {'preset': self.name, 'kind': self.kind, 'out': self.out}
    if self.grid is not None:
      d['classes'] = class_counts(self.grid)
      d['failed'] = self.grid.failed_count
    if self.simulation is not None:
      d.update(self.simulation.summary())
    return d


def preset_config(name, overrides=None):
  """The preset's RunConfig with an optional partial dict layered on top."""
  config = get_preset(name).config()
  if overrides:
    config = type(config).from_dict(overrides, base=config)
  return config

def run_preset(name, out=None, workers=None, config=None, logger=lambda s: None):
  """Runs a named preset and writes its artifacts under out (or the default run root)."""
  entry = get_preset(name)
  config = config or entry.config()
  out = out or config.out_dir(name)
  workers = workers or config.workers
  logger(f'Running preset {name}: {entry.description}')
  ensure_dir(out)
  write_json(os.path.join(out, 'config.json'), config.to_dict())

  if entry.kind == KIND_GRID:
    grid = phase_diagram(config.model, config.grid_psi0_sq(), grid=config.grid_spec(),
                         workers=workers, out=out, logger=logger)
    return PresetResult(name=name, kind=entry.kind, out=out, grid=grid)

  result = simulate(config, logger=logger)
  write_run(result, out, logger=logger)
  return PresetResult(name=name, kind=entry.kind, out=out, simulation=result)

def _preset_job(args):
  name, out = args
  return run_preset(name, out=out).summary()

def run_presets(names, out_root=None, workers=1, logger=lambda s: None):
  """Runs several presets, in parallel when workers > 1; summaries keep the order of names."""
  for name in names:
    get_preset(name)
  outs = [os.path.join(out_root, name) if out_root else None for name in names]
  if workers <= 1 or len(names) == 1:
    return [run_preset(name, out=out, workers=workers, logger=logger).summary() for name, out in zip(names, outs)]
  logger(f'Running {len(names)} presets on {workers} workers')
  with ProcessPoolExecutor(max_workers=workers) as pool:
    return list(pool.map(_preset_job, zip(names, outs)))
#endregion
