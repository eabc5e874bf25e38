"""Command-line interface for dnlsmi functionality"""
import sys
import json
import math
import argparse
import functools

import numpy as np

from .dnlsmi import (evaluate_spectrum, phase_diagram, growth_curve, simulate, write_run,
                     run_presets, preset_config)
from .model import ModelParams, LatticeConfig, normalized_amplitude
from .bogoliubov import CarrierSpec, growth_time
from .config import RunConfig
from .stability import GridSpec, class_counts, CSV_HEADER
from .integrator import STATUS_DIVERGED
from .presets import preset_names, MISCIBLE, IMMISCIBLE
from .validation import run_validation, SUITES
from .utils import DnlsError, DivergedStateError, json_default, format_float

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_DIVERGED = 3

COUPLING_SETS = {'miscible': MISCIBLE, 'immiscible': IMMISCIBLE}

class UsageError(ValueError):
  pass

def main(argv=None):
  parser = argparse.ArgumentParser(prog='dnlsmi', description='Modulational instability of two-species lattice condensates')
  subparsers = parser.add_subparsers(help='The action to perform', dest='action')

  common = argparse.ArgumentParser(add_help=False)
  common.add_argument('--json', action='store_true', default=False, help='Print machine-readable JSON')
  common.add_argument('-q', '--quiet', action='store_true', default=False, help='Suppress progress messages')

  model = argparse.ArgumentParser(add_help=False)
  model.add_argument('--set', choices=sorted(COUPLING_SETS), help='Start from a published coupling set')
  model.add_argument('--K', type=float, help='Hopping energy of both species')
  model.add_argument('--K1', type=float, help='Hopping energy of species 1')
  model.add_argument('--K2', type=float, help='Hopping energy of species 2')
  model.add_argument('--lambda1', type=float, help='Intra-species coupling of species 1')
  model.add_argument('--lambda2', type=float, help='Intra-species coupling of species 2')
  model.add_argument('--lambda12', type=float, help='Inter-species coupling')

  run = argparse.ArgumentParser(add_help=False)
  run.add_argument('--preset', choices=preset_names(), help='Start from a figure preset')
  run.add_argument('--config', metavar='file', help='JSON configuration file')
  run.add_argument('--out', metavar='dir', help='Output directory')
  run.add_argument('--workers', type=int, help='Maximum number of worker processes')

  # Spectrum parser
  spectrum_parser = subparsers.add_parser('spectrum', help='Evaluate the excitation spectrum at one point', aliases=['sp'], parents=[common, model])
  spectrum_parser.add_argument('--psi0sq', type=float, help='Background density of both species (default 1/(2M+1))')
  spectrum_parser.add_argument('--psi0sq2', type=float, help='Background density of species 2 if different')
  _add_wave_args(spectrum_parser)
  spectrum_parser.set_defaults(func=cli_spectrum)

  # Phase diagram parser
  pd_parser = subparsers.add_parser('phase-diagram', help='Classify every cell of the (q, k) plane', aliases=['pd'], parents=[common, model, run])
  pd_parser.add_argument('--psi0sq', type=float, help='Background density of both species')
  pd_parser.add_argument('--q-steps', type=int, help='Samples along q')
  pd_parser.add_argument('--k-steps', type=int, help='Samples along k')
  pd_parser.add_argument('--q-range', type=float, nargs=2, metavar=('lo', 'hi'), help='Half-open q interval')
  pd_parser.add_argument('--k-range', type=float, nargs=2, metavar=('lo', 'hi'), help='Half-open k interval')
  pd_parser.add_argument('--sites', type=int, help='Lattice size for --admissible')
  pd_parser.add_argument('--admissible', action='store_true', default=None, help='Only sample wave numbers 2*pi*n/M')
  pd_parser.add_argument('--method', choices=['closed', 'matrix'], help='Evaluation path, closed form by default')
  pd_parser.add_argument('--strict', action='store_true', default=False, help='Fail if any cell could not be evaluated')
  pd_parser.set_defaults(func=cli_phase_diagram)

  # Curve parser
  curve_parser = subparsers.add_parser('curve', help='Growth rates along q, or along the background density', aliases=['cv'], parents=[common, model])
  curve_parser.add_argument('--psi0sq', type=float, help='Background density for a sweep along q')
  curve_parser.add_argument('--q-range', type=float, nargs=2, metavar=('lo', 'hi'), default=[0.0, 2 * math.pi], help='Half-open q interval')
  curve_parser.add_argument('--q-steps', type=int, default=400, help='Samples along q')
  curve_parser.add_argument('--psi0sq-range', type=float, nargs=2, metavar=('lo', 'hi'), help='Sweep the density instead of q')
  curve_parser.add_argument('--psi0sq-steps', type=int, default=100, help='Samples along the density')
  curve_parser.add_argument('--out', metavar='file', help='CSV file to write instead of stdout')
  _add_wave_args(curve_parser)
  curve_parser.set_defaults(func=cli_curve)

  # Simulate and growth-rate parsers
  for name, alias, help_text, func in (('simulate', 'sim', 'Evolve a modulated plane wave', cli_simulate),
                                       ('growth-rate', 'gr', 'Evolve and fit the sideband growth rate', cli_growth_rate)):
    sim_parser = subparsers.add_parser(name, help=help_text, aliases=[alias], parents=[common, model, run])
    sim_parser.add_argument('--sites', type=int, help='Lattice size M')
    sim_parser.add_argument('--l', type=int, help='Carrier wave index, k = 2*pi*l/M')
    sim_parser.add_argument('--s', type=int, help='Perturbation wave index, q = 2*pi*s/M')
    sim_parser.add_argument('--amplitude', type=float, help='Background amplitude A (default 1/sqrt(2M+1))')
    sim_parser.add_argument('--alpha-ratio', type=float, help='Modulation amplitude as a fraction of A')
    sim_parser.add_argument('--atoms', type=float, help='Atom number N for the superfluid-regime check')
    sim_parser.add_argument('--dt', type=float, help='Time step')
    sim_parser.add_argument('--t-end', type=float, help='Final time')
    sim_parser.add_argument('--observe-every', type=int, help='Steps between observations')
    sim_parser.add_argument('--snapshot-every', type=int, help='Steps between density snapshots')
    sim_parser.add_argument('--method', choices=['mode', 'sideband'], help='Growth-fit method')
    if func is cli_growth_rate:
      sim_parser.add_argument('--expect', type=float, help='Expected growth rate')
      sim_parser.add_argument('--rtol', type=float, default=0.05, help='Relative tolerance for --expect')
    sim_parser.set_defaults(func=func)

  # Preset parser
  preset_parser = subparsers.add_parser('preset', help='Run figure presets', aliases=['pr'], parents=[common])
  preset_parser.add_argument('names', metavar='name', nargs='+', choices=preset_names() + ['all'], help='Presets to run, or all')
  preset_parser.add_argument('--out', metavar='dir', help='Root directory for the preset outputs')
  preset_parser.add_argument('--workers', type=int, default=1, help='Maximum number of worker processes')
  preset_parser.set_defaults(func=cli_preset)

  # Validate parser
  validate_parser = subparsers.add_parser('validate', help='Run the self-validation suites', aliases=['val'], parents=[common])
  validate_parser.add_argument('--samples', type=int, default=1000, help='Random parameter sets for the oracle suite')
  validate_parser.add_argument('--seed', type=int, default=0, help='Seed of the oracle samples')
  validate_parser.add_argument('--suite', action='append', choices=SUITES, help='Run only these suites')
  validate_parser.add_argument('--mutate', action='store_true', default=False, help='Check the oracle against a broken closed form')
  validate_parser.set_defaults(func=cli_validate)

  args = parser.parse_args(argv)
  if not getattr(args, 'func', None):
    parser.print_usage(sys.stderr)
    return EXIT_USAGE
  try:
    return args.func(args)
  except UsageError as e:
    print(f'{parser.prog}: error: {e}', file=sys.stderr)
    return EXIT_USAGE
  except DivergedStateError as e:
    print(f'{parser.prog}: diverged: {e}', file=sys.stderr)
    return EXIT_DIVERGED
  except (DnlsError, ValueError, OSError) as e:
    print(f'{parser.prog}: failed: {e}', file=sys.stderr)
    return EXIT_FAILURE

#region Argument helpers
def _arguments(func):
  """Reports a ValueError raised while turning arguments into inputs as a usage error."""
  @functools.wraps(func)
  def wrapper(*args, **kwargs):
    try:
      return func(*args, **kwargs)
    except UsageError:
      raise
    except ValueError as e:
      raise UsageError(str(e)) from e
  return wrapper

def _add_wave_args(parser):
  parser.add_argument('--k', type=float, help='Carrier wave number in radians')
  parser.add_argument('--q', type=float, help='Perturbation wave number in radians')
  parser.add_argument('--l', type=int, help='Carrier wave index (needs --sites)')
  parser.add_argument('--s', type=int, help='Perturbation wave index (needs --sites)')
  parser.add_argument('--sites', type=int, default=400, help='Lattice size for --l/--s and the default density')

def _logger(args):
  if args.quiet:
    return lambda s: None
  return lambda s: print(s, file=sys.stderr)

def _emit(args, obj, text):
  if args.json:
    print(json.dumps(obj, indent=2, sort_keys=True, default=json_default))
  else:
    print(text)

def _model_overrides(args):
  d = {'K1': args.K if args.K1 is None else args.K1,
       'K2': args.K if args.K2 is None else args.K2,
       'lambda11': args.lambda1, 'lambda22': args.lambda2, 'lambda12': args.lambda12}
  return {k: v for k, v in d.items() if v is not None}

@_arguments
def _params(args, base=None):
  base = COUPLING_SETS[args.set] if args.set else (base or ModelParams())
  values = base.to_dict()
  values.update(_model_overrides(args))
  return ModelParams.from_dict(values)

@_arguments
def _wave(args, radians, index, name, required=True):
  if radians is not None and index is not None:
    raise UsageError(f'Give either --{name} or its index, not both')
  if index is not None:
    return LatticeConfig(args.sites).wave_number(index)
  if radians is None and required:
    raise UsageError(f'--{name} (or its index with --sites) is required')
  return radians

@_arguments
def _run_config(args):
  config = preset_config(args.preset) if args.preset else RunConfig()
  if args.config:
    config = RunConfig.load(args.config, base=config)
  if args.set or _model_overrides(args):
    config = RunConfig.from_dict({'model': _params(args, config.model).to_dict()}, base=config)
  config = config.with_overrides('lattice', sites=getattr(args, 'sites', None))
  config = config.with_overrides('out', out=args.out)
  return config.with_overrides('workers', workers=args.workers)
#endregion

#region Spectrum
def _spectrum_text(result):
  lines = [f'{"eps_q":<14}{format_float(result.epsilon_q)}',
           f'{"delta1":<14}{format_float(result.delta1)}',
           f'{"delta2":<14}{format_float(result.delta2)}']
  for name, w in zip(('omega+_1', 'omega-_1', 'omega+_2', 'omega-_2'), result.omega):
    lines.append(f'{name:<14}{format_float(w.real)} {format_float(w.imag)}i')
  lines += [f'{"growth1":<14}{format_float(result.growth1)}',
            f'{"growth2":<14}{format_float(result.growth2)}',
            f'{"growth_time":<14}{format_float(growth_time(result.growth))}',
            f'{"class":<14}{result.stability.describe()}']
  return '\n'.join(lines)

def cli_spectrum(args):
  params = _params(args)
  k = _wave(args, args.k, args.l, 'k')
  q = _wave(args, args.q, args.s, 'q')
  psi1 = args.psi0sq if args.psi0sq is not None else normalized_amplitude(args.sites)**2
  psi2 = args.psi0sq2 if args.psi0sq2 is not None else psi1
  if psi1 < 0 or psi2 < 0:
    raise UsageError('Background densities must be nonnegative')
  carrier = CarrierSpec.create(params, k, math.sqrt(psi1), math.sqrt(psi2))
  result = evaluate_spectrum(params, carrier, q, logger=_logger(args))
  d = result.to_dict()
  d.update({'k': k, 'mu1': carrier.mu1, 'mu2': carrier.mu2})
  _emit(args, d, _spectrum_text(result))
  return EXIT_OK
#endregion

#region Scans
@_arguments
def _grid_config(args):
  values = {'q_steps': args.q_steps, 'k_steps': args.k_steps, 'psi0_sq': args.psi0sq,
            'q_range': args.q_range, 'k_range': args.k_range, 'admissible': args.admissible}
  config = _run_config(args).with_overrides('grid', **values)
  return config, config.grid_spec()

def cli_phase_diagram(args):
  logger = _logger(args)
  config, grid = _grid_config(args)
  out = config.out_dir(args.preset or 'phase-diagram')
  result = phase_diagram(config.model, config.grid_psi0_sq(), grid=grid, method=args.method,
                         workers=config.workers, out=out, logger=logger)
  counts = class_counts(result)
  text = '\n'.join(f'{name:<14}{n}' for name, n in counts.items())
  _emit(args, {'out': out, 'classes': counts, 'failed': result.failed_count}, text)
  if args.strict and result.failed_count:
    return EXIT_FAILURE
  return EXIT_OK

def _cell_dict(cell):
  d = {'k': cell.k, 'q': cell.q, 'eps_q': cell.eps_q, 'delta1': cell.delta1, 'delta2': cell.delta2,
       'growth1': cell.growth1, 'growth2': cell.growth2, 'class': cell.stability.value}
  if cell.psi0_sq is not None:
    d['psi0_sq'] = cell.psi0_sq
  return d

@_arguments
def _sweep_values(args):
  if args.psi0sq_range:
    return np.linspace(args.psi0sq_range[0], args.psi0sq_range[1], args.psi0sq_steps)
  return GridSpec(q_steps=args.q_steps, k_steps=2, q_range=tuple(args.q_range)).q_values()

def cli_curve(args):
  params = _params(args)
  k = _wave(args, args.k, args.l, 'k')
  q = _wave(args, args.q, args.s, 'q', required=args.psi0sq_range is not None)
  psi0_sq = args.psi0sq if args.psi0sq is not None else normalized_amplitude(args.sites)**2
  values = _sweep_values(args)
  if args.psi0sq_range:
    cells = growth_curve(params, psi0_sq, k, psi0_sq_values=values, q=q, path=args.out, logger=_logger(args))
  else:
    cells = growth_curve(params, psi0_sq, k, q_values=values, path=args.out, logger=_logger(args))
  if args.out and not args.json:
    return EXIT_OK
  with_density = args.psi0sq_range is not None
  header = ('psi0_sq,' if with_density else '') + CSV_HEADER
  text = '\n'.join([header] + [cell.csv_row(with_density) for cell in cells])
  _emit(args, [_cell_dict(cell) for cell in cells], text)
  return EXIT_OK
#endregion

#region Simulations
@_arguments
def _simulation_config(args):
  config = _run_config(args)
  config = config.with_overrides('state', l=args.l, s=args.s, amplitude=args.amplitude, alpha_ratio=args.alpha_ratio,
                                 atoms=args.atoms)
  config = config.with_overrides('integrator', dt=args.dt, t_end=args.t_end, observe_every=args.observe_every,
                                 snapshot_every=args.snapshot_every)
  config = config.with_overrides('fit', method=args.method)
  config.modulated_spec()
  config.carrier()
  return config

def _run_simulation(args):
  logger = _logger(args)
  config = _simulation_config(args)
  result = simulate(config, logger=logger)
  out = config.out_dir(args.preset or 'simulate')
  write_run(result, out, logger=logger)
  return result, out

def _status_code(trajectory):
  if trajectory.status == STATUS_DIVERGED:
    return EXIT_DIVERGED
  return EXIT_OK if trajectory.ok else EXIT_FAILURE

def _localization_text(localization):
  if localization.minimum is None:
    return 'undefined'
  return f'{format_float(localization.minimum)} at t={format_float(localization.t_min)}, final {format_float(localization.final)}'

def cli_simulate(args):
  result, out = _run_simulation(args)
  summary = dict(result.summary(), out=out)
  text = '\n'.join([f'{"status":<14}{summary["status"]}',
                    f'{"t_final":<14}{format_float(summary["t_final"])}',
                    f'{"norm drift":<14}{format_float(max(summary["drift"]["norm1"], summary["drift"]["norm2"]))}',
                    f'{"energy drift":<14}{format_float(summary["drift"]["energy"])}',
                    f'{"growth rate":<14}{format_float(result.fit.rate)} ({result.fit.flag})',
                    f'{"min PR 1":<14}{_localization_text(result.localization[0])}',
                    f'{"min PR 2":<14}{_localization_text(result.localization[1])}',
                    f'{"out":<14}{out}'])
  _emit(args, summary, text)
  return _status_code(result.trajectory)

def _within(measured, expected, rtol):
  if expected == 0:
    return measured == 0
  return abs(measured - expected) <= rtol * abs(expected)

def cli_growth_rate(args):
  result, out = _run_simulation(args)
  fit = result.fit
  d = dict(fit.to_dict(), out=out, status=result.trajectory.status)
  text = '\n'.join([f'{"fitted":<14}{format_float(fit.rate)} ({fit.flag})',
                    f'{"species 1":<14}{format_float(fit.species_rate(1))}',
                    f'{"species 2":<14}{format_float(fit.species_rate(2))}',
                    f'{"analytic":<14}{format_float(fit.analytic_rate)}',
                    f'{"growth_time":<14}{format_float(growth_time(fit.rate))}',
                    f'{"method":<14}{fit.method}'])
  code = _status_code(result.trajectory)
  if args.expect is not None:
    passed = _within(fit.rate, args.expect, args.rtol)
    d['expect'] = {'rate': args.expect, 'rtol': args.rtol, 'passed': passed}
    text += f'\n{"expect":<14}{format_float(args.expect)} +/- {args.rtol:g} ({"pass" if passed else "FAIL"})'
    if code == EXIT_OK and not passed:
      code = EXIT_FAILURE
  _emit(args, d, text)
  return code
#endregion

#region Presets and validation
def cli_preset(args):
  names = preset_names() if 'all' in args.names else args.names
  summaries = run_presets(names, out_root=args.out, workers=args.workers, logger=_logger(args))
  lines = []
  for summary in summaries:
    if 'classes' in summary:
      detail = ', '.join(f'{name}={n}' for name, n in summary['classes'].items())
    else:
      detail = f'{summary["status"]}, rate {format_float(summary["fit"]["fitted_rate"])} ({summary["fit"]["flag"]})'
    lines.append(f'{summary["preset"]:<8}{detail}  -> {summary["out"]}')
  _emit(args, summaries, '\n'.join(lines))
  if any(s.get('status') == STATUS_DIVERGED for s in summaries):
    return EXIT_DIVERGED
  return EXIT_OK

def cli_validate(args):
  if args.samples < 1:
    raise UsageError(f'--samples must be positive, got {args.samples}')
  suites = tuple(args.suite) if args.suite else SUITES
  report = run_validation(samples=args.samples, seed=args.seed, mutate=args.mutate, suites=suites, logger=_logger(args))
  text = '\n'.join(f'{name:<16}{"PASS" if r["passed"] else "FAIL"}' for name, r in report['suites'].items())
  _emit(args, report, text)
  return EXIT_OK if report['passed'] else EXIT_FAILURE
#endregion
