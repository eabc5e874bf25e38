import os
import json
import math

import numpy as np

#region Exceptions
class DnlsError(Exception):
  """Base class for errors raised by dnlsmi computations."""
  pass


class DivergedStateError(DnlsError):
  """Raised when a lattice state contains non-finite amplitudes.

  t_last_finite holds the time of the last state known to be finite,
  or None when the offending state was handed in from outside.
  """
  def __init__(self, message, t_last_finite=None):
    super().__init__(message)
    self.t_last_finite = t_last_finite


class DriftToleranceError(DnlsError):
  """Raised when a conserved quantity drifts beyond its tolerance."""
  def __init__(self, quantity, drift, tolerance, t=None):
    super().__init__(f'{quantity} drift {drift:.3e} exceeds tolerance {tolerance:.3e}' + ('' if t is None else f' at t={t:g}'))
    self.quantity = quantity
    self.drift = drift
    self.tolerance = tolerance
    self.t = t


class UnsupportedClosedFormError(DnlsError):
  """Raised when a closed-form spectrum is requested for K1 != K2."""
  pass


class EigenSolverError(DnlsError):
  """Raised when an eigen-decomposition misses its residual target."""
  def __init__(self, message, residual):
    super().__init__(message)
    self.residual = residual
#endregion

#region Formatting
def format_float(x, digits=9):
  """Formats a float with a fixed number of significant digits.

  Non-finite values are written as inf, -inf and nan so that CSV files
  stay parseable by numpy.loadtxt and spreadsheet tools alike.
  """
  x = float(x)
  if math.isnan(x):
    return 'nan'
  if math.isinf(x):
    return 'inf' if x > 0 else '-inf'
  return f'{x:.{digits}g}'

def complex_pair(z):
  """Splits a complex number into a JSON-friendly [re, im] list."""
  z = complex(z)
  return [z.real, z.imag]

def pair_complex(pair):
  """Inverse of complex_pair."""
  return complex(pair[0], pair[1])

def json_default(obj):
  """Fallback encoder for numpy scalars and arrays in json.dump."""
  if isinstance(obj, np.integer):
    return int(obj)
  if isinstance(obj, np.floating):
    return float(obj)
  if isinstance(obj, np.ndarray):
    return obj.tolist()
  if isinstance(obj, complex):
    return complex_pair(obj)
  raise TypeError(f'Object of type {type(obj).__name__} is not JSON serializable')
#endregion

#region File output
def ensure_dir(path):
  try:
    os.makedirs(path, exist_ok=True)
  except OSError as e:
    raise OSError(f'Unable to create directory {path}: {e}') from e
  return path

def write_json(path, obj):
  try:
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
      json.dump(obj, f, indent=2, sort_keys=True, default=json_default)
      f.write('\n')
  except OSError as e:
    raise OSError(f'Unable to write {path}: {e}') from e

def write_jsonl(path, records):
  try:
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
      for record in records:
        f.write(json.dumps(record, sort_keys=True, default=json_default))
        f.write('\n')
  except OSError as e:
    raise OSError(f'Unable to write {path}: {e}') from e

def read_jsonl(path):
  with open(path, 'r', encoding='utf-8') as f:
    return [json.loads(line) for line in f if line.strip()]

def write_matrix_csv(path, matrix, digits=9):
  """Writes a 2-D real array as CSV, one row per line, no header."""
  try:
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
      for row in np.atleast_2d(matrix):
        f.write(','.join(format_float(v, digits) for v in row))
        f.write('\n')
  except OSError as e:
    raise OSError(f'Unable to write {path}: {e}') from e
#endregion
