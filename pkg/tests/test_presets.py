import json
import math

import pytest

from dnlsmi.presets import preset_names, get_preset, MISCIBLE, IMMISCIBLE, KIND_GRID, KIND_SIMULATION
from dnlsmi.dnlsmi import run_preset, preset_config
from dnlsmi.utils import read_jsonl


def test_registry():
  assert preset_names() == ['fig1a', 'fig1b', 'fig2a', 'fig2b', 'fig2c', 'fig3a', 'fig3b']
  assert get_preset('fig1a').kind == KIND_GRID
  assert get_preset('fig3b').kind == KIND_SIMULATION
  with pytest.raises(ValueError):
    get_preset('fig4')

@pytest.mark.parametrize('name, l, s, t_end, params', [
  ('fig2a', 50, 100, 60.0, MISCIBLE),
  ('fig2b', 150, 100, 60.0, MISCIBLE),
  ('fig2c', 150, 50, 60.0, MISCIBLE),
  ('fig3a', 150, 5, 250.0, IMMISCIBLE),
  ('fig3b', 150, 10, 130.0, IMMISCIBLE),
])
def test_simulation_bundles(name, l, s, t_end, params):
  config = get_preset(name).config()
  assert (config.state.l, config.state.s) == (l, s)
  assert config.integrator.t_end == t_end
  assert config.integrator.dt == 1e-3
  assert config.model == params
  assert config.sites == 400
  assert config.state.alpha_ratio == 0.05

def test_coupling_sets():
  assert MISCIBLE.lambda12 == pytest.approx(0.993 * 100)
  assert MISCIBLE.lambda22 == pytest.approx(1.00298 * 100)
  assert IMMISCIBLE.lambda12 == pytest.approx(0.9709 * 100)
  assert IMMISCIBLE.lambda22 == pytest.approx(0.9417 * 100)

def test_grid_preset_artifacts(tmp_path):
  result = run_preset('fig1b', out=str(tmp_path))
  lines = (tmp_path / 'grid.csv').read_text(encoding='utf-8').splitlines()
  assert len(lines) == 400 * 400 + 1
  summary = result.summary()
  assert summary['failed'] == 0
  assert 'STABLE' not in summary['classes'] or summary['classes']['STABLE'] < 400 * 400
  config = json.loads((tmp_path / 'config.json').read_text(encoding='utf-8'))
  assert config['grid']['q_range'] == pytest.approx([0.0, math.pi / 4])

@pytest.mark.slow
def test_simulation_preset_artifacts(tmp_path):
  config = preset_config('fig2c', {'integrator': {'t_end': 20.0}})
  result = run_preset('fig2c', out=str(tmp_path), config=config)
  for name in ('trajectory.jsonl', 'density_s1.csv', 'density_s2.csv', 'growthfit.json', 'summary.json', 'config.json'):
    assert (tmp_path / name).exists()
  fit = json.loads((tmp_path / 'growthfit.json').read_text(encoding='utf-8'))
  assert fit['analytic_rate'] == pytest.approx(0.1863, abs=5e-4)
  assert fit['fitted_rate'] == pytest.approx(0.1863, rel=0.05)
  assert set(fit) >= {'rate', 'window', 'residual', 'analytic_rate', 'relative_error', 'growth_time', 'method'}
  records = read_jsonl(tmp_path / 'trajectory.jsonl')
  assert records[0]['sideband']['l'] == 150
  assert len(records[0]['sideband']['plus']) == 2
  assert result.simulation.localization[0].minimum <= 400
  summary = json.loads((tmp_path / 'summary.json').read_text(encoding='utf-8'))
  assert set(summary['participation_ratio']['1']) == {'final', 'min', 't_min'}
