
import pytest

from dnlsmi.presets import MISCIBLE, IMMISCIBLE

PSI0_SQ = 1.0 / 801

def pytest_configure(config):
  config.addinivalue_line('markers', 'slow: long lattice simulations of the figure presets')

@pytest.fixture
def miscible():
  return MISCIBLE

@pytest.fixture
def immiscible():
  return IMMISCIBLE

@pytest.fixture
def psi0_sq():
  return PSI0_SQ
