import math

import numpy as np
import pytest

from dnlsmi.model import ModelParams
from dnlsmi.bogoliubov import (CarrierSpec, StabilityClass, spectrum, spectrum_long_wavelength, classify,
                               chemical_potential, epsilon_q, doppler_shift, delta_sigma, omega_uniform,
                               critical_amplitude, growth_time, bogoliubov_matrix, unstable_mode,
                               matrix_branch_growth, linearization_matrix, spectrum_arrays)
from dnlsmi.validation import _matched_error
from dnlsmi.utils import UnsupportedClosedFormError

K_UNSTABLE = 3 * math.pi / 4


class TestClosedForm:
  def test_epsilon_and_doppler(self):
    assert epsilon_q(1.0, K_UNSTABLE, math.pi / 4) == pytest.approx(-0.414214, abs=1e-6)
    assert doppler_shift(1.0, math.pi / 2, 0.3) == pytest.approx(2 * math.sin(0.3))

  def test_chemical_potential(self, miscible):
    carrier = CarrierSpec.equal(miscible, K_UNSTABLE, 1.0 / 1602)
    assert chemical_potential(miscible, carrier, 1) == pytest.approx(1.5386206, rel=1e-7)
    assert carrier.mu1 == chemical_potential(miscible, carrier, 1)
    assert carrier.mu2 == pytest.approx(-2 * math.cos(K_UNSTABLE) + (100.298 + 99.3) / 1602)

  def test_uniform_interactions(self, miscible, immiscible):
    assert omega_uniform(miscible, 1) == pytest.approx(1.69778, rel=1e-5)
    assert omega_uniform(miscible, 2) == pytest.approx(398.898, rel=1e-5)
    assert omega_uniform(immiscible, 1) == pytest.approx(-0.0975, abs=1e-3)
    assert omega_uniform(immiscible, 2) == pytest.approx(388.44, abs=0.01)

  def test_delta_ordering_and_product(self, miscible):
    d1 = delta_sigma(miscible, 0.04, 0.07, 1)
    d2 = delta_sigma(miscible, 0.04, 0.07, 2)
    assert d1 <= d2
    assert d1 * d2 == pytest.approx(4 * 0.04**2 * 0.07**2 * (100 * 100.298 - 99.3**2), rel=1e-12)
    assert d1 + d2 == pytest.approx(2 * (100 * 0.04**2 + 100.298 * 0.07**2), rel=1e-12)

  def test_miscible_growth_rate(self, miscible, psi0_sq):
    result = spectrum(miscible, CarrierSpec.equal(miscible, K_UNSTABLE, psi0_sq), math.pi / 4)
    assert result.growth2 == pytest.approx(0.1863, abs=5e-4)
    assert result.growth1 == 0.0
    assert result.stability is StabilityClass.UNSTABLE_2
    assert result.stability.describe() == 'PartiallyUnstable(2)'
    assert result.omega[0].imag == 0.0 and result.omega[1].imag == 0.0
    assert result.omega[2].imag == pytest.approx(result.growth2)
    assert result.omega[3].imag == pytest.approx(-result.growth2)

  @pytest.mark.parametrize('q, rate', [(math.pi / 40, 0.0458), (math.pi / 20, 0.0902)])
  def test_immiscible_growth_rates(self, immiscible, psi0_sq, q, rate):
    result = spectrum(immiscible, CarrierSpec.equal(immiscible, K_UNSTABLE, psi0_sq), q)
    assert result.growth == pytest.approx(rate, abs=5e-4)

  @pytest.mark.parametrize('k, q, expected', [
    (math.pi / 4, math.pi / 2, StabilityClass.STABLE),
    (3 * math.pi / 4, math.pi / 2, StabilityClass.STABLE),
    (3 * math.pi / 4, math.pi / 4, StabilityClass.UNSTABLE_2),
  ])
  def test_labelled_points(self, miscible, psi0_sq, k, q, expected):
    assert classify(miscible, CarrierSpec.equal(miscible, k, psi0_sq), q) is expected

  def test_zero_q_is_stable(self, miscible, psi0_sq):
    result = spectrum(miscible, CarrierSpec.equal(miscible, K_UNSTABLE, psi0_sq), 0.0)
    assert result.growth1 == 0.0 and result.growth2 == 0.0
    assert result.stability is StabilityClass.STABLE

  def test_decoupled_matches_single_species(self, psi0_sq):
    params = ModelParams(lambda11=100.0, lambda22=150.0, lambda12=0.0)
    k, q = 2.5, 0.4
    result = spectrum(params, CarrierSpec.equal(params, k, psi0_sq), q)
    eps = 4 * math.cos(k) * math.sin(q / 2)**2
    for branch, lam in ((1, 100.0), (2, 150.0)):
      radicand = eps * (eps + 2 * lam * psi0_sq)
      plus, minus = result.branches(branch)
      assert plus.real == pytest.approx(2 * math.sin(k) * math.sin(q) + math.sqrt(max(radicand, 0)), abs=1e-12)
      assert abs(plus.imag) == pytest.approx(math.sqrt(max(-radicand, 0)), abs=1e-12)

  def test_half_pi_carrier_is_doppler_only(self, miscible, psi0_sq):
    q = 0.8
    result = spectrum(miscible, CarrierSpec.equal(miscible, math.pi / 2, psi0_sq), q)
    np.testing.assert_allclose(np.array(result.omega).real, 2 * math.sin(q), atol=1e-6)
    assert result.growth < 1e-6

  def test_unequal_hopping_rejected(self, psi0_sq):
    params = ModelParams(K1=1.0, K2=2.0)
    with pytest.raises(UnsupportedClosedFormError):
      spectrum(params, CarrierSpec.equal(params, 1.0, psi0_sq), 0.5)

  @pytest.mark.parametrize('psi0_1, psi0_2', [(0.035, 0.035), (0.05, 0.08), (0.3, 0.0)])
  def test_branch_sum_is_twice_doppler(self, miscible, psi0_1, psi0_2):
    k, q = np.meshgrid(np.linspace(0, 2 * math.pi, 17), np.linspace(0, 2 * math.pi, 13))
    arrays = spectrum_arrays(miscible, k, q, psi0_1, psi0_2)
    for species in (1, 2):
      total = arrays[f'omega_plus_{species}'] + arrays[f'omega_minus_{species}']
      np.testing.assert_allclose(total, 4 * np.sin(k) * np.sin(q), atol=1e-12)

  @pytest.mark.parametrize('name', ['miscible', 'immiscible'])
  def test_complex_exactly_when_radicand_negative(self, request, name):
    params = request.getfixturevalue(name)
    k, q = np.meshgrid(np.linspace(0, 2 * math.pi, 41), np.linspace(0, 2 * math.pi, 37))
    arrays = spectrum_arrays(params, k, q, 0.2, 0.2)
    for species in (1, 2):
      radicand = arrays['eps_q'] * (arrays['eps_q'] + arrays[f'delta{species}'])
      complex_branch = arrays[f'omega_plus_{species}'].imag != 0
      assert np.array_equal(complex_branch, radicand < 0)
      assert np.array_equal(arrays[f'growth{species}'] > 0, radicand < 0)

  def test_growth_time(self):
    assert growth_time(0.0) == math.inf
    assert growth_time(0.5) == pytest.approx(2.0)

  def test_to_dict(self, miscible, psi0_sq):
    d = spectrum(miscible, CarrierSpec.equal(miscible, K_UNSTABLE, psi0_sq), math.pi / 4).to_dict()
    assert d['class'] == 'UNSTABLE_2'
    assert d['growth_time'] == pytest.approx(1 / 0.1863, rel=5e-3)
    assert len(d['omega_plus_2']) == 2


class TestLongWavelength:
  @pytest.mark.parametrize('name', ['miscible', 'immiscible'])
  def test_agrees_with_closed_form(self, request, name, psi0_sq):
    params = request.getfixturevalue(name)
    carrier = CarrierSpec.equal(params, 1e-3, psi0_sq)
    full = np.array(spectrum(params, carrier, 1e-3).omega)
    approx = np.array(spectrum_long_wavelength(params, carrier, 1e-3).omega)
    assert np.max(np.abs(full - approx)) / np.max(np.abs(full)) <= 1e-4


class TestCriticalAmplitude:
  def test_published_sets(self, miscible, immiscible):
    assert critical_amplitude(miscible) == pytest.approx(4 / 1.69778, rel=1e-4)
    assert critical_amplitude(miscible) == pytest.approx(2.356, abs=1e-3)
    assert critical_amplitude(immiscible) == pytest.approx(41.0, abs=0.1)

  def test_unstable_everywhere_above_critical(self, miscible):
    psi0_sq = 1.05 * critical_amplitude(miscible)
    for q in np.linspace(0.1, 2 * math.pi - 0.1, 25):
      assert spectrum(miscible, CarrierSpec.equal(miscible, K_UNSTABLE, psi0_sq), q).growth > 0


class TestLinearizationMatrix:
  def test_eigenvalues_match_closed_form(self, miscible):
    carrier = CarrierSpec.create(miscible, 2.2, 0.05, 0.08)
    for q in (0.3, 1.7, 4.0):
      modes = bogoliubov_matrix(miscible, carrier, q)
      closed = np.array(spectrum(miscible, carrier, q).omega)
      scale = max(1.0, np.linalg.norm(modes.matrix, 2))
      assert _matched_error(closed, modes.eigenvalues) / scale <= 1e-9
      assert modes.residual <= 1e-10

  def test_unequal_hopping(self, psi0_sq):
    params = ModelParams(K1=1.0, K2=1.5, lambda11=100.0, lambda22=100.0, lambda12=90.0)
    carrier = CarrierSpec.equal(params, 2.0, psi0_sq)
    modes = bogoliubov_matrix(params, carrier, 0.5)
    assert modes.eigenvalues.shape == (4,)
    assert linearization_matrix(params, carrier, 0.5).shape == (4, 4)

  @pytest.mark.parametrize('q', [0.3, 2.0, 5.5])
  def test_decoupled_matrix_is_block_diagonal(self, q):
    params = ModelParams(lambda11=100.0, lambda22=150.0, lambda12=0.0)
    carrier = CarrierSpec.create(params, 2.2, 0.05, 0.08)
    m = linearization_matrix(params, carrier, q)
    assert not np.any(m[:2, 2:]) and not np.any(m[2:, :2])
    for block, lam, psi0 in ((m[:2, :2], 100.0, 0.05), (m[2:, 2:], 150.0, 0.08)):
      eps = 4 * math.cos(2.2) * math.sin(q / 2)**2
      root = np.lib.scimath.sqrt(eps * (eps + 2 * lam * psi0**2))
      single = 2 * math.sin(2.2) * math.sin(q) + np.array([root, -root])
      assert _matched_error(single, np.linalg.eigvals(block)) <= 1e-12

  @pytest.mark.parametrize('psi0_1, psi0_2', [(0.035, 0.035), (0.05, 0.08)])
  def test_zero_q_modes(self, miscible, psi0_1, psi0_2):
    carrier = CarrierSpec.create(miscible, 2.2, psi0_1, psi0_2)
    m = linearization_matrix(miscible, carrier, 0.0)
    np.testing.assert_allclose(m @ m, np.zeros((4, 4)), atol=1e-12)
    assert all(w == 0 for w in spectrum(miscible, carrier, 0.0).omega)

  def test_branch_growth_matches_labels(self, miscible, immiscible, psi0_sq):
    carrier = CarrierSpec.equal(miscible, K_UNSTABLE, psi0_sq)
    g1, g2 = matrix_branch_growth(miscible, carrier, math.pi / 4)
    assert g1 == 0.0
    assert g2 == pytest.approx(spectrum(miscible, carrier, math.pi / 4).growth2, rel=1e-8)
    carrier = CarrierSpec.equal(immiscible, K_UNSTABLE, psi0_sq)
    closed = spectrum(immiscible, carrier, math.pi / 20)
    assert matrix_branch_growth(immiscible, carrier, math.pi / 20) == pytest.approx((closed.growth1, closed.growth2), rel=1e-8)

  def test_unstable_mode(self, miscible, psi0_sq):
    carrier = CarrierSpec.equal(miscible, K_UNSTABLE, psi0_sq)
    mode = unstable_mode(miscible, carrier, math.pi / 4)
    assert mode.growth_rate == pytest.approx(0.1863, abs=5e-4)
    assert np.vdot(mode.left, mode.right) == pytest.approx(1.0)
    assert np.max(np.abs(mode.right)) == pytest.approx(1.0)
    assert mode.project(mode.right) == pytest.approx(1.0)
    assert unstable_mode(miscible, CarrierSpec.equal(miscible, math.pi / 4, psi0_sq), math.pi / 2) is None


@pytest.mark.parametrize('cls, text', [
  (StabilityClass.STABLE, 'Stable'),
  (StabilityClass.UNSTABLE_1, 'PartiallyUnstable(1)'),
  (StabilityClass.UNSTABLE_2, 'PartiallyUnstable(2)'),
  (StabilityClass.UNSTABLE_BOTH, 'FullyUnstable'),
  (StabilityClass.FAILED, 'Failed'),
])
def test_describe(cls, text):
  assert cls.describe() == text
  assert cls.is_partial == text.startswith('Partially')
