import numpy as np
import pytest
import scipy.optimize

from src.errors import ParameterRangeError
from src.measurement_sets import _embedded_fiducial, build_sic_povm, validate_scheme
from src.sic_search import (
    _overlap_residuals,
    _potential_and_gradient,
    _to_real,
    frame_potential,
    optimize_sic_fiducial,
    orbit_overlap_deviation,
    sic_target_potential,
)
from src.utils import derive_rng


def test_target_potential_qubit():
    assert sic_target_potential(2) == pytest.approx(16 / 3)
    # d² + d²(d²−1)/(d+1)²
    assert sic_target_potential(2) == pytest.approx(4 + 4 * 3 / 9)


@pytest.mark.parametrize("d", [2, 3])
def test_embedded_fiducials_attain_target(d):
    fiducial = _embedded_fiducial(d)
    assert frame_potential(fiducial) == pytest.approx(sic_target_potential(d), abs=1e-12)
    assert orbit_overlap_deviation(fiducial) < 1e-12


def test_analytic_gradient_matches_finite_differences():
    rng = derive_rng(5)
    x = rng.standard_normal(8)
    error = scipy.optimize.check_grad(
        lambda v: _potential_and_gradient(v, 4)[0],
        lambda v: _potential_and_gradient(v, 4)[1],
        x,
    )
    assert error < 1e-5 * max(1.0, np.linalg.norm(_potential_and_gradient(x, 4)[1]))


def test_potential_is_scale_invariant():
    psi = derive_rng(1).standard_normal(3) + 1j * derive_rng(2).standard_normal(3)
    value, _ = _potential_and_gradient(_to_real(psi), 3)
    scaled, _ = _potential_and_gradient(_to_real(3.7 * psi), 3)
    assert scaled == pytest.approx(value, rel=1e-12)
    assert value >= sic_target_potential(3) - 1e-12


@pytest.mark.parametrize("d, overlap", [(2, 1 / 3), (3, 1 / 4)])
def test_optimizer_recovers_small_sics(d, overlap):
    result = optimize_sic_fiducial(d, seed=0)
    assert result.success
    assert result.potential - result.target <= 1e-8
    assert result.overlap_deviation <= 1e-9
    assert np.linalg.norm(result.fiducial) == pytest.approx(1.0)
    scheme = build_sic_povm(d, fiducial=result.fiducial)
    gram = np.abs(np.einsum("aij,bji->ab", scheme.all_elements(), scheme.all_elements())) * d * d
    off = gram[~np.eye(d * d, dtype=bool)]
    assert np.max(np.abs(off - overlap)) < 1e-9


def test_optimizer_finds_a_four_dimensional_sic():
    results = [optimize_sic_fiducial(4, seed=seed) for seed in range(3)]
    winners = [r for r in results if r.success]
    assert winners, [r.potential - r.target for r in results]
    scheme = build_sic_povm(4, fiducial=winners[0].fiducial)
    assert validate_scheme(scheme).passed


@pytest.mark.parametrize("d", range(4, 9))
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_reported_success_always_validates(d, seed):
    result = optimize_sic_fiducial(d, seed=seed)
    assert result.success == (
        result.potential - result.target <= 1e-8 and result.overlap_deviation <= 1e-9
    )
    if result.success:
        assert validate_scheme(build_sic_povm(d, fiducial=result.fiducial)).passed


@pytest.mark.parametrize("seed", [1, 2])
def test_six_dimensional_search_validates_at_default_tolerance(seed):
    # 帧势差到 1e-13 量级时重叠偏差仍可能超过 1e-9
    result = optimize_sic_fiducial(6, seed=seed)
    assert result.success
    assert result.overlap_deviation <= 1e-9
    assert validate_scheme(build_sic_povm(6, fiducial=result.fiducial)).passed


def test_overlap_residuals_vanish_on_embedded_fiducial():
    residuals = _overlap_residuals(_to_real(_embedded_fiducial(3)), 3)
    assert residuals.shape == (8,)
    assert np.max(np.abs(residuals)) < 1e-12


def test_optimizer_is_deterministic_per_seed():
    first = optimize_sic_fiducial(3, seed=11, restarts=2)
    second = optimize_sic_fiducial(3, seed=11, restarts=2)
    assert np.array_equal(first.fiducial, second.fiducial)
    assert first.potential == second.potential


def test_non_convergence_is_reported_not_raised():
    result = optimize_sic_fiducial(5, seed=0, max_iters=1, restarts=1)
    assert result.restarts_used == 1
    assert result.potential >= result.target - 1e-9
    payload = result.to_dict()
    assert payload["success"] is result.success
    assert len(payload["fiducial"]) == 5


@pytest.mark.parametrize("d", [1, 9])
def test_optimizer_dimension_range(d):
    with pytest.raises(ParameterRangeError):
        optimize_sic_fiducial(d)
