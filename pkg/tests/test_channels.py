import math

import numpy as np
import pytest
import tomlkit
from numpy.testing import assert_allclose

from src.channels import (
    KrausChannel,
    KrausMap,
    adjoint,
    apply,
    is_bistochastic,
    is_trace_preserving,
    is_unital,
    load_channel,
    monotonicity_check,
    non_unitality,
    norm_bound_lemma,
    purity_excess,
    relative_entropy,
    sample_channel,
    save_channel,
    tsallis_divergence,
)
from src.config import CONFIG_PATH_ENV, TEMPLATE_CONFIG_PATH, reset_config
from src.definitions import ChannelKind, StateKind
from src.errors import InvariantViolationError, ParameterRangeError, ParseError
from src.operator_core import DensityOperator, hs_inner, purity, sample_random_state
from src.utils import derive_rng, write_json_file

ALPHAS = (0.5, 1.0, 1.5, 2.0)


def _random_operator(d, rng):
    return rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))


# --- 作用与伴随 ---


def test_identity_channel_leaves_state_unchanged():
    rho = sample_random_state(3, StateKind.mixed, seed=1)
    identity = KrausChannel((np.eye(3),))
    assert_allclose(apply(identity, rho).matrix, rho.matrix, atol=1e-15)


def test_depolarizing_examples(random_states):
    full = sample_channel(3, ChannelKind.depolarizing, lam=0.0)
    none = sample_channel(3, ChannelKind.depolarizing, lam=1.0)
    for rho in random_states(3, 50):
        assert_allclose(apply(full, rho).matrix, np.eye(3) / 3, atol=1e-12)
        assert_allclose(apply(none, rho).matrix, rho.matrix, atol=1e-12)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_contraction_maps_everything_to_target(d, random_states):
    phi = sample_channel(d, ChannelKind.contraction, i0=1)
    target = np.zeros((d, d))
    target[1, 1] = 1
    for rho in random_states(d, 5):
        assert_allclose(apply(phi, rho).matrix, target, atol=1e-12)
    assert not is_unital(phi)
    kk_dagger = np.einsum("kij,klj->il", phi.stack, phi.stack.conj())
    assert_allclose(kk_dagger, d * target, atol=1e-12)


def test_adjoint_duality_on_random_pairs():
    rng = derive_rng(12)
    phi = sample_channel(3, ChannelKind.generic, seed=rng)
    dual = adjoint(phi)
    for _ in range(20):
        x, y = _random_operator(3, rng), _random_operator(3, rng)
        assert hs_inner(phi(x), y) == pytest.approx(hs_inner(x, dual(y)), abs=1e-10)


def test_adjoint_of_unitary_channel_inverts_it():
    phi = sample_channel(4, ChannelKind.unitary, seed=3)
    x = _random_operator(4, derive_rng(8))
    assert_allclose(adjoint(phi)(phi(x)), x, atol=1e-12)


def test_adjoint_of_bistochastic_channel_is_trace_preserving():
    phi = sample_channel(3, ChannelKind.bistochastic, seed=5)
    assert is_trace_preserving(adjoint(phi))


def test_non_trace_preserving_kraus_list_is_rejected():
    with pytest.raises(InvariantViolationError):
        KrausChannel((0.9 * np.eye(2),))
    # 不保迹的映射仍可作为 KrausMap 使用
    assert not is_trace_preserving(KrausMap((0.9 * np.eye(2),)))


def test_channel_tolerance_comes_from_config(tmp_path, monkeypatch):
    nearly = KrausMap((np.sqrt(1 - 1e-8) * np.eye(2),))
    assert not is_trace_preserving(nearly)
    assert not is_bistochastic(nearly)
    with pytest.raises(InvariantViolationError):
        KrausChannel(nearly.kraus)

    path = tmp_path / "config.toml"
    version = tomlkit.parse(TEMPLATE_CONFIG_PATH.read_text(encoding="utf-8"))["config_version"]
    path.write_text(f'config_version = "{version}"\n[numerics]\nchannel_tol = 1e-6\n', encoding="utf-8")
    monkeypatch.setenv(CONFIG_PATH_ENV, str(path))
    reset_config()
    assert is_trace_preserving(nearly)
    assert is_unital(nearly)
    assert KrausChannel(nearly.kraus).dim == 2
    # 显式传入的 tol 优先于配置
    assert not is_trace_preserving(nearly, tol=1e-10)


# --- 采样 ---


@pytest.mark.parametrize("kind", ChannelKind.all)
def test_sampled_channels_are_trace_preserving_and_deterministic(kind):
    params = {"lam": 0.3} if kind == ChannelKind.depolarizing else {}
    phi = sample_channel(3, kind, seed=17, **params)
    again = sample_channel(3, kind, seed=17, **params)
    assert is_trace_preserving(phi)
    for a, b in zip(phi.kraus, again.kraus):
        assert np.array_equal(a, b)
    rho = sample_random_state(3, StateKind.mixed, seed=2)
    assert np.trace(apply(phi, rho).matrix).real == pytest.approx(1.0, abs=1e-10)


def test_sampler_unitality_flags():
    assert is_bistochastic(sample_channel(3, ChannelKind.bistochastic, seed=0))
    assert is_bistochastic(sample_channel(2, ChannelKind.unitary, seed=0))
    generic = sample_channel(3, ChannelKind.generic, seed=0, env_dim=3)
    assert is_trace_preserving(generic)
    assert not is_unital(generic)


def test_sampler_parameter_errors():
    with pytest.raises(ParameterRangeError):
        sample_channel(2, ChannelKind.depolarizing, lam=1.5)
    with pytest.raises(ParameterRangeError):
        sample_channel(3, ChannelKind.contraction, i0=3)
    with pytest.raises(ParameterRangeError):
        sample_channel(3, "amplitude")


# --- 散度 ---


def test_tsallis_2_divergence_links_to_purity_excess():
    for d in range(2, 7):
        reference = DensityOperator.maximally_mixed(d)
        for trial in range(100):
            kind = StateKind.pure if trial % 2 == 0 else StateKind.mixed
            rho = sample_random_state(d, kind, derive_rng(30, d, trial))
            d2 = tsallis_divergence(rho, reference, 2)
            assert d2 == pytest.approx(d * purity(rho) - 1, abs=1e-10)
            assert abs(purity_excess(rho) - d2 / d) <= 1e-10


def test_divergence_of_state_with_itself_vanishes(random_states):
    for rho in random_states(3, 10):
        for alpha in ALPHAS:
            assert tsallis_divergence(rho, rho, alpha) == pytest.approx(0.0, abs=1e-8)


def test_divergence_is_nonnegative_on_random_pairs(random_states):
    states = random_states(4, 20, seed=3)
    for rho, sigma in zip(states, states[1:]):
        for alpha in ALPHAS:
            assert tsallis_divergence(rho, sigma, alpha) >= -1e-10


def test_support_violation_gives_infinity():
    up = DensityOperator.from_vector(np.array([1.0, 0.0]))
    down = DensityOperator.from_vector(np.array([0.0, 1.0]))
    assert tsallis_divergence(up, down, 2) == math.inf
    assert relative_entropy(up, down) == math.inf
    assert tsallis_divergence(up, down, 0.5) == pytest.approx(2.0)


def test_divergence_alpha_range():
    rho = DensityOperator.maximally_mixed(2)
    for alpha in (0, -1, 2.5):
        with pytest.raises(ParameterRangeError):
            tsallis_divergence(rho, rho, alpha)


def test_purity_excess_examples():
    assert purity_excess(DensityOperator.maximally_mixed(4)) == pytest.approx(0.0, abs=1e-15)
    pure = sample_random_state(4, StateKind.pure, seed=1)
    assert purity_excess(pure) == pytest.approx(0.75, abs=1e-12)


# --- 双随机信道下的单调性 ---


def test_unitary_channel_preserves_purity_excess():
    phi = sample_channel(3, ChannelKind.unitary, seed=2)
    report = monotonicity_check(phi, sample_random_state(3, StateKind.mixed, seed=4))
    assert report.holds
    assert report.after == pytest.approx(report.before, abs=1e-12)


@pytest.mark.parametrize("lam", [0.0, 0.25, 0.5, 0.9])
def test_depolarizing_scales_purity_excess_by_lambda_squared(lam, random_states):
    phi = sample_channel(3, ChannelKind.depolarizing, lam=lam)
    for rho in random_states(3, 5):
        report = monotonicity_check(phi, rho)
        assert report.after == pytest.approx(lam**2 * report.before, abs=1e-10)


def test_monotonicity_rejects_non_bistochastic():
    phi = sample_channel(2, ChannelKind.contraction)
    with pytest.raises(InvariantViolationError):
        monotonicity_check(phi, DensityOperator.maximally_mixed(2))


@pytest.mark.parametrize("d", [2, 3, 4])
def test_bistochastic_monotonicity_sweep(d):
    violations = []
    for trial in range(334):
        rng = derive_rng(40, d, trial)
        phi = sample_channel(d, ChannelKind.bistochastic, seed=rng, terms=2 + trial % 3)
        kind = StateKind.pure if trial % 2 == 0 else StateKind.mixed
        report = monotonicity_check(phi, sample_random_state(d, kind, rng))
        if not report.holds:
            violations.append((trial, report.to_dict()))
    assert not violations


# --- 非保单位性与映射范数 ---


@pytest.mark.parametrize("d", [2, 3, 4])
def test_norm_bound_on_generic_channels(d):
    for trial in range(167):
        phi = sample_channel(d, ChannelKind.generic, seed=derive_rng(50, d, trial))
        report = non_unitality(phi)
        assert report.map_norm <= report.bound + 1e-9
        assert report.hs_norm == pytest.approx(report.hs_norm_from_purity, abs=1e-10)
        assert abs(np.trace(report.gamma.matrix)) <= 1e-10


def test_bistochastic_channels_saturate_trivially():
    for seed in range(10):
        report = non_unitality(sample_channel(3, ChannelKind.bistochastic, seed=seed))
        assert report.hs_norm <= 1e-10
        assert report.map_norm == pytest.approx(1.0, abs=1e-10)
        assert report.bound == pytest.approx(1.0, abs=1e-9)
        assert report.saturated


@pytest.mark.parametrize("d", [2, 3, 4, 6])
def test_contraction_channel_saturates_bound(d):
    phi = sample_channel(d, ChannelKind.contraction, i0=d - 1)
    report = non_unitality(phi)
    assert report.hs_norm == pytest.approx(math.sqrt(1 - 1 / d), abs=1e-10)
    assert report.map_norm == pytest.approx(d, abs=1e-10)
    assert report.bound == pytest.approx(d, abs=1e-9)
    assert report.saturated
    image = apply(phi, DensityOperator.maximally_mixed(d))
    assert purity_excess(image) == pytest.approx(1 - 1 / d, abs=1e-12)


def test_contraction_qutrit_values():
    report = non_unitality(sample_channel(3, ChannelKind.contraction))
    assert report.hs_norm == pytest.approx(math.sqrt(2 / 3), abs=1e-10)
    assert report.bound == pytest.approx(1 + math.sqrt(6) * math.sqrt(2 / 3), abs=1e-10)
    assert report.to_dict()["saturated"] is True


def test_non_unitality_rejects_non_trace_preserving_map():
    with pytest.raises(InvariantViolationError):
        non_unitality(KrausMap((0.5 * np.eye(2),)))


def test_norm_bound_lemma_on_random_positive_operators():
    rng = derive_rng(60)
    for d in (2, 3, 5):
        for _ in range(20):
            g = _random_operator(d, rng)
            lemma = norm_bound_lemma(g @ g.conj().T)
            assert lemma.holds
    rank_one = norm_bound_lemma(np.diag([2.0, 0.0, 0.0]))
    assert rank_one.lhs == pytest.approx(rank_one.rhs, abs=1e-12)
    with pytest.raises(InvariantViolationError):
        norm_bound_lemma(np.diag([1.0, -1.0]))


# --- 文件格式 ---


def test_channel_file_round_trip(tmp_path):
    phi = sample_channel(3, ChannelKind.generic, seed=9, env_dim=2)
    path = tmp_path / "phi.json"
    save_channel(phi, path)
    loaded = load_channel(path)
    assert len(loaded.kraus) == 2
    for a, b in zip(phi.kraus, loaded.kraus):
        assert np.array_equal(a, b)


def test_non_trace_preserving_channel_file_is_parse_error(tmp_path):
    path = tmp_path / "bad.json"
    write_json_file(path, {"d": 2, "kraus": [{"d": 2, "entries": [[0.5, 0], [0, 0], [0, 0], [0.5, 0]]}]})
    with pytest.raises(ParseError):
        load_channel(path)
