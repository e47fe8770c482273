# bzinfo/src/bz_information.py
"""
测量统计与信息量：出现概率、重合指数、Brukner–Zeilinger 不确定度/信息量、
Shannon 与 Tsallis 熵、各方案的总量与闭式预测，以及探测效率 η 模型。
"""
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import get_config
from .definitions import Variant
from .errors import DimensionMismatchError, InvariantViolationError, ParameterRangeError
from .logger import logger
from .measurement_sets import MeasurementScheme, Povm, basis_deviations, build_mub_set
from .operator_core import DensityOperator, purity


@dataclass(frozen=True, eq=False)
class OutcomeDistribution:
    """
    p_j 以及可选的未响应结果 ∅。
    有 eta 时 noclick = 1 − η，否则 noclick = 0。
    """

    probs: np.ndarray
    eta: Optional[float] = None
    noclick: float = 0.0

    def __post_init__(self):
        cfg = get_config()
        probs = np.asarray(self.probs, dtype=float).reshape(-1)
        if np.any(probs < -cfg.probability_tol):
            raise InvariantViolationError(f"概率出现负值: {float(np.min(probs)):.3e}")
        probs = np.clip(probs, 0.0, None)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

        if self.eta is None and self.noclick != 0.0:
            raise InvariantViolationError("只有给定 eta 时才能有未响应概率。")
        if self.eta is not None and abs(self.noclick - (1.0 - self.eta)) > cfg.probability_tol:
            raise InvariantViolationError(
                f"未响应概率应为 1 − η = {1.0 - self.eta}，实际为 {self.noclick}"
            )
        total = float(np.sum(probs)) + self.noclick
        if abs(total - 1.0) > cfg.validation_tol:
            raise InvariantViolationError(f"概率之和应为 1，实际为 {total:.15g}")

    def outcomes(self, include_noclick: bool = True) -> np.ndarray:
        """参与计算的全部结果概率；∅ 排在最后"""
        if self.eta is not None and include_noclick:
            return np.append(self.probs, self.noclick)
        return self.probs


# --- 基本量 ---


def _povm_matches(povm: Povm, rho: DensityOperator) -> None:
    if povm.dim != rho.dim:
        raise DimensionMismatchError(f"POVM 维数 {povm.dim} 与态维数 {rho.dim} 不一致")


def probabilities(povm: Povm, rho: DensityOperator) -> OutcomeDistribution:
    """p_j = tr(M_j ρ)"""
    _povm_matches(povm, rho)
    raw = np.einsum("nij,ji->n", povm.stack, rho.matrix)
    if float(np.max(np.abs(raw.imag))) > get_config().probability_tol:
        raise InvariantViolationError("tr(M_j ρ) 出现非零虚部，输入不是 Hermitian 的")
    probs = raw.real
    # 完备性误差在 validation_tol 以内，把和规整回 1
    return OutcomeDistribution(probs / probs.sum())


def index_of_coincidence(dist: OutcomeDistribution, include_noclick: bool = True) -> float:
    """C = Σ p²"""
    outcomes = dist.outcomes(include_noclick)
    return float(np.dot(outcomes, outcomes))


def bz_uncertainty(dist: OutcomeDistribution, include_noclick: bool = True) -> float:
    """U_BZ = 1 − C"""
    return 1.0 - index_of_coincidence(dist, include_noclick)


def bz_information(povm: Povm, rho: DensityOperator) -> float:
    """I_BZ = C(ρ) − C(ρ*)，参考分布用同一个 POVM 在 ρ* 上重新计算"""
    reference = DensityOperator.maximally_mixed(povm.dim)
    return index_of_coincidence(probabilities(povm, rho)) - index_of_coincidence(
        probabilities(povm, reference)
    )


def legacy_bz_information(dist: OutcomeDistribution) -> float:
    """
    以均匀分布为参照的旧定义 Σ_j (p_j − 1/n)²，n 为全部结果数 (含 ∅)。
    只有 η 缺省的基测量下它才等于 bz_information。
    """
    outcomes = dist.outcomes(include_noclick=True)
    return float(np.sum((outcomes - 1.0 / outcomes.size) ** 2))


def shannon_entropy(dist: OutcomeDistribution) -> float:
    """单位为 nat，约定 0·ln 0 = 0"""
    outcomes = dist.outcomes()
    positive = outcomes[outcomes > 0]
    return float(-np.sum(positive * np.log(positive)))


def tsallis_entropy(dist: OutcomeDistribution, alpha: float) -> float:
    """H_α = (1 − Σ p^α)/(α − 1)；α = 1 时退化为 Shannon 熵"""
    if not alpha > 0:
        raise ParameterRangeError(f"Tsallis 熵要求 α > 0，收到 {alpha}")
    if alpha == 1:
        return shannon_entropy(dist)
    outcomes = dist.outcomes()
    positive = outcomes[outcomes > 0]
    return float((1.0 - np.sum(positive**alpha)) / (alpha - 1.0))


def binary_tsallis_entropy(eta: float, alpha: float) -> float:
    """h_α(η) = (1 − η^α − (1−η)^α)/(α − 1)；α = 1 为二元 Shannon 熵"""
    if not alpha > 0:
        raise ParameterRangeError(f"Tsallis 熵要求 α > 0，收到 {alpha}")
    _check_eta(eta)
    if alpha == 1:
        return float(-sum(p * math.log(p) for p in (eta, 1.0 - eta) if p > 0))
    return float((1.0 - eta**alpha - (1.0 - eta) ** alpha) / (alpha - 1.0))


# --- 各方案的总量 ---


@dataclass(frozen=True)
class SchemeTotal:
    measured: float
    predicted: float

    @property
    def deviation(self) -> float:
        return abs(self.measured - self.predicted)

    def to_dict(self) -> Dict[str, float]:
        return {"measured": self.measured, "predicted": self.predicted, "deviation": self.deviation}


def closed_form_coefficients(scheme: MeasurementScheme) -> Tuple[float, float]:
    """
    各方案下 Σ_POVMs C = slope · tr(ρ²) + intercept。
    总信息量即 slope · (tr(ρ²) − 1/d)。
    """
    d = scheme.d
    if scheme.variant == Variant.mub_set:
        return 1.0, 1.0
    if scheme.variant == Variant.sic_povm:
        coefficient = 1.0 / (d * (d + 1))
        return coefficient, coefficient
    if scheme.variant == Variant.mum_set:
        kappa = _required(scheme.kappa, "kappa")
        return (kappa * d - 1.0) / (d - 1), 1.0 + (1.0 - kappa) / (d - 1)
    if scheme.variant == Variant.general_sic:
        a = _required(scheme.a_param, "a")
        return (a * d**3 - 1.0) / (d * (d * d - 1)), (1.0 - a * d) / (d * d - 1)
    raise InvariantViolationError(f"未知的方案类型 '{scheme.variant}'")


def _required(value: Optional[float], name: str) -> float:
    if value is None:
        raise InvariantViolationError(f"方案缺少参数 '{name}'")
    return value


def _scheme_matches(scheme: MeasurementScheme, rho: DensityOperator) -> None:
    if scheme.d != rho.dim:
        raise DimensionMismatchError(f"方案维数 {scheme.d} 与态维数 {rho.dim} 不一致")


def coincidence_closed_form(scheme: MeasurementScheme, state_purity: float) -> float:
    slope, intercept = closed_form_coefficients(scheme)
    return slope * state_purity + intercept


def coincidence_sum(scheme: MeasurementScheme, rho: DensityOperator) -> float:
    _scheme_matches(scheme, rho)
    return float(sum(index_of_coincidence(probabilities(p, rho)) for p in scheme.povms))


def scheme_total(scheme: MeasurementScheme, rho: DensityOperator) -> SchemeTotal:
    _scheme_matches(scheme, rho)
    measured = float(sum(bz_information(p, rho) for p in scheme.povms))
    slope, _ = closed_form_coefficients(scheme)
    predicted = slope * (purity(rho) - 1.0 / scheme.d)
    return SchemeTotal(measured=measured, predicted=predicted)


@dataclass(frozen=True)
class PartialMubBound:
    sum: float
    bound: float
    holds: bool


def partial_mub_bound_check(bases: Sequence[Povm], rho: DensityOperator) -> PartialMubBound:
    """L 个互不偏基：Σ C ≤ (L − 1)/d + tr(ρ²)"""
    if not bases:
        raise InvariantViolationError("至少需要一个基")
    d = bases[0].dim
    if len(bases) > d + 1:
        raise InvariantViolationError(f"d={d} 时最多 {d + 1} 个互不偏基，收到 {len(bases)}")
    if any(len(b) != d for b in bases):
        raise InvariantViolationError("每个基必须恰好有 d 个元素")
    for basis in bases:
        _povm_matches(basis, rho)
    tol = get_config().validation_tol
    orthonormality, unbiasedness = basis_deviations(bases)
    if orthonormality > tol or unbiasedness > tol:
        raise InvariantViolationError(
            f"给定的基不是互不偏的 (正交偏差 {orthonormality:.3e}, 互不偏偏差 {unbiasedness:.3e})"
        )

    total = float(sum(index_of_coincidence(probabilities(b, rho)) for b in bases))
    bound = (len(bases) - 1.0) / d + purity(rho)
    return PartialMubBound(sum=total, bound=bound, holds=total <= bound + 1e-10)


# --- 探测效率 ---


def _check_eta(eta: float) -> None:
    if not 0.0 <= eta <= 1.0:
        raise ParameterRangeError(f"探测效率 η 必须在 [0, 1] 内，收到 {eta}")


def distort(dist: OutcomeDistribution, eta: float) -> OutcomeDistribution:
    """p_j → η p_j，并加上概率为 1 − η 的未响应结果"""
    _check_eta(eta)
    if dist.eta is not None:
        raise InvariantViolationError("分布已经带有探测效率，不能重复畸变")
    return OutcomeDistribution(eta * dist.probs, eta=eta, noclick=1.0 - eta)


def bz_information_eta(
    povm: Povm, rho: DensityOperator, eta: float, include_noclick: bool = True
) -> float:
    """I^(η) = C^(η)(ρ) − C^(η)(ρ*)，两边都用畸变后的分布"""
    reference = DensityOperator.maximally_mixed(povm.dim)
    actual = distort(probabilities(povm, rho), eta)
    baseline = distort(probabilities(povm, reference), eta)
    return index_of_coincidence(actual, include_noclick) - index_of_coincidence(baseline, include_noclick)


def scheme_total_eta(
    scheme: MeasurementScheme, rho: DensityOperator, eta: float, include_noclick: bool = True
) -> SchemeTotal:
    """measured 为各 POVM 的 I^(η) 之和，predicted 为 η² 乘以无损情形的闭式值"""
    _check_eta(eta)
    ideal = scheme_total(scheme, rho)
    measured = float(sum(bz_information_eta(p, rho, eta, include_noclick) for p in scheme.povms))
    return SchemeTotal(measured=measured, predicted=eta**2 * ideal.predicted)


def uniform_reference_sweep(
    scheme: MeasurementScheme, rho: DensityOperator, etas: Sequence[float]
) -> List[Dict[str, float]]:
    """
    对比两种参照：以均匀分布为参照的旧总量在 η → 0⁺ 时不降反升，
    以 ρ* 为参照的总量按 η² 衰减。
    """
    _scheme_matches(scheme, rho)
    rows = []
    for eta in etas:
        legacy = sum(legacy_bz_information(distort(probabilities(p, rho), eta)) for p in scheme.povms)
        corrected = scheme_total_eta(scheme, rho, eta).measured
        rows.append({"eta": float(eta), "legacy_total": float(legacy), "corrected_total": corrected})
    return rows


# --- Shannon 熵之和不是纯度的函数 ---


@dataclass(frozen=True, eq=False)
class ShannonWitness:
    state_a: DensityOperator
    state_b: DensityOperator
    shannon_a: float
    shannon_b: float
    total_a: float
    total_b: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "shannon_sum_a": self.shannon_a,
            "shannon_sum_b": self.shannon_b,
            "shannon_gap": abs(self.shannon_a - self.shannon_b),
            "bz_total_a": self.total_a,
            "bz_total_b": self.total_b,
            "bz_gap": abs(self.total_a - self.total_b),
        }


def bloch_state(vector: Sequence[float]) -> DensityOperator:
    """(I + n·σ)/2"""
    x, y, z = vector
    return DensityOperator(
        np.array([[1 + z, x - 1j * y], [x + 1j * y, 1 - z]], dtype=np.complex128) / 2
    )


def shannon_noninvariance_witness() -> ShannonWitness:
    """
    d = 2 的两个纯态：|0⟩ 和 Bloch 向量 (1,1,1)/√3 的态。
    纯度相同，三个 MUB 上的 Shannon 熵之和不同，BZ 总量相同。
    """
    scheme = build_mub_set(2)
    state_a = bloch_state((0.0, 0.0, 1.0))
    state_b = bloch_state(np.ones(3) / np.sqrt(3.0))

    def shannon_sum(rho: DensityOperator) -> float:
        return sum(shannon_entropy(probabilities(p, rho)) for p in scheme.povms)

    witness = ShannonWitness(
        state_a=state_a,
        state_b=state_b,
        shannon_a=shannon_sum(state_a),
        shannon_b=shannon_sum(state_b),
        total_a=scheme_total(scheme, state_a).measured,
        total_b=scheme_total(scheme, state_b).measured,
    )
    logger.debug(f"Shannon 非不变性见证: {witness.to_dict()}")
    return witness
