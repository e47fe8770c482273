# bzinfo/src/channels.py
"""
Kraus 表示的量子操作：作用、伴随、保迹/保单位判定、信道采样、
Tsallis 散度、双随机信道下的单调性检查、非保单位算符与映射范数上界。
"""
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from .config import get_config
from .definitions import ChannelKind
from .errors import (
    DimensionMismatchError,
    InvariantViolationError,
    ParameterRangeError,
    ParseError,
)
from .gellmann import displacement_operators
from .logger import logger
from .operator_core import (
    DensityOperator,
    HermitianOperator,
    as_matrix,
    eigendecompose,
    purity,
    sample_random_unitary,
    schatten_norm,
)
from .utils import as_rng, matrix_from_json, matrix_to_json, read_json_file, require_keys, write_json_file

SeedLike = Union[int, np.random.Generator, None]

MONOTONICITY_ALPHAS = (0.5, 1.0, 1.5, 2.0)


@dataclass(frozen=True, eq=False)
class KrausMap:
    """X ↦ Σ K_i X K_i†，输入输出空间相同；不要求保迹 (伴随映射也用它表示)"""

    kraus: Tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = []
        for k in self.kraus:
            matrix = np.array(as_matrix(k), dtype=np.complex128, copy=True)
            matrix.setflags(write=False)
            ops.append(matrix)
        if not ops:
            raise InvariantViolationError("至少需要一个 Kraus 算符")
        if len({m.shape for m in ops}) != 1:
            raise DimensionMismatchError("Kraus 算符的形状不一致")
        object.__setattr__(self, "kraus", tuple(ops))

    @property
    def dim(self) -> int:
        return self.kraus[0].shape[0]

    @property
    def stack(self) -> np.ndarray:
        return np.stack(self.kraus)

    def __call__(self, x: Any) -> np.ndarray:
        matrix = as_matrix(x)
        if matrix.shape[0] != self.dim:
            raise DimensionMismatchError(f"映射维数 {self.dim} 与输入维数 {matrix.shape[0]} 不一致")
        ops = self.stack
        return np.einsum("kij,jl,kml->im", ops, matrix, ops.conj())

    def trace_preservation_deviation(self) -> float:
        ops = self.stack
        total = np.einsum("kji,kjl->il", ops.conj(), ops)  # Σ K†K
        return schatten_norm(total - np.eye(self.dim), math.inf)

    def unitality_deviation(self) -> float:
        ops = self.stack
        total = np.einsum("kij,klj->il", ops, ops.conj())  # Σ KK†
        return schatten_norm(total - np.eye(self.dim), math.inf)


@dataclass(frozen=True, eq=False)
class KrausChannel(KrausMap):
    """保迹的 Kraus 映射：Σ K_i†K_i = I"""

    def __post_init__(self):
        super().__post_init__()
        deviation = self.trace_preservation_deviation()
        if deviation > get_config().channel_tol:
            raise InvariantViolationError(f"Kraus 算符不满足保迹条件: ‖Σ K†K − I‖∞ = {deviation:.3e}")


def apply(phi: KrausMap, rho: DensityOperator) -> DensityOperator:
    """Σ K_i ρ K_i†"""
    output = phi(rho)
    trace = complex(np.trace(output))
    if abs(trace - 1.0) > get_config().channel_tol:
        raise InvariantViolationError(f"输出态的迹为 {trace:.15g}，映射不保迹")
    return DensityOperator(output / trace.real)


def adjoint(phi: KrausMap) -> KrausMap:
    """伴随映射 X ↦ Σ K_i† X K_i"""
    return KrausMap(tuple(k.conj().T for k in phi.kraus))


def is_trace_preserving(phi: KrausMap, tol: Optional[float] = None) -> bool:
    tol = get_config().channel_tol if tol is None else tol
    return phi.trace_preservation_deviation() <= tol


def is_unital(phi: KrausMap, tol: Optional[float] = None) -> bool:
    tol = get_config().channel_tol if tol is None else tol
    return phi.unitality_deviation() <= tol


def is_bistochastic(phi: KrausMap, tol: Optional[float] = None) -> bool:
    return is_trace_preserving(phi, tol) and is_unital(phi, tol)


# --- 采样 ---


def _haar_isometry(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    gaussian = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    q, r = np.linalg.qr(gaussian)
    # 按 R 对角元的相位修正，得到 Haar 分布
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def sample_channel(
    d: int,
    kind: str,
    seed: SeedLike = 0,
    *,
    terms: int = 3,
    env_dim: Optional[int] = None,
    lam: Optional[float] = None,
    i0: int = 0,
) -> KrausChannel:
    """
    bistochastic: K_i = √p_i U_i，U_i 为 Haar 酉阵，p ~ Dirichlet(1)
    generic:      Haar Stinespring 等距的 d_E 个 d×d 分块
    depolarizing: ρ ↦ λρ + (1−λ)ρ*
    contraction:  K_j = |i₀⟩⟨j|，把一切压缩到 |i₀⟩
    unitary:      单个 Haar 酉阵
    """
    if d < 2:
        raise ParameterRangeError(f"维数必须 ≥ 2，收到 {d}")
    rng = as_rng(seed)

    if kind == ChannelKind.bistochastic:
        if terms < 2:
            raise ParameterRangeError(f"双随机信道至少需要 2 个酉分量，收到 {terms}")
        weights = rng.dirichlet(np.ones(terms))
        kraus = tuple(np.sqrt(w) * sample_random_unitary(d, rng) for w in weights)
    elif kind == ChannelKind.generic:
        env = d if env_dim is None else env_dim
        if env < 1:
            raise ParameterRangeError(f"环境维数必须 ≥ 1，收到 {env}")
        isometry = _haar_isometry(d * env, d, rng)
        kraus = tuple(isometry[i * d : (i + 1) * d, :] for i in range(env))
    elif kind == ChannelKind.depolarizing:
        if lam is None or not 0.0 <= lam <= 1.0:
            raise ParameterRangeError(f"退极化参数 λ 必须在 [0, 1] 内，收到 {lam}")
        weight = np.sqrt((1.0 - lam) / d**2)
        kraus = (np.sqrt(lam) * np.eye(d, dtype=np.complex128),) + tuple(
            weight * op for op in displacement_operators(d)
        )
    elif kind == ChannelKind.contraction:
        if not 0 <= i0 < d:
            raise ParameterRangeError(f"收缩目标 i₀ 必须在 [0, {d - 1}] 内，收到 {i0}")
        kraus = tuple(np.outer(np.eye(d)[i0], np.eye(d)[j]).astype(np.complex128) for j in range(d))
    elif kind == ChannelKind.unitary:
        kraus = (sample_random_unitary(d, rng),)
    else:
        raise ParameterRangeError(f"未知的信道类型 '{kind}'，可选 {', '.join(ChannelKind.all)}")

    channel = KrausChannel(kraus)
    logger.debug(f"采样信道 kind={kind} d={d}: {len(channel.kraus)} 个 Kraus 算符")
    return channel


# --- 散度 ---


def _check_alpha(alpha: float) -> None:
    if not 0 < alpha <= 2:
        raise ParameterRangeError(f"Tsallis 散度要求 α ∈ (0, 2]，收到 {alpha}")


def tsallis_divergence(rho: DensityOperator, sigma: DensityOperator, alpha: float) -> float:
    """
    D_α(ρ‖σ) = (tr(ρ^α σ^{1−α}) − 1)/(α − 1)，α = 1 时为量子相对熵。
    支撑条件不满足时 (α ≥ 1) 返回 +inf。
    """
    _check_alpha(alpha)
    if rho.dim != sigma.dim:
        raise DimensionMismatchError(f"维数不一致: {rho.dim} vs {sigma.dim}")
    tol = get_config().support_tol

    r, u = eigendecompose(rho)
    s, v = eigendecompose(sigma)
    r = np.clip(r, 0.0, None)
    s = np.clip(s, 0.0, None)
    overlaps = np.abs(u.conj().T @ v) ** 2  # |⟨u_i|v_k⟩|²

    in_rho = r > tol
    outside_sigma = s <= tol
    leaks = bool(np.any(overlaps[np.ix_(in_rho, outside_sigma)] > tol))

    if alpha == 1:
        if leaks:
            return math.inf
        rho_term = float(np.sum(r[in_rho] * np.log(r[in_rho])))
        log_s = np.where(outside_sigma, 0.0, np.log(np.where(outside_sigma, 1.0, s)))
        cross_term = float(r @ overlaps @ log_s)
        return rho_term - cross_term

    if alpha > 1 and leaks:
        return math.inf
    r_pow = np.where(in_rho, r, 0.0) ** alpha
    s_pow = np.where(outside_sigma, 0.0, np.where(outside_sigma, 1.0, s) ** (1.0 - alpha))
    trace_term = float(r_pow @ overlaps @ s_pow)
    return (trace_term - 1.0) / (alpha - 1.0)


def relative_entropy(rho: DensityOperator, sigma: DensityOperator) -> float:
    return tsallis_divergence(rho, sigma, 1.0)


def purity_excess(rho: DensityOperator) -> float:
    """tr(ρ²) − 1/d，等于 (1/d)·D₂(ρ‖ρ*)"""
    return purity(rho) - 1.0 / rho.dim


@dataclass
class MonotonicityReport:
    before: float
    after: float
    holds: bool
    divergences: Dict[float, Tuple[float, float]] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "before": self.before,
            "after": self.after,
            "holds": self.holds,
            "divergences": {
                str(alpha): {"before": b, "after": a} for alpha, (b, a) in self.divergences.items()
            },
        }


def monotonicity_check(
    phi: KrausMap, rho: DensityOperator, alphas: Sequence[float] = MONOTONICITY_ALPHAS
) -> MonotonicityReport:
    """双随机信道下纯度超出量与 D_α(·‖ρ*) 都不增"""
    if not is_bistochastic(phi):
        raise InvariantViolationError("单调性检查只接受双随机信道，非保单位信道请用 non_unitality")
    output = apply(phi, rho)
    reference = DensityOperator.maximally_mixed(rho.dim)
    before, after = purity_excess(rho), purity_excess(output)
    holds = after <= before + 1e-12

    divergences = {}
    for alpha in alphas:
        d_before = tsallis_divergence(rho, reference, alpha)
        d_after = tsallis_divergence(output, reference, alpha)
        divergences[alpha] = (d_before, d_after)
        if d_after > d_before + 1e-10:
            # 边界容差上的违反照实报告，不截断
            logger.warning(f"α={alpha} 时 D_α 增加了 {d_after - d_before:.3e}")
            holds = False
    return MonotonicityReport(before=before, after=after, holds=holds, divergences=divergences)


# --- 非保单位性 ---


@dataclass(frozen=True, eq=False)
class NonUnitalityReport:
    gamma: HermitianOperator
    hs_norm: float
    hs_norm_from_purity: float
    map_norm: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.map_norm <= self.bound + 1e-9

    @property
    def saturated(self) -> bool:
        return abs(self.bound - self.map_norm) <= 1e-9

    def to_dict(self) -> Dict[str, Any]:
        return {
            "gamma": matrix_to_json(self.gamma.matrix),
            "hs_norm": self.hs_norm,
            "hs_norm_from_purity": self.hs_norm_from_purity,
            "map_norm": self.map_norm,
            "bound": self.bound,
            "holds": self.holds,
            "saturated": self.saturated,
        }


def non_unitality(phi: KrausMap) -> NonUnitalityReport:
    """
    Γ = Φ(ρ*) − ρ*；‖Φ‖ = d·‖Φ(ρ*)‖∞ ≤ 1 + √(d(d−1))·‖Γ‖₂。
    ‖Γ‖₂ 由定义和由 √(tr(Φ(ρ*)²) − 1/d) 各算一次并互相核对。
    """
    if not is_trace_preserving(phi):
        raise InvariantViolationError("非保单位性分析要求保迹信道")
    d = phi.dim
    image = apply(phi, DensityOperator.maximally_mixed(d))
    gamma = HermitianOperator(image.matrix - np.eye(d) / d)

    trace = abs(complex(np.trace(gamma.matrix)))
    if trace > get_config().channel_tol:
        raise InvariantViolationError(f"Γ 的迹应为 0，实际为 {trace:.3e}")

    hs_norm = schatten_norm(gamma, 2)
    excess = purity(image) - 1.0 / d
    if abs(hs_norm**2 - excess) > get_config().channel_tol:
        raise InvariantViolationError(
            f"‖Γ‖₂² = {hs_norm ** 2:.15g} 与 tr(Φ(ρ*)²) − 1/d = {excess:.15g} 不一致"
        )
    map_norm = d * schatten_norm(image, math.inf)
    bound = 1.0 + math.sqrt(d * (d - 1)) * hs_norm
    report = NonUnitalityReport(
        gamma=gamma,
        hs_norm=hs_norm,
        hs_norm_from_purity=math.sqrt(max(0.0, excess)),
        map_norm=map_norm,
        bound=bound,
    )
    if not report.holds:
        logger.warning(f"映射范数 {map_norm:.15g} 超过上界 {bound:.15g}")
    return report


@dataclass(frozen=True)
class NormBoundLemma:
    lhs: float
    rhs: float
    holds: bool


def norm_bound_lemma(x: Any) -> NormBoundLemma:
    """半正定 x：‖x‖∞ ≤ (‖x‖₁ + √(d−1)·√(d‖x‖₂² − ‖x‖₁²))/d"""
    matrix = as_matrix(x)
    d = matrix.shape[0]
    eigenvalues = np.linalg.eigvalsh((matrix + matrix.conj().T) / 2)
    if eigenvalues[0] < -get_config().positivity_tol:
        raise InvariantViolationError("norm_bound_lemma 只适用于半正定算符")
    eigenvalues = np.clip(eigenvalues, 0.0, None)
    trace_norm = float(np.sum(eigenvalues))
    hs_sq = float(np.sum(eigenvalues**2))
    lhs = float(eigenvalues[-1])
    rhs = (trace_norm + math.sqrt(d - 1) * math.sqrt(max(0.0, d * hs_sq - trace_norm**2))) / d
    return NormBoundLemma(lhs=lhs, rhs=rhs, holds=lhs <= rhs + 1e-12)


# --- 文件格式 ---


def channel_to_json(phi: KrausMap) -> Dict[str, Any]:
    return {"d": phi.dim, "kraus": [matrix_to_json(k) for k in phi.kraus]}


def channel_from_json(data: Any) -> KrausChannel:
    data = require_keys(data, ("d", "kraus"), "信道 JSON")
    if not isinstance(data["kraus"], list) or not data["kraus"]:
        raise ParseError("'kraus' 必须是非空列表")
    ops = tuple(matrix_from_json(k) for k in data["kraus"])
    if any(k.shape[0] != data["d"] for k in ops):
        raise ParseError(f"Kraus 算符维数与 d={data['d']} 不符")
    try:
        return KrausChannel(ops)
    except (InvariantViolationError, DimensionMismatchError) as e:
        raise ParseError(f"信道文件无效: {e}") from e


def save_channel(phi: KrausMap, path: Union[str, Path]) -> None:
    write_json_file(path, channel_to_json(phi), indent=get_config().json_indent)


def load_channel(path: Union[str, Path]) -> KrausChannel:
    channel = channel_from_json(read_json_file(path))
    logger.debug(f"已从 {path} 读入 d={channel.dim} 的信道 ({len(channel.kraus)} 个 Kraus 算符)")
    return channel
