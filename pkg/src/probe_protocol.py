# bzinfo/src/probe_protocol.py
"""
黑盒信道的非保单位性估计：
把 ρ* 送进黑盒，用选定的测量方案对输出做 N 次测量，
估计重合指数之和，反解闭式得到 tr(Φ(ρ*)²)，再给出 ‖Γ_Φ‖₂ 与映射范数上界。
"""
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Union

import numpy as np

from .bz_information import closed_form_coefficients, probabilities
from .channels import KrausChannel, apply
from .config import get_config
from .errors import DimensionMismatchError, InvariantViolationError, ParameterRangeError, ParseError
from .logger import logger
from .measurement_sets import MeasurementScheme, Povm, load_scheme, require_valid, scheme_from_json, scheme_to_json
from .operator_core import DensityOperator
from .utils import derive_rng, read_json_file, require_keys, write_json_file

SHOTS_STREAM = 0
BOOTSTRAP_STREAM = 1


class BlackBox:
    """只暴露 apply 的信道句柄；探测流程看不到 Kraus 算符"""

    def __init__(self, action: Callable[[DensityOperator], DensityOperator], dim: int):
        self._action = action
        self.dim = dim

    @classmethod
    def from_channel(cls, channel: KrausChannel) -> "BlackBox":
        return cls(lambda rho: apply(channel, rho), channel.dim)

    def apply(self, rho: DensityOperator) -> DensityOperator:
        if rho.dim != self.dim:
            raise DimensionMismatchError(f"黑盒维数 {self.dim} 与输入维数 {rho.dim} 不一致")
        return self._action(rho)


# --- 单次计数 ---


def _check_eta(eta: Optional[float]) -> None:
    if eta is not None and not 0.0 <= eta <= 1.0:
        raise ParameterRangeError(f"探测效率 η 必须在 [0, 1] 内，收到 {eta}")


def simulate_shots(
    povm: Povm,
    rho: DensityOperator,
    shots: int,
    seed: Union[int, np.random.Generator] = 0,
    eta: Optional[float] = None,
) -> np.ndarray:
    """多项分布抽样；给定 η 时最后一个计数是未响应 ∅"""
    if shots < 1:
        raise ParameterRangeError(f"测量次数必须 ≥ 1，收到 {shots}")
    _check_eta(eta)
    rng = seed if isinstance(seed, np.random.Generator) else derive_rng(int(seed))
    probs = probabilities(povm, rho).probs
    if eta is not None:
        probs = np.append(eta * probs, 1.0 - eta)
    probs = probs / probs.sum()
    return rng.multinomial(shots, probs)


def estimate_coincidence(counts: Sequence[int]) -> float:
    """无偏碰撞估计 Σ n_j(n_j − 1) / (N(N − 1))"""
    counts = np.asarray(counts, dtype=np.int64)
    total = int(counts.sum())
    if total < 2:
        raise ParameterRangeError(f"碰撞估计至少需要 2 次测量，收到 {total}")
    return float(np.sum(counts * (counts - 1)) / (total * (total - 1.0)))


# --- 记录与报告 ---


@dataclass(eq=False)
class ShotRecord:
    scheme: MeasurementScheme
    shots: int
    seed: int
    counts: List[np.ndarray]
    eta: Optional[float] = None

    def __post_init__(self):
        _check_eta(self.eta)
        if len(self.counts) != len(self.scheme.povms):
            raise InvariantViolationError(
                f"计数组数 {len(self.counts)} 与 POVM 个数 {len(self.scheme.povms)} 不一致"
            )
        extra = 0 if self.eta is None else 1
        normalized = []
        for index, (counts, povm) in enumerate(zip(self.counts, self.scheme.povms)):
            counts = np.asarray(counts, dtype=np.int64)
            if counts.shape != (len(povm) + extra,):
                raise InvariantViolationError(
                    f"第 {index} 组计数长度应为 {len(povm) + extra}，实际为 {counts.size}"
                )
            if np.any(counts < 0):
                raise InvariantViolationError(f"第 {index} 组计数出现负数")
            if int(counts.sum()) != self.shots:
                raise InvariantViolationError(
                    f"第 {index} 组计数之和为 {int(counts.sum())}，应为 N = {self.shots}"
                )
            normalized.append(counts)
        self.counts = normalized

    def to_dict(self) -> Dict[str, Any]:
        document: Dict[str, Any] = {
            "scheme": scheme_to_json(self.scheme),
            "N": self.shots,
            "seed": self.seed,
            "counts": [c.tolist() for c in self.counts],
        }
        if self.eta is not None:
            document["eta"] = self.eta
        return document


@dataclass
class ProbeReport:
    d: int
    variant: str
    shots: int
    eta: Optional[float]
    coincidence_sum_estimate: float
    purity_estimate: float
    purity_excess: float
    gamma_hs_norm_estimate: float
    map_norm_bound_estimate: float
    standard_error: float
    gamma_standard_error: float
    bound_standard_error: float
    bootstrap_resamples: int
    consistent: bool
    record: Optional[ShotRecord] = field(default=None, repr=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "d": self.d,
            "variant": self.variant,
            "shots": self.shots,
            "eta": self.eta,
            "coincidence_sum_estimate": self.coincidence_sum_estimate,
            "purity_estimate": self.purity_estimate,
            "purity_excess": self.purity_excess,
            "gamma_hs_norm_estimate": self.gamma_hs_norm_estimate,
            "map_norm_bound_estimate": self.map_norm_bound_estimate,
            "standard_error": self.standard_error,
            "gamma_standard_error": self.gamma_standard_error,
            "bound_standard_error": self.bound_standard_error,
            "bootstrap_resamples": self.bootstrap_resamples,
            "consistent": self.consistent,
        }


def _corrected_coincidences(counts: Sequence[np.ndarray], eta: Optional[float]) -> np.ndarray:
    """各 POVM 的估计 C；有 η 时由 C^(η) = η²C + (1−η)² 反解"""
    estimates = np.array([estimate_coincidence(c) for c in counts])
    if eta is None:
        return estimates
    if eta == 0:
        raise ParameterRangeError("η = 0 时没有任何探测信息，无法反解纯度")
    return (estimates - (1.0 - eta) ** 2) / eta**2


def _invert(scheme: MeasurementScheme, coincidence_total: float) -> float:
    slope, intercept = closed_form_coefficients(scheme)
    if abs(slope) <= get_config().validation_tol:
        raise ParameterRangeError(
            f"{scheme.variant} d={scheme.d} 的重合指数之和与纯度无关 (斜率 {slope:.3e})，无法反解纯度"
        )
    return (coincidence_total - intercept) / slope


def _gamma_and_bound(d: int, state_purity: float) -> tuple:
    gamma = math.sqrt(max(0.0, state_purity - 1.0 / d))
    return gamma, 1.0 + math.sqrt(d * (d - 1)) * gamma


def report_from_shots(record: ShotRecord, bootstrap_resamples: Optional[int] = None) -> ProbeReport:
    """同一份记录永远给出同一份报告 (bootstrap 的随机流由记录里的种子派生)"""
    cfg = get_config()
    resamples = cfg.bootstrap_resamples if bootstrap_resamples is None else bootstrap_resamples
    if resamples < 0:
        raise ParameterRangeError(f"bootstrap 重采样次数不能为负，收到 {resamples}")
    scheme, eta, d = record.scheme, record.eta, record.scheme.d

    coincidence_total = float(np.sum(_corrected_coincidences(record.counts, eta)))
    state_purity = _invert(scheme, coincidence_total)
    gamma, bound = _gamma_and_bound(d, state_purity)

    rng = derive_rng(record.seed, BOOTSTRAP_STREAM)
    boot = np.empty((resamples, 3))
    frequencies = [c / c.sum() for c in record.counts]
    for r in range(resamples):
        resampled = [rng.multinomial(record.shots, f) for f in frequencies]
        p = _invert(scheme, float(np.sum(_corrected_coincidences(resampled, eta))))
        boot[r] = (p, *_gamma_and_bound(d, p))
    if resamples > 1:
        stderr, gamma_stderr, bound_stderr = (float(x) for x in boot.std(axis=0, ddof=1))
    else:
        stderr = gamma_stderr = bound_stderr = 0.0

    slack = cfg.inconsistency_sigma * stderr + 1e-12
    consistent = 1.0 / d - slack <= state_purity <= 1.0 + slack
    if not consistent:
        logger.warning(
            f"反演纯度 {state_purity:.10g} 超出 [1/d, 1] 达 {cfg.inconsistency_sigma} 个标准误，方案或黑盒可能不对"
        )

    return ProbeReport(
        d=d,
        variant=scheme.variant,
        shots=record.shots,
        eta=eta,
        coincidence_sum_estimate=coincidence_total,
        purity_estimate=state_purity,
        purity_excess=state_purity - 1.0 / d,
        gamma_hs_norm_estimate=gamma,
        map_norm_bound_estimate=bound,
        standard_error=stderr,
        gamma_standard_error=gamma_stderr,
        bound_standard_error=bound_stderr,
        bootstrap_resamples=resamples,
        consistent=consistent,
        record=record,
    )


def probe_channel(
    blackbox: BlackBox,
    scheme: MeasurementScheme,
    shots: int,
    seed: int = 0,
    eta: Optional[float] = None,
    bootstrap_resamples: Optional[int] = None,
) -> ProbeReport:
    """ρ* 进黑盒，对输出逐个 POVM 测 N 次；第 b 个 POVM 的随机流为 (seed, 0, b)"""
    require_valid(scheme)
    if blackbox.dim != scheme.d:
        raise DimensionMismatchError(f"黑盒维数 {blackbox.dim} 与方案维数 {scheme.d} 不一致")
    _check_eta(eta)
    if eta == 0:
        raise ParameterRangeError("η = 0 时没有任何探测信息，无法反解纯度")

    output = blackbox.apply(DensityOperator.maximally_mixed(scheme.d))
    counts = [
        simulate_shots(povm, output, shots, derive_rng(seed, SHOTS_STREAM, b), eta)
        for b, povm in enumerate(scheme.povms)
    ]
    record = ShotRecord(scheme=scheme, shots=shots, seed=seed, counts=counts, eta=eta)
    report = report_from_shots(record, bootstrap_resamples)
    logger.info(
        f"探测完成: {scheme.variant} d={scheme.d} N={shots}, 纯度 {report.purity_estimate:.8g} ± {report.standard_error:.2g}, ‖Γ‖₂ ≈ {report.gamma_hs_norm_estimate:.8g}"
    )
    return report


# --- 文件格式 ---


def save_shots(record: ShotRecord, path: Union[str, Path]) -> None:
    write_json_file(path, record.to_dict(), indent=get_config().json_indent)


def shots_from_json(data: Any, base_dir: Optional[Path] = None) -> ShotRecord:
    data = require_keys(data, ("scheme", "N", "seed", "counts"), "计数记录 JSON")
    raw_scheme = data["scheme"]
    if isinstance(raw_scheme, str):
        scheme_path = Path(raw_scheme)
        if base_dir is not None and not scheme_path.is_absolute():
            scheme_path = base_dir / scheme_path
        scheme = load_scheme(scheme_path)
    else:
        scheme = scheme_from_json(raw_scheme)
    try:
        require_valid(scheme)
    except InvariantViolationError as e:
        raise ParseError(f"计数记录里的测量方案无效: {e}") from e

    shots, seed = data["N"], data["seed"]
    if not isinstance(shots, int) or isinstance(shots, bool) or shots < 1:
        raise ParseError(f"'N' 必须是正整数，收到 {shots!r}")
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ParseError(f"'seed' 必须是非负整数，收到 {seed!r}")
    eta = data.get("eta")
    if eta is not None and not isinstance(eta, (int, float)):
        raise ParseError(f"'eta' 必须是实数，收到 {eta!r}")

    counts = data["counts"]
    if not isinstance(counts, list) or not all(
        isinstance(row, list) and all(isinstance(n, int) and not isinstance(n, bool) for n in row)
        for row in counts
    ):
        raise ParseError("'counts' 必须是整数列表的列表")
    try:
        return ShotRecord(
            scheme=scheme,
            shots=shots,
            seed=seed,
            counts=[np.array(row, dtype=np.int64) for row in counts],
            eta=None if eta is None else float(eta),
        )
    except (InvariantViolationError, ParameterRangeError) as e:
        raise ParseError(f"计数记录无效: {e}") from e


def load_shots(path: Union[str, Path]) -> ShotRecord:
    path = Path(path)
    record = shots_from_json(read_json_file(path), base_dir=path.parent)
    logger.debug(f"已从 {path} 读入计数记录: {record.scheme.variant} d={record.scheme.d} N={record.shots}")
    return record
