# bzinfo/src/measurement_sets.py
"""
四类测量方案的构造与结构校验：
素数维完备 MUB 集、秩一 SIC-POVM、效率为 κ 的完备 MUM 集、参数为 a 的广义 SIC-POVM。
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .config import get_config
from .definitions import T_MAX_SENTINEL, Variant
from .errors import (
    DimensionMismatchError,
    InvariantViolationError,
    ParameterRangeError,
    ParseError,
    UnsupportedDimensionError,
)
from .gellmann import displacement_operators, traceless_basis
from .logger import logger
from .operator_core import as_matrix
from .utils import matrix_from_json, matrix_to_json, read_json_file, require_keys, write_json_file

TValue = Union[float, str]

MUB_MAX_DIM = 31


@dataclass(frozen=True, eq=False)
class Povm:
    """
    半正定元素之和为单位阵。strict=False 时跳过构造期检查，
    留给 validate_scheme 出报告 (读文件、注入缺陷时用)。
    """

    elements: Tuple[np.ndarray, ...]
    label: str = ""
    strict: bool = field(default=True, repr=False)

    def __post_init__(self):
        mats = []
        for element in self.elements:
            matrix = np.array(as_matrix(element), dtype=np.complex128, copy=True)
            matrix = (matrix + matrix.conj().T) / 2
            matrix.setflags(write=False)
            mats.append(matrix)
        if len(mats) < 2:
            raise InvariantViolationError("POVM 至少需要两个元素。")
        dims = {m.shape[0] for m in mats}
        if len(dims) != 1:
            raise DimensionMismatchError(f"POVM 元素维数不一致: {sorted(dims)}")
        object.__setattr__(self, "elements", tuple(mats))

        if self.strict:
            tol = get_config().positivity_tol
            completeness = completeness_deviation(self)
            if completeness > tol:
                raise InvariantViolationError(
                    f"POVM '{self.label}' 不满足完备性: ‖Σ M_j − I‖ = {completeness:.3e}"
                )
            lowest = float(np.min(np.linalg.eigvalsh(self.stack)))
            if lowest < -tol:
                raise InvariantViolationError(
                    f"POVM '{self.label}' 含非半正定元素: 最小本征值 {lowest:.3e}"
                )

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    @property
    def stack(self) -> np.ndarray:
        """形状 (n, d, d)"""
        return np.stack(self.elements)

    def __len__(self) -> int:
        return len(self.elements)


@dataclass(frozen=True, eq=False)
class MeasurementScheme:
    variant: str
    d: int
    povms: Tuple[Povm, ...]
    kappa: Optional[float] = None
    a_param: Optional[float] = None
    t: Optional[float] = None

    @property
    def b_param(self) -> Optional[float]:
        if self.a_param is None:
            return None
        d = self.d
        return (1.0 - self.a_param * d) / (d * (d * d - 1))

    def all_elements(self) -> np.ndarray:
        return np.concatenate([povm.stack for povm in self.povms])

    def min_eigenvalue(self) -> float:
        return float(np.min(np.linalg.eigvalsh(self.all_elements())))


def completeness_deviation(povm: Povm) -> float:
    total = np.sum(povm.stack, axis=0)
    return float(np.max(np.abs(total - np.eye(povm.dim))))


def gram_matrix(elements: np.ndarray) -> np.ndarray:
    """G_ab = tr(M_a M_b)，元素为 Hermitian"""
    flat = elements.reshape(elements.shape[0], -1)
    return (flat.conj() @ flat.T).real


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    factor = 3
    while factor * factor <= n:
        if n % factor == 0:
            return False
        factor += 2
    return True


def _projector_povm(vectors: np.ndarray, label: str) -> Povm:
    """vectors 的每一列是一个基矢"""
    return Povm(tuple(np.outer(v, v.conj()) for v in vectors.T), label=label)


# --- MUB ---


def mub_vectors(d: int) -> List[np.ndarray]:
    """d+1 个基，每个以列为基矢的 d×d 酉矩阵"""
    if d == 2:
        s = 1.0 / np.sqrt(2.0)
        return [
            np.eye(2, dtype=np.complex128),
            np.array([[s, s], [s, -s]], dtype=np.complex128),
            np.array([[s, s], [1j * s, -1j * s]], dtype=np.complex128),
        ]
    omega = np.exp(2j * np.pi / d)
    k = np.arange(d)
    bases = [np.eye(d, dtype=np.complex128)]
    for r in range(1, d + 1):
        # 第 j 列分量 ω^{r k² + j k}/√d，指数按 mod d 计算
        exponents = (r * k[:, None] ** 2 + k[:, None] * k[None, :]) % d
        bases.append(omega**exponents / np.sqrt(d))
    return bases


def build_mub_set(d: int) -> MeasurementScheme:
    if not is_prime(d) or not 2 <= d <= MUB_MAX_DIM:
        raise UnsupportedDimensionError(
            f"只支持素数维 2 ≤ d ≤ {MUB_MAX_DIM} 的 MUB 构造，收到 d={d}"
        )
    povms = tuple(
        _projector_povm(vectors, label=f"mub[{index}]")
        for index, vectors in enumerate(mub_vectors(d))
    )
    logger.info(f"已构造 d={d} 的 {len(povms)} 个互不偏基")
    return MeasurementScheme(variant=Variant.mub_set, d=d, povms=povms)


# --- SIC ---


def _embedded_fiducial(d: int) -> Optional[np.ndarray]:
    if d == 2:
        # Bloch 向量 (1,1,1)/√3
        cos_half = np.sqrt((1 + 1 / np.sqrt(3)) / 2)
        sin_half = np.sqrt((1 - 1 / np.sqrt(3)) / 2)
        return np.array([cos_half, np.exp(1j * np.pi / 4) * sin_half], dtype=np.complex128)
    if d == 3:
        return np.array([0.0, 1.0, -1.0], dtype=np.complex128) / np.sqrt(2.0)
    return None


def weyl_heisenberg_orbit(fiducial: np.ndarray) -> np.ndarray:
    """形状 (d², d)：{D_{p,q}|φ⟩}"""
    fiducial = np.asarray(fiducial, dtype=np.complex128).reshape(-1)
    fiducial = fiducial / np.linalg.norm(fiducial)
    return displacement_operators(fiducial.shape[0]) @ fiducial


def build_sic_povm(d: int, fiducial: Optional[np.ndarray] = None) -> MeasurementScheme:
    """N_j = (1/d)|φ_j⟩⟨φ_j|，φ_j 取自 fiducial 的 WH 轨道"""
    if fiducial is None:
        fiducial = _embedded_fiducial(d)
        if fiducial is None:
            raise UnsupportedDimensionError(
                f"d={d} 没有内置 SIC fiducial，请先用 optimize_sic_fiducial 搜索"
            )
    elif np.asarray(fiducial).reshape(-1).shape[0] != d:
        raise DimensionMismatchError(f"fiducial 长度应为 {d}")

    orbit = weyl_heisenberg_orbit(fiducial)
    elements = tuple(np.outer(v, v.conj()) / d for v in orbit)
    povm = Povm(elements, label="sic")
    logger.info(f"已构造 d={d} 的 SIC-POVM ({len(elements)} 个元素)")
    return MeasurementScheme(variant=Variant.sic_povm, d=d, povms=(povm,))


# --- 带参数 t 的构造：MUM 与广义 SIC ---


def _resolve_t(t: TValue, t_max: float, what: str) -> float:
    if isinstance(t, str):
        if t != T_MAX_SENTINEL:
            raise ParameterRangeError(f"t 只能是正实数或 '{T_MAX_SENTINEL}'，收到 '{t}'", max_feasible=t_max)
        return t_max
    t = float(t)
    if not t > 0:
        raise ParameterRangeError(
            f"{what}: t = {t} 给出平凡情形 (全部元素正比于单位阵)，需要 t > 0",
            max_feasible=t_max,
        )
    if t > t_max * (1 + 1e-12):
        raise ParameterRangeError(
            f"{what}: t = {t} 超出正定性允许的范围，最大可行 t = {t_max!r}",
            max_feasible=t_max,
        )
    return min(t, t_max)


def _max_feasible_t(operators: Sequence[np.ndarray], offset: float) -> float:
    """元素为 offset·I + t·F 时，使全部元素半正定的最大 t"""
    lowest = np.linalg.eigvalsh(np.stack(operators))[:, 0]
    return float(np.min(offset / np.abs(lowest)))


def mum_generators(d: int) -> List[List[np.ndarray]]:
    """
    第 b 组 (b = 0..d) 的 d 个无迹算符 F_b^{(j)}。
    基按连续块划分为 d+1 组，每组 d−1 个。
    """
    basis = traceless_basis(d)
    root = np.sqrt(d)
    groups = []
    for b in range(d + 1):
        block = basis[b * (d - 1) : (b + 1) * (d - 1)]
        total = np.sum(block, axis=0)
        ops = [total - (d + root) * f for f in block]
        ops.append((1 + root) * total)
        groups.append(ops)
    return groups


def build_mum_set(d: int, t: TValue = T_MAX_SENTINEL) -> MeasurementScheme:
    if d < 2:
        raise ParameterRangeError(f"维数必须 ≥ 2，收到 {d}")
    groups = mum_generators(d)
    t_max = _max_feasible_t([op for ops in groups for op in ops], 1.0 / d)
    t_value = _resolve_t(t, t_max, "MUM")

    identity = np.eye(d, dtype=np.complex128) / d
    povms = tuple(
        Povm(tuple(identity + t_value * op for op in ops), label=f"mum[{b}]")
        for b, ops in enumerate(groups)
    )
    kappa = 1.0 / d + t_value**2 * (d - 1) * (1 + np.sqrt(d)) ** 2
    logger.info(f"已构造 d={d} 的 MUM 集: t={t_value:.6g} (t_max={t_max:.6g}), κ={kappa:.10g}")
    return MeasurementScheme(variant=Variant.mum_set, d=d, povms=povms, kappa=float(kappa), t=t_value)


def general_sic_generators(d: int) -> List[np.ndarray]:
    """G_k = F − d(d+1)F_k (k < d²)，G_{d²} = (d+1)F，F 为全部基之和"""
    basis = traceless_basis(d)
    total = np.sum(basis, axis=0)
    ops = [total - d * (d + 1) * f for f in basis]
    ops.append((d + 1) * total)
    return ops


def build_general_sic(d: int, t: TValue = T_MAX_SENTINEL) -> MeasurementScheme:
    if d < 2:
        raise ParameterRangeError(f"维数必须 ≥ 2，收到 {d}")
    ops = general_sic_generators(d)
    t_max = _max_feasible_t(ops, 1.0 / d**2)
    t_value = _resolve_t(t, t_max, "广义 SIC")

    identity = np.eye(d, dtype=np.complex128) / d**2
    povm = Povm(tuple(identity + t_value * op for op in ops), label="gsic")
    a_param = 1.0 / d**3 + t_value**2 * (d + 1) ** 3 * (d - 1)
    logger.info(f"已构造 d={d} 的广义 SIC-POVM: t={t_value:.6g} (t_max={t_max:.6g}), a={a_param:.10g}")
    return MeasurementScheme(variant=Variant.general_sic, d=d, povms=(povm,), a_param=float(a_param), t=t_value)


# --- 校验 ---


@dataclass
class ValidationReport:
    variant: str
    d: int
    tolerance: float
    checks: Dict[str, float] = field(default_factory=dict)
    derived: Dict[str, float] = field(default_factory=dict)

    @property
    def failed(self) -> List[str]:
        return [name for name, deviation in self.checks.items() if not deviation <= self.tolerance]

    @property
    def passed(self) -> bool:
        return not self.failed

    def to_dict(self) -> Dict[str, Any]:
        return {
            "variant": self.variant,
            "d": self.d,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "failed": self.failed,
            "checks": dict(self.checks),
            "derived": dict(self.derived),
        }


def _range_violation(value: float, lower_open: float, upper_closed: float, tol: float) -> float:
    """value ∈ (lower, upper] 时为 0；落在排除的端点上记为 1"""
    if lower_open + tol < value <= upper_closed + tol:
        return 0.0
    return 1.0 + max(lower_open - value, value - upper_closed, 0.0)


def _off_diagonal(gram: np.ndarray) -> np.ndarray:
    return gram[~np.eye(gram.shape[0], dtype=bool)]


def basis_deviations(povms: Sequence[Povm]) -> Tuple[float, float]:
    """
    (正交归一偏差, 互不偏偏差)。
    同一基内 tr(P_j P_k) 应为 δ_jk，不同基之间应为 1/d。
    """
    d = povms[0].dim
    gram = gram_matrix(np.concatenate([p.stack for p in povms]))
    basis_index = np.repeat(np.arange(len(povms)), [len(p) for p in povms])
    same = basis_index[:, None] == basis_index[None, :]
    orthonormality = float(np.max(np.abs(gram[same] - np.eye(gram.shape[0])[same])))
    cross = gram[~same]
    unbiasedness = float(np.max(np.abs(cross - 1.0 / d))) if cross.size else 0.0
    return orthonormality, unbiasedness


def _structure(scheme: MeasurementScheme, povm_count: int, element_count: int) -> float:
    if len(scheme.povms) != povm_count:
        return 1.0
    return 0.0 if all(len(p) == element_count for p in scheme.povms) else 1.0


def validate_scheme(scheme: MeasurementScheme, tol: Optional[float] = None) -> ValidationReport:
    """逐项给出最大绝对偏差，全部 ≤ tol 才算通过；只出报告，不抛异常"""
    tol = get_config().validation_tol if tol is None else tol
    d = scheme.d
    report = ValidationReport(variant=scheme.variant, d=d, tolerance=tol)
    checks = report.checks

    if any(p.dim != d for p in scheme.povms):
        checks["dimension"] = 1.0
        return report

    checks["completeness"] = max(completeness_deviation(p) for p in scheme.povms)
    lowest = scheme.min_eigenvalue()
    checks["positivity"] = max(0.0, -lowest)
    report.derived["min_eigenvalue"] = lowest

    if scheme.variant == Variant.mub_set:
        checks["structure"] = _structure(scheme, d + 1, d)
        checks["orthonormality"], checks["unbiasedness"] = basis_deviations(scheme.povms)

    elif scheme.variant == Variant.sic_povm:
        checks["structure"] = _structure(scheme, 1, d * d)
        elements = scheme.all_elements()
        gram = gram_matrix(elements)
        traces = np.einsum("nii->n", elements).real
        checks["trace"] = float(np.max(np.abs(traces - 1.0 / d)))
        checks["rank_one"] = float(np.max(np.abs(np.diag(gram) - 1.0 / d**2)))
        checks["overlap"] = float(np.max(np.abs(d * d * _off_diagonal(gram) - 1.0 / (d + 1))))

    elif scheme.variant == Variant.mum_set:
        checks["structure"] = _structure(scheme, d + 1, d)
        elements = scheme.all_elements()
        gram = gram_matrix(elements)
        povm_index = np.repeat(np.arange(len(scheme.povms)), [len(p) for p in scheme.povms])
        same = povm_index[:, None] == povm_index[None, :]
        diagonal = np.eye(gram.shape[0], dtype=bool)
        kappa_oracle = float(np.mean(np.diag(gram)))
        kappa = scheme.kappa if scheme.kappa is not None else kappa_oracle
        report.derived["kappa_from_gram"] = kappa_oracle
        traces = np.einsum("nii->n", elements).real
        checks["trace"] = float(np.max(np.abs(traces - 1.0)))
        cross = gram[~same]
        checks["cross_povm"] = float(np.max(np.abs(cross - 1.0 / d))) if cross.size else 0.0
        checks["efficiency"] = float(np.max(np.abs(np.diag(gram) - kappa)))
        within = gram[same & ~diagonal]
        checks["within_povm"] = float(np.max(np.abs(within - (1.0 - kappa) / (d - 1))))
        checks["kappa_range"] = _range_violation(kappa, 1.0 / d, 1.0, tol)

    elif scheme.variant == Variant.general_sic:
        checks["structure"] = _structure(scheme, 1, d * d)
        elements = scheme.all_elements()
        gram = gram_matrix(elements)
        a_oracle = float(np.mean(np.diag(gram)))
        b_oracle = float(np.mean(_off_diagonal(gram)))
        a_param = scheme.a_param if scheme.a_param is not None else a_oracle
        report.derived["a_from_gram"] = a_oracle
        report.derived["b_from_gram"] = b_oracle
        traces = np.einsum("nii->n", elements).real
        checks["trace"] = float(np.max(np.abs(traces - 1.0 / d)))
        checks["self_products"] = float(np.max(np.abs(np.diag(gram) - a_param)))
        checks["cross_products"] = float(np.max(np.abs(_off_diagonal(gram) - b_oracle)))
        checks["b_relation"] = abs(b_oracle - (1.0 - a_param * d) / (d * (d * d - 1)))
        checks["a_range"] = _range_violation(a_param, 1.0 / d**3, 1.0 / d**2, tol)

    else:
        checks["variant"] = 1.0

    level = "debug" if report.passed else "warning"
    getattr(logger, level)(f"方案校验 {scheme.variant} d={d}: {'通过' if report.passed else '失败 ' + str(report.failed)}")
    return report


def require_valid(scheme: MeasurementScheme) -> MeasurementScheme:
    report = validate_scheme(scheme)
    if not report.passed:
        raise InvariantViolationError(f"测量方案未通过结构校验: {report.failed}")
    return scheme


# --- 文件格式 ---


def scheme_to_json(scheme: MeasurementScheme) -> Dict[str, Any]:
    document: Dict[str, Any] = {
        "variant": scheme.variant,
        "d": scheme.d,
        "povms": [[matrix_to_json(m) for m in povm.elements] for povm in scheme.povms],
    }
    if scheme.kappa is not None:
        document["kappa"] = scheme.kappa
    if scheme.a_param is not None:
        document["a"] = scheme.a_param
    if scheme.t is not None:
        document["t"] = scheme.t
    return document


def scheme_from_json(data: Any) -> MeasurementScheme:
    data = require_keys(data, ("variant", "d", "povms"), "方案 JSON")
    variant = data["variant"]
    if variant not in Variant.all:
        raise ParseError(f"未知的方案类型 '{variant}'")
    d = data["d"]
    if not isinstance(d, int) or isinstance(d, bool) or d < 2:
        raise ParseError(f"方案维数 'd' 必须是 ≥ 2 的整数，收到 {d!r}")
    if not isinstance(data["povms"], list) or not data["povms"]:
        raise ParseError("'povms' 必须是非空列表")

    povms = []
    for index, raw in enumerate(data["povms"]):
        if not isinstance(raw, list):
            raise ParseError(f"第 {index} 个 POVM 不是列表")
        matrices = tuple(matrix_from_json(m) for m in raw)
        if any(m.shape[0] != d for m in matrices):
            raise ParseError(f"第 {index} 个 POVM 的元素维数与 d={d} 不符")
        try:
            povms.append(Povm(matrices, label=f"{variant}[{index}]", strict=False))
        except (InvariantViolationError, DimensionMismatchError) as e:
            raise ParseError(f"第 {index} 个 POVM 无法解析: {e}") from e

    def optional_float(key: str) -> Optional[float]:
        if data.get(key) is None:
            return None
        try:
            return float(data[key])
        except (TypeError, ValueError) as e:
            raise ParseError(f"字段 '{key}' 不是实数: {data[key]!r}") from e

    return MeasurementScheme(
        variant=variant,
        d=d,
        povms=tuple(povms),
        kappa=optional_float("kappa"),
        a_param=optional_float("a"),
        t=optional_float("t"),
    )


def save_scheme(scheme: MeasurementScheme, path: Union[str, Path]) -> None:
    write_json_file(path, scheme_to_json(scheme), indent=get_config().json_indent)


def load_scheme(path: Union[str, Path]) -> MeasurementScheme:
    scheme = scheme_from_json(read_json_file(path))
    logger.debug(f"已从 {path} 读入 {scheme.variant} d={scheme.d}")
    return scheme
