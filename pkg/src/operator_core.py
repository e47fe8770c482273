# bzinfo/src/operator_core.py
# d 维 Hilbert 空间上的稠密复矩阵运算：Hermitian 算符、密度算符、内积、本征分解、Schatten 范数
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
from scipy.stats import unitary_group

from .config import get_config
from .definitions import StateKind
from .errors import (
    DimensionMismatchError,
    EigenDecompositionError,
    InvariantViolationError,
    ParameterRangeError,
    ParseError,
)
from .logger import logger
from .utils import as_rng, matrix_from_json, matrix_to_json, read_json_file, write_json_file

SeedLike = Union[int, np.random.Generator, None]


def as_matrix(x: Any) -> np.ndarray:
    """接受 ndarray 或 HermitianOperator/DensityOperator，统一返回方阵"""
    if isinstance(x, HermitianOperator):
        return x.matrix
    matrix = np.asarray(x, dtype=np.complex128)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionMismatchError(f"需要方阵，收到形状 {matrix.shape}")
    return matrix


def _readonly(matrix: np.ndarray) -> np.ndarray:
    matrix = np.array(matrix, dtype=np.complex128, copy=True)
    matrix.setflags(write=False)
    return matrix


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """构造时检查 ‖X − X†‖∞ 并对称化为 (X + X†)/2"""

    matrix: np.ndarray

    def __post_init__(self):
        matrix = as_matrix(self.matrix)
        if matrix.shape[0] < 2:
            raise DimensionMismatchError("维数必须 ≥ 2。")
        tol = get_config().hermitian_tol
        skew = float(np.max(np.abs(matrix - matrix.conj().T)))
        if skew > tol:
            raise InvariantViolationError(f"矩阵不是 Hermitian 的: ‖X − X†‖∞ = {skew:.3e} > {tol:.0e}")
        object.__setattr__(self, "matrix", _readonly((matrix + matrix.conj().T) / 2))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class DensityOperator(HermitianOperator):
    """迹为 1 的半正定算符；接近 0 的负本征值会被截断"""

    def __post_init__(self):
        super().__post_init__()
        cfg = get_config()
        trace = complex(np.trace(self.matrix))
        if abs(trace - 1.0) > cfg.trace_tol:
            raise InvariantViolationError(f"密度算符的迹必须为 1，实际为 {trace:.15g}")

        eigenvalues, eigenvectors = np.linalg.eigh(self.matrix)
        if eigenvalues[0] < -cfg.positivity_tol:
            raise InvariantViolationError(
                f"密度算符不是半正定的: 最小本征值 {eigenvalues[0]:.3e}"
            )
        if eigenvalues[0] < 0:
            clamped = np.clip(eigenvalues, 0.0, None)
            clamped /= clamped.sum()
            rebuilt = (eigenvectors * clamped) @ eigenvectors.conj().T
            object.__setattr__(self, "matrix", _readonly((rebuilt + rebuilt.conj().T) / 2))

    @classmethod
    def maximally_mixed(cls, d: int) -> "DensityOperator":
        """ρ* = I/d"""
        return cls(np.eye(d, dtype=np.complex128) / d)

    @classmethod
    def from_vector(cls, psi: np.ndarray) -> "DensityOperator":
        psi = np.asarray(psi, dtype=np.complex128).reshape(-1)
        norm = np.linalg.norm(psi)
        if norm == 0:
            raise InvariantViolationError("零向量不能表示纯态。")
        psi = psi / norm
        return cls(np.outer(psi, psi.conj()))


def _check_same_dim(x: np.ndarray, y: np.ndarray) -> None:
    if x.shape != y.shape:
        raise DimensionMismatchError(f"维数不一致: {x.shape} vs {y.shape}")


def hs_inner(x: Any, y: Any) -> complex:
    """Hilbert–Schmidt 内积 tr(X†Y)"""
    x, y = as_matrix(x), as_matrix(y)
    _check_same_dim(x, y)
    return complex(np.vdot(x, y))


def eigendecompose(h: Any) -> Tuple[np.ndarray, np.ndarray]:
    """返回升序本征值和酉的本征向量矩阵，并检查重构误差"""
    matrix = as_matrix(h)
    try:
        eigenvalues, eigenvectors = np.linalg.eigh(matrix)
    except np.linalg.LinAlgError as e:
        raise EigenDecompositionError(f"本征分解不收敛: {e}") from e

    tol = get_config().reconstruction_tol
    hermitian = (matrix + matrix.conj().T) / 2
    error = float(np.max(np.abs((eigenvectors * eigenvalues) @ eigenvectors.conj().T - hermitian)))
    if error > tol * max(1.0, float(np.max(np.abs(hermitian)))):
        raise EigenDecompositionError(f"本征分解重构误差过大: {error:.3e}")
    return eigenvalues, eigenvectors


def purity(rho: Any) -> float:
    """tr(ρ²)"""
    matrix = as_matrix(rho)
    return float(np.real(np.vdot(matrix, matrix)))


def schatten_norm(x: Any, q: float) -> float:
    """(Σ s_j^q)^{1/q}；q = math.inf 时为谱范数"""
    if not q >= 1:
        raise ParameterRangeError(f"Schatten 范数要求 q ≥ 1，收到 {q}")
    matrix = as_matrix(x)
    if isinstance(x, HermitianOperator) or np.allclose(
        matrix, matrix.conj().T, atol=get_config().hermitian_tol, rtol=0
    ):
        singular_values = np.abs(np.linalg.eigvalsh(matrix))
    else:
        singular_values = np.linalg.svd(matrix, compute_uv=False)
    if math.isinf(q):
        return float(np.max(singular_values))
    if q == 2:
        return float(np.sqrt(np.sum(singular_values**2)))
    return float(np.sum(singular_values**q) ** (1.0 / q))


def sample_random_state(d: int, kind: str = StateKind.pure, seed: SeedLike = 0) -> DensityOperator:
    """
    pure:  |ψ⟩⟨ψ|，ψ 由 i.i.d. 复高斯分量归一化得到 (Haar 分布)
    mixed: GG†/tr(GG†)，G 为复 Ginibre 矩阵 (Hilbert–Schmidt 测度)
    """
    if d < 2:
        raise ParameterRangeError(f"维数必须 ≥ 2，收到 {d}")
    rng = as_rng(seed)
    if kind == StateKind.pure:
        psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        return DensityOperator.from_vector(psi)
    if kind == StateKind.mixed:
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        gg = g @ g.conj().T
        return DensityOperator(gg / np.trace(gg).real)
    raise ParameterRangeError(f"未知的态类型 '{kind}'，可选 pure|mixed")


def sample_random_unitary(d: int, seed: SeedLike = 0) -> np.ndarray:
    """Haar 随机酉矩阵"""
    if d < 2:
        raise ParameterRangeError(f"维数必须 ≥ 2，收到 {d}")
    return np.asarray(unitary_group.rvs(d, random_state=as_rng(seed)), dtype=np.complex128)


def conjugate(rho: DensityOperator, unitary: np.ndarray) -> DensityOperator:
    """UρU†"""
    return DensityOperator(unitary @ rho.matrix @ unitary.conj().T)


# --- 态文件 ---


def state_to_json(rho: DensityOperator) -> Dict[str, Any]:
    return matrix_to_json(rho.matrix)


def state_from_json(data: Any) -> DensityOperator:
    try:
        return DensityOperator(matrix_from_json(data))
    except (InvariantViolationError, DimensionMismatchError) as e:
        raise ParseError(f"文件中的矩阵不是合法的密度算符: {e}") from e


def save_state(rho: DensityOperator, path: Union[str, Path], indent: Optional[int] = None) -> None:
    write_json_file(path, state_to_json(rho), indent=get_config().json_indent if indent is None else indent)


def load_state(path: Union[str, Path]) -> DensityOperator:
    rho = state_from_json(read_json_file(path))
    logger.debug(f"已从 {path} 读入 d={rho.dim} 的密度算符")
    return rho
