# bzinfo/src/gellmann.py
"""
算符基：归一化的广义 Gell-Mann 矩阵 (tr(F_a F_b) = δ_ab) 和 Weyl–Heisenberg 位移算符。
"""
from functools import lru_cache
from typing import List, Tuple

import numpy as np


def gellmann(j: int, k: int, d: int) -> np.ndarray:
    """
    未归一化的广义 Gell-Mann 矩阵，下标从 1 开始：
    j > k 对称族，j < k 反对称族，j == k < d 对角族，j == k == d 返回单位阵。
    """
    if j > k:
        matrix = np.zeros((d, d), dtype=np.complex128)
        matrix[j - 1, k - 1] = 1
        matrix[k - 1, j - 1] = 1
    elif k > j:
        matrix = np.zeros((d, d), dtype=np.complex128)
        matrix[j - 1, k - 1] = -1j
        matrix[k - 1, j - 1] = 1j
    elif j < d:
        diagonal = [1.0 if n <= j else (-float(j) if n == j + 1 else 0.0) for n in range(1, d + 1)]
        matrix = np.sqrt(2.0 / (j * (j + 1))) * np.diag(diagonal).astype(np.complex128)
    else:
        matrix = np.eye(d, dtype=np.complex128)
    return matrix


@lru_cache(maxsize=32)
def _orthonormal_basis(d: int) -> Tuple[np.ndarray, ...]:
    symmetric = [gellmann(j, k, d) for k in range(1, d + 1) for j in range(k + 1, d + 1)]
    antisymmetric = [gellmann(j, k, d) for j in range(1, d + 1) for k in range(j + 1, d + 1)]
    diagonal = [gellmann(j, j, d) for j in range(1, d)]
    basis = []
    for matrix in symmetric + antisymmetric + diagonal:
        matrix = matrix / np.sqrt(2.0)
        matrix.setflags(write=False)
        basis.append(matrix)
    return tuple(basis)


def traceless_basis(d: int) -> List[np.ndarray]:
    """d² − 1 个无迹 Hermitian 矩阵，顺序：对称族、反对称族、对角族，tr(F_a F_b) = δ_ab"""
    if d < 2:
        raise ValueError(f"维数必须 ≥ 2，收到 {d}")
    return list(_orthonormal_basis(d))


def clock_and_shift(d: int) -> Tuple[np.ndarray, np.ndarray]:
    """Z|k⟩ = ω^k|k⟩，X|k⟩ = |k+1 mod d⟩"""
    omega = np.exp(2j * np.pi / d)
    clock = np.diag(omega ** np.arange(d))
    shift = np.roll(np.eye(d, dtype=np.complex128), 1, axis=0)
    return clock, shift


@lru_cache(maxsize=32)
def _displacements(d: int) -> np.ndarray:
    clock, shift = clock_and_shift(d)
    ops = np.empty((d * d, d, d), dtype=np.complex128)
    for p in range(d):
        shift_p = np.linalg.matrix_power(shift, p)
        for q in range(d):
            ops[p * d + q] = shift_p @ np.linalg.matrix_power(clock, q)
    ops.setflags(write=False)
    return ops


def displacement_operators(d: int) -> np.ndarray:
    """形状 (d², d, d) 的数组，第 p·d + q 个是 D_{p,q} = X^p Z^q (整体相位对投影无影响，省略)"""
    return _displacements(d)
