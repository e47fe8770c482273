# bzinfo/src/sic_search.py
"""
在 Weyl–Heisenberg 轨道上最小化四次帧势 Σ_{j,k} |⟨φ_j|φ_k⟩|⁴，寻找 SIC fiducial。
帧势的下界 2d³/(d+1) 恰好由 SIC 向量组取到。
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.optimize

from .config import get_config
from .errors import ParameterRangeError
from .gellmann import displacement_operators
from .logger import logger
from .utils import derive_rng

SEARCH_MIN_DIM = 2
SEARCH_MAX_DIM = 8


@dataclass
class SicSearchResult:
    d: int
    fiducial: np.ndarray
    potential: float
    target: float
    success: bool
    restarts_used: int
    overlap_deviation: float

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "fiducial": [[float(z.real), float(z.imag)] for z in self.fiducial],
            "potential": self.potential,
            "target": self.target,
            "success": self.success,
            "restarts_used": self.restarts_used,
            "overlap_deviation": self.overlap_deviation,
        }


def sic_target_potential(d: int) -> float:
    return 2.0 * d**3 / (d + 1)


def frame_potential(fiducial: np.ndarray) -> float:
    """
    WH 轨道的帧势。轨道对群乘法封闭 (差一个相位)，
    所以 Σ_{j,k} |⟨φ_j|φ_k⟩|⁴ = d² Σ_k |⟨φ|D_k φ⟩|⁴。
    """
    value, _ = _potential_and_gradient(_to_real(fiducial), fiducial.shape[0])
    return value


def _to_real(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=np.complex128).reshape(-1)
    return np.concatenate([psi.real, psi.imag])


def _to_complex(x: np.ndarray, d: int) -> np.ndarray:
    return x[:d] + 1j * x[d:]


def _potential_and_gradient(x: np.ndarray, d: int) -> Tuple[float, np.ndarray]:
    ops = displacement_operators(d)
    psi = _to_complex(x, d)
    norm_sq = float(np.vdot(psi, psi).real)

    shifted = ops @ psi  # D_k ψ
    shifted_adj = np.conj(np.transpose(ops, (0, 2, 1))) @ psi  # D_k† ψ
    c = shifted @ psi.conj()  # ψ† D_k ψ
    c_abs_sq = np.abs(c) ** 2
    numerator = float(np.sum(c_abs_sq**2))

    # Wirtinger 导数 ∂/∂ψ̄
    d_numerator = np.sum(
        (2 * c_abs_sq)[:, None] * (np.conj(c)[:, None] * shifted + c[:, None] * shifted_adj),
        axis=0,
    )
    d_value = d_numerator / norm_sq**4 - 4 * numerator * psi / norm_sq**5
    value = d * d * numerator / norm_sq**4
    gradient = 2 * d * d * np.concatenate([d_value.real, d_value.imag])
    return value, gradient


def _overlap_residuals(x: np.ndarray, d: int) -> np.ndarray:
    """k ≠ 0 时 |⟨φ|D_k φ⟩|² − 1/(d+1)；全部为 0 即 SIC"""
    psi = _to_complex(x, d)
    c = displacement_operators(d)[1:] @ psi @ psi.conj()
    return np.abs(c) ** 2 / float(np.vdot(psi, psi).real) ** 2 - 1.0 / (d + 1)


def _refine(x: np.ndarray, d: int, max_iters: int) -> np.ndarray:
    """对重叠残差做最小二乘收尾"""
    result = scipy.optimize.least_squares(
        _overlap_residuals, x, args=(d,), method="trf", ftol=1e-15, xtol=1e-15, gtol=1e-15, max_nfev=max_iters
    )
    return result.x


def orbit_overlap_deviation(fiducial: np.ndarray) -> float:
    """max_{j≠k} | |⟨φ_j|φ_k⟩|² − 1/(d+1) |"""
    d = fiducial.shape[0]
    phi = fiducial / np.linalg.norm(fiducial)
    orbit = displacement_operators(d) @ phi
    overlaps = np.abs(orbit.conj() @ orbit.T) ** 2
    off = overlaps[~np.eye(d * d, dtype=bool)]
    return float(np.max(np.abs(off - 1.0 / (d + 1))))


def optimize_sic_fiducial(
    d: int,
    seed: int = 0,
    max_iters: Optional[int] = None,
    restarts: Optional[int] = None,
) -> SicSearchResult:
    """
    随机重启的 BFGS 搜索，帧势接近下界后再用最小二乘压低重叠残差。
    帧势差不超过 success_tol 且重叠偏差不超过 validation_tol 才算成功。
    不收敛不算错误：返回重叠偏差最小的结果，success=False。
    第 r 次重启的初值来自 derive_rng(seed, r)。
    """
    if not SEARCH_MIN_DIM <= d <= SEARCH_MAX_DIM:
        raise ParameterRangeError(f"SIC fiducial 搜索只支持 {SEARCH_MIN_DIM} ≤ d ≤ {SEARCH_MAX_DIM}，收到 {d}")
    cfg = get_config()
    max_iters = cfg.sic_max_iters if max_iters is None else max_iters
    restarts = cfg.sic_restarts if restarts is None else restarts
    target = sic_target_potential(d)

    def objective(x: np.ndarray) -> Tuple[float, np.ndarray]:
        return _potential_and_gradient(x, d)

    def accepted(value: float, deviation: float) -> bool:
        return value - target <= cfg.sic_success_tol and deviation <= cfg.validation_tol

    # (重叠偏差, 帧势, x)
    best: Optional[Tuple[float, float, np.ndarray]] = None
    used = 0
    for restart in range(max(1, restarts)):
        used = restart + 1
        rng = derive_rng(seed, restart)
        x0 = rng.standard_normal(2 * d)
        result = scipy.optimize.minimize(
            objective, x0, jac=True, method="BFGS", options={"maxiter": max_iters, "gtol": 1e-12}
        )
        # 第二轮从上一轮终点出发，把 BFGS 提前停下留下的残差压下去
        result = scipy.optimize.minimize(
            objective, result.x, jac=True, method="BFGS", options={"maxiter": max_iters, "gtol": 1e-13}
        )
        x, value = result.x, float(result.fun)
        if value - target <= cfg.sic_success_tol:
            x = _refine(x, d, max_iters)
            value = frame_potential(_to_complex(x, d))
        deviation = orbit_overlap_deviation(_to_complex(x, d))
        logger.debug(
            f"SIC 搜索 d={d} 第 {restart} 次重启: 帧势 {value:.15g} (目标 {target:.15g})，重叠偏差 {deviation:.3e}"
        )
        if best is None or deviation < best[0] or accepted(value, deviation):
            best = (deviation, value, x)
        if accepted(value, deviation):
            break

    best_deviation, best_value, best_x = best
    fiducial = _to_complex(best_x, d)
    fiducial = fiducial / np.linalg.norm(fiducial)
    success = accepted(best_value, best_deviation)
    if success:
        logger.info(f"d={d} 找到 SIC fiducial，重叠偏差 {best_deviation:.3e} (重启 {used} 次)")
    else:
        logger.warning(
            f"d={d} 未找到 SIC fiducial，最好帧势 {best_value:.12g}，目标 {target:.12g}，重叠偏差 {best_deviation:.3e}"
        )
    return SicSearchResult(
        d=d,
        fiducial=fiducial,
        potential=best_value,
        target=target,
        success=success,
        restarts_used=used,
        overlap_deviation=orbit_overlap_deviation(fiducial),
    )
