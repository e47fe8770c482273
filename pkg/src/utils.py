# bzinfo/src/utils.py
# 项目通用工具：随机数派生、JSON 编解码、文件读写
import json
import math
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import numpy as np

from .logger import logger
from .errors import ParseError

# --- 随机数 ---


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """
    由一个 64 位种子和一串整数键派生独立的随机流。
    同样的 (seed, keys) 永远得到同样的流，和调用顺序、并行度都无关。
    """
    if seed < 0:
        raise ValueError(f"种子必须是非负整数，收到 {seed}")
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.default_rng(sequence)


def as_rng(seed_or_rng: Union[int, np.random.Generator, None]) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return derive_rng(0 if seed_or_rng is None else int(seed_or_rng))


# --- JSON 编解码 ---


def matrix_to_json(matrix: np.ndarray) -> Dict[str, Any]:
    """{"d": d, "entries": [[re, im], ...]}，按行展开"""
    matrix = np.asarray(matrix, dtype=np.complex128)
    d = matrix.shape[0]
    return {
        "d": int(d),
        "entries": [[float(z.real), float(z.imag)] for z in matrix.reshape(-1)],
    }


def matrix_from_json(data: Any) -> np.ndarray:
    if not isinstance(data, dict) or "d" not in data or "entries" not in data:
        raise ParseError("矩阵 JSON 需要 'd' 和 'entries' 字段。")
    d = data["d"]
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise ParseError(f"矩阵维数 'd' 必须是正整数，收到 {d!r}。")
    entries = data["entries"]
    if not isinstance(entries, list) or len(entries) != d * d:
        length = len(entries) if isinstance(entries, list) else "非列表"
        raise ParseError(f"矩阵条目数应为 d² = {d * d}，收到 {length}。")

    values: List[complex] = []
    for index, pair in enumerate(entries):
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise ParseError(f"第 {index} 个条目不是 [re, im] 对: {pair!r}")
        try:
            re, im = float(pair[0]), float(pair[1])
        except (TypeError, ValueError) as e:
            raise ParseError(f"第 {index} 个条目无法解析为实数: {pair!r}") from e
        if not (math.isfinite(re) and math.isfinite(im)):
            raise ParseError(f"第 {index} 个条目不是有限数: {pair!r}")
        values.append(complex(re, im))
    return np.array(values, dtype=np.complex128).reshape(d, d)


def to_jsonable(value: Any) -> Any:
    """把 numpy 标量/数组以及 inf 之类转成标准 JSON 能表示的对象"""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        number = float(value)
        if math.isinf(number):
            return "Infinity" if number > 0 else "-Infinity"
        if math.isnan(number):
            return "NaN"
        return number
    return value


def dumps_json(document: Any, indent: int = 2) -> str:
    # repr 级别的浮点输出保证 double 无损往返
    return json.dumps(to_jsonable(document), indent=indent, sort_keys=True, allow_nan=False)


def read_json_file(path: Union[str, Path]) -> Any:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError:
        logger.error(f"读取文件 {path} 失败。")
        raise
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"文件 {path} 不是合法的 JSON: {e}") from e


def write_json_file(path: Union[str, Path], document: Any, indent: int = 2) -> None:
    path = Path(path)
    path.write_text(dumps_json(document, indent=indent) + "\n", encoding="utf-8")
    logger.debug(f"已写出 JSON 文件: {path}")


def require_keys(data: Any, keys: Sequence[str], what: str) -> Dict[str, Any]:
    if not isinstance(data, dict):
        raise ParseError(f"{what} 必须是 JSON 对象。")
    missing = [k for k in keys if k not in data]
    if missing:
        raise ParseError(f"{what} 缺少字段: {', '.join(missing)}")
    return data
