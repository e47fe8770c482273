import os
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

# 测试不往仓库里的 logs/ 写文件；必须在导入 src 之前设置
os.environ.setdefault("BZINFO_FILE_LOG_LEVEL", "OFF")

from src.config import CONFIG_PATH_ENV, reset_config  # noqa: E402
from src.definitions import StateKind  # noqa: E402
from src.operator_core import sample_random_state  # noqa: E402
from src.utils import derive_rng  # noqa: E402


@pytest.fixture(autouse=True)
def template_config(tmp_path, monkeypatch):
    """每个用例都从模板默认值开始，不读仓库里的 config.toml"""
    monkeypatch.setenv(CONFIG_PATH_ENV, str(tmp_path / "absent_config.toml"))
    reset_config()
    yield
    reset_config()


@pytest.fixture
def rng():
    return derive_rng(20240601)


@pytest.fixture
def random_states():
    """按 (d, 个数, 种子) 生成一半纯态一半混态"""

    def factory(d: int, count: int, seed: int = 0):
        return [
            sample_random_state(d, StateKind.pure if i % 2 == 0 else StateKind.mixed, derive_rng(seed, d, i))
            for i in range(count)
        ]

    return factory


@pytest.fixture
def pauli():
    return {
        "I": np.eye(2, dtype=np.complex128),
        "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
        "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
        "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
    }
