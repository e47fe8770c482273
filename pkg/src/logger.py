# bzinfo/src/logger.py
import os
import sys
from pathlib import Path
from typing import List, Optional

from loguru import logger as loguru_logger

# stdout 只输出 JSON 结果，控制台日志全部走 stderr
CONSOLE_LOG_LEVEL = os.getenv("BZINFO_CONSOLE_LOG_LEVEL", "INFO").upper()
# "OFF" 表示不写日志文件
FILE_LOG_LEVEL = os.getenv("BZINFO_FILE_LOG_LEVEL", "DEBUG").upper()

LOG_DIR = Path(__file__).resolve().parent.parent / "logs" / "bzinfo"
LOG_FILE_NAME = "{time:YYYY-MM-DD}.log"
LOG_ROTATION = "00:00"
LOG_RETENTION = "7 days"
LOG_COMPRESSION = "zip"

CONSOLE_FORMAT = (
    "<green>{time:HH:mm:ss.SSS}</green> | "
    "<level>{level: <8}</level> | "
    "<cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - "
    "<level>{message}</level>"
)
FILE_FORMAT = "{time:YYYY-MM-DD HH:mm:ss.SSS} | {level: <8} | {name}:{function}:{line} - {message}"

_handler_ids: List[int] = []


def configure_logging(
    console_level: Optional[str] = None,
    file_level: Optional[str] = None,
    log_dir: Optional[Path] = None,
) -> None:
    """
    重新安装 sink。未给出的参数沿用环境变量里的级别。
    CLI 的 --log-level 和测试都通过这里调整，不直接碰 loguru 的 handler。
    """
    global CONSOLE_LOG_LEVEL, FILE_LOG_LEVEL
    CONSOLE_LOG_LEVEL = (console_level or CONSOLE_LOG_LEVEL).upper()
    FILE_LOG_LEVEL = (file_level or FILE_LOG_LEVEL).upper()
    target_dir = log_dir or LOG_DIR

    while _handler_ids:
        loguru_logger.remove(_handler_ids.pop())

    if CONSOLE_LOG_LEVEL != "OFF":
        _handler_ids.append(
            loguru_logger.add(sys.stderr, level=CONSOLE_LOG_LEVEL, format=CONSOLE_FORMAT, colorize=True)
        )

    if FILE_LOG_LEVEL == "OFF":
        return
    try:
        target_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        loguru_logger.warning(f"无法创建日志目录 {target_dir}，本次只输出到控制台: {e}")
        return
    _handler_ids.append(
        loguru_logger.add(
            target_dir / LOG_FILE_NAME,
            level=FILE_LOG_LEVEL,
            format=FILE_FORMAT,
            rotation=LOG_ROTATION,
            retention=LOG_RETENTION,
            compression=LOG_COMPRESSION,
            encoding="utf-8",
            enqueue=True,
        )
    )


# 去掉 loguru 自带的 stderr handler，换成上面的配置
loguru_logger.remove()
configure_logging()

logger = loguru_logger
