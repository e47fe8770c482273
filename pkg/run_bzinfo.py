#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
bzinfo 启动脚本
用法: python run_bzinfo.py <子命令> [参数]，结果以 JSON 写到 stdout
"""

import sys

from src.cli import main
from src.definitions import BZINFO_VERSION, ExitCode
from src.logger import logger

if __name__ == "__main__":
    logger.debug(f"bzinfo v{BZINFO_VERSION} 正在通过 run_bzinfo.py 启动...")
    exit_code = ExitCode.io_or_parse
    try:
        exit_code = main()
    except KeyboardInterrupt:
        logger.info("程序被用户中断。")
    except Exception:
        logger.exception(f"bzinfo v{BZINFO_VERSION} 运行时发生严重错误:")
    finally:
        logger.debug(f"bzinfo v{BZINFO_VERSION} 执行完毕，退出码 {exit_code}。")
    sys.exit(exit_code)
