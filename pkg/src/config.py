# bzinfo/src/config.py
# 项目的配置模块，使用 tomlkit，并包含版本管理

import os
import shutil
import datetime
from pathlib import Path
from typing import Any, Dict, Optional, Union

import tomlkit
from tomlkit.exceptions import TOMLKitError
from tomlkit.items import Table

from .logger import logger

# --- 路径定义 ---
PROJECT_ROOT = Path(__file__).resolve().parent.parent
TEMPLATE_CONFIG_PATH = PROJECT_ROOT / "template" / "config_template.toml"
DEFAULT_CONFIG_PATH = PROJECT_ROOT / "config.toml"
# 备份放在被备份文件旁边的 config_backups/ 目录
BACKUP_DIR_NAME = "config_backups"

# 环境变量可以指定另一份配置文件
CONFIG_PATH_ENV = "BZINFO_CONFIG"


class BzinfoConfigData:
    config_version: str = "0.0.0"

    # [numerics]
    hermitian_tol: float = 1e-12
    positivity_tol: float = 1e-10
    trace_tol: float = 1e-12
    reconstruction_tol: float = 1e-10
    validation_tol: float = 1e-9
    support_tol: float = 1e-10
    channel_tol: float = 1e-10
    probability_tol: float = 1e-12

    # [sic_search]
    sic_restarts: int = 8
    sic_max_iters: int = 2000
    sic_success_tol: float = 1e-8

    # [probe]
    bootstrap_resamples: int = 200
    inconsistency_sigma: float = 5.0

    # [output]
    json_indent: int = 2

    def __init__(self, data: Union[Dict[str, Any], tomlkit.TOMLDocument]):
        # 键不存在时使用类属性中的默认值
        self.config_version = str(data.get("config_version", self.config_version))

        numerics = data.get("numerics", {})
        self.hermitian_tol = float(numerics.get("hermitian_tol", self.hermitian_tol))
        self.positivity_tol = float(
            numerics.get("positivity_tol", self.positivity_tol)
        )
        self.trace_tol = float(numerics.get("trace_tol", self.trace_tol))
        self.reconstruction_tol = float(
            numerics.get("reconstruction_tol", self.reconstruction_tol)
        )
        self.validation_tol = float(
            numerics.get("validation_tol", self.validation_tol)
        )
        self.support_tol = float(numerics.get("support_tol", self.support_tol))
        self.channel_tol = float(numerics.get("channel_tol", self.channel_tol))
        self.probability_tol = float(
            numerics.get("probability_tol", self.probability_tol)
        )

        sic_search = data.get("sic_search", {})
        self.sic_restarts = int(sic_search.get("restarts", self.sic_restarts))
        self.sic_max_iters = int(sic_search.get("max_iters", self.sic_max_iters))
        self.sic_success_tol = float(
            sic_search.get("success_tol", self.sic_success_tol)
        )

        probe = data.get("probe", {})
        self.bootstrap_resamples = int(
            probe.get("bootstrap_resamples", self.bootstrap_resamples)
        )
        self.inconsistency_sigma = float(
            probe.get("inconsistency_sigma", self.inconsistency_sigma)
        )

        output = data.get("output", {})
        self.json_indent = int(output.get("indent", self.json_indent))


_global_config_instance: Optional[BzinfoConfigData] = None


def _merge_toml_data(
    new_data: Union[tomlkit.TOMLDocument, Table],
    old_data: Union[tomlkit.TOMLDocument, Table],
    prefix: str = "",
) -> Union[tomlkit.TOMLDocument, Table]:
    """
    把旧配置里用户设置过的值搬进新模板。
    模板决定结构：模板里没有的键直接丢弃，类型对不上的键保留模板值。
    config_version 永远以模板为准。
    """
    for key in old_data:
        dotted = f"{prefix}{key}"
        if key == "config_version":
            continue
        if key not in new_data:
            logger.info(f"  旧配置项 '{dotted}' 在新模板中不存在，已忽略。")
            continue

        old_item = old_data[key]
        new_item = new_data[key]
        if isinstance(old_item, Table) and isinstance(new_item, Table):
            _merge_toml_data(new_item, old_item, prefix=f"{dotted}.")
        elif isinstance(old_item, type(new_item)):
            new_data[key] = old_item
            logger.debug(f"  合并值: {dotted} = {old_item}")
        else:
            logger.warning(
                f"  跳过合并: '{dotted}' 类型不匹配 (旧: {type(old_item).__name__}, 新: {type(new_item).__name__})，保留模板值。"
            )
    return new_data


def _backup(path: Path, tag: str) -> Optional[Path]:
    stamp = datetime.datetime.now().strftime("%Y%m%d%H%M%S")
    backup_dir = path.parent / BACKUP_DIR_NAME
    backup_path = backup_dir / f"{path.stem}_{tag}_{stamp}.toml"
    try:
        backup_dir.mkdir(parents=True, exist_ok=True)
        shutil.copy2(path, backup_path)
        logger.info(f"已备份配置文件到: {backup_path}")
        return backup_path
    except OSError as e:
        logger.error(f"备份配置文件 {path} 失败: {e}")
        return None


def _resolve_config_path() -> Path:
    env_path = os.getenv(CONFIG_PATH_ENV)
    return Path(env_path) if env_path else DEFAULT_CONFIG_PATH


def _load_document(config_path: Path) -> tomlkit.TOMLDocument:
    """
    读取模板，再按版本号决定如何叠加用户配置。
    没有用户配置时直接返回模板，不会主动写出新文件。
    """
    template_doc = tomlkit.parse(TEMPLATE_CONFIG_PATH.read_text(encoding="utf-8"))
    expected_version = str(template_doc.get("config_version", ""))

    if not config_path.exists():
        logger.debug(f"未找到配置文件 {config_path}，使用模板默认值。")
        return template_doc

    try:
        actual_doc = tomlkit.parse(config_path.read_text(encoding="utf-8"))
    except TOMLKitError as e:
        logger.error(f"解析配置文件 {config_path} 失败: {e}，将使用模板默认值。")
        _backup(config_path, "corrupted")
        return template_doc

    actual_version = actual_doc.get("config_version")
    actual_version = str(actual_version) if actual_version is not None else None
    if actual_version == expected_version:
        return actual_doc

    logger.warning(
        f"配置文件版本 ({actual_version or '未找到'}) 与模板版本 ({expected_version}) 不一致，将进行更新。"
    )
    backup_path = _backup(config_path, f"backup_v{actual_version or 'unknown'}")
    updated_doc = _merge_toml_data(template_doc.copy(), actual_doc)
    try:
        config_path.write_text(tomlkit.dumps(updated_doc), encoding="utf-8")
        logger.info(
            f"配置文件已从版本 {actual_version or '未知'} 更新到 {expected_version}，旧文件备份: {backup_path or '备份失败'}"
        )
    except OSError as e:
        logger.error(f"写入更新后的配置文件 {config_path} 失败: {e}，本次运行使用内存中的合并结果。")
    return updated_doc


def load_and_get_config(config_path: Optional[Path] = None) -> BzinfoConfigData:
    global _global_config_instance
    if _global_config_instance is not None and config_path is None:
        return _global_config_instance

    path = config_path or _resolve_config_path()
    document = _load_document(path)
    _global_config_instance = BzinfoConfigData(document)
    logger.debug(
        f"配置已加载 (版本 {_global_config_instance.config_version}, 来源 {path if path.exists() else TEMPLATE_CONFIG_PATH})"
    )
    return _global_config_instance


def get_config() -> BzinfoConfigData:
    if _global_config_instance is None:
        return load_and_get_config()
    return _global_config_instance


def reset_config() -> None:
    """丢掉缓存的配置实例，下一次 get_config() 会重新读取。"""
    global _global_config_instance
    _global_config_instance = None
