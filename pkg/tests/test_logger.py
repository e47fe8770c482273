from src import logger as logger_module
from src.logger import configure_logging, logger


def test_file_sink_writes_into_given_directory(tmp_path):
    configure_logging(file_level="DEBUG", log_dir=tmp_path)
    try:
        logger.debug("日志落盘检查")
        logger.complete()
        files = list(tmp_path.glob("*.log"))
        assert len(files) == 1
        assert "日志落盘检查" in files[0].read_text(encoding="utf-8")
    finally:
        configure_logging(file_level="OFF")
    assert logger_module.FILE_LOG_LEVEL == "OFF"


def test_reconfiguring_does_not_stack_handlers(tmp_path):
    for _ in range(3):
        configure_logging(console_level="WARNING", file_level="OFF")
    assert len(logger_module._handler_ids) == 1
    configure_logging(console_level="OFF", file_level="OFF")
    assert logger_module._handler_ids == []
    configure_logging(console_level="INFO")
