import json
import logging

from src.utils.config_manager import MAX_ELEMENTS_ENV, ConfigManager
from src.utils.custom_formatter import CustomFormatter
from src.utils.logging_setup import APP_NAME, LOG_LEVEL_ENV, get_logger, set_console_level


def _console(logger):
    return next(h for h in logger.handlers
                if isinstance(h, logging.StreamHandler) and not isinstance(h, logging.FileHandler))


def test_defaults(tmp_path):
    config = ConfigManager(tmp_path, persist=False)
    assert config.max_elements == 20
    assert config.max_downsets == 64
    assert config.budget == 10000
    assert config.get("run.jobs") == 1
    assert config.get("run.missing", "x") == "x"
    assert config.get("limits.max_elements.deeper") is None


def test_set_persists(tmp_path):
    config = ConfigManager(tmp_path)
    config.set("search.budget", 500)
    config.set("extra.nested.key", True)
    saved = json.loads((tmp_path / "config.json").read_text(encoding="utf-8"))
    assert saved["search"]["budget"] == 500
    again = ConfigManager(tmp_path)
    assert again.budget == 500
    assert again.get("extra.nested.key") is True
    assert again.max_downsets == 64


def test_partial_file_merges_over_defaults(tmp_path):
    (tmp_path / "config.json").write_text('{"limits": {"max_downsets": 8}}', encoding="utf-8")
    config = ConfigManager(tmp_path)
    assert config.max_downsets == 8
    assert config.max_elements == 20


def test_unreadable_file_falls_back(tmp_path):
    (tmp_path / "config.json").write_text("{broken", encoding="utf-8")
    assert ConfigManager(tmp_path).max_elements == 20


def test_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv(MAX_ELEMENTS_ENV, "7")
    assert ConfigManager(tmp_path, persist=False).max_elements == 7
    monkeypatch.setenv(MAX_ELEMENTS_ENV, "seven")
    assert ConfigManager(tmp_path, persist=False).max_elements == 20
    monkeypatch.setenv(MAX_ELEMENTS_ENV, "-1")
    assert ConfigManager(tmp_path, persist=False).max_elements == 20


def test_logger_writes_daily_file(tmp_path):
    logger = get_logger(f"test.file_{tmp_path.name}")
    assert logger.name.startswith(f"{APP_NAME}.test.")
    assert not logger.propagate
    logger.debug("written to file")
    for h in logger.handlers:
        h.flush()
    files = list((tmp_path / "logs").glob(f"{APP_NAME}_*.log"))
    assert len(files) == 1
    assert "written to file" in files[0].read_text(encoding="utf-8")


def test_console_level(tmp_path, monkeypatch):
    logger = get_logger(f"test.console_{tmp_path.name}")
    assert _console(logger).level == logging.WARNING
    set_console_level("DEBUG")
    try:
        assert _console(logger).level == logging.DEBUG
    finally:
        set_console_level("WARNING")
    monkeypatch.setenv(LOG_LEVEL_ENV, "error")
    assert _console(get_logger(f"test.env_{tmp_path.name}")).level == logging.ERROR


def test_formatter():
    record = logging.LogRecord("ceforge.x", logging.INFO, __file__, 1, "hello", None, None)
    plain = CustomFormatter(use_colour=False).format(record)
    assert " - ceforge.x - INFO - hello" in plain
    assert "\x1b[" not in plain
    assert CustomFormatter().format(record).startswith("\x1b[")
