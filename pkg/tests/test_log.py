import json
import logging
from concurrent.futures import ThreadPoolExecutor

from graperun.log import (
    JsonLinesFormatter,
    correlation_context,
    get_correlation_id,
    logger,
    logger_add_file_handler,
    logger_remove_handler,
)


def _record(message: str) -> logging.LogRecord:
    return logging.LogRecord("graperun", logging.INFO, __file__, 1, message, None, None)


def test_json_lines_formatter():
    with correlation_context("p1/base/s0"):
        line = JsonLinesFormatter().format(_record("Use `[magenta]graperun run[/]`"))

    payload = json.loads(line)
    assert payload["level"] == "INFO"
    assert payload["name"] == "graperun"
    assert payload["correlation_id"] == "p1/base/s0"
    assert payload["message"] == "Use `graperun run`"


def test_correlation_id_is_per_thread():
    def tagged(index: int) -> str:
        with correlation_context(f"prompt-{index}"):
            return get_correlation_id()

    with ThreadPoolExecutor(max_workers=4) as executor:
        ids = list(executor.map(tagged, range(8)))

    assert ids == [f"prompt-{_index}" for _index in range(8)]
    assert get_correlation_id() == "-"


def test_file_handler(tmp_path):
    handler = logger_add_file_handler(str(tmp_path))
    try:
        with correlation_context("p7"):
            logger.info("planning")
        logger.warning("outside")
    finally:
        logger_remove_handler(handler)

    logger.info("not written")

    with open(tmp_path / "run.jsonl", "r") as f:
        lines = [json.loads(_line) for _line in f]

    assert [(_line["correlation_id"], _line["message"]) for _line in lines] == [("p7", "planning"), ("-", "outside")]
