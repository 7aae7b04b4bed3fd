"""Download the public UCI wine and optical-digits sources into the task CSV layouts.

    python -m koopnet.tasks.fetch DIR

wine.csv:   label (1..3), then 13 feature columns (UCI "wine.data" is already in this layout).
digits.csv: 64 pixel columns (row-major 8x8, 0..16), then the label 0..9 (UCI "optdigits.tes",
            the 1797-sample set).
"""
import logging
import os
import sys
from pathlib import Path

import requests

from koopnet.errors import TaskDataError
from koopnet.tasks.task_data import DIGIT_PIXELS, WINE_FEATURES, read_numeric_csv

log = logging.getLogger(__name__)

UCI = "https://archive.ics.uci.edu/ml/machine-learning-databases"
SOURCES = {
    "wine.csv": (f"{UCI}/wine/wine.data", 1 + WINE_FEATURES),
    "digits.csv": (f"{UCI}/optdigits/optdigits.tes", DIGIT_PIXELS + 1),
}
TIMEOUT = 30


def fetch(directory: str | os.PathLike, overwrite: bool = False) -> dict[str, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = {}
    for name, (url, columns) in SOURCES.items():
        path = directory / name
        if path.exists() and not overwrite:
            log.info("%s exists, skipping", path)
            out[name] = path
            continue
        resp = requests.get(url, timeout=TIMEOUT)
        resp.raise_for_status()
        lines = [line.strip() for line in resp.text.splitlines() if line.strip()]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        try:
            rows = read_numeric_csv(path, columns)
        except TaskDataError:
            path.unlink()
            raise
        log.info("fetched %s -> %s (%d rows)", url, path, len(rows))
        out[name] = path
    return out


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO)
    fetch(sys.argv[1] if len(sys.argv) > 1 else os.environ.get("KOOPNET_DATA_DIR", "."))
