"""
Writers for machine-readable outputs: JSON reports and RFC-4180 CSV studies.
Every file carries the hash of the effective configuration that produced it.
"""

import csv
import io
import hashlib
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np


logger = logging.getLogger('flr.pipeline')


def _to_builtin(value: Any) -> Any:
    """Convert numpy containers and scalars to JSON-friendly builtins; NaN and inf become None"""
    if isinstance(value, dict):
        return {str(k): _to_builtin(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_builtin(v) for v in value]
    if isinstance(value, np.ndarray):
        return _to_builtin(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def canonical_json(value: Any) -> str:
    return json.dumps(_to_builtin(value), sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(config: Dict[str, Any]) -> str:
    """SHA-256 of the canonical JSON form of a configuration echo"""
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def save_json(data: Dict[str, Any], path: Path) -> Path:
    """Save data as indented JSON, creating parent directories"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        json.dump(_to_builtin(data), f, indent=2, sort_keys=True, allow_nan=False)
    logger.debug(f"Saved JSON to {path}")
    return path


def dumps_json(data: Dict[str, Any]) -> str:
    return json.dumps(_to_builtin(data), indent=2, sort_keys=True, allow_nan=False)


def _format_cell(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return str(value)


def write_csv(path: Optional[Path], header: Sequence[str], rows: Iterable[Sequence[Any]],
              config: Dict[str, Any], trailer: Optional[List[str]] = None, stream=None) -> str:
    """
    Write a study table.

    Layout: one comment line with the config hash, the header row, data rows,
    then optional trailing comment lines. Returns the text written.

    Args:
        path: Output file, or None to only return/stream the text
        header: Column names
        rows: Data rows
        config: Effective configuration echo (hashed into the first line)
        trailer: Extra lines written after the data, each prefixed with '# '
        stream: Optional text stream that also receives the output
    """
    buffer = io.StringIO(newline='')
    buffer.write(f"# config_hash={config_hash(config)}\r\n")
    writer = csv.writer(buffer, lineterminator='\r\n')
    writer.writerow(list(header))
    for row in rows:
        writer.writerow([_format_cell(v) for v in row])
    for line in trailer or []:
        buffer.write(f"# {line}\r\n")
    text = buffer.getvalue()

    if path is not None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', newline='') as f:
            f.write(text)
        logger.info(f"Wrote {path}")
    if stream is not None:
        stream.write(text)
    return text


def read_csv_rows(path: Path) -> List[Dict[str, str]]:
    """Read a study CSV back, skipping comment lines"""
    with open(path, newline='') as f:
        lines = [line for line in f if not line.startswith('#')]
    return list(csv.DictReader(lines))
