"""Deterministic CSV and JSON emitters.

Output depends only on the data and the invocation: 12 significant digits,
`.` decimal separator, LF line endings, and a `#` comment line naming the
invocation and toolkit version above every CSV header.
"""
from __future__ import annotations

import json
import math
from pathlib import Path
import shlex
import sys
from typing import Sequence

import numpy as np
import pandas as pd

from ..constants import CSV_SIGNIFICANT_DIGITS, TOOLKIT_NAME, TOOLKIT_VERSION
from ..types import JsonObject, JsonValue

FLOAT_FORMAT = f'%.{CSV_SIGNIFICANT_DIGITS}g'


def invocation_comment(argv: Sequence[str]) -> str:
    return f'# {TOOLKIT_NAME} {TOOLKIT_VERSION} invocation: {shlex.join([TOOLKIT_NAME, *argv])}'


def render_csv(frame: pd.DataFrame, argv: Sequence[str]) -> str:
    body = frame.to_csv(
        index=False,
        float_format=FLOAT_FORMAT,
        lineterminator='\n',
        na_rep='',
    )
    return f'{invocation_comment(argv)}\n{body}'


def _round_float(value: float) -> float | None:
    if not math.isfinite(value):
        return None
    return float(f'{value:.{CSV_SIGNIFICANT_DIGITS}g}')


def to_jsonable(value: object) -> JsonValue:
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return _round_float(float(value))
    if isinstance(value, np.ndarray):
        return [to_jsonable(item) for item in value.tolist()]
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple, set, frozenset)):
        items = sorted(value) if isinstance(value, (set, frozenset)) else value
        return [to_jsonable(item) for item in items]
    if value is None or isinstance(value, str):
        return value
    return str(value)


def render_json(payload: JsonObject, argv: Sequence[str]) -> str:
    document = {
        **{key: to_jsonable(value) for key, value in payload.items()},
        'invocation': shlex.join([TOOLKIT_NAME, *argv]),
        'version': TOOLKIT_VERSION,
    }
    return json.dumps(document, indent=2, sort_keys=True, allow_nan=False) + '\n'


def frame_to_json_payload(frame: pd.DataFrame) -> JsonObject:
    return {
        'columns': list(frame.columns),
        'rows': [to_jsonable(record) for record in frame.to_dict(orient='records')],
    }


def write_text(text: str, output: Path | None) -> None:
    if output is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    output.parent.mkdir(parents=True, exist_ok=True)
    with open(output, 'w', encoding='utf-8', newline='\n') as handle:
        handle.write(text)
