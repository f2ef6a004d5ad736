"""Append-only event log persistence.

One JSON object per LF-terminated line; keys are sorted so identical state
always serializes to identical bytes. A trailing line without its newline
(or that fails to parse) is treated as a torn write: ignored with a warning.
A malformed line anywhere else is corruption and raises.
"""

from __future__ import annotations

import json
import logging
import os
from pathlib import Path

from ..errors import CorruptRecord

logger = logging.getLogger(__name__)


def encode_event(event: dict) -> bytes:
    return (json.dumps(event, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")


class EventLog:
    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, event: dict) -> None:
        with open(self.path, "ab") as f:
            f.write(encode_event(event))
            f.flush()
            os.fsync(f.fileno())

    def read_all(self) -> list[dict]:
        if not self.path.exists():
            return []
        with open(self.path, "rb") as f:
            data = f.read()
        events: list[dict] = []
        if not data:
            return events
        chunks = data.split(b"\n")
        complete, tail = chunks[:-1], chunks[-1]
        for i, chunk in enumerate(complete):
            try:
                events.append(json.loads(chunk.decode("utf-8")))
            except (json.JSONDecodeError, UnicodeDecodeError) as e:
                raise CorruptRecord(f"{self.path}: record {i + 1} is corrupt: {e}") from e
        if tail:
            logger.warning("ignoring partial trailing record in %s", self.path)
        return events
