"""Column-oriented traces with a byte-stable CSV representation."""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FLOAT_DECIMALS = 6


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        s = f"{float(v):.{FLOAT_DECIMALS}f}"
        # -0.000000 and 0.000000 must serialise identically
        if s.lstrip("-").strip("0.") == "":
            s = s.lstrip("-")
        return s
    return str(v)


@dataclass
class Trace:
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)
    meta: dict[str, object] = field(default_factory=dict)

    def append(self, row) -> None:
        row = tuple(row)
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} fields, trace has {len(self.columns)} columns")
        self.rows.append(row)

    def __len__(self):
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])

    def as_array(self) -> np.ndarray:
        return np.array(self.rows, dtype=float).reshape(len(self.rows), len(self.columns))

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        for key in sorted(self.meta):
            buf.write(f"# {key}={self.meta[key]}\n")
        buf.write(",".join(self.columns) + "\n")
        for row in self.rows:
            buf.write(",".join(format_value(v) for v in row) + "\n")
        return buf.getvalue()

    def to_csv(self, path: str | os.PathLike) -> None:
        Path(path).write_text(self.to_csv_text(), newline="\n")

    def to_long(self, time_column: str = "time") -> "Trace":
        """Long (time, series, value) form, convenient for plotting tools."""
        ti = self.columns.index(time_column)
        out = Trace(("time", "series", "value"), meta=dict(self.meta))
        for row in self.rows:
            for name, v in zip(self.columns, row):
                if name != time_column:
                    out.append((row[ti], name, v))
        return out
