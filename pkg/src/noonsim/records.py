"""Scan records and their CSV form.

A CSV file has one header row; the first column names the setting and its
unit (``chi_rad`` or ``x_um``), followed by ``expected_rate`` (events/s),
``sampled_counts`` and ``integration_time`` (s). Numbers carry 12
significant digits.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SETTING_UNITS = {"chi_rad": 1.0, "x_um": 1e-6, "x_m": 1.0}
COLUMNS = ("expected_rate", "sampled_counts", "integration_time")


def fmt(value: float) -> str:
    return f"{float(value):.12g}"


@dataclass
class ScanRecord:
    """One measured series. ``settings`` are SI (radians or meters)."""

    name: str
    setting_name: str
    settings: np.ndarray
    expected_rate: np.ndarray
    sampled_counts: np.ndarray
    integration_time: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.setting_name not in SETTING_UNITS:
            raise ValueError(f"unknown setting column {self.setting_name!r}")
        self.settings = np.asarray(self.settings, dtype=float)
        n = len(self.settings)
        self.expected_rate = np.asarray(self.expected_rate, dtype=float)
        self.sampled_counts = np.asarray(self.sampled_counts, dtype=np.int64)
        self.integration_time = np.broadcast_to(
            np.asarray(self.integration_time, dtype=float), (n,)).copy()
        for arr in (self.expected_rate, self.sampled_counts, self.integration_time):
            if arr.shape != (n,):
                raise ValueError("all record columns must have one entry per setting")
        if np.any(self.expected_rate < 0) or np.any(self.sampled_counts < 0):
            raise ValueError("rates and counts must be non-negative")

    def __len__(self):
        return len(self.settings)

    @property
    def expected_counts(self) -> np.ndarray:
        return self.expected_rate * self.integration_time

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow((self.setting_name,) + COLUMNS)
        scale = SETTING_UNITS[self.setting_name]
        for s, r, c, t in zip(self.settings, self.expected_rate, self.sampled_counts,
                              self.integration_time):
            w.writerow((fmt(s / scale), fmt(r), str(int(c)), fmt(t)))
        return buf.getvalue()

    def write_csv(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_csv())
        return path

    @classmethod
    def from_csv(cls, text: str, name: str = "") -> "ScanRecord":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            raise ValueError("empty CSV")
        header = [h.strip() for h in rows[0]]
        if len(header) != 4 or tuple(header[1:]) != COLUMNS or header[0] not in SETTING_UNITS:
            raise ValueError(f"unexpected CSV header {header}; want <setting>,{','.join(COLUMNS)}")
        body = [r for r in rows[1:] if r]
        try:
            data = np.array([[float(v) for v in r] for r in body], dtype=float).reshape(-1, 4)
        except ValueError as exc:
            raise ValueError(f"non-numeric CSV entry: {exc}") from None
        counts = data[:, 2]
        if np.any(counts != np.round(counts)):
            raise ValueError("sampled_counts must be integers")
        scale = SETTING_UNITS[header[0]]
        return cls(name, header[0], data[:, 0] * scale, data[:, 1], counts.astype(np.int64), data[:, 3])

    @classmethod
    def read_csv(cls, path) -> "ScanRecord":
        path = Path(path)
        return cls.from_csv(path.read_text(), path.stem)


def write_table(path, columns: dict) -> Path:
    """Write equal-length numeric columns in the given order."""
    path = Path(path)
    names = list(columns)
    arrays = [np.asarray(columns[k], dtype=float) for k in names]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for row in zip(*arrays):
        w.writerow([fmt(v) for v in row])
    path.write_text(buf.getvalue())
    return path
