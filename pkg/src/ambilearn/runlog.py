"""Per-run CSV / JSON-summary logging with a reader-side schema check."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Sequence

import numpy as np

from .ambiguity import AmbiguitySet

INT_COLUMNS = {"t", "zone_id", "unidentifiable", "degenerate"}


class RunLogSchemaError(ValueError):
    """Emitted CSV does not match the expected schema."""


def estimator_columns(p: int) -> list[str]:
    return (["t"] + [f"alpha_{i + 1}" for i in range(p)]
            + ["gamma", "sigma_min_A", "eta", "inf_error", "radius", "confidence"])


def robot_columns(p: int) -> list[str]:
    return estimator_columns(p) + ["x1", "x2", "x3", "zone_id", "H", "eps",
                                   "eps_hat", "eps_hat_oracle",
                                   "unidentifiable", "degenerate"]


@dataclass
class RunLog:
    """Column-oriented per-step log plus run metadata and ambiguity snapshots."""

    columns: Dict[str, np.ndarray]
    meta: dict
    ambiguity_sets: Dict[int, AmbiguitySet] = field(default_factory=dict)

    @property
    def rows(self) -> int:
        return len(self.columns["t"])

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    def alpha_matrix(self) -> np.ndarray:
        p = self.meta["p"]
        return np.column_stack([self.columns[f"alpha_{i + 1}"] for i in range(p)])

    # -- derived masks ---------------------------------------------------------

    def zone_switch_times(self) -> list[int]:
        if "zone_id" not in self.columns:
            return []
        z = self.columns["zone_id"]
        t = self.columns["t"]
        return [int(t[i]) for i in range(1, len(z)) if z[i] != z[i - 1]]

    def steady_mask(self, exclusion: int) -> np.ndarray:
        """True at steps at least ``exclusion`` steps past the run start and
        past every zone switch."""
        t = self.columns["t"]
        events = np.array([int(t[0])] + self.zone_switch_times())
        last_event = events[np.searchsorted(events, t, side="right") - 1]
        return (t - last_event) >= exclusion

    # -- serialization -----------------------------------------------------------

    def write_csv(self, path) -> None:
        names = list(self.columns)
        cols = [self.columns[n] for n in names]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(names)
            for i in range(self.rows):
                writer.writerow([_format(n, col[i]) for n, col in zip(names, cols)])

    def summary(self) -> dict:
        out = dict(self.meta)
        alpha = self.alpha_matrix()
        out["rows"] = self.rows
        out["final_t"] = int(self.columns["t"][-1])
        out["final_alpha"] = [float(v) for v in alpha[-1]]
        for name in ("gamma", "inf_error", "eps_hat", "confidence"):
            if name in self.columns:
                out[f"final_{name}"] = float(self.columns[name][-1])
        if "unidentifiable" in self.columns:
            out["unidentifiable_steps"] = int(self.columns["unidentifiable"].sum())
        out["zone_switches"] = self.zone_switch_times()
        return out

    def write_summary(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def write_ambiguity_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for t in sorted(self.ambiguity_sets):
                json.dump(self.ambiguity_sets[t].to_json_record(t), fh)
                fh.write("\n")


def _format(name: str, value) -> str:
    if name in INT_COLUMNS:
        return str(int(value))
    return repr(float(value))


def read_run_log(path, required: Optional[Sequence[str]] = None) -> Dict[str, np.ndarray]:
    """Read an emitted CSV back, validating the header schema."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise RunLogSchemaError(f"{path}: empty file") from None
        if len(set(header)) != len(header):
            raise RunLogSchemaError(f"{path}: duplicate column names")
        rows = list(reader)
    if required is not None:
        missing = [c for c in required if c not in header]
        if missing:
            raise RunLogSchemaError(f"{path}: missing columns {missing}")
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise RunLogSchemaError(f"{path}: row {i + 2} has {len(row)} fields, "
                                    f"expected {len(header)}")
    data = {}
    for j, name in enumerate(header):
        vals = [row[j] for row in rows]
        if name in INT_COLUMNS:
            data[name] = np.array([int(v) for v in vals])
        else:
            data[name] = np.array([float(v) for v in vals])
    return data
