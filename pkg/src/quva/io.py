"""Result persistence: records.csv, records.json, summary.json.

CSV floats use 17 significant digits so every value round-trips exactly.
Columns follow the record fields: eval_index, lambda_1..lambda_k,
re_a_dagger, pot_overlap, nl_overlap, total, res_q, fidelity_vs_oracle,
flagged, phase, error. An absent fidelity is an empty cell.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Dict, Iterable, List

import numpy as np

from .search import CandidateRecord

FLOAT_FIELDS = ("re_a_dagger", "pot_overlap", "nl_overlap", "total", "res_q")


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def columns(n_params: int) -> List[str]:
    return (
        ["eval_index"]
        + [f"lambda_{j + 1}" for j in range(n_params)]
        + list(FLOAT_FIELDS)
        + ["fidelity_vs_oracle", "flagged", "phase", "error"]
    )


def record_row(rec: CandidateRecord) -> List[str]:
    fid = "" if rec.fidelity_vs_oracle is None else fmt(rec.fidelity_vs_oracle)
    return (
        [str(rec.eval_index)]
        + [fmt(v) for v in rec.params]
        + [fmt(getattr(rec, f)) for f in FLOAT_FIELDS]
        + [fid, "true" if rec.flagged else "false", rec.phase, rec.error]
    )


def _json_float(x: float):
    # JSON has no NaN; absent values become null.
    x = float(x)
    return x if math.isfinite(x) else None


def record_dict(rec: CandidateRecord) -> Dict[str, object]:
    return {
        "eval_index": rec.eval_index,
        "lambda": [float(v) for v in rec.params],
        **{f: _json_float(getattr(rec, f)) for f in FLOAT_FIELDS},
        "fidelity_vs_oracle": None if rec.fidelity_vs_oracle is None else float(rec.fidelity_vs_oracle),
        "flagged": bool(rec.flagged),
        "phase": rec.phase,
        "error": rec.error,
    }


class RecordWriter:
    """Append-only writer for one run; call :meth:`append` once per finished batch."""

    def __init__(self, out_dir: Path, n_params: int):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.csv_path = self.out_dir / "records.csv"
        self.json_path = self.out_dir / "records.json"
        self._records: List[CandidateRecord] = []
        with self.csv_path.open("w", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerow(columns(n_params))

    def append(self, batch: Iterable[CandidateRecord]) -> None:
        batch = sorted(batch, key=lambda r: r.eval_index)
        with self.csv_path.open("a", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            for rec in batch:
                w.writerow(record_row(rec))
        self._records.extend(batch)

    def close(self) -> None:
        write_json(self.json_path, [record_dict(r) for r in self._records])


def write_json(path: Path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=False) + "\n")


def read_records_csv(path: Path) -> List[Dict[str, str]]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def write_columns_csv(path: Path, header: List[str], cols: List[np.ndarray]) -> None:
    """Write equal-length numeric columns with 17-digit floats."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([fmt(v) for v in row])
