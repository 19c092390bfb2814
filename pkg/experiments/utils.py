import csv
import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Sequence, Tuple

from tqdm import tqdm

from modeling.errors import InvariantError


__version__ = "0.1.0"


def _ensure_dir(path: str):
    dir_path = os.path.dirname(path)
    if dir_path:
        os.makedirs(dir_path, exist_ok=True)


def _format(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, int) and not isinstance(value, bool):
        return str(value)
    return f"{float(value):.17g}"


def save_csv(path: str, header: Sequence[str], rows, desc: str = None):
    """Write rows with floats printed to 17 significant digits, so identical runs give identical files."""
    _ensure_dir(path)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in tqdm(rows, desc=desc, disable=desc is None):
            writer.writerow([_format(v) for v in row])


def read_csv(path: str) -> Tuple[List[str], List[List[str]]]:
    """Header and raw rows; lines starting with '#' are metadata and skipped."""
    with open(path, "r", encoding="utf-8") as f:
        lines = [line for line in f if line.strip() and not line.startswith("#")]
    reader = csv.reader(lines)
    rows = list(reader)
    if not rows:
        return [], []
    return rows[0], rows[1:]


def read_columns(path: str, names: Sequence[str]) -> dict:
    """Selected numeric columns of a CSV file as lists of floats."""
    header, rows = read_csv(path)
    missing = [name for name in names if name not in header]
    if missing:
        raise KeyError(f"{path}: missing column(s) {missing}, available {header}")
    index = {name: header.index(name) for name in names}
    return {name: [float(row[i]) for row in rows] for name, i in index.items()}


def save_json(path: str, data: dict):
    _ensure_dir(path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")


def config_hash(data: dict) -> int:
    """First 16 hex digits of the SHA-256 of the canonical JSON dump, as an unsigned 64-bit integer."""
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return int(hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16], 16)


def has_sign_change(series: Sequence[float], tol: float = 0.0) -> bool:
    signs = [1 if v > tol else -1 for v in series if abs(v) > tol]
    return any(a != b for a, b in zip(signs, signs[1:]))


def unique_interior_minimum(series: Sequence[float]) -> bool:
    """The global minimum is attained once and not at either end."""
    if len(series) < 3:
        return False
    low = min(series)
    hits = [i for i, v in enumerate(series) if v == low]
    return len(hits) == 1 and 0 < hits[0] < len(series) - 1


def is_non_decreasing(series: Sequence[float], tol: float = 1e-9) -> bool:
    return all(b >= a - tol for a, b in zip(series, series[1:]))


@dataclass
class RunManifest:
    """Record of one CLI run, written as manifest.json next to the artifacts."""

    config_hash: int
    seeds: List[int]
    artifacts: List[str] = field(default_factory=list)
    tool_version: str = __version__
    wall_time: float = 0.0
    shape_checks: Dict[str, object] = field(default_factory=dict)

    def add(self, path: str) -> str:
        self.artifacts.append(path)
        return path

    def validate(self) -> list:
        return [f"artifact {p} is missing or empty" for p in self.artifacts if not os.path.isfile(p) or os.path.getsize(p) == 0]

    def save(self, output_dir: str) -> str:
        violations = self.validate()
        if violations:
            raise InvariantError("; ".join(violations))
        path = os.path.join(output_dir, "manifest.json")
        save_json(path, asdict(self))
        return path
