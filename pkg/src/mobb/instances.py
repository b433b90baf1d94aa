"""Seeded instance generation and the canonical JSON instance format.

Knapsack: weights and profits uniform on [1, 100], capacity
``ceil(0.5 * sum(weights))``. GAP: costs and resources uniform on [1, 20],
capacity of machine ``i`` is ``ceil(0.8 * sum_j r_ij / m)``. These are this
package's own distributions; change them through :class:`GeneratorSpec`.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from .model import InstanceError, MoilpInstance, from_gap, from_knapsack

# GAP sizes n = 27, 48, 75 read as machines x jobs
GAP_SHAPES = {27: (3, 9), 48: (4, 12), 75: (5, 15)}


class InstanceFormatError(ValueError):
    """A file is not a valid canonical instance."""


@dataclass(frozen=True)
class GeneratorSpec:
    family: str
    p: int
    seed: int
    n: int | None = None
    machines: int | None = None
    jobs: int | None = None
    value_range: tuple[int, int] | None = None
    tightness: float | None = None

    def __post_init__(self) -> None:
        if self.family not in ("knapsack", "gap"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.p not in (2, 3):
            raise ValueError("p must be 2 or 3")
        if self.family == "knapsack":
            if not self.n or self.n < 1:
                raise ValueError("knapsack generation needs n >= 1")
        else:
            m, j = self.shape
            if m < 2 or j < 2:
                raise ValueError("GAP generation needs at least 2 machines and 2 jobs")
        lo, hi = self.range
        if lo < 1 or hi < lo:
            raise ValueError("value range must be non-empty and positive")

    @property
    def shape(self) -> tuple[int, int]:
        if self.machines and self.jobs:
            return self.machines, self.jobs
        if self.n in GAP_SHAPES:
            return GAP_SHAPES[self.n]
        raise ValueError("GAP generation needs machines and jobs (or n in 27, 48, 75)")

    @property
    def range(self) -> tuple[int, int]:
        if self.value_range is not None:
            return self.value_range
        return (1, 100) if self.family == "knapsack" else (1, 20)

    @property
    def capacity_ratio(self) -> float:
        if self.tightness is not None:
            return self.tightness
        return 0.5 if self.family == "knapsack" else 0.8

    @property
    def num_vars(self) -> int:
        if self.family == "knapsack":
            return int(self.n)
        m, j = self.shape
        return m * j

    def filename(self) -> str:
        return f"p{self.p}_n{self.num_vars}_s{self.seed}.json"


def generate(spec: GeneratorSpec) -> MoilpInstance:
    """Draw an instance; identical specs give identical instances."""
    rng = np.random.default_rng(spec.seed)
    lo, hi = spec.range
    if spec.family == "knapsack":
        n = int(spec.n)
        weights = rng.integers(lo, hi + 1, size=n)
        profits = rng.integers(lo, hi + 1, size=(spec.p, n))
        capacity = math.ceil(spec.capacity_ratio * int(weights.sum()))
        return from_knapsack(weights, capacity, profits)
    m, j = spec.shape
    costs = rng.integers(lo, hi + 1, size=(spec.p, m, j))
    resources = rng.integers(lo, hi + 1, size=(m, j))
    capacities = [math.ceil(spec.capacity_ratio * int(resources[i].sum()) / m) for i in range(m)]
    return from_gap(costs, resources, capacities)


_POS = {"type": "integer", "minimum": 1}
_P = {"type": "integer", "enum": [2, 3]}

KNAPSACK_SCHEMA = {
    "type": "object",
    "required": ["type", "p", "n", "capacity", "weights", "profits"],
    "additionalProperties": False,
    "properties": {
        "type": {"const": "knapsack"},
        "p": _P,
        "n": _POS,
        "capacity": _POS,
        "weights": {"type": "array", "items": _POS, "minItems": 1},
        "profits": {"type": "array", "items": {"type": "array", "items": _POS}},
    },
}

GAP_SCHEMA = {
    "type": "object",
    "required": ["type", "p", "machines", "jobs", "capacities", "resources", "costs"],
    "additionalProperties": False,
    "properties": {
        "type": {"const": "gap"},
        "p": _P,
        "machines": {"type": "integer", "minimum": 2},
        "jobs": {"type": "integer", "minimum": 2},
        "capacities": {"type": "array", "items": _POS},
        "resources": {"type": "array", "items": {"type": "array", "items": _POS}},
        "costs": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "array", "items": _POS}},
        },
    },
}


def _check_len(name: str, seq: list, expected: int) -> None:
    if len(seq) != expected:
        raise InstanceFormatError(f"{name}: expected {expected} entries, found {len(seq)}")


def from_json(data: dict) -> MoilpInstance:
    """Build an instance from its canonical JSON value, validating schema and shapes."""
    if not isinstance(data, dict) or data.get("type") not in ("knapsack", "gap"):
        raise InstanceFormatError('type: must be "knapsack" or "gap"')
    schema = KNAPSACK_SCHEMA if data["type"] == "knapsack" else GAP_SCHEMA
    try:
        jsonschema.validate(data, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(part) for part in exc.absolute_path) or "<root>"
        raise InstanceFormatError(f"{where}: {exc.message}") from None
    p = data["p"]
    if data["type"] == "knapsack":
        n = data["n"]
        _check_len("weights", data["weights"], n)
        _check_len("profits", data["profits"], p)
        for k, row in enumerate(data["profits"]):
            _check_len(f"profits/{k}", row, n)
        builder = lambda: from_knapsack(data["weights"], data["capacity"], data["profits"])  # noqa: E731
    else:
        m, j = data["machines"], data["jobs"]
        _check_len("capacities", data["capacities"], m)
        _check_len("resources", data["resources"], m)
        for i, row in enumerate(data["resources"]):
            _check_len(f"resources/{i}", row, j)
        _check_len("costs", data["costs"], p)
        for k, mat in enumerate(data["costs"]):
            _check_len(f"costs/{k}", mat, m)
            for i, row in enumerate(mat):
                _check_len(f"costs/{k}/{i}", row, j)
        builder = lambda: from_gap(data["costs"], data["resources"], data["capacities"])  # noqa: E731
    try:
        return builder()
    except InstanceError as exc:
        raise InstanceFormatError(str(exc)) from None


def to_json(instance: MoilpInstance) -> dict:
    if instance.source is None:
        raise InstanceFormatError("only knapsack and GAP instances have a canonical file form")
    return instance.source


def load(path: str | Path) -> MoilpInstance:
    """Read a canonical instance file.

    Raises:
        InstanceFormatError: malformed JSON (with line and column), schema
            violations (naming the field) or inconsistent dimensions.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    try:
        return from_json(data)
    except InstanceFormatError as exc:
        raise InstanceFormatError(f"{path}: {exc}") from None


def save(instance: MoilpInstance, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(to_json(instance)) + "\n", encoding="utf-8")
    return path


def instance_path(root: str | Path, spec: GeneratorSpec) -> Path:
    """``<root>/<family>/p<p>_n<n>_s<seed>.json``."""
    return Path(root) / spec.family / spec.filename()
