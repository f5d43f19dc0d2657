"""Reading and writing instances: a TSPLIB subset, JSON, and a seeded generator."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .domain import MAX_N
from .solvers import MAX_COST, Instance, InstanceError

MASK64 = 2**64 - 1


class FormatError(ValueError):
    """Input text is malformed or uses an unsupported feature."""


@dataclass
class InstanceDocument:
    name: str
    instance: Instance
    comment: str | None = None
    source_format: str = field(default="json", compare=False)

    @property
    def n(self) -> int:
        return self.instance.n


# -- SplitMix64 ---------------------------------------------------------------


class SplitMix64:
    """Sebastiano Vigna's SplitMix64; identical streams in every language."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)


@dataclass(frozen=True)
class GeneratorSpec:
    n: int
    seed: int = 0
    max_weight: int = 1000
    symmetric: bool = False

    def __post_init__(self):
        if not 1 <= self.n <= MAX_N:
            raise InstanceError(f"n must be in [1, {MAX_N}], got {self.n}")
        if not 1 <= self.max_weight < MAX_COST:
            raise InstanceError(f"max_weight must be in [1, 2**63), got {self.max_weight}")
        if not 0 <= self.seed <= MASK64:
            raise InstanceError(f"seed must be an unsigned 64-bit integer, got {self.seed}")


def gen_random(spec: GeneratorSpec) -> InstanceDocument:
    """Weights ``next() % max_weight + 1`` drawn row-major off the diagonal.

    Symmetric instances draw only the upper triangle and mirror it.
    """
    rng = SplitMix64(spec.seed)
    n = spec.n
    costs = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i == j or (spec.symmetric and j < i):
                continue
            w = rng.next() % spec.max_weight + 1
            costs[i][j] = w
            if spec.symmetric:
                costs[j][i] = w
    kind = "sym" if spec.symmetric else "asym"
    return InstanceDocument(
        name=f"random-n{n}-seed{spec.seed}-w{spec.max_weight}-{kind}",
        instance=Instance(costs),
        comment="SplitMix64 generated instance",
        source_format="generated",
    )


# -- JSON ---------------------------------------------------------------------


def _check_weight(v) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise FormatError(f"weights must be integers, got {v!r}")
    if not 0 <= v < MAX_COST:
        raise FormatError(f"weight {v} outside [0, 2**63)")
    return v


def parse_json(text: str) -> InstanceDocument:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise FormatError("instance JSON must be an object")
    n = obj.get("n")
    if isinstance(n, bool) or not isinstance(n, int):
        raise FormatError("'n' must be an integer")
    if not 1 <= n <= MAX_N:
        raise FormatError(f"n must be in [1, {MAX_N}], got {n}")
    costs = obj.get("costs")
    if not isinstance(costs, list) or len(costs) != n:
        raise FormatError(f"'costs' must have {n} rows")
    for i, row in enumerate(costs):
        if not isinstance(row, list) or len(row) != n:
            raise FormatError(f"row {i} of 'costs' must have {n} entries")
        for v in row:
            _check_weight(v)
    name = obj.get("name", "")
    comment = obj.get("comment")
    if not isinstance(name, str) or not (comment is None or isinstance(comment, str)):
        raise FormatError("'name' and 'comment' must be strings")
    return InstanceDocument(name, Instance(costs), comment, "json")


def write_json(doc: InstanceDocument) -> str:
    """Serialize with one matrix row per line; output is byte-stable."""
    head = {"name": doc.name}
    if doc.comment is not None:
        head["comment"] = doc.comment
    head["n"] = doc.n
    lines = ["{"]
    for key, value in head.items():
        lines.append(f"  {json.dumps(key)}: {json.dumps(value)},")
    rows = doc.instance.tolist()
    lines.append('  "costs": [')
    for i, row in enumerate(rows):
        sep = "," if i < len(rows) - 1 else ""
        lines.append("    [" + ", ".join(str(v) for v in row) + "]" + sep)
    lines.append("  ]")
    lines.append("}")
    return "\n".join(lines) + "\n"


# -- TSPLIB -------------------------------------------------------------------

_FORMATS = ("FULL_MATRIX", "LOWER_DIAG_ROW", "UPPER_ROW")
_SKIPPED_SECTIONS = ("DISPLAY_DATA_SECTION",)


def _nint(x: float) -> int:
    # round half away from zero; distances are non-negative
    return int(math.floor(x + 0.5))


def _is_keyword(line: str) -> bool:
    head = line.split(":", 1)[0].strip()
    return bool(head) and (head[0].isalpha() or head[0] == "_")


def parse_tsplib(text: str) -> InstanceDocument:
    """Parse TSP/ATSP files with EXPLICIT or EUC_2D edge weights."""
    lines = [ln.strip() for ln in text.splitlines()]
    spec: dict[str, str] = {}
    weights: list[str] | None = None
    coords: list[list[str]] | None = None
    i = 0
    while i < len(lines):
        line = lines[i]
        i += 1
        if not line:
            continue
        key = line.split(":", 1)[0].strip().upper()
        if key == "EOF":
            break
        if key.endswith("_SECTION"):
            body = []
            while i < len(lines) and not (lines[i] and _is_keyword(lines[i])):
                if lines[i] and lines[i] != "-1":
                    body.append(lines[i])
                i += 1
            if key == "EDGE_WEIGHT_SECTION":
                weights = " ".join(body).split()
            elif key == "NODE_COORD_SECTION":
                coords = [ln.split() for ln in body]
            elif key not in _SKIPPED_SECTIONS:
                raise FormatError(f"unsupported section {key}")
            continue
        if ":" not in line:
            raise FormatError(f"malformed specification line: {line!r}")
        spec[key] = line.split(":", 1)[1].strip()

    kind = spec.get("TYPE", "").split()[0].upper() if spec.get("TYPE") else ""
    if kind not in ("TSP", "ATSP"):
        raise FormatError(f"unsupported TYPE {spec.get('TYPE')!r}")
    try:
        n = int(spec["DIMENSION"])
    except (KeyError, ValueError):
        raise FormatError("missing or non-integer DIMENSION") from None
    if not 1 <= n <= MAX_N:
        raise FormatError(f"DIMENSION must be in [1, {MAX_N}], got {n}")

    wtype = spec.get("EDGE_WEIGHT_TYPE", "").upper()
    if wtype == "EXPLICIT":
        fmt = spec.get("EDGE_WEIGHT_FORMAT", "").upper()
        if fmt not in _FORMATS:
            raise FormatError(f"unsupported EDGE_WEIGHT_FORMAT {fmt or None!r}")
        if weights is None:
            raise FormatError("EXPLICIT weights need an EDGE_WEIGHT_SECTION")
        costs = _explicit_matrix(weights, n, fmt)
    elif wtype == "EUC_2D":
        if coords is None:
            raise FormatError("EUC_2D needs a NODE_COORD_SECTION")
        costs = _euc_2d(coords, n)
    else:
        raise FormatError(f"unsupported EDGE_WEIGHT_TYPE {wtype or None!r}")

    return InstanceDocument(
        name=spec.get("NAME", ""),
        instance=Instance(costs),
        comment=spec.get("COMMENT"),
        source_format="tsplib",
    )


def _explicit_matrix(tokens: list[str], n: int, fmt: str) -> list[list[int]]:
    values = []
    for tok in tokens:
        try:
            values.append(_check_weight(int(tok)))
        except ValueError:
            raise FormatError(f"non-integer edge weight {tok!r}") from None
    if fmt == "FULL_MATRIX":
        cells = [(i, j) for i in range(n) for j in range(n)]
    elif fmt == "LOWER_DIAG_ROW":
        cells = [(i, j) for i in range(n) for j in range(i + 1)]
    else:  # UPPER_ROW
        cells = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if len(values) != len(cells):
        raise FormatError(f"{fmt} with DIMENSION {n} needs {len(cells)} weights, got {len(values)}")
    costs = [[0] * n for _ in range(n)]
    for (i, j), v in zip(cells, values):
        costs[i][j] = v
        if fmt != "FULL_MATRIX":
            costs[j][i] = v
    return costs


def _euc_2d(rows: list[list[str]], n: int) -> list[list[int]]:
    if len(rows) != n:
        raise FormatError(f"NODE_COORD_SECTION has {len(rows)} nodes, DIMENSION is {n}")
    pts = []
    for row in rows:
        if len(row) != 3:
            raise FormatError(f"malformed node line: {' '.join(row)!r}")
        try:
            pts.append((float(row[1]), float(row[2])))
        except ValueError:
            raise FormatError(f"non-numeric coordinate in {' '.join(row)!r}") from None
    return [
        [0 if i == j else _nint(math.hypot(a[0] - b[0], a[1] - b[1])) for j, b in enumerate(pts)]
        for i, a in enumerate(pts)
    ]


# -- files --------------------------------------------------------------------


def detect_format(path: str | Path) -> str:
    suffix = Path(path).suffix.lower()
    return "tsplib" if suffix in (".tsp", ".atsp") else "json"


def load_instance(path: str | Path, fmt: str | None = None) -> InstanceDocument:
    fmt = fmt or detect_format(path)
    text = Path(path).read_text()
    if fmt == "tsplib":
        return parse_tsplib(text)
    if fmt == "json":
        return parse_json(text)
    raise FormatError(f"unknown input format {fmt!r}")
