"""TSP instances: TSPLIB parsing, integer distance semantics, fixtures.

Cities are indexed from 0 internally. The 1-based labels found in a TSPLIB
file are kept on the instance and used whenever tours are reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

METRICS = ("EUC_2D", "ATT", "EXPLICIT")

#: Instances above this size compute distances on demand in :meth:`Instance.distance`.
PRECOMPUTE_LIMIT = 4096


class TSPLIBParseError(ValueError):
    """Raised for malformed or unsupported TSPLIB input."""

    def __init__(self, message: str, line_no: int | None = None, line: str | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
            if line is not None:
                message += f" ({line.strip()!r})"
        super().__init__(message)
        self.line_no = line_no


def nint(x: float) -> int:
    """Nearest integer, ties rounded up (TSPLIB ``(int)(x + 0.5)``)."""
    return int(math.floor(x + 0.5))


def euc_2d(x1: float, y1: float, x2: float, y2: float) -> int:
    return nint(math.hypot(x1 - x2, y1 - y2))


def att(x1: float, y1: float, x2: float, y2: float) -> int:
    """Pseudo-Euclidean distance used by the att* instances."""
    dx, dy = x1 - x2, y1 - y2
    r = math.sqrt((dx * dx + dy * dy) / 10.0)
    t = nint(r)
    return t + 1 if t < r else t


_PAIR_DISTANCE = {"EUC_2D": euc_2d, "ATT": att}


def _matrix_from_coords(coords: np.ndarray, metric: str) -> np.ndarray:
    dx = coords[:, 0][:, None] - coords[:, 0][None, :]
    dy = coords[:, 1][:, None] - coords[:, 1][None, :]
    if metric == "EUC_2D":
        d = np.floor(np.sqrt(dx * dx + dy * dy) + 0.5)
    else:
        r = np.sqrt((dx * dx + dy * dy) / 10.0)
        t = np.floor(r + 0.5)
        d = np.where(t < r, t + 1.0, t)
    return d.astype(np.int64)


@dataclass(frozen=True, eq=False)
class Instance:
    """An immutable symmetric TSP instance.

    Exactly one of ``coords`` (n x 2 floats) or ``matrix`` (n x n ints) is
    given, matching ``metric``.
    """

    name: str
    metric: str
    coords: np.ndarray | None = None
    explicit: np.ndarray | None = None
    labels: tuple[int, ...] = field(default=())
    comment: str = ""

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"unsupported metric {self.metric!r}")
        if self.metric == "EXPLICIT":
            if self.explicit is None:
                raise ValueError("EXPLICIT instance needs a matrix")
            m = np.array(self.explicit, dtype=np.int64)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError(f"matrix must be square, got shape {m.shape}")
            if not np.array_equal(m, m.T):
                raise ValueError("matrix must be symmetric")
            if np.any(np.diag(m) != 0):
                raise ValueError("matrix diagonal must be zero")
            if np.any(m < 0):
                raise ValueError("matrix entries must be nonnegative")
            m.setflags(write=False)
            object.__setattr__(self, "explicit", m)
            n = m.shape[0]
        else:
            if self.coords is None:
                raise ValueError(f"{self.metric} instance needs coordinates")
            c = np.array(self.coords, dtype=np.float64)
            if c.ndim != 2 or c.shape[1] != 2:
                raise ValueError(f"coordinates must be n x 2, got shape {c.shape}")
            c.setflags(write=False)
            object.__setattr__(self, "coords", c)
            n = c.shape[0]
        if n < 2:
            raise ValueError(f"instance needs at least 2 cities, got {n}")
        if not self.labels:
            object.__setattr__(self, "labels", tuple(range(1, n + 1)))
        elif len(self.labels) != n:
            raise ValueError("one label per city required")

    @property
    def n(self) -> int:
        if self.explicit is not None:
            return self.explicit.shape[0]
        return self.coords.shape[0]

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"Instance(name={self.name!r}, n={self.n}, metric={self.metric})"

    @cached_property
    def matrix(self) -> np.ndarray:
        """Dense int64 distance matrix (read-only)."""
        if self.explicit is not None:
            return self.explicit
        m = _matrix_from_coords(self.coords, self.metric)
        m.setflags(write=False)
        return m

    def distance(self, i: int, j: int) -> int:
        n = self.n
        if not (0 <= i < n and 0 <= j < n):
            raise IndexError(f"city index out of range for n={n}: ({i}, {j})")
        if self.explicit is not None:
            return int(self.explicit[i, j])
        if n <= PRECOMPUTE_LIMIT or "matrix" in self.__dict__:
            return int(self.matrix[i, j])
        xi, yi = self.coords[i]
        xj, yj = self.coords[j]
        return _PAIR_DISTANCE[self.metric](xi, yi, xj, yj)

    @cached_property
    def neighbors(self) -> np.ndarray:
        """All other cities of each city, sorted by increasing distance (n x n-1)."""
        d = self.matrix.astype(np.float64)
        np.fill_diagonal(d, np.inf)
        order = np.argsort(d, axis=1, kind="stable")[:, : self.n - 1]
        return np.ascontiguousarray(order.astype(np.int64))

    def neighbor_lists(self, k: int) -> np.ndarray:
        """The ``k`` nearest neighbours of each city (clipped to n-1)."""
        k = max(1, min(k, self.n - 1))
        return np.ascontiguousarray(self.neighbors[:, :k])

    def to_tsplib(self) -> str:
        """Serialize back to TSPLIB text."""
        lines = [f"NAME : {self.name}", "TYPE : TSP"]
        if self.comment:
            lines.append(f"COMMENT : {self.comment}")
        lines += [f"DIMENSION : {self.n}", f"EDGE_WEIGHT_TYPE : {self.metric}"]
        if self.metric == "EXPLICIT":
            lines += ["EDGE_WEIGHT_FORMAT : FULL_MATRIX", "EDGE_WEIGHT_SECTION"]
            lines += [" ".join(str(int(v)) for v in row) for row in self.explicit]
        else:
            lines.append("NODE_COORD_SECTION")
            for label, (x, y) in zip(self.labels, self.coords):
                lines.append(f"{label} {_fmt_number(x)} {_fmt_number(y)}")
        lines.append("EOF")
        return "\n".join(lines) + "\n"


def _fmt_number(v: float) -> str:
    if float(v).is_integer():
        return str(int(v))
    return repr(float(v))


_SUPPORTED_HEADERS = {
    "NAME", "TYPE", "COMMENT", "DIMENSION", "EDGE_WEIGHT_TYPE",
    "EDGE_WEIGHT_FORMAT", "DISPLAY_DATA_TYPE", "NODE_COORD_TYPE",
}


def parse_tsplib(text: str) -> Instance:
    """Parse TSPLIB text (EUC_2D, ATT, or EXPLICIT/FULL_MATRIX)."""
    header: dict[str, str] = {}
    header_line: dict[str, int] = {}
    lines = text.splitlines()
    i = 0
    section = None
    while i < len(lines):
        raw = lines[i]
        s = raw.strip()
        i += 1
        if not s:
            continue
        upper = s.upper()
        if upper == "EOF":
            break
        if upper in ("NODE_COORD_SECTION", "EDGE_WEIGHT_SECTION"):
            section = upper
            break
        if upper.endswith("_SECTION"):
            raise TSPLIBParseError(f"unsupported section {s}", i, raw)
        if ":" not in s:
            raise TSPLIBParseError("malformed header, expected 'KEY : value'", i, raw)
        key, value = (p.strip() for p in s.split(":", 1))
        key = key.upper()
        if key not in _SUPPORTED_HEADERS:
            raise TSPLIBParseError(f"unknown header keyword {key}", i, raw)
        header[key] = value
        header_line[key] = i

    for key in ("NAME", "DIMENSION", "EDGE_WEIGHT_TYPE"):
        if key not in header:
            raise TSPLIBParseError(f"missing {key} header")
    if "TYPE" in header and header["TYPE"].upper() != "TSP":
        raise TSPLIBParseError(
            f"unsupported problem TYPE {header['TYPE']}", header_line["TYPE"]
        )
    try:
        n = int(header["DIMENSION"])
    except ValueError:
        raise TSPLIBParseError(
            "DIMENSION is not an integer", header_line["DIMENSION"], header["DIMENSION"]
        ) from None
    metric = header["EDGE_WEIGHT_TYPE"].upper()
    if metric not in METRICS:
        raise TSPLIBParseError(
            f"unsupported EDGE_WEIGHT_TYPE {metric}", header_line["EDGE_WEIGHT_TYPE"]
        )
    if section is None:
        raise TSPLIBParseError("missing NODE_COORD_SECTION or EDGE_WEIGHT_SECTION")

    name = header["NAME"]
    comment = header.get("COMMENT", "")
    if metric == "EXPLICIT":
        if section != "EDGE_WEIGHT_SECTION":
            raise TSPLIBParseError("EXPLICIT instance needs EDGE_WEIGHT_SECTION")
        fmt = header.get("EDGE_WEIGHT_FORMAT", "FULL_MATRIX").upper()
        if fmt != "FULL_MATRIX":
            raise TSPLIBParseError(
                f"unsupported EDGE_WEIGHT_FORMAT {fmt}", header_line.get("EDGE_WEIGHT_FORMAT")
            )
        values: list[int] = []
        while i < len(lines) and len(values) < n * n:
            raw = lines[i]
            i += 1
            s = raw.strip()
            if not s:
                continue
            if s.upper() == "EOF":
                break
            for tok in s.split():
                try:
                    values.append(int(float(tok)))
                except ValueError:
                    raise TSPLIBParseError("non-numeric edge weight", i, raw) from None
        if len(values) != n * n:
            raise TSPLIBParseError(
                f"dimension mismatch: expected {n * n} edge weights, found {len(values)}"
            )
        try:
            return Instance(
                name=name, metric=metric, comment=comment,
                explicit=np.array(values, dtype=np.int64).reshape(n, n),
            )
        except ValueError as exc:
            raise TSPLIBParseError(str(exc)) from None

    if section != "NODE_COORD_SECTION":
        raise TSPLIBParseError(f"{metric} instance needs NODE_COORD_SECTION")
    labels: list[int] = []
    coords: list[tuple[float, float]] = []
    while i < len(lines):
        raw = lines[i]
        i += 1
        s = raw.strip()
        if not s:
            continue
        if s.upper() == "EOF":
            break
        parts = s.split()
        if len(parts) != 3:
            raise TSPLIBParseError("expected 'index x y'", i, raw)
        try:
            label = int(parts[0])
            x, y = float(parts[1]), float(parts[2])
        except ValueError:
            raise TSPLIBParseError("non-numeric coordinate", i, raw) from None
        labels.append(label)
        coords.append((x, y))
    if len(coords) != n:
        raise TSPLIBParseError(
            f"dimension mismatch: DIMENSION is {n} but {len(coords)} coordinates given"
        )
    if len(set(labels)) != n:
        raise TSPLIBParseError("duplicate node index in NODE_COORD_SECTION")
    return Instance(
        name=name, metric=metric, coords=np.array(coords), labels=tuple(labels),
        comment=comment,
    )


def load_tsplib(path: str | Path) -> Instance:
    path = Path(path)
    try:
        return parse_tsplib(path.read_text())
    except TSPLIBParseError as exc:
        raise TSPLIBParseError(f"{path}: {exc}") from None


def from_matrix(matrix, name: str = "explicit") -> Instance:
    return Instance(name=name, metric="EXPLICIT", explicit=np.asarray(matrix))


def from_coords(coords, metric: str = "EUC_2D", name: str = "coords") -> Instance:
    return Instance(name=name, metric=metric, coords=np.asarray(coords, dtype=np.float64))


# Cost matrix of the 8-node example graph used to illustrate greedy crossover.
_FIG4 = [
    [0, 12, 19, 31, 22, 17, 23, 12],
    [12, 0, 15, 37, 21, 28, 35, 22],
    [19, 15, 0, 50, 36, 35, 35, 21],
    [31, 37, 50, 0, 20, 21, 37, 38],
    [22, 21, 36, 20, 0, 25, 40, 33],
    [17, 28, 35, 21, 25, 0, 16, 18],
    [23, 35, 35, 37, 40, 16, 0, 14],
    [12, 22, 21, 38, 33, 18, 14, 0],
]


def fig4_fixture() -> Instance:
    """The 8-city explicit example instance (labels 1..8)."""
    return from_matrix(_FIG4, name="fig4")


def random_instance(n: int, seed: int, scale: float = 1000.0) -> Instance:
    """Uniform random EUC_2D instance with integer coordinates, for tests."""
    rng = np.random.default_rng(seed)
    coords = rng.integers(0, int(scale) + 1, size=(n, 2)).astype(np.float64)
    return from_coords(coords, name=f"rand{n}_{seed}")
