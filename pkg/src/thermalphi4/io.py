"""Result tables, strict run configuration and bit-stable CSV/JSON output.

A run produces a :class:`ResultDocument`: ordered metadata plus one or more
named :class:`ResultTable` blocks. Column names carry a unit suffix after
the last underscore (``mu2_latt``, ``omega_z_hz``, ``ratio_1``). Unit tokens:

``latt``
    lattice units (powers of the spacing ``a`` set to one)
``hz``
    ordinary frequency in Hz (``omega / 2 pi``)
``m``
    metres
``1``
    dimensionless
``str``
    text label

Floats are written with 17 significant digits so that every value
round-trips exactly through parse and format.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np

from .errors import ConfigError

__all__ = [
    "ResultTable",
    "ResultDocument",
    "Param",
    "RunConfig",
    "format_value",
    "parse_value",
    "parse_grid",
    "write_csv",
    "read_csv",
    "write_json",
    "body_lines",
    "config_digest",
    "load_config",
]

Value = Union[float, int, str]


# --------------------------------------------------------------------------- tables

@dataclass
class ResultTable:
    name: str
    columns: Tuple[str, ...]
    rows: List[Tuple[Value, ...]] = field(default_factory=list)

    def __post_init__(self):
        self.columns = tuple(self.columns)
        for c in self.columns:
            if "_" not in c:
                raise ValueError(f"column {c!r} lacks a unit suffix")

    def append(self, *values: Value) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"table {self.name}: expected {len(self.columns)} values, "
                             f"got {len(values)}")
        self.rows.append(tuple(_normalize(v) for v in values))

    def column(self, name: str) -> list:
        k = self.columns.index(name)
        return [r[k] for r in self.rows]


@dataclass
class ResultDocument:
    meta: Dict[str, str]
    tables: List[ResultTable]

    def table(self, name: str) -> ResultTable:
        for t in self.tables:
            if t.name == name:
                return t
        raise KeyError(name)


def _normalize(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    if isinstance(v, str):
        if any(ch in v for ch in ",\n\r\""):
            raise ValueError(f"text value {v!r} contains a reserved character")
        return v
    raise TypeError(f"unsupported table value {v!r}")


def format_value(v: Value) -> str:
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.17g}"
    return str(v)


def parse_value(s: str) -> Value:
    try:
        v = int(s)
        # "-0" is the text of a negative-zero float
        return -0.0 if v == 0 and s.startswith("-") else v
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


# --------------------------------------------------------------------------- CSV / JSON

def write_csv(doc: ResultDocument, stream) -> None:
    """Write ``#`` metadata lines, then each table as ``# table:`` marker, header and rows."""
    out = []
    for k, v in doc.meta.items():
        out.append(f"# {k}: {v}")
    for t in doc.tables:
        out.append(f"# table: {t.name}")
        out.append(",".join(t.columns))
        for r in t.rows:
            out.append(",".join(format_value(v) for v in r))
    stream.write("\n".join(out) + "\n")


def read_csv(stream) -> ResultDocument:
    meta: Dict[str, str] = {}
    tables: List[ResultTable] = []
    cur: Optional[ResultTable] = None
    expect_header = False
    for line in stream.read().split("\n"):
        if not line:
            continue
        if line.startswith("# "):
            key, _, val = line[2:].partition(": ")
            if key == "table":
                cur = None
                expect_header = True
                name = val
            else:
                meta[key] = val
            continue
        if expect_header:
            cur = ResultTable(name, tuple(line.split(",")))
            tables.append(cur)
            expect_header = False
            continue
        if cur is None:
            raise ValueError("data row outside a table")
        cur.rows.append(tuple(parse_value(x) for x in line.split(",")))
    return ResultDocument(meta, tables)


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def write_json(doc: ResultDocument, stream) -> None:
    """Single JSON document ``{"meta": ..., "rows": [...]}``.

    Each row object carries its table name under ``"table"``; non-finite
    floats become ``null``.
    """
    rows = []
    for t in doc.tables:
        for r in t.rows:
            obj = {"table": t.name}
            obj.update({c: _json_value(v) for c, v in zip(t.columns, r)})
            rows.append(obj)
    json.dump({"meta": doc.meta, "rows": rows}, stream, indent=1, allow_nan=False)
    stream.write("\n")


def body_lines(text: str) -> List[str]:
    """CSV lines that make up the deterministic body (metadata excluded)."""
    return [ln for ln in text.split("\n") if not ln.startswith("#") or ln.startswith("# table:")]


# --------------------------------------------------------------------------- configuration

@dataclass(frozen=True)
class Param:
    """One configuration key.

    ``kind`` is one of ``int``, ``float``, ``str``, ``bool``, ``floats``,
    ``ints``, ``strs`` or ``grid``. Grids accept a comma list or
    ``lin:start:stop:num`` / ``geom:start:stop:num``.
    """

    kind: str
    unit: str
    default: Any = None
    help: str = ""
    choices: Optional[Tuple[str, ...]] = None


@dataclass(frozen=True)
class RunConfig:
    command: str
    values: Mapping[str, Any]
    source: str

    def __getitem__(self, key):
        return self.values[key]

    def canonical(self) -> Dict[str, Any]:
        return {"command": self.command, "values": {k: _canon(v) for k, v in
                                                    sorted(self.values.items())}}

    @property
    def digest(self) -> str:
        return config_digest(self)


def _canon(v):
    if isinstance(v, float):
        return format_value(v)
    if isinstance(v, (list, tuple)):
        return [_canon(x) for x in v]
    return v


def config_digest(cfg: RunConfig) -> str:
    blob = json.dumps(cfg.canonical(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def parse_grid(text: str) -> List[float]:
    text = text.strip()
    if text.startswith(("lin:", "geom:")):
        kind, *parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"grid {text!r} must be kind:start:stop:num")
        try:
            a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError as exc:
            raise ConfigError(f"bad grid {text!r}: {exc}") from None
        if n < 1:
            raise ConfigError(f"grid {text!r} needs num >= 1")
        if kind == "geom":
            if not (a > 0 and b > 0):
                raise ConfigError(f"geometric grid {text!r} needs positive bounds")
            return np.geomspace(a, b, n).tolist()
        return np.linspace(a, b, n).tolist()
    return _split(text, float)


def _split(text, conv):
    items = [x.strip() for x in text.split(",") if x.strip()]
    try:
        return [conv(x) for x in items]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _convert(key: str, raw: Any, p: Param):
    if raw is None:
        return None
    if not isinstance(raw, str):
        val = list(raw) if isinstance(raw, (list, tuple)) else raw
    else:
        try:
            if p.kind == "int":
                val = int(raw)
            elif p.kind == "float":
                val = float(raw)
            elif p.kind == "bool":
                low = raw.strip().lower()
                if low not in ("true", "false", "yes", "no", "1", "0"):
                    raise ValueError(f"not a boolean: {raw!r}")
                val = low in ("true", "yes", "1")
            elif p.kind == "str":
                val = raw.strip()
            elif p.kind == "floats":
                val = _split(raw, float)
            elif p.kind == "ints":
                val = _split(raw, int)
            elif p.kind == "strs":
                val = _split(raw, str)
            elif p.kind == "grid":
                val = parse_grid(raw)
            else:
                raise AssertionError(p.kind)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from None
    if p.choices is not None:
        vals = val if isinstance(val, list) else [val]
        bad = [v for v in vals if v not in p.choices]
        if bad:
            raise ConfigError(f"{key}: {bad[0]!r} not in {list(p.choices)}")
    if p.kind == "float":
        val = float(val)
    elif p.kind == "int":
        val = int(val)
    elif p.kind in ("floats", "grid"):
        val = [float(x) for x in val]
    elif p.kind == "ints":
        val = [int(x) for x in val]
    return val


def load_config(command: str, schema: Mapping[str, Param], text: Optional[str] = None,
                overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    """Resolve a configuration against ``schema``.

    ``text`` is INI-style with a single section named after the command.
    ``overrides`` (a preset, typically) is applied first and then ``text``
    on top. Unknown sections or keys raise :class:`ConfigError`.
    """
    raw: Dict[str, Any] = {}
    for k, v in (overrides or {}).items():
        if k not in schema:
            raise ConfigError(f"unknown key {k!r} for {command}")
        raw[k] = v
    if text is not None:
        cp = configparser.ConfigParser(interpolation=None, default_section="\x00unused")
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse configuration: {exc}") from None
        for sec in cp.sections():
            if sec != command:
                raise ConfigError(f"unknown section [{sec}]; expected [{command}]")
            for k, v in cp.items(sec):
                if k not in schema:
                    raise ConfigError(f"unknown key {k!r} in [{command}]")
                raw[k] = v
    values = {}
    for k, p in schema.items():
        values[k] = _convert(k, raw.get(k, p.default), p)
    return RunConfig(command, values, "text" if text is not None else "preset")
