"""CSV tables with ``name[unit]`` headers.

A column named ``<name>_err`` is treated as the uncertainty of column
``<name>`` and travels with it.  Values are written with 17 significant
digits, so a write/read cycle is bit-exact.
"""

from __future__ import annotations

import csv
import io
import os
import re
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .series import SpectrumSeries

_HEADER = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*\[([^\[\]]*)\]\s*$")


class TableError(ValueError):
    pass


@dataclass
class DataTable:
    names: list[str]
    units: list[str]
    values: np.ndarray  # shape (rows, columns)
    comments: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim == 1 and len(self.names) == 1:
            self.values = self.values[:, None]
        if self.values.ndim != 2 or self.values.shape[1] != len(self.names):
            raise TableError("values must be a 2-D array with one column per name")
        if len(self.units) != len(self.names):
            raise TableError("every column needs a unit tag")
        if len(set(self.names)) != len(self.names):
            raise TableError("column names must be unique")
        for name in self.names:
            if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name):
                raise TableError(f"column name {name!r} is not an identifier")

    @classmethod
    def from_columns(cls, columns: dict[str, tuple[str, np.ndarray]], comments=()) -> DataTable:
        names = list(columns)
        units = [columns[n][0] for n in names]
        data = np.column_stack([np.asarray(columns[n][1], dtype=float) for n in names])
        return cls(names, units, data, list(comments))

    def column(self, name: str) -> np.ndarray:
        try:
            return self.values[:, self.names.index(name)]
        except ValueError:
            raise KeyError(f"no column {name!r}; have {', '.join(self.names)}") from None

    def unit(self, name: str) -> str:
        return self.units[self.names.index(name)]

    def error(self, name: str) -> np.ndarray | None:
        """The attached ``<name>_err`` column, if present."""
        err = f"{name}_err"
        return self.column(err) if err in self.names else None

    @property
    def data_columns(self) -> list[str]:
        return [n for n in self.names if not (n.endswith("_err") and n[:-4] in self.names)]

    def series(self, x: str, y: str, channel: str = "") -> SpectrumSeries:
        return SpectrumSeries(self.column(x), self.column(y), channel=channel or y,
                              axis_name=x, error=self.error(y))

    def __eq__(self, other):
        return (isinstance(other, DataTable) and self.names == other.names
                and self.units == other.units and self.values.shape == other.values.shape
                and np.array_equal(self.values, other.values, equal_nan=True))


def series_table(x_name: str, x_unit: str, series: dict[str, SpectrumSeries], y_unit: str,
                 comments=()) -> DataTable:
    """Columns x, then each series' rate (and its ``_err`` column when present)."""
    items = list(series.items())
    columns = {x_name: (x_unit, items[0][1].freq)}
    for name, s in items:
        if not np.array_equal(s.freq, items[0][1].freq):
            raise TableError("series in one table must share their axis")
        columns[name] = (y_unit, s.rate)
        if s.error is not None:
            columns[f"{name}_err"] = (y_unit, s.error)
    return DataTable.from_columns(columns, comments)


def format_table(table: DataTable) -> str:
    out = io.StringIO()
    for line in table.comments:
        out.write(f"# {line}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([f"{n}[{u}]" for n, u in zip(table.names, table.units)])
    for row in table.values:
        writer.writerow(["%.17g" % v for v in row])
    return out.getvalue()


def parse_table(text: str, source: str = "<table>") -> DataTable:
    comments: list[str] = []
    header = None
    rows: list[list[float]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            comments.append(stripped[1:].strip())
            continue
        cells = next(csv.reader([stripped]))
        if header is None:
            names, units = [], []
            for cell in cells:
                match = _HEADER.match(cell)
                if not match:
                    raise TableError(f"{source}:{lineno}: header {cell.strip()!r} lacks a "
                                     "'name[unit]' tag")
                names.append(match.group(1))
                units.append(match.group(2).strip())
            header = (names, units)
            continue
        if len(cells) != len(header[0]):
            raise TableError(f"{source}: row {len(rows) + 1} (line {lineno}) has {len(cells)} "
                             f"fields, expected {len(header[0])}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            raise TableError(f"{source}: row {len(rows) + 1} (line {lineno}): "
                             f"unparseable number in {stripped!r}") from None
    if header is None:
        raise TableError(f"{source}: no header row")
    values = np.array(rows, dtype=float).reshape(len(rows), len(header[0]))
    try:
        return DataTable(header[0], header[1], values, comments)
    except TableError as exc:
        raise TableError(f"{source}: {exc}") from None


def read_table(path) -> DataTable:
    with open(path, encoding="utf-8", newline="") as handle:
        return parse_table(handle.read(), source=str(path))


def write_text_atomic(path, text: str):
    """Write via a temporary file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_table(path, table: DataTable):
    write_text_atomic(path, format_table(table))
