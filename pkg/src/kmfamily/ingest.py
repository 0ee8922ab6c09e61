"""Loading numeric CSV data and enlarging it with Gaussian noise."""
from __future__ import annotations

import csv
import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .core import DataError, Dataset
from .twophase import stream_segments


@dataclass(frozen=True)
class CsvOptions:
    delimiter: str = ","
    has_header: bool = False
    drop_columns: Sequence[int | str] = field(default_factory=tuple)
    attribute_limit: int | None = None


def _parse_drop(spec) -> tuple:
    """Turn ``"class,0"`` (or a list) into a tuple of names and integer indices."""
    if spec is None:
        return ()
    if isinstance(spec, str):
        spec = [s for s in (p.strip() for p in spec.split(",")) if s]
    out = []
    for item in spec:
        if isinstance(item, str) and item.lstrip("-").isdigit():
            item = int(item)
        out.append(item)
    return tuple(out)


def _kept_columns(ncols: int, header: list[str] | None, opts: CsvOptions) -> list[int]:
    drop = set()
    for item in _parse_drop(opts.drop_columns):
        if isinstance(item, int):
            if not -ncols <= item < ncols:
                raise DataError(f"drop column index {item} out of range for {ncols} columns")
            drop.add(item % ncols)
        else:
            if header is None or item not in header:
                raise DataError(f"drop column {item!r} not found in header")
            drop.add(header.index(item))
    kept = [i for i in range(ncols) if i not in drop]
    if opts.attribute_limit is not None:
        if opts.attribute_limit < 1:
            raise DataError("attribute limit must be positive")
        kept = kept[: opts.attribute_limit]
    if not kept:
        raise DataError("no columns left after dropping")
    return kept


def _parse_cell(text: str, row: int, col: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"cannot parse {text!r} as a number", row=row, column=col) from None
    if not math.isfinite(value):
        raise DataError(f"non-finite value {text!r}", row=row, column=col)
    return value


class _RowReader:
    """Pulls parsed, column-filtered rows from an open CSV file."""

    def __init__(self, fh, opts: CsvOptions):
        self.opts = opts
        self.reader = csv.reader(fh, delimiter=opts.delimiter)
        self.line = 0
        self.header = None
        self.kept = None
        self.ncols = None
        if opts.has_header:
            self.header = self._next_raw()
            if self.header is None:
                raise DataError("file is empty")
            self.header = [h.strip() for h in self.header]
            self._setup(len(self.header))

    def _next_raw(self):
        for cells in self.reader:
            self.line += 1
            if cells and any(c.strip() for c in cells):
                return cells
        return None

    def _setup(self, ncols):
        self.ncols = ncols
        self.kept = _kept_columns(ncols, self.header, self.opts)

    def next_cells(self):
        """Retained cell texts of the next data row (or ``None`` at EOF)."""
        cells = self._next_raw()
        if cells is None:
            return None
        if self.kept is None:
            self._setup(len(cells))
        if len(cells) != self.ncols:
            raise DataError(f"expected {self.ncols} columns, found {len(cells)}", row=self.line)
        return [cells[i].strip() for i in self.kept]

    def parse(self, texts):
        return [_parse_cell(t, self.line, i + 1) for i, t in zip(self.kept, texts)]

    def read(self, m: int) -> np.ndarray:
        rows = []
        while len(rows) < m:
            texts = self.next_cells()
            if texts is None:
                break
            rows.append(self.parse(texts))
        if not rows:
            return np.empty((0, len(self.kept) if self.kept else 0))
        return np.array(rows, dtype=np.float64)

    @property
    def kept_names(self):
        if self.header is None:
            return None
        return [self.header[i] for i in self.kept]


def _options(opts: CsvOptions | None, kwargs) -> CsvOptions:
    if opts is None:
        opts = CsvOptions(**kwargs)
    return opts


def read_table(path, opts: CsvOptions | None = None, **kwargs):
    """``(kept header names or None, retained cell texts, float array)``."""
    opts = _options(opts, kwargs)
    with open(path, newline="", encoding="utf-8") as fh:
        rr = _RowReader(fh, opts)
        texts, rows = [], []
        while (cells := rr.next_cells()) is not None:
            rows.append(rr.parse(cells))
            texts.append(cells)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return rr.kept_names, texts, np.array(rows, dtype=np.float64)


def load_csv(path, opts: CsvOptions | None = None, **kwargs) -> Dataset:
    """Load a numeric CSV file, dropping unwanted columns (e.g. the class label).

    Keyword arguments are :class:`CsvOptions` fields.  ``attribute_limit``
    keeps only the first N columns that survive the drop.  Errors name the
    1-based file line and column.
    """
    _, _, x = read_table(path, opts, **kwargs)
    return Dataset(x, name=os.path.splitext(os.path.basename(str(path)))[0])


def count_rows(path, opts: CsvOptions | None = None, **kwargs) -> int:
    opts = _options(opts, kwargs)
    with open(path, newline="", encoding="utf-8") as fh:
        rr = _RowReader(fh, opts)
        n = 0
        while rr._next_raw() is not None:
            n += 1
    return n


class CsvSegmentReader:
    """Streams a CSV file as consecutive parsed segments of ``length`` rows.

    Only the current segment (plus a small read-ahead) is held in memory.
    ``rows_read`` counts data rows handed out since construction.
    """

    def __init__(self, path, opts: CsvOptions | None = None, **kwargs):
        self.path = path
        self.opts = _options(opts, kwargs)
        self.rows_read = 0

    def segments(self, length: int, kt: int) -> Iterator[tuple[int, np.ndarray]]:
        with open(self.path, newline="", encoding="utf-8") as fh:
            rr = _RowReader(fh, self.opts)

            def read(m):
                block = rr.read(m)
                self.rows_read += block.shape[0]
                return block

            yield from stream_segments(read, length, kt)


def _noise_scale(points: np.ndarray, noise_scale: float) -> np.ndarray:
    if points.shape[0] < 2:
        return np.zeros(points.shape[1])
    return noise_scale * points.std(axis=0, ddof=1)


def iter_enlarged(data, factor: int, noise_scale: float = 0.05, seed: int = 0) -> Iterator[np.ndarray]:
    """Yield the original rows, then ``factor - 1`` noisy copies, one block each.

    Noise is Gaussian, per attribute, with standard deviation ``noise_scale``
    times that attribute's sample standard deviation.
    """
    if int(factor) != factor or factor < 1:
        raise ValueError("replication factor must be a positive integer")
    if not noise_scale >= 0:
        raise ValueError("noise scale must be non-negative")
    x = data.points if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    sd = _noise_scale(x, noise_scale)
    rng = np.random.default_rng(seed)
    yield x
    for _ in range(factor - 1):
        yield x + rng.standard_normal(x.shape) * sd


def enlarge_with_noise(data: Dataset, factor: int, noise_scale: float = 0.05, seed: int = 0) -> Dataset:
    if factor == 1:
        return data
    out = np.concatenate(list(iter_enlarged(data, factor, noise_scale, seed)))
    return Dataset(out, name=f"{data.name}_x{factor}")


def fmt(value: float) -> str:
    return repr(float(value))


def atomic_write(path, write):
    """Call ``write(fh)`` on a temp file in the target directory, then rename over ``path``."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            write(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
