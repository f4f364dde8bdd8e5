"""Chunked CSV reading and writing.

Data files are comma separated, one observation per row, no missing
values; an optional single header line is skipped.  Reading happens in
fixed-size chunks so memory use does not grow with the number of rows.
"""

from __future__ import annotations

import io as _io
from pathlib import Path
from typing import Iterator

import numpy as np
import pandas as pd

from .exceptions import DimensionError, InputError

CHUNK_ROWS = 8192


def _locate_bad_cell(path, skip: int, nrows: int, first_line: int):
    """Find the first non-numeric or missing cell among ``nrows`` rows."""
    with open(path) as fh:
        for _ in range(skip):
            fh.readline()
        for r in range(nrows):
            line = fh.readline()
            if not line:
                break
            for c, cell in enumerate(line.rstrip("\r\n").split(",")):
                try:
                    val = float(cell)
                except ValueError:
                    return first_line + r, c + 1, cell
                if val != val:
                    return first_line + r, c + 1, cell
    return None


def iter_csv(path, *, header: bool = False, dim: int | None = None,
             chunk_rows: int = CHUNK_ROWS) -> Iterator[np.ndarray]:
    """Yield float64 blocks of at most ``chunk_rows`` rows.

    Raises :class:`InputError` naming the 1-based line and column of the
    first non-numeric or missing cell, and :class:`DimensionError` when a
    row's width differs from ``dim`` (or from the first row).
    """
    path = str(path)
    skip = 1 if header else 0
    if Path(path).stat().st_size == 0:
        return
    try:
        reader = pd.read_csv(path, header=None, skiprows=skip, dtype=np.float64,
                             chunksize=chunk_rows, engine="c", skip_blank_lines=True)
    except pd.errors.EmptyDataError:
        return
    done = 0
    with reader:
        while True:
            try:
                frame = next(reader)
            except StopIteration:
                return
            except pd.errors.EmptyDataError:
                return
            except pd.errors.ParserError as exc:
                raise DimensionError(f"inconsistent row width: {exc}".replace("\n", " ")) from None
            except ValueError:
                loc = _locate_bad_cell(path, skip + done, chunk_rows, skip + done + 1)
                if loc is None:
                    raise InputError("non-numeric value in data file") from None
                line, col, cell = loc
                raise InputError(f"non-numeric value {cell!r} at line {line}, column {col}") from None
            block = frame.to_numpy(dtype=np.float64)
            if dim is None:
                dim = block.shape[1]
            elif block.shape[1] != dim:
                raise DimensionError(f"expected {dim} columns, got {block.shape[1]}")
            if np.isnan(block).any():
                r, c = np.argwhere(np.isnan(block))[0]
                raise InputError(f"missing value at line {skip + done + r + 1}, column {c + 1}")
            done += block.shape[0]
            yield block


def read_csv(path, *, header: bool = False) -> np.ndarray:
    blocks = list(iter_csv(path, header=header))
    if not blocks:
        return np.empty((0, 0))
    return np.concatenate(blocks)


def write_rows(fh, X: np.ndarray) -> None:
    """Append rows with 17 significant digits (exact float round trip)."""
    if X.shape[0]:
        buf = _io.StringIO()
        np.savetxt(buf, X, delimiter=",", fmt="%.17g")
        fh.write(buf.getvalue())


def read_labels(path) -> np.ndarray:
    """One label per line (integers or strings); no header."""
    with open(path) as fh:
        labels = [line.strip() for line in fh if line.strip()]
    try:
        return np.array([int(x) for x in labels], dtype=np.int64)
    except ValueError:
        return np.array(labels, dtype=object)


def write_labels(fh, labels) -> None:
    if len(labels):
        fh.write("\n".join(str(int(x)) for x in labels) + "\n")
