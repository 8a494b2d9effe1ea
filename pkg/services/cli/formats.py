"""
File formats used by the command-line driver.

RDK arrays:
    one ASCII header line  "RDK1 <image|sinogram> <rows> <cols>\\n"
    followed by rows*cols little-endian float64 values, row-major.

Phantom descriptions:
    ASCII, '#' starts a comment, each data line "cx cy a b rot_deg density".
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from services.phantoms.phantoms import EllipsePhantom, PhantomError, builtin_phantom, from_rows, is_builtin

logger = logging.getLogger(__name__)

RDK_MAGIC = "RDK1"
RDK_KINDS = ("image", "sinogram")
_LE_FLOAT64 = np.dtype("<f8")


class FormatError(ValueError):
    """Malformed input file; line is 1-based when known."""

    def __init__(self, message: str, path: Optional[Union[str, Path]] = None, line: Optional[int] = None):
        self.path = str(path) if path is not None else None
        self.line = line
        where = ""
        if self.path:
            where = f"{self.path}:{line}: " if line is not None else f"{self.path}: "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(f"{where}{message}")


@dataclass(frozen=True, eq=False)
class RdkArray:
    kind: str
    values: np.ndarray      # shape (rows, cols)

    @property
    def rows(self) -> int:
        return int(self.values.shape[0])

    @property
    def cols(self) -> int:
        return int(self.values.shape[1])


def write_rdk(path: Union[str, Path], kind: str, values: np.ndarray) -> None:
    if kind not in RDK_KINDS:
        raise ValueError(f"RDK kind must be one of {RDK_KINDS}, got {kind!r}")
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"RDK arrays are 2-D, got shape {arr.shape}")
    header = f"{RDK_MAGIC} {kind} {arr.shape[0]} {arr.shape[1]}\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(arr, dtype=_LE_FLOAT64).tobytes())
    logger.debug(f"Wrote {kind} {arr.shape[0]}x{arr.shape[1]} to {path}")


def read_rdk(path: Union[str, Path], expected_kind: Optional[str] = None) -> RdkArray:
    with open(path, "rb") as fh:
        raw_header = fh.readline()
        payload = fh.read()

    try:
        header = raw_header.decode("ascii")
    except UnicodeDecodeError as e:
        raise FormatError("header is not ASCII", path, 1) from e
    if not header.endswith("\n"):
        raise FormatError("missing header line terminator", path, 1)

    parts = header.split()
    if len(parts) != 4 or parts[0] != RDK_MAGIC:
        raise FormatError(f"expected '{RDK_MAGIC} <image|sinogram> <rows> <cols>', got {header.strip()!r}", path, 1)
    kind = parts[1]
    if kind not in RDK_KINDS:
        raise FormatError(f"unknown array kind {kind!r}", path, 1)
    if expected_kind is not None and kind != expected_kind:
        raise FormatError(f"expected a {expected_kind} file, got {kind}", path, 1)
    try:
        rows, cols = int(parts[2]), int(parts[3])
    except ValueError as e:
        raise FormatError(f"bad dimensions in header {header.strip()!r}", path, 1) from e
    if rows < 1 or cols < 1:
        raise FormatError(f"dimensions must be positive, got {rows}x{cols}", path, 1)

    expected = rows * cols * _LE_FLOAT64.itemsize
    if len(payload) != expected:
        raise FormatError(f"payload has {len(payload)} bytes, header announces {expected}", path)
    values = np.frombuffer(payload, dtype=_LE_FLOAT64).astype(np.float64).reshape(rows, cols)
    return RdkArray(kind=kind, values=values)


def parse_phantom_text(text: str, source: str = "<string>") -> EllipsePhantom:
    rows: List[List[float]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        content = line.split("#", 1)[0].strip()
        if not content:
            continue
        fields = content.split()
        if len(fields) != 6:
            raise FormatError(f"expected 6 fields 'cx cy a b rot_deg density', got {len(fields)}", source, lineno)
        try:
            row = [float(v) for v in fields]
        except ValueError as e:
            raise FormatError(f"non-numeric field: {e}", source, lineno) from e
        try:
            from_rows([row])
        except PhantomError as e:
            raise FormatError(str(e), source, lineno) from e
        rows.append(row)
    if not rows:
        raise FormatError("phantom file has no ellipses", source)
    return from_rows(rows, name=Path(source).stem)


def load_phantom(spec: str) -> EllipsePhantom:
    """Built-in name or path of a phantom description file."""
    if is_builtin(spec):
        return builtin_phantom(spec)
    path = Path(spec)
    return parse_phantom_text(path.read_text(encoding="utf-8"), source=str(path))
