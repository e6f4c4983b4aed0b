from pathlib import Path
from typing import Optional, Union

import numpy as np

from cbSpMV.models.errors import MatrixMarketError
from cbSpMV.models.matrix import TripletMatrix
from cbSpMV.utils.io import PathLike

SUPPORTED_FIELDS = ("real", "integer", "pattern")
SUPPORTED_SYMMETRIES = ("general", "symmetric", "skew-symmetric", "hermitian")


class MatrixMarketIO:
    @staticmethod
    def canonicalize(n_rows: int, n_cols: int, rows, cols, vals, source: Optional[str] = None) -> TripletMatrix:
        """
        Sort entries by (row, col), sum duplicate coordinates and drop explicit zeros.

        Raises:
            MatrixMarketError: a sum of duplicates overflows to a non-finite value
        """
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if len(vals) == 0:
            return TripletMatrix.empty(n_rows, n_cols)
        keys = rows * n_cols + cols
        unique_keys, inverse = np.unique(keys, return_inverse=True)
        sums = np.bincount(inverse.ravel(), weights=vals, minlength=len(unique_keys))
        if not np.all(np.isfinite(sums)):
            raise MatrixMarketError("non-finite value after summing duplicates", None, source)
        keep = sums != 0.0
        unique_keys = unique_keys[keep]
        return TripletMatrix(n_rows=n_rows, n_cols=n_cols,
                             rows=unique_keys // n_cols, cols=unique_keys % n_cols, vals=sums[keep])

    @staticmethod
    def parse_banner(line: str, source: Optional[str] = None) -> tuple[str, str]:
        tokens = line.strip().lower().split()
        if len(tokens) != 5 or tokens[0] != "%%matrixmarket":
            raise MatrixMarketError("malformed banner, expected '%%MatrixMarket matrix coordinate <field> <symmetry>'", 1, source)
        _, obj, fmt, field, symmetry = tokens
        if obj != "matrix":
            raise MatrixMarketError(f"unsupported object '{obj}'", 1, source)
        if fmt != "coordinate":
            raise MatrixMarketError(f"unsupported format '{fmt}', only coordinate files are read", 1, source)
        if field == "complex":
            raise MatrixMarketError("complex matrices are not supported", 1, source)
        if field not in SUPPORTED_FIELDS:
            raise MatrixMarketError(f"unsupported field '{field}'", 1, source)
        if symmetry not in SUPPORTED_SYMMETRIES:
            raise MatrixMarketError(f"unsupported symmetry '{symmetry}'", 1, source)
        return field, symmetry

    @staticmethod
    def parse(text: Union[bytes, str], source: Optional[str] = None) -> TripletMatrix:
        """
        Parse a Matrix Market coordinate file into a canonical TripletMatrix.

        Symmetric, skew-symmetric and hermitian files are expanded to general form,
        pattern entries get the value 1.0 and 1-based indices become 0-based.

        Raises:
            MatrixMarketError: malformed banner or size line, entry count mismatch,
                index out of bounds or non-finite value
        """
        if isinstance(text, bytes):
            try:
                text = text.decode("utf-8")
            except UnicodeDecodeError as e:
                raise MatrixMarketError(f"file is not ANSI text ({e})", None, source)
        lines = text.splitlines()
        if not lines:
            raise MatrixMarketError("empty file", None, source)
        field, symmetry = MatrixMarketIO.parse_banner(lines[0], source)

        line_no = 1
        size: Optional[tuple[int, int, int]] = None
        for line_no in range(2, len(lines) + 1):
            stripped = lines[line_no - 1].strip()
            if not stripped or stripped.startswith("%"):
                continue
            tokens = stripped.split()
            try:
                if len(tokens) != 3:
                    raise ValueError
                size = (int(tokens[0]), int(tokens[1]), int(tokens[2]))
            except ValueError:
                raise MatrixMarketError(f"malformed size line '{stripped}'", line_no, source)
            if min(size) < 0:
                raise MatrixMarketError("negative size in size line", line_no, source)
            break
        if size is None:
            raise MatrixMarketError("missing size line", line_no, source)

        n_rows, n_cols, declared = size
        if symmetry != "general" and n_rows != n_cols:
            raise MatrixMarketError(f"{symmetry} matrix must be square, got {n_rows}x{n_cols}", line_no, source)
        expected_tokens = 2 if field == "pattern" else 3
        # at most one entry per remaining line
        capacity = min(declared, len(lines) - line_no)
        rows = np.empty(capacity, dtype=np.int64)
        cols = np.empty(capacity, dtype=np.int64)
        vals = np.ones(capacity, dtype=np.float64)

        count = 0
        for line_no in range(line_no + 1, len(lines) + 1):
            stripped = lines[line_no - 1].strip()
            if not stripped or stripped.startswith("%"):
                continue
            if count == declared:
                raise MatrixMarketError(f"more entries than the {declared} declared", line_no, source)
            tokens = stripped.split()
            if len(tokens) < expected_tokens:
                raise MatrixMarketError(f"expected {expected_tokens} fields, got '{stripped}'", line_no, source)
            try:
                r, c = int(tokens[0]), int(tokens[1])
                if expected_tokens == 3:
                    vals[count] = float(tokens[2])
            except ValueError:
                raise MatrixMarketError(f"malformed entry '{stripped}'", line_no, source)
            if not (1 <= r <= n_rows and 1 <= c <= n_cols):
                raise MatrixMarketError(f"index ({r}, {c}) outside declared bounds {n_rows}x{n_cols}", line_no, source)
            if not np.isfinite(vals[count]):
                raise MatrixMarketError(f"non-finite value '{tokens[2]}'", line_no, source)
            rows[count], cols[count] = r - 1, c - 1
            count += 1
        if count != declared:
            raise MatrixMarketError(f"entry count mismatch: declared {declared}, found {count}", None, source)

        if symmetry != "general":
            off = rows != cols
            mirrored = -vals[off] if symmetry == "skew-symmetric" else vals[off]
            rows, cols, vals = (np.concatenate([rows, cols[off]]),
                                np.concatenate([cols, rows[off]]),
                                np.concatenate([vals, mirrored]))
        return MatrixMarketIO.canonicalize(n_rows, n_cols, rows, cols, vals, source)

    @staticmethod
    def read(path: PathLike) -> TripletMatrix:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Matrix file {path} does not exist")
        return MatrixMarketIO.parse(path.read_bytes(), source=str(path))
