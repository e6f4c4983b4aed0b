import numpy as np
import pytest

from cbSpMV.generators.matrixMarket import MatrixMarketGenerator
from cbSpMV.models.errors import MatrixMarketError
from cbSpMV.models.matrix import TripletMatrix
from cbSpMV.utils.matrix_market import MatrixMarketIO
from matrices import random_matrix


def mtx(body: str, field: str = "real", symmetry: str = "general") -> str:
    return f"%%MatrixMarket matrix coordinate {field} {symmetry}\n{body}"


def test_symmetric_file_is_expanded():
    m = MatrixMarketIO.parse(mtx("2 2 2\n1 1 2.0\n2 1 5.0\n", symmetry="symmetric"))
    assert m.entries == [(0, 0, 2.0), (0, 1, 5.0), (1, 0, 5.0)]


def test_skew_symmetric_mirror_is_negated():
    m = MatrixMarketIO.parse(mtx("3 3 1\n2 1 4.0\n", symmetry="skew-symmetric"))
    assert m.entries == [(0, 1, -4.0), (1, 0, 4.0)]


def test_pattern_entries_get_unit_value():
    m = MatrixMarketIO.parse(mtx("4 5 1\n3 4\n", field="pattern"))
    assert m.entries == [(2, 3, 1.0)]


def test_duplicates_are_summed():
    m = MatrixMarketIO.parse(mtx("2 2 2\n1 1 1.0\n1 1 2.0\n"))
    assert m.entries == [(0, 0, 3.0)]


def test_explicit_zeros_are_dropped_and_integers_accepted():
    m = MatrixMarketIO.parse(mtx("3 3 3\n1 1 0\n2 2 7\n3 1 -1\n", field="integer"))
    assert m.entries == [(1, 1, 7.0), (2, 0, -1.0)]
    assert m.is_canonical()


def test_comments_and_blank_lines_are_skipped():
    m = MatrixMarketIO.parse(mtx("% a comment\n\n2 3 1\n% another\n2 3 1.5\n"))
    assert (m.n_rows, m.n_cols) == (2, 3)
    assert m.entries == [(1, 2, 1.5)]


@pytest.mark.parametrize("text, line", [
    ("%%MatrixMarket matrix array real general\n1 1\n1.0\n", 1),
    ("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1.0 0.0\n", 1),
    ("%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 1.0\n", 1),
    (mtx("2 2\n"), 2),
    (mtx("2 2 1\n3 1 1.0\n"), 3),
    (mtx("2 2 1\n1 0 1.0\n"), 3),
    (mtx("2 2 1\n1 1 nan\n"), 3),
    (mtx("2 2 1\n1 1 inf\n"), 3),
    (mtx("2 2 1\n1 1 abc\n"), 3),
    (mtx("2 2 1\n1 1 1.0\n2 2 1.0\n"), 4),
    (mtx("2 3 1\n1 1 1.0\n", symmetry="symmetric"), 2),
])
def test_malformed_input_reports_the_line(text, line):
    with pytest.raises(MatrixMarketError) as info:
        MatrixMarketIO.parse(text, source="bad.mtx")
    assert info.value.line == line
    assert str(info.value).startswith(f"bad.mtx:{line}:")


def test_entry_count_mismatch():
    with pytest.raises(MatrixMarketError, match="declared 3, found 1"):
        MatrixMarketIO.parse(mtx("2 2 3\n1 1 1.0\n"))


def test_duplicates_overflowing_to_infinity_are_rejected():
    with pytest.raises(MatrixMarketError, match="non-finite value after summing duplicates") as info:
        MatrixMarketIO.parse(mtx("1 1 2\n1 1 1e308\n1 1 1e308\n"), source="big.mtx")
    assert info.value.source == "big.mtx"


def test_huge_declared_count_is_a_count_mismatch():
    with pytest.raises(MatrixMarketError, match="declared 100000000000000, found 1"):
        MatrixMarketIO.parse(mtx("2 2 100000000000000\n1 1 1.0\n"))


def test_write_empty_matrix():
    text = MatrixMarketGenerator.generate(TripletMatrix.empty(4, 4)).decode()
    lines = [line for line in text.splitlines() if not line.startswith("%")]
    assert lines == ["4 4 0"]


def test_write_single_entry():
    m = TripletMatrix(n_rows=1, n_cols=1, rows=[0], cols=[0], vals=[-2.5])
    assert MatrixMarketGenerator.generate(m).decode().splitlines()[-1] == "1 1 -2.5"


def test_parse_write_roundtrip_is_bit_exact(rng):
    m = random_matrix(rng, 70, 45, 0.1)
    m = TripletMatrix(n_rows=m.n_rows, n_cols=m.n_cols, rows=m.rows, cols=m.cols, vals=m.vals * np.pi * 1e-7)
    assert MatrixMarketIO.parse(MatrixMarketGenerator.generate(m)) == m


def test_file_roundtrip(tmp_path, rng):
    m = random_matrix(rng, 33, 33, 0.2)
    path = tmp_path / "m.mtx"
    MatrixMarketGenerator.write(m, path)
    assert MatrixMarketIO.read(path) == m


def test_missing_file():
    with pytest.raises(FileNotFoundError):
        MatrixMarketIO.read("does/not/exist.mtx")


def test_symmetric_expansion_doubles_off_diagonal(rng):
    lower = random_matrix(rng, 40, 40, 0.2)
    keep = lower.rows >= lower.cols
    body = "".join(f"{r + 1} {c + 1} {v!r}\n" for r, c, v in
                   zip(lower.rows[keep].tolist(), lower.cols[keep].tolist(), lower.vals[keep].tolist()))
    m = MatrixMarketIO.parse(mtx(f"40 40 {int(keep.sum())}\n{body}", symmetry="symmetric"))
    off_diagonal = int(np.count_nonzero(lower.rows[keep] != lower.cols[keep]))
    assert m.nnz == int(keep.sum()) + off_diagonal
    assert np.array_equal(m.to_dense(), m.to_dense().T)


def test_canonicalize_is_idempotent(rng):
    m = random_matrix(rng, 50, 20, 0.3)
    assert MatrixMarketIO.canonicalize(m.n_rows, m.n_cols, m.rows, m.cols, m.vals) == m
