import numpy as np
import pytest

from sepnmf.errors import InvalidInputError, ParseError
from sepnmf.io import (
    MM_HEADER,
    detect_format,
    file_sha256,
    ingest,
    read_instance,
    read_matrix_market,
    write_csv,
    write_instance,
    write_matrix_market,
)
from sepnmf.synth import generate


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_identity(tmp_path):
    p = write(tmp_path, "I.mtx", f"{MM_HEADER}\n% comment\n2 2 2\n1 1 1.0\n2 2 1.0\n")
    X = read_matrix_market(p)
    assert X.nnz == 2 and np.array_equal(X.to_dense(), np.eye(2))


@pytest.mark.parametrize("body,line", [
    ("%%MatrixMarket matrix array real general\n2 2\n", 1),
    (f"{MM_HEADER}\n2 2\n", 2),
    (f"{MM_HEADER}\n2 2 2\n1 1 1.0\n2 2 -0.5\n", 4),
    (f"{MM_HEADER}\n2 2 1\n3 1 1.0\n", 3),
    (f"{MM_HEADER}\n2 2 1\n1 x 1.0\n", 3),
    (f"{MM_HEADER}\n2 2 1\n1 1 nan\n", 3),
])
def test_errors_name_the_line(tmp_path, body, line):
    p = write(tmp_path, "bad.mtx", body)
    with pytest.raises(ParseError) as exc:
        read_matrix_market(p)
    assert exc.value.line == line


def test_negative_entry_message(tmp_path):
    p = write(tmp_path, "neg.mtx", f"{MM_HEADER}\n1 2 2\n1 1 0.5\n1 2 -1\n")
    with pytest.raises(ParseError, match="nonnegative") as exc:
        read_matrix_market(p)
    assert "line 4" in str(exc.value)


def test_round_trip_bit_identical(tmp_path):
    inst = generate(20, 30, 3, 1, 0.95, seed=1)
    p = tmp_path / "X.mtx"
    write_matrix_market(p, inst.X)
    back = read_matrix_market(p)
    assert np.array_equal(back.to_dense(), inst.X.to_dense())
    write_matrix_market(tmp_path / "X2.mtx", back)
    assert file_sha256(p) == file_sha256(tmp_path / "X2.mtx")


def test_csv(tmp_path):
    A = np.array([[0.25, 0.75], [1.0, 0.0]])
    p = tmp_path / "a.csv"
    write_csv(p, A)
    X, rep = ingest(p)
    assert np.array_equal(X.to_dense(), A) and rep.format == "csv"
    h = write(tmp_path, "h.csv", "a,b\n1,2\n3,4\n")
    X, _ = ingest(h, normalize=True)
    assert np.allclose(X.to_dense(), [[1 / 3, 2 / 3], [3 / 7, 4 / 7]])
    with pytest.raises(ParseError) as exc:
        ingest(write(tmp_path, "n.csv", "1,2\n3,-4\n"))
    assert exc.value.line == 2


def test_ingest_report(tmp_path):
    p = write(tmp_path, "z.mtx", f"{MM_HEADER}\n3 2 2\n1 1 2.0\n3 2 1.0\n")
    X, rep = ingest(p, normalize=True)
    assert rep.zero_rows == [1] and rep.nnz == 2 and rep.normalized
    assert X.to_dense()[0].tolist() == [1.0, 0.0]


def test_detect_format():
    assert detect_format("a.mtx") == "matrixmarket"
    assert detect_format("a.CSV") == "csv"
    with pytest.raises(InvalidInputError):
        detect_format("a.bin")


def test_instance_dir(tmp_path):
    inst = generate(15, 20, 3, 1, 0.25, seed=3)
    write_instance(tmp_path / "inst", inst)
    back = read_instance(tmp_path / "inst")
    assert np.array_equal(back.X.to_dense(), inst.X.to_dense())
    assert np.array_equal(back.Y, inst.Y)
    assert np.array_equal(back.topics, inst.topics)
    assert np.array_equal(back.M, inst.M)
    assert back.epsilon == inst.epsilon and back.alpha == inst.alpha and back.d0 == inst.d0
    assert np.array_equal(back.hott, inst.hott)
