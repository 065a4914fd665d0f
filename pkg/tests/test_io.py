import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from godeckit.exceptions import FormatError
from godeckit.io import MAGIC, load_frames, load_matrix, read_pgm, save_matrix, write_pgm

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)
shapes = st.tuples(st.integers(1, 6), st.integers(1, 6))


def test_csv_examples(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("1,2\n3,4")
    assert np.array_equal(load_matrix(p), [[1, 2], [3, 4]])
    p.write_text("a,b\n1,2\n3,4\n")
    assert np.array_equal(load_matrix(p), [[1, 2], [3, 4]])


@pytest.mark.parametrize("text,where", [
    ("1,2\n3\n", "line 2"),
    ("1,2\n3,x\n", "line 2"),
    ("1,nan\n", "line 1"),
    ("", "no numeric rows"),
])
def test_csv_errors(tmp_path, text, where):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(FormatError, match=where):
        load_matrix(p)


def test_f64le_layout_and_round_trip(tmp_path):
    a = np.random.default_rng(0).standard_normal((100, 80))
    p = tmp_path / "a.f64"
    save_matrix(p, a)
    raw = p.read_bytes()
    assert raw[:4] == MAGIC
    assert int.from_bytes(raw[4:12], "little") == 100
    assert int.from_bytes(raw[12:20], "little") == 80
    assert len(raw) == 20 + 8 * 8000
    assert np.array_equal(load_matrix(p), a)
    assert not list(tmp_path.glob("*.tmp"))


def test_f64le_errors(tmp_path):
    p = tmp_path / "bad.f64"
    p.write_bytes(b"GDM")
    with pytest.raises(FormatError, match="byte 0"):
        load_matrix(p)
    p.write_bytes(b"XXXX" + bytes(16))
    with pytest.raises(FormatError, match="magic"):
        load_matrix(p)
    save_matrix(p, np.ones((2, 2)))
    p.write_bytes(p.read_bytes()[:-3])
    with pytest.raises(FormatError, match="byte"):
        load_matrix(p)
    save_matrix(p, np.ones((1, 2)))
    raw = bytearray(p.read_bytes())
    raw[28:36] = np.array([np.inf]).astype("<f8").tobytes()
    p.write_bytes(bytes(raw))
    with pytest.raises(FormatError, match="byte 28"):
        load_matrix(p)


@settings(max_examples=40, deadline=None)
@given(shapes.flatmap(lambda s: arrays(np.float64, s, elements=finite)))
def test_round_trips(tmp_path_factory, a):
    d = tmp_path_factory.mktemp("rt")
    save_matrix(d / "a.f64", a)
    assert np.array_equal(load_matrix(d / "a.f64"), a)
    save_matrix(d / "a.csv", a)
    back = load_matrix(d / "a.csv")
    assert np.all(np.abs(back - a) <= 1e-15 * np.maximum(1.0, np.abs(a)))


def test_pgm_and_frames(tmp_path):
    write_pgm(tmp_path / "f0.pgm", np.full((2, 2), 255))
    write_pgm(tmp_path / "f1.pgm", np.zeros((2, 2)))
    x, shape = load_frames(tmp_path)
    assert np.array_equal(x, [[1, 1, 1, 1], [0, 0, 0, 0]]) and shape == (2, 2)
    xt, _ = load_frames(tmp_path, transpose=True)
    assert np.array_equal(xt, x.T)


def test_frame_pixel_order(tmp_path):
    frame = np.arange(6, dtype=np.uint8).reshape(2, 3)
    write_pgm(tmp_path / "only.pgm", frame)
    x, shape = load_frames(tmp_path)
    assert x.shape == (1, 6) and shape == (2, 3)
    assert np.array_equal(x[0] * 255, [0, 1, 2, 3, 4, 5])


def test_pgm_comments(tmp_path):
    p = tmp_path / "c.pgm"
    p.write_bytes(b"P5\n# made by hand\n2 1\n255\n\x00\xff")
    assert np.array_equal(read_pgm(p), [[0, 255]])


def test_frame_errors(tmp_path):
    with pytest.raises(FormatError, match="no .pgm"):
        load_frames(tmp_path)
    write_pgm(tmp_path / "a.pgm", np.zeros((2, 2)))
    write_pgm(tmp_path / "b.pgm", np.zeros((3, 2)))
    with pytest.raises(FormatError, match="b.pgm"):
        load_frames(tmp_path)
    (tmp_path / "b.pgm").write_bytes(b"P2\n2 2\n255\n0 0 0 0")
    with pytest.raises(FormatError, match="b.pgm"):
        load_frames(tmp_path)
