"""Byte-level checks of the EMB1, manifest, and PGM writers."""

import json
import struct

import numpy as np
import pytest

from encoder_bridge import write_canonical_json, write_emb1, write_pgm


def test_emb1_layout_matches_hand_packed_bytes(tmp_path):
    rows = np.array([[1.5, -2.0, 0.25], [0.0, 3.0, -0.5]], dtype=np.float32)
    path = tmp_path / "cell.emb"
    write_emb1(rows, path)
    data = path.read_bytes()
    assert data[:4] == b"EMB1"
    assert struct.unpack("<II", data[4:12]) == (3, 2)
    assert data[12:] == rows.astype("<f4").tobytes(order="C")


def test_emb1_rejects_bad_shapes_and_nonfinite(tmp_path):
    with pytest.raises(ValueError):
        write_emb1(np.empty((0, 4), dtype=np.float32), tmp_path / "x.emb")
    with pytest.raises(ValueError):
        write_emb1(np.array([[np.nan, 1.0]]), tmp_path / "x.emb")


def test_canonical_json_bytes_are_stable(tmp_path):
    doc = {"b": 1, "a": [2, 3], "c": {"z": 0, "y": 1}}
    write_canonical_json(doc, tmp_path / "a.json")
    write_canonical_json(dict(reversed(doc.items())), tmp_path / "b.json")
    a = (tmp_path / "a.json").read_bytes()
    assert a == (tmp_path / "b.json").read_bytes()
    assert a.endswith(b"\n")
    assert json.loads(a) == doc


def test_pgm_writer_exact_bytes(tmp_path):
    img = np.arange(6, dtype=np.uint8).reshape(2, 3)
    write_pgm(img, tmp_path / "i.pgm")
    assert (tmp_path / "i.pgm").read_bytes() == b"P5\n3 2\n255\n" + img.tobytes()


def test_pgm_writer_rejects_float_input(tmp_path):
    with pytest.raises(ValueError):
        write_pgm(np.zeros((2, 2)), tmp_path / "i.pgm")
