"""Subprocess runs of the bridge CLI."""

import subprocess
import sys

from conftest import make_tree


def run_cli(*argv, check=True):
    proc = subprocess.run([sys.executable, "-m", "encoder_bridge",
                           *map(str, argv)], capture_output=True, text=True)
    if check and proc.returncode != 0:
        raise AssertionError(f"cli failed ({proc.returncode}): {proc.stderr}")
    return proc


def test_embed_command_writes_manifest(tmp_path):
    root = make_tree(tmp_path / "t", ["a", "b"], ["0"], 2)
    proc = run_cli("embed", "--in", root, "--out", tmp_path / "out",
                   "--batch", 2)
    manifest = tmp_path / "out" / "manifest.json"
    assert manifest.exists()
    assert proc.stdout.strip() == str(manifest)


def test_embed_determinism_across_runs(tmp_path):
    root = make_tree(tmp_path / "t", ["a"], ["0", "1"], 2)
    run_cli("embed", "--in", root, "--out", tmp_path / "o1")
    run_cli("embed", "--in", root, "--out", tmp_path / "o2")
    a = (tmp_path / "o1" / "manifest.json").read_bytes()
    assert a == (tmp_path / "o2" / "manifest.json").read_bytes()


def test_pgm_command(tmp_path):
    root = make_tree(tmp_path / "t", ["a"], ["0"], 2)
    run_cli("pgm", "--in", root, "--out", tmp_path / "pgm", "--side", 8)
    files = list((tmp_path / "pgm").rglob("*.pgm"))
    assert len(files) == 2
    assert all(f.read_bytes().startswith(b"P5\n8 8\n255\n") for f in files)


def test_unknown_encoder_is_validation_error(tmp_path):
    root = make_tree(tmp_path / "t", ["a"], ["0"], 1)
    proc = run_cli("embed", "--in", root, "--out", tmp_path / "out",
                   "--encoder", "nope", check=False)
    assert proc.returncode == 1


def test_missing_input_root_is_io_error(tmp_path):
    proc = run_cli("embed", "--in", tmp_path / "missing",
                   "--out", tmp_path / "out", check=False)
    assert proc.returncode == 2


def test_unknown_flag_is_validation_error(tmp_path):
    root = make_tree(tmp_path / "t", ["a"], ["0"], 1)
    proc = run_cli("embed", "--in", root, "--out", tmp_path / "o",
                   "--frobnicate", check=False)
    assert proc.returncode == 1
