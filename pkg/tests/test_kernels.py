import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from restrictml import _kernels
from restrictml._kernels._python import LINEAR, POLY, RBF, SIGMOID, SplitMix64
from restrictml.enzymedb import bundled_catalog
from restrictml.sitescan import build_scanner

NATIVE = "native" in _kernels.BACKENDS
needs_native = pytest.mark.skipif(not NATIVE, reason="compiled backend not built")


def test_splitmix64_reference_stream():
    # published first outputs of splitmix64 seeded with 0
    s = SplitMix64(0)
    assert [s.next() for _ in range(2)] == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4]


def test_shuffle_is_permutation_and_seeded():
    a, b = list(range(50)), list(range(50))
    SplitMix64(7).shuffle(a)
    SplitMix64(7).shuffle(b)
    assert a == b and sorted(a) == list(range(50)) and a != list(range(50))


def test_default_backend():
    assert _kernels.BACKEND in _kernels.BACKENDS
    assert _kernels.get() is _kernels.BACKENDS[_kernels.BACKEND]


def test_pure_python_forced():
    code = "from restrictml import _kernels; print(_kernels.BACKEND)"
    env = dict(os.environ, RESTRICTML_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_native
@settings(max_examples=50)
@given(st.text(alphabet="ACGTN", max_size=400))
def test_scan_backends_identical(seq):
    db = bundled_catalog()
    py = build_scanner(db, "python").raw_scan(seq)
    nat = build_scanner(db, "native").raw_scan(seq)
    assert np.array_equal(py[0], nat[0]) and np.array_equal(py[1], nat[1])


@needs_native
@pytest.mark.parametrize("kind", [LINEAR, POLY, RBF, SIGMOID])
def test_smo_backends_agree(kind):
    rng = np.random.default_rng(kind)
    y = np.where(rng.random(150) < 0.5, 1.0, -1.0)
    X = rng.normal(size=(150, 3)) + y[:, None] * 0.8
    args = (kind, 0.3, 0.5 if kind != SIGMOID else 0.0, 2, 1.0, 1e-3, 1e-8, 10_000, 11)
    a_py, b_py, _, conv_py = _kernels.get("python").smo(X, y, *args)
    a_nat, b_nat, _, conv_nat = _kernels.get("native").smo(X, y, *args)
    assert conv_py and conv_nat
    a_py, a_nat = np.asarray(a_py), np.asarray(a_nat)
    assert abs(np.dot(a_py, y)) < 1e-8 and abs(np.dot(a_nat, y)) < 1e-8
    assert np.max(np.abs(a_py - a_nat)) < 0.05
    assert abs(b_py - b_nat) < 5e-3


@pytest.mark.parametrize("name", sorted(_kernels.BACKENDS))
def test_smo_respects_box(name):
    rng = np.random.default_rng(0)
    y = np.where(rng.random(80) < 0.5, 1.0, -1.0)
    X = rng.normal(size=(80, 2))
    alpha, _, passes, _ = _kernels.get(name).smo(X, y, RBF, 1.0, 0.0, 3, 0.5, 1e-3, 1e-8, 10_000, 0)
    alpha = np.asarray(alpha)
    assert np.all(alpha >= 0) and np.all(alpha <= 0.5)
    assert passes >= 1


def test_benchmark_runs(capsys):
    import importlib.util
    from pathlib import Path

    path = Path(__file__).parents[1] / "benchmarks" / "bench_kernels.py"
    spec = importlib.util.spec_from_file_location("bench_kernels", path)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    mod.main(["--quick"])
    out = capsys.readouterr().out
    assert "scan" in out and "smo polynomial" in out
