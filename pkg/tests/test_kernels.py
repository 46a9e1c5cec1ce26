import math
import os
import subprocess
import sys

import numpy as np
import pytest

from qshape import _pykernels

ckernels = pytest.importorskip("qshape._ckernels")


@pytest.mark.parametrize("a,b,q", [(1, 1, 0.5), (7, 3, 0.9), (40, 55, math.exp(-1 / 50)), (30, 30, 1.0), (12, 9, 1.7)])
def test_tables_agree(a, b, q):
    logq = math.log(q)
    np.testing.assert_array_equal(ckernels.logz_table(a, b, logq), _pykernels.logz_table(a, b, logq))


@pytest.mark.parametrize("a,b,q", [(3, 4, 0.5), (25, 15, 0.97), (60, 60, math.exp(-1 / 60)), (10, 20, 1.3)])
def test_paths_agree(a, b, q):
    logq = math.log(q)
    table = _pykernels.logz_table(a, b, logq)
    u = np.random.default_rng(a * b).random((200, a + b))
    c_paths = ckernels.sample_paths(table, logq, u)
    p_paths = _pykernels.sample_paths(table, logq, u)
    np.testing.assert_array_equal(c_paths, p_paths)
    assert np.all((c_paths == -1).sum(axis=1) == a)


def test_read_only_inputs():
    table = _pykernels.logz_table(4, 5, math.log(0.8))
    u = np.random.default_rng(0).random((3, 9))
    table.setflags(write=False)
    u.setflags(write=False)
    assert ckernels.sample_paths(table, math.log(0.8), u).shape == (3, 9)


def test_bad_uniform_width():
    table = _pykernels.logz_table(2, 2, 0.0)
    for mod in (ckernels, _pykernels):
        with pytest.raises(ValueError):
            mod.sample_paths(table, 0.0, np.zeros((1, 3)))


def test_pure_python_switch():
    code = "import qshape; print(qshape.BACKEND)"
    env = dict(os.environ, QSHAPE_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    env.pop("QSHAPE_PURE_PYTHON")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "cython"


def test_cli_output_independent_of_backend():
    argv = [sys.executable, "-m", "qshape", "fluctuations", "--n", "25", "--rho", "0.3", "--c", "1.5",
            "--samples", "300", "--seed", "8"]
    outs = []
    for pure in ("1", "0"):
        env = dict(os.environ, QSHAPE_PURE_PYTHON=pure)
        outs.append(subprocess.run(argv, env=env, capture_output=True, check=True).stdout)
    assert outs[0] == outs[1]
