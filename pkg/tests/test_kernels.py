"""Numba kernels agree with the pure-numpy fallback."""

import subprocess
import sys

import numpy as np

from polymixed import _kernels as K


def test_monomial_eval_paths_agree():
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1, 1, size=(40, 3))
    exps = np.array([[0, 0, 0], [1, 0, 0], [2, 1, 0], [1, 1, 3]], dtype=np.int64)
    a = K.monomial_eval_numpy(pts, exps)
    if K.HAS_NUMBA:
        b = K._monomial_eval_nb(pts, exps)
        assert np.abs(a - b).max() < 1e-14


def test_weighted_gram_paths_agree():
    rng = np.random.default_rng(1)
    vals = rng.standard_normal((30, 6, 2))
    w = rng.uniform(0.1, 1.0, size=30)
    a = K.weighted_gram_numpy(vals, w)
    if K.HAS_NUMBA:
        b = K._weighted_gram_nb(vals, w)
        assert np.abs(a - b).max() < 1e-12


def test_pure_numpy_env_flag():
    # a subprocess with POLYMIXED_PURE_NUMPY=1 must select the numpy path
    # and produce the same study table
    code = (
        "from polymixed import _kernels as K; print(K.USE_NUMBA)"
    )
    out = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True,
        text=True,
        env={"POLYMIXED_PURE_NUMPY": "1", "PATH": "/usr/bin:/bin"},
    )
    assert out.stdout.strip() == "False"


def test_results_identical_across_backends():
    code = (
        "from polymixed.cli import main;"
        "main(['--grid','quad','--k','0','--levels','2..3',"
        "'--case','trig2d','--format','csv'])"
    )
    outs = []
    for env in ({}, {"POLYMIXED_PURE_NUMPY": "1"}):
        env = {**env, "PATH": "/usr/bin:/bin"}
        r = subprocess.run(
            [sys.executable, "-c", code], capture_output=True, text=True, env=env
        )
        assert r.returncode == 0, r.stderr
        outs.append(r.stdout)
    assert outs[0] == outs[1]
