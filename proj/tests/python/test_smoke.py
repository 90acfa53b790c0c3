"""Smoke tests for the python bindings."""

import json
import math

import numpy as np
import pytest

import bandlab as bl


def test_version():
    assert bl.__version__


def test_msc_values():
    assert bl.msc(2j) == pytest.approx(1j * (math.sqrt(2) - 1), abs=1e-14)
    assert bl.msc(1j) == pytest.approx(1j * (math.sqrt(5) - 1) / 2, abs=1e-14)
    z = 0.3 + 0.4j
    m = bl.msc(z)
    assert abs(m * m + z * m + 1) < 1e-12


def test_torus_helpers():
    shape = bl.TorusShape(10, 1)
    assert bl.canonical_rep([7], shape) == [-3]
    assert bl.torus_dist([1], [9], shape) == 2
    assert bl.unflatten(bl.flatten([-3], shape), shape) == [-3]


def test_profile_and_sampling():
    p = bl.uniform_profile(16, 1, 3)
    rows = p.row_sums()
    assert np.allclose(rows, 1.0)
    rep = p.check(0.3, 1.0)
    assert rep["band_ok"] and rep["lower_ok"]

    s1 = bl.sample_band(p, "gaussian", 7)
    s2 = bl.sample_band(p, "gaussian", 7)
    assert np.array_equal(s1.H, s2.H)
    assert np.array_equal(s1.H, s1.H.T)


def test_resolvent_and_ward():
    p = bl.uniform_profile(16, 1, 3)
    s = bl.sample_band(p, "gaussian", 3)
    r = bl.resolvent(s, 0.5 + 0.5j)
    scalar, generalized = bl.ward_residual(r, 0)
    assert scalar < 1e-9
    assert generalized < 1e-9
    assert bl.triple_norm(r) > 0

    T = bl.t_matrix(r, p)
    M = np.full(16, bl.msc(0.5 + 0.5j))
    assert bl.t_equation_residual(T, r, M, p) < 1e-8


def test_theta_row_sums():
    p = bl.uniform_profile(32, 1, 4)
    m = bl.msc(0.5 + 0.2j)
    theta = bl.theta_kernel(p, m, "fft")
    target = 1.0 / (1.0 - abs(m) ** 2)
    assert np.allclose(theta.sum(axis=1), target, rtol=1e-9)


def test_walk_kernel():
    step = bl.walk_uniform(3, 1)
    masses = bl.s_power(step, 1, 32)
    assert masses.sum() == pytest.approx(1.0, abs=1e-12)
    assert masses[0] == pytest.approx(1.0 / 7.0, abs=1e-12)
    assert step.covariance()[0, 0] == pytest.approx(4.0, abs=1e-12)


def test_eigendecompose_and_fraction():
    p = bl.uniform_profile(12, 1, 2)
    s = bl.sample_band(p, "gaussian", 5)
    evals, evecs = bl.eigendecompose(s)
    assert np.allclose(evecs.T @ evecs, np.eye(12), atol=1e-10)
    frac = bl.localization_fraction(evals, evecs, 12, 1, 2.0, 0.5, 3)
    assert 0.0 <= frac <= 1.0


def test_experiment_roundtrip(tmp_path):
    cfg = bl.default_config("identities")
    cfg.update(N=16, W=2, trials=2, n_triples=4, out=str(tmp_path / "run"))
    manifest = bl.run_experiment(cfg)
    assert manifest["pass"] is True
    assert (tmp_path / "run" / "records.csv").exists()
    report = bl.summarize([str(tmp_path / "run" / "manifest.json")])
    assert report["pass"] is True
    with open(tmp_path / "run" / "manifest.json") as fh:
        on_disk = json.load(fh)
    assert on_disk["experiment"] == "identities"
