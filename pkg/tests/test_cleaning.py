import numpy as np
import pytest

from sepnmf.cleaning import CleanConfig, fit_f, fit_f_exact, fit_f_sgd, fit_row, row_errors
from sepnmf.errors import InvalidInputError
from sepnmf.geometry import sample_simplex
from sepnmf.synth import generate


def test_identity_stacking():
    rng = np.random.default_rng(0)
    W = np.stack([sample_simplex(10, rng) for _ in range(4)])
    assert np.allclose(fit_f_exact(W, W), np.eye(4), atol=1e-9)


def test_noiseless_recovers_mixtures():
    inst = generate(20, 40, 3, 1, 0.0, seed=2)
    hott = np.array([g[0] for g in inst.groups])
    W = inst.X.rows(hott)
    F = fit_f_exact(inst.X, W)
    assert np.abs(F[inst.mixture_rows] - inst.M).max() <= 1e-6
    for t, g in enumerate(inst.groups):
        assert np.allclose(F[g], np.eye(3)[t], atol=1e-9)


@pytest.mark.parametrize("form", ["primal", "dual"])
def test_beats_random_candidates(form):
    rng = np.random.default_rng(3)
    inst = generate(8, 25, 3, 0, 4.0, seed=4)
    X = inst.X.to_dense()
    W = X[inst.hott]
    F = fit_f_exact(X, W, form=form)
    assert F.min() >= 0
    err = row_errors(X, F, W)
    for i in range(8):
        Z = np.stack([sample_simplex(3, rng) for _ in range(1000)])
        Z *= rng.uniform(0, 2, (1000, 1))
        cand = np.abs(X[i] - Z @ W).sum(axis=1)
        assert err[i] <= cand.min() + 1e-7


def test_primal_and_dual_forms_agree():
    rng = np.random.default_rng(5)
    W = rng.uniform(size=(4, 15))
    x = rng.uniform(size=15)
    a, za = fit_row(x, W, form="primal")
    b, zb = fit_row(x, W, form="dual")
    ea = np.abs(x - za @ W).sum()
    eb = np.abs(x - zb @ W).sum()
    assert abs(ea - eb) <= 1e-9


def test_row_separability():
    inst = generate(12, 20, 3, 0, 1.0, seed=6)
    X = inst.X.to_dense()
    W = X[inst.hott]
    pi = np.random.default_rng(0).permutation(12)
    F = fit_f_exact(X, W)
    assert np.allclose(fit_f_exact(X[pi], W), F[pi], atol=1e-9)


def test_sgd_nonnegative_and_close():
    inst = generate(20, 40, 3, 0, 0.0, seed=7)
    X = inst.X
    W = X.rows(inst.hott)
    exact = row_errors(X, fit_f_exact(X, W), W)
    F = fit_f_sgd(X, W, CleanConfig("sgd", epochs=400, step=0.02))
    assert F.min() >= 0
    assert np.all(row_errors(X, F, W) <= exact + 1e-2)


def test_sgd_two_epochs_default():
    cfg = CleanConfig("sgd")
    assert cfg.epochs == 2
    with pytest.raises(InvalidInputError):
        CleanConfig("sgd", epochs=0)
    with pytest.raises(InvalidInputError):
        CleanConfig("nnls")


def test_dispatch():
    rng = np.random.default_rng(8)
    W = rng.uniform(size=(2, 6))
    X = rng.uniform(size=(3, 6))
    assert np.array_equal(fit_f(X, W), fit_f_exact(X, W))
    assert np.array_equal(fit_f(X, W, CleanConfig("sgd", seed=1)),
                          fit_f_sgd(X, W, CleanConfig("sgd", seed=1)))
