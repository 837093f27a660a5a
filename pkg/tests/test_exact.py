import numpy as np
import pytest

from sepnmf.errors import DegenerateSolutionError, InvalidInputError, LPFailure, ScaleLimitError
from sepnmf.exact import (
    PhiLpConfig,
    build_phi_lp,
    extract_hott,
    factor_exact,
    localizing_from_solution,
    phi_lp_size,
    solve_phi,
)
from sepnmf.lp import EQ, LE
from sepnmf.matrix import SparseMatrix, inf_one_norm
from sepnmf.synth import generate


def test_counting_f2():
    lp = build_phi_lp(SparseMatrix.from_dense(np.eye(2)), PhiLpConfig(0.0, 2))
    assert lp.n_vars == 4
    assert phi_lp_size(2, 2, 0.0) == (4, 7)
    # 4 equalities CX = X, 2 dominance rows, 1 trace row; diag bounds are variable bounds
    assert lp.n_rows == 7
    assert (lp.senses == EQ).sum() == 5 and (lp.senses == LE).sum() == 2
    assert np.isfinite(lp.upper).sum() == 2


def test_counting_noisy():
    f, n = 3, 4
    lp = build_phi_lp(SparseMatrix.from_dense(np.full((f, n), 0.25)), PhiLpConfig(0.1, 2))
    assert (lp.n_vars, lp.n_rows) == phi_lp_size(f, n, 0.1) == (f * f + f * n, 2 * f * n + f + f * (f - 1) + 1)


def test_identity_forces_identity():
    X = SparseMatrix.from_dense(np.eye(2))
    for cost in ([0.1, 0.2], [0.9, -0.4]):
        cfg = PhiLpConfig(0.0, 2, cost=cost)
        lp, sol = solve_phi(X, cfg)
        assert sol.ok
        assert np.allclose(localizing_from_solution(sol.x, 2).values, np.eye(2), atol=1e-9)


def test_extract_examples():
    assert extract_hott(np.array([1.0, 0.0, 1.0, 0.0]), PhiLpConfig(0.0, 2)).tolist() == [0, 2]
    cfg = PhiLpConfig(0.1, 2, cost=[0.1, 0.2, 0.3, 0.4])
    assert extract_hott(np.array([0.96, 0.2, 0.95, 0.1]), cfg).tolist() == [0, 2]
    # ties broken by the smaller cost
    cfg = PhiLpConfig(0.1, 1, cost=[0.5, 0.2])
    assert extract_hott(np.array([0.7, 0.7]), cfg).tolist() == [1]
    with pytest.raises(DegenerateSolutionError):
        extract_hott(np.array([1.0, 1.0, 0.5]), PhiLpConfig(0.0, 1))


def test_config_validation():
    with pytest.raises(InvalidInputError):
        PhiLpConfig(-1.0, 2)
    with pytest.raises(InvalidInputError):
        PhiLpConfig(0.0, 0)
    with pytest.raises(InvalidInputError):
        PhiLpConfig(0.0, 2, cost=[0.1, 0.1])
    assert PhiLpConfig(0.0, 2).mode == "exact-ones"
    assert PhiLpConfig(0.5, 2).mode == "top-r"


def test_scale_ceiling():
    X = SparseMatrix.from_dense(np.full((80, 400), 1 / 400))
    with pytest.raises(ScaleLimitError, match="hottopixx"):
        build_phi_lp(X, PhiLpConfig(0.1, 3))


def test_random_instance_exact_ones():
    inst = generate(12, 40, 3, 0, 0.0, seed=3)
    cfg = PhiLpConfig(0.0, 3)
    lp, sol = solve_phi(inst.X, cfg)
    C = localizing_from_solution(sol.x, 12)
    diag = C.diag()
    assert np.sum(np.abs(diag - 1) <= 1e-6) == 3
    assert set(np.flatnonzero(np.abs(diag - 1) <= 1e-6)) == set(inst.hott)
    # feasibility of C in the noiseless LP
    X = inst.X.to_dense()
    assert np.abs(C.values @ X - X).max() <= 1e-7
    assert abs(C.trace() - 3) <= 1e-7
    assert np.all(C.values <= diag[None, :] + 1e-9)


@pytest.mark.parametrize("d", [0, 1, 2])
def test_noiseless_exact_recovery(d):
    inst = generate(15, 30, 3, d, 0.0, seed=10 + d)
    res = factor_exact(inst.X, PhiLpConfig(0.0, 3))
    assert inst.exact_recovery(res.hott)
    assert inf_one_norm(inst.Y - res.F @ res.W) <= 1e-7
    assert res.algorithm == "lp" and res.status == "ok"


def test_row_permutation_equivariance():
    inst = generate(12, 30, 3, 1, 0.0, seed=21)
    X = inst.X.to_dense()
    cost = np.random.default_rng(0).permutation(12) / 12 + 0.05
    base = factor_exact(X, PhiLpConfig(0.0, 3, cost=cost)).hott
    pi = np.random.default_rng(1).permutation(12)
    moved = factor_exact(X[pi], PhiLpConfig(0.0, 3, cost=cost[pi])).hott
    assert sorted(pi[moved].tolist()) == sorted(base.tolist())


def test_noisy_recovery_and_bound():
    inst = generate(12, 30, 3, 0, 0.05, seed=5)
    eps = inst.epsilon
    res = factor_exact(inst.X, PhiLpConfig(2 * eps, 3))
    assert inst.exact_recovery(res.hott)
    assert res.report.inf_one_error <= 2 * eps + 1e-6


def test_tiny_tau_is_infeasible():
    inst = generate(12, 30, 3, 0, 0.25, seed=6)
    with pytest.raises(LPFailure) as exc:
        factor_exact(inst.X, PhiLpConfig(inst.epsilon * 1e-3, 3))
    assert exc.value.status == "infeasible"
