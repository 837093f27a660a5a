import numpy as np
import pytest
import scipy.sparse as sp

from oracles import tableau_simplex
from sepnmf.errors import InvalidInputError, ParseError
from sepnmf.lp import (
    EQ,
    LE,
    LinearProgram,
    LPBuilder,
    dual_objective,
    read_mps,
    revised_simplex,
    solve,
    write_mps,
)


def lp_from(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, upper=None):
    blocks, rhs, senses = [], [], []
    if A_ub is not None:
        blocks.append(np.atleast_2d(A_ub))
        rhs.extend(np.atleast_1d(b_ub))
        senses += [LE] * len(b_ub)
    if A_eq is not None:
        blocks.append(np.atleast_2d(A_eq))
        rhs.extend(np.atleast_1d(b_eq))
        senses += [EQ] * len(b_eq)
    return LinearProgram(c, np.vstack(blocks), rhs, senses, upper)


def test_trivial_lower_bound():
    lp = LinearProgram([1.0], [[1.0]], [3.0], [">="])
    sol = solve(lp, method="simplex")
    assert sol.status == "optimal"
    assert abs(sol.x[0] - 3.0) <= 1e-9


def test_trivial_vertex():
    lp = lp_from([-1.0, -1.0], [[1.0, 1.0]], [1.0])
    sol = solve(lp, method="simplex")
    assert sol.ok and abs(sol.objective + 1.0) <= 1e-12


def random_feasible_lp(rng, nv=20, m=30, n_eq=5):
    """Random LP with a known feasible point and bounded variables."""
    x0 = rng.uniform(0, 1, nv)
    A_ub = rng.uniform(-1, 1, (m - n_eq, nv))
    b_ub = A_ub @ x0 + rng.uniform(0, 1, m - n_eq)
    A_eq = rng.uniform(-1, 1, (n_eq, nv))
    b_eq = A_eq @ x0
    c = rng.uniform(-1, 1, nv)
    return c, A_ub, b_ub, A_eq, b_eq


def test_matches_tableau_oracle_on_random_lps():
    rng = np.random.default_rng(7)
    for _ in range(40):
        c, A_ub, b_ub, A_eq, b_eq = random_feasible_lp(rng)
        upper = np.full(c.size, 2.0)
        # the oracle has no bound support; give it the bounds as rows
        A_o = np.vstack([A_ub, np.eye(c.size)])
        b_o = np.concatenate([b_ub, upper])
        status, x_ref, obj_ref = tableau_simplex(c, A_o, b_o, A_eq, b_eq)
        assert status == "optimal"
        lp = lp_from(c, A_ub, b_ub, A_eq, b_eq, upper)
        sol = solve(lp, method="simplex")
        assert sol.ok
        assert abs(sol.objective - obj_ref) <= 1e-6
        assert lp.is_feasible(sol.x, 1e-7)
        assert sol.x.min() >= -1e-9


def test_matches_highs():
    rng = np.random.default_rng(8)
    for _ in range(20):
        c, A_ub, b_ub, A_eq, b_eq = random_feasible_lp(rng)
        lp = lp_from(c, A_ub, b_ub, A_eq, b_eq, np.full(c.size, 1.5))
        a, b = solve(lp, method="simplex"), solve(lp, method="highs")
        assert a.ok and b.ok
        assert abs(a.objective - b.objective) <= 1e-7


def test_objective_rebuilt_from_basis_duals():
    rng = np.random.default_rng(9)
    for _ in range(20):
        c, A_ub, b_ub, A_eq, b_eq = random_feasible_lp(rng)
        lp = lp_from(c, A_ub, b_ub, A_eq, b_eq, np.full(c.size, 2.0))
        sol = revised_simplex(lp)
        assert sol.ok
        assert abs(dual_objective(lp, sol) - sol.objective) <= 1e-7


def test_determinism():
    rng = np.random.default_rng(10)
    c, A_ub, b_ub, A_eq, b_eq = random_feasible_lp(rng)
    lp = lp_from(c, A_ub, b_ub, A_eq, b_eq, np.full(c.size, 2.0))
    a, b = revised_simplex(lp), revised_simplex(lp)
    assert a.iterations == b.iterations
    assert np.array_equal(a.x, b.x) and np.array_equal(a.basis, b.basis)


def test_infeasible_and_unbounded_reported():
    infeasible = lp_from([1.0], [[1.0]], [-1.0])
    assert solve(infeasible, method="simplex").status == "infeasible"
    assert solve(infeasible, method="highs").status == "infeasible"
    unbounded = lp_from([-1.0, 0.0], [[-1.0, 1.0]], [1.0])
    assert solve(unbounded, method="simplex").status == "unbounded"
    assert solve(unbounded, method="highs").status == "unbounded"


def test_iteration_limit_reported():
    rng = np.random.default_rng(11)
    c, A_ub, b_ub, A_eq, b_eq = random_feasible_lp(rng)
    sol = revised_simplex(lp_from(c, A_ub, b_ub, A_eq, b_eq), max_iters=2)
    assert sol.status == "iteration-limit"


def test_degenerate_lp_terminates():
    # many constraints through the same vertex force degenerate pivots
    rng = np.random.default_rng(12)
    A = rng.uniform(0, 1, (60, 8))
    lp = lp_from(-np.ones(8), A, np.zeros(60))
    sol = revised_simplex(lp)
    assert sol.ok and abs(sol.objective) <= 1e-12


def test_redundant_equalities():
    A_eq = np.array([[1.0, 1.0, 0.0], [2.0, 2.0, 0.0], [0.0, 1.0, 1.0]])
    lp = lp_from([1.0, 2.0, 3.0], A_eq=A_eq, b_eq=[1.0, 2.0, 1.0])
    sol = revised_simplex(lp)
    assert sol.ok
    assert lp.is_feasible(sol.x)
    assert abs(sol.objective - solve(lp, method="highs").objective) <= 1e-9


def test_model_validation():
    with pytest.raises(InvalidInputError):
        LinearProgram([1.0, 2.0], [[1.0]], [1.0], [LE])
    with pytest.raises(InvalidInputError):
        LinearProgram([1.0], [[1.0]], [np.inf], [LE])
    with pytest.raises(InvalidInputError):
        LinearProgram([1.0], [[1.0]], [1.0], ["<"])


def test_builder_batches():
    b = LPBuilder(3)
    b.add_row([0, 1], [1.0, 1.0], LE, 4.0)
    b.add_rows([0, 0, 1], [0, 2, 1], [1.0, 1.0, 1.0], EQ, [2.0, 1.0])
    lp = b.build([1.0, 1.0, 1.0])
    assert lp.A.toarray().tolist() == [[1, 1, 0], [1, 0, 1], [0, 1, 0]]
    assert lp.senses.tolist() == [LE, EQ, EQ]


def test_mps_round_trip(tmp_path):
    rng = np.random.default_rng(13)
    c, A_ub, b_ub, A_eq, b_eq = random_feasible_lp(rng, nv=6, m=8, n_eq=2)
    lp = lp_from(c, A_ub, b_ub, A_eq, b_eq, np.array([1, 2, np.inf, 1, 1, 3.0]))
    path = tmp_path / "p.mps"
    write_mps(lp, path)
    back = read_mps(path)
    assert np.array_equal(back.c, lp.c)
    assert np.array_equal(back.b, lp.b)
    assert np.array_equal(back.upper, lp.upper)
    assert (back.A != lp.A).nnz == 0
    assert solve(back).objective == solve(lp).objective
    text = path.read_text().splitlines()
    assert text[0].startswith("NAME") and text[-1] == "ENDATA"


def test_mps_parse_error_names_line(tmp_path):
    path = tmp_path / "bad.mps"
    path.write_text("NAME X\nROWS\n N OBJ\n Q R1\nENDATA\n")
    with pytest.raises(ParseError) as exc:
        read_mps(path)
    assert exc.value.line == 4


def test_sparse_input_accepted():
    A = sp.csr_matrix(np.array([[1.0, 2.0], [3.0, 1.0]]))
    lp = LinearProgram([-1.0, -1.0], A, [4.0, 6.0], [LE, LE])
    sol = solve(lp)
    assert sol.ok and abs(sol.objective + 2.8) <= 1e-9
