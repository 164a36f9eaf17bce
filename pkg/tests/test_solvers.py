import numpy as np
import pytest
import scipy.sparse as sp

from rivet.errors import NonConvergenceError, RankOneSingularityError, SolverError
from rivet.fem2d import sherman_morrison_solve, solve_sparse_spd
from rivet.fem2d.solvers import SPDFactor, newton


def random_spd(rng, n, density=0.05):
    A = sp.random(n, n, density=density, random_state=np.random.RandomState(int(rng.integers(1 << 30))))
    return (A @ A.T + sp.identity(n) * n * density).tocsr()


def test_identity_and_diagonal(rng):
    b = rng.normal(size=7)
    np.testing.assert_array_equal(solve_sparse_spd(sp.identity(7, format="csr"), b), b)
    d = rng.uniform(1, 3, 7)
    np.testing.assert_allclose(solve_sparse_spd(sp.diags(d).tocsr(), b), b / d, rtol=1e-14)


def test_random_spd_against_dense(rng):
    K = random_spd(rng, 100)
    b = rng.normal(size=100)
    x = solve_sparse_spd(K, b)
    ref = np.linalg.solve(K.toarray(), b)
    assert np.linalg.norm(x - ref) / np.linalg.norm(ref) < 1e-10
    assert np.linalg.norm(K @ x - b) <= 1e-10 * np.linalg.norm(b)


def test_indefinite_matrix_is_rejected():
    K = sp.diags([1.0, -2.0, 3.0]).tocsr()
    with pytest.raises(SolverError, match="positive definite"):
        solve_sparse_spd(K, np.ones(3))


def test_empty_system():
    assert SPDFactor(sp.csr_matrix((0, 0))).solve(np.zeros(0)).size == 0


@pytest.mark.parametrize("n", [50, 500])
def test_sherman_morrison_against_dense(n, rng):
    K = random_spd(rng, n, density=10.0 / n)
    fz = rng.normal(size=n)
    rz = rng.normal(size=n)
    for b in (0.37, -0.2 / (fz @ fz)):
        x = sherman_morrison_solve(K, b, fz, rz)
        ref = np.linalg.solve(K.toarray() + b * np.outer(fz, fz), rz)
        assert np.linalg.norm(x - ref) / np.linalg.norm(ref) < 1e-10


def test_sherman_morrison_degenerate_rank_one(rng):
    K = random_spd(rng, 30, 0.3)
    rz = rng.normal(size=30)
    plain = solve_sparse_spd(K, rz)
    np.testing.assert_allclose(sherman_morrison_solve(K, 0.0, rng.normal(size=30), rz), plain)
    np.testing.assert_allclose(sherman_morrison_solve(K, 5.0, np.zeros(30), rz), plain)


def test_sherman_morrison_singular_denominator():
    K = sp.identity(2, format="csr")
    fz = np.array([1.0, 0.0])
    with pytest.raises(RankOneSingularityError):
        sherman_morrison_solve(K, -1.0, fz, np.ones(2))


def test_newton_counts_solves_and_reports_failure():
    # f(x) = sum(x^4)/4 + |x|^2/2: convex, Newton converges
    merit = lambda x: float(np.sum(x**4) / 4 + x @ x / 2)

    def evaluate(x):
        r = x**3 + x
        return r, lambda: r / (3 * x**2 + 1)
    res = newton(np.array([2.0, -1.0]), evaluate, merit)
    assert np.allclose(res.x, 0.0, atol=1e-8) and res.iters == len(res.history) - 1
    # already converged: still one solve
    assert newton(np.zeros(2), evaluate, merit).iters == 1
    with pytest.raises(NonConvergenceError) as info:
        newton(np.array([2.0, -1.0]), evaluate, merit, max_it=2)
    assert info.value.stage == "newton" and info.value.last_residual > 0
