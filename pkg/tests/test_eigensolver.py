import logging

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import sparse

from robin_spectra import profiles as P
from robin_spectra.eigensolver import (ConvergenceError, FactorizationError, dense_oracle,
                                       inertia_below, ldl_negative_pivots, safe_shift,
                                       smallest_eigenpairs)
from robin_spectra.strip import Ends, StripGrid, SymmetricOperatorPencil, assemble, to_banded

KINDS = {
    "constant": P.constant(1.0),
    "gaussian": P.gaussian_bump(1.0, 0.5, 1.0),
    "compact": P.compact_bump(-1.0, -0.8, 1.5),
    "piecewise": P.piecewise_constant(1.0, [-1.0, 1.0], [1.6]),
    "tabulated": P.tabulated(0.5, [-2.0, 0.0, 2.0], [0.5, 1.5, 0.5]),
}
GRIDS = [StripGrid(4.0, 1.0, 40, 8), StripGrid(6.0, 1.0, 60, 12, Ends.DIRICHLET),
         StripGrid(3.0, 0.5, 90, 16)]


def diag_pencil(d, m=None):
    d = np.asarray(d, float)
    m = np.ones_like(d) if m is None else np.asarray(m, float)
    grid = StripGrid(1.0, 1.0, 4, 4)
    return SymmetricOperatorPencil(sparse.diags(d, format="csr"), sparse.diags(m, format="csr"),
                                   grid, alpha_sup=0.0, bandwidth=1)


def test_diagonal_pencil():
    pen = diag_pencil([5.0, 1.0, 2.0, 7.0, 3.0, 9.0, 4.0, 8.0])
    res = smallest_eigenpairs(pen, 2)
    assert_allclose(res.values, [1.0, 2.0], atol=1e-12)
    assert np.all(res.residuals < 1e-10)


def test_scaling_the_mass_scales_the_values():
    d = np.arange(1.0, 13.0)
    a = smallest_eigenpairs(diag_pencil(d), 3).values
    b = smallest_eigenpairs(diag_pencil(d, np.full(12, 2.0)), 3).values
    assert_allclose(b, a / 2.0, rtol=1e-12)


@pytest.mark.parametrize("kind", list(KINDS))
@pytest.mark.parametrize("grid", GRIDS, ids=["neumann", "dirichlet", "thin"])
def test_lanczos_matches_dense_oracle(kind, grid):
    pen = assemble(grid, KINDS[kind])
    assert pen.size <= 2000
    res = smallest_eigenpairs(pen, 6)
    assert_allclose(res.values, dense_oracle(pen)[:6], rtol=0, atol=1e-10)


@pytest.mark.parametrize("kind", list(KINDS))
def test_inertia_counts_match_eigenvalues(kind):
    pen = assemble(GRIDS[0], KINDS[kind])
    vals = dense_oracle(pen)
    # probes halfway between neighbouring eigenvalues, away from any root
    probes = 0.5 * (vals[[0, 2, 5, 9, 20]] + vals[[1, 3, 6, 10, 21]])
    counts = [inertia_below(pen, mu) for mu in probes]
    assert counts == [int(np.sum(vals < mu)) for mu in probes]
    assert counts == sorted(counts)


def test_inertia_below_shift_is_zero():
    pen = assemble(GRIDS[0], KINDS["gaussian"])
    assert inertia_below(pen, safe_shift(pen)) == 0


def test_ldl_matches_dense_inertia_on_random_band():
    rng = np.random.default_rng(7)
    n, b = 40, 3
    A = sparse.diags([rng.standard_normal(n - k) for k in range(b + 1)], list(range(b + 1)))
    A = (A + A.T).tocsr()
    ab = to_banded(A, b)
    assert ldl_negative_pivots(ab) == int(np.sum(np.linalg.eigvalsh(A.toarray()) < 0))


@pytest.mark.parametrize("kind", ["gaussian", "piecewise"])
def test_vectors_are_m_orthonormal(kind):
    pen = assemble(GRIDS[1], KINDS[kind])
    res = smallest_eigenpairs(pen, 5)
    G = res.vectors.T @ (pen.M @ res.vectors)
    assert_allclose(G, np.eye(5), atol=1e-10)


def test_deterministic_for_fixed_seed():
    pen = assemble(GRIDS[0], KINDS["gaussian"])
    a = smallest_eigenpairs(pen, 3, seed=11)
    b = smallest_eigenpairs(pen, 3, seed=11)
    assert np.array_equal(a.values, b.values)


def test_zero_coupling_long_strip():
    pen = assemble(StripGrid(20.0, 1.0, 200, 6), P.constant(0.0))
    vals = smallest_eigenpairs(pen, 2).values
    assert abs(vals[0]) < 1e-10
    assert vals[1] == pytest.approx((np.pi / 40.0) ** 2, rel=1e-3)


def test_shift_lies_below_spectrum():
    pen = assemble(GRIDS[0], KINDS["piecewise"])
    assert safe_shift(pen) == -1.6**2 - 1.0
    assert safe_shift(pen) < dense_oracle(pen)[0]


def test_bad_arguments():
    pen = diag_pencil(np.arange(1.0, 9.0))
    with pytest.raises(ValueError):
        smallest_eigenpairs(pen, 3)
    with pytest.raises(ValueError):
        smallest_eigenpairs(pen, 0)
    with pytest.raises(ValueError):
        dense_oracle(assemble(GRIDS[0], KINDS["constant"]), max_dim=10)


def test_indefinite_shifted_matrix_is_reported():
    # sup norm understated, so K - shift*M is not positive definite
    pen = diag_pencil([-5.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0])
    with pytest.raises(FactorizationError):
        smallest_eigenpairs(pen, 1)


def test_convergence_failure_carries_partial_results():
    pen = assemble(GRIDS[0], KINDS["gaussian"])
    with pytest.raises(ConvergenceError) as info:
        smallest_eigenpairs(pen, 4, tol=1e-10, max_iter=6, check_every=2)
    assert len(info.value.values) == 4


def test_singular_level_is_nudged(caplog):
    pen = diag_pencil([0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0])
    with caplog.at_level(logging.WARNING):
        assert inertia_below(pen, 0.0) == 0
    assert "retrying" in caplog.text
