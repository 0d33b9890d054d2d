"""Lowest eigenpairs of a symmetric pencil ``(K, M)``.

The production path is shift-invert Lanczos with full
reorthogonalization. The shift sits one unit below the Galerkin lower
bound ``-sup|alpha|**2``, so ``K - shift*M`` is positive definite and a
banded Cholesky factorization always exists on a correctly assembled
pencil. ``dense_oracle`` and ``inertia_below`` are independent checks.
"""

from dataclasses import dataclass
import logging

import numpy as np
from scipy import linalg

from .strip import to_banded

log = logging.getLogger(__name__)

DENSE_LIMIT = 2000


class FactorizationError(RuntimeError):
    """``K - shift*M`` is not positive definite: the lower bound is violated."""


class ConvergenceError(RuntimeError):
    def __init__(self, msg, values, residuals):
        super().__init__(msg)
        self.values = values
        self.residuals = residuals


@dataclass
class EigenResult:
    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    iterations: int
    shift: float


def safe_shift(pencil):
    return -pencil.alpha_sup**2 - 1.0


def _bandwidth(pencil):
    bw = getattr(pencil, "bandwidth", None)
    if bw is None:
        A = pencil.K.tocoo()
        bw = int(np.max(np.abs(A.row - A.col), initial=0))
    return bw


def relative_residuals(pencil, values, vectors):
    """``||K v - lam M v|| / ((|lam| + 1) ||M v||)`` per column."""
    MV = pencil.M @ vectors
    R = pencil.K @ vectors - MV * values
    return np.linalg.norm(R, axis=0) / ((np.abs(values) + 1.0) * np.linalg.norm(MV, axis=0))


def smallest_eigenpairs(pencil, k, tol=1e-10, max_iter=None, seed=0, check_every=10):
    """The ``k`` algebraically smallest eigenpairs of ``K v = lam M v``.

    Parameters
    ----------
    pencil : SymmetricOperatorPencil
    k : int
        Number of pairs, ``1 <= k <= n/4``.
    tol : float
        Bound on the relative residual of every returned pair.
    max_iter : int, optional
        Largest Krylov dimension; defaults to ``min(n, max(600, 40*k))``.
    seed : int
        Seed of the start vector.

    Returns
    -------
    EigenResult
        Ascending values and M-orthonormal vectors.
    """
    K, M = pencil.K, pencil.M
    n = K.shape[0]
    if k < 1 or 4 * k > n:
        raise ValueError(f"k={k} must satisfy 1 <= k <= n/4 (n={n})")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if max_iter is None:
        max_iter = min(n, max(600, 40 * k))
    max_iter = min(max_iter, n)

    shift = safe_shift(pencil)
    ab = to_banded((K - shift * M).tocsr(), _bandwidth(pencil))
    try:
        chol = linalg.cholesky_banded(ab, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise FactorizationError(
            f"K - ({shift})M is not positive definite; assembly violates the lower bound") from exc

    def op(x):
        return linalg.cho_solve_banded((chol, True), x, check_finite=False)

    rng = np.random.default_rng(seed)
    cap = min(max_iter, 64)
    Q = np.empty((n, cap))
    MQ = np.empty((n, cap))
    alphas, betas = [], []
    q = rng.standard_normal(n)
    mq = M @ q
    nrm = np.sqrt(q @ mq)
    q, mq = q / nrm, mq / nrm
    best = None
    for j in range(max_iter):
        if j == cap:
            cap = min(max_iter, 2 * cap)
            Q = np.hstack([Q, np.empty((n, cap - j))])
            MQ = np.hstack([MQ, np.empty((n, cap - j))])
        Q[:, j] = q
        MQ[:, j] = mq
        w = op(mq)
        a = w @ mq
        w = w - a * q
        if j > 0:
            w -= betas[-1] * Q[:, j - 1]
        # full reorthogonalization in the M inner product, twice
        for _ in range(2):
            w -= Q[:, :j + 1] @ (MQ[:, :j + 1].T @ w)
        alphas.append(a)
        mw = M @ w
        b = np.sqrt(max(w @ mw, 0.0))
        done = j + 1 == max_iter or b <= 1e-14 * abs(a)
        if (j + 1 >= k and (j + 1) % check_every == 0) or done:
            theta, S = linalg.eigh_tridiagonal(np.array(alphas), np.array(betas),
                                               check_finite=False)
            top = np.argsort(theta)[::-1][:k]
            vals = shift + 1.0 / theta[top]
            vecs = Q[:, :j + 1] @ S[:, top]
            vecs /= np.sqrt(np.einsum("ij,ij->j", vecs, M @ vecs))
            res = relative_residuals(pencil, vals, vecs)
            order = np.argsort(vals)
            best = (vals[order], vecs[:, order], res[order])
            if len(top) == k and np.all(res < tol):
                return EigenResult(best[0], best[1], best[2], j + 1, shift)
        if done:
            break
        betas.append(b)
        q, mq = w / b, mw / b
    vals, _, res = best if best is not None else (np.array([]), None, np.array([]))
    raise ConvergenceError(
        f"Lanczos did not reach tol={tol} after {j + 1} steps; residuals {res}", vals, res)


def dense_oracle(pencil, max_dim=DENSE_LIMIT):
    """Full sorted spectrum from LAPACK's generalized symmetric solver."""
    n = pencil.K.shape[0]
    if n > max_dim:
        raise ValueError(f"dense oracle refuses dimension {n} > {max_dim}")
    K = pencil.K.toarray() if hasattr(pencil.K, "toarray") else np.asarray(pencil.K, float)
    M = pencil.M.toarray() if hasattr(pencil.M, "toarray") else np.asarray(pencil.M, float)
    return np.sort(linalg.eigh(K, M, eigvals_only=True))


class SingularShift(ArithmeticError):
    pass


def ldl_negative_pivots(ab):
    """Count negative pivots of an unpivoted LDL^T of a symmetric band matrix.

    ``ab`` is lower band storage, ``ab[d, j] = A[j + d, j]``. By Sylvester's
    law of inertia the count equals the number of negative eigenvalues.
    A sliding dense window of size ``b + 1`` carries the Schur complement.
    """
    b = ab.shape[0] - 1
    n = ab.shape[1]
    scale = np.max(np.abs(ab))
    tiny = 1e-14 * scale
    # pad with an identity tail so the window never shrinks
    pad = np.zeros((b + 1, n + b))
    pad[:, :n] = ab
    pad[0, n:] = 1.0
    rows = np.arange(b + 1)
    # W holds the Schur complement on rows/columns kk..kk+b
    W = np.zeros((b + 1, b + 1))
    for c in range(b + 1):
        W[c:, c] = pad[: b + 1 - c, c]
        W[c, c:] = W[c:, c]
    unit = np.zeros(b + 1)
    unit[b] = 1.0
    neg = 0
    for kk in range(n):
        piv = W[0, 0]
        if abs(piv) <= tiny:
            raise SingularShift(f"zero pivot at row {kk}")
        if piv < 0:
            neg += 1
        l = W[1:, 0] / piv
        S = W[1:, 1:] - piv * np.outer(l, l)
        nxt = kk + b + 1
        W[:b, :b] = S
        # new last row/column: A[nxt, nxt - b + t] for t = 0..b
        col = pad[b - rows, nxt - b + rows] if nxt < n + b else unit
        W[b, :] = col
        W[:, b] = col
    return neg


def inertia_below(pencil, mu, max_retries=5):
    """Number of pencil eigenvalues strictly below ``mu``.

    On an exactly singular ``K - mu*M`` the level is moved down by 1e-10
    and the retry is logged; moving down keeps an eigenvalue sitting at
    ``mu`` out of the count.
    """
    bw = _bandwidth(pencil)
    level = float(mu)
    for _ in range(max_retries + 1):
        ab = to_banded((pencil.K - level * pencil.M).tocsr(), bw)
        try:
            return ldl_negative_pivots(ab)
        except SingularShift:
            log.warning("singular factorization at mu=%r, retrying at %r", level, level - 1e-10)
            level -= 1e-10
    raise SingularShift(f"K - mu M singular near mu={mu}")
