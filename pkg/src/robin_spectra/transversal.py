"""Cross-section Robin Laplacian on ``I = (0, eps)``.

The boundary conditions are sign-flipped,

    -psi'(0) - alpha*psi(0) = 0,    psi'(eps) + alpha*psi(eps) = 0,

so the ground level is ``-alpha**2`` with eigenfunction ``c*exp(-alpha*y)``
and every excited level is ``(n*pi/eps)**2``, exactly as for Neumann.
Production values come from these closed forms; the determinant
functions at the bottom of the module are kept as an independent
root-finding oracle.
"""

from dataclasses import dataclass
from enum import Enum
import math

import numpy as np
from scipy import optimize


class DomainError(ValueError):
    """Evaluation point outside the closed interval ``[0, eps]``."""


class ModeKind(str, Enum):
    ROBIN_GROUND = "RobinGround"
    ROBIN_EXCITED = "RobinExcited"
    NEUMANN_REF = "NeumannRef"
    DIRICHLET_REF = "DirichletRef"


@dataclass(frozen=True)
class TransversalParams:
    alpha: float
    eps: float

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if not math.isfinite(self.alpha):
            raise ValueError("alpha must be finite")


@dataclass(frozen=True)
class TransversalMode:
    index: int
    eigenvalue: float
    kind: ModeKind
    norm_const: float


def ground_norm_const(alpha, eps):
    """``c`` with ``c * ||exp(-alpha*y)||_{L2(0, eps)} = 1``; positive."""
    if alpha == 0:
        return math.sqrt(1.0 / eps)
    return math.sqrt(2.0 * alpha / -math.expm1(-2.0 * alpha * eps))


def _excited_norm_const(n, alpha, eps):
    npi = n * math.pi
    return npi / math.hypot(npi, alpha * eps) * math.sqrt(2.0 / eps)


def _require_nonzero(p):
    if p.alpha == 0:
        raise ValueError("alpha = 0 is the Neumann problem: use neumann_reference")


def transversal_eigenvalues(p, n_max):
    """Lowest ``n_max + 1`` eigenvalues, ascending.

    ``[-alpha**2, (pi/eps)**2, (2*pi/eps)**2, ...]``. The value 0 is never
    an eigenvalue for ``alpha != 0``.
    """
    _require_nonzero(p)
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    return [-p.alpha**2] + [(n * math.pi / p.eps) ** 2 for n in range(1, n_max + 1)]


def transversal_modes(p, n_max):
    _require_nonzero(p)
    vals = transversal_eigenvalues(p, n_max)
    modes = [TransversalMode(0, vals[0], ModeKind.ROBIN_GROUND,
                             ground_norm_const(p.alpha, p.eps))]
    for n in range(1, n_max + 1):
        modes.append(TransversalMode(n, vals[n], ModeKind.ROBIN_EXCITED,
                                     _excited_norm_const(n, p.alpha, p.eps)))
    return modes


def robin_mode(p, n):
    _require_nonzero(p)
    if n == 0:
        return TransversalMode(0, -p.alpha**2, ModeKind.ROBIN_GROUND,
                               ground_norm_const(p.alpha, p.eps))
    return TransversalMode(n, (n * math.pi / p.eps) ** 2, ModeKind.ROBIN_EXCITED,
                           _excited_norm_const(n, p.alpha, p.eps))


def neumann_reference(eps, n_max):
    """Neumann eigenpairs ``0, (pi/eps)**2, ...`` with cosine eigenfunctions."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    modes = [TransversalMode(0, 0.0, ModeKind.NEUMANN_REF, math.sqrt(1.0 / eps))]
    for n in range(1, n_max + 1):
        modes.append(TransversalMode(n, (n * math.pi / eps) ** 2, ModeKind.NEUMANN_REF,
                                     math.sqrt(2.0 / eps)))
    return modes


def dirichlet_reference(eps, n_max):
    if not eps > 0:
        raise ValueError("eps must be positive")
    return [TransversalMode(n, (n * math.pi / eps) ** 2, ModeKind.DIRICHLET_REF,
                            math.sqrt(2.0 / eps)) for n in range(1, n_max + 1)]


def _check_domain(y, eps):
    y = np.asarray(y, dtype=float)
    if np.any(y < 0.0) or np.any(y > eps):
        raise DomainError(f"y must lie in [0, {eps}]")
    return y


def _value_and_derivative(m, p, y):
    eps, alpha, c = p.eps, p.alpha, m.norm_const
    if m.kind is ModeKind.ROBIN_GROUND:
        f = c * np.exp(-alpha * y)
        return f, -alpha * f
    if m.kind is ModeKind.NEUMANN_REF and m.index == 0:
        return np.full_like(y, c), np.zeros_like(y)
    k = m.index * math.pi / eps
    cos, sin = np.cos(k * y), np.sin(k * y)
    if m.kind is ModeKind.ROBIN_EXCITED:
        r = alpha / k  # alpha*eps/(n*pi)
        return c * (cos - r * sin), c * k * (-sin - r * cos)
    if m.kind is ModeKind.NEUMANN_REF:
        return c * cos, -c * k * sin
    return c * sin, c * k * cos


def eigenfunction_value(m, p, y):
    """Evaluate the normalized eigenfunction of mode ``m`` at ``y``."""
    y = _check_domain(y, p.eps)
    f, _ = _value_and_derivative(m, p, y)
    return f[()] if f.ndim == 0 else f


def eigenfunction_derivative(m, p, y):
    y = _check_domain(y, p.eps)
    _, df = _value_and_derivative(m, p, y)
    return df[()] if df.ndim == 0 else df


def boundary_residual(m, p):
    """``(-psi'(0) - alpha*psi(0), psi'(eps) + alpha*psi(eps))`` for mode ``m``.

    Any mode may be checked against the Robin conditions of ``p``; the
    Neumann and Dirichlet references generally fail them.
    """
    ends = np.array([0.0, p.eps])
    f, df = _value_and_derivative(m, p, ends)
    return float(-df[0] - p.alpha * f[0]), float(df[1] + p.alpha * f[1])


def basis_defect(p, n):
    """Closed-form ``||psi_n - psi_n^N||**2`` for ``n >= 1``.

    Equals ``2 - 2*n*pi/sqrt(n**2*pi**2 + alpha**2*eps**2)``; evaluated in a
    cancellation-free form so tiny values stay accurate for large ``n``.
    """
    if n < 1:
        raise ValueError("basis defect formula holds for n >= 1")
    npi = n * math.pi
    ae = p.alpha * p.eps
    root = math.hypot(npi, ae)
    # 2 - 2 npi/root = 2 (root - npi)/root = 2 ae^2 / (root (root + npi))
    return 2.0 * ae * ae / (root * (root + npi))


def ground_defect(p):
    """``||psi_0 - psi_0^N||**2`` with ``psi_0^N = 1/sqrt(eps)``."""
    _require_nonzero(p)
    c = ground_norm_const(p.alpha, p.eps)
    overlap = c / math.sqrt(p.eps) * -math.expm1(-p.alpha * p.eps) / p.alpha
    return 2.0 - 2.0 * overlap


def boundary_difference(p):
    """``|psi_0(eps)|**2 - |psi_0(0)|**2``, identically ``-2*alpha``."""
    c = ground_norm_const(p.alpha, p.eps)
    return c * c * math.expm1(-2.0 * p.alpha * p.eps)


# -- determinant oracle ---------------------------------------------------

def determinant_positive(p, lam):
    """Determinant of the ``lambda > 0`` boundary system, ``(alpha**2+lam)*sin(sqrt(lam)*eps)``."""
    return (p.alpha**2 + lam) * math.sin(math.sqrt(lam) * p.eps)


def determinant_negative(p, mu):
    """Determinant of the ``lambda = -mu < 0`` system."""
    s = math.sqrt(mu) * p.eps
    return (p.alpha**2 - mu) * (math.exp(-s) - math.exp(s))


def bisection_eigenvalues(p, n_max, xtol=1e-15):
    """Eigenvalues located by bisection on the branch determinants.

    The negative root is bracketed in ``mu`` on ``[alpha**2/2, 2*alpha**2]``;
    the ``n``-th positive root in ``sqrt(lambda)`` on
    ``[(n - 1/2)*pi/eps, (n + 1/2)*pi/eps]``. Independent of the closed forms
    except for the bracket placement.
    """
    _require_nonzero(p)
    a2 = p.alpha**2
    mu = optimize.bisect(lambda m: determinant_negative(p, m), 0.5 * a2, 2.0 * a2,
                         xtol=xtol * max(1.0, a2), rtol=4 * np.finfo(float).eps, maxiter=400)
    out = [-mu]
    for n in range(1, n_max + 1):
        lo = ((n - 0.5) * math.pi / p.eps) ** 2
        hi = ((n + 0.5) * math.pi / p.eps) ** 2
        lam = optimize.bisect(lambda lam: determinant_positive(p, lam), lo, hi,
                              xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=400)
        out.append(lam)
    return out
