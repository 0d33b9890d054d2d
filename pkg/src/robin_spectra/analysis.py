"""Threshold, bound states, trial-function criterion and Weyl probe for the strip.

For a coupling ``alpha(x) -> alpha0`` the essential spectrum starts at
``-alpha0**2``. Eigenvalues below it are computed on truncated strips and
certified by a sweep in truncation length and mesh size. Independently,
the trial functions ``u_n(x, y) = zeta(x/n) phi0(y)`` give the energy
functional

    Q(u_n) = b(u_n) + alpha0**2 ||u_n||**2
           = ||zeta'||**2 / n + (phi0(eps)**2 - phi0(0)**2) int (alpha - alpha0) zeta(x/n)**2 dx,

whose negativity forces a level below the threshold.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
import csv
import io
import json
import math
import os

import numpy as np
from scipy import integrate, linalg, special

from . import profiles as prof
from .eigensolver import smallest_eigenpairs
from .quadrature import composite_gauss, refined_breaks
from .strip import Ends, StripGrid, assemble, rayleigh_quotient, to_banded
from .transversal import (TransversalParams, boundary_difference, eigenfunction_derivative,
                          eigenfunction_value, neumann_reference, robin_mode)

PREDICTS = "PREDICTS_BOUND_STATE"
NO_PREDICTION = "NO_PREDICTION"

ORDER_WINDOW = (1.6, 2.4)
Q_ROUTE_TOL = 1e-8


class QuadratureMismatch(ArithmeticError):
    """Direct and reduced evaluations of Q disagree."""


class PacketDoesNotFit(ValueError):
    pass


def threshold(profile):
    """Bottom of the essential spectrum, ``-alpha0**2``."""
    return -profile.alpha0**2


# -- cut-off function --------------------------------------------------------

def _transition_logit(u):
    # s(u) = B(1-u) / (B(u) + B(1-u)) = expit(-z), z = 1/(1-u) - 1/u
    with np.errstate(divide="ignore"):
        return 1.0 / (1.0 - u) - 1.0 / u


def smooth_step(u):
    """1 at ``u <= 0``, 0 at ``u >= 1``, C-infinity in between."""
    u = np.asarray(u, dtype=float)
    out = np.where(u <= 0.0, 1.0, 0.0)
    mid = (u > 0.0) & (u < 1.0)
    out[mid] = special.expit(-_transition_logit(u[mid]))
    return out


def smooth_step_derivative(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    mid = (u > 0.0) & (u < 1.0)
    um = u[mid]
    z = _transition_logit(um)
    # ds/du = -expit(z) expit(-z) dz/du
    out[mid] = -special.expit(z) * special.expit(-z) * (1.0 / (1.0 - um) ** 2 + 1.0 / um**2)
    return out


def zeta(t):
    """Cut-off: 1 on ``|t| <= 1/4``, 0 on ``|t| >= 1/2``, values in ``[0, 1]``."""
    return smooth_step(4.0 * (np.abs(np.asarray(t, dtype=float)) - 0.25))


def zeta_prime(t):
    t = np.asarray(t, dtype=float)
    return 4.0 * np.sign(t) * smooth_step_derivative(4.0 * (np.abs(t) - 0.25))


@dataclass(frozen=True)
class CutoffFunction:
    """``x -> zeta(x / n)``."""

    n: float

    def __post_init__(self):
        if not self.n > 0:
            raise ValueError("scale must be positive")

    def __call__(self, x):
        return zeta(np.asarray(x) / self.n)

    def derivative(self, x):
        return zeta_prime(np.asarray(x) / self.n) / self.n

    @property
    def support(self):
        return -0.5 * self.n, 0.5 * self.n


def zeta_prime_norm_sq():
    """``||zeta'||**2`` over the real line, by adaptive quadrature of the transition."""
    # two symmetric transitions of width 1/4 each: 2 * int_0^1 (4 s')^2 du / 4
    val, _ = integrate.quad(lambda u: float(smooth_step_derivative(u)) ** 2, 0.0, 1.0,
                            epsabs=1e-13, epsrel=1e-13, limit=400)
    return 8.0 * val


# -- trial-function energy ------------------------------------------------------

def _ground(alpha0, eps):
    """Ground transversal mode and its parameters (Neumann constant when alpha0 == 0)."""
    p = TransversalParams(alpha0, eps)
    if alpha0 == 0:
        return neumann_reference(eps, 0)[0], p
    return robin_mode(p, 0), p


def _x_breaks(profile, n, panel_width=None):
    half = 0.5 * n
    pts = [-half, -0.5 * half, 0.0, 0.5 * half, half]
    pts += [k for k in profile.kinks() if -half < k < half]
    r = profile.support_radius()
    if r < half:
        pts += [-r, r]
    if panel_width is None:
        panel_width = min(n / 32.0, 0.5 * profile.length_scale())
    return refined_breaks(pts, panel_width)


def q_direct(profile, eps, n, x_order=16, y_panels=4, y_order=16, panel_width=None):
    """Q(u_n) from a tensor Gauss-Legendre rule over the whole 2D form."""
    mode, p = _ground(profile.alpha0, eps)
    xb = _x_breaks(profile, n, panel_width)
    x, wx = composite_gauss(xb, x_order)
    y, wy = composite_gauss(np.linspace(0.0, eps, y_panels + 1), y_order)
    cut = CutoffFunction(n)
    f, df = cut(x), cut.derivative(x)
    phi = eigenfunction_value(mode, p, y)
    dphi = eigenfunction_derivative(mode, p, y)
    U = np.outer(f, phi)
    Ux = np.outer(df, phi)
    Uy = np.outer(f, dphi)
    volume = wx @ ((Ux**2 + Uy**2 + profile.alpha0**2 * U**2) @ wy)
    ends = eigenfunction_value(mode, p, np.array([0.0, eps]))
    alpha = prof.evaluate(profile, x)
    edge = wx @ (alpha * f**2 * (ends[1] ** 2 - ends[0] ** 2))
    return float(volume + edge)


def q_reduced(profile, eps, n):
    """Q(u_n) from the separated formula, with adaptive 1D quadrature."""
    diff = boundary_difference(TransversalParams(profile.alpha0, eps)) if profile.alpha0 else 0.0
    half = 0.5 * n
    r = min(profile.support_radius(), half)
    pts = sorted({-half, -r, 0.0, r, half} | {k for k in profile.kinks() if -half < k < half}
                 | ({-0.5 * half, 0.5 * half}))
    weighted = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        if hi <= lo or (lo >= r or hi <= -r):
            continue
        val, _ = integrate.quad(lambda x: float(profile.excess(x) * zeta(x / n) ** 2), lo, hi,
                                epsabs=1e-14, epsrel=1e-13, limit=400)
        weighted += val
    return zeta_prime_norm_sq() / n + diff * weighted


def variational_Q(profile, eps, n, tol=Q_ROUTE_TOL, **quad):
    """Energy ``Q(u_n)`` of the cut-off trial function.

    Both the direct 2D quadrature and the separated formula are evaluated;
    the direct value is returned.

    Raises
    ------
    QuadratureMismatch
        If the two routes differ by more than ``tol``.
    """
    if not n >= 1:
        raise ValueError("n must be >= 1")
    direct = q_direct(profile, eps, n, **quad)
    reduced = q_reduced(profile, eps, n)
    if abs(direct - reduced) > tol:
        raise QuadratureMismatch(f"Q(u_{n}): direct {direct!r} vs reduced {reduced!r}")
    return direct


def q_limit_predicted(profile, eps):
    """``(phi0(eps)**2 - phi0(0)**2) * int (alpha - alpha0)``, i.e. ``-2 alpha0 * excess``."""
    if profile.alpha0 == 0:
        return 0.0
    return boundary_difference(TransversalParams(profile.alpha0, eps)) * prof.excess_integral(profile)


def q_limit_extrapolated(profile, eps, n_start=8, n_cap=2**12, tol=1e-10):
    """Extrapolate Q(u_n) to ``n -> inf`` by eliminating the ``1/n`` term.

    ``2 Q(2n) - Q(n)`` is exact once the profile excess lies inside the
    plateau ``|x| < n/4``; the doubling stops when two successive
    estimates agree to ``tol``. Returns ``(limit, n_used)``.
    """
    n = n_start
    q_prev = variational_Q(profile, eps, n)
    est_prev = None
    while 2 * n <= n_cap:
        q_next = variational_Q(profile, eps, 2 * n)
        est = 2.0 * q_next - q_prev
        if est_prev is not None and abs(est - est_prev) < tol:
            return est, 2 * n
        est_prev, q_prev, n = est, q_next, 2 * n
    return est_prev, n


@dataclass
class CriterionVerdict:
    verdict: str
    excess_integral: float
    predicted_limit: float
    n_star: float = None
    samples: list = field(default_factory=list)


def criterion_check(profile, eps, max_power=10):
    """Apply the trial-function criterion.

    The verdict is ``PREDICTS_BOUND_STATE`` exactly when
    ``alpha0 * int (alpha - alpha0) > 0``. Independently, ``Q(u_n)`` is
    computed for ``n = 1, 2, 4, ..., 2**max_power``; the first ``n`` with a
    negative value is ``n_star`` (``None`` when none is found).
    """
    excess = prof.excess_integral(profile)
    verdict = PREDICTS if np.sign(profile.alpha0) * excess > 0 else NO_PREDICTION
    out = CriterionVerdict(verdict, excess, q_limit_predicted(profile, eps))
    for k in range(max_power + 1):
        n = 2**k
        q = variational_Q(profile, eps, n)
        out.samples.append((n, q))
        if q < 0 and out.n_star is None:
            out.n_star = n
            break
    return out


def sampled_trial_vector(grid, profile_alpha0, n, wavenumber=0.0):
    """Nodal samples of ``cos(k x) zeta(x/n) phi0(y)`` on ``grid``."""
    mode, p = _ground(profile_alpha0, grid.eps)
    cut = CutoffFunction(n)
    return grid.sample(lambda X, Y: np.cos(wavenumber * X) * cut(X)
                       * eigenfunction_value(mode, p, Y))


def rayleigh_ritz_check(profile, eps, n, hx=0.125, ny=16, tol=1e-10):
    """Discrete Rayleigh quotient of ``u_n`` and the pencil minimum on a strip holding its support.

    Returns a dict with the quotient, the lowest eigenvalue and its residual.
    """
    L = 0.5 * n + 1.0
    nx = max(4, int(round(2 * L / hx)))
    grid = StripGrid(L, eps, nx, ny, Ends.NEUMANN)
    pencil = assemble(grid, profile)
    u = sampled_trial_vector(grid, profile.alpha0, n)
    rq = rayleigh_quotient(pencil, u)
    res = smallest_eigenpairs(pencil, 1, tol=tol)
    return {"n": n, "L": L, "rayleigh_quotient": rq, "lambda_min": float(res.values[0]),
            "residual": float(res.residuals[0]), "threshold": threshold(profile)}


# -- Weyl probe ----------------------------------------------------------------

def weyl_residual(alpha0, eps, t, n, grid=None, lam=None, hx=0.125, ny=16):
    """Normalized residual of a wave packet on the constant-coupling strip.

    The packet ``cos(sqrt(t) x) zeta(x/n) phi0(y)`` is tested at energy
    ``lam`` (default ``-alpha0**2 + t``). Returns
    ``||K u - lam M u||_{M^-1} / ||u||_M``, which tends to 0 with ``n`` when
    ``lam`` lies in the continuum and is bounded below by the distance to
    the discrete spectrum otherwise.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if grid is None:
        L = float(max(n, 1))
        grid = StripGrid(L, eps, max(4, int(round(2 * L / hx))), ny, Ends.NEUMANN)
    if grid.L < n:
        raise PacketDoesNotFit(f"packet of scale n={n} needs L >= n, grid has L={grid.L}")
    if lam is None:
        lam = -alpha0**2 + t
    pencil = assemble(grid, prof.constant(alpha0))
    u = sampled_trial_vector(grid, alpha0, n, math.sqrt(t))
    r = pencil.K @ u - lam * (pencil.M @ u)
    chol = linalg.cholesky_banded(to_banded(pencil.M, grid.bandwidth), lower=True)
    s = linalg.cho_solve_banded((chol, True), r)
    return math.sqrt(r @ s) / math.sqrt(u @ (pencil.M @ u))


# -- mesh/truncation sweep ------------------------------------------------------

@dataclass
class Extrapolation:
    value: float
    error: float
    order: float
    accepted: bool


def richardson(coarse, mid, fine, ratio=2.0, order=2.0):
    """Order-``order`` Richardson extrapolation from three nested values.

    The observed order is reported; outside ``ORDER_WINDOW`` the extrapolation
    is rejected and the finest value is returned with the last difference as
    its error. The error estimate of an accepted value is the gap between the
    extrapolations from the finer and coarser pairs.
    """
    d1, d2 = mid - coarse, fine - mid
    scale = max(1.0, abs(fine))
    if abs(d2) <= 1e-13 * scale:
        return Extrapolation(fine, max(abs(d2), 1e-15 * scale), math.nan, True)
    observed = math.log(abs(d1 / d2)) / math.log(ratio) if d1 != 0 else math.nan
    f = ratio**order - 1.0
    value = fine + d2 / f
    if not (ORDER_WINDOW[0] <= observed <= ORDER_WINDOW[1]) or d1 * d2 < 0:
        return Extrapolation(fine, abs(d2), observed, False)
    prev = mid + d1 / f
    return Extrapolation(value, max(abs(value - prev), 1e-15 * scale), observed, True)


@dataclass
class BoundState:
    index: int
    eigenvalue: float
    extrapolated: float
    error_bar: float
    decay_rate: float
    expected_decay_rate: float
    observed_order: float
    L_variation: float


@dataclass
class SpectralReport:
    threshold: float
    status: str
    bound_states: list = field(default_factory=list)
    continuum_artifacts: list = field(default_factory=list)
    weyl_probe: list = field(default_factory=list)
    criterion: dict = None
    rows: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        d.pop("rows")
        return _clean(d)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["L", "h", "k", "lambda", "residual", "extrapolated", "classified"])
        for r in self.rows:
            w.writerow([fmt(r["L"]), fmt(r["h"]), r["k"], fmt(r["lambda"]), fmt(r["residual"]),
                        fmt(r["extrapolated"]), r["classified"]])
        return buf.getvalue()


def fmt(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return "%.12e" % (x + 0.0)


def _clean(obj):
    """Round-trip floats through the fixed output format; NaN becomes null."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return None if not math.isfinite(x) else float("%.12e" % x)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def sweep_threads():
    env = os.environ.get("ROBIN_SPECTRA_THREADS")
    if env:
        return max(1, int(env))
    return max(1, min(4, os.cpu_count() or 1))


def decay_rate(grid, vector, profile):
    """Exponential decay rate of ``x -> ||v(x, .)||`` outside the profile support.

    Fits ``log`` of the transverse norm against ``|x|`` over
    ``[support + 1, L/2]``, dropping points below 1e-9 of the peak.
    Returns ``nan`` when fewer than four points qualify.
    """
    F = grid.field(vector)
    g = np.sqrt(np.sum(F**2, axis=1))
    x = grid.x[grid.columns]
    lo = min(profile.support_radius(), grid.L) + 1.0
    hi = 0.5 * grid.L
    sel = (np.abs(x) >= lo) & (np.abs(x) <= hi) & (g > 1e-9 * g.max())
    if sel.sum() < 4:
        return math.nan
    slope = np.polyfit(np.abs(x[sel]), np.log(g[sel]), 1)[0]
    return float(-slope)


def _solve_point(job):
    L, level, grid, profile, k, tol = job
    pencil = assemble(grid, profile)
    res = smallest_eigenpairs(pencil, k, tol=tol)
    return L, level, grid, res


def find_bound_states(profile, eps, L=(10.0, 20.0, 40.0), nx=(80, 160, 320), ny=(8, 16, 32),
                      k=4, tol=1e-10, ends=Ends.NEUMANN, L_tol=1e-6, probe=False, criterion=True,
                      threads=None):
    """Certify eigenvalues below ``-alpha0**2`` by a truncation/mesh sweep.

    ``L`` lists increasing truncation half-lengths (default ``L0, 2 L0, 4 L0``
    with ``L0 = 10``). ``nx`` are the three nested cell counts along x for
    ``L[0]``; longer strips keep the same cell size. For each eigen-index the three mesh levels are Richardson
    extrapolated, and the largest strip decides: an eigenvalue is a bound
    state when its extrapolation lies below ``-alpha0**2 - delta``, with
    ``delta = max(3 * error, (pi / (2 L))**2)``. Values between that margin
    and the threshold are listed as continuum artifacts.
    """
    if len(nx) != 3 or len(ny) != 3:
        raise ValueError("need three nested mesh levels")
    Ls = [float(v) for v in L]
    if len(Ls) < 2 or any(b <= a for a, b in zip(Ls[:-1], Ls[1:])):
        raise ValueError("need at least two increasing truncation lengths")
    thr = threshold(profile)
    L0 = Ls[0]
    jobs = []
    for Lc in Ls:
        for level in range(3):
            grid = StripGrid(Lc, eps, int(round(nx[level] * Lc / L0)), ny[level], ends)
            jobs.append((Lc, level, grid, profile, k, tol))
    with ThreadPoolExecutor(max_workers=threads or sweep_threads()) as ex:
        solved = list(ex.map(_solve_point, jobs))

    table = {(L, level): (grid, res) for L, level, grid, res in solved}
    rows = []
    extrap = {}
    for Lc in Ls:
        for j in range(k):
            v = [table[(Lc, lv)][1].values[j] for lv in range(3)]
            extrap[(Lc, j)] = richardson(*v)
        floor_gap = (math.pi / (2.0 * Lc)) ** 2
        for lv in range(3):
            grid, res = table[(Lc, lv)]
            for j in range(k):
                e = extrap[(Lc, j)]
                delta = max(3.0 * e.error, floor_gap)
                if e.value < thr - delta:
                    label = "bound_state"
                elif e.value < thr:
                    label = "continuum_artifact"
                else:
                    label = "continuum"
                rows.append({"L": Lc, "h": grid.hx, "k": j, "lambda": float(res.values[j]),
                             "residual": float(res.residuals[j]),
                             "extrapolated": e.value, "classified": label})

    Lmax = Ls[-1]
    floor_gap = (math.pi / (2.0 * Lmax)) ** 2
    status = "resolved"
    bound, artifacts = [], []
    grid_f, res_f = table[(Lmax, 2)]
    for j in range(k):
        e = extrap[(Lmax, j)]
        delta = max(3.0 * e.error, floor_gap)
        if e.value >= thr:
            continue
        if e.value >= thr - delta:
            artifacts.append({"index": j, "extrapolated": e.value, "margin": delta})
            continue
        # the last two truncations must agree, or at least move monotonically
        d2 = e.value - extrap[(Ls[-2], j)].value
        d1 = extrap[(Ls[-2], j)].value - extrap[(Ls[-3], j)].value if len(Ls) > 2 else d2
        if d1 * d2 < 0 and min(abs(d1), abs(d2)) > L_tol:
            status = "unresolved"
        rate = decay_rate(grid_f, res_f.vectors[:, j], profile)
        bound.append(BoundState(j, float(res_f.values[j]), e.value, max(3.0 * e.error, 1e-15),
                                rate, math.sqrt(thr - e.value), e.order, abs(d2)))
    if status == "unresolved":
        for r in rows:
            r["classified"] = "unresolved"
        bound = []

    report = SpectralReport(threshold=thr, status=status, bound_states=bound,
                            continuum_artifacts=artifacts, rows=rows)
    if criterion:
        c = criterion_check(profile, eps)
        report.criterion = asdict(c)
    if probe:
        for t in (0.0, 1.0):
            for n in (4, 8, 16):
                report.weyl_probe.append(
                    {"lambda": thr + t, "n": n, "residual": weyl_residual(profile.alpha0, eps, t, n,
                                                                         grid=StripGrid(16.0, eps, 256, 16))})
    report.provenance = {
        "profile": profile.to_dict(),
        "lipschitz_profile": profile.lipschitz,
        "eps": eps,
        "L": Ls,
        "nx": [[int(round(n * Lc / L0)) for n in nx] for Lc in Ls],
        "ny": list(ny),
        "ends": Ends(ends).value,
        "k": k,
        "tol": tol,
        "continuum_floor_gap": floor_gap,
        "shift": float(res_f.shift),
    }
    return report
