"""Boundary coupling profiles ``alpha(x)`` with a limit ``alpha0`` at infinity."""

from dataclasses import dataclass, field, replace
import csv
import math

import numpy as np
from scipy import integrate


class ProfileError(ValueError):
    pass


KINDS = ("constant", "gaussian", "compact", "piecewise", "tabulated")

# profiles whose excess is smaller than this (relative to the amplitude)
# are treated as having reached alpha0
_TAIL_RTOL = 1e-17


def _bump(t):
    """``exp(1 - 1/(1 - t**2))`` on ``|t| < 1``, 0 outside; peak value 1."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    ti = t[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - ti * ti))
    return out


@dataclass(frozen=True)
class CouplingProfile:
    """Immutable description of ``alpha(x)``.

    Use the constructors (:func:`constant`, :func:`gaussian_bump`, ...)
    rather than building instances directly. ``cutoff`` is set by
    :func:`truncate`: the excess is zeroed on ``|x| >= cutoff``.
    """

    kind: str
    alpha0: float
    amplitude: float = 0.0
    width: float = 1.0
    breakpoints: tuple = ()
    values: tuple = ()
    cutoff: float = math.inf
    table_x: tuple = field(default=(), repr=False)
    table_alpha: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ProfileError(f"unknown profile kind {self.kind!r}")
        if not math.isfinite(self.alpha0):
            raise ProfileError("alpha0 must be finite")
        if self.kind in ("gaussian", "compact") and not self.width > 0:
            raise ProfileError("width must be positive")
        if self.kind == "piecewise":
            b = self.breakpoints
            if len(b) != len(self.values) + 1 or len(b) < 2:
                raise ProfileError("piecewise needs len(breakpoints) == len(values) + 1")
            if any(hi <= lo for lo, hi in zip(b[:-1], b[1:])):
                raise ProfileError("breakpoints must be strictly increasing")
        if self.kind == "tabulated":
            x = self.table_x
            if len(x) < 2 or len(x) != len(self.table_alpha):
                raise ProfileError("tabulated profile needs matching x and alpha columns")
            if any(hi <= lo for lo, hi in zip(x[:-1], x[1:])):
                raise ProfileError("tabulated x must be strictly increasing")
        if not self.cutoff > 0:
            raise ProfileError("cutoff must be positive")

    # -- evaluation -------------------------------------------------------

    def excess(self, x):
        """``alpha(x) - alpha0``."""
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            out = np.zeros_like(x)
        elif self.kind == "gaussian":
            out = self.amplitude * np.exp(-(x / self.width) ** 2)
        elif self.kind == "compact":
            out = self.amplitude * _bump(x / self.width)
        elif self.kind == "piecewise":
            b = np.asarray(self.breakpoints)
            seg = np.searchsorted(b, x, side="right") - 1
            inside = (seg >= 0) & (seg < len(self.values))
            vals = np.asarray(self.values, dtype=float) - self.alpha0
            out = np.where(inside, vals[np.clip(seg, 0, len(vals) - 1)], 0.0)
        else:
            tx = np.asarray(self.table_x)
            ta = np.asarray(self.table_alpha) - self.alpha0
            inside = (x >= tx[0]) & (x <= tx[-1])
            out = np.where(inside, np.interp(x, tx, ta), 0.0)
        if math.isfinite(self.cutoff):
            out = np.where(np.abs(x) < self.cutoff, out, 0.0)
        return out

    def __call__(self, x):
        return evaluate(self, x)

    # -- geometry used by quadrature and grids ----------------------------

    def support_radius(self):
        """Radius beyond which the excess is negligible (or exactly zero)."""
        if self.kind == "constant":
            r = 0.0
        elif self.kind == "gaussian":
            if self.amplitude == 0:
                r = 0.0
            else:
                # |amp| exp(-(x/w)^2) < |amp| * tail_rtol
                r = self.width * math.sqrt(-math.log(_TAIL_RTOL))
        elif self.kind == "compact":
            r = self.width
        elif self.kind == "piecewise":
            r = max(abs(self.breakpoints[0]), abs(self.breakpoints[-1]))
        else:
            r = max(abs(self.table_x[0]), abs(self.table_x[-1]))
        return min(r, self.cutoff)

    def kinks(self):
        """Points where the excess is not smooth; quadrature panels split there."""
        pts = []
        if self.kind == "compact":
            pts += [-self.width, self.width]
        elif self.kind == "piecewise":
            pts += list(self.breakpoints)
        elif self.kind == "tabulated":
            pts += list(self.table_x)
        if math.isfinite(self.cutoff):
            pts += [-self.cutoff, self.cutoff]
        return sorted(p for p in pts if abs(p) <= self.cutoff)

    def length_scale(self):
        """Smallest feature length; panel widths are kept below a fraction of it."""
        if self.kind in ("gaussian", "compact"):
            return self.width
        if self.kind == "piecewise":
            return min(hi - lo for lo, hi in zip(self.breakpoints[:-1], self.breakpoints[1:]))
        if self.kind == "tabulated":
            return float(np.min(np.diff(self.table_x)))
        return math.inf

    @property
    def lipschitz(self):
        """False when the profile is outside ``W^{1,inf}`` (jumps)."""
        if self.kind == "piecewise":
            return False
        if self.kind == "tabulated":
            if abs(self.table_alpha[0] - self.alpha0) > 0 or abs(self.table_alpha[-1] - self.alpha0) > 0:
                return False
        if math.isfinite(self.cutoff):
            return truncation_error(replace(self, cutoff=math.inf), self.cutoff) == 0.0
        return True

    def to_dict(self):
        d = {"kind": self.kind, "alpha0": self.alpha0}
        if self.kind in ("gaussian", "compact"):
            d["amplitude"] = self.amplitude
            d["width" if self.kind == "gaussian" else "radius"] = self.width
        elif self.kind == "piecewise":
            d["breakpoints"] = list(self.breakpoints)
            d["values"] = list(self.values)
        elif self.kind == "tabulated":
            d["x"] = list(self.table_x)
            d["alpha"] = list(self.table_alpha)
        if math.isfinite(self.cutoff):
            d["truncate"] = self.cutoff
        return d


# -- constructors -----------------------------------------------------------

def constant(alpha0):
    return CouplingProfile("constant", float(alpha0))


def gaussian_bump(alpha0, amplitude, width=1.0):
    """``alpha0 + amplitude * exp(-x**2 / width**2)``."""
    return CouplingProfile("gaussian", float(alpha0), float(amplitude), float(width))


def compact_bump(alpha0, amplitude, radius):
    """``alpha0 + amplitude * bump(x / radius)`` with a smooth bump of peak 1."""
    return CouplingProfile("compact", float(alpha0), float(amplitude), float(radius))


def piecewise_constant(alpha0, breakpoints, values):
    """Value ``values[i]`` on ``[breakpoints[i], breakpoints[i+1])``, ``alpha0`` outside.

    Discontinuous, so outside the Lipschitz class; the quadratic form and
    its discretization remain well defined.
    """
    return CouplingProfile("piecewise", float(alpha0),
                           breakpoints=tuple(float(b) for b in breakpoints),
                           values=tuple(float(v) for v in values))


def tabulated(alpha0, x, alpha):
    """Linear interpolation of samples; ``alpha0`` outside the table."""
    return CouplingProfile("tabulated", float(alpha0),
                           table_x=tuple(float(v) for v in x),
                           table_alpha=tuple(float(v) for v in alpha))


def read_tabulated_csv(path, alpha0):
    """Load a two-column ``x, alpha`` CSV (a non-numeric header row is skipped)."""
    xs, al = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                x, a = float(row[0]), float(row[1])
            except ValueError:
                if not xs:
                    continue
                raise ProfileError(f"bad row in {path}: {row}")
            xs.append(x)
            al.append(a)
    return tabulated(alpha0, xs, al)


def from_dict(d):
    """Build a profile from a config block (see the CLI docs for keys)."""
    kind = d["kind"]
    a0 = d.get("alpha0", 0.0)
    if kind == "constant":
        p = constant(a0)
    elif kind == "gaussian":
        p = gaussian_bump(a0, d["amplitude"], d.get("width", 1.0))
    elif kind == "compact":
        p = compact_bump(a0, d["amplitude"], d["radius"])
    elif kind == "piecewise":
        p = piecewise_constant(a0, d["breakpoints"], d["values"])
    elif kind == "tabulated":
        if "csv" in d:
            p = read_tabulated_csv(d["csv"], a0)
        else:
            p = tabulated(a0, d["x"], d["alpha"])
    else:
        raise ProfileError(f"unknown profile kind {kind!r}")
    if d.get("truncate") is not None:
        p = truncate(p, d["truncate"])
    return p


# -- operations -------------------------------------------------------------

def evaluate(p, x):
    """``alpha(x)``; scalar in, scalar out."""
    out = p.alpha0 + p.excess(x)
    return out[()] if np.ndim(out) == 0 else out


def excess_integral(p):
    """``int (alpha - alpha0) dx`` by adaptive quadrature on the effective support."""
    if p.kind == "constant":
        return 0.0
    if p.kind == "tabulated":
        ta = np.asarray(p.table_alpha) - p.alpha0
        tol = 1e-12 * max(1.0, float(np.max(np.abs(ta))))
        if not math.isfinite(p.cutoff) and (abs(ta[0]) > tol or abs(ta[-1]) > tol):
            raise ProfileError("non-integrable excess: table tails have not decayed to alpha0")
    r = p.support_radius()
    pts = [-r] + [k for k in p.kinks() if -r < k < r] + [0.0, r]
    pts = sorted(set(pts))
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        if hi <= lo:
            continue
        # panel interior only, so jumps at panel ends are never sampled
        val, _ = integrate.quad(lambda x: float(p.excess(x)), lo, hi,
                                epsabs=1e-13, epsrel=1e-13, limit=200)
        total += val
    return total


def truncate(p, m):
    """Profile with excess ``(alpha - alpha0) * 1{|x| < m}``."""
    if not m > 0:
        raise ProfileError("truncation radius must be positive")
    if p.kind == "constant":
        return p
    if truncation_error(p, m) == 0.0 and p.support_radius() <= m:
        return p
    return replace(p, cutoff=min(float(m), p.cutoff))


def truncation_error(p, m):
    """``sup_{|x| >= m} |alpha(x) - alpha0|``, the sup-norm distance to ``truncate(p, m)``."""
    if m >= p.cutoff:
        return 0.0
    if p.kind == "constant":
        return 0.0
    if p.kind == "gaussian":
        return abs(p.amplitude) * math.exp(-(m / p.width) ** 2)
    if p.kind == "compact":
        return abs(p.amplitude) * float(_bump(m / p.width))
    if p.kind == "piecewise":
        b = p.breakpoints
        err = 0.0
        for lo, hi, v in zip(b[:-1], b[1:], p.values):
            # segment [lo, hi) meets |x| >= m
            if lo <= -m or hi > m:
                err = max(err, abs(v - p.alpha0))
        return err
    tx = np.asarray(p.table_x)
    ta = np.asarray(p.table_alpha) - p.alpha0
    cand = list(np.abs(ta[np.abs(tx) >= m]))
    for s in (-m, m):
        if tx[0] <= s <= tx[-1]:
            cand.append(abs(float(np.interp(s, tx, ta))))
    return max(cand, default=0.0)


def sup_norm(p):
    """``sup_x |alpha(x)|``."""
    a0 = abs(p.alpha0)
    if p.kind == "constant":
        return a0
    if p.kind in ("gaussian", "compact"):
        return max(a0, abs(p.alpha0 + p.amplitude))
    m = p.cutoff
    if p.kind == "piecewise":
        b = p.breakpoints
        return max([a0] + [abs(v) for lo, hi, v in zip(b[:-1], b[1:], p.values)
                           if lo < m and hi > -m])
    tx = np.asarray(p.table_x)
    vals = [abs(v) for x, v in zip(p.table_x, p.table_alpha) if abs(x) < m]
    for s in (-m, m):
        if math.isfinite(s) and tx[0] <= s <= tx[-1]:
            vals.append(abs(float(np.interp(s, tx, p.table_alpha))))
    return max([a0] + vals)
