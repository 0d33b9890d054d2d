"""Composite Gauss-Legendre rules on intervals and tensor boxes."""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def _leggauss(order):
    return np.polynomial.legendre.leggauss(order)


def composite_gauss(breaks, order=16):
    """Nodes and weights of a composite Gauss-Legendre rule.

    Parameters
    ----------
    breaks : array_like
        Sorted panel endpoints.
    order : int
        Nodes per panel.

    Returns
    -------
    x, w : ndarray
        Flattened nodes and weights.
    """
    breaks = np.asarray(breaks, dtype=float)
    t, wt = _leggauss(order)
    a, b = breaks[:-1, None], breaks[1:, None]
    half = 0.5 * (b - a)
    x = (0.5 * (a + b) + half * t).ravel()
    w = (half * wt).ravel()
    return x, w


def uniform_breaks(a, b, panels):
    return np.linspace(a, b, int(panels) + 1)


def refined_breaks(points, max_width):
    """Merge breakpoints and split every panel wider than ``max_width``."""
    pts = np.unique(np.asarray(points, dtype=float))
    out = [pts[:1]]
    for lo, hi in zip(pts[:-1], pts[1:]):
        k = max(1, int(np.ceil((hi - lo) / max_width)))
        out.append(np.linspace(lo, hi, k + 1)[1:])
    return np.concatenate(out)


def interval_rule(a, b, highest_wavenumber=0.0, nodes_per_wavelength=32, order=16):
    """Gauss-Legendre rule on ``[a, b]`` resolving oscillations up to a wavenumber.

    The panel count is chosen so that each wavelength ``2*pi/k`` of the
    fastest trigonometric factor receives at least ``nodes_per_wavelength``
    nodes.
    """
    length = b - a
    waves = highest_wavenumber * length / (2.0 * np.pi)
    panels = max(1, int(np.ceil(waves * nodes_per_wavelength / order)))
    return composite_gauss(uniform_breaks(a, b, panels), order)
