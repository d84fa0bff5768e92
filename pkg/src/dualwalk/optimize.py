"""Scalar bracketing and golden-section search used by the conjugate machinery."""

from __future__ import annotations

import math

from .errors import BracketError

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_INVPHI2 = (3.0 - math.sqrt(5.0)) / 2.0


def bracket_min(f, t0=0.0, step=1.0, max_expansions=1000):
    """Walk downhill from ``t0`` doubling the step until a minimum is bracketed.

    Returns (a, b) with the minimum of the unimodal ``f`` strictly inside.
    Raises BracketError after ``max_expansions`` doublings, which for a convex
    objective means it is unbounded below.
    """
    a, m, b = t0 - step, t0, t0 + step
    fa, fm, fb = f(a), f(m), f(b)
    for _ in range(max_expansions):
        if fm <= fa and fm <= fb:
            return a, b
        if fa < fb:
            # slide left
            a, m, b = a - 2.0 * (m - a), a, m
            fa, fm, fb = f(a), fa, fm
        else:
            a, m, b = m, b, b + 2.0 * (b - m)
            fa, fm, fb = fm, fb, f(b)
    raise BracketError(
        "no minimum bracketed after %d expansions (objective appears unbounded "
        "below); last window [%g, %g]" % (max_expansions, a, b)
    )


def golden_min(f, a, b, tol=1e-10):
    """Golden-section minimum of unimodal ``f`` on [a, b] to window width ``tol``.

    Returns (t, f(t)) at the midpoint of the final bracket.
    """
    c = a + _INVPHI2 * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = a + _INVPHI2 * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    t = 0.5 * (a + b)
    return t, f(t)
