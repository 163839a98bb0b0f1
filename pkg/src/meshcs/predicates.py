"""Adaptively exact 2D geometric predicates: orientation and in-circle.

Each predicate first evaluates a floating-point expression with a forward
error bound; when the magnitude cannot certify the sign, it falls back to
exact rational arithmetic (Fraction is exact on binary doubles). Pixel
lattices make exactly-cocircular quads and exactly-collinear triples
routine, so sign errors here would corrupt triangulations.
"""

from __future__ import annotations

from fractions import Fraction

__all__ = ["orient2d", "incircle", "ORIENT_CCW", "ORIENT_CW", "ORIENT_COLLINEAR"]

ORIENT_CCW = 1
ORIENT_CW = -1
ORIENT_COLLINEAR = 0

# half-ulp of 1.0; filter constants follow the standard forward-error analysis
# of the 2x2 / 4x4 determinant expansions
_EPS = 2.0**-53
_CCW_BOUND = (3.0 + 16.0 * _EPS) * _EPS
_ICC_BOUND = (10.0 + 96.0 * _EPS) * _EPS


def _sign(v) -> int:
    if v > 0:
        return 1
    if v < 0:
        return -1
    return 0


def orient2d(ax, ay, bx, by, cx, cy) -> int:
    """Sign of twice the signed area of triangle (a, b, c).

    +1: counterclockwise (positive area), -1: clockwise, 0: collinear.
    """
    detleft = (ax - cx) * (by - cy)
    detright = (ay - cy) * (bx - cx)
    det = detleft - detright
    detsum = abs(detleft) + abs(detright)
    if abs(det) > _CCW_BOUND * detsum:
        return 1 if det > 0 else -1
    return _orient2d_exact(ax, ay, bx, by, cx, cy)


def _orient2d_exact(ax, ay, bx, by, cx, cy) -> int:
    ax, ay, bx, by, cx, cy = (Fraction(v) for v in (ax, ay, bx, by, cx, cy))
    det = (ax - cx) * (by - cy) - (ay - cy) * (bx - cx)
    return _sign(det)


def incircle(ax, ay, bx, by, cx, cy, dx, dy) -> int:
    """Position of d relative to the circumcircle of CCW triangle (a, b, c).

    +1: strictly inside the open circumdisk, -1: strictly outside,
    0: exactly on the circle. Requires orient2d(a, b, c) > 0.
    """
    adx = ax - dx
    ady = ay - dy
    bdx = bx - dx
    bdy = by - dy
    cdx = cx - dx
    cdy = cy - dy

    bdxcdy = bdx * cdy
    cdxbdy = cdx * bdy
    alift = adx * adx + ady * ady

    cdxady = cdx * ady
    adxcdy = adx * cdy
    blift = bdx * bdx + bdy * bdy

    adxbdy = adx * bdy
    bdxady = bdx * ady
    clift = cdx * cdx + cdy * cdy

    det = (
        alift * (bdxcdy - cdxbdy)
        + blift * (cdxady - adxcdy)
        + clift * (adxbdy - bdxady)
    )
    permanent = (
        (abs(bdxcdy) + abs(cdxbdy)) * alift
        + (abs(cdxady) + abs(adxcdy)) * blift
        + (abs(adxbdy) + abs(bdxady)) * clift
    )
    if abs(det) > _ICC_BOUND * permanent:
        return 1 if det > 0 else -1
    return _incircle_exact(ax, ay, bx, by, cx, cy, dx, dy)


def _incircle_exact(ax, ay, bx, by, cx, cy, dx, dy) -> int:
    F = Fraction
    adx = F(ax) - F(dx)
    ady = F(ay) - F(dy)
    bdx = F(bx) - F(dx)
    bdy = F(by) - F(dy)
    cdx = F(cx) - F(dx)
    cdy = F(cy) - F(dy)
    alift = adx * adx + ady * ady
    blift = bdx * bdx + bdy * bdy
    clift = cdx * cdx + cdy * cdy
    det = (
        alift * (bdx * cdy - cdx * bdy)
        + blift * (cdx * ady - adx * cdy)
        + clift * (adx * bdy - bdx * ady)
    )
    return _sign(det)
