from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from meshcs.predicates import incircle, orient2d


def orient_oracle(ax, ay, bx, by, cx, cy):
    F = Fraction
    det = (F(ax) - F(cx)) * (F(by) - F(cy)) - (F(ay) - F(cy)) * (F(bx) - F(cx))
    return (det > 0) - (det < 0)


def incircle_oracle(ax, ay, bx, by, cx, cy, dx, dy):
    F = Fraction
    adx, ady = F(ax) - F(dx), F(ay) - F(dy)
    bdx, bdy = F(bx) - F(dx), F(by) - F(dy)
    cdx, cdy = F(cx) - F(dx), F(cy) - F(dy)
    det = (
        (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy)
        + (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy)
        + (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady)
    )
    return (det > 0) - (det < 0)


def test_orientation_basic():
    assert orient2d(0, 0, 1, 0, 0, 1) == 1  # CCW
    assert orient2d(0, 0, 0, 1, 1, 0) == -1  # CW
    assert orient2d(0, 0, 1, 1, 2, 2) == 0  # collinear on the lattice


def test_orientation_near_degenerate_resolved_exactly():
    # bump below any float-filter certainty: the exact path must decide
    eps = 2.0**-50
    assert orient2d(0.0, 0.0, 1.0, 1.0, 2.0, 2.0 + eps) == 1
    assert orient2d(0.0, 0.0, 1.0, 1.0, 2.0, 2.0 - eps) == -1


def test_incircle_square_cocircular():
    # unit square corners are concyclic: the fourth corner lies exactly on
    # the circumcircle of the other three
    assert incircle(0, 0, 2, 0, 2, 2, 0, 2) == 0
    assert incircle(0, 0, 2, 0, 2, 2, 1, 1) == 1  # center strictly inside
    assert incircle(0, 0, 2, 0, 2, 2, 5, 5) == -1


def test_incircle_lattice_cases():
    # 3-4-5 style integer configurations stay exact
    assert incircle(0, 0, 4, 0, 0, 4, 4, 4) == 0
    assert incircle(0, 0, 4, 0, 0, 4, 3, 3) == 1
    assert incircle(0, 0, 4, 0, 0, 4, 4.000000001, 4) == -1


coords = st.floats(
    min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False
)


@settings(max_examples=300, deadline=None)
@given(coords, coords, coords, coords, coords, coords)
def test_orient_matches_exact_oracle(ax, ay, bx, by, cx, cy):
    assert orient2d(ax, ay, bx, by, cx, cy) == orient_oracle(ax, ay, bx, by, cx, cy)


@settings(max_examples=300, deadline=None)
@given(coords, coords, coords, coords, coords, coords, coords, coords)
def test_incircle_matches_exact_oracle(ax, ay, bx, by, cx, cy, dx, dy):
    assert incircle(ax, ay, bx, by, cx, cy, dx, dy) == incircle_oracle(
        ax, ay, bx, by, cx, cy, dx, dy
    )


@settings(max_examples=150, deadline=None)
@given(
    st.integers(-50, 50),
    st.integers(-50, 50),
    st.integers(-50, 50),
    st.integers(-50, 50),
    st.integers(-50, 50),
    st.integers(-50, 50),
)
def test_orient_on_integer_lattice(ax, ay, bx, by, cx, cy):
    # pixel lattices are the common degenerate case; ties must be exact zeros
    assert orient2d(ax, ay, bx, by, cx, cy) == orient_oracle(ax, ay, bx, by, cx, cy)
