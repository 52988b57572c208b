"""Certified dyadic histograms: sandwich bounds, moments, entropy sums."""

import numpy as np
import pytest

from selfsim import (BudgetError, PrecisionError, SpecError, dyadic_depth,
                     entropy_sum, histogram, moment_sums)


def test_lebesgue_exact(lebesgue_unit):
    """Lebesgue on [0,1]: certified lower masses hit 2^-n exactly."""
    ifs, p = lebesgue_unit
    h = histogram(ifs, p, 3)
    assert h.num_cells == 8
    assert np.allclose(h.lower, 0.125)
    # upper masses also count words touching a cell only at its boundary,
    # at most one word of mass 2^-6 per side at the default refinement
    assert np.all(h.upper >= 0.125)
    assert np.all(h.upper <= 0.125 + 2.0 ** -5 + 1e-15)
    assert h.total_lower() == pytest.approx(1.0)
    assert h.total_upper() >= 1.0


def test_cantor_level_one(cantor13):
    ifs, p = cantor13
    h = histogram(ifs, p, 1)
    assert list(h.indices) == [0, 1]
    assert np.allclose(h.lower, 0.5)
    assert np.allclose(h.upper, 0.5)


def test_sandwich_totals(cantor13, biased13, golden_bc):
    for ifs, p in (cantor13, biased13, golden_bc):
        h = histogram(ifs, p, 8)
        assert h.total_lower() <= 1.0 + 1e-12
        assert h.total_upper() >= 1.0 - 1e-12
        assert np.all(h.lower <= h.upper + 1e-15)


def test_half_mass_split(cantor13):
    """The cell boundary 1/2 lies in the middle gap, so [0,1/2) has mass 1/2."""
    ifs, p = cantor13
    h = histogram(ifs, p, 6)
    left = h.indices < 2 ** 5
    assert h.lower[left].sum() <= 0.5 + 1e-12
    assert h.upper[left].sum() >= 0.5 - 1e-12


def test_extra_depth_tightens(cantor13):
    ifs, p = cantor13
    h2 = histogram(ifs, p, 8, extra_depth=2)
    h6 = histogram(ifs, p, 8, extra_depth=6)
    gap2 = float(np.max(h2.upper - h2.lower))
    gap6 = float(np.max(h6.upper - h6.lower))
    assert gap6 <= gap2 + 1e-15
    assert h6.total_upper() - h6.total_lower() <= h2.total_upper() - h2.total_lower() + 1e-12


def test_dyadic_depth_halving(lebesgue_unit):
    ifs, _ = lebesgue_unit
    # r = 1/2: words at depth n-1 are the last with diameter above 2^-n
    assert dyadic_depth(ifs, 5, extra_depth=0) == 4
    assert dyadic_depth(ifs, 5, extra_depth=4) == 8


def test_histogram_2d(four_corner, cantor13):
    """The planar four-corner measure is the product of two Cantor factors.

    The 2D enclosure radius is larger by sqrt(2), so extra boundary cells
    may appear; those must carry no certified lower mass, and on shared
    cells the product bounds and the 2D bounds must overlap.
    """
    ifs2, p2 = four_corner
    ifs1, p1 = cantor13
    h2d = histogram(ifs2, p2, 4)
    h1d = histogram(ifs1, p1, 4)
    m1 = dict(zip(h1d.indices.tolist(), zip(h1d.lower, h1d.upper)))
    assert h2d.num_cells >= h1d.num_cells ** 2
    for (kx, ky), lo, up in zip(h2d.indices.tolist(), h2d.lower, h2d.upper):
        if kx in m1 and ky in m1:
            lo_x, up_x = m1[kx]
            lo_y, up_y = m1[ky]
            assert lo_x * lo_y <= up + 1e-15
            assert lo <= up_x * up_y + 1e-15
        else:
            assert lo <= 1e-15


def test_budget_error(cantor13):
    ifs, p = cantor13
    with pytest.raises(BudgetError):
        histogram(ifs, p, 10, word_budget=8)


def test_precision_error(cantor13):
    ifs, p = cantor13
    with pytest.raises(PrecisionError):
        histogram(ifs, p, 60)


def test_moment_sums_lebesgue(lebesgue_unit):
    ifs, p = lebesgue_unit
    h = histogram(ifs, p, 6)
    s_lo, s_up = moment_sums(h, 2.0)
    # the true moment sum is exactly 2^-6; the lower side hits it
    assert s_lo == pytest.approx(2.0 ** -6, rel=1e-12)
    assert s_lo <= 2.0 ** -6 <= s_up
    # q < 1 keeps the same bound roles since x^q is increasing
    s_lo_half, s_up_half = moment_sums(h, 0.5)
    assert s_lo_half <= 2.0 ** 3 <= s_up_half
    assert s_lo_half == pytest.approx(2.0 ** 3, rel=1e-12)


def test_moment_sums_ordering(cantor13):
    ifs, p = cantor13
    h = histogram(ifs, p, 8)
    for q in (0.5, 1.5, 2.0, 3.0):
        s_lo, s_up = moment_sums(h, q)
        assert 0.0 < s_lo <= s_up


def test_moment_sums_rejects_q_one(cantor13):
    ifs, p = cantor13
    h = histogram(ifs, p, 4)
    with pytest.raises(SpecError):
        moment_sums(h, 1.0)
    with pytest.raises(SpecError):
        moment_sums(h, -2.0)


def test_entropy_sum_lebesgue(lebesgue_unit):
    ifs, p = lebesgue_unit
    h = histogram(ifs, p, 5)
    h_lo, h_up = entropy_sum(h)
    # the true level-5 entropy is exactly 5 bits; the lower side hits it
    assert h_lo == pytest.approx(5.0, abs=1e-9)
    assert h_lo <= 5.0 + 1e-9 <= h_up + 1e-9
    assert h_up <= 6.5


def test_entropy_sum_bounds(biased13):
    ifs, p = biased13
    h = histogram(ifs, p, 9)
    h_lo, h_up = entropy_sum(h)
    assert 0.0 <= h_lo <= h_up


def test_entropy_growth(cantor13):
    ifs, p = cantor13
    mids = []
    for n in (5, 8, 11):
        h_lo, h_up = entropy_sum(histogram(ifs, p, n))
        mids.append(0.5 * (h_lo + h_up))
    assert mids[0] < mids[1] < mids[2]
