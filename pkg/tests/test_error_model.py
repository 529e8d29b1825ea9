import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from support import lattice

from skyconst.constellation import Constellation, OffLatticeError
from skyconst.error_model import (
    HoverModel,
    constellation_error_probability,
    monte_carlo_pe,
    nearest_symbol,
    neighbor_counts,
    q_function,
    symbol_error_probability,
    symbol_regions,
)
from skyconst.geometry import PolarPoint

HOVER = HoverModel(1.0, 0.05)


def q_oracle(x):
    # direct quadrature of the standard normal tail
    mpmath.mp.dps = 30
    return float(
        mpmath.quad(lambda t: mpmath.exp(-t * t / 2), [x, mpmath.inf]) / mpmath.sqrt(2 * mpmath.pi)
    )


def test_q_values():
    assert q_function(0.0) == 0.5
    assert q_function(1.0) == pytest.approx(q_oracle(1.0), rel=1e-12)
    assert q_function(1.0) == pytest.approx(0.158655, abs=5e-7)
    for x in (0.5, 2.0, 3.7, 6.0):
        assert q_function(x) == pytest.approx(q_oracle(x), rel=1e-10)


@settings(max_examples=200, deadline=None)
@given(st.floats(-30, 30))
def test_q_symmetry(x):
    assert q_function(x) + q_function(-x) == pytest.approx(1.0, abs=1e-12)


def test_q_vectorized():
    x = np.array([0.0, 1.0, -1.0])
    np.testing.assert_allclose(q_function(x), [0.5, q_function(1.0), 1 - q_function(1.0)])


def test_neighbor_profiles():
    pair = Constellation((PolarPoint(0, 5), PolarPoint(0, 6)), 18.0, 1.0)
    assert [tuple(neighbor_counts(pair, i)) for i in range(2)] == [(0, 1), (0, 1)]
    g42 = lattice(2, 4)
    assert tuple(neighbor_counts(g42, 0)) == (1, 1)
    g33 = lattice(3, 3)
    assert tuple(neighbor_counts(g33, 4)) == (2, 2)


def test_off_lattice_rejected():
    with pytest.raises(OffLatticeError):
        Constellation((PolarPoint(0, 5), PolarPoint(0, 5.55)), 2.0, 0.1)


def test_regions_open_on_edges():
    regs = symbol_regions(lattice(1, 2, d_rho=1.0))
    assert regs[0].rho_low == -math.inf and regs[0].rho_high == pytest.approx(5.5)
    assert regs[1].rho_low == pytest.approx(5.5) and regs[1].rho_high == math.inf
    assert regs[0].theta_low == -math.inf and regs[0].theta_high == math.inf


def test_table_rows():
    h = HoverModel(1.0, 0.5)
    qt, qr = q_function(1.5), q_function(0.7)
    d_t, d_r = 3.0, 0.7
    expect = {
        (0, 1): qr,
        (0, 2): 2 * qr,
        (1, 0): qt,
        (2, 0): 2 * qt,
        (1, 1): 1 - (1 - qt) * (1 - qr),
        (2, 1): 1 - (1 - 2 * qt) * (1 - qr),
        (1, 2): 1 - (1 - qt) * (1 - 2 * qr),
        (2, 2): 1 - (1 - 2 * qt) * (1 - 2 * qr),
        (0, 0): 0.0,
    }
    for prof, val in expect.items():
        assert symbol_error_probability(prof, d_t, d_r, h) == pytest.approx(val, abs=1e-15)


def test_one_one_example():
    h = HoverModel(1.0, 1.0)
    expected = 1 - (1 - q_oracle(1.0)) ** 2
    assert symbol_error_probability((1, 1), 2.0, 2.0, h) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(0.2921390182628590, rel=1e-12)
    assert symbol_error_probability((2, 2), 1e6, 1e6, h) == 0.0


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 20), st.floats(0.1, 20), st.integers(0, 2), st.integers(0, 2))
def test_axis_swap_symmetry(a, b, n1, n2):
    h = HoverModel(1.0, 1.0)
    assert symbol_error_probability((n1, n2), a, b, h) == pytest.approx(
        symbol_error_probability((n2, n1), b, a, h), abs=1e-15
    )


@settings(max_examples=100, deadline=None)
@given(
    st.floats(0.1, 10),
    st.floats(0.1, 10),
    st.floats(1.0, 2.0),
    st.integers(0, 2),
    st.integers(0, 2),
)
def test_monotone_in_spacing(a, b, k, n1, n2):
    h = HoverModel(1.0, 1.0)
    base = symbol_error_probability((n1, n2), a, b, h)
    assert symbol_error_probability((n1, n2), a * k, b, h) <= base + 1e-15
    assert symbol_error_probability((n1, n2), a, b * k, h) <= base + 1e-15


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 10), st.floats(0.1, 10))
def test_edges_no_worse_than_interior(a, b):
    h = HoverModel(1.0, 1.0)
    p22 = symbol_error_probability((2, 2), a, b, h)
    for prof in ((2, 1), (1, 2), (1, 1), (1, 0), (0, 1), (2, 0), (0, 2), (0, 0)):
        assert symbol_error_probability(prof, a, b, h) <= p22 + 1e-15


def test_constellation_average():
    assert constellation_error_probability(lattice(1, 1), HOVER) == 0.0
    pair = lattice(2, 1, d_theta=2.0)
    assert constellation_error_probability(pair, HOVER) == pytest.approx(q_function(1.0), abs=1e-15)
    g = lattice(2, 2, d_theta=2.0, d_rho=0.1)
    assert constellation_error_probability(g, HOVER) == pytest.approx(0.2921390182628590, rel=1e-12)


def test_mc_zero_noise_limits():
    pair = lattice(1, 2, d_rho=1.0)
    assert monte_carlo_pe(pair, HoverModel(1e-9, 1e-9), 10_000, rng=1)[0] == 0.0
    # spacing 26 dB above sigma on both axes
    wide = lattice(2, 2, d_theta=0.1 * 10**2.6, d_rho=0.05 * 10**2.6)
    assert monte_carlo_pe(wide, HoverModel(0.1, 0.05), 10**6, rng=2)[0] == 0.0


@pytest.mark.parametrize("shape", [(2, 2), (3, 3), (2, 4), (1, 3)])
@pytest.mark.parametrize("decision", ["region", "nearest"])
def test_mc_agrees_with_analytic(shape, decision):
    c = lattice(*shape, d_theta=2.0, d_rho=0.1)
    p, half = monte_carlo_pe(c, HOVER, 200_000, rng=sum(shape), decision=decision)
    assert abs(p - constellation_error_probability(c, HOVER)) <= 3 * half


def test_mc_independent_of_worker_count():
    c = lattice(2, 2)
    a = monte_carlo_pe(c, HOVER, 200_000, rng=5, workers=1)
    b = monte_carlo_pe(c, HOVER, 200_000, rng=5, workers=3)
    assert a == b


def test_mc_rejects_bad_input():
    with pytest.raises(ValueError):
        monte_carlo_pe(lattice(2, 2), HOVER, 0)
    with pytest.raises(ValueError):
        monte_carlo_pe(lattice(2, 2), HOVER, 10, decision="vote")


def test_nearest_symbol_ties_to_lower_index():
    c = lattice(1, 2, d_rho=1.0)
    assert list(nearest_symbol([0.0, 0.0, 0.0], [5.5, 5.2, 5.9], c)) == [0, 0, 1]
