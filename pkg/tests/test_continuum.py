"""Derived constants, BZ partition, dispersions, and cutoff functions."""
from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nodal_bosonize.continuum import (
    DerivedConstants,
    MomentumGrid2D,
    PartitionParams,
    RegionLabel,
    antinodal_dispersion,
    check_gamma_identity,
    classify_momentum,
    coupling_1d,
    cutoff_chi,
    derive_constants,
    filling_1d,
    lattice_band_2d,
    measured_filling_2d,
    momentum_grid,
    nodal_dispersion,
    region_centers,
    rotated_components,
    step_theta,
)
from nodal_bosonize.lattice import ModelParams

FIG_PARAMS = PartitionParams(Q=0.45 * math.pi, kappa=0.8, a=1.0, L=40.0)


def constants(V: float = 1.0, t: float = 1.0, mu0: float = 0.0) -> DerivedConstants:
    return derive_constants(FIG_PARAMS, ModelParams(t=t, V=V), mu0=mu0)


# ------------------------------------------------------------ constants


def test_constants_frozen_values():
    c = constants(V=1.0)
    assert c.gamma == pytest.approx(0.03143909632798954, rel=1e-14)
    assert abs(c.gamma - 0.031439) < 1e-6
    assert c.a_tilde == pytest.approx(7.0710678118654755, rel=1e-14)
    assert c.vF_1d == pytest.approx(1.9753766811902755, rel=1e-14)
    assert c.vF_2d == pytest.approx(2.7936044933348416, rel=1e-14)
    assert c.cF == pytest.approx(2.0)
    assert c.g_tilde == pytest.approx(2.0)


def test_constants_formulas_direct():
    t, V, a = 1.3, 0.7, 0.9
    params = PartitionParams(Q=0.3 * math.pi, kappa=0.4, a=a, L=36 * a)
    c = derive_constants(params, ModelParams(t=t, V=V), mu0=0.25)
    sq = math.sin(params.Q)
    assert c.vF_1d == pytest.approx(2 * t * a * sq, rel=1e-15)
    assert c.g_1d == pytest.approx(2 * a * V * sq * sq / math.pi, rel=1e-15)
    assert c.vF_2d == pytest.approx(2 * math.sqrt(2) * sq * t * a, rel=1e-15)
    assert c.cF == pytest.approx(2 * t * a * a, rel=1e-15)
    assert c.a_tilde == pytest.approx(math.sqrt(2) * a / 0.6, rel=1e-15)
    assert c.g_2d == pytest.approx(2 * V * a * a * sq * sq, rel=1e-15)
    assert c.g_tilde == pytest.approx(2 * V * a * a, rel=1e-15)
    assert c.mu0 == 0.25
    assert check_gamma_identity(c, params, ModelParams(t=t, V=V)) < 1e-14


def test_free_case_couplings_vanish():
    c = constants(V=0.0)
    assert c.gamma == 0.0
    assert c.g_1d == 0.0
    assert c.g_2d == 0.0
    assert c.g_tilde == 0.0


def test_parameter_validation():
    with pytest.raises(ValueError, match="exclusion window"):
        PartitionParams(Q=math.pi / 2, kappa=0.5)
    with pytest.raises(ValueError, match="exclusion window"):
        PartitionParams(Q=math.pi / 2 + 1e-9, kappa=0.5)
    with pytest.raises(ValueError, match="kappa"):
        PartitionParams(Q=0.4 * math.pi, kappa=1.0)
    with pytest.raises(ValueError, match="kappa"):
        PartitionParams(Q=0.4 * math.pi, kappa=0.0)
    with pytest.raises(ValueError, match="not an integer"):
        PartitionParams(Q=0.4 * math.pi, kappa=0.5, a=1.0, L=10.5)
    # window is configurable
    PartitionParams(Q=math.pi / 2 + 1e-9, kappa=0.5, q_exclusion=1e-10)


def test_filling_1d():
    assert filling_1d(FIG_PARAMS) == pytest.approx(0.45)


# ------------------------------------------------------------ partition


def test_region_centers_classified_to_themselves():
    centers = region_centers(FIG_PARAMS)
    for (r, s), k in centers.items():
        label = classify_momentum(k, FIG_PARAMS)
        assert (label.r, label.s) == (r, s), f"center {(r, s)} got {label}"


def test_label_validation():
    with pytest.raises(ValueError):
        RegionLabel(r=0, s=1)
    with pytest.raises(ValueError):
        RegionLabel(r=1, s=3)


def test_grid_audit_40():
    grid = momentum_grid(FIG_PARAMS)
    assert grid.n_points == 1600
    counts = grid.region_counts()
    assert sum(counts.values()) == 1600
    corner = counts[(1, 2)] + counts[(-1, 2)]
    antinodal = counts[(1, 0)] + counts[(-1, 0)]
    nodal = sum(counts[(r, s)] for r in (1, -1) for s in (1, -1))
    assert corner + antinodal + nodal == 1600
    # The rotated half-integer sampling is incommensurate with the zone
    # torus, so strip membership depends on one rotated component only:
    # 6 of the 40 axis values land inside each strip at these parameters.
    # The counts follow the product structure exactly.
    assert corner == 6 * 6
    assert nodal == 2 * 6 * 34
    assert antinodal == 34 * 34
    # continuum area fractions (0.04 / 0.64 / 0.32) order the counts
    assert antinodal > nodal > corner
    # exchanging k_+ <-> k_- is a grid symmetry swapping the two strips
    s_plus = sum(counts[(r, 1)] for r in (1, -1))
    s_minus = sum(counts[(r, -1)] for r in (1, -1))
    assert s_plus == s_minus


def test_grid_points_distinct_on_torus():
    params = PartitionParams(Q=0.45 * math.pi, kappa=0.8, a=1.0, L=12.0)
    grid = momentum_grid(params)
    assert grid.n_points == 144
    period = 2 * math.pi
    seen = set()
    for k1, k2 in zip(grid.k1, grid.k2):
        key = (round(k1 % period, 9), round(k2 % period, 9))
        assert key not in seen
        seen.add(key)
    # half-integer quantization of the rotated components
    step = 2 * math.pi / params.L
    for kp in grid.kplus:
        n = kp / step - 0.5
        assert abs(n - round(n)) < 1e-9


@settings(max_examples=150, deadline=None, derandomize=True)
@given(
    k1=st.floats(-math.pi, math.pi, allow_nan=False),
    k2=st.floats(-math.pi, math.pi, allow_nan=False),
    m=st.integers(-2, 2),
    n=st.integers(-2, 2),
)
def test_classifier_total_and_periodic(k1, k2, m, n):
    label = classify_momentum((k1, k2), FIG_PARAMS)
    assert label.r in (1, -1) and label.s in (1, -1, 0, 2)
    shifted = classify_momentum(
        (k1 + 2 * math.pi * m, k2 + 2 * math.pi * n), FIG_PARAMS
    )
    assert (shifted.r, shifted.s) == (label.r, label.s)


# ------------------------------------------------------------ dispersions


def test_nodal_dispersion_values():
    c = constants()
    assert nodal_dispersion(1, 1, (0.0, 0.0), c) == 0.0
    k = (0.2, -0.2)  # k_+ = 0
    assert nodal_dispersion(1, 1, k, c) == pytest.approx(0.0, abs=1e-15)
    k = (0.1 / math.sqrt(2), 0.1 / math.sqrt(2))  # k_+ = 0.1
    val = nodal_dispersion(1, 1, k, c)
    assert val == pytest.approx(0.2793604493334842, rel=1e-12)
    assert abs(val - 0.27936) < 1e-5
    assert nodal_dispersion(-1, 1, k, c) == pytest.approx(-val, rel=1e-15)


def test_nodal_remainder_quadratic():
    c = constants()
    model = ModelParams(t=1.0)
    center = region_centers(FIG_PARAMS)[(1, 1)]
    mu_shift = -4.0 * math.cos(FIG_PARAMS.Q)  # -4t cos Q
    mags = np.logspace(-3, -1, 15)
    direction = (math.cos(0.3), math.sin(0.3))
    errs = []
    for m in mags:
        k = (m * direction[0], m * direction[1])
        exact = lattice_band_2d((center[0] + k[0], center[1] + k[1]), model, FIG_PARAMS)
        linear = nodal_dispersion(1, 1, k, c)
        errs.append(abs(exact - mu_shift - linear))
    slope = np.polyfit(np.log(mags), np.log(errs), 1)[0]
    assert slope >= 1.9


def test_antinodal_dispersion_values():
    c = constants(mu0=0.3)
    assert antinodal_dispersion(1, (0.0, 0.0), c) == pytest.approx(-0.3)
    assert antinodal_dispersion(1, (0.17, 0.17), c) == pytest.approx(-0.3)
    c0 = constants()
    assert antinodal_dispersion(1, (0.1, 0.0), c0) == pytest.approx(-0.01, rel=1e-12)
    assert antinodal_dispersion(-1, (0.1, 0.0), c0) == pytest.approx(0.01, rel=1e-12)


def test_antinodal_remainder_cubic_or_better():
    c = constants()
    model = ModelParams(t=1.0)
    center = region_centers(FIG_PARAMS)[(1, 0)]
    mags = np.logspace(-3, -1, 15)
    direction = (math.cos(0.4), math.sin(0.4))
    errs = []
    for m in mags:
        k = (m * direction[0], m * direction[1])
        exact = lattice_band_2d((center[0] + k[0], center[1] + k[1]), model, FIG_PARAMS)
        errs.append(abs(exact - antinodal_dispersion(1, k, c)))
    slope = np.polyfit(np.log(mags), np.log(errs), 1)[0]
    assert slope >= 2.9


# ------------------------------------------------------------ cutoffs


def test_theta_zero_is_zero():
    assert step_theta(0.0) == 0
    assert step_theta(-1e-300) == 0
    assert step_theta(1e-300) == 1


def test_cutoff_chi_values():
    c = constants()
    assert cutoff_chi(1, (0.0, 0.0), c, FIG_PARAMS) == 1
    assert cutoff_chi(-1, (0.0, 0.0), c, FIG_PARAMS) == 1
    # |p_{-s}| = 2 pi / a_tilde: beyond the transverse cutoff
    h = 2 * math.pi / c.a_tilde / math.sqrt(2)
    assert cutoff_chi(1, (h, -h), c, FIG_PARAMS) == 0
    # frozen example: p = (0.3, 0.2), s = +1
    pp, pm = rotated_components((0.3, 0.2))
    assert abs(pm) < math.pi / c.a_tilde < 0.4443
    assert abs(pp) < 1.7772
    assert cutoff_chi(1, (0.3, 0.2), c, FIG_PARAMS) == 1
    # longitudinal cutoff
    big = 1.9 / math.sqrt(2)
    assert cutoff_chi(1, (big, big), c, FIG_PARAMS) == 0


def test_coupling_1d():
    c = constants(V=2.0)
    assert coupling_1d(0.0, c, FIG_PARAMS) == pytest.approx(
        1.242081155280107, rel=1e-14
    )
    assert coupling_1d(2 * math.pi, c, FIG_PARAMS) == 0.0
    # theta(0) = 0 exactly at |p| a = pi
    assert coupling_1d(math.pi, c, FIG_PARAMS) == 0.0
    assert coupling_1d(-0.5, c, FIG_PARAMS) == coupling_1d(0.5, c, FIG_PARAMS)


# ------------------------------------------------------------ filling proxy


def test_measured_filling_near_half():
    grid = momentum_grid(FIG_PARAMS)
    f = measured_filling_2d(grid, constants())
    # proxy, not a closed form: linearized sea on an incommensurate sample
    assert 0.4 < f < 0.7
    assert f == 904 / 1600
    assert f == measured_filling_2d(grid, constants())
