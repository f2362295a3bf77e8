"""Truncated chiral Fock spaces: density algebra, kinetic identity, CCR."""
from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from nodal_bosonize.bits import annihilate, create
from nodal_bosonize.bosonalg import (
    FAIL,
    OUTSIDE_WINDOW,
    PASS,
    ChiralSectorSpec,
    FermionMode,
    boson_modes,
    build_sector,
    build_sector_pair,
    check_anomaly_1d,
    check_anomaly_2d,
    check_boson_ccr,
    check_kronig_1d,
    check_kronig_2d,
    density_matrix,
)


def brute_force_dimension(m: int, cap2: int, blocks: int = 1, lines: int = 1) -> int:
    """Count occupation words by exhaustive enumeration (independent oracle)."""
    weights = []
    for _ in range(blocks * lines):
        weights.extend(abs(nu2) for nu2 in range(-(2 * m - 1), 2 * m, 2))
    count = 0
    for word in range(1 << len(weights)):
        total = 0
        w = word
        while w:
            low = w & -w
            total += weights[low.bit_length() - 1]
            w ^= low
        if total <= cap2:
            count += 1
    return count


# ------------------------------------------------------------ construction


def test_spec_validation():
    with pytest.raises(ValueError, match="empty momentum set"):
        ChiralSectorSpec(chirality_r=1, uv_cutoff_index=0)
    with pytest.raises(ValueError, match="chirality"):
        ChiralSectorSpec(chirality_r=0, uv_cutoff_index=2)
    with pytest.raises(ValueError, match="transverse_lines"):
        ChiralSectorSpec(chirality_r=1, uv_cutoff_index=2, transverse_lines=5)
    with pytest.raises(ValueError, match="overflow"):
        build_sector(ChiralSectorSpec(chirality_r=1, uv_cutoff_index=9))


def test_m1_has_four_states():
    for r in (1, -1):
        rep = build_sector(ChiralSectorSpec(chirality_r=r, uv_cutoff_index=1))
        assert rep.dim == 4
        assert rep.states[0] == rep.sea_word
        assert sorted(rep.energy_grading.tolist()) == [0.0, 0.5, 0.5, 1.0]


def test_dimensions_against_brute_force():
    rep3 = build_sector(
        ChiralSectorSpec(chirality_r=1, uv_cutoff_index=3), grading_cap=4
    )
    assert rep3.dim == brute_force_dimension(3, 8)
    rep4 = build_sector(ChiralSectorSpec(chirality_r=1, uv_cutoff_index=4))
    assert rep4.dim == brute_force_dimension(4, 8) == 34
    pair = build_sector_pair(uv_cutoff_index=4)
    assert pair.dim == brute_force_dimension(4, 8, blocks=2) == 242


def test_sea_annihilation_conditions():
    """The sea is killed by annihilation above it and creation below it."""
    rep = build_sector(ChiralSectorSpec(chirality_r=1, uv_cutoff_index=3))
    for bit, mode in enumerate(rep.modes):
        occupied = mode.chirality_r * mode.nu2 < 0
        assert bool(rep.sea_word >> bit & 1) == occupied
        if occupied:
            assert create(rep.sea_word, bit) is None
        else:
            assert annihilate(rep.sea_word, bit) is None


def test_grading_is_flip_cost():
    rep = build_sector_pair(uv_cutoff_index=2)
    for i, word in enumerate(rep.states):
        flips = word ^ rep.sea_word
        total = 0
        while flips:
            low = flips & -flips
            total += rep.mode_weights[low.bit_length() - 1]
            flips ^= low
        assert total == rep.grading2[i] <= rep.grading_cap2


# ------------------------------------------------------------ densities


def test_charge_operator_diagonal_integer():
    rep = build_sector_pair(uv_cutoff_index=3)
    op = density_matrix(rep, 1, 0.0)
    assert op.normal_ordered
    dense = op.matrix.toarray()
    assert np.array_equal(dense, np.diag(np.diag(dense)))
    charges = np.diag(dense)
    assert np.array_equal(charges, np.round(charges))
    assert charges[0] == 0.0  # sea charge after normal ordering


def test_density_lowering_on_sea():
    rep = build_sector(ChiralSectorSpec(chirality_r=1, uv_cutoff_index=4))
    # positive momentum annihilates the sea for the + chirality
    for n in (1, 2, 3):
        col = density_matrix(rep, 1, float(n)).matrix.getcol(0)
        assert col.nnz == 0
    # negative momentum creates one particle-hole pair per allowed hop
    for n in (1, 2, 3):
        col = density_matrix(rep, 1, float(-n)).matrix.getcol(0)
        assert col.nnz == n
        assert np.all(np.abs(col.data) == 1.0)


def test_density_off_grid_and_misuse_errors():
    rep = build_sector_pair(uv_cutoff_index=2)
    with pytest.raises(ValueError, match="off-grid"):
        density_matrix(rep, 1, 0.37)
    with pytest.raises(ValueError, match="transverse"):
        density_matrix(rep, 1, (1.0, 1))
    rep2d = build_sector(
        ChiralSectorSpec(chirality_r=1, uv_cutoff_index=2, transverse_lines=2)
    )
    with pytest.raises(ValueError, match="must be"):
        density_matrix(rep2d, 1, 1.0)
    with pytest.raises(ValueError, match="chirality"):
        density_matrix(rep2d, -1, (1.0, 0))


def test_density_hermiticity():
    pair = build_sector_pair(uv_cutoff_index=4)
    for r in (1, -1):
        for n in (0, 1, 2, 3):
            a = density_matrix(pair, r, float(n)).matrix
            b = density_matrix(pair, r, float(-n)).matrix
            assert (a.transpose() - b).nnz == 0
    rep2d = build_sector(
        ChiralSectorSpec(chirality_r=1, uv_cutoff_index=3, transverse_lines=2)
    )
    a = density_matrix(rep2d, 1, (1.0, 1)).matrix
    b = density_matrix(rep2d, 1, (-1.0, -1)).matrix
    assert (a.transpose() - b).nnz == 0


# ------------------------------------------------------------ 1D anomaly


def test_anomaly_exact_m4():
    pair = build_sector_pair(uv_cutoff_index=4)
    for n in (1, 2):
        report = check_anomaly_1d(pair, float(n), float(-n))
        assert report.status == PASS
        assert report.max_deviation == 0.0
        assert all(v == 0.0 for v in report.details.values())
        # sea expectation of J(n)J(-n) equals the anomaly coefficient n
        a = density_matrix(pair, 1, float(n)).matrix
        b = density_matrix(pair, 1, float(-n)).matrix
        assert (a @ b)[0, 0] == float(n)
        assert (b @ a)[0, 0] == 0.0


def test_anomaly_mismatched_momenta_zero():
    pair = build_sector_pair(uv_cutoff_index=4)
    report = check_anomaly_1d(pair, 1.0, -2.0)
    assert report.status == PASS
    assert report.max_deviation == 0.0


def test_anomaly_all_small_windows():
    pair = build_sector_pair(uv_cutoff_index=3)
    for n in (-1, 0, 1):
        for n2 in (-1, 0, 1):
            report = check_anomaly_1d(pair, float(n), float(n2))
            assert report.status == PASS, (n, n2)
            assert report.max_deviation == 0.0


def test_anomaly_outside_window_marked():
    pair = build_sector_pair(uv_cutoff_index=4)
    report = check_anomaly_1d(pair, 3.0, -3.0)
    assert report.status == OUTSIDE_WINDOW
    assert not report.passed


def test_anomaly_rejects_noninteger_momentum():
    pair = build_sector_pair(uv_cutoff_index=4)
    with pytest.raises(ValueError, match="off-grid"):
        check_anomaly_1d(pair, 0.5, -0.5)


# ------------------------------------------------------------ kinetic identity


@pytest.mark.parametrize("m", [1, 2, 4])
def test_kronig_exact(m):
    for r in (1, -1):
        rep = build_sector(ChiralSectorSpec(chirality_r=r, uv_cutoff_index=m))
        report = check_kronig_1d(rep)
        assert report.status == PASS
        assert report.max_deviation == 0.0
        assert report.window["prefactor_residual"] == 0.0


def test_kronig_pair_rep():
    pair = build_sector_pair(uv_cutoff_index=4)
    report = check_kronig_1d(pair)
    assert report.status == PASS
    assert report.max_deviation == 0.0


def test_kronig_window_is_necessary():
    """Widening the momentum sum beyond M//2 breaks the identity: wider
    hops reach the cutoff edge from safe states, so the truncated sum
    no longer telescopes."""
    rep = build_sector(ChiralSectorSpec(chirality_r=1, uv_cutoff_index=2))
    report = check_kronig_1d(rep, n_window=2)
    assert report.status == OUTSIDE_WINDOW
    assert report.max_deviation > 0.0


def test_kronig_needs_full_grading_cap():
    rep = build_sector(
        ChiralSectorSpec(chirality_r=1, uv_cutoff_index=4), grading_cap=2
    )
    with pytest.raises(ValueError, match="grading cap"):
        check_kronig_1d(rep)


# ------------------------------------------------------------ boson CCR


def test_boson_ccr_exact_m4():
    pair = build_sector_pair(uv_cutoff_index=4)
    report = check_boson_ccr(pair)
    assert report.status == PASS
    assert report.max_deviation == 0.0


def test_boson_modes_normalized_matrices():
    pair = build_sector_pair(uv_cutoff_index=4)
    safe = pair.safe_indices()
    for n in (1, 2):
        p = float(n)
        pi_p, phi_p = boson_modes(pair, p)
        comm = (pi_p @ phi_p.conjugate().transpose().tocsr()
                - phi_p.conjugate().transpose().tocsr() @ pi_p).toarray()
        expected = -1j * np.eye(pair.dim)
        # the sqrt(2) normalization costs one rounding step
        assert np.max(np.abs((comm - expected)[:, safe])) < 5e-16
        # adjoint relation holds to the last bit
        assert (phi_p.conjugate().transpose() - boson_modes(pair, -p)[1]).nnz == 0
    with pytest.raises(ValueError, match="zero momentum"):
        boson_modes(pair, 0.0)
    single = build_sector(ChiralSectorSpec(chirality_r=1, uv_cutoff_index=2))
    with pytest.raises(ValueError, match="both chiralities"):
        boson_modes(single, 1.0)


# ------------------------------------------------------------ 2D checks


def _rep_2d(r: int, m: int = 4, lines: int = 2):
    return build_sector(
        ChiralSectorSpec(chirality_r=r, uv_cutoff_index=m, transverse_lines=lines)
    )


def test_anomaly_2d_direct_term():
    for r in (1, -1):
        rep = _rep_2d(r)
        report = check_anomaly_2d(rep, (1.0, 0), (-1.0, 0))
        assert report.status == PASS
        assert report.max_deviation == 0.0
        # expected coefficient r * n_s * N_t: confirm against the sea
        a = density_matrix(rep, r, (1.0, 0)).matrix
        b = density_matrix(rep, r, (-1.0, 0)).matrix
        comm = (a @ b - b @ a)[0, 0]
        assert comm == r * 1 * 2


def test_anomaly_2d_umklapp_nonzero():
    rep = _rep_2d(1)
    report = check_anomaly_2d(rep, (1.0, 1), (-1.0, 1))
    assert report.status == PASS
    assert report.max_deviation == 0.0
    assert report.window["umklapp_n"] == -1
    a = density_matrix(rep, 1, (1.0, 1)).matrix
    b = density_matrix(rep, 1, (-1.0, 1)).matrix
    comm = (a @ b - b @ a)[0, 0]
    assert comm == 2.0  # r=+1, n_s=1, N_t=2: nonzero despite n_t+n_t' != 0
    # physical weight (2*pi*p_s/a_tilde) * delta_hat^2(0) reproduces it
    a_tilde = 7.0710678118654755
    lines, spacing = 2, 1.0
    delta2_zero = (2.0 * math.pi / spacing) * (lines * a_tilde) / (4.0 * math.pi**2)
    weight = (2.0 * math.pi * 1.0 * spacing / a_tilde) * delta2_zero
    assert weight == pytest.approx(comm, rel=1e-14)


def test_anomaly_2d_transverse_mismatch_zero():
    rep = _rep_2d(1)
    report = check_anomaly_2d(rep, (1.0, 1), (-1.0, 0))
    assert report.status == PASS
    assert report.max_deviation == 0.0
    assert report.window["umklapp_n"] == "none"


def test_anomaly_2d_different_flavors_commute():
    rep = _rep_2d(1)
    report = check_anomaly_2d(rep, (1.0, 0), (-1.0, 0), s=1, s_prime=-1)
    assert report.status == PASS
    assert report.max_deviation == 0.0
    assert report.check == "anomaly_2d_flavor"


def test_kronig_2d_exact_with_prefactor():
    a_tilde = 7.0710678118654755
    for r in (1, -1):
        rep = _rep_2d(r)
        report = check_kronig_2d(rep, a_tilde=a_tilde)
        assert report.status == PASS
        assert report.max_deviation == 0.0
        assert report.window["prefactor_residual"] <= 1e-14
    with pytest.raises(ValueError, match="transverse_lines"):
        check_kronig_2d(build_sector(ChiralSectorSpec(1, 4)), a_tilde=a_tilde)


def test_kronig_2d_three_lines():
    rep = build_sector(
        ChiralSectorSpec(chirality_r=1, uv_cutoff_index=2, transverse_lines=3)
    )
    report = check_kronig_2d(rep)
    assert report.status == PASS
    assert report.max_deviation == 0.0


# ------------------------------------------------------------ report plumbing


def test_report_as_dict_roundtrip():
    pair = build_sector_pair(uv_cutoff_index=2)
    report = check_anomaly_1d(pair, 1.0, -1.0)
    blob = report.as_dict()
    assert blob["passed"] is True
    assert blob["max_deviation"] == 0.0
    assert blob["subspace_dim"] == int(pair.safe_indices().size)
    assert "n" in blob["window"]
