"""Lattice geometry, many-fermion bases, and sparse lattice Hamiltonians.

Covers the spinless t-V model on chains and square lattices and the spinful
Hubbard model, with per-axis antiperiodic/periodic boundary conditions.
Antiperiodic is the default everywhere.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from . import bits

ANTIPERIODIC = "antiperiodic"
PERIODIC = "periodic"

#: Hard site-count ceilings for exact diagonalization.
ED_LIMIT_SPINLESS = 20
ED_LIMIT_SPINFUL = 12

TV_SPINLESS = "tV_spinless"
HUBBARD_SPINFUL = "Hubbard_spinful"


@dataclass(frozen=True)
class LatticeSpec:
    """Geometry of a chain (dimension 1) or square lattice (dimension 2)."""

    dimension: int
    sites_per_direction: tuple[int, ...]
    lattice_constant_a: float = 1.0
    boundary: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.dimension not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.dimension}")
        sites = tuple(int(n) for n in self.sites_per_direction)
        object.__setattr__(self, "sites_per_direction", sites)
        if len(sites) != self.dimension:
            raise ValueError(
                f"sites_per_direction {sites} does not match dimension {self.dimension}"
            )
        if any(n < 2 for n in sites):
            raise ValueError("each axis needs at least 2 sites")
        if self.lattice_constant_a <= 0:
            raise ValueError("lattice constant must be positive")
        bc = self.boundary or tuple(ANTIPERIODIC for _ in range(self.dimension))
        bc = tuple(str(b) for b in bc)
        if len(bc) != self.dimension or any(
            b not in (ANTIPERIODIC, PERIODIC) for b in bc
        ):
            raise ValueError(f"bad boundary spec {bc!r}")
        object.__setattr__(self, "boundary", bc)

    @property
    def n_sites(self) -> int:
        return math.prod(self.sites_per_direction)

    def site_index(self, coords: Sequence[int]) -> int:
        idx = 0
        stride = 1
        for length, c in zip(self.sites_per_direction, coords):
            idx += (c % length) * stride
            stride *= length
        return idx

    def site_coords(self, index: int) -> tuple[int, ...]:
        coords = []
        for length in self.sites_per_direction:
            coords.append(index % length)
            index //= length
        return tuple(coords)

    def sublattice_sign(self, index: int) -> int:
        """(-1)**(sum of coordinates): the two-sublattice (checkerboard) sign."""
        return -1 if sum(self.site_coords(index)) & 1 else 1

    def bonds(self) -> list[tuple[int, int, int]]:
        """Nearest-neighbor bonds as (i, j, phase), each unordered pair once.

        phase is -1 for the wrap-around hop of an antiperiodic axis, else +1.
        Axes of length 2 keep the single bond (open convention): the wrap bond
        would duplicate the same site pair.
        """
        out = []
        for index in range(self.n_sites):
            coords = self.site_coords(index)
            for axis in range(self.dimension):
                length = self.sites_per_direction[axis]
                if coords[axis] == length - 1:
                    if length == 2:
                        continue  # wrap would duplicate the single bond
                    nbr = list(coords)
                    nbr[axis] = 0
                    phase = -1 if self.boundary[axis] == ANTIPERIODIC else 1
                    out.append((index, self.site_index(nbr), phase))
                else:
                    nbr = list(coords)
                    nbr[axis] += 1
                    out.append((index, self.site_index(nbr), 1))
        return out

    def coordination(self) -> float:
        """Average number of bonds per site (uniform on our even lattices)."""
        return 2.0 * len(self.bonds()) / self.n_sites


@dataclass(frozen=True)
class ModelParams:
    """Couplings of the t-V (spinless) or Hubbard (spinful) model."""

    t: float = 1.0
    V: float = 0.0
    U: float = 0.0
    mu: float = 0.0
    model_kind: str = TV_SPINLESS

    def __post_init__(self) -> None:
        if self.t < 0:
            raise ValueError("hopping t must be nonnegative")
        if self.model_kind == TV_SPINLESS:
            if self.V < 0:
                raise ValueError("V must be nonnegative")
            if self.U != 0:
                raise ValueError("U is not active in the t-V model")
        elif self.model_kind == HUBBARD_SPINFUL:
            if self.U < 0:
                raise ValueError("U must be nonnegative")
            if self.V != 0:
                raise ValueError("V is not active in the Hubbard model")
        else:
            raise ValueError(f"unknown model_kind {self.model_kind!r}")

    @property
    def spinful(self) -> bool:
        return self.model_kind == HUBBARD_SPINFUL


@dataclass(frozen=True, eq=False)
class FockBasis:
    """Fixed particle-number many-fermion basis of bit-encoded words.

    For the spinful case `n_particles` is the count per spin species and a
    word packs the up modes into bits 0..n_sites-1, the down modes into bits
    n_sites..2*n_sites-1.
    """

    n_sites: int
    n_particles: int
    n_species: int
    states: tuple[int, ...]
    index_map: dict[int, int] = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.states)

    @property
    def n_modes(self) -> int:
        return self.n_sites * self.n_species


def build_basis(
    spec: LatticeSpec,
    n_particles: int,
    model_kind: str = TV_SPINLESS,
    ed_limit: int | None = None,
) -> FockBasis:
    """Enumerate the fixed-number sector in ascending bit-word order."""
    n = spec.n_sites
    spinful = model_kind == HUBBARD_SPINFUL
    if model_kind not in (TV_SPINLESS, HUBBARD_SPINFUL):
        raise ValueError(f"unknown model_kind {model_kind!r}")
    limit = ed_limit if ed_limit is not None else (
        ED_LIMIT_SPINFUL if spinful else ED_LIMIT_SPINLESS
    )
    if n > limit:
        raise ValueError(
            f"{n} sites exceeds the ED limit {limit} for {model_kind}"
        )
    if not 0 <= n_particles <= n:
        raise ValueError(
            f"particle count {n_particles} out of range for {n} sites"
        )
    words = bits.popcount_words(n, n_particles)
    if spinful:
        states = tuple(
            up | (dn << n) for dn in words for up in words
        )
        n_species = 2
    else:
        states = tuple(words)
        n_species = 1
    index_map = {w: i for i, w in enumerate(states)}
    return FockBasis(
        n_sites=n,
        n_particles=n_particles,
        n_species=n_species,
        states=states,
        index_map=index_map,
    )


@dataclass(frozen=True, eq=False)
class SparseOperator:
    """Thin wrapper over a CSR matrix acting on a FockBasis sector."""

    matrix: sp.csr_matrix

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return self.matrix @ v

    def expectation(self, state: np.ndarray) -> float:
        """<state|O|state> for Hermitian O; imaginary part must be tiny."""
        if state.shape[0] != self.dim:
            raise ValueError("state dimension does not match operator")
        val = np.vdot(state, self.matrix @ state)
        if abs(val.imag) > 1e-12 * max(1.0, abs(val.real)):
            raise ValueError(f"expectation not real: {val}")
        return float(val.real)

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def hermiticity_defect(self) -> float:
        d = self.matrix - self.matrix.conj().T
        return 0.0 if d.nnz == 0 else float(np.abs(d.data).max())


def _check_basis(spec: LatticeSpec, params: ModelParams, basis: FockBasis) -> None:
    if basis.n_sites != spec.n_sites:
        raise ValueError("basis was built for a different lattice")
    want_species = 2 if params.spinful else 1
    if basis.n_species != want_species:
        raise ValueError("basis species count does not match model_kind")


def build_hamiltonian(
    spec: LatticeSpec, params: ModelParams, basis: FockBasis
) -> SparseOperator:
    """Sparse matrix of the model Hamiltonian on the given number sector.

    t-V:      -t sum_<ij> (c†_i c_j + h.c.) + (V/2) sum_<ij> n_i n_j - mu sum_i n_i
    Hubbard:  -t sum_<ij>,sigma (...) + U sum_i n_iu n_id - mu sum_i,sigma n_i,sigma

    The nn sums run over unordered pairs, each once; antiperiodic axes give the
    wrap-around hop an extra -1.
    """
    _check_basis(spec, params, basis)
    n = spec.n_sites
    bonds = spec.bonds()
    species = range(basis.n_species)
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for col, word in enumerate(basis.states):
        diag = 0.0
        occ_total = 0
        for site in range(n):
            occ = sum((word >> (site + s * n)) & 1 for s in species)
            occ_total += occ
            diag -= params.mu * occ
        if params.model_kind == TV_SPINLESS:
            for i, j, _ in bonds:
                diag += 0.5 * params.V * ((word >> i) & 1) * ((word >> j) & 1)
        else:
            for site in range(n):
                diag += params.U * ((word >> site) & 1) * ((word >> (site + n)) & 1)
        if diag != 0.0:
            rows.append(col)
            cols.append(col)
            vals.append(diag)
        for s in species:
            off = s * n
            for i, j, phase in bonds:
                for dst, src in ((i + off, j + off), (j + off, i + off)):
                    hopped = bits.hop(word, dst, src)
                    if hopped is None:
                        continue
                    new_word, sign = hopped
                    rows.append(basis.index_map[new_word])
                    cols.append(col)
                    vals.append(-params.t * phase * sign)
    mat = sp.coo_matrix(
        (vals, (rows, cols)), shape=(basis.dim, basis.dim), dtype=np.float64
    ).tocsr()
    mat.eliminate_zeros()
    return SparseOperator(matrix=mat)


def _diag_operator(basis: FockBasis, diag: np.ndarray) -> SparseOperator:
    return SparseOperator(matrix=sp.diags(diag, format="csr"))


def site_occupation_diagonal(basis: FockBasis, site: int) -> np.ndarray:
    """Diagonal of n_site (summed over species) in the basis order."""
    n = basis.n_sites
    return np.array(
        [
            sum((w >> (site + s * n)) & 1 for s in range(basis.n_species))
            for w in basis.states
        ],
        dtype=np.float64,
    )


def number_operator(basis: FockBasis) -> SparseOperator:
    diag = np.array(
        [w.bit_count() for w in basis.states], dtype=np.float64
    )
    return _diag_operator(basis, diag)


def site_density_operator(basis: FockBasis, site: int) -> SparseOperator:
    return _diag_operator(basis, site_occupation_diagonal(basis, site))


def staggered_diagonal(spec: LatticeSpec, basis: FockBasis) -> np.ndarray:
    """Diagonal of M = sum_i (-1)^(sublattice) n_i."""
    signs = np.array(
        [spec.sublattice_sign(i) for i in range(spec.n_sites)], dtype=np.float64
    )
    diag = np.zeros(basis.dim)
    for site in range(spec.n_sites):
        diag += signs[site] * site_occupation_diagonal(basis, site)
    return diag


def staggered_operator(spec: LatticeSpec, basis: FockBasis) -> SparseOperator:
    return _diag_operator(basis, staggered_diagonal(spec, basis))


def staggered_density_rms(
    state: np.ndarray, spec: LatticeSpec, basis: FockBasis
) -> float:
    """sqrt(<M^2>)/n_sites: staggered order parameter of a (possibly symmetric)
    finite-size ground state.  Equals 1/2 on the classical two-sublattice CDW."""
    m = staggered_diagonal(spec, basis)
    weight = np.abs(state) ** 2
    return float(math.sqrt(float(weight @ (m * m)))) / spec.n_sites


def density_profile(state: np.ndarray, basis: FockBasis) -> np.ndarray:
    weight = np.abs(state) ** 2
    return np.array(
        [
            float(weight @ site_occupation_diagonal(basis, site))
            for site in range(basis.n_sites)
        ]
    )


def nn_density_operator(spec: LatticeSpec, basis: FockBasis) -> SparseOperator:
    """sum_<ij> n_i n_j over unordered nn pairs (diagonal)."""
    occ = np.array(
        [site_occupation_diagonal(basis, site) for site in range(spec.n_sites)]
    )
    diag = np.zeros(basis.dim)
    for i, j, _ in spec.bonds():
        diag += occ[i] * occ[j]
    return _diag_operator(basis, diag)


def density_fourier_operator(
    spec: LatticeSpec, basis: FockBasis, mode_numbers: Sequence[int]
) -> SparseOperator:
    """rho(p) = sum_j exp(i p.x_j) n_j as a (diagonal, complex) matrix.

    p_axis = 2*pi*mode_numbers[axis] / (L_axis * a).  Any two of these commute
    exactly on the lattice: the anomaly only appears in the continuum limit.
    """
    if len(mode_numbers) != spec.dimension:
        raise ValueError("one mode number per axis required")
    diag = np.zeros(basis.dim, dtype=np.complex128)
    for site in range(spec.n_sites):
        coords = spec.site_coords(site)
        phase = sum(
            2.0 * math.pi * m * c / length
            for m, c, length in zip(mode_numbers, coords, spec.sites_per_direction)
        )
        diag += np.exp(1j * phase) * site_occupation_diagonal(basis, site)
    return SparseOperator(matrix=sp.diags(diag, format="csr"))


def translation_operator(spec: LatticeSpec, basis: FockBasis) -> SparseOperator:
    """One-site translation c_i -> c_{i+1 mod L} on a chain, with fermion signs.

    For an antiperiodic chain the wrapped operator picks up -1 (the magnetic
    translation), so the operator commutes with the Hamiltonian exactly.
    Spinless 1D only; used to verify the sign bookkeeping.
    """
    if spec.dimension != 1 or basis.n_species != 1:
        raise ValueError("translation operator implemented for spinless chains")
    length = spec.sites_per_direction[0]
    twist = -1 if spec.boundary[0] == ANTIPERIODIC else 1
    rows, cols, vals = [], [], []
    for col, word in enumerate(basis.states):
        modes = [m for m in range(length) if (word >> m) & 1]
        images = [(m + 1) % length for m in modes]
        sign = 1
        if (length - 1) in modes:
            sign *= twist
        # sign of the permutation sorting the image list
        inversions = sum(
            1
            for a in range(len(images))
            for b in range(a + 1, len(images))
            if images[a] > images[b]
        )
        if inversions & 1:
            sign = -sign
        new_word = 0
        for m in images:
            new_word |= 1 << m
        rows.append(basis.index_map[new_word])
        cols.append(col)
        vals.append(float(sign))
    mat = sp.coo_matrix(
        (vals, (rows, cols)), shape=(basis.dim, basis.dim), dtype=np.float64
    ).tocsr()
    return SparseOperator(matrix=mat)


def single_particle_energies(spec: LatticeSpec, params: ModelParams) -> np.ndarray:
    """Tight-binding levels -2t sum_axis cos(k_axis a) - mu on the exact grid.

    Antiperiodic axes quantize k_axis*a in (2*pi/L)(Z + 1/2), periodic ones in
    (2*pi/L)Z.  Requires every axis length > 2 (length-2 axes use the open
    single-bond convention, which this closed form does not describe).
    """
    if any(length <= 2 for length in spec.sites_per_direction):
        raise ValueError("closed form needs every axis longer than 2 sites")
    axis_angles = []
    for length, bc in zip(spec.sites_per_direction, spec.boundary):
        shift = 0.5 if bc == ANTIPERIODIC else 0.0
        axis_angles.append(
            2.0 * math.pi * (np.arange(length) + shift) / length
        )
    if spec.dimension == 1:
        levels = -2.0 * params.t * np.cos(axis_angles[0])
    else:
        c1 = np.cos(axis_angles[0])[:, None]
        c2 = np.cos(axis_angles[1])[None, :]
        levels = (-2.0 * params.t * (c1 + c2)).ravel()
    return np.sort(levels) - params.mu


def free_fermion_ground_energy(
    spec: LatticeSpec, params: ModelParams, n_particles: int
) -> float:
    """Filled-Fermi-sea energy of the V=0 (U=0) model: sum of lowest levels."""
    levels = single_particle_energies(spec, params)
    return float(np.sum(levels[:n_particles]))


def particle_hole_mu(spec: LatticeSpec, V: float) -> float:
    """Chemical potential making the t-V model particle-hole symmetric.

    At mu = V*z/4 (z the uniform coordination) the spectra of the n- and
    (N-n)-particle sectors coincide with zero shift on bipartite lattices
    with even axis lengths.
    """
    return V * spec.coordination() / 4.0
