"""Symplectic (Bogoliubov) diagonalization of quadratic boson Hamiltonians.

A block at fixed momentum is H = (1/2)(pi^T A pi + phi^T B phi) with A
(`pi_block`) and B (`phi_block`) real symmetric positive definite.  The
normal-mode frequencies are the square roots of the eigenvalues of
A^{1/2} B A^{1/2}; the returned transform acts on the stacked coordinates
(phi, pi) and preserves the canonical symplectic form.

Builders cover the 1D Luttinger block, with coefficients vF(1 - gamma(p)) and
vF(1 + gamma(p)) p^2 and gamma(p) = v(p)/(2 pi vF), and the two-mode nodal
(Mattis) block with sharp cutoff factors chi_s.  The printed cross term
gamma(p) p_+ p_- is implemented two ways: "intermode" couples the s = + and
s = - Phi modes (off-diagonal entries, the default), "literal" adds it to
both diagonal Phi coefficients.

A non-positive-definite block means the boson vacuum is unstable at that
momentum; this raises InstabilityError and is never clamped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._parallel import parallel_map
from .continuum import (
    DerivedConstants,
    PartitionParams,
    cutoff_chi,
    rotated_components,
)

SYMMETRY_TOL = 1e-12
CROSS_TERM_MODES = ("intermode", "literal")


class InstabilityError(ValueError):
    """A quadratic boson block is not positive definite."""


def _fmt_momentum(p: "float | tuple[float, float]") -> str:
    if isinstance(p, tuple):
        return "(" + ", ".join(f"{x:.6g}" for x in p) + ")"
    return f"{p:.6g}"


def _as_symmetric(
    name: str, block: object, momentum: "float | tuple[float, float]"
) -> np.ndarray:
    arr = np.array(block, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {arr.shape}")
    scale = float(np.max(np.abs(arr)))
    if float(np.max(np.abs(arr - arr.T))) > SYMMETRY_TOL * max(scale, 1.0):
        raise ValueError(
            f"{name} is not symmetric at p = {_fmt_momentum(momentum)}"
        )
    arr = 0.5 * (arr + arr.T)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class QuadraticBosonForm:
    """One momentum block H = (1/2)(pi^T A pi + phi^T B phi).

    `free_frequencies` is the decoupled reference spectrum subtracted when
    reporting the zero-point energy (normal-ordering reference); None means
    no subtraction.
    """

    momentum_p: "float | tuple[float, float]"
    pi_block: np.ndarray
    phi_block: np.ndarray
    free_frequencies: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        a = _as_symmetric("pi_block", self.pi_block, self.momentum_p)
        b = _as_symmetric("phi_block", self.phi_block, self.momentum_p)
        if a.shape != b.shape:
            raise ValueError(
                f"pi_block {a.shape} and phi_block {b.shape} differ in shape"
            )
        object.__setattr__(self, "pi_block", a)
        object.__setattr__(self, "phi_block", b)
        if self.free_frequencies is not None:
            free = tuple(float(w) for w in self.free_frequencies)
            if len(free) != a.shape[0]:
                raise ValueError(
                    f"free_frequencies has {len(free)} entries for "
                    f"{a.shape[0]} modes"
                )
            if any(w < 0.0 for w in free):
                raise ValueError("free_frequencies must be >= 0")
            object.__setattr__(self, "free_frequencies", free)

    @property
    def n_modes(self) -> int:
        return int(self.pi_block.shape[0])


@dataclass(frozen=True)
class BogoliubovResult:
    """Normal modes of one block: frequencies ascending, transform acting on
    (phi, pi) with S J S^T = J, and zero-point energy with the free
    reference subtracted."""

    momentum_p: "float | tuple[float, float]"
    frequencies: np.ndarray
    transform: np.ndarray
    zero_point_energy: float

    @property
    def n_modes(self) -> int:
        return int(self.frequencies.shape[0])

    def free_energy(self, temperature: float) -> float:
        """zero_point + T * sum_i log(1 - exp(-omega_i / T)); T = 0 returns
        the zero point."""
        if temperature < 0.0:
            raise ValueError(f"temperature = {temperature} must be >= 0")
        if temperature == 0.0:
            return self.zero_point_energy
        thermal = math.fsum(
            math.log1p(-math.exp(-w / temperature)) for w in self.frequencies
        )
        return self.zero_point_energy + temperature * thermal


def symplectic_form(n_modes: int) -> np.ndarray:
    """Canonical J on stacked (phi, pi): [[0, I], [-I, 0]]."""
    n = n_modes
    j = np.zeros((2 * n, 2 * n))
    j[:n, n:] = np.eye(n)
    j[n:, :n] = -np.eye(n)
    return j


def symplectic_defect(transform: np.ndarray) -> float:
    """max |S J S^T - J|, zero for an exactly symplectic S."""
    n2 = int(transform.shape[0])
    j = symplectic_form(n2 // 2)
    return float(np.max(np.abs(transform @ j @ transform.T - j)))


def diagonalize(form: QuadraticBosonForm) -> BogoliubovResult:
    """Normal modes of H = (1/2)(pi^T A pi + phi^T B phi).

    omega_i^2 are the eigenvalues of A^{1/2} B A^{1/2}; the new coordinates
    are phi' = X phi, pi' = Y pi with X = Omega^{1/2} U^T A^{-1/2} and
    Y = Omega^{-1/2} U^T A^{1/2}, so X Y^T = 1 and
    H = (1/2) sum_i omega_i (phi'_i^2 + pi'_i^2).
    """
    a = form.pi_block
    b = form.phi_block
    wa, va = np.linalg.eigh(a)
    if wa[0] <= 0.0:
        raise InstabilityError(
            f"pi block not positive definite at p = "
            f"{_fmt_momentum(form.momentum_p)} (min eigenvalue {wa[0]:.6g})"
        )
    wb = np.linalg.eigvalsh(b)
    if wb[0] <= 0.0:
        raise InstabilityError(
            f"phi block not positive definite at p = "
            f"{_fmt_momentum(form.momentum_p)} (min eigenvalue {wb[0]:.6g})"
        )
    root = (va * np.sqrt(wa)) @ va.T
    inv_root = (va / np.sqrt(wa)) @ va.T
    w = root @ b @ root
    w = 0.5 * (w + w.T)
    w2, u = np.linalg.eigh(w)
    if w2[0] <= 0.0:
        raise InstabilityError(
            f"reduced block not positive definite at p = "
            f"{_fmt_momentum(form.momentum_p)} (min eigenvalue {w2[0]:.6g})"
        )
    freqs = np.sqrt(w2)
    x = (u * np.sqrt(freqs)).T @ inv_root
    y = (u / np.sqrt(freqs)).T @ root
    n = form.n_modes
    s = np.zeros((2 * n, 2 * n))
    s[:n, :n] = x
    s[n:, n:] = y
    free = form.free_frequencies
    free_sum = math.fsum(free) if free is not None else 0.0
    zero_point = 0.5 * (math.fsum(freqs.tolist()) - free_sum)
    freqs.setflags(write=False)
    s.setflags(write=False)
    return BogoliubovResult(form.momentum_p, freqs, s, float(zero_point))


def luttinger_block_1d(
    p: float,
    c: DerivedConstants,
    coupling_fn: Callable[[float], float],
) -> QuadraticBosonForm:
    """1-mode block vF(1 - gamma(p)) pi^2 + vF(1 + gamma(p)) p^2 phi^2 with
    gamma(p) = coupling_fn(p)/(2 pi vF); gamma = 0 gives omega = vF |p|."""
    if p == 0.0:
        raise ValueError("p = 0 is a zero mode and is excluded")
    v_f = c.vF_1d
    gamma = coupling_fn(p) / (2.0 * math.pi * v_f)
    if abs(gamma) >= 1.0:
        raise InstabilityError(
            f"|gamma({p:.6g})| = {abs(gamma):.6g} >= 1: boson vacuum unstable"
        )
    a = [[v_f * (1.0 - gamma)]]
    b = [[v_f * (1.0 + gamma) * p * p]]
    return QuadraticBosonForm(float(p), a, b, (v_f * abs(p),))


def mattis_blocks_2d(
    p: tuple[float, float],
    c: DerivedConstants,
    params: PartitionParams,
    cross_term: str = "intermode",
) -> QuadraticBosonForm:
    """Two-mode (s = +/-) nodal block at cartesian momentum p.

    Diagonals: vF(1 - gamma_s) for pi, vF(1 + gamma_s) p_s^2 for phi, with
    gamma_s = gamma chi_s(p).  The cross term gamma chi_+ chi_- p_+ p_- is
    placed off-diagonally between the two phi modes ("intermode") or added
    to both phi diagonals ("literal").
    """
    if cross_term not in CROSS_TERM_MODES:
        raise ValueError(
            f"cross_term = {cross_term!r} not in {CROSS_TERM_MODES}"
        )
    p_plus, p_minus = rotated_components(p)
    if p_plus == 0.0 or p_minus == 0.0:
        raise ValueError(
            f"p = {_fmt_momentum(tuple(p))} has a zero rotated component; "
            "zero modes are excluded"
        )
    v_f = c.vF_2d
    chi_plus = cutoff_chi(1, p, c, params)
    chi_minus = cutoff_chi(-1, p, c, params)
    g_plus = c.gamma * chi_plus
    g_minus = c.gamma * chi_minus
    for sign, g_s in (("+", g_plus), ("-", g_minus)):
        if abs(g_s) >= 1.0:
            raise InstabilityError(
                f"|gamma_{sign}| = {abs(g_s):.6g} >= 1 at p = "
                f"{_fmt_momentum(tuple(p))}: boson vacuum unstable"
            )
    cross = v_f * c.gamma * chi_plus * chi_minus * p_plus * p_minus
    a = [[v_f * (1.0 - g_plus), 0.0], [0.0, v_f * (1.0 - g_minus)]]
    diag_plus = v_f * (1.0 + g_plus) * p_plus * p_plus
    diag_minus = v_f * (1.0 + g_minus) * p_minus * p_minus
    if cross_term == "intermode":
        b = [[diag_plus, cross], [cross, diag_minus]]
    else:
        b = [[diag_plus + cross, 0.0], [0.0, diag_minus + cross]]
    free = tuple(sorted((v_f * abs(p_plus), v_f * abs(p_minus))))
    return QuadraticBosonForm((float(p[0]), float(p[1])), a, b, free)


@dataclass(frozen=True)
class NodalBosonGrid:
    """Midpoint grid over the rotated square p_+/- in (-p_max, p_max], which
    covers the support of both cutoff factors; momenta are cartesian and
    cell_area is the (rotation-invariant) momentum-cell area."""

    momenta: tuple[tuple[float, float], ...]
    cell_area: float
    n_per_axis: int
    p_max: float


def nodal_boson_grid(
    params: PartitionParams, c: DerivedConstants, n_per_axis: int
) -> NodalBosonGrid:
    """Build the n x n midpoint grid; n must be even so no rotated component
    vanishes (zero modes excluded)."""
    if n_per_axis < 2 or n_per_axis % 2 != 0:
        raise ValueError(f"n_per_axis = {n_per_axis} must be even and >= 2")
    p_max = (
        max(params.kappa, 1.0 - params.kappa)
        * math.pi
        / (math.sqrt(2.0) * params.a)
    )
    step = 2.0 * p_max / n_per_axis
    axis = [-p_max + (i + 0.5) * step for i in range(n_per_axis)]
    inv = 1.0 / math.sqrt(2.0)
    momenta = tuple(
        ((pp + pm) * inv, (pp - pm) * inv) for pp in axis for pm in axis
    )
    return NodalBosonGrid(momenta, step * step, n_per_axis, p_max)


def nodal_spectrum(
    grid: NodalBosonGrid,
    c: DerivedConstants,
    params: PartitionParams,
    cross_term: str = "intermode",
    threads: int = 1,
) -> list[tuple[float, float, float, float]]:
    """Rows (p_+, p_-, omega_1, omega_2) over the grid, frequencies
    ascending, in grid order."""

    def solve(p: tuple[float, float]) -> tuple[float, float, float, float]:
        res = diagonalize(mattis_blocks_2d(p, c, params, cross_term))
        pp, pm = rotated_components(p)
        return (pp, pm, float(res.frequencies[0]), float(res.frequencies[1]))

    return parallel_map(solve, grid.momenta, threads=threads)


def ground_and_free_energy(
    grid: NodalBosonGrid,
    c: DerivedConstants,
    params: PartitionParams,
    temperature: float = 0.0,
    cross_term: str = "intermode",
    threads: int = 1,
) -> tuple[float, float]:
    """(E0 density, F(T) density) over the grid.

    E0 = sum_p zero_point(p) * cell/(2 pi)^2 and F(T) adds the thermal term
    T sum log(1 - exp(-omega/T)) per mode; sums are exactly rounded
    (math.fsum), so results are bit-identical for any thread count.
    """
    if temperature < 0.0:
        raise ValueError(f"temperature = {temperature} must be >= 0")

    def solve(p: tuple[float, float]) -> tuple[float, float]:
        res = diagonalize(mattis_blocks_2d(p, c, params, cross_term))
        return res.zero_point_energy, res.free_energy(temperature)

    pairs = parallel_map(solve, grid.momenta, threads=threads)
    measure = grid.cell_area / (4.0 * math.pi * math.pi)
    e0 = math.fsum(zp for zp, _ in pairs) * measure
    f_t = math.fsum(ft for _, ft in pairs) * measure
    return e0, f_t


def truncated_oscillator_levels(
    form: QuadraticBosonForm, max_occupation: int, n_levels: int = 4
) -> np.ndarray:
    """Lowest eigenvalues of the block in a product number basis with
    per-mode occupation <= max_occupation.

    Independent route: H is assembled from ladder matrices, never through
    the symplectic solver.  Each basis oscillator is width-matched to its
    diagonal, phi_i = s_i (a + a^dag)/sqrt(2) and
    pi_i = i (a^dag - a)/(s_i sqrt(2)) with s_i = (A_ii/B_ii)^(1/4), which
    preserves the CCR for any s_i > 0 and makes the truncation converge in
    the residual couplings only.  The first gap approximates the lowest
    frequency and the ground energy approximates (1/2) sum omega_i.

    Caveat: projected products corrupt the top-occupation diagonal, leaving
    spurious edge levels near (cap/2) omega; keep max_occupation >= 4 so
    they sit above the levels being compared.
    """
    if max_occupation < 1:
        raise ValueError("max_occupation must be >= 1")
    n = form.n_modes
    a = form.pi_block
    b = form.phi_block
    if any(a[i, i] <= 0.0 or b[i, i] <= 0.0 for i in range(n)):
        raise InstabilityError(
            f"non-positive diagonal coefficient at p = "
            f"{_fmt_momentum(form.momentum_p)}"
        )
    scales = [(a[i, i] / b[i, i]) ** 0.25 for i in range(n)]
    dim1 = max_occupation + 1
    ladder = np.diag(np.sqrt(np.arange(1.0, dim1)), k=1)  # a |n> = sqrt(n)|n-1>
    q_single = (ladder + ladder.T) / math.sqrt(2.0)
    m_single = (ladder.T - ladder) / math.sqrt(2.0)  # pi = i * m / s

    def embed(op: np.ndarray, mode: int) -> np.ndarray:
        mats = [np.eye(dim1)] * n
        mats[mode] = op
        out = mats[0]
        for mat in mats[1:]:
            out = np.kron(out, mat)
        return out

    q_ops = [embed(q_single, i) for i in range(n)]
    m_ops = [embed(m_single, i) for i in range(n)]
    dim = dim1**n
    h = np.zeros((dim, dim))
    for i in range(n):
        for j in range(n):
            # pi_i pi_j = (i m_i/s_i)(i m_j/s_j) = -m_i m_j/(s_i s_j)
            h -= 0.5 * a[i, j] / (scales[i] * scales[j]) * (m_ops[i] @ m_ops[j])
            h += 0.5 * b[i, j] * scales[i] * scales[j] * (q_ops[i] @ q_ops[j])
    levels = np.linalg.eigvalsh(h)
    return levels[: min(n_levels, dim)]
