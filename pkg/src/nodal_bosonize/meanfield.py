"""Hartree mean-field solvers: CDW order in the 2D t-V model with Maxwell
construction and phase diagram, plus the antinodal hyperbolic-band gap
equation.

t-V conventions match `lattice`: interaction (V/2) sum over unordered nn
pairs, so the per-bond coupling is g = V/2 and the coordination number is
z = 4.  The staggered Hartree ansatz <n_i> = nu + (-1)^i delta gives the
one-body gap Delta_g = g z delta = 2 V delta, two bands +-sqrt(eps^2 +
Delta_g^2), and the coded energy density

    e(delta, nu) = band_fill / N + (V z / 4)(nu^2 + delta^2).

Writing m for the staggered density the filled determinant actually carries,
e(delta, nu) exceeds the determinant's Hartree energy by exactly
(V z / 4)(delta - m)^2 >= 0, and dropping the exchange term only raises the
estimate further, so e is a variational upper bound on the exact ground
energy density whenever the quadrature momenta are the exact lattice momenta
(the midpoint grid at grid_size = L reproduces an antiperiodic L x L
lattice).

The momentum quadrature is a midpoint rule on the shifted grid
k = -pi + 2 pi (i + 1/2)/n, which avoids the zone corners and van Hove
points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._parallel import parallel_map
from .continuum import DerivedConstants, PartitionParams
from .lattice import ModelParams

Z_COORDINATION = 4
DELTA_THRESHOLD = 1e-4
HULL_TOL = 1e-9
MIN_FILLING_SAMPLES = 41
MIN_AXIS_SAMPLES = 21
HULL_REFINE_DEFAULT = 4
SCAN_POINTS = 61
GOLDEN_TOL = 1e-7
GAP_TOL_DEFAULT = 1e-10
MAX_BISECTION_STEPS = 200

NORMAL = "Normal"
CDW = "CDW"
MIXED = "Mixed"

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class ConvergenceError(RuntimeError):
    """A bisection failed to reach its tolerance."""


@dataclass(frozen=True)
class MeanFieldState:
    """Optimal staggered state at one filling: order parameter delta,
    filling nu, chemical potential (band Fermi level plus uniform Hartree
    shift), and energy per site."""

    delta: float
    nu: float
    mu: float
    energy_density: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.delta <= 0.5:
            raise ValueError(f"delta = {self.delta} outside [0, 1/2]")
        if not 0.0 <= self.nu <= 1.0:
            raise ValueError(f"nu = {self.nu} outside [0, 1]")
        if not math.isfinite(self.energy_density):
            raise ValueError("energy_density must be finite")


@dataclass(frozen=True)
class EnergyCurve:
    """Minimized energy density and optimal delta per filling."""

    nu_grid: tuple[float, ...]
    e_of_nu: tuple[float, ...]
    delta_of_nu: tuple[float, ...]

    def __post_init__(self) -> None:
        if any(b <= a for a, b in zip(self.nu_grid, self.nu_grid[1:])):
            raise ValueError("nu_grid must be strictly increasing")
        if not len(self.nu_grid) == len(self.e_of_nu) == len(self.delta_of_nu):
            raise ValueError("curve arrays differ in length")


@dataclass(frozen=True)
class MaxwellResult:
    """Maxwell construction over an energy curve: lower convex hull values,
    per-sample phase labels, and the mixed (phase-separated) intervals."""

    curve: EnergyCurve
    hull_e: tuple[float, ...]
    labels: tuple[str, ...]
    mixed_intervals: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class PhaseDiagramGrid:
    """Phase labels (and the underlying delta, e) on a (nu, V) grid;
    labels[i][j] belongs to v_values[i], nu_values[j]."""

    nu_values: tuple[float, ...]
    v_values: tuple[float, ...]
    labels: tuple[tuple[str, ...], ...]
    delta: tuple[tuple[float, ...], ...]
    energy: tuple[tuple[float, ...], ...]


@dataclass(frozen=True)
class AntinodalState:
    """Self-consistent antinodal gap at fixed filling proxy nu_a; `gap` is
    an energy (not a density), hence the dedicated type."""

    gap: float
    nu_a: float
    mu: float
    energy_density: float
    gapped: bool


def _midpoint_axis(n_k: int) -> np.ndarray:
    return -math.pi + 2.0 * math.pi * (np.arange(n_k) + 0.5) / n_k


def dispersion_grid(model: ModelParams, n_k: int) -> np.ndarray:
    """Tight-binding band -2t(cos kx + cos ky) on the shifted midpoint grid,
    flattened; at n_k = L this is exactly the antiperiodic L x L spectrum."""
    if n_k < 2 or n_k % 2 != 0:
        raise ValueError(f"grid_size = {n_k} must be even and >= 2")
    k = _midpoint_axis(n_k)
    kx, ky = np.meshgrid(k, k, indexing="ij")
    return (-2.0 * model.t * (np.cos(kx) + np.cos(ky))).ravel()


def _band_fill(bands: np.ndarray, nu: float) -> tuple[float, float]:
    """(energy sum per site, Fermi level) for filling nu of the symmetric
    two-band spectrum {-B(k), +B(k)} with per-k weight 1/2."""
    n_g = bands.size
    m = 2.0 * nu * n_g  # half-weighted states to fill
    if nu <= 0.5:
        # all filled states sit on the -B branch: take the m largest B
        m_int = int(math.floor(m + 1e-12))
        frac = m - m_int
        if frac < 1e-12:
            frac = 0.0
        total = 0.0
        fermi = 0.0
        if m_int > 0:
            part = np.partition(bands, n_g - m_int)
            total = -float(np.sum(part[n_g - m_int :]))
            fermi = -float(part[n_g - m_int])
        if frac > 0.0:
            boundary = float(np.partition(bands, n_g - m_int - 1)[n_g - m_int - 1])
            total -= frac * boundary
            fermi = -boundary
        return total / (2.0 * n_g), fermi
    # nu > 1/2: lower band full, fill the m - n_g smallest of +B
    lower = -float(np.sum(bands))
    m_rest = m - n_g
    m_int = int(math.floor(m_rest + 1e-12))
    frac = m_rest - m_int
    if frac < 1e-12:
        frac = 0.0
    total = lower
    fermi = 0.0
    if m_int > 0:
        part = np.partition(bands, m_int - 1)
        total += float(np.sum(part[:m_int]))
        fermi = float(part[m_int - 1])
    if frac > 0.0:
        boundary = float(np.partition(bands, m_int)[m_int])
        total += frac * boundary
        fermi = boundary
    return total / (2.0 * n_g), fermi


def _occupations(bands: np.ndarray, nu: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-momentum occupation fractions (f_lower, f_upper) realizing
    filling nu; degenerate boundary values share the leftover weight."""
    n_g = bands.size
    m = 2.0 * nu * n_g

    def fill(values: np.ndarray, weight: float) -> np.ndarray:
        # fill `weight` states from the bottom of `values`
        occ = np.zeros_like(values)
        if weight <= 0.0:
            return occ
        if weight >= values.size:
            occ[:] = 1.0
            return occ
        order = np.sort(values)
        idx = int(math.floor(weight + 1e-12))
        boundary = order[min(idx, values.size - 1)]
        occ[values < boundary] = 1.0
        ties = values == boundary
        leftover = weight - float(np.count_nonzero(values < boundary))
        occ[ties] = leftover / float(np.count_nonzero(ties))
        return occ

    f_lower = fill(-bands, min(m, float(n_g)))
    f_upper = fill(bands, max(m - n_g, 0.0))
    return f_lower, f_upper


def _exchange_energy(
    model: ModelParams, n_k: int, delta: float, nu: float
) -> float:
    """Exchange (Fock) energy per site of the staggered determinant:
    -g * sum over the site's x and y bonds of (tau_uniform^2 +
    tau_staggered^2)."""
    k = _midpoint_axis(n_k)
    kx, ky = np.meshgrid(k, k, indexing="ij")
    eps = -2.0 * model.t * (np.cos(kx) + np.cos(ky))
    gap = 0.5 * Z_COORDINATION * model.V * delta
    bands = np.sqrt(eps * eps + gap * gap)
    ratio = np.divide(eps, bands, out=np.zeros_like(eps), where=bands > 0.0)
    coher = np.divide(
        np.full_like(eps, gap), 2.0 * bands, out=np.zeros_like(eps),
        where=bands > 0.0,
    )
    f_lower, f_upper = _occupations(bands.ravel(), nu)
    f_lower = f_lower.reshape(eps.shape)
    f_upper = f_upper.reshape(eps.shape)
    occ_k = f_lower * 0.5 * (1.0 - ratio) + f_upper * 0.5 * (1.0 + ratio)
    g_k = (f_lower - f_upper) * coher
    g_bond = 0.5 * model.V
    energy = 0.0
    for trig in (np.cos(kx), np.cos(ky)):
        tau_u = float(np.mean(trig * occ_k))
        tau_s = float(np.mean(trig * g_k))
        energy -= g_bond * (tau_u * tau_u + tau_s * tau_s)
    return energy


def mf_energy_tV(
    delta: float,
    nu: float,
    model: ModelParams,
    grid_size: int = 256,
    include_fock: bool = False,
) -> float:
    """Hartree energy density at order parameter delta and filling nu."""
    if not 0.0 <= delta <= 0.5:
        raise ValueError(f"delta = {delta} outside [0, 1/2]")
    if not 0.0 <= nu <= 1.0:
        raise ValueError(f"nu = {nu} outside [0, 1]")
    eps = dispersion_grid(model, grid_size)
    energy = _energy_from_eps(eps, delta, nu, model.V)
    if include_fock:
        energy += _exchange_energy(model, grid_size, delta, nu)
    return energy


def _energy_from_eps(
    eps: np.ndarray, delta: float, nu: float, v: float
) -> float:
    gap = 0.5 * Z_COORDINATION * v * delta
    bands = np.sqrt(eps * eps + gap * gap)
    band_energy, _ = _band_fill(bands, nu)
    hartree = 0.25 * Z_COORDINATION * v * (nu * nu + delta * delta)
    return band_energy + hartree


def _fermi_from_eps(eps: np.ndarray, delta: float, nu: float, v: float) -> float:
    gap = 0.5 * Z_COORDINATION * v * delta
    bands = np.sqrt(eps * eps + gap * gap)
    _, fermi = _band_fill(bands, nu)
    return fermi + 0.5 * Z_COORDINATION * v * nu


def minimize_delta(
    nu: float,
    model: ModelParams,
    grid_size: int = 256,
    include_fock: bool = False,
) -> MeanFieldState:
    """Global minimum over delta: 61-point scan on [0, 1/2] refined by
    golden-section search between the best sample's neighbours."""
    if not 0.0 <= nu <= 1.0:
        raise ValueError(f"nu = {nu} outside [0, 1]")
    eps = dispersion_grid(model, grid_size)

    def energy(delta: float) -> float:
        e = _energy_from_eps(eps, delta, nu, model.V)
        if include_fock:
            e += _exchange_energy(model, grid_size, delta, nu)
        return e

    deltas = [0.5 * i / (SCAN_POINTS - 1) for i in range(SCAN_POINTS)]
    values = [energy(d) for d in deltas]
    best = min(range(SCAN_POINTS), key=lambda i: (values[i], i))
    lo = deltas[max(best - 1, 0)]
    hi = deltas[min(best + 1, SCAN_POINTS - 1)]
    # golden-section refinement (deterministic, fixed shrink ratio)
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = energy(x1), energy(x2)
    while hi - lo > GOLDEN_TOL:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = energy(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = energy(x2)
    candidates = [(values[best], deltas[best]), (f1, x1), (f2, x2)]
    e_best, d_best = min(candidates)
    if d_best < GOLDEN_TOL and energy(0.0) <= e_best:
        d_best, e_best = 0.0, energy(0.0)
    return MeanFieldState(
        delta=d_best,
        nu=nu,
        mu=_fermi_from_eps(eps, d_best, nu, model.V),
        energy_density=e_best,
    )


def energy_curve(
    model: ModelParams,
    nu_values: "list[float] | tuple[float, ...]",
    grid_size: int = 256,
    include_fock: bool = False,
    threads: int = 1,
) -> EnergyCurve:
    """Minimize over delta at each filling (parallel over fillings)."""
    states = parallel_map(
        lambda nu: minimize_delta(nu, model, grid_size, include_fock),
        nu_values,
        threads=threads,
    )
    return EnergyCurve(
        nu_grid=tuple(float(nu) for nu in nu_values),
        e_of_nu=tuple(s.energy_density for s in states),
        delta_of_nu=tuple(s.delta for s in states),
    )


def _lower_hull(xs: list[float], ys: list[float]) -> list[int]:
    """Indices of the lower convex hull vertices (monotone chain)."""
    hull: list[int] = []
    for i in range(len(xs)):
        while len(hull) >= 2:
            j, k = hull[-2], hull[-1]
            cross = (xs[k] - xs[j]) * (ys[i] - ys[j]) - (xs[i] - xs[j]) * (
                ys[k] - ys[j]
            )
            if cross <= 0.0:  # middle point k is not strictly below the chord
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def maxwell_construction(curve: EnergyCurve) -> MaxwellResult:
    """Lower convex hull of e(nu); samples where the hull lies below the
    curve by more than 1e-9 are Mixed, the rest are CDW or Normal by the
    optimal delta."""
    n = len(curve.nu_grid)
    if n < MIN_FILLING_SAMPLES:
        raise ValueError(
            f"Maxwell construction needs >= {MIN_FILLING_SAMPLES} filling "
            f"samples, got {n}"
        )
    xs = list(curve.nu_grid)
    ys = list(curve.e_of_nu)
    hull_idx = _lower_hull(xs, ys)
    hull_e: list[float] = []
    seg = 0
    for i in range(n):
        while seg + 1 < len(hull_idx) - 1 and xs[hull_idx[seg + 1]] <= xs[i]:
            seg += 1
        j, k = hull_idx[seg], hull_idx[min(seg + 1, len(hull_idx) - 1)]
        if k == j:
            hull_e.append(ys[j])
        else:
            frac = (xs[i] - xs[j]) / (xs[k] - xs[j])
            hull_e.append(ys[j] + frac * (ys[k] - ys[j]))
    labels: list[str] = []
    for i in range(n):
        if hull_e[i] < ys[i] - HULL_TOL:
            labels.append(MIXED)
        elif curve.delta_of_nu[i] > DELTA_THRESHOLD:
            labels.append(CDW)
        else:
            labels.append(NORMAL)
    intervals: list[tuple[float, float]] = []
    start = None
    for i, label in enumerate(labels):
        if label == MIXED and start is None:
            start = i
        if label != MIXED and start is not None:
            intervals.append((xs[start], xs[i - 1]))
            start = None
    if start is not None:
        intervals.append((xs[start], xs[n - 1]))
    return MaxwellResult(
        curve=curve,
        hull_e=tuple(hull_e),
        labels=tuple(labels),
        mixed_intervals=tuple(intervals),
    )


def _refined_fillings(
    nu_values: tuple[float, ...], refine: int
) -> tuple[tuple[float, ...], tuple[int, ...]]:
    """The requested fillings plus ``refine - 1`` evenly spaced interior
    points per interval; returns (fine grid, indices of the requested
    points within it)."""
    fine: list[float] = []
    for j in range(len(nu_values) - 1):
        lo, hi = nu_values[j], nu_values[j + 1]
        fine.append(lo)
        for m in range(1, refine):
            fine.append(lo + (hi - lo) * m / refine)
    fine.append(nu_values[-1])
    return tuple(fine), tuple(j * refine for j in range(len(nu_values)))


def phase_diagram(
    t: float,
    nu_values: "list[float] | tuple[float, ...]",
    v_values: "list[float] | tuple[float, ...]",
    grid_size: int = 128,
    include_fock: bool = False,
    threads: int = 1,
    hull_refine: int = HULL_REFINE_DEFAULT,
) -> PhaseDiagramGrid:
    """Label the (nu, V) grid by per-V Maxwell construction (parallel over
    V rows).

    The energy curve handed to the hull is sampled ``hull_refine`` times
    finer than the output grid: a phase-separation window only slightly
    wider than one output cell can leave its interior sample below every
    chord of the coarse sample set, so a hull built on the output grid
    alone would keep that sample as a vertex and mislabel the cell as a
    pure phase.  The requested fillings stay in the fine grid exactly, so
    per-cell delta and energy are unchanged by the refinement.
    """
    if len(nu_values) < MIN_FILLING_SAMPLES:
        raise ValueError(
            f"need >= {MIN_FILLING_SAMPLES} filling samples, "
            f"got {len(nu_values)}"
        )
    if len(v_values) < MIN_AXIS_SAMPLES:
        raise ValueError(
            f"need >= {MIN_AXIS_SAMPLES} V samples, got {len(v_values)}"
        )
    if hull_refine < 1:
        raise ValueError(f"hull_refine = {hull_refine} must be >= 1")
    nus = tuple(float(nu) for nu in nu_values)
    if any(b <= a for a, b in zip(nus, nus[1:])):
        raise ValueError("filling samples must be strictly increasing")
    fine_nu, picks = _refined_fillings(nus, hull_refine)

    def one_row(v: float):
        model = ModelParams(t=t, V=v)
        curve = energy_curve(model, fine_nu, grid_size, include_fock)
        result = maxwell_construction(curve)
        return (
            tuple(result.labels[i] for i in picks),
            tuple(curve.delta_of_nu[i] for i in picks),
            tuple(curve.e_of_nu[i] for i in picks),
        )

    rows = parallel_map(one_row, v_values, threads=threads)
    return PhaseDiagramGrid(
        nu_values=nus,
        v_values=tuple(float(v) for v in v_values),
        labels=tuple(r[0] for r in rows),
        delta=tuple(r[1] for r in rows),
        energy=tuple(r[2] for r in rows),
    )


def _antinodal_grids(
    c: DerivedConstants, params: PartitionParams, n_k: int
) -> tuple[np.ndarray, float]:
    """(hyperbolic band xi = cF k+ k- on the antinodal midpoint grid,
    momentum cell area)."""
    if n_k < 2 or n_k % 2 != 0:
        raise ValueError(f"n_k = {n_k} must be even and >= 2")
    p_max = params.kappa * math.pi / (math.sqrt(2.0) * params.a)
    step = 2.0 * p_max / n_k
    axis = -p_max + step * (np.arange(n_k) + 0.5)
    kp, km = np.meshgrid(axis, axis, indexing="ij")
    return (c.cF * kp * km).ravel(), step * step


def _antinodal_filling(xi: np.ndarray, gap: float, mu: float) -> float:
    bands = np.sqrt(xi * xi + gap * gap)
    filled = np.count_nonzero(mu + bands > 0.0) + np.count_nonzero(
        mu - bands > 0.0
    )
    return 0.5 * filled / xi.size


def _solve_mu(xi: np.ndarray, gap: float, nu_a: float) -> float:
    """Chemical potential reaching filling nu_a (monotone bisection)."""
    b_max = float(np.max(np.sqrt(xi * xi + gap * gap)))
    lo, hi = -b_max - 1.0, b_max + 1.0
    for _ in range(MAX_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if _antinodal_filling(xi, gap, mid) < nu_a:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12:
            return 0.5 * (lo + hi)
    raise ConvergenceError("mu bisection did not converge")


def antinodal_mf(
    c: DerivedConstants,
    params: PartitionParams,
    nu_a: float,
    n_k: int = 128,
    gap_tol: float = GAP_TOL_DEFAULT,
) -> AntinodalState:
    """Self-consistent gap for the two antinodal flavors with bands
    -r xi(k) - mu and the bare inter-flavor coupling g (bare-coupling
    approximation).

    Order parameter: Delta = g * Int d^2k/(2 pi)^2 (n_- - n_+) Delta/(2B),
    B = sqrt(xi^2 + Delta^2), with mu re-solved for the target filling at
    every step; the nontrivial root is found by bisection on (0, g].
    """
    if not 0.0 <= nu_a <= 1.0:
        raise ValueError(f"nu_a = {nu_a} outside [0, 1]")
    xi, cell = _antinodal_grids(c, params, n_k)
    measure = cell / (4.0 * math.pi * math.pi)
    g = c.g_tilde

    def defect(gap: float) -> float:
        """g * I(gap) - gap; positive below the self-consistent root."""
        mu = _solve_mu(xi, gap, nu_a)
        bands = np.sqrt(xi * xi + gap * gap)
        occ_diff = (mu + bands > 0.0).astype(float) - (mu - bands > 0.0)
        integral = float(np.sum(occ_diff * gap / (2.0 * bands)) * measure)
        return g * integral - gap

    def energy(gap: float) -> tuple[float, float]:
        # canonical energy at the target filling: mu only selects the
        # occupations, the summed band energies are -+B themselves
        mu = _solve_mu(xi, gap, nu_a)
        bands = np.sqrt(xi * xi + gap * gap)
        n_minus = (mu + bands > 0.0).astype(float)
        n_plus = (mu - bands > 0.0).astype(float)
        band_part = float(np.sum(bands * (n_plus - n_minus)) * measure)
        constant = gap * gap / g if g > 0.0 else 0.0
        return band_part + constant, mu

    if g <= 0.0 or defect(gap_tol) <= 0.0:
        e0, mu = energy(0.0)
        return AntinodalState(
            gap=0.0, nu_a=nu_a, mu=mu, energy_density=e0, gapped=False
        )
    lo, hi = gap_tol, g
    if defect(hi) > 0.0:
        raise ConvergenceError("gap equation not bracketed on (0, g]")
    for _ in range(MAX_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if defect(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < gap_tol:
            gap = 0.5 * (lo + hi)
            e0, mu = energy(gap)
            return AntinodalState(
                gap=gap, nu_a=nu_a, mu=mu, energy_density=e0, gapped=True
            )
    raise ConvergenceError("gap bisection did not converge")
