"""Partial continuum limit: derived constants, Brillouin-zone partition into
the eight momentum-region flavors, effective dispersions, and cutoff functions.

Conventions
-----------
- Rotated momentum components k_s = (k1 + s*k2)/sqrt(2) for s = +/-1.
- Step functions at cutoff boundaries use theta(0) = 0 (open cutoff sets).
- Region centers: nodal K_{r,s} = (r*Q, r*s*Q)/a for r,s in {+1,-1};
  antinodal K_{+1,0} = (pi,0)/a, K_{-1,0} = (0,pi)/a; corner K_{+1,2} =
  (pi,pi)/a, K_{-1,2} = (0,0).
- Region geometry: the two nodal strips are |k1 -+ k2| < (1-kappa)*pi/a
  (wrapped to the torus); points in both strips form the corner (s=2)
  diamonds; points in neither strip form the antinodal (s=0) diamonds; the
  split of each strip into r = +/-1 uses the nearer nodal center (Euclidean
  torus distance, ties to r=+1).  This choice makes the eight regions tile
  the zone exactly once; see `partition_metadata`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .lattice import ModelParams

Q_EXCLUSION_WINDOW = 1e-6

NODAL_S = (1, -1)
ALL_S = (1, -1, 0, 2)


@dataclass(frozen=True)
class PartitionParams:
    """Angle Q, strip fraction kappa, lattice constant a, and box length L."""

    Q: float
    kappa: float
    a: float = 1.0
    L: float = 40.0
    q_exclusion: float = Q_EXCLUSION_WINDOW

    def __post_init__(self) -> None:
        if not 0.0 < self.Q < math.pi:
            raise ValueError(f"Q = {self.Q} outside (0, pi)")
        if abs(self.Q - math.pi / 2.0) < self.q_exclusion:
            raise ValueError(
                f"Q = {self.Q} inside the exclusion window around pi/2 "
                f"(|Q - pi/2| >= {self.q_exclusion} required)"
            )
        if not 0.0 < self.kappa < 1.0:
            raise ValueError(f"kappa = {self.kappa} outside (0, 1)")
        if self.a <= 0 or self.L <= 0:
            raise ValueError("a and L must be positive")
        ratio = self.L / self.a
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError(f"L/a = {ratio} is not an integer")

    @property
    def grid_points_per_axis(self) -> int:
        return int(round(self.L / self.a))


@dataclass(frozen=True)
class DerivedConstants:
    """Every derived constant of the effective 1D/2D theories."""

    vF_1d: float
    g_1d: float
    vF_2d: float
    cF: float
    a_tilde: float
    g_2d: float
    g_tilde: float
    gamma: float
    mu0: float

    def as_dict(self) -> dict[str, float]:
        return {
            "vF_1d": self.vF_1d,
            "g_1d": self.g_1d,
            "vF_2d": self.vF_2d,
            "cF": self.cF,
            "a_tilde": self.a_tilde,
            "g_2d": self.g_2d,
            "g_tilde": self.g_tilde,
            "gamma": self.gamma,
            "mu0": self.mu0,
        }


@dataclass(frozen=True)
class RegionLabel:
    """Region label (r, s): r in {+1,-1}; s in {+1,-1} nodal, 0 antinodal,
    2 corner."""

    r: int
    s: int

    def __post_init__(self) -> None:
        if self.r not in (1, -1) or self.s not in ALL_S:
            raise ValueError(f"bad region label r={self.r}, s={self.s}")

    def as_strings(self) -> tuple[str, str]:
        return ("+" if self.r == 1 else "-", {1: "+", -1: "-", 0: "0", 2: "2"}[self.s])


def derive_constants(
    params: PartitionParams, model: ModelParams, mu0: float = 0.0
) -> DerivedConstants:
    """Evaluate all printed constant formulas; mu0 is a config input."""
    t, V, a = model.t, model.V, params.a
    sq = math.sin(params.Q)
    return DerivedConstants(
        vF_1d=2.0 * t * a * sq,
        g_1d=2.0 * a * V * sq * sq / math.pi,
        vF_2d=2.0 * math.sqrt(2.0) * sq * t * a,
        cF=2.0 * t * a * a,
        a_tilde=math.sqrt(2.0) * a / (1.0 - params.kappa),
        g_2d=2.0 * V * a * a * sq * sq,
        g_tilde=2.0 * V * a * a,
        gamma=V * (1.0 - params.kappa) * sq / (2.0 * math.pi * t),
        mu0=mu0,
    )


def rotated_components(k: tuple[float, float]) -> tuple[float, float]:
    """(k_+, k_-) with k_s = (k1 + s*k2)/sqrt(2)."""
    k1, k2 = k
    inv = 1.0 / math.sqrt(2.0)
    return ((k1 + k2) * inv, (k1 - k2) * inv)


def _wrap(x: float, period: float) -> float:
    """Wrap x into (-period/2, period/2]."""
    y = math.fmod(x, period)
    if y > period / 2.0:
        y -= period
    elif y <= -period / 2.0:
        y += period
    return y


def region_centers(params: PartitionParams) -> dict[tuple[int, int], tuple[float, float]]:
    a, Q = params.a, params.Q
    centers: dict[tuple[int, int], tuple[float, float]] = {}
    for r in (1, -1):
        for s in NODAL_S:
            centers[(r, s)] = (r * Q / a, r * s * Q / a)
    centers[(1, 0)] = (math.pi / a, 0.0)
    centers[(-1, 0)] = (0.0, math.pi / a)
    centers[(1, 2)] = (math.pi / a, math.pi / a)
    centers[(-1, 2)] = (0.0, 0.0)
    return centers


def _torus_distance_sq(
    k: tuple[float, float], center: tuple[float, float], period: float
) -> float:
    d1 = _wrap(k[0] - center[0], period)
    d2 = _wrap(k[1] - center[1], period)
    return d1 * d1 + d2 * d2


def classify_momentum(k: tuple[float, float], params: PartitionParams) -> RegionLabel:
    """Total classifier: every momentum gets exactly one of the eight labels."""
    a = params.a
    period = 2.0 * math.pi / a
    strip_half_width = (1.0 - params.kappa) * math.pi / a
    u = _wrap(k[0] - k[1], period)  # transverse to the s=+1 strip
    v = _wrap(k[0] + k[1], period)  # transverse to the s=-1 strip
    in_plus = abs(u) < strip_half_width
    in_minus = abs(v) < strip_half_width
    if in_plus and in_minus:
        # corner diamonds: band sign decides between (0,0) and (pi,pi)
        band = math.cos(a * k[0]) + math.cos(a * k[1])
        return RegionLabel(r=1 if band < 0.0 else -1, s=2)
    if not in_plus and not in_minus:
        # antinodal diamonds around (pi,0) and (0,pi)
        return RegionLabel(
            r=1 if math.cos(a * k[0]) < math.cos(a * k[1]) else -1, s=0
        )
    s = 1 if in_plus else -1
    centers = region_centers(params)
    d_plus = _torus_distance_sq(k, centers[(1, s)], period)
    d_minus = _torus_distance_sq(k, centers[(-1, s)], period)
    return RegionLabel(r=1 if d_plus <= d_minus else -1, s=s)


def partition_metadata(params: PartitionParams) -> dict[str, str]:
    """Logged geometry decisions that the printed inequalities do not fix."""
    return {
        "strips": "|k1 -+ k2| < (1-kappa)*pi/a on the torus, boundaries excluded",
        "corner_rule": "both strips; r from the sign of cos(a k1)+cos(a k2)",
        "antinodal_rule": "neither strip; r from comparing cos(a k1) vs cos(a k2)",
        "nodal_rule": (
            "exactly one strip; r from the nearer nodal center "
            "(Euclidean torus distance, ties to r=+1)"
        ),
        "theta_convention": "theta(0) = 0: cutoff boundaries excluded",
    }


@dataclass(frozen=True, eq=False)
class MomentumGrid2D:
    """Rotated half-integer momentum grid with one region label per point.

    k_+/- run over (2*pi/L)(Z + 1/2) inside (-pi/a, pi/a]; this yields exactly
    (L/a)^2 pairwise-inequivalent momenta.
    """

    params: PartitionParams
    k1: np.ndarray
    k2: np.ndarray
    kplus: np.ndarray
    kminus: np.ndarray
    r: np.ndarray
    s: np.ndarray

    @property
    def n_points(self) -> int:
        return self.k1.shape[0]

    def region_counts(self) -> dict[tuple[int, int], int]:
        counts: dict[tuple[int, int], int] = {}
        for r in (1, -1):
            for s in ALL_S:
                counts[(r, s)] = int(np.sum((self.r == r) & (self.s == s)))
        return counts


def momentum_grid(params: PartitionParams) -> MomentumGrid2D:
    m = params.grid_points_per_axis
    step = 2.0 * math.pi / params.L
    # (n + 1/2)*step in (-pi/a, pi/a] <=> 2n+1 in (-m, m]: exact integer window
    lo = -(m // 2)
    axis = step * (np.arange(lo, lo + m) + 0.5)
    kp = np.repeat(axis, m)
    km = np.tile(axis, m)
    inv = 1.0 / math.sqrt(2.0)
    k1 = (kp + km) * inv
    k2 = (kp - km) * inv
    r = np.empty(k1.size, dtype=np.int64)
    s = np.empty(k1.size, dtype=np.int64)
    for i in range(k1.size):
        label = classify_momentum((float(k1[i]), float(k2[i])), params)
        r[i] = label.r
        s[i] = label.s
    return MomentumGrid2D(
        params=params, k1=k1, k2=k2, kplus=kp, kminus=km, r=r, s=s
    )


def lattice_band_2d(
    k: tuple[float, float], model: ModelParams, params: PartitionParams
) -> float:
    """Exact tight-binding band -2t(cos(a k1) + cos(a k2))."""
    return -2.0 * model.t * (
        math.cos(params.a * k[0]) + math.cos(params.a * k[1])
    )


def nodal_dispersion(
    r: int, s: int, k: tuple[float, float], c: DerivedConstants
) -> float:
    """Linearized nodal band r*vF*k_s; the constant -4t*cos(Q) is absorbed
    into the chemical potential."""
    if r not in (1, -1) or s not in NODAL_S:
        raise ValueError("nodal dispersion needs r, s in {+1,-1}")
    kp, km = rotated_components(k)
    ks = kp if s == 1 else km
    return r * c.vF_2d * ks


def antinodal_dispersion(
    r: int, k: tuple[float, float], c: DerivedConstants
) -> float:
    """Hyperbolic antinodal band -r*cF*k_+*k_- - mu0, k_+k_- = (k1^2-k2^2)/2."""
    if r not in (1, -1):
        raise ValueError("r must be +1 or -1")
    kp, km = rotated_components(k)
    return -r * c.cF * kp * km - c.mu0


def step_theta(x: float) -> int:
    """Heaviside step with the open convention theta(0) = 0."""
    return 1 if x > 0.0 else 0


def cutoff_chi(
    s: int,
    p: tuple[float, float],
    c: DerivedConstants,
    params: PartitionParams,
) -> int:
    """Sharp nodal cutoff chi_s(p) = theta(pi/a_tilde - |p_{-s}|) *
    theta(kappa*pi/(sqrt(2) a) - |p_s|), with theta(0) = 0."""
    if s not in NODAL_S:
        raise ValueError("s must be +1 or -1")
    pp, pm = rotated_components(p)
    p_s, p_ms = (pp, pm) if s == 1 else (pm, pp)
    return step_theta(math.pi / c.a_tilde - abs(p_ms)) * step_theta(
        params.kappa * math.pi / (math.sqrt(2.0) * params.a) - abs(p_s)
    )


def coupling_1d(p: float, c: DerivedConstants, params: PartitionParams) -> float:
    """1D Luttinger potential v(p) = g * theta(pi - |p| a), theta(0) = 0."""
    return c.g_1d * step_theta(math.pi - abs(p) * params.a)


def filling_1d(params: PartitionParams) -> float:
    """1D filling nu = Q/pi."""
    return params.Q / math.pi


def measured_filling_2d(grid: MomentumGrid2D, c: DerivedConstants) -> float:
    """Fraction of grid momenta inside the linearized Fermi sea.

    Reproducible proxy for the 2D filling: each point's band energy is the
    region-local model evaluated at the (torus-wrapped) deviation from the
    region center.  Nodal points occupied when the linear band is negative,
    antinodal when the hyperbolic band is negative, corner points occupied
    for the (-1,2) region (band bottom) and empty for (+1,2).  Labeled a
    proxy, not a closed-form filling.
    """
    params = grid.params
    period = 2.0 * math.pi / params.a
    centers = region_centers(params)
    occupied = 0
    for i in range(grid.n_points):
        r = int(grid.r[i])
        s = int(grid.s[i])
        if s == 2:
            occupied += 1 if r == -1 else 0
            continue
        center = centers[(r, s)]
        dk = (
            _wrap(grid.k1[i] - center[0], period),
            _wrap(grid.k2[i] - center[1], period),
        )
        if s in NODAL_S:
            occupied += 1 if nodal_dispersion(r, s, dk, c) < 0.0 else 0
        else:
            occupied += 1 if antinodal_dispersion(r, dk, c) < 0.0 else 0
    return occupied / grid.n_points


def check_gamma_identity(c: DerivedConstants, params: PartitionParams, model: ModelParams) -> float:
    """|gamma*2*pi*t - V*(1-kappa)*sin(Q)|: dimensionless consistency check."""
    return abs(
        c.gamma * 2.0 * math.pi * model.t
        - model.V * (1.0 - params.kappa) * math.sin(params.Q)
    )
