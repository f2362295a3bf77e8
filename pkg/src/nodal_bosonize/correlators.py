"""Equal-time fermion two-point function of the 1D interacting model.

The interacting two-point function is evaluated from the boson
representation of the fermion field.  Derivation of the quadrature kernel
used below:

* One chirality of the fermion is the exponential of the chiral boson
  built from the density modes at momenta ``p_n = 2 pi n / L``, ``n >= 1``,
  with a short-distance regulator ``exp(-eps p)``.
* The quadratic coupling ``gamma`` mixes the two chiralities; the
  symplectic (Bogoliubov) rotation that diagonalizes the boson Hamiltonian
  has angle ``theta(p)`` with ``tanh 2 theta = gamma`` for a momentum-
  independent coupling.  The Gaussian expectation of the exponential then
  gives, for the magnitude of the equal-time two-point function,

      log |G(x)| - log |G(x_ref)|
          = cosh(2 theta) * [S(x) - S(x_ref)],
      S(x) = sum_{n>=1} (1/n) e^{-eps p_n} (cos(p_n x) - 1),

  because the ``e^{i p x}`` and ``e^{-i p x}`` halves enter with weights
  ``cosh^2 theta`` and ``sinh^2 theta`` whose real parts add up to
  ``cosh 2 theta = 1 / sqrt(1 - gamma^2)``.
* At ``gamma = 0`` the same sum is the logarithm of the free geometric
  mode sum: ``S(x) = log[(1 - r) / |1 - z(x)|]`` with
  ``z(x) = r e^{2 pi i x / L}`` and ``r = e^{-2 pi eps / L}``, so the free
  closed form ``|G_free(x)| = (r / L) / |1 - z(x)|`` is recovered exactly.
  That closed form anchors the normalization at the smallest requested
  position and serves as an independent check of the quadrature.
* For ``eps << x << L`` the envelope decays as ``x**(-eta)`` with

      eta = cosh 2 theta = (K + 1/K) / 2,
      K = sqrt((1 - gamma) / (1 + gamma)),

  the algebraic-decay exponent extracted by the log-log fit.

The magnitude of the equal-time function does not depend on the velocity;
``vF`` is carried in the request because the dimensionless coupling of the
physical model is ``gamma = g / (2 pi vF)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._parallel import parallel_map
from .bogoliubov import InstabilityError

__all__ = [
    "CorrelatorRequest",
    "CorrelatorResult",
    "fit_power_law",
    "free_two_point_1d",
    "luttinger_exponent",
    "luttinger_parameter",
    "two_point_1d",
]

#: fit window is [WINDOW_LOW_FACTOR * eps, L / WINDOW_HIGH_DIVISOR]
WINDOW_LOW_FACTOR = 10.0
WINDOW_HIGH_DIVISOR = 10.0

#: regulator tail cut: drop modes with weight below 1e-16
_TAIL_LOG = 16.0 * math.log(10.0)

#: refuse quadratures that would need more modes than this
MAX_MODES = 5_000_000

MIN_FIT_POINTS = 8


@dataclass(frozen=True)
class CorrelatorRequest:
    """Positions and couplings for the 1D two-point function.

    ``x_values`` must be strictly increasing, inside ``(0, L/2)``, and well
    separated from the regulator (``epsilon_reg < min x``).
    """

    x_values: tuple[float, ...]
    gamma: float
    vF: float = 1.0
    epsilon_reg: float = 0.5
    L: float = 2000.0

    def __post_init__(self) -> None:
        xs = tuple(float(x) for x in self.x_values)
        object.__setattr__(self, "x_values", xs)
        if not xs:
            raise ValueError("x_values must not be empty")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("x_values must be strictly increasing")
        if abs(self.gamma) >= 1.0:
            raise InstabilityError(
                f"coupling gamma = {self.gamma} is outside the stable "
                "window (-1, 1)"
            )
        if self.vF <= 0.0:
            raise ValueError(f"vF = {self.vF} must be positive")
        if self.L <= 0.0:
            raise ValueError(f"L = {self.L} must be positive")
        if xs[0] <= 0.0 or xs[-1] >= 0.5 * self.L:
            raise ValueError(
                f"positions must lie in (0, L/2) = (0, {0.5 * self.L})"
            )
        if not 0.0 < self.epsilon_reg < xs[0]:
            raise ValueError(
                f"epsilon_reg = {self.epsilon_reg} must be positive and "
                f"smaller than the smallest position {xs[0]}"
            )


@dataclass(frozen=True)
class CorrelatorResult:
    """Normalized magnitudes, fitted decay exponent, and fit diagnostics."""

    values: tuple[float, ...]
    fitted_exponent: float
    fit_window: tuple[float, float]
    fit_residual: float

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "values", tuple(float(v) for v in self.values)
        )
        if not math.isfinite(self.fitted_exponent):
            raise ValueError("fitted exponent must be finite")
        if not math.isfinite(self.fit_residual) or self.fit_residual < 0.0:
            raise ValueError("fit residual must be finite and nonnegative")


def luttinger_parameter(gamma: float) -> float:
    """K = sqrt((1 - gamma) / (1 + gamma)); K = 1 for the free model."""
    if abs(gamma) >= 1.0:
        raise InstabilityError(
            f"coupling gamma = {gamma} is outside the stable window (-1, 1)"
        )
    return math.sqrt((1.0 - gamma) / (1.0 + gamma))


def luttinger_exponent(gamma: float) -> float:
    """Algebraic-decay exponent (K + 1/K) / 2 = 1 / sqrt(1 - gamma^2).

    Analytic route to the exponent, independent of the momentum-sum
    quadrature in :func:`two_point_1d`.  Evaluated in the second form,
    which is even in ``gamma`` to the last bit.
    """
    if abs(gamma) >= 1.0:
        raise InstabilityError(
            f"coupling gamma = {gamma} is outside the stable window (-1, 1)"
        )
    return 1.0 / math.sqrt(1.0 - gamma * gamma)


def free_two_point_1d(x: float, L: float, epsilon_reg: float) -> float:
    """Closed-form free-fermion magnitude (r / L) / |1 - z(x)|.

    Geometric sum of one chirality's modes ``(1/L) sum_n z^n`` with
    ``z = r e^{2 pi i x / L}`` and ``r = e^{-2 pi eps / L}``.
    """
    if L <= 0.0 or epsilon_reg <= 0.0:
        raise ValueError("L and epsilon_reg must be positive")
    r = math.exp(-2.0 * math.pi * epsilon_reg / L)
    phase = 2.0 * math.pi * x / L
    one_minus_z = complex(1.0 - r * math.cos(phase), -r * math.sin(phase))
    return r / (L * abs(one_minus_z))


def _mode_count(L: float, epsilon_reg: float) -> int:
    """Modes needed before the regulator tail drops below 1e-16."""
    n_max = int(math.ceil(_TAIL_LOG * L / (2.0 * math.pi * epsilon_reg)))
    if n_max > MAX_MODES:
        raise ValueError(
            f"regulator epsilon_reg = {epsilon_reg} needs {n_max} modes "
            f"(limit {MAX_MODES}); increase the regulator or shrink L"
        )
    return n_max


def two_point_1d(req: CorrelatorRequest, threads: int = 1) -> CorrelatorResult:
    """Momentum-sum evaluation of |G(x)|, plus the power-law fit.

    The boson exponent ``S(x)`` is summed over the modes ``2 pi n / L``
    until the regulator tail is below 1e-16.  Output is normalized so that
    the value at the smallest position equals the free closed form there.
    The decay exponent is fitted on log-log over
    ``[10 epsilon_reg, L / 10]``.
    """
    n_max = _mode_count(req.L, req.epsilon_reg)
    n = np.arange(1, n_max + 1, dtype=np.float64)
    p = 2.0 * math.pi * n / req.L
    weight = np.exp(-req.epsilon_reg * p) / n
    cosh_2theta = luttinger_exponent(req.gamma)

    def boson_exponent(x: float) -> float:
        return float(np.sum(weight * (np.cos(p * x) - 1.0)))

    exponents = parallel_map(boson_exponent, req.x_values, threads=threads)
    s_ref = exponents[0]
    anchor = free_two_point_1d(req.x_values[0], req.L, req.epsilon_reg)
    values = tuple(
        anchor * math.exp(cosh_2theta * (s - s_ref)) for s in exponents
    )
    window = (
        WINDOW_LOW_FACTOR * req.epsilon_reg,
        req.L / WINDOW_HIGH_DIVISOR,
    )
    exponent, residual = fit_power_law(req.x_values, values, window)
    return CorrelatorResult(
        values=values,
        fitted_exponent=exponent,
        fit_window=window,
        fit_residual=residual,
    )


def fit_power_law(
    xs: tuple[float, ...] | list[float],
    ys: tuple[float, ...] | list[float],
    window: tuple[float, float],
) -> tuple[float, float]:
    """Least-squares decay exponent of ``y ~ x**(-exponent)`` on log-log.

    Only points with ``window[0] <= x <= window[1]`` enter the fit; at
    least 8 are required.  Returns ``(exponent, rms log residual)``.
    """
    if len(xs) != len(ys):
        raise ValueError("xs and ys must have the same length")
    lo, hi = window
    pairs = [(x, y) for x, y in zip(xs, ys) if lo <= x <= hi]
    if len(pairs) < MIN_FIT_POINTS:
        raise ValueError(
            f"fit window [{lo}, {hi}] holds {len(pairs)} points; "
            f"need at least {MIN_FIT_POINTS}"
        )
    if any(y <= 0.0 for _, y in pairs):
        raise ValueError("power-law fit needs strictly positive values")
    log_x = np.log([x for x, _ in pairs])
    log_y = np.log([y for _, y in pairs])
    slope, intercept = np.polyfit(log_x, log_y, 1)
    fitted = slope * log_x + intercept
    residual = float(np.sqrt(np.mean((log_y - fitted) ** 2)))
    return -float(slope), residual
