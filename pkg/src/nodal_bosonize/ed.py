"""Ground-state solver: Lanczos with full reorthogonalization, dense fallback.

Deterministic by construction: fixed-seed start vectors, fixed iteration
order, and an explicit residual check instead of silent acceptance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .lattice import (
    FockBasis,
    LatticeSpec,
    SparseOperator,
    density_profile,
    staggered_density_rms,
)

DEFAULT_SEED = 0x5EED
DENSE_CUTOFF = 512
RITZ_TOL = 1e-12
RESIDUAL_SCALE_TOL = 1e-10
DEGENERACY_TOL = 1e-9


class EDConvergenceError(RuntimeError):
    """Lanczos failed to reach the requested residual."""


@dataclass(frozen=True)
class EDResult:
    ground_energy: float
    ground_vector: np.ndarray
    gap: float
    degeneracy: int
    residual: float
    method: str
    staggered_density: Optional[float] = None
    density_profile: Optional[np.ndarray] = None
    degenerate: bool = False


def _operator_scale(H: SparseOperator) -> float:
    """Infinity norm of the matrix: scale for residual tolerances."""
    m = H.matrix
    return float(max(1.0, np.abs(m).sum(axis=1).max()))


def lanczos_lowest(
    H: SparseOperator,
    rng: np.random.Generator,
    deflate: list[np.ndarray],
    *,
    tol: float = RITZ_TOL,
    max_iter: int = 500,
) -> tuple[float, np.ndarray, float]:
    """Lowest eigenpair of H restricted to the complement of `deflate`.

    Full reorthogonalization against the whole Krylov block each step.
    Returns (eigenvalue, vector, residual_norm).
    """
    dim = H.dim
    scale = _operator_scale(H)
    max_iter = min(max_iter, dim)

    def project(v: np.ndarray) -> np.ndarray:
        for d in deflate:
            v = v - d * (d @ v)
        return v

    v = project(rng.standard_normal(dim))
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise EDConvergenceError("start vector vanished after deflation")
    v /= norm

    basis = np.zeros((max_iter + 1, dim))
    basis[0] = v
    alphas: list[float] = []
    betas: list[float] = []
    theta = math.nan
    est = math.inf
    ritz: np.ndarray | None = None
    for k in range(max_iter):
        w = project(H.matvec(basis[k]))
        alpha = float(basis[k] @ w)
        alphas.append(alpha)
        w -= alpha * basis[k]
        if k > 0:
            w -= betas[-1] * basis[k - 1]
        # full reorthogonalization, two passes
        block = basis[: k + 1]
        w -= block.T @ (block @ w)
        w -= block.T @ (block @ w)
        beta = float(np.linalg.norm(w))
        tri = scipy.linalg.eigh_tridiagonal(
            alphas, betas, select="i", select_range=(0, 0)
        )
        theta = float(tri[0][0])
        coeff = tri[1][:, 0]
        est = abs(beta * coeff[-1])
        if est <= tol * scale or beta <= 1e-14 * scale:
            ritz = basis[: k + 1].T @ coeff
            break
        betas.append(beta)
        basis[k + 1] = w / beta
    if ritz is None:
        raise EDConvergenceError(
            f"no convergence after {max_iter} iterations "
            f"(Ritz residual estimate {est:.3e})"
        )
    ritz = project(ritz)
    ritz /= np.linalg.norm(ritz)
    residual = float(np.linalg.norm(project(H.matvec(ritz)) - theta * ritz))
    return theta, ritz, residual


def ground_state(
    H: SparseOperator,
    *,
    spec: LatticeSpec | None = None,
    basis: FockBasis | None = None,
    seed: int = DEFAULT_SEED,
    tol: float = RITZ_TOL,
    max_iter: int = 500,
    dense_cutoff: int = DENSE_CUTOFF,
    compute_gap: bool = True,
    deflation_cap: int = 8,
) -> EDResult:
    """Lowest eigenpair plus gap/degeneracy diagnostics.

    Below `dense_cutoff` the full spectrum is computed densely; otherwise
    Lanczos runs with deflation until the first eigenvalue distinct from the
    ground energy is found (degeneracy counted within DEGENERACY_TOL).
    """
    dim = H.dim
    if dim < 1:
        raise ValueError("empty Hamiltonian")
    scale = _operator_scale(H)
    if dim <= dense_cutoff:
        dense = H.to_dense()
        evals, evecs = scipy.linalg.eigh(dense)
        energy = float(evals[0])
        vector = np.ascontiguousarray(evecs[:, 0])
        degeneracy = int(np.sum(evals <= energy + DEGENERACY_TOL))
        if compute_gap:
            # fully degenerate spectrum (e.g. zero matrix): no distinct level
            gap = (
                0.0 if degeneracy >= dim else float(evals[degeneracy] - energy)
            )
        else:
            gap = math.nan
        residual = float(np.linalg.norm(H.matvec(vector) - energy * vector))
        method = "dense"
    else:
        rng = np.random.default_rng(seed)
        energy, vector, residual = lanczos_lowest(
            H, rng, [], tol=tol, max_iter=max_iter
        )
        degeneracy = 1
        gap = math.nan
        if compute_gap:
            deflate = [vector]
            found = False
            for _ in range(deflation_cap):
                e_next, v_next, _ = lanczos_lowest(
                    H, rng, deflate, tol=tol, max_iter=max_iter
                )
                if e_next <= energy + DEGENERACY_TOL:
                    degeneracy += 1
                    deflate.append(v_next)
                    continue
                gap = float(e_next - energy)
                found = True
                break
            if not found:
                raise EDConvergenceError(
                    f"degeneracy exceeds deflation cap {deflation_cap}"
                )
        method = "lanczos"
    if residual > RESIDUAL_SCALE_TOL * scale:
        raise EDConvergenceError(
            f"residual {residual:.3e} above {RESIDUAL_SCALE_TOL:.1e} * scale {scale:.3e}"
        )
    stag = None
    profile = None
    if spec is not None and basis is not None:
        stag = staggered_density_rms(vector, spec, basis)
        profile = density_profile(vector, basis)
    return EDResult(
        ground_energy=energy,
        ground_vector=vector,
        gap=gap,
        degeneracy=degeneracy,
        residual=residual,
        method=method,
        staggered_density=stag,
        density_profile=profile,
        degenerate=degeneracy > 1,
    )
