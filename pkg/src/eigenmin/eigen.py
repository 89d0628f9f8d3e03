"""Deterministic low-end eigenpairs of the P1 pencil (S, M).

Small or awkwardly sized problems go through a dense generalized solve;
large sparse ones run blocked LOBPCG with a fixed congruential start block,
a Jacobi preconditioner and chunked warm restarts.  Either way the returned
residuals are recomputed from the matrices, so a Spectrum certifies itself:
||S v - lambda M v|| / ||M v|| <= tolerance holds for every reported pair.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import lobpcg

from .canonical import CanonicalSurface, exact_eigenvalue_list, exact_spectrum
from .fem import FemOperators, assemble
from .mesh import generate, mesh_stats

__all__ = [
    "Spectrum",
    "SolverError",
    "NonConvergence",
    "IndeterminateIndex",
    "OrderEstimate",
    "solve_lowest",
    "observed_order",
    "eigen_convergence_order",
    "morse_index",
]

_DENSE_CUTOFF = 600
_CHUNK = 150


class SolverError(RuntimeError):
    """Eigenvalue solve failed structurally."""


class NonConvergence(SolverError):
    """Iteration budget exhausted before the residuals certified.

    Carries the best partial result in the ``spectrum`` attribute.
    """

    def __init__(self, message, spectrum=None):
        super().__init__(message)
        self.spectrum = spectrum


class IndeterminateIndex(SolverError):
    """An eigenvalue sits inside the margin band around the potential."""


@dataclass(frozen=True)
class Spectrum:
    """Sorted eigenvalues with M-orthonormal eigenvectors and residuals."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    tolerance: float
    iterations: int
    deflated: bool


def _pencil(ops):
    if isinstance(ops, FemOperators):
        return ops.stiffness, ops.mass
    S, M = ops
    return sp.csr_matrix(S, dtype=float), sp.csr_matrix(M, dtype=float)


def _start_block(dim: int, k: int, seed: int, cols: int) -> np.ndarray:
    """Reproducible start block from a 32-bit linear congruential stream."""
    state = (dim * 2654435761 + k * 97531 + seed * 1013904223) & 0xFFFFFFFF
    out = np.empty(dim * cols)
    for i in range(dim * cols):
        state = (1664525 * state + 1013904223) & 0xFFFFFFFF
        out[i] = state / 4294967296.0 - 0.5
    return out.reshape(dim, cols)


def _residuals(S, M, vals, vecs):
    res = np.empty(len(vals))
    for i, (lam, v) in enumerate(zip(vals, vecs.T)):
        r = S @ v - lam * (M @ v)
        res[i] = np.linalg.norm(r) / max(np.linalg.norm(M @ v), 1e-300)
    return res


def _orthonormalize(M, vecs):
    """Polish vectors to exact M-orthonormality via a Cholesky factor."""
    G = vecs.T @ (M @ vecs)
    R = np.linalg.cholesky(G).T
    return vecs @ np.linalg.inv(R)


def _solve_dense(S, M, k, tol, deflate, dim):
    Sd = np.asarray(S.todense())
    Md = np.asarray(M.todense())
    try:
        np.linalg.cholesky(Md)
    except np.linalg.LinAlgError:
        raise ValueError("mass matrix must be symmetric positive definite")
    if deflate:
        ones = np.ones((1, dim))
        basis = scipy.linalg.null_space(ones @ Md)
        vals, y = scipy.linalg.eigh(basis.T @ Sd @ basis, basis.T @ Md @ basis)
        vecs = basis @ y[:, :k]
    else:
        vals, vecs = scipy.linalg.eigh(Sd, Md)
        vecs = vecs[:, :k]
    vals = np.asarray(vals[:k], dtype=float)
    res = _residuals(S, M, vals, vecs)
    return Spectrum(vals, vecs, res, tol, 1, deflate)


def _solve_lobpcg(S, M, k, tol, deflate, dim, seed, maxiter):
    cols = k + 4
    X = _start_block(dim, k, seed, cols)
    Y = np.ones((dim, 1)) if deflate else None
    diag = S.diagonal()
    prec = sp.diags(1.0 / np.maximum(diag, 1e-12))
    inner_tol = tol * np.sqrt(np.median(M.diagonal()))
    iterations = 0
    best = None
    best_res = np.inf
    while iterations < maxiter:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            vals, vecs = lobpcg(
                S, X, B=M, M=prec, Y=Y, tol=inner_tol,
                maxiter=_CHUNK, largest=False,
            )
        iterations += _CHUNK
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
        try:
            polished = _orthonormalize(M, vecs[:, :k])
        except np.linalg.LinAlgError:
            X = _start_block(dim, k, seed + iterations, cols)
            continue
        lam = np.einsum("ij,ij->j", polished, S @ polished)
        res = _residuals(S, M, lam, polished)
        worst = res.max()
        if worst < best_res:
            best_res = worst
            best = Spectrum(lam, polished, res, tol, iterations, deflate)
        if worst <= tol:
            return best
        X = vecs  # warm restart with the full block
    raise NonConvergence(
        "residual %.3e above tolerance %.1e after %d iterations"
        % (best_res, tol, iterations),
        spectrum=best,
    )


def solve_lowest(ops, k: int, tol: float = 1e-8, deflate_constants: bool = True,
                 seed: int = 0, maxiter: int = 3000) -> Spectrum:
    """Lowest k eigenpairs of S v = lambda M v, ascending.

    ``ops`` is a FemOperators or a (stiffness, mass) pair.  With
    ``deflate_constants`` the constant vector is removed from the search
    space, so the reported eigenvalues start at the first nonzero one.
    Residuals of the returned pairs are certified below ``tol``; if the
    iteration budget runs out first, NonConvergence carries the best
    partial spectrum.
    """
    S, M = _pencil(ops)
    dim = S.shape[0]
    if S.shape != M.shape or S.shape[0] != S.shape[1]:
        raise ValueError("stiffness and mass must be square and same shape")
    if k < 1:
        raise ValueError("k must be at least 1")
    if not 1e-12 <= tol <= 1e-4:
        raise ValueError("tol must lie in [1e-12, 1e-4]")
    limit = dim - 1 if deflate_constants else dim
    if k > limit:
        raise ValueError("k=%d exceeds the available spectrum (dim=%d)" % (k, dim))
    if np.any(M.diagonal() <= 0):
        raise ValueError("mass matrix must be symmetric positive definite")

    if dim <= _DENSE_CUTOFF or 5 * (k + 4) >= dim:
        if dim > _DENSE_CUTOFF and k * 4 >= dim:
            raise ValueError("k must satisfy k < dim/4 for large problems")
        return _solve_dense(S, M, k, tol, deflate_constants, dim)
    if k * 4 >= dim:
        raise ValueError("k must satisfy k < dim/4 for large problems")
    return _solve_lobpcg(S, M, k, tol, deflate_constants, dim, seed, maxiter)


@dataclass(frozen=True)
class OrderEstimate:
    """Observed convergence order of one discrete eigenvalue."""

    index: int
    order: float
    ambiguous: bool


def observed_order(errors, widths):
    """Log-ratio order from the two finest levels; inf when both are exact.

    ``widths`` are the matching mesh widths (max edge lengths), so the
    estimate does not assume exact halving between levels.
    """
    if len(errors) < 2 or len(widths) < 2:
        raise ValueError("order estimation needs at least two levels")
    if len(errors) != len(widths):
        raise ValueError("errors and widths must have matching lengths")
    e0, e1 = errors[-2], errors[-1]
    if e0 <= 1e-12 and e1 <= 1e-12:
        return float("inf")
    if e1 <= 0 or e0 <= 0:
        return float("inf") if e1 <= 1e-12 else 0.0
    return float(np.log(e0 / e1) / np.log(widths[-2] / widths[-1]))


def eigen_convergence_order(surface: CanonicalSurface, resolutions, k: int,
                            tol: float = 1e-8, seed: int = 0):
    """Observed order of each of the first k nonzero eigenvalues.

    Solves on every resolution, compares against the closed-form spectrum
    and estimates the order from the two finest meshes using their actual
    maximum edge lengths.  An estimate is flagged ambiguous when the
    discrete eigenvalue sits closer to a different exact level than the one
    its index assigns, or when its error exceeds half the gap to the
    neighboring levels.
    """
    if len(resolutions) < 2:
        raise ValueError("need at least two resolutions")
    oracle = np.array(exact_eigenvalue_list(surface, k))
    levels = sorted({lam for lam, _ in exact_spectrum(surface, k + 1)})
    errors = []
    widths = []
    finest = None
    for r in resolutions:
        m = generate(surface, r)
        spectrum = solve_lowest(assemble(m), k, tol=tol, seed=seed)
        errors.append(np.abs(spectrum.eigenvalues - oracle))
        widths.append(mesh_stats(m).max_edge)
        finest = spectrum.eigenvalues
    errors = np.array(errors)
    out = []
    for i in range(k):
        order = observed_order(errors[:, i], widths)
        lam = finest[i]
        nearest = min(levels, key=lambda lv: abs(lv - lam))
        gap = min(
            (abs(lv - oracle[i]) for lv in levels if abs(lv - oracle[i]) > 1e-9),
            default=np.inf,
        )
        ambiguous = nearest != oracle[i] or errors[-1, i] > 0.49 * gap
        out.append(OrderEstimate(index=i, order=order, ambiguous=bool(ambiguous)))
    return out


def morse_index(ops, potential_constant: float, tol: float = 1e-8,
                oracle_levels=None, seed: int = 0) -> int:
    """Number of eigenvalues of S v = lambda M v below ``potential_constant``.

    This is the index of the quadratic form u'Su - c u'Mu with
    c = potential_constant.  Counting uses a safety margin
    max(10 tol, 0.05 * gap), the gap being measured from c down to the
    largest entry of ``oracle_levels`` strictly below c when levels are
    supplied.  Discrete eigenvalues in [c - margin, c - 10 tol) cannot be
    classified and raise IndeterminateIndex; values at or above c - 10 tol
    count as nonnegative directions, which is the correct reading for a
    conforming discretization, where discrete eigenvalues approach exact
    ones from above.
    """
    if potential_constant < 0:
        raise ValueError("potential constant must be nonnegative")
    S, M = _pencil(ops)
    dim = S.shape[0]
    margin = 10.0 * tol
    if oracle_levels is not None:
        below = [lv for lv in oracle_levels if lv < potential_constant - 1e-12]
        if below:
            margin = max(margin, 0.05 * (potential_constant - max(below)))
        else:
            margin = max(margin, 0.05 * potential_constant)
    k = min(8, dim)
    while True:
        spectrum = solve_lowest((S, M), k, tol=tol, deflate_constants=False,
                                seed=seed)
        vals = spectrum.eigenvalues
        if vals[-1] > potential_constant + margin or k == dim:
            break
        grown = min(2 * k, dim if dim <= _DENSE_CUTOFF else dim // 5)
        if grown <= k:
            raise SolverError(
                "could not bracket the potential constant %g within k=%d"
                % (potential_constant, k)
            )
        k = grown
    lo = potential_constant - margin
    hi = potential_constant - 10.0 * tol
    banded = vals[(vals >= lo) & (vals < hi)]
    if banded.size:
        raise IndeterminateIndex(
            "eigenvalue %.12g lies in the margin band [%.6g, %.6g)"
            % (banded[0], lo, hi)
        )
    return int(np.count_nonzero(vals < lo))
