"""Eigendecomposition of the propagation operator and band-limited operators.

Eigenvalues are indexed in descending order throughout: index 0 is the
largest eigenvalue of the smoothing operator, which corresponds to the
lowest graph-Laplacian frequency. A band [k1, k2] therefore selects low
frequencies when it starts at 0 and high frequencies when it ends at N-1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .graph import DENSE_THRESHOLD, PropagationOperator

# Two eigenvalues closer than this are reported as a tie; ordering inside
# a tie is solver-dependent.
TIE_TOL = 1e-10


class CapabilityError(RuntimeError):
    """Requested path is not available for this operator representation."""


class ConvergenceError(RuntimeError):
    """Iterative solver ran out of budget; carries the achieved residual."""

    def __init__(self, msg: str, residual: float):
        super().__init__(msg)
        self.residual = residual


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigenpairs of a symmetric operator, sorted by descending eigenvalue.

    ``offset`` is the global descending index of the first stored pair:
    0 for full or top-truncated decompositions, n - m for bottom-truncated
    ones. ``complete`` is true only when every eigenpair is stored.
    """

    eigenvalues: np.ndarray  # (m,) descending
    eigenvectors: np.ndarray  # (n, m) orthonormal columns
    n: int
    offset: int = 0

    def __post_init__(self):
        self.eigenvalues.setflags(write=False)
        self.eigenvectors.setflags(write=False)

    @property
    def num_pairs(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def complete(self) -> bool:
        return self.offset == 0 and self.num_pairs == self.n

    def tie_groups(self, tol: float = TIE_TOL) -> list[tuple[int, int]]:
        """Maximal runs of eigenvalues closer than ``tol``, as global
        inclusive (start, end) index pairs. Singletons are included."""
        lam = self.eigenvalues
        groups = []
        start = 0
        for i in range(1, lam.shape[0]):
            if lam[i - 1] - lam[i] > tol:
                groups.append((start + self.offset, i - 1 + self.offset))
                start = i
        groups.append((start + self.offset, lam.shape[0] - 1 + self.offset))
        return groups


@dataclass(frozen=True, eq=False)
class BandOperator:
    """Rank-limited operator built from the eigenpairs k1..k2 inclusive.

    Applies sum_k lambda_k u_k u_k^T as a factored matvec costing
    O(n * (k2 - k1 + 1)) per column. ``splits_tie`` records whether a band
    boundary cuts through a group of (numerically) equal eigenvalues, in
    which case the selected subspace is solver-dependent.
    """

    eigenvalues: np.ndarray  # (m,)
    eigenvectors: np.ndarray  # (n, m)
    k1: int
    k2: int
    n: int
    splits_tie: bool = False

    def __post_init__(self):
        self.eigenvalues.setflags(write=False)
        self.eigenvectors.setflags(write=False)

    @property
    def rank(self) -> int:
        return self.k2 - self.k1 + 1

    def matmul(self, x: np.ndarray) -> np.ndarray:
        u = self.eigenvectors
        coeff = u.T @ x
        if x.ndim == 1:
            return u @ (self.eigenvalues * coeff)
        return u @ (self.eigenvalues[:, None] * coeff)

    def __matmul__(self, x: np.ndarray) -> np.ndarray:
        return self.matmul(x)

    def dense(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues[None, :]) @ u.T


def eig_full(op: PropagationOperator) -> SpectralDecomposition:
    """Complete dense eigendecomposition, descending order.

    Only available for the dense representation; raises CapabilityError
    for sparse operators (use :func:`eig_truncated`).
    """
    if not op.is_dense:
        raise CapabilityError(
            f"operator with n={op.n} is stored sparse; dense decomposition "
            f"is limited to n <= {DENSE_THRESHOLD}, use eig_truncated"
        )
    lam, u = np.linalg.eigh(op.matrix)
    return SpectralDecomposition(
        eigenvalues=np.ascontiguousarray(lam[::-1]),
        eigenvectors=np.ascontiguousarray(u[:, ::-1]),
        n=op.n,
    )


def eig_truncated(
    op: PropagationOperator,
    k: int,
    side: str = "top",
    tol: float = 1e-8,
    seed: int = 0,
) -> SpectralDecomposition:
    """k extremal eigenpairs via Lanczos with full reorthogonalization.

    ``side="bottom"`` runs the same iteration on the complement operator
    (I - M) and maps eigenvalues back via lambda -> 1 - lambda, so both
    ends of the spectrum are reached from a single dominant-end routine.

    Parameters
    ----------
    op : PropagationOperator
        Symmetric operator; dense or sparse representation both work.
    k : int
        Number of eigenpairs, 1 <= k < n.
    side : "top" | "bottom"
        Which end of the descending spectrum to compute.
    tol : float
        Maximum acceptable residual ||M u - lambda u||.
    seed : int
        Seed for the random start vector; fixed seeds give reproducible
        decompositions.
    """
    n = op.n
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < n, got k={k}, n={n}")
    if side not in ("top", "bottom"):
        raise ValueError(f"side must be 'top' or 'bottom', got {side!r}")

    if side == "top":
        matvec = op.matmul
    else:
        matvec = lambda x: x - op.matmul(x)  # noqa: E731

    lam, vecs, residual = _lanczos(matvec, n, k, tol, seed)
    if side == "bottom":
        lam = 1.0 - lam
        order = np.argsort(lam)[::-1]
        lam = np.ascontiguousarray(lam[order])
        vecs = np.ascontiguousarray(vecs[:, order])
        offset = n - k
    else:
        offset = 0
    if residual > tol:
        raise ConvergenceError(
            f"Lanczos did not reach tol={tol:g} within budget "
            f"(achieved residual {residual:.3e})",
            residual=residual,
        )
    return SpectralDecomposition(eigenvalues=lam, eigenvectors=vecs, n=n, offset=offset)


def _lanczos(matvec, n: int, k: int, tol: float, seed: int):
    """Restart-free Lanczos for the k largest eigenvalues of a symmetric
    operator given by ``matvec``. Returns (values desc, vectors, residual)."""
    budget = min(n, 10 * k + 200)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)

    basis = np.empty((budget, n))
    basis[0] = v
    alphas: list[float] = []
    betas: list[float] = []
    m = 0
    for j in range(budget):
        w = matvec(basis[j])
        alpha = float(basis[j] @ w)
        alphas.append(alpha)
        w -= alpha * basis[j]
        if j > 0:
            w -= betas[-1] * basis[j - 1]
        # full reorthogonalization, twice for stability
        active = basis[: j + 1]
        w -= active.T @ (active @ w)
        w -= active.T @ (active @ w)
        m = j + 1
        beta = float(np.linalg.norm(w))
        if m == budget:
            break
        if beta < 1e-14:
            # invariant subspace found: continue with a fresh direction
            w = rng.standard_normal(n)
            w -= active.T @ (active @ w)
            nrm = np.linalg.norm(w)
            if nrm < 1e-14:
                break
            w /= nrm
            betas.append(0.0)
            basis[j + 1] = w
            continue
        betas.append(beta)
        basis[j + 1] = w / beta
        if m >= k and m % 5 == 0:
            theta, y = eigh_tridiagonal(np.array(alphas), np.array(betas[:-1]))
            # residual bound for Ritz pair i is |beta_m * y[last, i]|
            top = np.argsort(theta)[::-1][:k]
            bounds = np.abs(beta * y[-1, top])
            if bounds.max() < 0.1 * tol:
                break

    if m < k:
        raise ConvergenceError(
            f"Lanczos basis collapsed after {m} steps, {k} pairs requested",
            residual=float("inf"),
        )
    alphas_arr = np.array(alphas[:m])
    betas_arr = np.array(betas[: m - 1])
    if m == 1:
        theta = alphas_arr.copy()
        y = np.ones((1, 1))
    else:
        theta, y = eigh_tridiagonal(alphas_arr, betas_arr)
    top = np.argsort(theta)[::-1][:k]
    lam = np.ascontiguousarray(theta[top])
    vecs = basis[:m].T @ y[:, top]
    vecs /= np.linalg.norm(vecs, axis=0)
    residual = max(
        float(np.linalg.norm(matvec(vecs[:, i]) - lam[i] * vecs[:, i]))
        for i in range(k)
    )
    return lam, np.ascontiguousarray(vecs), residual


def band_project(d: SpectralDecomposition, k1: int, k2: int) -> BandOperator:
    """Band-limited operator over the inclusive global index range [k1, k2].

    The requested range must be covered by the stored eigenpairs, so a
    bottom band needs a decomposition computed with side="bottom".
    """
    if not (0 <= k1 <= k2 < d.n):
        raise ValueError(f"band [{k1}, {k2}] invalid for n={d.n}")
    lo, hi = d.offset, d.offset + d.num_pairs - 1
    if k1 < lo or k2 > hi:
        raise ValueError(
            f"band [{k1}, {k2}] not covered by stored eigenpairs [{lo}, {hi}]"
        )
    s1, s2 = k1 - d.offset, k2 - d.offset
    lam = d.eigenvalues
    splits_tie = bool(
        (s1 > 0 and lam[s1 - 1] - lam[s1] <= TIE_TOL)
        or (s2 + 1 < d.num_pairs and lam[s2] - lam[s2 + 1] <= TIE_TOL)
    )
    return BandOperator(
        eigenvalues=np.ascontiguousarray(lam[s1 : s2 + 1]),
        eigenvectors=np.ascontiguousarray(d.eigenvectors[:, s1 : s2 + 1]),
        k1=k1,
        k2=k2,
        n=d.n,
        splits_tie=splits_tie,
    )


def spectrum_report(d: SpectralDecomposition) -> list[tuple[int, float]]:
    """(global index, eigenvalue) rows in descending eigenvalue order."""
    return [(d.offset + i, float(v)) for i, v in enumerate(d.eigenvalues)]
