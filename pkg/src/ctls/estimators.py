"""Estimators for regression with noise in both sides of the system.

Five estimators share one convention: stack the data as ``C = [A | B]``,
look for the ``ell``-dimensional near-null subspace of an appropriate Gram
matrix, and normalize its basis ``Z = [Z_upper; Z_lower]`` into a coefficient
matrix ``X = -Z_upper @ inv(Z_lower)``.

* :func:`tls_solve` - no constraints; the subspace comes from ``C.T @ C``.
* :func:`ctls_columns` - the first ``k`` columns of ``A`` are exact; QR of
  the fixed columns reduces the problem to a smaller unconstrained one.
* :func:`ctls_rows` / :func:`ctls_rowcol` - the first ``j`` rows (and
  optionally ``k`` columns) are exact; a two-sided orthogonal transform plus
  block elimination zeroes the fixed-by-fixed corner, and the row
  constraints are enforced by restricting the eigenproblem to the null space
  of the exact rows.
* :func:`projection_estimator` - shifts the noisy Gram block by an estimate
  ``mu`` of the accumulated noise variance before projecting onto the null
  space of the exact rows; ``mu / m`` doubles as the noise-variance estimate.

Every matrix inverse is realized as a linear solve, and the conditioning of
each solve is surfaced in the returned diagnostics.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EstimatorWarning,
    InvalidPartitionError,
    LowerBlockSingularError,
    NearSingularError,
    RankDeficientFixedColumnsError,
    RankDeficientUpperRowsError,
)
from .linalg import (
    EMPTY_BLOCK,
    Block,
    RANK_TOL,
    as_matrix,
    is_empty,
    matrix_rank,
    null_space_basis,
    qr_thin,
    singular_values,
    solve_linear,
    solve_upper_triangular,
    svd,
    sym_eigen,
)
from .model import ObservedData, PartitionSpec

#: Relative eigenvalue-gap threshold below which the solution subspace is
#: flagged as not numerically unique.
EIG_GAP_TOL = 1e-10

#: Absolute smallest-singular-value threshold for the trailing block of the
#: solution eigenvectors (their columns have unit norm, so the scale is 1).
LOWER_BLOCK_TOL = 1e-12

MU_RULES = ("min", "mean", "max")


@dataclass
class Diagnostics:
    """Conditioning report attached to every estimate.

    ``flags`` carries non-fatal conditions (currently only
    ``"eig_gap_degenerate"``); ``rank_notes`` records every rank decision
    taken on the way to the estimate.
    """

    z_lower_smallest_sv: float | None = None
    c21_gram_condition: float | None = None
    eig_gap: float | None = None
    constraint_residual: float | None = None
    g_smallest_eigs: np.ndarray | None = None
    flags: list[str] = field(default_factory=list)
    rank_notes: list[str] = field(default_factory=list)


@dataclass
class EstimateResult:
    """An estimate plus the quantities needed to judge it.

    ``smallest_eigs`` holds the ``ell`` smallest eigenvalues (or Ritz
    values) consumed by the estimator, ascending.  ``mu`` is set by the
    projection estimator only; ``sigma2_hat`` is ``mu / m`` there and the
    mean of ``smallest_eigs`` over ``m`` for the eigenvalue-based
    estimators.
    """

    x_hat: np.ndarray
    sigma2_hat: float
    smallest_eigs: np.ndarray
    diagnostics: Diagnostics
    mu: float | None = None


@dataclass(frozen=True)
class CBlocks:
    """The observed data ``[A | B]`` split along the partition.

    ``c11 = A11`` (exact), ``c12 = [A12 B1]`` (exact rows), ``c21 = A21``
    (exact columns), ``c22 = [A22 B2]`` (the noisy block).  Blocks with zero
    rows or columns are the ``EMPTY_BLOCK`` sentinel.
    """

    c11: Block
    c12: Block
    c21: Block
    c22: np.ndarray
    partition: PartitionSpec

    def assemble(self) -> np.ndarray:
        """Reassemble the blocks into the full ``m x (n + ell)`` matrix."""
        bottom_parts = [] if is_empty(self.c21) else [self.c21]
        bottom = np.hstack(bottom_parts + [self.c22])
        if is_empty(self.c12):
            return bottom
        top_parts = [] if is_empty(self.c11) else [self.c11]
        top = np.hstack(top_parts + [self.c12])
        return np.vstack([top, bottom])


def build_blocks(data: ObservedData) -> CBlocks:
    """Slice the observed data into the four partition blocks."""
    p = data.partition
    a, b = data.a, data.b
    j, k = p.j, p.k
    c11: Block = a[:j, :k].copy() if j > 0 and k > 0 else EMPTY_BLOCK
    c12: Block = np.hstack([a[:j, k:], b[:j, :]]) if j > 0 else EMPTY_BLOCK
    c21: Block = a[j:, :k].copy() if k > 0 else EMPTY_BLOCK
    c22 = np.hstack([a[j:, k:], b[j:, :]])
    return CBlocks(c11=c11, c12=c12, c21=c21, c22=c22, partition=p)


def _normalize_subspace(
    fmat: np.ndarray,
    basis: np.ndarray | None,
    n_upper: int,
    ell: int,
) -> tuple[np.ndarray, np.ndarray, float | None, float, list[str]]:
    """Eigen-solve ``fmat``, lift the ``ell`` smallest vectors through
    ``basis`` and normalize the trailing block to ``-I``.

    Returns ``(x, smallest_values, gap, z_lower_min_sv, flags)``.
    """
    eig = sym_eigen(fmat)
    values = eig.values
    flags: list[str] = []
    gap: float | None = None
    if values.size > ell:
        gap = float(values[ell] - values[ell - 1])
        scale = float(np.linalg.norm(fmat, "fro"))
        if gap < EIG_GAP_TOL * scale:
            flags.append("eig_gap_degenerate")
            warnings.warn(
                f"eigenvalue gap {gap:.3e} below {EIG_GAP_TOL:.0e} * |F|; "
                "the solution subspace is not numerically unique",
                EstimatorWarning,
                stacklevel=3,
            )
    z_small = eig.vectors[:, :ell]
    z = basis @ z_small if basis is not None else z_small
    z_upper = z[:n_upper, :]
    z_lower = z[n_upper:, :]
    sv_low = singular_values(z_lower)
    if sv_low[-1] <= LOWER_BLOCK_TOL:
        raise LowerBlockSingularError(
            f"trailing {ell}x{ell} eigenvector block is singular "
            f"(smallest singular value {sv_low[-1]:.3e})"
        )
    try:
        x = solve_linear(z_lower.T, -z_upper.T).T
    except NearSingularError as exc:
        raise LowerBlockSingularError(str(exc)) from exc
    return x, values[:ell].copy(), gap, float(sv_low[-1]), flags


def _gram_condition(gram: np.ndarray) -> float:
    sv = singular_values(gram)
    return float("inf") if sv[-1] == 0.0 else float(sv[0] / sv[-1])


def tls_solve(a, b) -> EstimateResult:
    """Classical total least squares.

    Stacks ``C = [A | B]``, takes the ``ell`` smallest eigenpairs of
    ``C.T @ C`` and normalizes them into the coefficient matrix.  The noise
    variance estimate is the mean of those eigenvalues over ``m``.

    Raises
    ------
    LowerBlockSingularError
        Nongeneric instance: the solution subspace cannot be normalized.
    """
    a = as_matrix(a, "A")
    b = as_matrix(b, "B")
    if a.shape[0] != b.shape[0]:
        raise ValueError("A and B must have the same number of rows")
    m, n = a.shape
    c = np.hstack([a, b])
    f = c.T @ c
    x, eigs, gap, z_min, flags = _normalize_subspace(f, None, n, b.shape[1])
    diag = Diagnostics(z_lower_smallest_sv=z_min, eig_gap=gap, flags=flags)
    sigma2 = max(0.0, float(np.mean(eigs))) / m
    return EstimateResult(x_hat=x, sigma2_hat=sigma2, smallest_eigs=eigs, diagnostics=diag)


def ctls_columns(data: ObservedData) -> EstimateResult:
    """Constrained TLS with exactly-known leading columns (j = 0, 0 < k < n).

    QR of the fixed columns reduces the problem to an unconstrained one on
    the orthogonal complement of their range; the fixed-column coefficients
    are then recovered from the corrected (perturbed) data, so the original
    constraint holds exactly.

    Raises
    ------
    InvalidPartitionError
        If the partition is not j = 0 with 0 < k < n (k = n would be
        ordinary least squares, which is out of scope here).
    RankDeficientFixedColumnsError
        If the fixed columns are not of full column rank.
    """
    p = data.partition
    if p.j != 0 or p.k == 0 or p.k >= p.n:
        raise InvalidPartitionError(
            f"ctls_columns needs j=0 and 0<k<n, got j={p.j}, k={p.k}, n={p.n}"
        )
    p.require_overdetermined()
    m, n, k, ell = p.m, p.n, p.k, p.ell

    a1 = data.a[:, :k]
    q1, r1 = qr_thin(a1)
    sv1 = singular_values(r1)
    if sv1[0] == 0.0 or sv1[-1] <= RANK_TOL * sv1[0]:
        raise RankDeficientFixedColumnsError(
            f"fixed columns have singular values {sv1}; full column rank required"
        )

    c22 = np.hstack([data.a[:, k:], data.b])
    t = q1.T @ c22
    g = c22.T @ c22 - t.T @ t
    x2, eigs, gap, z_min, flags = _normalize_subspace(g, None, n - k, ell)

    # Rebuild the corrected data implied by the reduced solution, then read
    # the fixed-column coefficients off the triangular factor.  This makes
    # the full constraint (A1, A2+dA2) x = B+dB hold exactly.
    y = np.vstack([x2, -np.eye(ell)])
    resid = data.a[:, k:] @ x2 - data.b
    resid_perp = resid - q1 @ (q1.T @ resid)
    nmat = x2.T @ x2 + np.eye(ell)
    delta = -resid_perp @ solve_linear(nmat, y.T)
    a2_corr = data.a[:, k:] + delta[:, : n - k]
    b_corr = data.b + delta[:, n - k :]
    x1 = solve_upper_triangular(r1, q1.T @ b_corr - (q1.T @ a2_corr) @ x2)

    diag = Diagnostics(
        z_lower_smallest_sv=z_min,
        c21_gram_condition=float(sv1[0] / sv1[-1]) ** 2,
        eig_gap=gap,
        flags=flags,
    )
    sigma2 = max(0.0, float(np.mean(eigs))) / m
    return EstimateResult(
        x_hat=np.vstack([x1, x2]), sigma2_hat=sigma2, smallest_eigs=eigs, diagnostics=diag
    )


@dataclass(frozen=True)
class PreconditionRecord:
    """Everything needed to undo the fixed-corner elimination.

    The transform diagonalizes the exact ``j x k`` corner with an SVD
    ``A11 = u @ diag(sigma_r, 0) @ v.T``, then eliminates the leading
    ``rank`` pivots by row operations using exact rows only, and finally
    drops those pivot rows and columns from the problem.  ``pivot_c12``
    stores the dropped rows so their coefficients can be reconstructed, and
    ``v`` un-mixes the fixed-column coefficients.
    """

    u: np.ndarray
    v: np.ndarray
    rank: int
    sigma_r: np.ndarray
    pivot_c12: np.ndarray | None
    partition: PartitionSpec
    reduced_partition: PartitionSpec

    def transform_blocks(self, blocks: CBlocks) -> CBlocks:
        """Apply the stored transform to a compatible block partition.

        The transform is built from the exact blocks only, so it applies
        verbatim to ground-truth blocks that share them (the noisy block is
        shifted by fixed quantities, never rescaled).
        """
        p = self.partition
        j, k, r = p.j, p.k, self.rank
        c12t = self.u.T @ blocks.c12
        c21t = blocks.c21 @ self.v
        if r > 0:
            mult = c21t[:, :r] / self.sigma_r
            c22t = blocks.c22 - mult @ c12t[:r, :]
        else:
            c22t = blocks.c22.copy()
        c11_new: Block = (
            np.zeros((j - r, k - r)) if (j - r > 0 and k - r > 0) else EMPTY_BLOCK
        )
        c12_new: Block = c12t[r:, :].copy() if j - r > 0 else EMPTY_BLOCK
        c21_new: Block = c21t[:, r:].copy() if k - r > 0 else EMPTY_BLOCK
        return CBlocks(
            c11=c11_new,
            c12=c12_new,
            c21=c21_new,
            c22=c22t,
            partition=self.reduced_partition,
        )

    def recover(self, x_reduced: np.ndarray) -> np.ndarray:
        """Map a solution of the reduced problem back to original coordinates."""
        p = self.partition
        k, r = p.k, self.rank
        n_free = p.n_free
        if r > 0:
            x_free = x_reduced[k - r :, :]
            pivot_a = self.pivot_c12[:, :n_free]
            pivot_b = self.pivot_c12[:, n_free:]
            x_pivot = (pivot_b - pivot_a @ x_free) / self.sigma_r[:, None]
            x_prime = np.vstack([x_pivot, x_reduced])
        else:
            x_prime = x_reduced
        return np.vstack([self.v @ x_prime[:k, :], x_prime[k:, :]])


def precondition_rowcol(
    blocks: CBlocks, rank_tol: float = RANK_TOL
) -> tuple[CBlocks, PreconditionRecord]:
    """Zero the exact ``j x k`` corner and shrink the problem accordingly.

    SVD of the corner rotates the exact rows and fixed columns so the corner
    becomes ``diag(sigma_r, 0)``; block elimination on the ``rank``
    nonsingular pivots then zeroes the fixed columns below them.  The pivot
    rows determine their coefficients a posteriori, so they are dropped,
    leaving a problem whose exact corner is identically zero.  An already
    zero corner yields the identity transform.
    """
    p = blocks.partition
    if p.j == 0 or p.k == 0:
        raise InvalidPartitionError("precondition_rowcol needs j > 0 and k > 0")
    dec = svd(blocks.c11)
    sv = dec.singular_values
    r = int(np.count_nonzero(sv > rank_tol * sv[0])) if sv[0] > 0.0 else 0
    reduced = PartitionSpec(
        j=p.j - r, k=p.k - r, n=p.n - r, ell=p.ell, m=p.m - r
    )
    record = PreconditionRecord(
        u=dec.u,
        v=dec.v,
        rank=r,
        sigma_r=sv[:r].copy(),
        pivot_c12=(dec.u.T @ blocks.c12)[:r, :].copy() if r > 0 else None,
        partition=p,
        reduced_partition=reduced,
    )
    return record.transform_blocks(blocks), record


def _schur_gram(
    c21: np.ndarray, c22: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gram matrix of the noisy block after eliminating the fixed columns.

    Returns ``(g, gram21, cross)`` where ``gram21 = c21.T @ c21`` and
    ``cross = c21.T @ c22``; the inverse in the elimination is a linear
    solve, so near-singular fixed-column Grams are rejected loudly.
    """
    gram21 = c21.T @ c21
    cross = c21.T @ c22
    g = c22.T @ c22 - cross.T @ solve_linear(gram21, cross)
    return g, gram21, cross


def ctls_rowcol(data: ObservedData, rank_tol: float = RANK_TOL) -> EstimateResult:
    """Constrained TLS with exact leading rows and columns.

    Pipeline: eliminate the exact corner (:func:`precondition_rowcol`),
    restrict the eliminated Gram matrix ``G`` to the null space of the
    remaining exact rows, extract the ``ell`` smallest Ritz pairs, normalize
    them into the free-column coefficients, then solve the fixed-column
    normal equations and undo the preconditioning.  Degenerate partitions
    collapse to the simpler estimators (j = k = 0 is plain TLS).

    Raises
    ------
    RankDeficientUpperRowsError
        If the exact rows are rank deficient; select independent rows first.
    NearSingularError
        If the fixed-column Gram matrix is numerically singular.
    LowerBlockSingularError
        Nongeneric instance (see :func:`tls_solve`).
    """
    p = data.partition
    if p.j == 0 and p.k == 0:
        return tls_solve(data.a, data.b)
    p.require_overdetermined()
    m, ell = p.m, p.ell
    n_free = p.n_free

    if p.j > 0 and matrix_rank(data.a[: p.j, :], rank_tol) != p.j:
        raise RankDeficientUpperRowsError(
            f"the {p.j} exact rows of A are rank deficient"
        )

    blocks = build_blocks(data)
    record: PreconditionRecord | None = None
    if p.j > 0 and p.k > 0:
        blocks, record = precondition_rowcol(blocks, rank_tol)
    rp = blocks.partition

    notes = []
    if record is not None:
        notes.append(
            f"fixed-corner rank {record.rank} eliminated (j {p.j}->{rp.j}, "
            f"k {p.k}->{rp.k})"
        )

    if rp.j > 0:
        c12 = blocks.c12
        if rp.j > n_free or matrix_rank(c12, rank_tol) != rp.j:
            raise RankDeficientUpperRowsError(
                "exact rows remaining after preconditioning are rank deficient "
                f"or too many (j'={rp.j}, free columns={n_free})"
            )
        basis = null_space_basis(c12, rank_tol)
    else:
        basis = None

    cond21 = None
    if rp.k > 0:
        g, gram21, _ = _schur_gram(blocks.c21, blocks.c22)
        cond21 = _gram_condition(gram21)
    else:
        g = blocks.c22.T @ blocks.c22

    fmat = basis.T @ g @ basis if basis is not None else g
    x_lower, ritz, gap, z_min, flags = _normalize_subspace(fmat, basis, n_free, ell)

    if rp.k > 0:
        a22 = blocks.c22[:, :n_free]
        b2 = blocks.c22[:, n_free:]
        x_top = solve_linear(gram21, blocks.c21.T @ (b2 - a22 @ x_lower))
        x_reduced = np.vstack([x_top, x_lower])
    else:
        x_reduced = x_lower

    x_hat = record.recover(x_reduced) if record is not None else x_reduced

    constraint_residual = None
    if p.j > 0:
        constraint_residual = float(
            np.linalg.norm(data.a[: p.j] @ x_hat - data.b[: p.j], "fro")
        )
    diag = Diagnostics(
        z_lower_smallest_sv=z_min,
        c21_gram_condition=cond21,
        eig_gap=gap,
        constraint_residual=constraint_residual,
        flags=flags,
        rank_notes=notes,
    )
    sigma2 = max(0.0, float(np.mean(ritz))) / m
    return EstimateResult(
        x_hat=x_hat, sigma2_hat=sigma2, smallest_eigs=ritz, diagnostics=diag
    )


def ctls_rows(data: ObservedData) -> EstimateResult:
    """Constrained TLS with exactly-known leading rows (k = 0, 0 < j < n).

    The row+column machinery covers this case with an empty fixed-column
    block, so this is a thin wrapper that validates the partition.
    """
    p = data.partition
    if p.k != 0 or p.j == 0:
        raise InvalidPartitionError(
            f"ctls_rows needs k=0 and j>0, got j={p.j}, k={p.k}"
        )
    return ctls_rowcol(data)


def projection_estimator(
    data: ObservedData, mu_rule: str = "mean", rank_tol: float = RANK_TOL
) -> EstimateResult:
    """Orthogonal-projection estimator with a noise-variance shift.

    The noisy Gram block is shifted by ``mu``, a point in the range of the
    ``ell`` smallest eigenvalues of the column-eliminated Gram matrix ``G``;
    the shifted matrix is then projected onto the null space of the exact
    rows and the ``ell`` smallest Ritz pairs give the estimate.  ``mu / m``
    estimates the noise variance.

    ``mu_rule`` picks the representative in {"min", "mean", "max"} of those
    eigenvalues (any choice is admissible; the mean is the symmetric
    default).
    """
    if mu_rule not in MU_RULES:
        raise ValueError(f"mu_rule must be one of {MU_RULES}, got {mu_rule!r}")
    p = data.partition
    p.require_overdetermined()
    m, n, ell = p.m, p.n, p.ell
    blocks = build_blocks(data)

    basis = None
    if p.j > 0:
        upper_parts = [] if is_empty(blocks.c11) else [blocks.c11]
        c_upper = np.hstack(upper_parts + [blocks.c12])
        if matrix_rank(c_upper, rank_tol) != p.j:
            raise RankDeficientUpperRowsError(
                f"the {p.j} exact rows of [A | B] are rank deficient"
            )
        basis = null_space_basis(c_upper, rank_tol)

    c22 = blocks.c22
    c22_gram = c22.T @ c22
    cond21 = None
    if p.k > 0:
        c21 = blocks.c21
        gram21 = c21.T @ c21
        cross = c21.T @ c22
        g = c22_gram - cross.T @ solve_linear(gram21, cross)
        cond21 = _gram_condition(gram21)
    else:
        g = c22_gram

    g_eigs = sym_eigen(g).values[:ell]
    if mu_rule == "min":
        mu = float(g_eigs[0])
    elif mu_rule == "max":
        mu = float(g_eigs[-1])
    else:
        mu = float(np.mean(g_eigs))

    shifted = c22_gram - mu * np.eye(c22_gram.shape[0])
    if p.k > 0:
        f = np.block([[gram21, cross], [cross.T, shifted]])
    else:
        f = shifted

    fmat = basis.T @ f @ basis if basis is not None else f
    x_hat, ritz, gap, z_min, flags = _normalize_subspace(fmat, basis, n, ell)

    constraint_residual = None
    if p.j > 0:
        constraint_residual = float(
            np.linalg.norm(data.a[: p.j] @ x_hat - data.b[: p.j], "fro")
        )
    diag = Diagnostics(
        z_lower_smallest_sv=z_min,
        c21_gram_condition=cond21,
        eig_gap=gap,
        constraint_residual=constraint_residual,
        g_smallest_eigs=g_eigs.copy(),
        flags=flags,
    )
    return EstimateResult(
        x_hat=x_hat,
        sigma2_hat=max(0.0, mu) / m,
        smallest_eigs=ritz,
        diagnostics=diag,
        mu=mu,
    )


def estimate_sigma(result: EstimateResult, m: int) -> float:
    """Noise-variance estimate from a TLS or projection result.

    Returns ``mu / m`` when the result carries the projection shift and the
    mean of the smallest eigenvalues over ``m`` otherwise; clamped at zero.
    """
    if m < 1:
        raise ValueError("m must be positive")
    value = result.mu if result.mu is not None else float(np.mean(result.smallest_eigs))
    return max(0.0, value / m)
