"""Linear solvers for grid Laplacian systems.

``solve_exact`` is integer-preserving Gaussian elimination restricted to the
band of the matrix, with each updated row divided by its content gcd; back
substitution is in exact rationals.  No pivoting: the systems are symmetric
positive definite so every leading minor is nonzero.

``pcg`` is a Jacobi-preconditioned conjugate gradient.
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Sequence

import numpy as np
import scipy.sparse as sp


class SolverError(RuntimeError):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


def bandwidth(A: sp.spmatrix) -> int:
    coo = sp.coo_matrix(A)
    if coo.nnz == 0:
        return 0
    return int(np.abs(coo.row - coo.col).max())


def solve_exact(A: sp.spmatrix, B: Sequence[Sequence[int]] | np.ndarray) -> list[list[Fraction]]:
    """Solve ``A X = B`` exactly for an integer SPD sparse ``A``.

    ``B`` has one row per unknown and one column per right-hand side.
    Returns ``X`` as rows of Fractions.
    """
    A = sp.csr_matrix(A)
    size = A.shape[0]
    B = [[int(x) for x in row] for row in np.asarray(B, dtype=object).reshape(size, -1)]
    m = len(B[0]) if size else 0
    bw = bandwidth(A)
    width = 2 * bw + 1
    rows = []
    for i in range(size):
        row = [0] * width
        lo, hi = A.indptr[i], A.indptr[i + 1]
        for j, val in zip(A.indices[lo:hi], A.data[lo:hi]):
            if val != int(val):
                raise ValueError("exact solve needs an integer matrix")
            row[j - i + bw] = int(val)
        rows.append(row)

    for k in range(size):
        rk, bk = rows[k], B[k]
        pivot = rk[bw]
        if pivot == 0:
            raise SolverError(f"zero pivot at row {k}; matrix is not positive definite")
        for i in range(k + 1, min(size, k + bw + 1)):
            ri = rows[i]
            off = i - k
            factor = ri[bw - off]
            if factor == 0:
                continue
            # row k is zero left of its diagonal, so only columns k.. mix in
            for jk in range(bw, width):
                ji = jk - off
                ri[ji] = pivot * ri[ji] - factor * rk[jk]
            for ji in range(width - off, width):
                ri[ji] *= pivot
            bi = B[i]
            for t in range(m):
                bi[t] = pivot * bi[t] - factor * bk[t]
            g = 0
            for val in ri:
                g = gcd(g, val)
            for val in bi:
                g = gcd(g, val)
            if g > 1:
                rows[i] = [val // g for val in ri]
                B[i] = [val // g for val in bi]

    X: list[list[Fraction]] = [[Fraction(0)] * m for _ in range(size)]
    for k in range(size - 1, -1, -1):
        rk = rows[k]
        pivot = rk[bw]
        upper = [(j, rk[j - k + bw]) for j in range(k + 1, min(size, k + bw + 1)) if rk[j - k + bw]]
        out = X[k]
        for t in range(m):
            acc = Fraction(B[k][t])
            for j, a in upper:
                acc -= a * X[j][t]
            out[t] = acc / pivot
    return X


def pcg(
    A: sp.spmatrix,
    b: np.ndarray,
    rtol: float = 1e-12,
    maxiter: int | None = None,
) -> tuple[np.ndarray, int, float]:
    """Conjugate gradient with a diagonal preconditioner.

    Returns ``(x, iterations, relative_residual)``; raises
    :class:`SolverError` when the residual target is not met in time.
    """
    A = sp.csr_matrix(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if maxiter is None:
        maxiter = 50 * A.shape[0]
    inv_diag = 1.0 / A.diagonal()
    norm_b = np.linalg.norm(b)
    x = np.zeros_like(b)
    if norm_b == 0:
        return x, 0, 0.0
    r = b.copy()
    z = inv_diag * r
    p = z.copy()
    rz = r @ z
    rel = 1.0
    for it in range(1, maxiter + 1):
        Ap = A @ p
        alpha = rz / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        rel = np.linalg.norm(r) / norm_b
        if rel <= rtol:
            # guard against drift of the recursive residual
            rel = np.linalg.norm(b - A @ x) / norm_b
            if rel <= rtol:
                return x, it, float(rel)
            r = b - A @ x
        z = inv_diag * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError(
        f"CG did not reach relative residual {rtol:g} in {maxiter} iterations (got {rel:.3e})",
        residual=float(rel),
        iterations=maxiter,
    )
