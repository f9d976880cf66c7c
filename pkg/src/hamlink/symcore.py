"""Structured linear algebra over quadrature space.

A system of k canonical mode or field pairs is described in the real basis
(q_1..q_k, p_1..p_k), where the commutation structure is carried by the
skew form J = [[0, I], [-I, 0]].  This module implements the calculus built
on that form: the J-adjoint that plays the role of the conjugate transpose,
symplectic and J-skew predicates, the Cayley map between J-skew matrices
and symplectic gains, quadrature embeddings of complex scattering and
coupling data, the permutation that regroups stacked quadratures into port
groups, and a block-diagonal variant of the SVD used by channel synthesis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AlgebraicLoopError, ValidationError

__all__ = [
    "jmat",
    "sharp_adjoint",
    "symplectic_defect",
    "is_symplectic",
    "sharp_skew_defect",
    "is_sharp_skew",
    "cayley_sigma_from_x",
    "cayley_x_from_sigma",
    "build_partition_permutation",
    "unitary_to_quadrature",
    "coupling_to_quadrature",
    "SpecialSvd",
    "special_svd",
]


def jmat(k: int) -> np.ndarray:
    """Return the canonical skew form J of size 2k x 2k.

    J = [[0, I_k], [-I_k, 0]].  J is orthogonal, skew-symmetric, and
    J @ J = -I.
    """
    if k < 0:
        raise ValidationError(f"mode count must be nonnegative, got {k}")
    j = np.zeros((2 * k, 2 * k))
    j[:k, k:] = np.eye(k)
    j[k:, :k] = -np.eye(k)
    return j


def as_even_matrix(x, name: str = "matrix") -> np.ndarray:
    """Coerce x to a real 2-d float array with even dimensions.

    Raises ValidationError on wrong rank, odd dimensions, or non-finite
    entries.  Zero-sized dimensions are allowed; they describe systems with
    no ports.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be 2-d, got shape {arr.shape}")
    if arr.shape[0] % 2 or arr.shape[1] % 2:
        raise ValidationError(
            f"{name} must have even dimensions (pairs of quadratures), "
            f"got shape {arr.shape}"
        )
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


def sharp_adjoint(x) -> np.ndarray:
    """J-adjoint of a real matrix between quadrature spaces.

    For a 2r x 2s matrix X the adjoint is -J_2s @ X.T @ J_2r, a 2s x 2r
    matrix.  It is the analogue of the conjugate transpose for the bilinear
    form carried by J: applying it twice is the identity, and it reverses
    products.
    """
    arr = as_even_matrix(x, "sharp_adjoint input")
    r = arr.shape[0] // 2
    s = arr.shape[1] // 2
    return -jmat(s) @ arr.T @ jmat(r)


def symplectic_defect(t) -> float:
    """Max-abs residual of T @ J @ T.T - J for a square even matrix."""
    arr = as_even_matrix(t, "symplectic_defect input")
    if arr.shape[0] != arr.shape[1]:
        raise ValidationError(
            f"symplectic test needs a square matrix, got shape {arr.shape}"
        )
    if arr.shape[0] == 0:
        return 0.0
    j = jmat(arr.shape[0] // 2)
    return float(np.max(np.abs(arr @ j @ arr.T - j)))


def is_symplectic(t, tol: float = 1e-10) -> bool:
    """True when T @ J @ T.T equals J within tol (max-abs)."""
    return symplectic_defect(t) <= tol


def sharp_skew_defect(x) -> float:
    """Max-abs residual of X + sharp_adjoint(X) for a square even matrix."""
    arr = as_even_matrix(x, "sharp_skew_defect input")
    if arr.shape[0] != arr.shape[1]:
        raise ValidationError(
            f"J-skew test needs a square matrix, got shape {arr.shape}"
        )
    if arr.shape[0] == 0:
        return 0.0
    return float(np.max(np.abs(arr + sharp_adjoint(arr))))


def is_sharp_skew(x, tol: float = 1e-10) -> bool:
    """True when sharp_adjoint(X) == -X within tol (max-abs).

    Equivalent to J @ X being symmetric, which is exactly the condition for
    X to generate a Hamiltonian contribution of the form (1/2) z.T (J X) z.
    """
    return sharp_skew_defect(x) <= tol


_COND_CAP = 1e12


def _guarded_solve(w: np.ndarray, rhs: np.ndarray, what: str) -> np.ndarray:
    """Solve w @ out = rhs with a condition-number guard."""
    if w.shape[0] == 0:
        return np.zeros((0, rhs.shape[1]))
    cond = np.linalg.cond(w)
    if not np.isfinite(cond) or cond > _COND_CAP:
        raise AlgebraicLoopError(
            f"{what} is singular or near-singular (condition number "
            f"{cond:.3e} exceeds {_COND_CAP:.0e})"
        )
    return np.linalg.solve(w, rhs)


def cayley_sigma_from_x(x, skew_tol: float = 1e-9) -> np.ndarray:
    """Map a J-skew matrix X to the symplectic gain (X - I)(X + I)^-1.

    The input must be J-skew within skew_tol; the output is then real
    symplectic and has no eigenvalue at one.  Raises AlgebraicLoopError when
    X + I is singular or nearly so, which happens exactly when X has an
    eigenvalue at minus one.
    """
    arr = as_even_matrix(x, "cayley input")
    if arr.shape[0] != arr.shape[1]:
        raise ValidationError(f"cayley input must be square, got {arr.shape}")
    defect = sharp_skew_defect(arr)
    if defect > skew_tol * max(1.0, float(np.max(np.abs(arr))) if arr.size else 1.0):
        raise ValidationError(
            f"cayley input is not J-skew (defect {defect:.3e})"
        )
    n = arr.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    eye = np.eye(n)
    # (X - I)(X + I)^-1 computed as a transposed solve to avoid an explicit
    # inverse; (X - I) and (X + I)^-1 commute, so the order is immaterial.
    return _guarded_solve((arr + eye).T, (arr - eye).T, "X + I").T


def cayley_x_from_sigma(sigma, symp_tol: float = 1e-9) -> np.ndarray:
    """Invert the Cayley map: X = (I + S)(I - S)^-1 for symplectic S.

    Raises AlgebraicLoopError when S has an eigenvalue at one, in which case
    no finite J-skew preimage exists.
    """
    arr = as_even_matrix(sigma, "cayley inverse input")
    if arr.shape[0] != arr.shape[1]:
        raise ValidationError(
            f"cayley inverse input must be square, got {arr.shape}"
        )
    defect = symplectic_defect(arr)
    if defect > symp_tol * max(1.0, float(np.max(np.abs(arr))) if arr.size else 1.0) ** 2:
        raise ValidationError(
            f"cayley inverse input is not symplectic (defect {defect:.3e})"
        )
    n = arr.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    eye = np.eye(n)
    return _guarded_solve((eye - arr).T, (eye + arr).T, "I - sigma").T


def build_partition_permutation(m_a: int, m_b: int) -> np.ndarray:
    """Permutation regrouping stacked quadratures into two port groups.

    With m = m_a + m_b channels ordered (q_1..q_m, p_1..p_m), the returned
    2m x 2m permutation P satisfies: P applied to the stacked vector yields
    (q_1..q_ma, p_1..p_ma, q_{ma+1}..q_m, p_{ma+1}..p_m), i.e. the first
    group's quadrature pairs followed by the second group's.  P conjugates
    the skew form into a direct sum: P J_2m P.T = diag(J_2ma, J_2mb)
    exactly.
    """
    if m_a < 0 or m_b < 0:
        raise ValidationError(
            f"group sizes must be nonnegative, got ({m_a}, {m_b})"
        )
    m = m_a + m_b
    p = np.zeros((2 * m, 2 * m))
    for i in range(m_a):
        p[i, i] = 1.0
        p[m_a + i, m + i] = 1.0
    for i in range(m_b):
        p[2 * m_a + i, m_a + i] = 1.0
        p[2 * m_a + m_b + i, m + m_a + i] = 1.0
    return p


def unitary_to_quadrature(s, tol: float = 1e-10) -> np.ndarray:
    """Embed a complex unitary scattering matrix into quadrature form.

    For unitary S of size m x m the result is the 2m x 2m real matrix
    [[Re S, -Im S], [Im S, Re S]], which is orthogonal and symplectic.
    """
    arr = np.asarray(s, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValidationError(
            f"scattering matrix must be square, got shape {arr.shape}"
        )
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValidationError("scattering matrix contains non-finite entries")
    m = arr.shape[0]
    defect = float(np.max(np.abs(arr.conj().T @ arr - np.eye(m)))) if m else 0.0
    if defect > tol:
        raise ValidationError(
            f"scattering matrix is not unitary (defect {defect:.3e})"
        )
    out = np.zeros((2 * m, 2 * m))
    out[:m, :m] = arr.real
    out[:m, m:] = -arr.imag
    out[m:, :m] = arr.imag
    out[m:, m:] = arr.real
    return out


def coupling_to_quadrature(l_q, l_p) -> np.ndarray:
    """Embed complex coupling blocks into a real quadrature coupling matrix.

    l_q and l_p are the m x n complex couplings of the fields to the
    position-like and momentum-like quadratures.  The result is the
    2m x 2n real matrix [[2 Re l_q, 2 Re l_p], [2 Im l_q, 2 Im l_p]].
    """
    lq = np.asarray(l_q, dtype=complex)
    lp = np.asarray(l_p, dtype=complex)
    if lq.ndim != 2 or lp.ndim != 2:
        raise ValidationError("coupling blocks must be 2-d")
    if lq.shape != lp.shape:
        raise ValidationError(
            f"coupling blocks must share a shape, got {lq.shape} and {lp.shape}"
        )
    if (lq.size and not np.all(np.isfinite(lq))) or (
        lp.size and not np.all(np.isfinite(lp))
    ):
        raise ValidationError("coupling blocks contain non-finite entries")
    m, n = lq.shape
    out = np.zeros((2 * m, 2 * n))
    out[:m, :n] = 2 * lq.real
    out[:m, n:] = 2 * lp.real
    out[m:, :n] = 2 * lq.imag
    out[m:, n:] = 2 * lp.imag
    return out


@dataclass(frozen=True)
class SpecialSvd:
    """Orthogonal factorization A = u @ t @ v.T with block-diagonal t.

    For A of size 2r x 2s, u (2r x 2r) and v (2s x 2s) are orthogonal and t
    is zero except on the main diagonals of its four r x s sub-blocks, with
    the off-diagonal sub-blocks identically zero.  The singular values of A
    above the rank threshold appear on the two block diagonals: the first
    ceil(rank/2) on block one, the remainder on block two, each padded with
    zeros.  Entries below the threshold are flushed to exact zeros, so
    u @ t @ v.T reproduces A only up to the discarded part.

    Attributes:
        u, t, v: the factors.
        rank: number of singular values above the relative threshold.
        nullity_split: zeros on (block one, block two) diagonals, counting
            only the min(r, s) slots each block offers.
        row_order, col_order: permutations taking ordinary SVD factors to
            u and v; column i of the ordinary factor lands at column
            row_order[i] of u (col_order[i] of v).
    """

    u: np.ndarray
    t: np.ndarray
    v: np.ndarray
    rank: int
    nullity_split: tuple[int, int]
    row_order: np.ndarray
    col_order: np.ndarray

    def block1_diag(self) -> np.ndarray:
        """Diagonal of the upper-left sub-block of t."""
        r = self.t.shape[0] // 2
        s = self.t.shape[1] // 2
        q = min(r, s)
        return np.array([self.t[i, i] for i in range(q)])

    def block2_diag(self) -> np.ndarray:
        """Diagonal of the lower-right sub-block of t."""
        r = self.t.shape[0] // 2
        s = self.t.shape[1] // 2
        q = min(r, s)
        return np.array([self.t[r + i, s + i] for i in range(q)])

    def permutation_matrices(self) -> tuple[np.ndarray, np.ndarray]:
        """Materialize (P_row, P_col) with t = P_row @ t_plain @ P_col.

        t_plain is the ordinary rectangular diag(singular values), with the
        sub-threshold values flushed to zero.
        """
        two_r = self.t.shape[0]
        two_s = self.t.shape[1]
        p_row = np.zeros((two_r, two_r))
        p_col = np.zeros((two_s, two_s))
        for i, target in enumerate(self.row_order):
            p_row[target, i] = 1.0
        for i, target in enumerate(self.col_order):
            p_col[i, target] = 1.0
        return p_row, p_col


def special_svd(a, rank_tol: float = 1e-10) -> SpecialSvd:
    """SVD variant placing singular values on two sub-block diagonals.

    Computes an ordinary SVD, decides the numerical rank k by the relative
    threshold rank_tol (a singular value counts as nonzero when it exceeds
    rank_tol times the largest), flushes the rest to zero, and permutes the
    factors so the surviving values fill the diagonal of the upper-left
    sub-block first (ceil(k/2) of them) and the diagonal of the lower-right
    sub-block with the remainder.  Leftover diagonal slots stay zero, split
    as evenly as possible with the extra zero on block two.

    The returned factors satisfy u @ t @ v.T == a up to the flushed part,
    with u and v orthogonal.
    """
    arr = as_even_matrix(a, "special_svd input")
    two_r, two_s = arr.shape
    r, s = two_r // 2, two_s // 2
    q = min(r, s)
    d = min(two_r, two_s)

    if d == 0:
        return SpecialSvd(
            u=np.eye(two_r),
            t=np.zeros((two_r, two_s)),
            v=np.eye(two_s),
            rank=0,
            nullity_split=(0, 0),
            row_order=np.arange(two_r),
            col_order=np.arange(two_s),
        )

    u_plain, sing, vt_plain = np.linalg.svd(arr)
    smax = float(sing[0])
    if smax > 0.0:
        rank = int(np.count_nonzero(sing > rank_tol * smax))
    else:
        rank = 0

    head = (rank + 1) // 2
    tail = rank - head
    z1 = q - head
    z2 = q - tail
    # Target slot for each ordinary-SVD index: nonzero values first, filling
    # block one then block two, then the leftover zero slots in the same
    # block order.
    slots: list[tuple[int, int]] = []
    slots += [(0, j) for j in range(head)]
    slots += [(1, j) for j in range(tail)]
    slots += [(0, head + j) for j in range(z1)]
    slots += [(1, tail + j) for j in range(z2)]

    t = np.zeros((two_r, two_s))
    row_order = np.full(two_r, -1, dtype=int)
    col_order = np.full(two_s, -1, dtype=int)
    for i, (blk, j) in enumerate(slots):
        tr = j if blk == 0 else r + j
        tc = j if blk == 0 else s + j
        row_order[i] = tr
        col_order[i] = tc
        if i < rank:
            t[tr, tc] = sing[i]

    # Factor columns beyond the 2q paired slots carry null directions; send
    # them to the remaining positions in ascending order.
    if two_r > d:
        free = sorted(set(range(two_r)) - set(row_order[:d]))
        row_order[d:] = free
    if two_s > d:
        free = sorted(set(range(two_s)) - set(col_order[:d]))
        col_order[d:] = free

    u = np.empty((two_r, two_r))
    u[:, row_order] = u_plain
    v = np.empty((two_s, two_s))
    v[:, col_order] = vt_plain.T

    return SpecialSvd(
        u=u,
        t=t,
        v=v,
        rank=rank,
        nullity_split=(z1, z2),
        row_order=row_order,
        col_order=col_order,
    )
