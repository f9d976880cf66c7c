"""Constructive synthesis of a feedback realization of a bilinear coupling.

Given the interaction matrix r_ab of a direct bilinear Hamiltonian between
two systems, this module produces interconnection couplings c_a and c_b, a
J-skew loop matrix x with its symplectic Cayley image sigma, and corrected
local Hamiltonian matrices r_a and r_b, such that closing the field loop
through sigma reproduces the direct interaction's dynamics exactly.

The construction factors r_ab through the block-diagonal SVD variant, picks
the channel count m between ceil(rank/2) and min(n_a, n_b), and solves one
scalar equation per channel for the second system's coupling gains.  The
free parameters (per-channel loop diagonals y1, y2, first-system gains ga1,
ga2, and an orthogonal symplectic mixing matrix p) default to ones and the
identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    HamlinkError,
    InfeasibleChannelCountError,
    SingularParameterError,
    ValidationError,
)
from .symcore import (
    as_even_matrix,
    cayley_sigma_from_x,
    is_sharp_skew,
    jmat,
    sharp_adjoint,
    special_svd,
    symplectic_defect,
)

__all__ = [
    "SynthOptions",
    "FeedbackRealization",
    "min_channels",
    "coupling_relation_residual",
    "transpose_coupling_identity_check",
    "hamiltonian_corrections",
    "synthesize",
]

_PARAM_TINY = 1e-12


@dataclass(frozen=True, eq=False)
class SynthOptions:
    """Free parameters of the synthesis.

    m: channel count, or None for the minimum feasible count.
    y1, y2: per-channel diagonals of the loop matrix factor, default ones.
    ga1, ga2: per-channel coupling gains of the first system, default ones.
    p: orthogonal symplectic 2m x 2m mixing matrix, default identity.
    rank_tol: relative threshold deciding the numerical rank of r_ab.
    """

    m: int | None = None
    y1: tuple[float, ...] | None = None
    y2: tuple[float, ...] | None = None
    ga1: tuple[float, ...] | None = None
    ga2: tuple[float, ...] | None = None
    p: np.ndarray | None = None
    rank_tol: float = 1e-10


@dataclass(frozen=True, eq=False)
class FeedbackRealization:
    """Result of the synthesis: loop couplings, loop matrix, corrections.

    Only structural properties (shapes, finiteness) are enforced here.
    Semantic invariants like symmetry of r_a, J-skewness of x, or
    symplecticity of sigma are the verifier's concern, so that reports on
    perturbed or corrupted realizations can still be produced.
    """

    m: int
    c_a: np.ndarray
    c_b: np.ndarray
    x: np.ndarray
    sigma: np.ndarray
    r_a: np.ndarray
    r_b: np.ndarray

    def __post_init__(self):
        if self.m < 0:
            raise ValidationError(f"channel count must be nonnegative, got {self.m}")
        width = 2 * self.m
        c_a = as_even_matrix(self.c_a, "c_a")
        c_b = as_even_matrix(self.c_b, "c_b")
        x = as_even_matrix(self.x, "x")
        sigma = as_even_matrix(self.sigma, "sigma")
        r_a = as_even_matrix(self.r_a, "r_a")
        r_b = as_even_matrix(self.r_b, "r_b")
        if c_a.shape[0] != width or c_b.shape[0] != width:
            raise ValidationError(
                f"loop couplings must have {width} rows, got "
                f"{c_a.shape[0]} and {c_b.shape[0]}"
            )
        if x.shape != (width, width) or sigma.shape != (width, width):
            raise ValidationError(
                f"x and sigma must be {width} x {width}, got "
                f"{x.shape} and {sigma.shape}"
            )
        if r_a.shape != (c_a.shape[1], c_a.shape[1]):
            raise ValidationError(
                f"r_a must be {c_a.shape[1]} x {c_a.shape[1]}, got {r_a.shape}"
            )
        if r_b.shape != (c_b.shape[1], c_b.shape[1]):
            raise ValidationError(
                f"r_b must be {c_b.shape[1]} x {c_b.shape[1]}, got {r_b.shape}"
            )
        for name, mat in (
            ("c_a", c_a), ("c_b", c_b), ("x", x),
            ("sigma", sigma), ("r_a", r_a), ("r_b", r_b),
        ):
            object.__setattr__(self, name, mat)

    @property
    def n_a(self) -> int:
        return self.c_a.shape[1] // 2

    @property
    def n_b(self) -> int:
        return self.c_b.shape[1] // 2


def min_channels(r_ab, rank_tol: float = 1e-10) -> int:
    """Minimum feasible interconnection channel count for a coupling.

    Equals ceil(rank/2): each channel carries a quadrature pair, so it can
    absorb up to two singular values of r_ab, one on each block diagonal.
    """
    arr = as_even_matrix(r_ab, "r_ab")
    if arr.size == 0:
        return 0
    sing = np.linalg.svd(arr, compute_uv=False)
    smax = float(sing[0])
    rank = int(np.count_nonzero(sing > rank_tol * smax)) if smax > 0 else 0
    return (rank + 1) // 2


def coupling_relation_residual(r_ab, c_a, c_b, x) -> float:
    """Scaled residual of the coupling factorization identity.

    Measures how far r_ab is from (1/2) J c_a# (x + I) c_b, as a max-abs
    residual divided by max(1, max-abs of r_ab).  A valid realization drives
    this to floating-point level.
    """
    r_ab = as_even_matrix(r_ab, "r_ab")
    c_a = as_even_matrix(c_a, "c_a")
    c_b = as_even_matrix(c_b, "c_b")
    x = as_even_matrix(x, "x")
    n_a = r_ab.shape[0] // 2
    width = x.shape[0]
    if x.shape[1] != width:
        raise ValidationError(f"x must be square, got {x.shape}")
    if c_a.shape[0] != width or c_b.shape[0] != width:
        raise ValidationError(
            f"couplings must have {width} rows, got "
            f"{c_a.shape[0]} and {c_b.shape[0]}"
        )
    if c_a.shape[1] != r_ab.shape[0] or c_b.shape[1] != r_ab.shape[1]:
        raise ValidationError(
            f"coupling columns {c_a.shape[1]} x {c_b.shape[1]} do not match "
            f"r_ab shape {r_ab.shape}"
        )
    rhs = 0.5 * jmat(n_a) @ sharp_adjoint(c_a) @ (x + np.eye(width)) @ c_b
    res = float(np.max(np.abs(r_ab - rhs))) if r_ab.size else 0.0
    scale = max(1.0, float(np.max(np.abs(r_ab))) if r_ab.size else 0.0)
    return res / scale


def transpose_coupling_identity_check(c_a, c_b, x) -> float:
    """Max-abs residual of the transposed coupling factorization.

    For J-skew x, the transpose of (1/2) J c_a# (x + I) c_b equals
    (1/2) J c_b# (x - I) c_a.  The returned defect is at rounding level for
    any realization built by this module and grows when x loses J-skewness.
    """
    c_a = as_even_matrix(c_a, "c_a")
    c_b = as_even_matrix(c_b, "c_b")
    x = as_even_matrix(x, "x")
    width = x.shape[0]
    if x.shape[1] != width:
        raise ValidationError(f"x must be square, got {x.shape}")
    if c_a.shape[0] != width or c_b.shape[0] != width:
        raise ValidationError(
            f"couplings must have {width} rows, got "
            f"{c_a.shape[0]} and {c_b.shape[0]}"
        )
    n_a = c_a.shape[1] // 2
    n_b = c_b.shape[1] // 2
    eye = np.eye(width)
    fwd = 0.5 * jmat(n_a) @ sharp_adjoint(c_a) @ (x + eye) @ c_b
    back = 0.5 * jmat(n_b) @ sharp_adjoint(c_b) @ (x - eye) @ c_a
    diff = fwd.T - back
    return float(np.max(np.abs(diff))) if diff.size else 0.0


def hamiltonian_corrections(r_bar, c, x, skew_tol: float = 1e-9) -> np.ndarray:
    """Corrected Hamiltonian matrix r_bar - (1/2) J (c# x c).

    The correction cancels the Hamiltonian contribution that the loop field
    adds to the local dynamics.  c# x c is J-skew whenever x is, so the
    correction is symmetric; the result is explicitly symmetrized to remove
    rounding noise.
    """
    r_bar = as_even_matrix(r_bar, "r_bar")
    c = as_even_matrix(c, "c")
    x = as_even_matrix(x, "x")
    if r_bar.shape[0] != r_bar.shape[1]:
        raise ValidationError(f"r_bar must be square, got {r_bar.shape}")
    if c.shape[1] != r_bar.shape[0]:
        raise ValidationError(
            f"c must have {r_bar.shape[0]} columns, got {c.shape[1]}"
        )
    if x.shape != (c.shape[0], c.shape[0]):
        raise ValidationError(
            f"x must be {c.shape[0]} x {c.shape[0]}, got {x.shape}"
        )
    scale = max(1.0, float(np.max(np.abs(x))) if x.size else 1.0)
    if not is_sharp_skew(x, skew_tol * scale):
        raise ValidationError("loop matrix x must be J-skew")
    n = r_bar.shape[0] // 2
    out = r_bar - 0.5 * jmat(n) @ (sharp_adjoint(c) @ x @ c)
    return 0.5 * (out + out.T)


def _diag_rect(values: np.ndarray, rows: int, cols: int) -> np.ndarray:
    out = np.zeros((rows, cols))
    k = min(rows, cols, len(values))
    out[:k, :k][np.diag_indices(k)] = values[:k]
    return out


def _resolve_diag(values, name: str, m: int) -> np.ndarray:
    if values is None:
        return np.ones(m)
    arr = np.asarray(values, dtype=float).reshape(-1)
    if arr.shape[0] != m:
        raise ValidationError(
            f"{name} must have one entry per channel ({m}), got {arr.shape[0]}"
        )
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


def _check_symmetric(r: np.ndarray, name: str) -> None:
    scale = max(1.0, float(np.max(np.abs(r))) if r.size else 1.0)
    defect = float(np.max(np.abs(r - r.T))) if r.size else 0.0
    if defect > 1e-12 * scale:
        raise ValidationError(f"{name} must be symmetric (defect {defect:.3e})")


def synthesize(
    r_bar_a,
    r_bar_b,
    r_ab,
    options: SynthOptions | None = None,
) -> FeedbackRealization:
    """Build a feedback realization of a direct bilinear interaction.

    r_bar_a and r_bar_b are the systems' own Hamiltonian matrices, r_ab the
    2n_a x 2n_b interaction matrix.  Raises
    InfeasibleChannelCountError when the requested channel count is below
    ceil(rank/2), ValidationError when it exceeds min(n_a, n_b) or any
    parameter is malformed, and SingularParameterError when a per-channel
    gain equation has a vanishing denominator.

    The returned realization satisfies the coupling factorization identity
    to rounding level; a failed internal self-check raises rather than
    returning a bad realization.
    """
    opts = options if options is not None else SynthOptions()
    r_bar_a = as_even_matrix(r_bar_a, "r_bar_a")
    r_bar_b = as_even_matrix(r_bar_b, "r_bar_b")
    r_ab = as_even_matrix(r_ab, "r_ab")
    if r_bar_a.shape[0] != r_bar_a.shape[1]:
        raise ValidationError(f"r_bar_a must be square, got {r_bar_a.shape}")
    if r_bar_b.shape[0] != r_bar_b.shape[1]:
        raise ValidationError(f"r_bar_b must be square, got {r_bar_b.shape}")
    _check_symmetric(r_bar_a, "r_bar_a")
    _check_symmetric(r_bar_b, "r_bar_b")
    n_a = r_bar_a.shape[0] // 2
    n_b = r_bar_b.shape[0] // 2
    if r_ab.shape != (2 * n_a, 2 * n_b):
        raise ValidationError(
            f"r_ab must be {2 * n_a} x {2 * n_b}, got {r_ab.shape}"
        )

    svd = special_svd(r_ab, rank_tol=opts.rank_tol)
    m_min = (svd.rank + 1) // 2
    m_cap = min(n_a, n_b)
    m = m_min if opts.m is None else opts.m
    if m > m_cap:
        raise ValidationError(
            f"channel count m={m} exceeds min(n_a, n_b) = {m_cap}; "
            f"each channel consumes one quadrature pair on both sides"
        )
    if m < m_min:
        raise InfeasibleChannelCountError(m, m_min)

    y1 = _resolve_diag(opts.y1, "y1", m)
    y2 = _resolve_diag(opts.y2, "y2", m)
    ga1 = _resolve_diag(opts.ga1, "ga1", m)
    ga2 = _resolve_diag(opts.ga2, "ga2", m)
    if opts.p is None:
        p = np.eye(2 * m)
    else:
        p = as_even_matrix(opts.p, "p")
        if p.shape != (2 * m, 2 * m):
            raise ValidationError(
                f"p must be {2 * m} x {2 * m}, got {p.shape}"
            )
        ortho = float(np.max(np.abs(p.T @ p - np.eye(2 * m)))) if p.size else 0.0
        if ortho > 1e-10:
            raise ValidationError(f"p must be orthogonal (defect {ortho:.3e})")
        if symplectic_defect(p) > 1e-10:
            raise ValidationError("p must be symplectic")

    # Channel values off the two block diagonals; only the first m slots of
    # each block feed the realization, and all above-threshold values sit in
    # those slots because m >= ceil(rank/2).
    t1 = np.zeros(m)
    t2 = np.zeros(m)
    block1 = svd.block1_diag()
    block2 = svd.block2_diag()
    t1[: min(m, len(block1))] = block1[:m]
    t2[: min(m, len(block2))] = block2[:m]

    gb3 = np.zeros(m)
    gb4 = np.zeros(m)
    for i in range(m):
        if abs(ga1[i]) <= _PARAM_TINY or abs(ga2[i]) <= _PARAM_TINY:
            raise SingularParameterError(
                f"channel {i + 1}: gains ga1, ga2 must be nonzero"
            )
        den = y1[i] * y2[i] + 1.0
        if abs(den) <= _PARAM_TINY:
            if t1[i] != 0.0 or t2[i] != 0.0:
                raise SingularParameterError(
                    f"channel {i + 1}: y1*y2 = -1 makes the gain equation "
                    f"unsolvable for a nonzero coupling value"
                )
            # Idle channel: any gain works; zero keeps it decoupled.  The
            # loop matrix itself is still singular at the Cayley step.
            continue
        gb4[i] = 2.0 * t1[i] / (ga1[i] * den)
        gb3[i] = -2.0 * t2[i] / (ga2[i] * den)
    gb1 = y2 * gb4
    gb2 = -y1 * gb3

    g_a = np.zeros((2 * m, 2 * n_a))
    g_a[:m, :n_a] = _diag_rect(ga1, m, n_a)
    g_a[m:, n_a:] = _diag_rect(ga2, m, n_a)
    g_b = np.zeros((2 * m, 2 * n_b))
    g_b[:m, :n_b] = _diag_rect(gb1, m, n_b)
    g_b[:m, n_b:] = _diag_rect(gb3, m, n_b)
    g_b[m:, :n_b] = _diag_rect(gb4, m, n_b)
    g_b[m:, n_b:] = _diag_rect(gb2, m, n_b)

    c_a = p.T @ g_a @ svd.u.T
    c_b = p.T @ g_b @ svd.v.T

    y = np.zeros((2 * m, 2 * m))
    y[:m, :m][np.diag_indices(m)] = y1
    y[m:, m:][np.diag_indices(m)] = y2
    y = p.T @ y @ p
    y = 0.5 * (y + y.T)
    x = -jmat(m) @ y
    sigma = cayley_sigma_from_x(x)

    r_a = hamiltonian_corrections(r_bar_a, c_a, x)
    r_b = hamiltonian_corrections(r_bar_b, c_b, x)

    realization = FeedbackRealization(
        m=m, c_a=c_a, c_b=c_b, x=x, sigma=sigma, r_a=r_a, r_b=r_b
    )
    residual = coupling_relation_residual(r_ab, c_a, c_b, x)
    if residual > 1e-8:
        raise HamlinkError(
            f"synthesis self-check failed: coupling residual {residual:.3e}"
        )
    return realization
