"""Model containers and interconnection assembly.

An open linear quantum stochastic system with n modes and m field channels
is parameterized in quadrature form by a symmetric Hamiltonian matrix r
(2n x 2n), a coupling matrix c (2m x 2n), and a symplectic port gain d
(2m x 2m).  Its drift is J r - (1/2) c# c and its noise input matrix is
-c# d, where # is the J-adjoint.  This module holds those containers plus
the two ways of wiring a pair of systems together: a direct bilinear
Hamiltonian interaction, and a field-mediated feedback loop through a
static symplectic gain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AlgebraicLoopError, ValidationError
from .symcore import (
    as_even_matrix,
    is_sharp_skew,
    jmat,
    sharp_adjoint,
    symplectic_defect,
    build_partition_permutation,
)

__all__ = [
    "LqssParams",
    "TwoPortLqss",
    "DirectInteraction",
    "LinearDynamics",
    "PartitionedPorts",
    "system_dynamics",
    "direct_dynamics",
    "feedback_closed_loop",
    "skew_form_closed_loop",
    "partitioned_form",
    "realizability_defect",
]

_SYM_TOL = 1e-12
_SYMP_TOL = 1e-10


def _check_symmetric(r: np.ndarray, name: str) -> None:
    scale = max(1.0, float(np.max(np.abs(r))) if r.size else 1.0)
    defect = float(np.max(np.abs(r - r.T))) if r.size else 0.0
    if defect > _SYM_TOL * scale:
        raise ValidationError(f"{name} must be symmetric (defect {defect:.3e})")


@dataclass(frozen=True)
class LqssParams:
    """One open system: Hamiltonian matrix, coupling, and port gain.

    n is the mode count; r is 2n x 2n symmetric, c is 2m x 2n for m field
    channels (m may be zero), d is 2m x 2m symplectic.
    """

    n: int
    r: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        if self.n < 0:
            raise ValidationError(f"mode count must be nonnegative, got {self.n}")
        r = as_even_matrix(self.r, "r")
        c = as_even_matrix(self.c, "c")
        d = as_even_matrix(self.d, "d")
        if r.shape != (2 * self.n, 2 * self.n):
            raise ValidationError(
                f"r must be {2 * self.n} x {2 * self.n}, got {r.shape}"
            )
        _check_symmetric(r, "r")
        if c.shape[1] != 2 * self.n:
            raise ValidationError(
                f"c must have {2 * self.n} columns, got {c.shape[1]}"
            )
        if d.shape != (c.shape[0], c.shape[0]):
            raise ValidationError(
                f"d must be {c.shape[0]} x {c.shape[0]}, got {d.shape}"
            )
        defect = symplectic_defect(d)
        if defect > _SYMP_TOL * max(1.0, float(np.max(np.abs(d))) if d.size else 1.0) ** 2:
            raise ValidationError(f"d must be symplectic (defect {defect:.3e})")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)

    @property
    def n_ports(self) -> int:
        return self.c.shape[0] // 2


@dataclass(frozen=True)
class TwoPortLqss:
    """A system with an external port group and an interconnection group.

    The external group keeps its gain d_bar; the interconnection group has
    identity gain by construction, so it carries no gain field.  A general
    gain on the interconnection ports is not representable here and must be
    absorbed into the loop gain before building this container.
    """

    n: int
    r: np.ndarray
    c_bar: np.ndarray
    d_bar: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        if self.n < 0:
            raise ValidationError(f"mode count must be nonnegative, got {self.n}")
        r = as_even_matrix(self.r, "r")
        c_bar = as_even_matrix(self.c_bar, "c_bar")
        d_bar = as_even_matrix(self.d_bar, "d_bar")
        c = as_even_matrix(self.c, "c")
        width = 2 * self.n
        if r.shape != (width, width):
            raise ValidationError(f"r must be {width} x {width}, got {r.shape}")
        _check_symmetric(r, "r")
        for name, mat in (("c_bar", c_bar), ("c", c)):
            if mat.shape[1] != width:
                raise ValidationError(
                    f"{name} must have {width} columns, got {mat.shape[1]}"
                )
        if d_bar.shape != (c_bar.shape[0], c_bar.shape[0]):
            raise ValidationError(
                f"d_bar must be {c_bar.shape[0]} x {c_bar.shape[0]}, "
                f"got {d_bar.shape}"
            )
        defect = symplectic_defect(d_bar)
        if defect > _SYMP_TOL * max(1.0, float(np.max(np.abs(d_bar))) if d_bar.size else 1.0) ** 2:
            raise ValidationError(f"d_bar must be symplectic (defect {defect:.3e})")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "c_bar", c_bar)
        object.__setattr__(self, "d_bar", d_bar)
        object.__setattr__(self, "c", c)

    @property
    def n_external(self) -> int:
        return self.c_bar.shape[0] // 2

    @property
    def n_loop(self) -> int:
        return self.c.shape[0] // 2


@dataclass(frozen=True)
class DirectInteraction:
    """Two systems joined by a bilinear interaction Hamiltonian.

    r_ab is the 2n_a x 2n_b interaction matrix; the composite Hamiltonian
    matrix is [[r_a, r_ab], [r_ab.T, r_b]].
    """

    sys_a: LqssParams
    sys_b: LqssParams
    r_ab: np.ndarray

    def __post_init__(self):
        r_ab = as_even_matrix(self.r_ab, "r_ab")
        want = (2 * self.sys_a.n, 2 * self.sys_b.n)
        if r_ab.shape != want:
            raise ValidationError(
                f"r_ab must be {want[0]} x {want[1]}, got {r_ab.shape}"
            )
        object.__setattr__(self, "r_ab", r_ab)

    def composite_hamiltonian(self) -> np.ndarray:
        """Symmetric Hamiltonian matrix of the joined system."""
        return np.block(
            [[self.sys_a.r, self.r_ab], [self.r_ab.T, self.sys_b.r]]
        )


@dataclass(frozen=True)
class LinearDynamics:
    """State-space realization dx = a x dt + b_ext dU, dY = c_ext x dt + d_ext dU."""

    a: np.ndarray
    b_ext: np.ndarray
    c_ext: np.ndarray
    d_ext: np.ndarray

    def __post_init__(self):
        a = as_even_matrix(self.a, "a")
        b = as_even_matrix(self.b_ext, "b_ext")
        c = as_even_matrix(self.c_ext, "c_ext")
        d = as_even_matrix(self.d_ext, "d_ext")
        if a.shape[0] != a.shape[1]:
            raise ValidationError(f"a must be square, got {a.shape}")
        if b.shape[0] != a.shape[0]:
            raise ValidationError(
                f"b_ext must have {a.shape[0]} rows, got {b.shape[0]}"
            )
        if c.shape[1] != a.shape[0]:
            raise ValidationError(
                f"c_ext must have {a.shape[0]} columns, got {c.shape[1]}"
            )
        if d.shape != (c.shape[0], b.shape[1]):
            raise ValidationError(
                f"d_ext must be {c.shape[0]} x {b.shape[1]}, got {d.shape}"
            )
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b_ext", b)
        object.__setattr__(self, "c_ext", c)
        object.__setattr__(self, "d_ext", d)

    @property
    def dim(self) -> int:
        return self.a.shape[0]


def _drift(n: int, r: np.ndarray, c: np.ndarray) -> np.ndarray:
    return jmat(n) @ r - 0.5 * sharp_adjoint(c) @ c


def _block_diag(upper: np.ndarray, lower: np.ndarray) -> np.ndarray:
    out = np.zeros((upper.shape[0] + lower.shape[0], upper.shape[1] + lower.shape[1]))
    out[: upper.shape[0], : upper.shape[1]] = upper
    out[upper.shape[0] :, upper.shape[1] :] = lower
    return out


def system_dynamics(params: LqssParams) -> LinearDynamics:
    """State-space form of one isolated open system."""
    return LinearDynamics(
        a=_drift(params.n, params.r, params.c),
        b_ext=-sharp_adjoint(params.c) @ params.d,
        c_ext=params.c,
        d_ext=params.d,
    )


def _external_io(
    sys_a_c: np.ndarray,
    sys_a_d: np.ndarray,
    sys_b_c: np.ndarray,
    sys_b_d: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    b_ext = _block_diag(
        -sharp_adjoint(sys_a_c) @ sys_a_d, -sharp_adjoint(sys_b_c) @ sys_b_d
    )
    c_ext = _block_diag(sys_a_c, sys_b_c)
    d_ext = _block_diag(sys_a_d, sys_b_d)
    return b_ext, c_ext, d_ext


def direct_dynamics(interaction: DirectInteraction) -> LinearDynamics:
    """State-space form of two systems under a direct bilinear Hamiltonian.

    The off-diagonal drift blocks are J_a r_ab and J_b r_ab.T; the noise
    enters each subsystem through its own ports only.
    """
    sa, sb = interaction.sys_a, interaction.sys_b
    a = np.block(
        [
            [_drift(sa.n, sa.r, sa.c), jmat(sa.n) @ interaction.r_ab],
            [jmat(sb.n) @ interaction.r_ab.T, _drift(sb.n, sb.r, sb.c)],
        ]
    )
    b_ext, c_ext, d_ext = _external_io(sa.c, sa.d, sb.c, sb.d)
    return LinearDynamics(a=a, b_ext=b_ext, c_ext=c_ext, d_ext=d_ext)


def _loop_solve(w: np.ndarray, rhs: np.ndarray, cond_cap: float) -> np.ndarray:
    if w.shape[0] == 0:
        return np.zeros((0, rhs.shape[1]))
    cond = np.linalg.cond(w)
    if not np.isfinite(cond) or cond > cond_cap:
        raise AlgebraicLoopError(
            f"loop gain has an eigenvalue at or near one; I - sigma has "
            f"condition number {cond:.3e} (cap {cond_cap:.0e})"
        )
    return np.linalg.solve(w, rhs)


def _closed_loop_drift(
    n_a: int,
    r_a: np.ndarray,
    c_bar_a: np.ndarray,
    c_a: np.ndarray,
    n_b: int,
    r_b: np.ndarray,
    c_bar_b: np.ndarray,
    c_b: np.ndarray,
    sigma: np.ndarray,
    cond_cap: float = 1e12,
) -> np.ndarray:
    """Drift of the loop-eliminated interconnection.

    Shape checks only; semantic properties of the inputs (symmetry of r,
    symplecticity of sigma) are deliberately not enforced here so that
    reports on corrupted data can still be produced.
    """
    width = sigma.shape[0]
    if sigma.shape[1] != width:
        raise ValidationError(f"sigma must be square, got {sigma.shape}")
    if c_a.shape[0] != width or c_b.shape[0] != width:
        raise ValidationError(
            f"loop couplings must have {width} rows, got "
            f"{c_a.shape[0]} and {c_b.shape[0]}"
        )
    eye = np.eye(width)
    w = eye - sigma
    # (I - sigma)^-1 sigma and (I - sigma)^-1 applied to the couplings.
    k_a = _loop_solve(w, sigma @ c_a, cond_cap)
    k_b_through = _loop_solve(w, c_b, cond_cap)
    k_b = _loop_solve(w, sigma @ c_b, cond_cap)

    sharp_ca = sharp_adjoint(c_a)
    sharp_cb = sharp_adjoint(c_b)

    blk_aa = (
        _drift(n_a, r_a, c_bar_a) - 0.5 * sharp_ca @ c_a - sharp_ca @ k_a
    )
    blk_bb = (
        _drift(n_b, r_b, c_bar_b) - 0.5 * sharp_cb @ c_b - sharp_cb @ k_b
    )
    blk_ab = -sharp_ca @ k_b_through
    blk_ba = -sharp_cb @ k_a
    return np.block([[blk_aa, blk_ab], [blk_ba, blk_bb]])


def _skew_closed_loop_drift(
    n_a: int,
    r_a: np.ndarray,
    c_bar_a: np.ndarray,
    c_a: np.ndarray,
    n_b: int,
    r_b: np.ndarray,
    c_bar_b: np.ndarray,
    c_b: np.ndarray,
    x: np.ndarray,
) -> np.ndarray:
    """Drift of the interconnection written against the J-skew loop matrix.

    Algebraically equal to the loop-eliminated drift with
    sigma = (x - I)(x + I)^-1, but assembled without any solve, through the
    identities (I - sigma)^-1 sigma = (x - I)/2 and (I - sigma)^-1 = (x + I)/2.
    """
    width = x.shape[0]
    if x.shape[1] != width:
        raise ValidationError(f"x must be square, got {x.shape}")
    if c_a.shape[0] != width or c_b.shape[0] != width:
        raise ValidationError(
            f"loop couplings must have {width} rows, got "
            f"{c_a.shape[0]} and {c_b.shape[0]}"
        )
    eye = np.eye(width)
    sharp_ca = sharp_adjoint(c_a)
    sharp_cb = sharp_adjoint(c_b)
    blk_aa = _drift(n_a, r_a, c_bar_a) - 0.5 * sharp_ca @ x @ c_a
    blk_bb = _drift(n_b, r_b, c_bar_b) - 0.5 * sharp_cb @ x @ c_b
    blk_ab = -0.5 * sharp_ca @ (x + eye) @ c_b
    blk_ba = -0.5 * sharp_cb @ (x - eye) @ c_a
    return np.block([[blk_aa, blk_ab], [blk_ba, blk_bb]])


def feedback_closed_loop(
    sys_a: TwoPortLqss,
    sys_b: TwoPortLqss,
    sigma,
    cond_cap: float = 1e12,
) -> LinearDynamics:
    """Eliminate the field loop between two systems through a static gain.

    The output of each system's interconnection ports is fed through sigma
    into the other's interconnection inputs.  sigma is normally symplectic;
    only invertibility of I - sigma is required to eliminate the loop, and
    an AlgebraicLoopError is raised when that solve is ill-conditioned.
    External ports pass straight through, so the noise and output maps
    involve only the external couplings and gains.
    """
    sigma = as_even_matrix(sigma, "sigma")
    if sys_a.c.shape[0] != sys_b.c.shape[0]:
        raise ValidationError(
            f"interconnection port counts differ: "
            f"{sys_a.n_loop} versus {sys_b.n_loop}"
        )
    if sigma.shape[0] != sys_a.c.shape[0]:
        raise ValidationError(
            f"sigma must be {sys_a.c.shape[0]} x {sys_a.c.shape[0]}, "
            f"got {sigma.shape}"
        )
    a = _closed_loop_drift(
        sys_a.n, sys_a.r, sys_a.c_bar, sys_a.c,
        sys_b.n, sys_b.r, sys_b.c_bar, sys_b.c,
        sigma, cond_cap,
    )
    b_ext, c_ext, d_ext = _external_io(
        sys_a.c_bar, sys_a.d_bar, sys_b.c_bar, sys_b.d_bar
    )
    return LinearDynamics(a=a, b_ext=b_ext, c_ext=c_ext, d_ext=d_ext)


def skew_form_closed_loop(
    sys_a: TwoPortLqss,
    sys_b: TwoPortLqss,
    x,
) -> LinearDynamics:
    """Closed loop assembled directly from the J-skew loop matrix.

    Independent of feedback_closed_loop: no loop solve is performed.  x must
    be J-skew for the result to describe a physical interconnection.
    """
    x = as_even_matrix(x, "x")
    if not is_sharp_skew(x, 1e-9 * max(1.0, float(np.max(np.abs(x))) if x.size else 1.0)):
        raise ValidationError("loop matrix x must be J-skew")
    if sys_a.c.shape[0] != sys_b.c.shape[0]:
        raise ValidationError(
            f"interconnection port counts differ: "
            f"{sys_a.n_loop} versus {sys_b.n_loop}"
        )
    if x.shape[0] != sys_a.c.shape[0]:
        raise ValidationError(
            f"x must be {sys_a.c.shape[0]} x {sys_a.c.shape[0]}, got {x.shape}"
        )
    a = _skew_closed_loop_drift(
        sys_a.n, sys_a.r, sys_a.c_bar, sys_a.c,
        sys_b.n, sys_b.r, sys_b.c_bar, sys_b.c,
        x,
    )
    b_ext, c_ext, d_ext = _external_io(
        sys_a.c_bar, sys_a.d_bar, sys_b.c_bar, sys_b.d_bar
    )
    return LinearDynamics(a=a, b_ext=b_ext, c_ext=c_ext, d_ext=d_ext)


@dataclass(frozen=True)
class PartitionedPorts:
    """Coupling and gain of one system split into two port groups."""

    c_a: np.ndarray
    c_b: np.ndarray
    d_aa: np.ndarray
    d_ab: np.ndarray
    d_ba: np.ndarray
    d_bb: np.ndarray


def partitioned_form(params: LqssParams, m_a: int, m_b: int) -> PartitionedPorts:
    """Split a system's ports into leading and trailing channel groups.

    Channels 1..m_a form the first group, the remaining m_b the second.
    The split conjugates c and d by the regrouping permutation, so each
    group's blocks are again valid quadrature-ordered matrices.
    """
    if m_a + m_b != params.n_ports:
        raise ValidationError(
            f"group sizes ({m_a}, {m_b}) must sum to the port count "
            f"{params.n_ports}"
        )
    perm = build_partition_permutation(m_a, m_b)
    c_hat = perm @ params.c
    d_hat = perm @ params.d @ perm.T
    wa = 2 * m_a
    return PartitionedPorts(
        c_a=c_hat[:wa],
        c_b=c_hat[wa:],
        d_aa=d_hat[:wa, :wa],
        d_ab=d_hat[:wa, wa:],
        d_ba=d_hat[wa:, :wa],
        d_bb=d_hat[wa:, wa:],
    )


def realizability_defect(params: LqssParams) -> float:
    """Max-abs residual of the physical-realizability identity.

    For a = J r - (1/2) c# c and b = -c# d the identity
    a J + J a.T + b J_ports b.T = 0 holds exactly in exact arithmetic for
    any symmetric r, any c, and symplectic d.  The returned defect measures
    floating-point deviation, and blows up when the parameterization is
    corrupted.
    """
    dyn = system_dynamics(params)
    j_state = jmat(params.n)
    j_ports = jmat(params.n_ports)
    res = dyn.a @ j_state + j_state @ dyn.a.T + dyn.b_ext @ j_ports @ dyn.b_ext.T
    return float(np.max(np.abs(res))) if res.size else 0.0
