"""Equivalence checks and moment simulation.

The verifier takes a direct interaction and a candidate feedback
realization and measures, without trusting either, how far apart the two
descriptions are: drift mismatch under loop elimination, drift mismatch
under the solve-free J-skew assembly, noise-block mismatch, the coupling
factorization residual, and structural flags on the realization matrices.
A second, dynamic layer integrates first and second moments of both
realizations and reports their worst-case deviation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, ValidationError
from .lqss import (
    DirectInteraction,
    LinearDynamics,
    _closed_loop_drift,
    _external_io,
    _skew_closed_loop_drift,
    direct_dynamics,
)
from .symcore import sharp_skew_defect, symplectic_defect
from .synth import FeedbackRealization, coupling_relation_residual

__all__ = [
    "EquivalenceReport",
    "check_equivalence",
    "closed_loop_dynamics",
    "MomentTrajectory",
    "simulate_moments",
    "compare_moment_trajectories",
]

_FLAG_TOL = 1e-9
_SYM_FLAG_TOL = 1e-10


@dataclass(frozen=True)
class EquivalenceReport:
    """Outcome of the static equivalence checks.

    Residuals are max-abs values scaled by max(1, max-abs of the reference
    quantity).  flags carry named structural verdicts on the realization.
    moment_residual is filled only when a trajectory comparison was run.
    """

    drift_residual: float
    skew_drift_residual: float
    noise_residual: float
    coupling_residual: float
    sigma_unit_margin: float
    flags: dict[str, bool]
    tol: float
    moment_residual: float | None = None
    moment_tol: float | None = None

    @property
    def checks(self) -> dict[str, bool]:
        """Every named check with its verdict."""
        out = {
            "drift_residual": self.drift_residual <= self.tol,
            "skew_drift_residual": self.skew_drift_residual <= self.tol,
            "noise_residual": self.noise_residual <= self.tol,
            "coupling_residual": self.coupling_residual <= self.tol,
        }
        out.update(self.flags)
        if self.moment_residual is not None:
            tol = self.moment_tol if self.moment_tol is not None else self.tol
            out["moment_residual"] = self.moment_residual <= tol
        return out

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def failing(self) -> list[str]:
        """Names of the checks that did not pass."""
        return [name for name, ok in self.checks.items() if not ok]


def _scaled_max_abs(diff: np.ndarray, ref: np.ndarray) -> float:
    res = float(np.max(np.abs(diff))) if diff.size else 0.0
    scale = max(1.0, float(np.max(np.abs(ref))) if ref.size else 0.0)
    return res / scale


def check_equivalence(
    interaction: DirectInteraction,
    realization: FeedbackRealization,
    tol: float = 1e-8,
) -> EquivalenceReport:
    """Compare a direct interaction against a feedback realization.

    The direct drift is assembled from the composite Hamiltonian; the
    feedback drift is assembled twice, once by eliminating the loop through
    sigma and once from the J-skew loop matrix without any solve.  Both are
    compared against the direct drift.  Structural flags are evaluated with
    fixed thresholds regardless of tol, so a corrupted realization is
    reported rather than rejected.  Raises ValidationError on dimension
    mismatch and AlgebraicLoopError when sigma has an eigenvalue so close to
    one that loop elimination is ill-conditioned.
    """
    di = interaction
    fr = realization
    if fr.c_a.shape[1] != 2 * di.sys_a.n or fr.c_b.shape[1] != 2 * di.sys_b.n:
        raise ValidationError(
            f"realization couples {fr.c_a.shape[1] // 2} + "
            f"{fr.c_b.shape[1] // 2} modes, problem has "
            f"{di.sys_a.n} + {di.sys_b.n}"
        )

    x_scale = max(1.0, float(np.max(np.abs(fr.x))) if fr.x.size else 1.0)
    s_scale = max(1.0, float(np.max(np.abs(fr.sigma))) if fr.sigma.size else 1.0)
    ra_scale = max(1.0, float(np.max(np.abs(fr.r_a))) if fr.r_a.size else 1.0)
    rb_scale = max(1.0, float(np.max(np.abs(fr.r_b))) if fr.r_b.size else 1.0)

    if fr.sigma.shape[0]:
        eigs = np.linalg.eigvals(fr.sigma)
        margin = float(np.min(np.abs(eigs - 1.0)))
    else:
        margin = float("inf")

    flags = {
        "x_sharp_skew": sharp_skew_defect(fr.x) <= _FLAG_TOL * x_scale,
        "sigma_symplectic": symplectic_defect(fr.sigma) <= _FLAG_TOL * s_scale**2,
        "sigma_no_unit_eigenvalue": margin > _FLAG_TOL,
        "r_a_symmetric": (
            float(np.max(np.abs(fr.r_a - fr.r_a.T))) if fr.r_a.size else 0.0
        ) <= _SYM_FLAG_TOL * ra_scale,
        "r_b_symmetric": (
            float(np.max(np.abs(fr.r_b - fr.r_b.T))) if fr.r_b.size else 0.0
        ) <= _SYM_FLAG_TOL * rb_scale,
    }

    coupling = coupling_relation_residual(di.r_ab, fr.c_a, fr.c_b, fr.x)

    direct = direct_dynamics(di)
    closed_a = _closed_loop_drift(
        di.sys_a.n, fr.r_a, di.sys_a.c, fr.c_a,
        di.sys_b.n, fr.r_b, di.sys_b.c, fr.c_b,
        fr.sigma,
    )
    skew_a = _skew_closed_loop_drift(
        di.sys_a.n, fr.r_a, di.sys_a.c, fr.c_a,
        di.sys_b.n, fr.r_b, di.sys_b.c, fr.c_b,
        fr.x,
    )
    b_closed, _, _ = _external_io(
        di.sys_a.c, di.sys_a.d, di.sys_b.c, di.sys_b.d
    )

    return EquivalenceReport(
        drift_residual=_scaled_max_abs(direct.a - closed_a, direct.a),
        skew_drift_residual=_scaled_max_abs(direct.a - skew_a, direct.a),
        noise_residual=_scaled_max_abs(direct.b_ext - b_closed, direct.b_ext),
        coupling_residual=coupling,
        sigma_unit_margin=margin,
        flags=flags,
        tol=tol,
    )


def closed_loop_dynamics(
    interaction: DirectInteraction,
    realization: FeedbackRealization,
    cond_cap: float = 1e12,
) -> LinearDynamics:
    """Full state-space form of the realization's closed loop.

    Uses the problem's external couplings and gains (the realization leaves
    them untouched) and the realization's corrected Hamiltonian matrices and
    loop couplings.  Unlike the container-based assembly, this accepts a
    realization whose matrices violate semantic invariants, so trajectories
    of corrupted realizations can still be compared.
    """
    di = interaction
    fr = realization
    if fr.c_a.shape[1] != 2 * di.sys_a.n or fr.c_b.shape[1] != 2 * di.sys_b.n:
        raise ValidationError(
            f"realization couples {fr.c_a.shape[1] // 2} + "
            f"{fr.c_b.shape[1] // 2} modes, problem has "
            f"{di.sys_a.n} + {di.sys_b.n}"
        )
    a = _closed_loop_drift(
        di.sys_a.n, fr.r_a, di.sys_a.c, fr.c_a,
        di.sys_b.n, fr.r_b, di.sys_b.c, fr.c_b,
        fr.sigma, cond_cap,
    )
    b_ext, c_ext, d_ext = _external_io(
        di.sys_a.c, di.sys_a.d, di.sys_b.c, di.sys_b.d
    )
    return LinearDynamics(a=a, b_ext=b_ext, c_ext=c_ext, d_ext=d_ext)


@dataclass(frozen=True)
class MomentTrajectory:
    """Mean and covariance samples on a uniform time grid."""

    times: np.ndarray
    means: np.ndarray
    covariances: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        mu = np.asarray(self.means, dtype=float)
        cov = np.asarray(self.covariances, dtype=float)
        if t.ndim != 1 or mu.ndim != 2 or cov.ndim != 3:
            raise ValidationError("trajectory arrays have wrong ranks")
        if not (len(t) == mu.shape[0] == cov.shape[0]):
            raise ValidationError("trajectory arrays disagree on sample count")
        if cov.shape[1:] != (mu.shape[1], mu.shape[1]):
            raise ValidationError("covariance samples have wrong shape")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "covariances", cov)


def simulate_moments(
    dynamics: LinearDynamics,
    t_final: float,
    dt: float,
    mean0=None,
    cov0=None,
) -> MomentTrajectory:
    """Integrate first and second moments under vacuum inputs.

    The mean obeys d mu/dt = a mu and the symmetrized covariance obeys
    d P/dt = a P + P a.T + (1/2) b b.T, where the constant term is the
    vacuum quadrature noise intensity.  Integration is classic fourth-order
    Runge-Kutta with a fixed step; the covariance is re-symmetrized after
    every step.  Defaults: zero mean, vacuum covariance (1/2) I.

    The grid has round(t_final / dt) steps of exactly dt, so the last sample
    sits at that multiple of dt rather than exactly at t_final when the two
    disagree.  Raises DivergenceError with the first bad time when the state
    leaves floating-point range.
    """
    if not (np.isfinite(t_final) and t_final > 0):
        raise ValidationError(f"t_final must be positive, got {t_final}")
    if not (np.isfinite(dt) and dt > 0):
        raise ValidationError(f"dt must be positive, got {dt}")
    n_steps = max(1, int(round(t_final / dt)))

    a = dynamics.a
    dim = dynamics.dim
    q = 0.5 * dynamics.b_ext @ dynamics.b_ext.T

    if mean0 is None:
        mu = np.zeros(dim)
    else:
        mu = np.asarray(mean0, dtype=float).reshape(-1)
        if mu.shape[0] != dim:
            raise ValidationError(
                f"mean0 must have length {dim}, got {mu.shape[0]}"
            )
    if cov0 is None:
        p = 0.5 * np.eye(dim)
    else:
        p = np.asarray(cov0, dtype=float)
        if p.shape != (dim, dim):
            raise ValidationError(
                f"cov0 must be {dim} x {dim}, got {p.shape}"
            )
        defect = float(np.max(np.abs(p - p.T))) if p.size else 0.0
        if defect > 1e-9 * max(1.0, float(np.max(np.abs(p))) if p.size else 1.0):
            raise ValidationError(f"cov0 must be symmetric (defect {defect:.3e})")
        p = 0.5 * (p + p.T)
    if (mu.size and not np.all(np.isfinite(mu))) or (
        p.size and not np.all(np.isfinite(p))
    ):
        raise ValidationError("initial moments contain non-finite entries")

    means = np.empty((n_steps + 1, dim))
    covs = np.empty((n_steps + 1, dim, dim))
    means[0] = mu
    covs[0] = p

    def dcov(pm: np.ndarray) -> np.ndarray:
        return a @ pm + pm @ a.T + q

    # Divergence is detected by the explicit finiteness check, so the
    # overflow that precedes it is expected and not worth a warning.
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n_steps):
            k1m = a @ mu
            k1p = dcov(p)
            k2m = a @ (mu + 0.5 * dt * k1m)
            k2p = dcov(p + 0.5 * dt * k1p)
            k3m = a @ (mu + 0.5 * dt * k2m)
            k3p = dcov(p + 0.5 * dt * k2p)
            k4m = a @ (mu + dt * k3m)
            k4p = dcov(p + dt * k3p)
            mu = mu + (dt / 6.0) * (k1m + 2.0 * k2m + 2.0 * k3m + k4m)
            p = p + (dt / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
            p = 0.5 * (p + p.T)
            if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(p))):
                raise DivergenceError((k + 1) * dt)
            means[k + 1] = mu
            covs[k + 1] = p

    times = np.arange(n_steps + 1) * dt
    return MomentTrajectory(times=times, means=means, covariances=covs)


def compare_moment_trajectories(
    dyn_a: LinearDynamics,
    dyn_b: LinearDynamics,
    t_final: float,
    dt: float,
    mean0=None,
    cov0=None,
) -> float:
    """Worst-case moment deviation between two realizations.

    Integrates both from the same initial moments on the same grid and
    returns the largest entrywise deviation in mean or covariance over the
    whole trajectory (absolute, not scaled).
    """
    if dyn_a.dim != dyn_b.dim:
        raise ValidationError(
            f"state dimensions differ: {dyn_a.dim} versus {dyn_b.dim}"
        )
    traj_a = simulate_moments(dyn_a, t_final, dt, mean0=mean0, cov0=cov0)
    traj_b = simulate_moments(dyn_b, t_final, dt, mean0=mean0, cov0=cov0)
    d_mean = float(np.max(np.abs(traj_a.means - traj_b.means)))
    d_cov = float(np.max(np.abs(traj_a.covariances - traj_b.covariances)))
    return max(d_mean, d_cov)
