"""Right-hand sides and time integration of the coupled velocity/tensor flow.

The solved system on the periodic box is

    u_t + (u . grad) u + grad p = nu lap u + div Sigma(Q),     div u = 0,
    Q_t + (u . grad) Q - (W Q - Q W) = mu lap Q - P[dF(Q)],

with Sigma(Q) = (lap Q) Q - Q (lap Q) - grad Q (x) grad Q, W the vorticity
tensor, and P[dF] the trace-free part of the potential derivative.  Pressure
never appears: velocity tendencies are Leray-projected.

The integrator works on dealiased Fourier coefficients throughout.  Each
nonlinear evaluation batches every needed inverse transform (velocity,
velocity gradient, tensor, tensor gradient, tensor Laplacian) into one
stacked call, forms products on the grid, and returns in a second stacked
call.  The diffusion terms are never stepped explicitly: both schemes
multiply by the exact heat factors exp(-nu |k|^2 dt), exp(-mu |k|^2 dt),
so a pure-diffusion configuration decays at machine precision.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .lpanalysis import DiagnosticsRecord, collect_diagnostics, shared_ladder
from .qtensor import (
    MaterialParams,
    QTensorField,
    comps_from_matrix,
    frobenius_dot,
    frobenius_sq,
    matrix_from_comps,
    matrix_multiply,
    traceless_project,
    uniaxial_comps,
)
from .spectral import (
    Grid,
    VelocityField,
    laplacian,
    leray_project,
    lp_norm,
    random_band_limited,
    random_solenoidal,
    to_physical,
    to_spectral,
)

_SCHEMES = ("rk2-imex", "rk4-explicit")


@dataclass
class State:
    """One snapshot of the coupled flow: time, velocity, tensor field."""

    t: float
    u: VelocityField
    q: QTensorField


class BlowUpError(RuntimeError):
    """A coefficient became non-finite during time stepping.

    Carries the failure time, a short description of the offending field,
    and any diagnostics records collected before the failure.
    """

    def __init__(self, t: float, diagnostic: str, records=None):
        super().__init__(f"solution lost regularity at t={t:.6g}: {diagnostic}")
        self.t = t
        self.diagnostic = diagnostic
        self.records = list(records) if records is not None else []


@dataclass
class SolverConfig:
    """Integration parameters plus the monitor exponents (r, c_r, s)."""

    grid: Grid
    params: MaterialParams = field(default_factory=MaterialParams)
    dt: float = 1e-3
    t_end: float = 0.1
    scheme: str = "rk2-imex"
    r: float = 2.0
    c_r: float = 0.01
    s: float = 0.6
    diag_every: int = 1
    seed: int = 0

    def __post_init__(self):
        self.scheme = str(self.scheme).lower()
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.t_end < 0.0:
            raise ValueError("t_end must be nonnegative")
        if self.scheme not in _SCHEMES:
            raise ValueError(f"scheme must be one of {_SCHEMES}, got {self.scheme!r}")
        if not 2.0 <= self.r < 6.0:
            raise ValueError("r must satisfy 2 <= r < 6")
        if not 0.5 < self.s < 1.0:
            raise ValueError("s must satisfy 1/2 < s < 1")
        if not self.r < 3.0 / self.s:
            raise ValueError("r must satisfy r < 3/s for the chosen s")
        if self.c_r <= 0.0:
            raise ValueError("c_r must be positive")
        if int(self.diag_every) != self.diag_every or self.diag_every < 1:
            raise ValueError("diag_every must be a positive integer")
        self.diag_every = int(self.diag_every)


# ---------------------------------------------------------------------------
# Nonlinear tendencies
# ---------------------------------------------------------------------------


def _nonlinear(grid: Grid, params: MaterialParams, u_hat, q_hat):
    """All terms except the diffusions, evaluated with two stacked transforms.

    Returns (velocity tendency, tensor tendency, max grid speed).  The
    velocity part is Leray-projected; the tensor part is symmetric traceless
    by construction of the component storage.
    """
    n = grid.n
    ik = grid._ik

    grad_u = np.stack([ik[axis] * u_hat for axis in range(3)])  # [i, j] = d_i u_j
    grad_q = np.stack([ik[axis] * q_hat for axis in range(3)])  # [i, c] = d_i Q_c
    lap_q = -grid.k_squared * q_hat

    bundle = np.concatenate(
        [u_hat, grad_u.reshape(9, n, n, n), q_hat, grad_q.reshape(15, n, n, n), lap_q]
    )
    phys = to_physical(grid, bundle)
    u = phys[0:3]
    gu = phys[3:12].reshape(3, 3, n, n, n)
    qc = phys[12:17]
    gq = phys[17:32].reshape(3, 5, n, n, n)
    lq = phys[32:37]

    adv_u = np.einsum("jxyz,jixyz->ixyz", u, gu)
    adv_q = np.einsum("jxyz,jcxyz->cxyz", u, gq)

    m = matrix_from_comps(qc)
    lm = matrix_from_comps(lq)
    sigma = matrix_multiply(lm, m) - matrix_multiply(m, lm)
    for i in range(3):
        for j in range(i, 3):
            g = frobenius_dot(gq[i], gq[j])
            sigma[i, j] -= g
            if j > i:
                sigma[j, i] -= g

    w = 0.5 * (gu - gu.transpose(1, 0, 2, 3, 4))  # [i, j] = (d_i u_j - d_j u_i)/2
    corot = matrix_multiply(w, m) - matrix_multiply(m, w)

    df = params.a * m + params.b * matrix_multiply(m, m) + params.c * frobenius_sq(qc) * m
    force = comps_from_matrix(traceless_project(df))

    forward = np.concatenate(
        [adv_u, sigma.reshape(9, n, n, n), adv_q, comps_from_matrix(corot), force]
    )
    spec = to_spectral(grid, forward)
    adv_u_hat = spec[0:3]
    sigma_hat = spec[3:12].reshape(3, 3, n, n, n)
    adv_q_hat = spec[12:17]
    corot_hat = spec[17:22]
    force_hat = spec[22:27]

    # stress divergence contracts the second index: (div Sigma)_i = d_j Sigma_ij
    div_sigma = (
        ik[0] * sigma_hat[:, 0] + ik[1] * sigma_hat[:, 1] + ik[2] * sigma_hat[:, 2]
    )
    du = leray_project(grid, div_sigma - adv_u_hat)
    dq = corot_hat - adv_q_hat - force_hat
    max_speed = float(np.sqrt(np.max(np.sum(u * u, axis=0))))
    return du, dq, max_speed


def rhs_velocity(state: State, params: MaterialParams) -> VelocityField:
    """Full divergence-free velocity tendency, diffusion included."""
    grid = state.u.grid
    du, _, _ = _nonlinear(grid, params, state.u.comps, state.q.comps)
    return VelocityField(grid, du + params.nu * laplacian(grid, state.u.comps))


def rhs_qtensor(state: State, params: MaterialParams) -> QTensorField:
    """Full symmetric-traceless tensor tendency, diffusion included."""
    grid = state.u.grid
    _, dq, _ = _nonlinear(grid, params, state.u.comps, state.q.comps)
    return QTensorField(grid, dq + params.mu * laplacian(grid, state.q.comps))


# ---------------------------------------------------------------------------
# Time stepping
# ---------------------------------------------------------------------------


def _heat_factors(grid: Grid, params: MaterialParams, dt: float):
    return (
        np.exp(-params.nu * grid.k_squared * dt),
        np.exp(-params.mu * grid.k_squared * dt),
    )


def _advance_rk2(grid, params, dt, u_hat, q_hat, eu, eq):
    """Heun stages in integrating-factor variables (second order)."""
    k1u, k1q, speed = _nonlinear(grid, params, u_hat, q_hat)
    mid_u = eu * (u_hat + dt * k1u)
    mid_q = eq * (q_hat + dt * k1q)
    k2u, k2q, _ = _nonlinear(grid, params, mid_u, mid_q)
    new_u = eu * (u_hat + 0.5 * dt * k1u) + 0.5 * dt * k2u
    new_q = eq * (q_hat + 0.5 * dt * k1q) + 0.5 * dt * k2q
    return new_u, new_q, speed


def _advance_rk4(grid, params, dt, u_hat, q_hat, eu, eq, eu_half, eq_half):
    """Classical four-stage scheme in integrating-factor variables."""
    k1u, k1q, speed = _nonlinear(grid, params, u_hat, q_hat)
    k2u, k2q, _ = _nonlinear(
        grid,
        params,
        eu_half * (u_hat + 0.5 * dt * k1u),
        eq_half * (q_hat + 0.5 * dt * k1q),
    )
    k3u, k3q, _ = _nonlinear(
        grid,
        params,
        eu_half * u_hat + 0.5 * dt * k2u,
        eq_half * q_hat + 0.5 * dt * k2q,
    )
    k4u, k4q, _ = _nonlinear(
        grid,
        params,
        eu * u_hat + dt * eu_half * k3u,
        eq * q_hat + dt * eq_half * k3q,
    )
    new_u = eu * u_hat + dt / 6.0 * (eu * k1u + 2.0 * eu_half * (k2u + k3u) + k4u)
    new_q = eq * q_hat + dt / 6.0 * (eq * k1q + 2.0 * eq_half * (k2q + k3q) + k4q)
    return new_u, new_q, speed


def step(state: State, config: SolverConfig) -> State:
    """Advance one time step; raises BlowUpError on non-finite coefficients."""
    grid = config.grid
    params = config.params
    dt = config.dt
    eu, eq = _heat_factors(grid, params, dt)
    if config.scheme == "rk2-imex":
        new_u, new_q, speed = _advance_rk2(
            grid, params, dt, state.u.comps, state.q.comps, eu, eq
        )
    else:
        eu_half, eq_half = _heat_factors(grid, params, 0.5 * dt)
        new_u, new_q, speed = _advance_rk4(
            grid, params, dt, state.u.comps, state.q.comps, eu, eq, eu_half, eq_half
        )
    if dt * speed / grid.spacing > 0.5:
        warnings.warn(
            "advective CFL number exceeds 0.5; consider reducing dt", RuntimeWarning
        )
    new_u = leray_project(grid, new_u)
    t_new = state.t + dt
    if not np.all(np.isfinite(new_u)):
        raise BlowUpError(t_new, "non-finite velocity coefficients")
    if not np.all(np.isfinite(new_q)):
        raise BlowUpError(t_new, "non-finite tensor coefficients")
    return State(t_new, VelocityField(grid, new_u), QTensorField(grid, new_q))


def run(config: SolverConfig, initial: State):
    """Integrate to t_end; returns (final state, diagnostics records).

    A record is collected at the initial time, every ``diag_every`` steps,
    and at the final step.  On blow-up the error re-raised carries every
    record collected before the failure.
    """
    state = initial
    ladder = shared_ladder(config.grid)

    def snap(st: State) -> DiagnosticsRecord:
        return collect_diagnostics(
            st.u, st.q, st.t, config.params,
            r=config.r, c_r=config.c_r, s=config.s, ladder=ladder,
        )

    records = [snap(state)]
    n_steps = int(round(config.t_end / config.dt))
    try:
        for i in range(1, n_steps + 1):
            state = step(state, config)
            if i % config.diag_every == 0 or i == n_steps:
                records.append(snap(state))
    except BlowUpError as err:
        raise BlowUpError(err.t, err.diagnostic, records) from None
    return state, records


# ---------------------------------------------------------------------------
# Initial-state presets
# ---------------------------------------------------------------------------


def taylor_green_state(grid: Grid, order: float = 1.0, twist: float = 0.3) -> State:
    """Taylor-Green velocity plus a uniaxial tensor whose director winds in z.

    The velocity is the classical cellular field (sin x cos y cos z,
    -cos x sin y cos z, 0); the tensor is s (n x n - I/3) with in-plane
    director n = (cos(twist sin z), sin(twist sin z), 0) and uniform order
    parameter s.
    """
    x, y, z = grid.x, grid.y, grid.z
    u_phys = np.stack(
        [
            np.sin(x) * np.cos(y) * np.cos(z),
            -np.cos(x) * np.sin(y) * np.cos(z),
            np.zeros_like(x),
        ]
    )
    angle = twist * np.sin(z)
    director = np.stack([np.cos(angle), np.sin(angle), np.zeros_like(angle)])
    u = VelocityField(grid, leray_project(grid, to_spectral(grid, u_phys)))
    q = QTensorField.from_physical(grid, uniaxial_comps(director, order))
    return State(0.0, u, q)


def random_state(
    grid: Grid,
    seed: int,
    velocity_norm: float = 1.0,
    tensor_amplitude: float = 0.2,
    peak: float = 3.0,
    band: float | None = None,
) -> State:
    """Seeded random fields under the spectral envelope (k/peak)^2 e^-(k/peak)^2.

    The solenoidal velocity is scaled to the requested L2 norm; the tensor
    amplitude prescribes the largest pointwise magnitude |Q|.
    """
    rng = np.random.default_rng(seed)
    if band is None:
        band = float(grid.dealias_cut)
    envelope = (grid.k_abs / peak) ** 2 * np.exp(-((grid.k_abs / peak) ** 2))

    u_comps = random_solenoidal(grid, rng, band) * envelope
    u_comps *= velocity_norm / lp_norm(grid, u_comps, 2.0)

    q_comps = random_band_limited(grid, rng, band, shape=(5,)) * envelope
    q = QTensorField(grid, q_comps)
    scale = q.max_norm()
    q = QTensorField(grid, q_comps * (tensor_amplitude / scale))
    return State(0.0, VelocityField(grid, u_comps), q)
