"""Dissipation-wavenumber and regularity-criterion diagnostics.

All monitors live on the dyadic shell ladder of ``spectral.DyadicLadder``.
The central quantity is the dissipation wavenumber of a velocity field:
the weighted shell norm ``lambda_p^(-1+3/r) * ||u_p||_r`` is compared
against the threshold ``c_r * min(nu, mu)``, and

    Qindex = largest shell p >= 1 whose weighted norm reaches the threshold
             (0 when no shell does; this vacuous case is the sentinel),
    Lambda = 2^Qindex.

Equivalently, Lambda is the smallest dyadic scale such that every strictly
smaller scale is dissipation-dominated.  When the threshold is still met at
the top of the resolved ladder the result is flagged as truncated, so
downstream consumers can exclude those samples.

A diagnostics record bundles one time sample of every monitored scalar:
energy, dissipation, the wavenumber pair, the low-pass gradient sup norm
f(t), the vorticity sup norm (BKM integrand), the Lebesgue-power integrand
(Prodi-Serrin pairing 2/s_exp + 3/r = 1, only defined for r > 3), per-shell
criterion integrands, dyadic Sobolev norms, and the logarithmic bound ratio
Lambda^(s-1/2) * c_r * min(nu, mu) / ||u||_Hs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .qtensor import (
    MaterialParams,
    QTensorField,
    _traceless_potential_force,
    frobenius_dot,
    total_energy,
)
from .spectral import (
    DyadicLadder,
    Grid,
    VelocityField,
    laplacian,
    lp_norm,
    quadrature_norm,
    to_physical,
)

_trapezoid = getattr(np, "trapezoid", None) or np.trapz

_LADDERS: dict[Grid, DyadicLadder] = {}


def shared_ladder(grid: Grid) -> DyadicLadder:
    """Memoized ladder per grid size (construction builds N^3 multipliers)."""
    ladder = _LADDERS.get(grid)
    if ladder is None:
        ladder = _LADDERS[grid] = DyadicLadder(grid)
    return ladder


# ---------------------------------------------------------------------------
# Record type
# ---------------------------------------------------------------------------


@dataclass
class DiagnosticsRecord:
    """One time sample of every monitored scalar.

    ``crit2_shell_integrands`` holds 1_{q <= Qindex} * lambda_q * ||u_q||_inf
    for shells q = -1 .. q_max in order.  ``lam`` is the dissipation
    wavenumber Lambda = 2^q_index; ``lambda_truncated`` marks samples where
    the threshold was still met at the top of the resolved ladder.
    """

    t: float
    total_energy: float
    dissipation: float
    max_q_norm: float
    lam: float
    q_index: int
    f_t: float
    bkm_integrand: float
    ps_integrand: float
    crit2_shell_integrands: tuple
    hs_u: float
    hs_grad_q: float
    log_bound_ratio: float
    lambda_truncated: bool


# ---------------------------------------------------------------------------
# Dissipation wavenumber
# ---------------------------------------------------------------------------


class WavenumberResult(NamedTuple):
    lam: float
    q_index: int
    truncated: bool


def _shell_l2_norms(ladder: DyadicLadder, coeffs: np.ndarray) -> np.ndarray:
    """Per-shell L2 norms straight from coefficients (Parseval); no transforms."""
    grid = ladder.grid
    flat = coeffs.reshape(-1, grid.n, grid.n, grid.n)
    power = np.sum((flat * flat.conj()).real, axis=0)
    weights = np.einsum("sxyz,xyz->s", ladder.multipliers**2, power)
    return (2.0 * np.pi) ** 1.5 / grid.n**3 * np.sqrt(weights)


def _weighted_shell_values(
    ladder: DyadicLadder, norms: np.ndarray, r: float
) -> np.ndarray:
    """lambda_q^(-1+3/r) * ||u_q||_r for every slot of the ladder."""
    return ladder.lambdas ** (-1.0 + 3.0 / r) * norms


def dissipation_wavenumber(
    u: VelocityField,
    r: float,
    c_r: float,
    nu: float,
    mu: float,
    ladder: DyadicLadder | None = None,
    shell_norms_r: np.ndarray | None = None,
) -> WavenumberResult:
    """Dissipation wavenumber (Lambda, Qindex, truncated flag) of a velocity.

    ``shell_norms_r`` may pass precomputed per-slot ||u_q||_r values (as from
    ``DyadicLadder.shell_norms``) to avoid re-transforming the field.
    """
    if not 2.0 <= r < 6.0:
        raise ValueError(f"r must satisfy 2 <= r < 6, got {r}")
    ladder = ladder or shared_ladder(u.grid)
    if shell_norms_r is None:
        if r == 2.0:
            shell_norms_r = _shell_l2_norms(ladder, u.comps)
        else:
            shell_norms_r = ladder.shell_norms(u.comps, r)
    values = _weighted_shell_values(ladder, shell_norms_r, r)
    threshold = c_r * min(nu, mu)
    q_index = 0
    truncated = False
    for q in range(1, ladder.q_max + 1):
        if values[q + 1] >= threshold:
            q_index = q
    if q_index == ladder.q_max:
        truncated = values[ladder.q_max + 1] >= threshold
    return WavenumberResult(float(2.0**q_index), q_index, truncated)


class ShellBoundResult(NamedTuple):
    passed: bool
    margin: float
    skipped: bool
    reason: str


def shell_lower_bound_check(
    u: VelocityField,
    lam: float,
    q_index: int,
    r: float,
    c_r: float,
    nu: float,
    mu: float,
    ladder: DyadicLadder | None = None,
) -> ShellBoundResult:
    """Check ||u_Q||_r >= c_r * min(nu, mu) * Lambda^(1-3/r) for interior Lambda.

    Skipped (with a reason) unless 1 < Lambda < 2^q_max: the sentinel and
    truncated regimes carry no lower-bound information.
    """
    ladder = ladder or shared_ladder(u.grid)
    if q_index < 1:
        return ShellBoundResult(False, 0.0, True, "sentinel Lambda = 1")
    if q_index >= ladder.q_max:
        return ShellBoundResult(False, 0.0, True, "Lambda at the resolved top")
    norm = ladder.shell_norm(u.comps, q_index, r)
    floor = c_r * min(nu, mu) * lam ** (1.0 - 3.0 / r)
    margin = norm - floor
    return ShellBoundResult(margin >= 0.0, float(margin), False, "")


# ---------------------------------------------------------------------------
# Pointwise-in-time integrands
# ---------------------------------------------------------------------------


def f_of_t(u: VelocityField, q_index: int, ladder: DyadicLadder | None = None) -> float:
    """Largest shell sup norm of the gradient of the low-passed velocity.

    f = sup_q ||Delta_q grad(u_{<=Qindex})||_inf with the Frobenius magnitude
    over the nine gradient components.
    """
    ladder = ladder or shared_ladder(u.grid)
    grid = u.grid
    low = ladder.low_pass(u.comps, min(q_index, ladder.q_max))
    grad = np.stack([grid._ik[axis] * low for axis in range(3)])
    return float(np.max(ladder.shell_norms(grad.reshape(9, *low.shape[1:]), np.inf)))


def curl_sup_norm(u: VelocityField) -> float:
    """||curl u||_inf, the BKM integrand."""
    grid = u.grid
    ikx, iky, ikz = grid._ik
    ux, uy, uz = u.comps
    curl = np.stack([iky * uz - ikz * uy, ikz * ux - ikx * uz, ikx * uy - iky * ux])
    return lp_norm(grid, curl, np.inf)


def prodi_serrin_exponent(r: float) -> float | None:
    """Time exponent s_exp with 2/s_exp + 3/r = 1; None outside r > 3."""
    if r <= 3.0:
        return None
    return 2.0 * r / (r - 3.0)


def prodi_serrin_integrand(u: VelocityField, r: float) -> float:
    """||u||_r^s_exp, or 0.0 where the exponent pairing is undefined (r <= 3)."""
    s_exp = prodi_serrin_exponent(r)
    if s_exp is None:
        return 0.0
    return lp_norm(u.grid, u.comps, r) ** s_exp


def energy_dissipation(u: VelocityField, q: QTensorField, params: MaterialParams) -> float:
    """Instantaneous dissipation functional of the energy balance.

    nu * ||grad u||_2^2 + integral of (lap Q - P dF) : (mu lap Q - P dF),
    where P dF is the trace-free part of the potential derivative.  With
    mu = 1 the second factor collapses to |lap Q - P dF|^2.
    """
    grid = u.grid
    n = grid.n
    force = _traceless_potential_force(q, params)
    lap_q = laplacian(grid, q.comps)
    grad_u = np.stack([grid._ik[axis] * u.comps for axis in range(3)])
    bundle = np.concatenate(
        [lap_q - force, params.mu * lap_q - force, grad_u.reshape(9, n, n, n)]
    )
    phys = to_physical(grid, bundle)
    tensor_pair = np.sum(frobenius_dot(phys[:5], phys[5:10]))
    grad_sq = np.sum(phys[10:] ** 2)
    return float((params.nu * grad_sq + tensor_pair) * grid.cell_volume)


# ---------------------------------------------------------------------------
# Record assembly
# ---------------------------------------------------------------------------


def collect_diagnostics(
    u: VelocityField,
    q: QTensorField,
    t: float,
    params: MaterialParams,
    r: float = 2.0,
    c_r: float = 0.01,
    s: float = 0.6,
    ladder: DyadicLadder | None = None,
) -> DiagnosticsRecord:
    """Evaluate every monitor on one (u, Q) snapshot."""
    grid = u.grid
    ladder = ladder or shared_ladder(grid)

    # shell-resolved velocity, one batched transform for both norms
    shell_phys = to_physical(grid, ladder.multipliers[:, None] * u.comps[None])
    slots = ladder.q_max + 2
    norms_r = np.empty(slots)
    sups = np.empty(slots)
    for i in range(slots):
        norms_r[i] = quadrature_norm(grid, shell_phys[i], r)
        sups[i] = quadrature_norm(grid, shell_phys[i], np.inf)

    wn = dissipation_wavenumber(
        u, r, c_r, params.nu, params.mu, ladder=ladder, shell_norms_r=norms_r
    )

    crit2 = ladder.lambdas * sups
    crit2[wn.q_index + 2 :] = 0.0  # shells above Qindex carry indicator 0

    grad_q = np.stack([grid._ik[axis] * q.comps for axis in range(3)])
    hs_u = float(
        np.sqrt(np.sum(ladder.lambdas ** (2 * s) * _shell_l2_norms(ladder, u.comps) ** 2))
    )
    hs_grad_q = float(
        np.sqrt(
            np.sum(
                ladder.lambdas ** (2 * s)
                * _shell_l2_norms(ladder, grad_q.reshape(15, grid.n, grid.n, grid.n)) ** 2
            )
        )
    )

    interior = wn.q_index >= 1 and not wn.truncated
    if interior and hs_u > 0.0:
        log_ratio = wn.lam ** (s - 0.5) * c_r * min(params.nu, params.mu) / hs_u
    else:
        log_ratio = 0.0

    return DiagnosticsRecord(
        t=float(t),
        total_energy=total_energy(u, q, params),
        dissipation=energy_dissipation(u, q, params),
        max_q_norm=q.max_norm(),
        lam=wn.lam,
        q_index=wn.q_index,
        f_t=f_of_t(u, wn.q_index, ladder),
        bkm_integrand=curl_sup_norm(u),
        ps_integrand=prodi_serrin_integrand(u, r),
        crit2_shell_integrands=tuple(float(v) for v in crit2),
        hs_u=hs_u,
        hs_grad_q=hs_grad_q,
        log_bound_ratio=float(log_ratio),
        lambda_truncated=wn.truncated,
    )


# ---------------------------------------------------------------------------
# Time accumulators and the logarithmic bound
# ---------------------------------------------------------------------------


@dataclass
class CriterionReport:
    """Trapezoid-rule integrals of the regularity-criterion integrands.

    ``shell_integrals[i]`` integrates the per-shell criterion integrand of
    shell ``shells[i]`` over the trailing half window [window_start, t_end].
    """

    t_start: float
    t_end: float
    f_integral: float
    bkm_integral: float
    ps_integral: float
    window_start: float
    shells: tuple
    shell_integrals: np.ndarray


def criterion_accumulators(
    records: Sequence[DiagnosticsRecord], exclude_truncated: bool = False
) -> CriterionReport:
    """Integrate the criterion integrands over a finished diagnostics series."""
    rows = list(records)
    if exclude_truncated:
        rows = [rec for rec in rows if not rec.lambda_truncated]
    if len(rows) < 2:
        raise ValueError("need at least two diagnostics samples")
    times = np.array([rec.t for rec in rows])
    if np.any(np.diff(times) <= 0.0):
        raise ValueError("time stamps must be strictly increasing")
    widths = {len(rec.crit2_shell_integrands) for rec in rows}
    if len(widths) != 1:
        raise ValueError("records carry inconsistent shell counts")

    f_int = float(_trapezoid([rec.f_t for rec in rows], times))
    bkm_int = float(_trapezoid([rec.bkm_integrand for rec in rows], times))
    ps_int = float(_trapezoid([rec.ps_integrand for rec in rows], times))

    window_start = times[0] + 0.5 * (times[-1] - times[0])
    in_window = times >= window_start - 1e-12
    if np.count_nonzero(in_window) < 2:
        # node-aligned window; very sparse series fall back to the last two samples
        in_window = np.zeros_like(in_window)
        in_window[-2:] = True
    shell_matrix = np.array([rec.crit2_shell_integrands for rec in rows])
    shell_integrals = _trapezoid(shell_matrix[in_window], times[in_window], axis=0)

    n_shells = widths.pop()
    return CriterionReport(
        t_start=float(times[0]),
        t_end=float(times[-1]),
        f_integral=f_int,
        bkm_integral=bkm_int,
        ps_integral=ps_int,
        window_start=float(window_start),
        shells=tuple(range(-1, n_shells - 1)),
        shell_integrals=np.asarray(shell_integrals, dtype=float),
    )


class LogBoundResult(NamedTuple):
    passed: bool
    ratio: float
    skipped: bool
    reason: str


def log_bound_monitor(record: DiagnosticsRecord, slack: float = 2.0) -> LogBoundResult:
    """Check Lambda^(s-1/2) <= slack * ||u||_Hs / (c_r min(nu, mu)).

    Evaluates the precomputed record ratio against the slack factor; sentinel
    and truncated samples are skipped (they carry no interior information).
    """
    if record.q_index < 1:
        return LogBoundResult(False, record.log_bound_ratio, True, "sentinel Lambda = 1")
    if record.lambda_truncated:
        return LogBoundResult(False, record.log_bound_ratio, True, "Lambda truncated at q_max")
    return LogBoundResult(record.log_bound_ratio <= slack, record.log_bound_ratio, False, "")
