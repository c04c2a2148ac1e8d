"""Numerical verification of exact shell-interaction identities.

Each routine here evaluates both sides of an algebraic identity between
frequency-shell projections of velocity and tensor fields, using independent
pseudo-spectral evaluations, and reports absolute and relative residuals.
Grid quadrature integrates band-limited trigonometric polynomials exactly, so
for inputs with Euclidean band <= n/6 (cubic integrands) or <= n/3 (quadratic
products) the residuals sit at roundoff; larger bands attach a warning to the
report instead of failing silently.

Commutator routines do not assert an identity: they return the commutator
field together with a dimensionless bound ratio whose suite-wide maximum is
pinned by calibrated regression constants.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .lpanalysis import shared_ladder
from .qtensor import QTensorField, matrix_from_comps, matrix_multiply
from .spectral import (
    DyadicLadder,
    Grid,
    SpectralField,
    VelocityField,
    ZeroShellError,
    derivative,
    divergence_residual,
    gradient,
    laplacian,
    lp_norm,
    quadrature_norm,
    random_band_limited,
    random_solenoidal,
    to_physical,
    to_spectral,
)

_TINY = 1e-300

#: Calibrated regression bound for the advection commutator ratio (Hoelder
#: triple (2, inf, 2), random band-limited fields).  Observed suite maxima sit
#: near 4; the constant leaves headroom without hiding a real regression.
ADVECTION_RATIO_BOUND = 16.0

#: Calibrated regression bound for the tensor commutator family ratios.
TENSOR_RATIO_BOUND = 64.0

#: Sharp constant for the shell Bernstein ratio check (see bernstein_ratio).
BERNSTEIN_RATIO_BOUND = 8.0


# ---------------------------------------------------------------------------
# Report plumbing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IdentityReport:
    """Outcome of one verification check.

    ``passed`` is always ``relative_residual <= tolerance``; for bound-style
    checks the "residual" is the observed ratio normalised by its calibrated
    constant, so the same pass rule applies.
    """

    name: str
    absolute_residual: float
    relative_residual: float
    tolerance: float
    passed: bool
    n: int
    band_limit: float
    seed: int | None = None
    warnings: tuple = ()


def _report(name, absolute, relative, tolerance, grid, band, seed=None, warnings=()):
    return IdentityReport(
        name=name,
        absolute_residual=float(absolute),
        relative_residual=float(relative),
        tolerance=float(tolerance),
        passed=bool(relative <= tolerance),
        n=grid.n,
        band_limit=float(band),
        seed=seed,
        warnings=tuple(warnings),
    )


def _measured_band(grid: Grid, *coeff_arrays) -> float:
    """Largest Euclidean |k| carrying relative weight > 1e-13 in any input."""
    band = 0.0
    for coeffs in coeff_arrays:
        mag = np.abs(np.asarray(coeffs)).reshape(-1, grid.n, grid.n, grid.n).max(axis=0)
        peak = float(mag.max())
        if peak == 0.0:
            continue
        band = max(band, float(grid.k_abs[mag > 1e-13 * peak].max()))
    return band


def _band_warnings(grid: Grid, band: float, limit: float, context: str) -> tuple:
    if band > limit + 1e-9:
        return (
            f"input band {band:.2f} exceeds the {context} exactness limit "
            f"{limit:.2f} at n={grid.n}; aliasing may pollute the residual",
        )
    return ()


def _require_solenoidal(u: VelocityField) -> None:
    if divergence_residual(u.grid, u.comps) > 1e-10:
        raise ValueError(
            "velocity field must be divergence-free; apply leray_project first"
        )


def write_report_csv(reports: Sequence[IdentityReport], path) -> None:
    """Machine-readable CSV, one row per check."""
    fields = [
        "name",
        "passed",
        "absolute_residual",
        "relative_residual",
        "tolerance",
        "n",
        "band_limit",
        "seed",
        "warnings",
    ]
    with open(path, "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=fields)
        writer.writeheader()
        for rep in reports:
            writer.writerow(
                {
                    "name": rep.name,
                    "passed": int(rep.passed),
                    "absolute_residual": f"{rep.absolute_residual:.17g}",
                    "relative_residual": f"{rep.relative_residual:.17g}",
                    "tolerance": f"{rep.tolerance:.17g}",
                    "n": rep.n,
                    "band_limit": f"{rep.band_limit:.17g}",
                    "seed": "" if rep.seed is None else rep.seed,
                    "warnings": ";".join(rep.warnings),
                }
            )


# ---------------------------------------------------------------------------
# Product regrouping
# ---------------------------------------------------------------------------


def _advect(grid: Grid, u_hat: np.ndarray, v_hat: np.ndarray) -> np.ndarray:
    """Spectral coefficients of (u . grad) v for a scalar field v."""
    u_phys = to_physical(grid, u_hat)
    gv_phys = to_physical(grid, gradient(grid, v_hat))
    return to_spectral(grid, np.einsum("jxyz,jxyz->xyz", u_phys, gv_phys))


class BonySplitResult(NamedTuple):
    low_high: SpectralField
    high_low: SpectralField
    high_high: SpectralField
    residual: float
    relative_residual: float
    warnings: tuple


def bony_split(
    u: VelocityField,
    v: SpectralField,
    q: int,
    ladder: DyadicLadder | None = None,
) -> BonySplitResult:
    """Regroup shell q of (u . grad) v into low-high, high-low, high-high sums.

    low-high keeps pairs where the velocity is at least two shells below the
    advected field, high-low the reverse, and high-high the near-diagonal
    remainder (velocity shells p-1, p, p+1 against shell p).  Shell pairs that
    cannot reach shell q are dropped: |q - p| <= 2 for the first two sums and
    p >= q - 2 for the remainder.  For dealiased inputs the dropped terms are
    identically zero, so the three parts reproduce the direct evaluation to
    roundoff; ``residual`` is the L2 norm of the difference.
    """
    grid = u.grid
    ladder = ladder or shared_ladder(grid)
    ladder._slot(q)
    u_hat = u.comps
    v_hat = v.coeffs

    low_high = np.zeros_like(v_hat)
    high_low = np.zeros_like(v_hat)
    high_high = np.zeros_like(v_hat)
    for p in ladder.shells:
        v_p = ladder.project(v_hat, p)
        if abs(q - p) <= 2:
            if p - 2 >= -1:
                u_low = ladder.low_pass(u_hat, p - 2)
                low_high += ladder.project(_advect(grid, u_low, v_p), q)
                v_low = ladder.low_pass(v_hat, p - 2)
                u_p = ladder.project(u_hat, p)
                high_low += ladder.project(_advect(grid, u_p, v_low), q)
        if p >= q - 2:
            near = [pp for pp in (p - 1, p, p + 1) if -1 <= pp <= ladder.q_max]
            u_near = sum(ladder.project(u_hat, pp) for pp in near)
            high_high += ladder.project(_advect(grid, u_near, v_p), q)

    full = _advect(grid, u_hat, v_hat)
    direct = ladder.project(full, q)
    residual = lp_norm(grid, low_high + high_low + high_high - direct, 2.0)
    # normalise by the whole product: shells at the ladder ends can be empty
    # (shell -1 of a divergence is the mean, which vanishes), and a per-shell
    # scale would turn their roundoff into a spurious 0/0 failure
    scale = max(lp_norm(grid, full, 2.0), _TINY)
    band = _measured_band(grid, u_hat, v_hat)
    warnings = _band_warnings(grid, band, grid.n / 3.0, "quadratic product")
    return BonySplitResult(
        low_high=SpectralField(grid, low_high),
        high_low=SpectralField(grid, high_low),
        high_high=SpectralField(grid, high_high),
        residual=float(residual),
        relative_residual=float(residual / scale),
        warnings=warnings,
    )


# ---------------------------------------------------------------------------
# Commutators
# ---------------------------------------------------------------------------


class CommutatorResult(NamedTuple):
    values: np.ndarray
    bound_ratio: float
    warnings: tuple


_DEFAULT_TRIPLE = (2.0, np.inf, 2.0)


def _check_triple(norms) -> tuple:
    r1, r2, r3 = (float(r) for r in norms)
    for r in (r1, r2, r3):
        if not r >= 1.0:
            raise ValueError(f"norm exponents must be >= 1, got {norms}")

    def inv(r: float) -> float:
        return 0.0 if np.isinf(r) else 1.0 / r

    if abs(inv(r1) - inv(r2) - inv(r3)) > 1e-12:
        raise ValueError(f"norm triple must satisfy 1/r1 = 1/r2 + 1/r3, got {norms}")
    return r1, r2, r3


def commutator_advection(
    q: int,
    p: int,
    u: VelocityField,
    v: SpectralField,
    ladder: DyadicLadder | None = None,
    norms: tuple = _DEFAULT_TRIPLE,
) -> CommutatorResult:
    """Commutator of shell filter q with low-pass advection, applied to v_p.

    Evaluates ``D_q(U . grad v_p) - U . grad(D_q v_p)`` with
    ``U = low_pass(u, p - 2)`` and ``v_p`` shell p of v, and the ratio

        ||comm||_{r1} / ( ||v_p||_{r3} * sum_{p' <= p-2} lambda_{p'} ||u_{p'}||_{r2} )

    for a Hoelder-compatible triple (r1, r2, r3).  A constant-in-space U
    commutes with the shell filter exactly, so the commutator vanishes and the
    ratio reflects only the gradient content of U.
    """
    grid = u.grid
    ladder = ladder or shared_ladder(grid)
    ladder._slot(q)
    ladder._slot(p)
    r1, r2, r3 = _check_triple(norms)
    _require_solenoidal(u)

    v_p = ladder.project(v.coeffs, p)
    if p - 2 >= -1:
        u_low = ladder.low_pass(u.comps, p - 2)
    else:
        u_low = np.zeros_like(u.comps)
    comm_hat = ladder.project(_advect(grid, u_low, v_p), q) - _advect(
        grid, u_low, ladder.project(v_p, q)
    )
    comm_phys = to_physical(grid, comm_hat)
    numerator = quadrature_norm(grid, comm_phys, r1)
    if p - 2 >= -1:
        shell_norms_u = ladder.shell_norms(u.comps, r2)
        top = (p - 2) + 1  # slot of shell p-2
        gradient_sum = float(
            np.sum(ladder.lambdas[: top + 1] * shell_norms_u[: top + 1])
        )
        denominator = lp_norm(grid, v_p, r3) * gradient_sum
    else:
        denominator = 0.0
    if numerator == 0.0:
        ratio = 0.0
    elif denominator == 0.0:
        ratio = np.inf
    else:
        ratio = numerator / denominator
    return CommutatorResult(comm_phys, float(ratio), ())


TENSOR_COMMUTATOR_KINDS = (
    "laplacian-left",
    "laplacian-right",
    "vorticity-left",
    "vorticity-right",
    "gradient-left",
    "gradient-right",
    "grad-vorticity-left",
    "grad-vorticity-right",
)


def _vorticity_hat(grid: Grid, u_comps: np.ndarray) -> np.ndarray:
    """Spectral vorticity tensor om[i, j] = (d_i u_j - d_j u_i) / 2."""
    gu = np.stack(
        [
            np.stack([derivative(grid, u_comps[j], i) for j in range(3)])
            for i in range(3)
        ]
    )
    return 0.5 * (gu - np.swapaxes(gu, 0, 1))


def commutator_tensor_family(
    kind: str,
    q: int,
    p: int,
    tensor: QTensorField,
    u: VelocityField,
    ladder: DyadicLadder | None = None,
    norms: tuple = _DEFAULT_TRIPLE,
) -> CommutatorResult:
    """Shell-filter commutators against a low-pass tensor factor.

    With ``P = low_pass(Q, p - 2)`` (as a 3x3 matrix field) the kinds are

    - ``laplacian-left / -right``:  [D_q, P mult] applied to ``lap Q_p``,
      multiplying on the named side;
    - ``vorticity-left / -right``:  same with the vorticity tensor ``Om_p``
      of the velocity in place of ``lap Q_p``;
    - ``gradient-left / -right``:  the mixed distortion pairing
      ``C_ij = D_q(d_i A : d_j B) - d_i A : d_j D_q B`` with (A, B) = (P, Q_p)
      for ``left`` and the transposed pairing for ``right``;
    - ``grad-vorticity-left / -right``:  [D_q, (grad P) mult] applied to
      ``Om_p``, one matrix commutator per gradient direction.

    The bound ratio is

        lambda_q * ||comm||_{r1}
        / ( ||X_p||_{r3} * sum_{p' <= p-2} lambda_{p'}^w ||Q_{p'}||_{r2} )

    where X_p is the high-frequency argument named above and w = 1 for the
    plain kinds, w = 2 for the gradient-weighted kinds (one extra derivative
    sits on the low-pass factor).
    """
    if kind not in TENSOR_COMMUTATOR_KINDS:
        raise ValueError(
            f"unknown commutator kind {kind!r}; expected one of "
            f"{', '.join(TENSOR_COMMUTATOR_KINDS)}"
        )
    grid = tensor.grid
    ladder = ladder or shared_ladder(grid)
    ladder._slot(q)
    ladder._slot(p)
    r1, r2, r3 = _check_triple(norms)

    base, side = kind.rsplit("-", 1)
    qm_hat = matrix_from_comps(tensor.comps)
    if p - 2 >= -1:
        low_hat = ladder.low_pass(qm_hat, p - 2)
    else:
        low_hat = np.zeros_like(qm_hat)

    if base == "laplacian":
        x_hat = laplacian(grid, ladder.project(qm_hat, p))
        weight_exp = 1.0
    elif base == "vorticity":
        x_hat = ladder.project(_vorticity_hat(grid, u.comps), p)
        weight_exp = 1.0
    elif base == "gradient":
        x_hat = gradient(grid, ladder.project(qm_hat, p))
        weight_exp = 2.0
    else:  # grad-vorticity
        x_hat = ladder.project(_vorticity_hat(grid, u.comps), p)
        weight_exp = 2.0

    if base in ("laplacian", "vorticity"):
        p_phys = to_physical(grid, low_hat)

        def pair(a, b):
            return matrix_multiply(a, b) if side == "left" else matrix_multiply(b, a)

    elif base == "gradient":
        p_phys = to_physical(grid, gradient(grid, low_hat))

        def pair(a, b):
            if side == "left":
                return np.einsum("iab...,jab...->ij...", a, b)
            return np.einsum("iab...,jab...->ij...", b, a)

    else:  # grad-vorticity
        p_phys = to_physical(grid, gradient(grid, low_hat))

        def pair(a, b):
            if side == "left":
                return np.einsum("dab...,bc...->dac...", a, b)
            return np.einsum("ab...,dbc...->dac...", b, a)

    x_phys = to_physical(grid, x_hat)
    term1 = to_physical(grid, ladder.project(to_spectral(grid, pair(p_phys, x_phys)), q))
    term2 = pair(p_phys, to_physical(grid, ladder.project(x_hat, q)))
    comm = term1 - term2

    numerator = quadrature_norm(grid, comm, r1)
    if p - 2 >= -1:
        shell_norms_q = ladder.shell_norms(qm_hat, r2)
        top = (p - 2) + 1
        weights = ladder.lambdas[: top + 1] ** weight_exp
        low_sum = float(np.sum(weights * shell_norms_q[: top + 1]))
        denominator = quadrature_norm(grid, x_phys, r3) * low_sum
    else:
        denominator = 0.0
    lam_q = 2.0**q
    if numerator == 0.0:
        ratio = 0.0
    elif denominator == 0.0:
        ratio = np.inf
    else:
        ratio = lam_q * numerator / denominator
    return CommutatorResult(comm, float(ratio), ())


# ---------------------------------------------------------------------------
# Exact cancellations
# ---------------------------------------------------------------------------


def _integral(grid: Grid, values: np.ndarray) -> float:
    return float(np.sum(values) * grid.cell_volume)


def cancel_J112_L12(
    u: VelocityField,
    tensor: QTensorField,
    s: float,
    ladder: DyadicLadder | None = None,
    tolerance: float = 1e-10,
    seed: int | None = None,
) -> IdentityReport:
    """Antisymmetric-stress / corotation cancellation across the shell ladder.

    For each shell q, with P = low_pass(Q, q - 2), S = lap Q_q, and the
    velocity gradient G_ij = d_i u_q_j split into its antisymmetric part Om,

        A_q = integral (S P - P S) : G      (commutator stress against grad u)
        B_q = -integral (Om P - P Om) : S   (corotation against lap Q)

    satisfy A_q + B_q = 0 pointwise, hence the weighted sums
    A = sum_q lambda_q^{2 s} A_q and B likewise cancel exactly.
    """
    grid = u.grid
    ladder = ladder or shared_ladder(grid)
    a_total = 0.0
    b_total = 0.0
    for shell in ladder.shells:
        if shell - 2 < -1:
            continue  # empty low-pass factor: both integrands vanish
        low_hat = ladder.low_pass(matrix_from_comps(tensor.comps), shell - 2)
        p_phys = to_physical(grid, low_hat)
        s_phys = to_physical(
            grid, laplacian(grid, ladder.project(matrix_from_comps(tensor.comps), shell))
        )
        u_q = ladder.project(u.comps, shell)
        gu = to_physical(
            grid,
            np.stack(
                [
                    np.stack([derivative(grid, u_q[j], i) for j in range(3)])
                    for i in range(3)
                ]
            ),
        )
        om = 0.5 * (gu - np.swapaxes(gu, 0, 1))
        comm_sp = matrix_multiply(s_phys, p_phys) - matrix_multiply(p_phys, s_phys)
        comm_om = matrix_multiply(om, p_phys) - matrix_multiply(p_phys, om)
        weight = (2.0**shell) ** (2.0 * s)
        a_total += weight * _integral(grid, np.einsum("ijxyz,ijxyz->xyz", comm_sp, gu))
        b_total -= weight * _integral(grid, np.einsum("ijxyz,ijxyz->xyz", comm_om, s_phys))
    absolute = abs(a_total + b_total)
    relative = absolute / max(abs(a_total), abs(b_total), _TINY)
    band = _measured_band(grid, u.comps, tensor.comps)
    warnings = _band_warnings(grid, band, grid.n / 6.0, "cubic integrand")
    return _report(
        "cancel-J112-L12", absolute, relative, tolerance, grid, band, seed, warnings
    )


def cancel_transport_stress(
    u: VelocityField,
    tensor: QTensorField,
    tolerance: float = 1e-10,
    seed: int | None = None,
) -> IdentityReport:
    """Advection-against-relaxation versus distortion-stress cancellation.

    For divergence-free u,

        integral (u . grad) Q : lap Q  +  integral (grad Q odot grad Q) : grad u  =  0

    where (grad Q odot grad Q)_ij = d_i Q_ab d_j Q_ab and the second pairing is
    T_ij d_i u_j.  Gradient (non-solenoidal) velocity input is rejected, since
    the identity integrates by parts against div u = 0.
    """
    grid = u.grid
    _require_solenoidal(u)
    qm_hat = matrix_from_comps(tensor.comps)
    u_phys = u.physical()
    gu = to_physical(
        grid,
        np.stack(
            [
                np.stack([derivative(grid, u.comps[j], i) for j in range(3)])
                for i in range(3)
            ]
        ),
    )
    gq = to_physical(grid, gradient(grid, qm_hat))
    lap = to_physical(grid, laplacian(grid, qm_hat))
    term1 = _integral(grid, np.einsum("jxyz,jabxyz,abxyz->xyz", u_phys, gq, lap))
    term2 = _integral(grid, np.einsum("iabxyz,jabxyz,ijxyz->xyz", gq, gq, gu))
    absolute = abs(term1 + term2)
    relative = absolute / max(abs(term1), abs(term2), _TINY)
    band = _measured_band(grid, u.comps, tensor.comps)
    warnings = _band_warnings(grid, band, grid.n / 6.0, "cubic integrand")
    return _report(
        "cancel-transport-stress", absolute, relative, tolerance, grid, band, seed, warnings
    )


def cancel_K22_identity(
    u: VelocityField,
    tensor: QTensorField,
    s: float,
    shells: Sequence | None = None,
    ladder: DyadicLadder | None = None,
    tolerance: float = 1e-10,
    seed: int | None = None,
) -> IdentityReport:
    """Per-shell regrouping of the mixed distortion and transport pairings.

    For each shell q, with P = low_pass(Q, q - 2) and R = Q_q, the three
    left-side integrals

        J1 = integral (grad R odot grad P)_ij d_i u_q_j
        J2 = integral (grad P odot grad R)_ij d_i u_q_j
        K  = integral (u_q . grad) P : lap R

    sum to  - integral (u_q . grad) R : lap P  by parts, using div u_q = 0.
    The check evaluates every integral independently, compares per shell, and
    also compares the lambda_q^{2 s}-weighted sums; the reported relative
    residual is the worst of the per-shell and summed comparisons.
    """
    grid = u.grid
    ladder = ladder or shared_ladder(grid)
    _require_solenoidal(u)
    if shells is None:
        shells = [q for q in ladder.shells if q - 2 >= -1]
    qm_hat = matrix_from_comps(tensor.comps)
    worst_rel = 0.0
    lhs_total = 0.0
    rhs_total = 0.0
    for shell in shells:
        ladder._slot(shell)
        if shell - 2 < -1:
            continue  # empty low-pass factor: every integral vanishes
        low_hat = ladder.low_pass(qm_hat, shell - 2)
        r_hat = ladder.project(qm_hat, shell)
        u_q = ladder.project(u.comps, shell)
        u_q_phys = to_physical(grid, u_q)
        gu = to_physical(
            grid,
            np.stack(
                [
                    np.stack([derivative(grid, u_q[j], i) for j in range(3)])
                    for i in range(3)
                ]
            ),
        )
        gp = to_physical(grid, gradient(grid, low_hat))
        gr = to_physical(grid, gradient(grid, r_hat))
        lap_p = to_physical(grid, laplacian(grid, low_hat))
        lap_r = to_physical(grid, laplacian(grid, r_hat))
        j1 = _integral(grid, np.einsum("iabxyz,jabxyz,ijxyz->xyz", gr, gp, gu))
        j2 = _integral(grid, np.einsum("iabxyz,jabxyz,ijxyz->xyz", gp, gr, gu))
        kk = _integral(grid, np.einsum("jxyz,jabxyz,abxyz->xyz", u_q_phys, gp, lap_r))
        rhs = -_integral(grid, np.einsum("jxyz,jabxyz,abxyz->xyz", u_q_phys, gr, lap_p))
        scale = max(abs(j1), abs(j2), abs(kk), abs(rhs), _TINY)
        worst_rel = max(worst_rel, abs(j1 + j2 + kk - rhs) / scale)
        weight = (2.0**shell) ** (2.0 * s)
        lhs_total += weight * (j1 + j2 + kk)
        rhs_total += weight * rhs
    absolute = abs(lhs_total - rhs_total)
    relative = max(
        worst_rel, absolute / max(abs(lhs_total), abs(rhs_total), _TINY)
    )
    band = _measured_band(grid, u.comps, tensor.comps)
    warnings = _band_warnings(grid, band, grid.n / 6.0, "cubic integrand")
    return _report(
        "cancel-K22", absolute, relative, tolerance, grid, band, seed, warnings
    )


# ---------------------------------------------------------------------------
# Suite driver
# ---------------------------------------------------------------------------


def verify_suite(
    n: int = 32,
    seed: int = 0,
    band: float | None = None,
    s_values: Sequence = (0.55, 0.6, 0.9),
    pairs: int = 3,
    respect_mask: bool = True,
):
    """Run every identity check on seeded random fields; return the reports.

    ``pairs`` counts independent (velocity, tensor) draws; zero pairs yields a
    single vacuous pass flagged as running no checks.  ``band`` defaults to
    n/6, the largest band for which the cubic integral identities are exact;
    pushing it higher (or disabling the dealias mask) demonstrates the
    aliasing failure mode and attaches warnings to the affected reports.
    """
    grid = Grid(n)
    ladder = shared_ladder(grid)
    if band is None:
        band = n / 6.0
    if pairs == 0:
        empty = IdentityReport(
            name="empty-suite",
            absolute_residual=0.0,
            relative_residual=0.0,
            tolerance=0.0,
            passed=True,
            n=n,
            band_limit=float(band),
            seed=seed,
            warnings=("no checks executed: empty field set",),
        )
        return [empty]

    rng = np.random.default_rng(seed)
    reports = []
    adv_ratio = 0.0
    tensor_ratios = dict.fromkeys(TENSOR_COMMUTATOR_KINDS, 0.0)
    bernstein_max = 0.0
    for trial in range(pairs):
        u = VelocityField(grid, random_solenoidal(grid, rng, band, respect_mask=respect_mask))
        v = SpectralField(grid, random_band_limited(grid, rng, band, respect_mask=respect_mask))
        tensor_comps = random_band_limited(
            grid, rng, band, shape=(5,), respect_mask=respect_mask
        )
        tensor = QTensorField(grid, tensor_comps)

        for q in ladder.shells:
            split = bony_split(u, v, q, ladder)
            reports.append(
                _report(
                    f"bony-split-q{q}-trial{trial}",
                    split.residual,
                    split.relative_residual,
                    1e-12,
                    grid,
                    _measured_band(grid, u.comps, v.coeffs),
                    seed,
                    split.warnings,
                )
            )

        for s in s_values:
            reports.append(
                _rename(
                    cancel_J112_L12(u, tensor, s, ladder, seed=seed),
                    f"cancel-J112-L12-s{s}-trial{trial}",
                )
            )
            reports.append(
                _rename(
                    cancel_K22_identity(u, tensor, s, ladder=ladder, seed=seed),
                    f"cancel-K22-s{s}-trial{trial}",
                )
            )
        reports.append(
            _rename(
                cancel_transport_stress(u, tensor, seed=seed),
                f"cancel-transport-stress-trial{trial}",
            )
        )

        for q in range(0, ladder.q_max + 1):
            for p in range(max(1, q - 1), min(ladder.q_max, q + 1) + 1):
                adv_ratio = max(
                    adv_ratio, commutator_advection(q, p, u, v, ladder).bound_ratio
                )
            if q >= 1:
                for kind in TENSOR_COMMUTATOR_KINDS:
                    tensor_ratios[kind] = max(
                        tensor_ratios[kind],
                        commutator_tensor_family(kind, q, q, tensor, u, ladder).bound_ratio,
                    )
        for q in ladder.shells:
            try:
                bernstein_max = max(
                    bernstein_max, ladder.bernstein_ratio(v.coeffs, q, 2.0, np.inf)
                )
            except ZeroShellError:
                continue

    band_seen = float(band)
    reports.append(
        _report(
            "commutator-advection-max-ratio",
            adv_ratio,
            adv_ratio / ADVECTION_RATIO_BOUND,
            1.0,
            grid,
            band_seen,
            seed,
        )
    )
    for kind, ratio in tensor_ratios.items():
        reports.append(
            _report(
                f"commutator-{kind}-max-ratio",
                ratio,
                ratio / TENSOR_RATIO_BOUND,
                1.0,
                grid,
                band_seen,
                seed,
            )
        )
    reports.append(
        _report(
            "bernstein-max-ratio",
            bernstein_max,
            bernstein_max / BERNSTEIN_RATIO_BOUND,
            1.0,
            grid,
            band_seen,
            seed,
        )
    )
    return reports


def _rename(report: IdentityReport, name: str) -> IdentityReport:
    return IdentityReport(
        name=name,
        absolute_residual=report.absolute_residual,
        relative_residual=report.relative_residual,
        tolerance=report.tolerance,
        passed=report.passed,
        n=report.n,
        band_limit=report.band_limit,
        seed=report.seed,
        warnings=report.warnings,
    )
