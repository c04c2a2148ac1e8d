"""Pseudo-spectral toolbox on the periodic box [0, 2*pi)^3.

Fields live in Fourier space as complex arrays with unnormalized forward
transforms (a constant field c has coefficient c*N^3 at k=0).  Wavevectors are
integer triples in fftfreq ordering; every stored field is supported inside the
2/3-rule dealias box, which makes quadratic products of stored fields exactly
representable on the grid.

The dyadic ladder splits a field into Littlewood-Paley shells

    f = sum_{q=-1}^{q_max} shell_q(f),

built from a smooth radial cutoff chi (identically 1 below 3/4, identically 0
above 1).  The ladder is exact: the shell multipliers sum to 1 on the whole
resolved band, so reconstruction holds to machine precision.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import scipy.fft as _fft

__all__ = [
    "Grid",
    "SpectralField",
    "VelocityField",
    "DyadicLadder",
    "ZeroShellError",
    "smooth_cutoff",
    "shell_function",
    "to_physical",
    "to_spectral",
    "derivative",
    "gradient",
    "laplacian",
    "leray_project",
    "divergence_residual",
    "hermitian_residual",
    "lp_norm",
    "quadrature_norm",
    "random_band_limited",
    "random_solenoidal",
]

_SPATIAL_AXES = (-3, -2, -1)


def fft_workers() -> int:
    """Thread cap for FFTs, from the QTLP_THREADS environment variable."""
    try:
        return max(1, int(os.environ.get("QTLP_THREADS", "1")))
    except ValueError:
        return 1


def _fftn(values: np.ndarray) -> np.ndarray:
    return _fft.fftn(values, axes=_SPATIAL_AXES, workers=fft_workers())


def _ifftn(coeffs: np.ndarray) -> np.ndarray:
    return _fft.ifftn(coeffs, axes=_SPATIAL_AXES, workers=fft_workers())


class Grid:
    """Uniform N^3 collocation grid on [0, 2*pi)^3 with integer wavenumbers.

    N must be a power of two >= 16.  The dealias mask keeps |k_i| <= floor(N/3)
    on each axis (2/3 rule); the Nyquist column is excluded automatically.
    """

    def __init__(self, n: int):
        n = int(n)
        if n < 16 or n & (n - 1):
            raise ValueError(f"grid size must be a power of two >= 16, got {n}")
        self.n = n
        self.spacing = 2.0 * np.pi / n
        self.cell_volume = self.spacing**3
        self.k_max = n // 2 - 1

        k1 = np.fft.fftfreq(n, 1.0 / n).astype(np.int64)
        self.kx, self.ky, self.kz = np.meshgrid(k1, k1, k1, indexing="ij")
        self.k_squared = (self.kx**2 + self.ky**2 + self.kz**2).astype(np.float64)
        self.k_abs = np.sqrt(self.k_squared)

        cut = n // 3
        self.dealias_cut = cut
        self.dealias_mask = (
            (np.abs(self.kx) <= cut) & (np.abs(self.ky) <= cut) & (np.abs(self.kz) <= cut)
        )

        x1 = np.arange(n) * self.spacing
        self.x, self.y, self.z = np.meshgrid(x1, x1, x1, indexing="ij")

        # i*k factors for derivatives, one per axis
        self._ik = (1j * self.kx, 1j * self.ky, 1j * self.kz)
        # 1/|k|^2 with the zero mode zeroed (used by the Leray projector)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = np.where(self.k_squared > 0.0, 1.0 / self.k_squared, 0.0)
        self._inv_k_squared = inv

    def __eq__(self, other) -> bool:
        return isinstance(other, Grid) and other.n == self.n

    def __hash__(self) -> int:
        return hash(("Grid", self.n))

    def __repr__(self) -> str:
        return f"Grid(n={self.n})"


@dataclass
class SpectralField:
    """A scalar field as dealiased Fourier coefficients on its grid."""

    grid: Grid
    coeffs: np.ndarray

    def physical(self) -> np.ndarray:
        return to_physical(self.grid, self.coeffs)

    @classmethod
    def from_physical(cls, grid: Grid, values: np.ndarray) -> "SpectralField":
        return cls(grid, to_spectral(grid, values))


@dataclass
class VelocityField:
    """Three velocity components as spectral coefficients, shape (3, N, N, N)."""

    grid: Grid
    comps: np.ndarray

    def physical(self) -> np.ndarray:
        return to_physical(self.grid, self.comps)

    @classmethod
    def from_physical(cls, grid: Grid, values: np.ndarray) -> "VelocityField":
        return cls(grid, to_spectral(grid, np.asarray(values)))

    def divergence_residual(self) -> float:
        return divergence_residual(self.grid, self.comps)


def to_physical(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    """Inverse transform to grid values.  Leading axes are batched."""
    return np.ascontiguousarray(_ifftn(coeffs).real)


def to_spectral(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Forward transform of grid values, truncated to the dealias box."""
    return _fftn(np.asarray(values, dtype=np.float64)) * grid.dealias_mask


def derivative(grid: Grid, coeffs: np.ndarray, axis: int) -> np.ndarray:
    """Spectral partial derivative along axis in {0, 1, 2}."""
    if axis not in (0, 1, 2):
        raise ValueError(f"axis must be 0, 1 or 2, got {axis}")
    return coeffs * grid._ik[axis]


def gradient(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    """Stack the three partial derivatives along a new leading axis."""
    return np.stack([derivative(grid, coeffs, i) for i in range(3)])


def laplacian(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    return -grid.k_squared * coeffs


def leray_project(grid: Grid, comps: np.ndarray) -> np.ndarray:
    """Project a 3-component spectral field onto divergence-free fields.

    u_j -> (delta_jl - k_j k_l / |k|^2) u_l; the k=0 mode passes through.
    """
    if comps.shape[0] != 3:
        raise ValueError("expected a 3-component field")
    kdotu = (
        grid.kx * comps[0] + grid.ky * comps[1] + grid.kz * comps[2]
    ) * grid._inv_k_squared
    out = comps.copy()
    out[0] -= grid.kx * kdotu
    out[1] -= grid.ky * kdotu
    out[2] -= grid.kz * kdotu
    return out


def divergence_residual(grid: Grid, comps: np.ndarray) -> float:
    """Relative size of div(u) in the spectral L2 metric (0 for solenoidal u)."""
    div = grid.kx * comps[0] + grid.ky * comps[1] + grid.kz * comps[2]
    scale = np.sqrt(np.sum(grid.k_squared * np.abs(comps) ** 2))
    if scale == 0.0:
        return 0.0
    return float(np.sqrt(np.sum(np.abs(div) ** 2)) / scale)


def hermitian_residual(grid: Grid, coeffs: np.ndarray) -> float:
    """Max deviation from coeff(-k) == conj(coeff(k)), relative to max |coeff|."""
    flipped = np.roll(coeffs[..., ::-1, ::-1, ::-1], 1, axis=_SPATIAL_AXES)
    scale = float(np.max(np.abs(coeffs)))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(coeffs - np.conj(flipped))) / scale)


# ---------------------------------------------------------------------------
# Norms.  Pointwise magnitude is Euclidean/Frobenius over all leading axes,
# then a rectangle-rule L^p quadrature with cell weight (2*pi/N)^3; p = inf is
# the grid maximum.  This is the norm semantics used everywhere in the package.
# ---------------------------------------------------------------------------


def _pointwise_magnitude(values: np.ndarray) -> np.ndarray:
    mag_sq = values * values
    while mag_sq.ndim > 3:
        mag_sq = mag_sq.sum(axis=0)
    return np.sqrt(mag_sq)


def quadrature_norm(grid: Grid, values: np.ndarray, p: float) -> float:
    """L^p norm of physical grid values of shape (..., N, N, N)."""
    if not (p >= 1.0):
        raise ValueError(f"p must satisfy 1 <= p <= inf, got {p}")
    mag = _pointwise_magnitude(np.asarray(values, dtype=np.float64))
    if np.isinf(p):
        return float(mag.max())
    if p == 2.0:
        return float(np.sqrt(np.sum(mag * mag) * grid.cell_volume))
    return float((np.sum(mag**p) * grid.cell_volume) ** (1.0 / p))


def lp_norm(grid: Grid, coeffs: np.ndarray, p: float) -> float:
    """L^p norm of a spectral field (leading axes are vector/tensor components)."""
    return quadrature_norm(grid, to_physical(grid, coeffs), p)


# ---------------------------------------------------------------------------
# Littlewood-Paley ladder
# ---------------------------------------------------------------------------


def smooth_cutoff(rho) -> np.ndarray:
    """Radial cutoff chi: 1 on [0, 3/4], 0 on [1, inf), smooth bridge between.

    The bridge is the standard C^inf step psi(t) = g(t) / (g(t) + g(1-t)) with
    g(t) = exp(-1/t), evaluated at t = (1 - rho)/(1/4), so the plateau values
    are exact 1.0 / 0.0 floats.
    """
    rho = np.asarray(rho, dtype=np.float64)
    out = np.ones_like(rho)
    out[rho >= 1.0] = 0.0
    mid = (rho > 0.75) & (rho < 1.0)
    if np.any(mid):
        t = (1.0 - rho[mid]) / 0.25
        g = np.exp(-1.0 / t)
        g_mirror = np.exp(-1.0 / (1.0 - t))
        out[mid] = g / (g + g_mirror)
    return out


def shell_function(rho) -> np.ndarray:
    """Annular bump phi(rho) = chi(rho/2) - chi(rho), supported on (3/4, 2)."""
    rho = np.asarray(rho, dtype=np.float64)
    return smooth_cutoff(rho / 2.0) - smooth_cutoff(rho)


class ZeroShellError(ValueError):
    """Raised when a shell-relative quantity is undefined because the shell is empty."""


class DyadicLadder:
    """Shell multipliers phi_q(|k|) for q = -1 .. q_max on a fixed grid.

    q = -1 is the low-frequency block chi(|k|); shell q >= 0 has multiplier
    phi(|k| / 2^q).  q_max is the smallest q for which the telescoped sum
    chi(|k| / 2^(q+1)) equals 1 on the whole dealiased band, so low_pass(q_max)
    reconstructs every stored field exactly.
    """

    def __init__(self, grid: Grid):
        self.grid = grid
        band_top = float(grid.k_abs[grid.dealias_mask].max())
        q = 0
        while 0.75 * 2.0 ** (q + 1) < band_top:
            q += 1
        self.q_max = q
        self.shells = range(-1, q + 1)
        self.lambdas = 2.0 ** np.arange(-1, q + 1)

        chi_scaled = [smooth_cutoff(grid.k_abs / 2.0**j) for j in range(q + 2)]
        mults = [chi_scaled[0]]
        for j in range(q + 1):
            mults.append(chi_scaled[j + 1] - chi_scaled[j])
        self.multipliers = np.stack(mults)  # index q+1 <-> shell q
        self.cumulative = np.cumsum(self.multipliers, axis=0)

    def _slot(self, q: int) -> int:
        if not -1 <= q <= self.q_max:
            raise ValueError(f"shell index must be in [-1, {self.q_max}], got {q}")
        return q + 1

    def project(self, coeffs: np.ndarray, q: int) -> np.ndarray:
        """Shell q of a spectral field (leading axes batched)."""
        return coeffs * self.multipliers[self._slot(q)]

    def low_pass(self, coeffs: np.ndarray, q: int) -> np.ndarray:
        """Partial sum of shells -1..q (telescopes exactly)."""
        return coeffs * self.cumulative[self._slot(q)]

    def band(self, coeffs: np.ndarray, lo: int, hi: int) -> np.ndarray:
        """Sum of shells lo..hi inclusive."""
        lo_slot, hi_slot = self._slot(lo), self._slot(hi)
        if lo_slot > hi_slot:
            raise ValueError(f"empty band [{lo}, {hi}]")
        mult = self.cumulative[hi_slot]
        if lo_slot > 0:
            mult = mult - self.cumulative[lo_slot - 1]
        return coeffs * mult

    def partition_values(self) -> np.ndarray:
        """Sum of all multipliers; exactly 1 on the dealiased band."""
        return self.cumulative[-1]

    def shell_norm(self, coeffs: np.ndarray, q: int, p: float) -> float:
        return lp_norm(self.grid, self.project(coeffs, q), p)

    def shell_norms(self, coeffs: np.ndarray, p: float) -> np.ndarray:
        """All shell norms at once; one batched inverse transform.

        Leading axes of coeffs are treated as components (Frobenius magnitude).
        Entry i of the result is the norm of shell i-1.
        """
        n = self.grid.n
        flat = coeffs.reshape(-1, n, n, n)
        phys = to_physical(self.grid, self.multipliers[:, None] * flat[None])
        out = np.empty(self.q_max + 2)
        for slot in range(self.q_max + 2):
            out[slot] = quadrature_norm(self.grid, phys[slot], p)
        return out

    def besov_norm(self, coeffs: np.ndarray, s: float, p: float) -> float:
        """sup_q lambda_q^s * ||shell_q||_p over the whole ladder."""
        norms = self.shell_norms(coeffs, p)
        return float(np.max(self.lambdas**s * norms))

    def sobolev_norm(self, coeffs: np.ndarray, s: float) -> float:
        """Dyadic H^s norm: sqrt(sum_q lambda_q^(2s) ||shell_q||_2^2)."""
        norms = self.shell_norms(coeffs, 2.0)
        return float(np.sqrt(np.sum(self.lambdas ** (2.0 * s) * norms**2)))

    def bernstein_ratio(self, coeffs: np.ndarray, q: int, s: float, r: float) -> float:
        """||f_q||_r / (lambda_q^(3(1/s - 1/r)) ||f_q||_s) for 1 <= s <= r.

        Raises ZeroShellError when shell q is empty (the ratio is undefined,
        which is distinct from a numeric 0).
        """
        if not (1.0 <= s <= r):
            raise ValueError(f"need 1 <= s <= r, got s={s}, r={r}")
        shell = self.project(coeffs, q)
        denom_norm = lp_norm(self.grid, shell, s)
        if denom_norm == 0.0:
            raise ZeroShellError(f"shell {q} is empty; bernstein ratio undefined")
        lam = 2.0**q
        inv_r = 0.0 if np.isinf(r) else 1.0 / r
        return lp_norm(self.grid, shell, r) / (lam ** (3.0 * (1.0 / s - inv_r)) * denom_norm)


# ---------------------------------------------------------------------------
# Seeded random fields
# ---------------------------------------------------------------------------


def random_band_limited(
    grid: Grid,
    rng: np.random.Generator,
    band: float,
    shape: tuple = (),
    respect_mask: bool = True,
) -> np.ndarray:
    """White-noise spectral field supported on Euclidean |k| <= band.

    Coefficients come from transforming real white noise, so Hermitian symmetry
    is automatic.  With respect_mask=False the 2/3-rule box is deliberately
    ignored (only the Nyquist column is dropped) — the resulting field violates
    the dealias invariant and is useful for demonstrating aliasing failures.
    """
    values = rng.standard_normal((*shape, grid.n, grid.n, grid.n))
    coeffs = _fftn(values)
    mask = grid.k_abs <= band
    if respect_mask:
        mask = mask & grid.dealias_mask
    else:
        half = grid.n // 2
        mask = mask & (np.abs(grid.kx) < half) & (np.abs(grid.ky) < half) & (np.abs(grid.kz) < half)
    coeffs *= mask
    # normalize to unit L2 per leading component for reproducible magnitudes
    flat = coeffs.reshape(-1, grid.n, grid.n, grid.n)
    for i in range(flat.shape[0]):
        scale = lp_norm(grid, flat[i], 2.0)
        if scale > 0.0:
            flat[i] /= scale
    return coeffs


def random_solenoidal(
    grid: Grid,
    rng: np.random.Generator,
    band: float,
    respect_mask: bool = True,
) -> np.ndarray:
    """Divergence-free random velocity coefficients, unit L2 magnitude."""
    comps = random_band_limited(grid, rng, band, shape=(3,), respect_mask=respect_mask)
    comps = leray_project(grid, comps)
    scale = lp_norm(grid, comps, 2.0)
    if scale > 0.0:
        comps /= scale
    return comps
