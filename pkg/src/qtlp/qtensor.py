"""Symmetric traceless 3x3 tensor fields (Q-tensors) and their couplings.

A Q-tensor field is stored as its five independent components
(Q11, Q12, Q13, Q22, Q23); Q33 = -Q11 - Q22 is implied, so symmetry and
tracelessness are structural rather than numerical properties.

Conventions (used consistently across the package):
  * (grad u)_ij = d_i u_j, vorticity tensor W_ij = (d_i u_j - d_j u_i)/2,
    strain rate D_ij = (d_i u_j + d_j u_i)/2;
  * (grad Q x grad Q)_ij = d_i Q_ab d_j Q_ab (sum over a, b);
  * the stress divergence contracts the second index: (div S)_i = d_j S_ij.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import (
    Grid,
    VelocityField,
    derivative,
    laplacian,
    to_physical,
    to_spectral,
)

__all__ = [
    "MaterialParams",
    "QTensorField",
    "matrix_from_comps",
    "comps_from_matrix",
    "traceless_project",
    "matrix_multiply",
    "frobenius_sq",
    "frobenius_dot",
    "strain_rate",
    "vorticity_tensor",
    "potential_density",
    "potential_derivative",
    "molecular_field",
    "elastic_stress",
    "corotation",
    "energy_density",
    "total_energy",
    "uniaxial_comps",
    "uniaxial_equilibrium_order",
]


@dataclass(frozen=True)
class MaterialParams:
    """Viscosities and Landau-de Gennes potential coefficients.

    The potential is F(Q) = a/2 |Q|^2 + b/3 tr(Q^3) + c/4 |Q|^4 with
    dF(Q) = a Q + b Q^2 + c |Q|^2 Q.
    """

    nu: float = 1.0
    mu: float = 1.0
    a: float = -0.2
    b: float = -1.0
    c: float = 1.0

    def __post_init__(self):
        if self.nu <= 0.0:
            raise ValueError(f"viscosity nu must be positive, got {self.nu}")
        if self.mu <= 0.0:
            raise ValueError(f"tensor diffusion mu must be positive, got {self.mu}")


# ---------------------------------------------------------------------------
# Pointwise tensor algebra on component stacks
# ---------------------------------------------------------------------------


def matrix_from_comps(comps: np.ndarray) -> np.ndarray:
    """(5, ...) component stack -> full symmetric traceless (3, 3, ...) matrix."""
    q11, q12, q13, q22, q23 = comps
    return np.stack(
        [
            np.stack([q11, q12, q13]),
            np.stack([q12, q22, q23]),
            np.stack([q13, q23, -q11 - q22]),
        ]
    )


def comps_from_matrix(matrix: np.ndarray) -> np.ndarray:
    """Extract the five independent components of a symmetric traceless matrix."""
    return np.stack(
        [matrix[0, 0], matrix[0, 1], matrix[0, 2], matrix[1, 1], matrix[1, 2]]
    )


def traceless_project(matrix: np.ndarray) -> np.ndarray:
    """Remove the isotropic part: A - tr(A)/3 * I."""
    out = matrix.copy()
    third_trace = (matrix[0, 0] + matrix[1, 1] + matrix[2, 2]) / 3.0
    for i in range(3):
        out[i, i] -= third_trace
    return out


def matrix_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pointwise matrix product of two (3, 3, ...) stacks."""
    return np.einsum("ab...,bc...->ac...", a, b)


def frobenius_sq(comps: np.ndarray) -> np.ndarray:
    """|Q|^2 = Q_ab Q_ab from the 5-component representation."""
    q11, q12, q13, q22, q23 = comps
    return 2.0 * (q11 * q11 + q22 * q22 + q11 * q22 + q12 * q12 + q13 * q13 + q23 * q23)


def frobenius_dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """A : B = A_ab B_ab for two symmetric traceless 5-component stacks."""
    a11, a12, a13, a22, a23 = a
    b11, b12, b13, b22, b23 = b
    return (
        2.0 * (a11 * b11 + a22 * b22 + a12 * b12 + a13 * b13 + a23 * b23)
        + a11 * b22
        + a22 * b11
    )


# ---------------------------------------------------------------------------
# Fields
# ---------------------------------------------------------------------------


@dataclass
class QTensorField:
    """Five Q-tensor components as spectral coefficients, shape (5, N, N, N)."""

    grid: Grid
    comps: np.ndarray

    def physical(self) -> np.ndarray:
        return to_physical(self.grid, self.comps)

    def matrix_physical(self) -> np.ndarray:
        return matrix_from_comps(self.physical())

    @classmethod
    def from_physical(cls, grid: Grid, values: np.ndarray) -> "QTensorField":
        return cls(grid, to_spectral(grid, np.asarray(values)))

    @classmethod
    def zero(cls, grid: Grid) -> "QTensorField":
        return cls(grid, np.zeros((5, grid.n, grid.n, grid.n), dtype=complex))

    def max_norm(self) -> float:
        """Grid maximum of the pointwise Frobenius norm |Q(x)|."""
        return float(np.sqrt(frobenius_sq(self.physical())).max())


def _velocity_gradient_physical(u: VelocityField) -> np.ndarray:
    """gu[i, j] = d_i u_j on the grid."""
    grid = u.grid
    stack = np.stack(
        [derivative(grid, u.comps[j], i) for i in range(3) for j in range(3)]
    )
    return to_physical(grid, stack).reshape(3, 3, grid.n, grid.n, grid.n)


def strain_rate(u: VelocityField) -> np.ndarray:
    """Symmetric part of the velocity gradient, physical (3, 3, N, N, N)."""
    gu = _velocity_gradient_physical(u)
    return 0.5 * (gu + gu.transpose(1, 0, 2, 3, 4))


def vorticity_tensor(u: VelocityField) -> np.ndarray:
    """Antisymmetric part W_ij = (d_i u_j - d_j u_i)/2, physical (3, 3, N, N, N)."""
    gu = _velocity_gradient_physical(u)
    return 0.5 * (gu - gu.transpose(1, 0, 2, 3, 4))


def potential_density(q: QTensorField, params: MaterialParams) -> np.ndarray:
    """Landau-de Gennes density F(Q) on the grid."""
    comps = q.physical()
    m = matrix_from_comps(comps)
    q_sq = frobenius_sq(comps)
    tr_cubed = np.einsum("ab...,bc...,ca...->...", m, m, m)
    return 0.5 * params.a * q_sq + params.b / 3.0 * tr_cubed + 0.25 * params.c * q_sq**2


def potential_derivative(q: QTensorField, params: MaterialParams) -> np.ndarray:
    """dF(Q) = a Q + b Q^2 + c |Q|^2 Q, physical (3, 3, N, N, N); not traceless."""
    comps = q.physical()
    m = matrix_from_comps(comps)
    q_sq = frobenius_sq(comps)
    return params.a * m + params.b * matrix_multiply(m, m) + params.c * q_sq * m


def _traceless_potential_force(q: QTensorField, params: MaterialParams) -> np.ndarray:
    """Spectral 5-component stack of the trace-free part of dF(Q)."""
    df = traceless_project(potential_derivative(q, params))
    return to_spectral(q.grid, comps_from_matrix(df))


def molecular_field(q: QTensorField, params: MaterialParams) -> QTensorField:
    """H = lap(Q) - trace-free dF(Q); the relaxational driving field."""
    return QTensorField(q.grid, laplacian(q.grid, q.comps) - _traceless_potential_force(q, params))


def elastic_stress(q: QTensorField) -> np.ndarray:
    """Stress S = lap(Q) Q - Q lap(Q) - grad Q x grad Q, spectral (3, 3, N, N, N).

    The first two terms form an antisymmetric commutator; the last is the
    symmetric distortion term (grad Q x grad Q)_ij = d_i Q_ab d_j Q_ab.
    """
    grid = q.grid
    qm = q.matrix_physical()
    lap_m = matrix_from_comps(to_physical(grid, laplacian(grid, q.comps)))
    grad_comps = to_physical(
        grid,
        np.stack([derivative(grid, q.comps[c], i) for i in range(3) for c in range(5)]),
    ).reshape(3, 5, grid.n, grid.n, grid.n)

    commutator = matrix_multiply(lap_m, qm) - matrix_multiply(qm, lap_m)
    distortion = np.empty((3, 3, grid.n, grid.n, grid.n))
    for i in range(3):
        for j in range(i, 3):
            distortion[i, j] = frobenius_dot(grad_comps[i], grad_comps[j])
            distortion[j, i] = distortion[i, j]
    return to_spectral(grid, commutator - distortion)


def corotation(u: VelocityField, q: QTensorField) -> QTensorField:
    """Co-rotational coupling W Q - Q W, with W the vorticity tensor of u."""
    w = vorticity_tensor(u)
    qm = q.matrix_physical()
    coupled = matrix_multiply(w, qm) - matrix_multiply(qm, w)
    return QTensorField.from_physical(q.grid, comps_from_matrix(coupled))


def energy_density(u: VelocityField, q: QTensorField, params: MaterialParams) -> np.ndarray:
    """e = |u|^2/2 + |grad Q|^2/2 + F(Q) on the grid."""
    grid = u.grid
    u_phys = u.physical()
    grad_comps = to_physical(
        grid,
        np.stack([derivative(grid, q.comps[c], i) for i in range(3) for c in range(5)]),
    ).reshape(3, 5, grid.n, grid.n, grid.n)
    grad_sq = sum(frobenius_sq(grad_comps[i]) for i in range(3))
    kinetic = 0.5 * np.sum(u_phys * u_phys, axis=0)
    return kinetic + 0.5 * grad_sq + potential_density(q, params)


def total_energy(u: VelocityField, q: QTensorField, params: MaterialParams) -> float:
    return float(np.sum(energy_density(u, q, params)) * u.grid.cell_volume)


# ---------------------------------------------------------------------------
# Uniaxial states
# ---------------------------------------------------------------------------


def uniaxial_comps(director: np.ndarray, order: float) -> np.ndarray:
    """Components of s (n x n - I/3) for a unit director field n of shape (3, ...)."""
    n1, n2, n3 = director
    return np.stack(
        [
            order * (n1 * n1 - 1.0 / 3.0),
            order * n1 * n2,
            order * n1 * n3,
            order * (n2 * n2 - 1.0 / 3.0),
            order * n2 * n3,
        ]
    )


def uniaxial_equilibrium_order(params: MaterialParams) -> float:
    """Positive stationary scalar order parameter of the potential.

    For uniaxial Q = s (n x n - I/3) the trace-free potential force reduces to
    (a s + b s^2/3 + 2 c s^3/3)(n x n - I/3); the returned s is the positive
    root of a + b s/3 + 2 c s^2/3 = 0.
    """
    if params.c <= 0.0:
        raise ValueError("equilibrium order parameter requires c > 0")
    disc = params.b**2 - 24.0 * params.a * params.c
    if disc < 0.0:
        raise ValueError("potential has no uniaxial stationary point")
    return (-params.b + np.sqrt(disc)) / (4.0 * params.c)
