"""Spectral grid and pseudospectral kernels on the doubly periodic square.

Scalar fields live on a uniform N x N grid covering [-pi, pi)^2. Spectral
coefficients use integer wavenumbers, with the transform scaled so the k = 0
coefficient equals the field mean; ``to_physical(to_spectral(f))`` returns
``f`` to rounding. Quadratic terms are formed pointwise in physical space
from dealiased factors and re-projected onto the retained band (2/3 rule),
which keeps the retained modes alias-free.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi

__all__ = [
    "Grid",
    "make_grid",
    "to_spectral",
    "to_physical",
    "dealias",
    "streamfunction",
    "velocity_spectral",
    "velocity",
    "advection_rhs",
    "advection_terms",
    "energy_spectrum",
    "kinetic_energy",
    "l2_norm",
    "linf_norm",
    "norms",
]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic N x N grid with precomputed wavenumber arrays.

    Attributes
    ----------
    n : int
        Grid points (and Fourier modes) per dimension; even, >= 8.
    dx : float
        Node spacing 2*pi/n.
    x : ndarray, shape (n,)
        Node coordinates -pi + i*dx; axis 0 of a field varies along x.
    xx, yy : ndarray, shape (n, n)
        Node coordinate meshes.
    kx, ky : ndarray
        Integer wavenumbers along axis 0 / axis 1, shaped for broadcasting.
    k2 : ndarray, shape (n, n)
        Squared wavenumber magnitude; zero only at the mean mode.
    inv_k2 : ndarray, shape (n, n)
        1/|k|^2 with the mean mode pinned to zero.
    dealias_mask : ndarray of bool, shape (n, n)
        True on modes with max(|kx|, |ky|) <= n/3. The Nyquist row sits
        above the cutoff for every admissible n, so it is always dropped.
    """

    n: int

    def __post_init__(self) -> None:
        if self.n % 2 != 0:
            raise ValueError(f"grid size must be even, got n={self.n}")
        if self.n < 8:
            raise ValueError(f"grid size must be >= 8, got n={self.n}")
        dx = TWO_PI / self.n
        x = -np.pi + dx * np.arange(self.n)
        xx, yy = np.meshgrid(x, x, indexing="ij")
        k1 = np.fft.fftfreq(self.n, d=1.0 / self.n)
        kx = k1[:, np.newaxis]
        ky = k1[np.newaxis, :]
        k2 = kx**2 + ky**2
        inv_k2 = np.zeros_like(k2)
        np.divide(1.0, k2, out=inv_k2, where=k2 > 0)
        cutoff = self.n / 3.0
        mask = (np.abs(kx) <= cutoff) & (np.abs(ky) <= cutoff)
        for name, value in [
            ("dx", dx),
            ("x", x),
            ("xx", xx),
            ("yy", yy),
            ("kx", kx),
            ("ky", ky),
            ("k2", k2),
            ("inv_k2", inv_k2),
            ("dealias_mask", mask),
        ]:
            object.__setattr__(self, name, value)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)


def make_grid(n: int) -> Grid:
    """Build the periodic grid for ``n`` modes per dimension."""
    return Grid(int(n))


def _check_physical(grid: Grid, values) -> np.ndarray:
    values = np.asarray(values)
    if values.shape != grid.shape:
        raise ValueError(f"field shape {values.shape} does not match grid {grid.shape}")
    if np.iscomplexobj(values):
        raise TypeError("physical fields are real-valued")
    return values


def _check_spectral(grid: Grid, coeffs) -> np.ndarray:
    coeffs = np.asarray(coeffs)
    if coeffs.shape != grid.shape:
        raise ValueError(f"coefficient shape {coeffs.shape} does not match grid {grid.shape}")
    return coeffs


def to_spectral(grid: Grid, values) -> np.ndarray:
    """Forward transform; the k = 0 coefficient equals the field mean."""
    return np.fft.fft2(_check_physical(grid, values)) / grid.n**2


def to_physical(grid: Grid, coeffs) -> np.ndarray:
    """Inverse transform to real nodal values (rounding-level imaginary part dropped)."""
    return np.fft.ifft2(_check_spectral(grid, coeffs)).real * grid.n**2


def dealias(grid: Grid, coeffs) -> np.ndarray:
    """Zero every mode above the 2/3 cutoff; idempotent projection."""
    return _check_spectral(grid, coeffs) * grid.dealias_mask


def streamfunction(grid: Grid, omega_hat, *, mean_tol: float = 1e-12) -> np.ndarray:
    """Invert omega = lap(psi) in spectral space; the mean mode stays zero."""
    w = _check_spectral(grid, omega_hat)
    if abs(w[0, 0]) > mean_tol:
        raise ValueError(f"vorticity must be mean-free, |mean mode| = {abs(w[0, 0]):.3e}")
    psi = -w * grid.inv_k2
    psi[0, 0] = 0.0
    return psi


def velocity_spectral(grid: Grid, omega_hat) -> tuple[np.ndarray, np.ndarray]:
    """Spectral velocity (u1, u2) = (-d_y psi, d_x psi); divergence-free by construction."""
    psi = streamfunction(grid, omega_hat)
    return -1j * grid.ky * psi, 1j * grid.kx * psi


def velocity(grid: Grid, omega_hat) -> tuple[np.ndarray, np.ndarray]:
    """Physical velocity components recovered from mean-free vorticity."""
    u1_hat, u2_hat = velocity_spectral(grid, omega_hat)
    return to_physical(grid, u1_hat), to_physical(grid, u2_hat)


def advection_terms(grid: Grid, omega_hat) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Advection tendency together with the physical velocity it was built from.

    Returns ``(rhs_hat, u1, u2)`` where ``rhs_hat`` is the dealiased, mean-free
    spectral form of -(u . grad omega). The velocity pair is handed back so
    callers that also need it (observer motion, feedback terms) can reuse the
    transforms.
    """
    u1_hat, u2_hat = velocity_spectral(grid, omega_hat)
    u1 = to_physical(grid, u1_hat)
    u2 = to_physical(grid, u2_hat)
    omega_x = to_physical(grid, 1j * grid.kx * omega_hat)
    omega_y = to_physical(grid, 1j * grid.ky * omega_hat)
    rhs_hat = -dealias(grid, to_spectral(grid, u1 * omega_x + u2 * omega_y))
    rhs_hat[0, 0] = 0.0
    return rhs_hat, u1, u2


def advection_rhs(grid: Grid, omega_hat) -> np.ndarray:
    """Dealiased tendency -(u . grad omega) of mean-free, dealiased vorticity."""
    return advection_terms(grid, omega_hat)[0]


def energy_spectrum(grid: Grid, omega_hat) -> np.ndarray:
    """Shell-binned kinetic energy; shell m collects m - 1/2 <= |k| < m + 1/2.

    The shells sum to the total kinetic energy ``(1/2) ||u||_L2^2``.
    """
    u1_hat, u2_hat = velocity_spectral(grid, omega_hat)
    mode_energy = 0.5 * TWO_PI**2 * (np.abs(u1_hat) ** 2 + np.abs(u2_hat) ** 2)
    shells = np.floor(np.sqrt(grid.k2) + 0.5).astype(int)
    return np.bincount(shells.ravel(), weights=mode_energy.ravel())


def kinetic_energy(grid: Grid, omega_hat) -> float:
    """Total kinetic energy (1/2) integral of |u|^2 for mean-free vorticity."""
    w = _check_spectral(grid, omega_hat)
    return float(0.5 * TWO_PI**2 * np.sum(np.abs(w) ** 2 * grid.inv_k2))


def l2_norm(grid: Grid, field) -> float:
    """L2 norm over the square: Parseval for spectral input, nodal sum otherwise.

    Both routes agree to rounding; the nodal form is ``dx * sqrt(sum f^2)``.
    """
    f = np.asarray(field)
    if np.iscomplexobj(f):
        _check_spectral(grid, f)
        return float(TWO_PI * np.sqrt(np.sum(np.abs(f) ** 2)))
    _check_physical(grid, f)
    return float(grid.dx * np.sqrt(np.sum(f**2)))


def linf_norm(grid: Grid, field) -> float:
    """Max absolute nodal value; spectral input is transformed first."""
    f = np.asarray(field)
    if np.iscomplexobj(f):
        f = to_physical(grid, f)
    else:
        _check_physical(grid, f)
    return float(np.max(np.abs(f)))


def norms(grid: Grid, field) -> tuple[float, float]:
    """(L2, Linf) of a field given in either representation."""
    return l2_norm(grid, field), linf_norm(grid, field)
