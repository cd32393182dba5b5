"""Discrete torus fields and the operators shared by every other module.

A field is a plain float64 array indexed by x in {0, ..., n-1}; all index
arithmetic is periodic. Operators are pure functions and safe to call
concurrently. The DFT convention is fixed package-wide as
``fhat(k) = sum_x f(x) * exp(-2i*pi*k*x/n)`` (numpy's convention).
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidParameterError

MIN_SITES = 3


def check_field(f, min_sites: int = MIN_SITES) -> np.ndarray:
    """Coerce to a float64 1-d array and enforce the torus-size floor."""
    out = np.asarray(f, dtype=np.float64)
    if out.ndim != 1:
        raise InvalidParameterError(f"field must be one-dimensional, got shape {out.shape}")
    if out.shape[0] < min_sites:
        raise InvalidParameterError(f"torus needs at least {min_sites} sites, got {out.shape[0]}")
    return out


def index_fwd(n: int) -> np.ndarray:
    """Index array ip with ip[x] = x+1 mod n."""
    return np.arange(1, n + 1, dtype=np.int64) % n


def index_bwd(n: int) -> np.ndarray:
    """Index array im with im[x] = x-1 mod n."""
    return np.arange(-1, n - 1, dtype=np.int64) % n


def grad_forward(f) -> np.ndarray:
    """Forward difference n*(f(x+1) - f(x))."""
    f = check_field(f)
    n = f.shape[0]
    return n * (np.roll(f, -1) - f)


def grad_centered(f) -> np.ndarray:
    """Centered difference (n/2)*(f(x+1) - f(x-1))."""
    f = check_field(f)
    n = f.shape[0]
    return (n / 2.0) * (np.roll(f, -1) - np.roll(f, 1))


def laplacian(f) -> np.ndarray:
    """Discrete Laplacian n^2*(f(x+1) + f(x-1) - 2 f(x))."""
    f = check_field(f)
    n = f.shape[0]
    return n * n * (np.roll(f, -1) + np.roll(f, 1) - 2.0 * f)


def dft(f) -> np.ndarray:
    """Forward DFT, fhat(k) = sum_x f(x) exp(-2i pi k x / n)."""
    f = check_field(f)
    return np.fft.fft(f)


def idft(spectrum) -> np.ndarray:
    """Inverse of :func:`dft`; returns the real part after a symmetry check."""
    spectrum = np.asarray(spectrum, dtype=np.complex128)
    out = np.fft.ifft(spectrum)
    return out.real


def laplacian_symbol(k, n: int) -> np.ndarray:
    """Eigenvalue magnitude of -laplacian on mode k: 4 n^2 sin^2(pi k / n)."""
    k = np.asarray(k, dtype=np.float64)
    return 4.0 * n * n * np.sin(np.pi * k / n) ** 2


def fourier_basis(z: int, u) -> np.ndarray:
    """Real trigonometric basis function indexed by an integer z.

    z = 0 gives the constant 1, z > 0 gives sqrt(2) cos(2 pi z u) and z < 0
    gives sqrt(2) sin(2 pi z u). The family is orthonormal in L2 of the
    unit torus.
    """
    u = np.asarray(u, dtype=np.float64)
    if z == 0:
        return np.ones_like(u)
    if z > 0:
        return np.sqrt(2.0) * np.cos(2.0 * np.pi * z * u)
    return np.sqrt(2.0) * np.sin(2.0 * np.pi * z * u)


def basis_eigenvalue(z: int) -> float:
    """Eigenvalue of (1 - Laplace) on the basis function of index z."""
    return 1.0 + 4.0 * np.pi**2 * z * z


def grid(n: int) -> np.ndarray:
    """Macroscopic grid points x/n for x in {0, ..., n-1}."""
    return np.arange(n, dtype=np.float64) / n


def basis_on_grid(z: int, n: int) -> np.ndarray:
    return fourier_basis(z, grid(n))


def riemann_inner(f, g) -> float:
    """Riemann-sum inner product (1/n) sum_x f(x) g(x)."""
    f = check_field(f)
    g = check_field(g)
    if f.shape != g.shape:
        raise InvalidParameterError("fields must share a torus size")
    return float(np.dot(f, g) / f.shape[0])
