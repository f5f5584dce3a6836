"""Periodic-box fields, Fourier operators and Lebesgue / anisotropic norms.

Fields live on the torus ``[0, L)^3`` sampled with ``n`` points per axis.
Coefficients are stored as the full complex spectrum in FFT index order,
normalised so that a constant field ``1`` has ``coeffs[0, 0, 0] == 1``
(``scipy.fft`` with ``norm="forward"``).

Physical-space work (products, ``L^4`` / ``L^inf`` norms) is done on a grid
sized from the *actual* bandwidth of the field times a padding factor.  For a
field with content up to the Nyquist mode this is the classic 2x zero-padded
grid; heat-damped or narrow-band fields get much smaller grids.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft

TWO_PI = 2.0 * np.pi

# relative magnitude below which a Fourier mode counts as empty when sizing grids
BANDWIDTH_TOL = 1e-15


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Cubic periodic grid of ``n**3`` points on a box of side ``box_len``."""

    n: int
    box_len: float = TWO_PI

    def __post_init__(self):
        if self.n < 8 or self.n & (self.n - 1):
            raise GridError(f"n must be a power of two >= 8, got {self.n}")
        if not self.box_len > 0:
            raise GridError(f"box_len must be positive, got {self.box_len}")

    @property
    def shape(self):
        return (self.n, self.n, self.n)

    @property
    def k0(self) -> float:
        """Lattice spacing in wavenumber, 2*pi/L."""
        return TWO_PI / self.box_len

    @property
    def nyquist(self) -> float:
        return 0.5 * self.n * self.k0

    @property
    def dx(self) -> float:
        return self.box_len / self.n

    @property
    def volume(self) -> float:
        return self.box_len**3

    @cached_property
    def index1d(self) -> np.ndarray:
        return np.rint(sfft.fftfreq(self.n) * self.n).astype(int)

    @cached_property
    def kvec(self):
        return wavenumbers(self.shape, self.box_len)

    @cached_property
    def kvec_odd(self):
        return wavenumbers(self.shape, self.box_len, drop_nyquist=True)

    @cached_property
    def k2(self) -> np.ndarray:
        k1, k2, k3 = self.kvec
        return k1**2 + k2**2 + k3**2

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask: keep integer indices with ``|m| < n/3`` on every axis."""
        keep = np.abs(self.index1d) < self.n / 3.0
        return keep[:, None, None] & keep[None, :, None] & keep[None, None, :]

    def coords(self):
        x = np.arange(self.n) * self.dx
        return np.meshgrid(x, x, x, indexing="ij")


def wavenumbers(shape, box_len, drop_nyquist=False):
    """Broadcastable physical wavenumber arrays for a (possibly anisotropic) spectrum.

    With ``drop_nyquist`` the unpaired Nyquist entry of even axes is set to 0,
    which keeps symbols that are odd in a single component Hermitian.
    """
    k0 = TWO_PI / box_len
    out = []
    for axis, m in enumerate(shape):
        k = sfft.fftfreq(m) * m * k0
        if drop_nyquist and m % 2 == 0:
            k[m // 2] = 0.0
        sh = [1, 1, 1]
        sh[axis] = m
        out.append(k.reshape(sh))
    return tuple(out)


# ---------------------------------------------------------------------------
# field types


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a real scalar field."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != self.grid.shape:
            raise GridError(f"coefficient shape {self.coeffs.shape} != grid {self.grid.shape}")

    def __add__(self, other):
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, c):
        return SpectralField(self.grid, self.coeffs * c)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs)

    @property
    def mean(self) -> float:
        return float(self.coeffs[0, 0, 0].real)

    def values(self) -> np.ndarray:
        return inverse(self)


@dataclass(frozen=True, eq=False)
class SpectralVectorField:
    """Three scalar components stacked as a ``(3, n, n, n)`` coefficient array."""

    grid: Grid
    coeffs: np.ndarray
    divergence_free: bool = field(default=False)

    def __post_init__(self):
        if self.coeffs.shape != (3,) + self.grid.shape:
            raise GridError(f"vector coefficient shape {self.coeffs.shape} invalid")
        if self.divergence_free:
            res = divergence_residual(self)
            if res > 1e-10:
                raise ValueError(f"field flagged divergence-free but residual is {res:.3e}")

    @classmethod
    def from_components(cls, comps, divergence_free=False):
        grid = comps[0].grid
        return cls(grid, np.stack([c.coeffs for c in comps]), divergence_free)

    @property
    def components(self):
        return tuple(SpectralField(self.grid, c) for c in self.coeffs)

    def __getitem__(self, i):
        return SpectralField(self.grid, self.coeffs[i])

    def __add__(self, other):
        return SpectralVectorField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        return SpectralVectorField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, c):
        return SpectralVectorField(self.grid, self.coeffs * c, self.divergence_free)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralVectorField(self.grid, -self.coeffs, self.divergence_free)

    def values(self) -> np.ndarray:
        return np.stack([inverse(c) for c in self.components])


def _same_type(a, coeffs):
    if isinstance(a, SpectralVectorField):
        return SpectralVectorField(a.grid, coeffs)
    return SpectralField(a.grid, coeffs)


def zeros(grid, vector=False):
    shape = ((3,) if vector else ()) + grid.shape
    c = np.zeros(shape, dtype=complex)
    return SpectralVectorField(grid, c) if vector else SpectralField(grid, c)


# ---------------------------------------------------------------------------
# transforms


def forward(values, grid: Grid) -> SpectralField | SpectralVectorField:
    """Transform real samples (``(n,n,n)`` or ``(3,n,n,n)``) to coefficients."""
    values = np.asarray(values, dtype=float)
    if values.shape == grid.shape:
        return SpectralField(grid, sfft.fftn(values, norm="forward"))
    if values.shape == (3,) + grid.shape:
        c = sfft.fftn(values, axes=(1, 2, 3), norm="forward")
        return SpectralVectorField(grid, c)
    raise GridError(f"array shape {values.shape} does not match grid {grid.shape}")


def inverse(a: SpectralField) -> np.ndarray:
    """Real samples of a scalar field on its native grid."""
    return sfft.ifftn(a.coeffs, norm="forward").real


def hermitian_defect(coeffs: np.ndarray) -> float:
    """max |c(-k) - conj c(k)| relative to max |c| over the last three axes."""
    flipped = np.roll(np.flip(coeffs, axis=(-3, -2, -1)), 1, axis=(-3, -2, -1))
    scale = np.max(np.abs(coeffs))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(flipped - np.conj(coeffs))) / scale)


def bandwidth(coeffs: np.ndarray, tol=BANDWIDTH_TOL):
    """Largest integer index ``|m|`` carrying non-negligible content, per spatial axis."""
    mag = np.abs(coeffs)
    while mag.ndim > 3:
        mag = mag.max(axis=0)
    top = mag.max()
    if top == 0:
        return (0, 0, 0)
    live = mag > tol * top
    out = []
    for axis in range(3):
        other = tuple(a for a in range(3) if a != axis)
        hit = np.any(live, axis=other)
        m = live.shape[axis]
        idx = np.abs(np.rint(sfft.fftfreq(m) * m).astype(int))
        out.append(int(idx[hit].max()) if hit.any() else 0)
    return tuple(out)


def _resize_axis(c: np.ndarray, axis: int, m: int) -> np.ndarray:
    """Zero-pad or truncate a spectrum along one axis (FFT index order).

    Padding splits an unpaired Nyquist coefficient evenly between ``+-n/2``
    so the padded trigonometric polynomial stays real.
    """
    n = c.shape[axis]
    if m == n:
        return c
    shape = list(c.shape)
    shape[axis] = m
    out = np.zeros(shape, dtype=c.dtype)

    def sl(a, b):
        s = [slice(None)] * c.ndim
        s[axis] = slice(a, b)
        return tuple(s)

    if m > n:
        npos = (n + 1) // 2  # indices 0 .. npos-1 are k >= 0 (excluding even Nyquist)
        nneg = n // 2 - (1 if n % 2 == 0 else 0)  # strictly negative k excluding Nyquist
        out[sl(0, npos)] = c[sl(0, npos)]
        if nneg:
            out[sl(m - nneg, m)] = c[sl(n - nneg, n)]
        if n % 2 == 0:
            half = c[sl(n // 2, n // 2 + 1)] * 0.5
            out[sl(n // 2, n // 2 + 1)] += half
            out[sl(m - n // 2, m - n // 2 + 1)] += half
    else:
        npos = (m + 1) // 2
        nneg = m // 2
        out[sl(0, npos)] = c[sl(0, npos)]
        if nneg:
            out[sl(m - nneg, m)] = c[sl(n - nneg, n)]
    return out


def resize_spectrum(coeffs: np.ndarray, shape) -> np.ndarray:
    out = coeffs
    nd = coeffs.ndim
    for i, m in enumerate(shape):
        out = _resize_axis(out, nd - 3 + i, m)
    return out


def eval_shape(coeffs: np.ndarray, pad=2.0, min_size=8, tol=BANDWIDTH_TOL):
    """Per-axis physical grid size resolving ``pad`` x the bandwidth of ``coeffs``."""
    bw = bandwidth(coeffs, tol)
    # powers of two keep the native sample points on full-band fields
    return tuple(
        int(2 ** np.ceil(np.log2(max(min_size, 2 * pad * b, 2 * b + 1)))) for b in bw
    )


def to_physical(coeffs: np.ndarray, shape) -> np.ndarray:
    """Real samples of the trigonometric polynomial ``coeffs`` on a grid of ``shape``."""
    c = resize_spectrum(coeffs, shape)
    half = c[..., : shape[2] // 2 + 1]
    return sfft.irfftn(half, s=shape, axes=(-3, -2, -1), norm="forward")


def from_physical(values: np.ndarray) -> np.ndarray:
    return sfft.fftn(values, axes=(-3, -2, -1), norm="forward")


# ---------------------------------------------------------------------------
# linear operators


def derivative(a: SpectralField, axis: int, order: int = 1) -> SpectralField:
    """``d^order / dx_axis^order``; odd orders drop the unpaired Nyquist mode."""
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    if order == 1:
        sym = 1j * a.grid.kvec_odd[axis]
    else:
        sym = -(a.grid.kvec[axis] ** 2)
    return SpectralField(a.grid, a.coeffs * sym)


def gradient(a: SpectralField) -> SpectralVectorField:
    return SpectralVectorField.from_components([derivative(a, i) for i in range(3)])


def heat_flow(a, t: float):
    """``exp(t Laplacian) a`` for scalar or vector fields."""
    if t < 0:
        raise ValueError(f"heat flow needs t >= 0, got {t}")
    if t == 0:
        return _same_type(a, a.coeffs.copy())
    return _same_type(a, a.coeffs * np.exp(-t * a.grid.k2))


def leray_coeffs(c: np.ndarray, kvec) -> np.ndarray:
    """Apply ``delta_ij - k_i k_j / |k|^2`` to a ``(3, ...)`` coefficient stack; k=0 passes."""
    k1, k2, k3 = kvec
    kk = k1**2 + k2**2 + k3**2
    inv = np.zeros_like(kk)
    np.divide(1.0, kk, out=inv, where=kk > 0)
    kdotc = (k1 * c[0] + k2 * c[1] + k3 * c[2]) * inv
    return np.stack([c[0] - k1 * kdotc, c[1] - k2 * kdotc, c[2] - k3 * kdotc])


def leray_project(v: SpectralVectorField) -> SpectralVectorField:
    out = SpectralVectorField(v.grid, leray_coeffs(v.coeffs, v.grid.kvec_odd))
    # a round-off-sized output (projected gradient) is not flagged: its relative residual is noise
    if divergence_residual(out) <= 1e-10:
        return SpectralVectorField(v.grid, out.coeffs, divergence_free=True)
    return out


def divergence(v: SpectralVectorField) -> SpectralField:
    k1, k2, k3 = v.grid.kvec_odd
    return SpectralField(v.grid, 1j * (k1 * v.coeffs[0] + k2 * v.coeffs[1] + k3 * v.coeffs[2]))


def divergence_residual(v: SpectralVectorField) -> float:
    """max |k . u(k)| / max |u(k)| (0 for the zero field)."""
    scale = np.max(np.abs(v.coeffs))
    if scale == 0:
        return 0.0
    k1, k2, k3 = v.grid.kvec_odd
    kdot = k1 * v.coeffs[0] + k2 * v.coeffs[1] + k3 * v.coeffs[2]
    return float(np.max(np.abs(kdot)) / scale)


# ---------------------------------------------------------------------------
# nonlinear term


def _advect_on_grid(c: np.ndarray, kvec_odd, shape) -> np.ndarray:
    """Spectrum of ``u . grad u`` sampled on ``shape`` (returns coefficients on that shape)."""
    u = to_physical(c, shape)
    out = np.zeros_like(u)
    for j in range(3):
        du = to_physical(1j * kvec_odd[j] * c, shape)
        out += u[j] * du
    return from_physical(out)


def advect(u: SpectralVectorField, dealias=True) -> SpectralVectorField:
    """``u . grad u`` evaluated pseudo-spectrally on the native grid.

    With ``dealias`` the input and output are masked by the 2/3 rule, so the
    retained modes are exact products of the retained input modes.
    """
    grid = u.grid
    c = u.coeffs * grid.dealias_mask if dealias else u.coeffs
    out = _advect_on_grid(c, grid.kvec_odd, grid.shape)
    if dealias:
        out *= grid.dealias_mask
    return SpectralVectorField(grid, out)


def advect_exact(u: SpectralVectorField, tol=BANDWIDTH_TOL):
    """Full spectrum of ``u . grad u`` without truncation.

    The product is formed on a grid resolving twice the input bandwidth, so
    every product mode (including those beyond the native Nyquist) is exact.
    Returns ``(coeffs, shape)`` on that product grid.
    """
    return advect_exact_coeffs(u.coeffs, u.grid.box_len, tol)


def advect_exact_coeffs(coeffs: np.ndarray, box_len: float, tol=BANDWIDTH_TOL):
    """:func:`advect_exact` for a bare ``(3, ...)`` coefficient stack."""
    bw = bandwidth(coeffs, tol)
    shape = tuple(max(8, sfft.next_fast_len(4 * b + 1)) for b in bw)
    c = resize_spectrum(coeffs, shape)
    kodd = wavenumbers(shape, box_len, drop_nyquist=True)
    return _advect_on_grid(c, kodd, shape), shape


# ---------------------------------------------------------------------------
# norms


def l2_norm(a) -> float:
    """Exact ``L^2`` norm through Parseval; vector fields use the Euclidean pointwise norm."""
    return float(np.sqrt(a.grid.volume * np.sum(np.abs(a.coeffs) ** 2)))


def _norm_from_values(vals: np.ndarray, p, cell_volume) -> float:
    if p == np.inf:
        return float(np.max(np.abs(vals)))
    return float((cell_volume * np.sum(np.abs(vals) ** p)) ** (1.0 / p))


def lebesgue_norm(a, p=2, pad=2.0) -> float:
    """``L^p`` norm, ``p`` in {2, 4, inf}.

    ``p=2`` is exact (Parseval).  ``p=4`` and ``p=inf`` use samples on a grid
    resolving ``pad`` times the field's bandwidth.  For vector fields the
    pointwise Euclidean modulus is used.
    """
    return lebesgue_norm_coeffs(a.coeffs, a.grid.box_len, p, pad)


def lebesgue_norm_coeffs(coeffs: np.ndarray, box_len: float, p=2, pad=2.0) -> float:
    """:func:`lebesgue_norm` for a bare coefficient array of any (cubic-box) shape."""
    if p == 2:
        return float(np.sqrt(box_len**3 * np.sum(np.abs(coeffs) ** 2)))
    if p not in (4, np.inf):
        raise ValueError(f"unsupported exponent p={p}")
    shape = eval_shape(coeffs, pad)
    vals = to_physical(coeffs, shape)
    if vals.ndim == 4:
        vals = np.sqrt(np.sum(vals**2, axis=0))
    cell = box_len**3 / np.prod(shape)
    return _norm_from_values(vals, p, cell)


class CompactSpectrum:
    """A spectrum cropped to the odd index box holding its bandwidth.

    Repeated heat-flow evaluations then touch only the live modes.
    """

    def __init__(self, coeffs: np.ndarray, box_len: float, tol=BANDWIDTH_TOL):
        bw = bandwidth(coeffs, tol)
        self.shape = tuple(2 * b + 1 for b in bw)
        self.coeffs = resize_spectrum(coeffs, self.shape)
        self.box_len = box_len
        k = wavenumbers(self.shape, box_len)
        self.k2 = k[0] ** 2 + k[1] ** 2 + k[2] ** 2

    @classmethod
    def of(cls, a, tol=BANDWIDTH_TOL):
        return cls(a.coeffs, a.grid.box_len, tol)

    def heat(self, t: float) -> np.ndarray:
        if t < 0:
            raise ValueError(f"heat flow needs t >= 0, got {t}")
        return self.coeffs * np.exp(-t * self.k2) if t > 0 else self.coeffs

    def lebesgue(self, t: float, p=2, pad=2.0) -> float:
        return lebesgue_norm_coeffs(self.heat(t), self.box_len, p, pad)


def ell1_coeffs(coeffs: np.ndarray) -> float:
    """Sum of coefficient moduli: an upper bound for the sup norm."""
    if coeffs.ndim == 4:
        return float(np.sum(np.sqrt(np.sum(np.abs(coeffs) ** 2, axis=0))))
    return float(np.sum(np.abs(coeffs)))


@dataclass(frozen=True)
class MixedNormSpec:
    """Anisotropic norm ``L^p_v L^q_h``: inner over horizontal planes, outer over x3."""

    p_vertical: float
    p_horizontal: float

    SUPPORTED = ((np.inf, 2), (2, 4), (np.inf, 4))

    def __post_init__(self):
        if (self.p_vertical, self.p_horizontal) not in self.SUPPORTED:
            raise ValueError(
                f"unsupported mixed norm L^{self.p_vertical}_v L^{self.p_horizontal}_h"
            )


def mixed_norm(a: SpectralField, spec: MixedNormSpec, pad=2.0) -> float:
    shape = eval_shape(a.coeffs, pad)
    vals = to_physical(a.coeffs, shape)
    L = a.grid.box_len
    dA = L * L / (shape[0] * shape[1])
    dz = L / shape[2]
    q = spec.p_horizontal
    inner = (dA * np.sum(np.abs(vals) ** q, axis=(0, 1))) ** (1.0 / q)
    if spec.p_vertical == np.inf:
        return float(inner.max())
    p = spec.p_vertical
    return float((dz * np.sum(inner**p)) ** (1.0 / p))
