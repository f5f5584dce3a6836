"""Initial data: the anisotropic oscillating family, smooth profiles and random test fields."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .spectral import (
    Grid,
    GridError,
    SpectralField,
    SpectralVectorField,
    derivative,
    divergence_residual,
    forward,
    leray_coeffs,
)

PROFILE_KINDS = ("bump", "gaussian", "raised_cosine", "flat")


@dataclass(frozen=True)
class OscillatoryParams:
    """Parameters of the oscillating family; ``eps`` must be ``1/m`` with ``m`` a lattice index multiple."""

    eps: float
    alpha: float
    kappa: float = 0.25
    eta: float = 0.5
    c0_const: float = 1.0
    projected: bool = False

    def __post_init__(self):
        if not 0 < self.eps < 1:
            raise ValueError(f"eps must lie in (0, 1), got {self.eps}")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0 < self.eta < 1:
            raise ValueError(f"eta must lie in (0, 1), got {self.eta}")
        if not 0 < self.kappa < self.eta:
            raise ValueError(f"kappa must lie in (0, eta), got {self.kappa}")
        if not self.c0_const > 0:
            raise ValueError("c0_const must be positive")

    @property
    def amplitude(self) -> float:
        """``(kappa |log eps| / C0)^{1/2}``; grows like ``|log eps|^{1/2}``."""
        return math.sqrt(self.kappa * abs(math.log(self.eps)) / self.c0_const)

    def check_grid(self, grid: Grid):
        freq = 1.0 / self.eps
        idx = freq / grid.k0
        if abs(idx - round(idx)) > 1e-9 or round(idx) < 1:
            raise GridError(f"1/eps = {freq:g} is not a lattice wavenumber of the box (k0 = {grid.k0:g})")
        if self.eps**-self.alpha > grid.nyquist / 4:
            raise GridError(f"eps^-alpha = {self.eps**-self.alpha:.3g} exceeds Nyquist/4 = {grid.nyquist / 4:g}")


@dataclass(frozen=True)
class BumpProfile:
    """Tensorized smooth profile ``f(x) = prod_i g_i((x_i - c_i) / r_i)`` centred in the box.

    ``kinds`` per axis: ``bump`` is ``exp(-1/(1-s^2))`` on ``|s| < 1``; ``gaussian``
    is the periodized ``exp(-s^2/2)``; ``raised_cosine`` is ``(1 + cos(2 pi x / L))/2``
    (radius ignored); ``flat`` is 1. Radii are fractions of the box length.
    """

    kinds: tuple = ("bump", "bump", "bump")
    radii: tuple = (0.125, 0.125, 0.125)

    def __post_init__(self):
        if len(self.kinds) != 3 or len(self.radii) != 3:
            raise ValueError("need one kind and one radius per axis")
        for k, r in zip(self.kinds, self.radii):
            if k not in PROFILE_KINDS:
                raise ValueError(f"unknown profile kind {k!r}")
            if not r > 0:
                raise ValueError("radii must be positive")
            if k == "bump" and r > 0.5:
                raise ValueError("bump radius must not exceed half the box")

    @classmethod
    def sweep_default(cls):
        # flat along the oscillation, wide gaussian compressed by eps^alpha, lowest mode vertically
        return cls(kinds=("flat", "gaussian", "raised_cosine"), radii=(1.0, 0.6, 1.0))

    def axis_values(self, axis: int, x: np.ndarray, box_len: float, stretch: float = 1.0) -> np.ndarray:
        """Axis factor at coordinates ``x``, argument scaled by ``stretch`` about the centre."""
        kind = self.kinds[axis]
        r = self.radii[axis] * box_len
        c = 0.5 * box_len
        if kind == "flat":
            return np.ones_like(x)
        if kind == "raised_cosine":
            return 0.5 * (1.0 + np.cos(2 * np.pi * stretch * (x - c) / box_len))
        if kind == "bump":
            s = (x - c) * stretch / r
            out = np.zeros_like(x)
            inside = np.abs(s) < 1
            out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
            return out
        # periodic images of the (compressed) gaussian
        width = r / stretch
        images = int(np.ceil(12 * width / box_len)) + 1
        out = np.zeros_like(x)
        for m in range(-images, images + 1):
            out += np.exp(-0.5 * ((x - c + m * box_len) / width) ** 2)
        return out

    def factors(self, grid: Grid, stretch=(1.0, 1.0, 1.0)):
        x = np.arange(grid.n) * grid.dx
        return [self.axis_values(i, x, grid.box_len, stretch[i]) for i in range(3)]

    def values(self, grid: Grid, stretch=(1.0, 1.0, 1.0)) -> np.ndarray:
        f = self.factors(grid, stretch)
        return f[0][:, None, None] * f[1][None, :, None] * f[2][None, None, :]

    def field(self, grid: Grid) -> SpectralField:
        return SpectralField(grid, separable_spectrum(self.factors(grid)))


def _clean_fft(v: np.ndarray) -> np.ndarray:
    """1-D transform with coefficients at round-off level set to zero."""
    c = np.fft.fft(v) / len(v)
    c[np.abs(c) <= 1e-15 * np.max(np.abs(c))] = 0.0
    return c


def separable_spectrum(factors) -> np.ndarray:
    """Spectrum of ``f1(x1) f2(x2) f3(x3)`` as an outer product of 1-D spectra.

    Building it this way keeps axes without content exactly empty, so
    bandwidth-adapted grids stay small.
    """
    c = [_clean_fft(f) for f in factors]
    return c[0][:, None, None] * c[1][None, :, None] * c[2][None, None, :]


@dataclass
class ModulatedField:
    field: SpectralField
    dc_removed: float


def modulate(phi: BumpProfile, eps: float, alpha: float, grid: Grid) -> ModulatedField:
    """``cos(x1/eps) phi(x1, x2/eps^alpha, x3)`` on the grid, with any DC residual removed.

    ``x2/eps^alpha`` is measured from the box centre.
    """
    freq = 1.0 / eps
    idx = freq / grid.k0
    if abs(idx - round(idx)) > 1e-9:
        raise GridError(f"1/eps = {freq:g} is not a lattice wavenumber")
    if round(idx) > grid.n // 2 - 1:
        raise GridError("1/eps beyond the resolved band")
    x = np.arange(grid.n) * grid.dx
    fac = phi.factors(grid, stretch=(1.0, eps**-alpha, 1.0))
    fac[0] = fac[0] * np.cos(freq * x)
    f = SpectralField(grid, separable_spectrum(fac))
    dc = float(f.coeffs[0, 0, 0].real)
    f.coeffs[0, 0, 0] = 0.0
    return ModulatedField(f, abs(dc))


@dataclass
class OscillatoryData:
    u0: SpectralVectorField
    profile: SpectralField  # the modulated scalar f_eps
    amplitude: float
    divergence_residual: float
    dc_removed: float
    metadata: dict = field(default_factory=dict)


def make_oscillatory_data(params: OscillatoryParams, phi: BumpProfile, grid: Grid, amplitude=None) -> OscillatoryData:
    """``A eps^{alpha-1} (0, -d3 f_eps, d2 f_eps)``, the family written through the modulated profile.

    The derivative of the modulation in ``x2`` produces the ``eps^{-alpha}`` that
    the rescaled profile derivative carries, so the field is an exact curl and
    divergence-free on the grid. ``amplitude`` overrides ``A_eps`` (e.g. 1 for
    amplitude-normalized sweeps). ``params.projected`` applies Leray anyway.
    """
    params.check_grid(grid)
    amp = params.amplitude if amplitude is None else float(amplitude)
    mod = modulate(phi, params.eps, params.alpha, grid)
    f = mod.field
    scale = amp * params.eps ** (params.alpha - 1.0)
    comps = np.stack([
        np.zeros_like(f.coeffs),
        -scale * derivative(f, 2).coeffs,
        scale * derivative(f, 1).coeffs,
    ])
    if params.projected:
        comps = leray_coeffs(comps, grid.kvec_odd)
    u0 = SpectralVectorField(grid, comps)
    res = divergence_residual(u0)
    if res > 1e-4:
        raise GridError(f"divergence residual {res:.2e}: parameters under-resolved")
    u0 = SpectralVectorField(grid, comps, divergence_free=res <= 1e-10)
    return OscillatoryData(u0, f, amp, res, mod.dc_removed, {"eps": params.eps, "alpha": params.alpha})


def make_divfree_random(grid: Grid, seed: int, band=(0, 2)) -> SpectralVectorField:
    """Gaussian divergence-free field supported on ``2^j_lo k0 <= |k| < 2^(j_hi+1) k0``.

    White noise in physical space, so the Fourier coefficients are Hermitian and
    statistically flat; the shell is then cut out and projected.
    """
    j_lo, j_hi = band
    if j_hi < j_lo:
        raise ValueError("empty band")
    kmag = np.sqrt(grid.k2)
    lo, hi = grid.k0 * 2.0**j_lo, grid.k0 * 2.0 ** (j_hi + 1)
    mask = (kmag >= lo) & (kmag < hi) & grid.dealias_mask
    if not np.any(mask):
        raise ValueError("band contains no resolved modes")
    rng = np.random.default_rng(seed)
    c = forward(rng.standard_normal((3,) + grid.shape), grid).coeffs * mask
    c = leray_coeffs(c, grid.kvec_odd)
    c[:, 0, 0, 0] = 0.0
    return SpectralVectorField(grid, c, divergence_free=True)


# ---------------------------------------------------------------------------
# sweep over the family


SWEEP_COLUMNS = (
    "eps", "alpha", "A", "sigma", "gamma", "norm_f_bsig", "norm_u0_b1m2g", "norm_d3u0_b32",
    "q0", "q1", "t_fp", "t_l", "t_fp_phys", "t_l_phys",
)


@dataclass
class SweepPoint:
    """Quantities of one family member, computed at unit amplitude.

    Every quantity is homogeneous in the amplitude except the exponential factor
    of ``t_l``; the ``*_phys`` values restore ``A_eps`` from the same ingredients.
    """

    eps: float
    alpha: float
    amplitude: float
    norm_f: dict  # sigma -> ||f_eps||_{B^-sigma_inf,inf}
    norm_u0: dict  # gamma -> ||u0||_{B^{-1+2gamma}_inf,inf}
    nd3: float
    nb: float
    q0: float
    q1: float
    t_fp: dict
    t_l: float
    t_fp_phys: dict
    t_l_phys: float
    divergence_residual: float
    dc_removed: float

    def rows(self):
        out = []
        for s in sorted(self.norm_f):
            for g in sorted(self.norm_u0):
                out.append({
                    "eps": self.eps, "alpha": self.alpha, "A": self.amplitude, "sigma": s, "gamma": g,
                    "norm_f_bsig": self.norm_f[s], "norm_u0_b1m2g": self.norm_u0[g],
                    "norm_d3u0_b32": self.nd3, "q0": self.q0, "q1": self.q1,
                    "t_fp": self.t_fp[g], "t_l": self.t_l,
                    "t_fp_phys": self.t_fp_phys[g], "t_l_phys": self.t_l_phys,
                })
        return out


def family_point(params: OscillatoryParams, phi: BumpProfile, grid: Grid, sigmas=(0.75, 1.0, 1.5),
                 gammas=(0.25,), consts=None, tg=None) -> SweepPoint:
    from .bounds import BoundConstants, ingredients, t_fp_from_norm, t_l_from_parts
    from .spaces import INF, TimeGrid, besov_norm_heat

    consts = consts or BoundConstants()
    tg = tg or TimeGrid.default(grid)
    data = make_oscillatory_data(params, phi, grid, amplitude=1.0)
    u0, f = data.u0, data.profile
    norm_f = {s: besov_norm_heat(f, s, INF, INF, tg) for s in sigmas}
    norm_u0 = {g: besov_norm_heat(u0, 1.0 - 2.0 * g, INF, INF, tg) for g in gammas}
    ing = ingredients(u0, tg)
    q0, q1 = ing.q.q0, ing.q.q1
    A = params.amplitude
    t_fp = {g: t_fp_from_norm(norm_u0[g], g, consts.fixed_point(g)) for g in gammas}
    t_fp_phys = {g: t_fp_from_norm(A * norm_u0[g], g, consts.fixed_point(g)) for g in gammas}
    t_l = t_l_from_parts(q0, q1, ing.nd3, ing.nb, consts.C_tl)
    t_l_phys = t_l_from_parts(A**4 * q0, A**4 * q1, A * ing.nd3, A * ing.nb, consts.C_tl)
    return SweepPoint(params.eps, params.alpha, A, norm_f, norm_u0, ing.nd3, ing.nb, q0, q1,
                      t_fp, t_l, t_fp_phys, t_l_phys, data.divergence_residual, data.dc_removed)


def family_sweep_values(eps_list, alpha, phi: BumpProfile, grid: Grid, sigmas=(0.75, 1.0, 1.5), gammas=(0.25,),
                        kappa=0.25, eta=0.5, c0_const=1.0, consts=None, tg=None, workers=1, on_skip=None):
    """One ``SweepPoint`` per admissible ``eps``, ordered by decreasing ``eps``.

    Under-resolved members are skipped and reported through ``on_skip(eps, error)``.
    """
    eps_list = sorted(set(float(e) for e in eps_list), reverse=True)
    if len(eps_list) < 4 or eps_list[0] / eps_list[-1] < 8 - 1e-12:
        raise ValueError("need at least 4 eps values spanning a factor of 8")

    def run(eps):
        params = OscillatoryParams(eps, alpha, kappa, eta, c0_const)
        try:
            return family_point(params, phi, grid, sigmas, gammas, consts, tg)
        except GridError as err:
            if on_skip:
                on_skip(eps, err)
            return None

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(workers) as pool:
            points = list(pool.map(run, eps_list))
    else:
        points = [run(e) for e in eps_list]
    return [p for p in points if p is not None]


# ---------------------------------------------------------------------------
# named test fields


FIELD_NAMES = ("zero", "shear", "cross", "fixture", "taylor-green", "random", "oscillatory", "cos1")


def named_field(name: str, grid: Grid, seed: int = 0, params: OscillatoryParams = None, phi: BumpProfile = None,
                amplitude=None):
    """Small library of reference fields, all built from the lowest box mode ``k0``.

    ``shear``: ``(cos k0 x2, 0, 0)``; ``cross``: ``(cos k0 x2, cos k0 x1, 0)``, whose
    nonlinearity is a pure gradient; ``fixture``: ``(cos k0 x2 cos k0 x3, cos k0 x1, 0)``;
    ``taylor-green``: ``(sin x1 cos x2 cos x3, -cos x1 sin x2 cos x3, 0)`` in ``k0`` units;
    ``cos1``: the scalar ``cos k0 x1``.
    """
    x1, x2, x3 = (grid.k0 * c for c in grid.coords())
    zero = np.zeros(grid.shape)
    if name == "zero":
        return SpectralVectorField(grid, np.zeros((3,) + grid.shape, dtype=complex), divergence_free=True)
    if name == "cos1":
        return forward(np.cos(x1), grid)
    if name == "random":
        return make_divfree_random(grid, seed)
    if name == "oscillatory":
        if params is None:
            raise ValueError("oscillatory data need family parameters")
        return make_oscillatory_data(params, phi or BumpProfile.sweep_default(), grid, amplitude).u0
    comps = {
        "shear": (np.cos(x2), zero, zero),
        "cross": (np.cos(x2), np.cos(x1), zero),
        "fixture": (np.cos(x2) * np.cos(x3), np.cos(x1), zero),
        "taylor-green": (np.sin(x1) * np.cos(x2) * np.cos(x3), -np.cos(x1) * np.sin(x2) * np.cos(x3), zero),
    }
    if name not in comps:
        raise ValueError(f"unknown field {name!r}; choose from {', '.join(FIELD_NAMES)}")
    c = forward(np.stack(comps[name]), grid).coeffs
    # drop transform round-off so the fields are exactly band-limited
    c[np.abs(c) < 1e-14 * np.max(np.abs(c))] = 0.0
    return SpectralVectorField(grid, c, divergence_free=True)
