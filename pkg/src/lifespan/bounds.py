"""Nonlinear quantities of the free heat evolution and the lifespan lower bounds."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .spaces import (
    INF,
    TimeGrid,
    _tail_integral,
    besov_norm_heat,
    bmo_inv_norm,
    log_trapezoid,
)
from .spectral import (
    SpectralVectorField,
    CompactSpectrum,
    advect_exact_coeffs,
    derivative,
    divergence_residual,
    ell1_coeffs,
    heat_flow,
    l2_norm,
    leray_coeffs,
    wavenumbers,
)

# below this fraction of the unprojected integral a Q quantity is treated as exactly zero
DEGENERATE_RTOL = 1e-24


@dataclass(frozen=True)
class BoundConstants:
    """Unspecified constants of the life-span lower bounds; unit values by default."""

    c_fp: float | dict = 1.0
    C_tl: float = 1.0
    K: float = 1.0
    c0: float = 1.0

    def __post_init__(self):
        vals = list(self.c_fp.values()) if isinstance(self.c_fp, dict) else [self.c_fp]
        for v in vals + [self.C_tl, self.K, self.c0]:
            if not v > 0:
                raise ValueError(f"bound constants must be positive, got {v}")

    def fixed_point(self, gamma):
        if isinstance(self.c_fp, dict):
            return self.c_fp.get(gamma, 1.0)
        return self.c_fp


def _check_data(u0: SpectralVectorField):
    res = divergence_residual(u0)
    if res > 1e-8:
        raise ValueError(f"initial data must be divergence-free (residual {res:.3e})")
    scale = max(float(np.max(np.abs(u0.coeffs))), 1e-300)
    if np.max(np.abs(u0.coeffs[:, 0, 0, 0])) > 1e-12 * scale:
        raise ValueError("initial data must be mean-zero")


# ---------------------------------------------------------------------------
# Q^0_L and Q^1_L


@dataclass
class NonlinearQuantities:
    q0: float
    q1: float
    residual0: float
    residual1: float
    times: np.ndarray
    projected: np.ndarray  # ||P(uL . grad uL)(t)||_2^2
    projected_d33: np.ndarray  # ||d3^2 P(uL . grad uL)(t)||_2^2
    raw: np.ndarray  # ||uL . grad uL(t)||_2^2, unprojected
    degenerate: bool = False


def projected_advection_norms(u, box_len=None):
    """Squared ``L^2`` norms of ``u.grad u``, ``P(u.grad u)`` and ``d3^2 P(u.grad u)``.

    The product is formed without truncation (see ``advect_exact``), so the
    three numbers are exact for band-limited ``u``. ``u`` is a vector field or
    a bare coefficient stack together with ``box_len``.
    """
    if isinstance(u, SpectralVectorField):
        u, box_len = u.coeffs, u.grid.box_len
    c, shape = advect_exact_coeffs(u, box_len)
    box = box_len
    vol = box**3
    proj = leray_coeffs(c, wavenumbers(shape, box))
    k3 = wavenumbers(shape, box)[2]
    raw = vol * float(np.sum(np.abs(c) ** 2))
    p2 = np.sum(np.abs(proj) ** 2, axis=0)
    return raw, vol * float(np.sum(p2)), vol * float(np.sum(k3**4 * p2))


def _d3_bound(u0: SpectralVectorField):
    """Sup-in-time bounds of ``||u.grad u||_2`` and ``||d3^2 (u.grad u)||_2`` along the heat flow."""
    grad_norm = lambda v: math.sqrt(sum(l2_norm(derivative(c, i)) ** 2 for c in v.components for i in range(3)))
    d3 = lambda v, m: SpectralVectorField(v.grid, v.coeffs * (1j * v.grid.kvec_odd[2]) ** m)
    b0 = ell1_coeffs(u0.coeffs) * grad_norm(u0)
    b1 = (
        ell1_coeffs(d3(u0, 2).coeffs) * grad_norm(u0)
        + 2 * ell1_coeffs(d3(u0, 1).coeffs) * grad_norm(d3(u0, 1))
        + ell1_coeffs(u0.coeffs) * grad_norm(d3(u0, 2))
    )
    return b0, b1


def nonlinear_quantities(u0: SpectralVectorField, tg: TimeGrid = None) -> NonlinearQuantities:
    """``Q0 = int t^{1/2} ||P(uL.grad uL)||^2 dt`` and ``Q1 = int t^{3/2} ||d3^2 P(...)||^2 dt``.

    Log-trapezoid over ``tg`` plus an analytic head term on ``[0, t_min]``;
    ``residual*`` bound what the head and tail (``t > t_max``) could still add.
    """
    _check_data(u0)
    grid = u0.grid
    tg = tg or TimeGrid.default(grid)
    times = tg.times
    raw = np.empty(len(times))
    p0 = np.empty(len(times))
    p1 = np.empty(len(times))
    cs = CompactSpectrum.of(u0)
    for i, t in enumerate(times):
        raw[i], p0[i], p1[i] = projected_advection_norms(cs.heat(t), grid.box_len)

    def integrate(weight_exp, vals, head_bound_sq, tail_sq):
        # int t^{w} f(t) dt = int t^{w+1} f(t) dlog t
        body = log_trapezoid(times ** (weight_exp + 1.0) * vals, tg)
        head = tg.t_min ** (weight_exp + 1.0) * vals[0] / (weight_exp + 1.0)
        head_bound = tg.t_min ** (weight_exp + 1.0) * head_bound_sq / (weight_exp + 1.0)
        rate = 4.0 * grid.k0**2
        tail = tail_sq * _tail_integral(weight_exp + 1.0, rate, tg.t_max) if tail_sq > 0 else 0.0
        return body + head, head_bound + tail

    b0, b1 = _d3_bound(u0)
    bt0, bt1 = _d3_bound(heat_flow(u0, tg.t_max))
    q0, r0 = integrate(0.5, p0, b0**2, bt0**2)
    q1, r1 = integrate(1.5, p1, b1**2, bt1**2)
    qraw, _ = integrate(0.5, raw, 0.0, 0.0)
    degenerate = q0 <= DEGENERATE_RTOL * qraw
    if degenerate:
        q0 = q1 = 0.0
    return NonlinearQuantities(q0, q1, r0, r1, times, p0, p1, raw, degenerate)


def q0(u0, tg=None) -> float:
    return nonlinear_quantities(u0, tg).q0


def q1(u0, tg=None) -> float:
    return nonlinear_quantities(u0, tg).q1


# ---------------------------------------------------------------------------
# bound formulas


def t_fp_from_norm(norm: float, gamma: float, c=1.0) -> float:
    if not 0 < gamma < 0.5:
        raise ValueError(f"gamma must lie in (0, 1/2), got {gamma}")
    if norm == 0:
        return INF
    return c * norm ** (-1.0 / gamma)


def t_fp(u0, gamma, consts=BoundConstants(), tg=None) -> float:
    """Fixed-point bound ``c'_g ||u0||_{B^{-1+2g}_{inf,inf}}^{-1/g}`` (max over components)."""
    if not 0 < gamma < 0.5:
        raise ValueError(f"gamma must lie in (0, 1/2), got {gamma}")
    norm = besov_norm_heat(u0, 1.0 - 2.0 * gamma, INF, INF, tg)
    return t_fp_from_norm(norm, gamma, consts.fixed_point(gamma))


def t_l_from_parts(q0, q1, nd3, nb, C=1.0) -> float:
    if q0 == 0:
        return INF
    mix = nd3**2 * q0 + math.sqrt(q0 * q1)
    if mix == 0:
        return INF  # no vertical derivative content: the bound does not bite
    return C * q0**-2 * mix**-2 * math.exp(-4.0 * nb**2)


def m_l_from_parts(q0, q1, nd3, nb) -> float:
    return (nd3**2 * q0 + math.sqrt(q0 * q1)) * math.exp(2.0 * nb**2)


def t_star_from_parts(q0, m_l, K=1.0) -> float:
    if q0 == 0 or m_l == 0:
        return INF
    return (1.0 / (8.0 * K**2 * q0 * m_l)) ** 2


def t_l_over_t_star(consts: BoundConstants) -> float:
    """``T_L / T_*``: both formulas share ``(Q0 X e^{2 nb^2})^{-2}``, leaving ``64 C K^4``."""
    return 64.0 * consts.C_tl * consts.K**4


@dataclass
class Ingredients:
    q: NonlinearQuantities
    nd3: float  # ||d3 u0||_{B^{-3/2}_{inf,inf}}
    nb: float  # ||u0||_{B^{-1}_{inf,2}}


def ingredients(u0, tg=None) -> Ingredients:
    tg = tg or TimeGrid.default(u0.grid)
    q = nonlinear_quantities(u0, tg)
    d3u = SpectralVectorField(u0.grid, u0.coeffs * (1j * u0.grid.kvec_odd[2]))
    nd3 = besov_norm_heat(d3u, 1.5, INF, INF, tg) if np.any(d3u.coeffs) else 0.0
    nb = besov_norm_heat(u0, 1.0, INF, 2, tg) if np.any(u0.coeffs) else 0.0
    return Ingredients(q, nd3, nb)


def t_l(u0, consts=BoundConstants(), tg=None) -> float:
    ing = ingredients(u0, tg)
    return t_l_from_parts(ing.q.q0, ing.q.q1, ing.nd3, ing.nb, consts.C_tl)


def m_l_and_t_star(u0, consts=BoundConstants(), tg=None):
    ing = ingredients(u0, tg)
    m = m_l_from_parts(ing.q.q0, ing.q.q1, ing.nd3, ing.nb)
    return m, t_star_from_parts(ing.q.q0, m, consts.K)


def kt_smallness(u0, consts=BoundConstants(), tg=None):
    """``(||u0||_{BMO^-1} <= c0, ||u0||_{BMO^-1} / c0)``."""
    if not np.any(u0.coeffs):
        return True, 0.0
    val = bmo_inv_norm(u0, tg)
    return val <= consts.c0, val / consts.c0


# ---------------------------------------------------------------------------
# report


@dataclass
class BoundReport:
    q0: float
    q1: float
    norm_b1inf2: float
    norm_d3_b32: float
    t_fp: dict
    t_l: float
    m_l: float
    t_star: float
    kt_small: bool = None
    kt_margin: float = None
    flags: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    COLUMNS = ("eps", "alpha", "gamma", "q0", "q1", "nb1inf2", "nd3b32", "t_fp", "t_l", "t_star", "kt_small", "kt_margin")

    def rows(self, eps=None, alpha=None):
        out = []
        for gamma, tfp in sorted(self.t_fp.items()):
            out.append([
                "" if eps is None else _num(eps),
                "" if alpha is None else _num(alpha),
                _num(gamma), _num(self.q0), _num(self.q1), _num(self.norm_b1inf2),
                _num(self.norm_d3_b32), _num(tfp), _num(self.t_l), _num(self.t_star),
                "" if self.kt_small is None else str(bool(self.kt_small)).lower(),
                "" if self.kt_margin is None else _num(self.kt_margin),
            ])
        return out

    def to_csv(self, eps=None, alpha=None, header=True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if header:
            w.writerow(self.COLUMNS)
        w.writerows(self.rows(eps, alpha))
        return buf.getvalue()


def _num(x):
    x = float(x)
    if math.isinf(x):
        return "inf"
    return repr(x)


def compute_bounds(u0, gammas=(0.25,), consts=BoundConstants(), tg=None, with_bmo=True) -> BoundReport:
    tg = tg or TimeGrid.default(u0.grid)
    for g in gammas:
        if not 0 < g < 0.5:
            raise ValueError(f"gamma must lie in (0, 1/2), got {g}")
    ing = ingredients(u0, tg)
    q = ing.q
    tfp = {g: t_fp(u0, g, consts, tg) if np.any(u0.coeffs) else INF for g in gammas}
    tl = t_l_from_parts(q.q0, q.q1, ing.nd3, ing.nb, consts.C_tl)
    m = m_l_from_parts(q.q0, q.q1, ing.nd3, ing.nb)
    ts = t_star_from_parts(q.q0, m, consts.K)
    flags = []
    if q.q0 == 0:
        flags.append("linear-flow regime: Q0 = 0, T_L = +inf")
    elif math.isinf(tl):
        flags.append("no vertical coupling: d3 terms vanish, T_L = +inf")
    if any(math.isinf(v) for v in tfp.values()):
        flags.append("zero Besov norm: T_FP = +inf")
    rep = BoundReport(q.q0, q.q1, ing.nb, ing.nd3, tfp, tl, m, ts, flags=flags)
    rep.metadata.update(
        vector_norm="max over components",
        constants=consts,
        time_grid=tg,
        q0_residual=q.residual0,
        q1_residual=q.residual1,
    )
    if with_bmo:
        rep.kt_small, rep.kt_margin = kt_smallness(u0, consts, tg)
    return rep
