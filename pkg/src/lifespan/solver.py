"""Pseudo-spectral Navier-Stokes on the periodic box with an energy and fluctuation ledger.

Time stepping is integrating-factor RK4: the heat part is integrated exactly
by ``exp(-|k|^2 h)`` and RK4 handles ``-P(u . grad u)`` (2/3 dealiased). The
running time integrals of the ledger are advanced with the same four stage
states, so they are fourth-order accurate as well.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .spectral import (
    Grid,
    SpectralVectorField,
    divergence_residual,
)

LEDGER_COLUMNS = ("t", "kinetic", "dissipation", "w_l2_scaled", "w_integral", "d3w_l2", "d3w_dissipation")


class NumericalFailure(RuntimeError):
    """Loss of resolution or overflow; carries the time stamp and last good state."""

    def __init__(self, msg, t=None, state=None):
        super().__init__(msg)
        self.t = t
        self.state = state


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 1e-3
    t_end: float = 1.0
    sample_every: int = 10
    cfl_safety: float = 0.0  # 0 disables adaptive stepping
    blowup_threshold: float = 1e8  # on ||grad u||_2
    tail_tol: float = 1e-6
    keep_states: bool = True
    check_every: int = 1

    def __post_init__(self):
        if not self.dt > 0 or not self.t_end >= 0:
            raise ValueError("dt must be positive and t_end nonnegative")
        if self.sample_every < 1 or self.check_every < 1:
            raise ValueError("sampling intervals must be at least 1")
        if not self.blowup_threshold > 0 or not self.tail_tol > 0 or self.cfl_safety < 0:
            raise ValueError("thresholds must be positive")


# ---------------------------------------------------------------------------
# half-spectrum kernels
#
# The solver keeps real-FFT half spectra (last axis 0 .. n/2); every reduction
# below weights the interior of that axis twice so sums equal full-spectrum sums.


_PAIRS = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))
_PAIR_INDEX = {(i, j): m for m, (i, j) in enumerate(_PAIRS)}
_PAIR_INDEX.update({(j, i): m for (i, j), m in list(_PAIR_INDEX.items())})


class HalfOps:
    """Precomputed symbols of a grid in real-FFT half layout."""

    def __init__(self, grid: Grid):
        n = grid.n
        self.grid = grid
        self.shape = grid.shape
        k0 = grid.k0
        full = np.fft.fftfreq(n, 1.0 / n)
        half = np.fft.rfftfreq(n, 1.0 / n)
        kx = (k0 * full)[:, None, None]
        ky = (k0 * full)[None, :, None]
        kz = (k0 * half)[None, None, :]
        self.k2 = kx**2 + ky**2 + kz**2
        odd = lambda k: np.where(np.abs(k) == k0 * n / 2, 0.0, k)
        self.kodd = (odd(kx), odd(ky), odd(kz))
        kk = self.kodd[0] ** 2 + self.kodd[1] ** 2 + self.kodd[2] ** 2
        self.inv_kk = np.zeros_like(kk)
        np.divide(1.0, kk, out=self.inv_kk, where=kk > 0)
        self.kz2 = np.broadcast_to(kz**2, self.k2.shape)
        cut = n / 3.0
        self.mask = (np.abs(full)[:, None, None] < cut) & (np.abs(full)[None, :, None] < cut) & (half[None, None, :] < cut)
        w = np.full(half.shape, 2.0)
        w[0] = 1.0
        if n % 2 == 0:
            w[-1] = 1.0
        self.weight = np.broadcast_to(w[None, None, :], self.k2.shape) * grid.volume
        idx = np.abs(full)
        m = np.maximum(np.maximum(idx[:, None, None], idx[None, :, None]), half[None, None, :])
        self.shell = (m >= 0.8 * cut) & (m < cut)
        self._exp = {}

    def to_half(self, c):
        return np.ascontiguousarray(c[..., : self.shape[2] // 2 + 1])

    def to_full(self, h):
        """Hermitian extension of a half spectrum; empty modes stay exactly zero."""
        n = self.shape[2]
        mirror = lambda a: np.conj(np.roll(np.flip(a, axis=(-3, -2, -1)), 1, axis=(-3, -2)))
        out = np.empty(h.shape[:-1] + (n,), dtype=complex)
        out[..., : n // 2 + 1] = h
        out[..., n // 2 + 1 :] = mirror(h[..., 1 : n // 2])
        # the self-conjugate planes kz = 0 and kz = n/2 are symmetrised in place
        for j in (0, n // 2):
            p = out[..., j : j + 1]
            out[..., j : j + 1] = 0.5 * (p + mirror(p))
        return out

    def decay(self, h):
        """``exp(-|k|^2 h)``, cached per step size."""
        e = self._exp.get(h)
        if e is None:
            if len(self._exp) > 8:
                self._exp.clear()
            e = self._exp[h] = np.exp(-h * self.k2)
        return e

    def leray(self, c):
        k1, k2, k3 = self.kodd
        kdotc = (k1 * c[0] + k2 * c[1] + k3 * c[2]) * self.inv_kk
        return np.stack([c[0] - k1 * kdotc, c[1] - k2 * kdotc, c[2] - k3 * kdotc])

    def nonlinear(self, c):
        """``-P div(u (x) u)`` with 2/3 dealiasing; equals ``-P(u . grad u)`` for divergence-free ``u``."""
        u = sfft.irfftn(c * self.mask, s=self.shape, axes=(-3, -2, -1), norm="forward")
        prods = np.empty((6,) + self.shape)
        for m, (i, j) in enumerate(_PAIRS):
            np.multiply(u[i], u[j], out=prods[m])
        ph = sfft.rfftn(prods, axes=(-3, -2, -1), norm="forward")
        k = self.kodd
        div = np.empty((3,) + ph.shape[1:], dtype=complex)
        for i in range(3):
            div[i] = 1j * (k[0] * ph[_PAIR_INDEX[i, 0]] + k[1] * ph[_PAIR_INDEX[i, 1]] + k[2] * ph[_PAIR_INDEX[i, 2]])
        div *= self.mask
        return -self.leray(div)

    # reductions
    def sq(self, c, sym=None):
        a = c.real**2 + c.imag**2
        if a.ndim == 4:
            a = a.sum(axis=0)
        if sym is not None:
            a = a * sym
        return float(np.sum(a * self.weight))

    def grad_sq(self, c):
        return self.sq(c, self.k2)

    def d3_sq(self, c):
        return self.sq(c, self.kz2)

    def grad_d3_sq(self, c):
        return self.sq(c, self.k2 * self.kz2)

    def divergence_residual(self, c):
        scale = float(np.max(np.abs(c)))
        if scale == 0:
            return 0.0
        k1, k2, k3 = self.kodd
        return float(np.max(np.abs(k1 * c[0] + k2 * c[1] + k3 * c[2])) / scale)

    def tail_ratio(self, c):
        """Largest coefficient in the outer fifth of the dealiased band, relative to the peak."""
        mag = np.abs(c).max(axis=0)
        peak = float(mag.max())
        return float(np.max(mag * self.shell) / peak) if peak > 0 else 0.0


_OPS = {}


def ops_for(grid: Grid) -> HalfOps:
    key = (grid.n, grid.box_len)
    if key not in _OPS:
        _OPS[key] = HalfOps(grid)
    return _OPS[key]


def _rates(ops: HalfOps, u, w, t):
    """Integrands of the ledger's running integrals at time ``t``."""
    if t > 0:
        fluct = ops.sq(w) / (2.0 * t**1.5) + ops.grad_sq(w) / math.sqrt(t)
    else:
        fluct = 0.0  # w = O(t) so the integrand vanishes at t = 0
    return np.array([ops.grad_sq(u), fluct, ops.grad_d3_sq(w)])


# ---------------------------------------------------------------------------
# time stepping


def nonlinear(grid: Grid, c) -> np.ndarray:
    """``-P(u . grad u)`` with 2/3 dealiasing, on a full coefficient stack."""
    ops = ops_for(grid)
    return ops.to_full(ops.nonlinear(ops.to_half(c)))


def _stages(ops: HalfOps, c, h):
    e_half = ops.decay(0.5 * h)
    e_full = ops.decay(h)
    k1 = ops.nonlinear(c)
    s2 = e_half * (c + 0.5 * h * k1)
    k2 = ops.nonlinear(s2)
    s3 = e_half * c + 0.5 * h * k2
    k3 = ops.nonlinear(s3)
    s4 = e_full * c + h * e_half * k3
    k4 = ops.nonlinear(s4)
    new = e_full * c + (h / 6.0) * (e_full * k1 + 2.0 * e_half * (k2 + k3) + k4)
    return new, (c, s2, s3, s4)


def step(u: SpectralVectorField, dt: float) -> SpectralVectorField:
    """One integrating-factor RK4 step."""
    ops = ops_for(u.grid)
    new, _ = _stages(ops, ops.to_half(u.coeffs), dt)
    if not np.all(np.isfinite(new)):
        raise NumericalFailure("non-finite state after step", state=u)
    return SpectralVectorField(u.grid, ops.to_full(new))


# ---------------------------------------------------------------------------
# trajectories


@dataclass
class EnergyLedger:
    t: list = field(default_factory=list)
    kinetic: list = field(default_factory=list)
    dissipation: list = field(default_factory=list)
    w_l2_scaled: list = field(default_factory=list)
    w_integral: list = field(default_factory=list)
    d3w_l2: list = field(default_factory=list)
    d3w_dissipation: list = field(default_factory=list)

    def append(self, **row):
        for k in LEDGER_COLUMNS:
            getattr(self, k).append(float(row[k]))

    def __len__(self):
        return len(self.t)

    def array(self, name) -> np.ndarray:
        return np.asarray(getattr(self, name))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(LEDGER_COLUMNS)
        for i in range(len(self)):
            w.writerow([repr(getattr(self, k)[i]) for k in LEDGER_COLUMNS])
        return buf.getvalue()


@dataclass
class Trajectory:
    grid: Grid
    u0: SpectralVectorField
    samples: list  # (t, SpectralVectorField); states dropped unless keep_states
    ledger: EnergyLedger
    status: str = "completed"
    failure_time: float = None
    final: SpectralVectorField = None
    max_divergence: float = 0.0

    @property
    def times(self) -> np.ndarray:
        return self.ledger.array("t")


def integrate(u0: SpectralVectorField, cfg: SolverConfig = SolverConfig(), strict=False) -> Trajectory:
    """Advance ``u0`` to ``cfg.t_end``; the ledger compares against the free heat flow of ``u0``.

    Loss of resolution (non-finite state, ``||grad u||_2`` above threshold, or a
    growing spectral tail) ends the run with ``status = 'loss_of_resolution'``,
    or raises :class:`NumericalFailure` when ``strict``.
    """
    grid = u0.grid
    ops = ops_for(grid)
    res = divergence_residual(u0)
    if res > 1e-8:
        raise ValueError(f"initial data must be divergence-free (residual {res:.3e})")
    if np.max(np.abs(u0.coeffs[:, 0, 0, 0])) > 1e-12 * max(float(np.max(np.abs(u0.coeffs))), 1e-300):
        raise ValueError("initial data must be mean-zero")
    c = ops.to_half(u0.coeffs)
    lin = c.copy()  # free heat flow of the data, advanced alongside
    t = 0.0
    integrals = np.zeros(3)
    ledger = EnergyLedger()
    samples = []
    max_div = res
    tail_base = ops.tail_ratio(c)

    def record(t, c, lin):
        w = c - lin
        ledger.append(
            t=t,
            kinetic=0.5 * ops.sq(c),
            dissipation=integrals[0],
            w_l2_scaled=ops.sq(w) / math.sqrt(t) if t > 0 else 0.0,
            w_integral=integrals[1],
            d3w_l2=ops.d3_sq(w),
            d3w_dissipation=integrals[2],
        )
        full = SpectralVectorField(grid, ops.to_full(c)) if cfg.keep_states else None
        samples.append((t, full))

    record(t, c, lin)
    nsteps = 0
    status, t_fail = "completed", None
    while t < cfg.t_end * (1 - 1e-12):
        h = min(cfg.dt, cfg.t_end - t)
        if cfg.cfl_safety > 0:
            umax = float(np.sum(np.abs(c) * ops.weight / grid.volume, axis=(1, 2, 3)).max())
            if umax > 0:
                h = min(h, cfg.cfl_safety * grid.dx / umax)
        new, stages = _stages(ops, c, h)
        lin_half = ops.decay(0.5 * h) * lin
        lin_new = ops.decay(h) * lin
        lins = (lin, lin_half, lin_half, lin_new)
        times = (t, t + 0.5 * h, t + 0.5 * h, t + h)
        rates = [_rates(ops, s, s - l, ts) for s, l, ts in zip(stages, lins, times)]
        failure = None
        if not np.all(np.isfinite(new)):
            failure = "non-finite state"
        elif nsteps % cfg.check_every == 0:
            if math.sqrt(ops.grad_sq(new)) > cfg.blowup_threshold:
                failure = "gradient norm above threshold"
            elif ops.tail_ratio(new) > max(cfg.tail_tol, 10.0 * tail_base):
                failure = "spectral tail above tolerance"
        if failure:
            status, t_fail = "loss_of_resolution", t + h
            if strict:
                raise NumericalFailure(f"{failure} at t = {t + h:.6g}", t + h, SpectralVectorField(grid, ops.to_full(c)))
            break
        integrals += (h / 6.0) * (rates[0] + 2.0 * rates[1] + 2.0 * rates[2] + rates[3])
        c, lin = new, lin_new
        t += h
        nsteps += 1
        if nsteps % cfg.sample_every == 0 or t >= cfg.t_end * (1 - 1e-12):
            max_div = max(max_div, ops.divergence_residual(c))
            record(t, c, lin)
    final = SpectralVectorField(grid, ops.to_full(c))
    return Trajectory(grid, u0, samples, ledger, status, t_fail, final, max_div)


# ---------------------------------------------------------------------------
# checks


def energy_identity_check(traj: Trajectory) -> float:
    """Largest relative deviation of ``1/2 ||u||^2 + int ||grad u||^2`` from ``1/2 ||u0||^2``."""
    led = traj.ledger
    if len(led) == 0:
        raise ValueError("empty trajectory")
    e0 = led.kinetic[0]
    total = led.array("kinetic") + led.array("dissipation")
    if e0 == 0:
        return float(np.max(np.abs(total)))
    return float(np.max(np.abs(total - e0)) / e0)


def leray_inequality_holds(traj: Trajectory, rtol=1e-6) -> bool:
    led = traj.ledger
    e0 = led.kinetic[0]
    total = led.array("kinetic") + led.array("dissipation")
    return bool(np.all(total <= e0 * (1 + rtol) + 1e-300))


@dataclass
class CheckReport:
    ratio: float
    lhs: np.ndarray
    rhs: np.ndarray
    flag: str = ""


def _ingredients(u0, tg):
    from .bounds import ingredients

    return ingredients(u0, tg)


def fluctuation_check(traj: Trajectory, u0=None, tg=None, ing=None, tol=1e-10) -> CheckReport:
    """``sup_t [ ||w||^2/t^{1/2} + int (||w||^2/(2t^{3/2}) + ||grad w||^2/t^{1/2}) ] / (Q0 exp(nb^2))``."""
    u0 = u0 or traj.u0
    led = traj.ledger
    lhs = led.array("w_l2_scaled") + led.array("w_integral")
    ing = ing or _ingredients(u0, tg)
    rhs_val = ing.q.q0 * math.exp(ing.nb**2)
    rhs = np.full_like(lhs, rhs_val)
    if rhs_val == 0:
        scale = max(led.kinetic[0], 1e-300)
        flag = "inconsistent: Q0 = 0 but fluctuation nonzero" if np.max(lhs) > tol * scale else ""
        return CheckReport(0.0, lhs, rhs, flag)
    return CheckReport(float(np.max(lhs) / rhs_val), lhs, rhs)


def d3_energy_check(traj: Trajectory, u0=None, tg=None, ing=None, tol=1e-10) -> CheckReport:
    """``sup_t ||d3 w||^2 + int ||grad d3 w||^2`` against the vertical-derivative energy estimate."""
    u0 = u0 or traj.u0
    led = traj.ledger
    t = led.array("t")
    d3 = led.array("d3w_l2")
    sup_d3 = np.maximum.accumulate(d3)
    lhs = sup_d3 + led.array("d3w_dissipation")
    ing = ing or _ingredients(u0, tg)
    q0, q1 = ing.q.q0, ing.q.q1
    rhs = (np.sqrt(t) * q0 * sup_d3**2 + ing.nd3**2 * q0 + math.sqrt(q0 * q1)) * math.exp(2.0 * ing.nb**2)
    if np.all(lhs <= tol * max(led.kinetic[0], 1e-300)):
        return CheckReport(0.0, lhs, rhs)
    if np.any(rhs == 0):
        pos = rhs > 0
        ratio = float(np.max(lhs[pos] / rhs[pos])) if np.any(pos) else 0.0
        return CheckReport(ratio, lhs, rhs, "inconsistent: zero right-hand side with nonzero vertical fluctuation")
    return CheckReport(float(np.max(lhs / rhs)), lhs, rhs)


def rescale_coeffs(c: np.ndarray, lam: int, n_out: int) -> np.ndarray:
    """Coefficients of ``lam * v(lam x)`` on an ``n_out`` grid, given those of ``v``.

    Mode ``m`` moves to ``lam * m``; raises if any nonzero mode falls outside.
    """
    n = c.shape[-1]
    idx = np.fft.fftfreq(n, 1.0 / n).astype(int)
    target = lam * idx
    if np.any(np.abs(target) >= n_out // 2):
        keep = np.abs(target) < n_out // 2
        lost = c[..., ~keep, :, :], c[..., :, ~keep, :], c[..., :, :, ~keep]
        if any(np.any(x != 0) for x in lost):
            raise ValueError("rescaled field not resolvable on the target grid")
    else:
        keep = np.ones(n, dtype=bool)
    pos = np.mod(target[keep], n_out)
    out = np.zeros(c.shape[:-3] + (n_out,) * 3, dtype=complex)
    sub = c[..., keep, :, :][..., :, keep, :][..., :, :, keep]
    out[np.ix_(*(range(s) for s in c.shape[:-3]), pos, pos, pos)] = lam * sub
    return out


def scaling_equivariance_check(u0: SpectralVectorField, lam: int, cfg: SolverConfig = SolverConfig(), refine=True):
    """Max relative ``L^2`` gap between the solution from ``lam u0(lam x)`` and ``lam u(lam^2 t, lam x)``.

    With ``refine`` the rescaled problem runs on a grid ``lam`` times finer, so
    the two dealiasing cutoffs correspond mode for mode; otherwise the native grid
    is reused (exact only while the spectrum stays below ``n / (3 lam)``).
    """
    lam = int(lam)
    if lam < 1:
        raise ValueError("lambda must be a positive integer")
    if lam == 1:
        return 0.0
    grid = u0.grid
    g2 = Grid(grid.n * lam, grid.box_len) if refine else grid
    v0 = SpectralVectorField(g2, rescale_coeffs(u0.coeffs, lam, g2.n))
    cfg_u = SolverConfig(cfg.dt, cfg.t_end, cfg.sample_every, 0.0, cfg.blowup_threshold, cfg.tail_tol * 1e6, True)
    cfg_v = SolverConfig(cfg.dt / lam**2, cfg.t_end / lam**2, cfg.sample_every, 0.0,
                         cfg.blowup_threshold * lam**2, cfg.tail_tol * 1e6, True)
    tu = integrate(u0, cfg_u, strict=True)
    tv = integrate(v0, cfg_v, strict=True)
    worst = 0.0
    for (ta, a), (tb, b) in zip(tu.samples, tv.samples):
        if abs(ta - lam**2 * tb) > 1e-9 * max(ta, 1.0):
            raise RuntimeError("sample times do not match")
        ref = rescale_coeffs(a.coeffs, lam, g2.n)
        den = float(np.sqrt(np.sum(np.abs(ref) ** 2)))
        num = float(np.sqrt(np.sum(np.abs(b.coeffs - ref) ** 2)))
        worst = max(worst, num / den if den > 0 else num)
    return worst
