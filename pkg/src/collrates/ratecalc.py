"""State-to-state rate coefficients from symmetrized cross sections.

The rate for n1 n2 -> n1' n2' at temperature T is

    k = v(T) / (kT)^2 * exp(-dE / 2kT) / (g1 g2) * Int_{Umin}^inf I(U) dU
    I(U) = s(U) exp(-(U/kT)[1 + (dE/4U)^2]) [1 - (dE/4U)^2] U

with Umin = |dE|/4 and s the symmetrized cross section. The exponent can be
rewritten as -(U - Umin)^2/(U kT) - |dE|/2kT; integrating the rescaled
integrand with that form keeps quenching rates free of underflow and lets one
integral serve both directions of a pair.

The cross section is interpolated as a natural cubic spline of ln s(U) over
the usable grid points; the kinematic and Boltzmann factors are evaluated
exactly. Beyond the sampled range ln s is continued linearly (the natural
spline's own extrapolation), with the high-energy slope clamped so s never
grows. Data containing exact zeros fall back to a shape-preserving cubic of
s itself.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

from .config import PipelineConfig, PhysicalConstants, check_temperature_grid
from .errors import CollratesError, InsufficientDataError, NumericalError, QuadratureError
from .quadrature import integrate_family
from .xsec import CrossSectionTable, SymmetrizedXsec, TransitionKey, pair_inventory, symmetrize

log = logging.getLogger(__name__)

MAX_TAIL_CHUNKS = 200
TAIL_CHUNK_KT = 4.0
# keeps exp(ln s) finite when a steep end slope is extrapolated
MAX_LOG_XSEC = 700.0


def mean_speed(T, mu, constants: PhysicalConstants = PhysicalConstants()):
    """Maxwell mean relative speed sqrt(8 kT / (pi mu)) in cm/s; mu in amu."""
    T = np.asarray(T, dtype=float)
    if np.any(T <= 0) or not mu > 0:
        raise ValueError("temperature and reduced mass must be positive")
    return np.sqrt(8.0 * constants.k_B_erg * T / (math.pi * mu * constants.amu))


@dataclass(frozen=True)
class TransitionContext:
    dE: float
    g1: int
    g2: int
    g1p: int
    g2p: int

    @property
    def u_min(self) -> float:
        return abs(self.dE) / 4.0

    def reverse(self) -> "TransitionContext":
        return TransitionContext(-self.dE, self.g1p, self.g2p, self.g1, self.g2)


def transition_context(table: CrossSectionTable, key) -> TransitionContext:
    key = TransitionKey(*key)
    return TransitionContext(
        dE=table.energy(key.final) - table.energy(key.initial),
        g1=table.levels_target[key.n1].degeneracy,
        g2=table.levels_projectile[key.n2].degeneracy,
        g1p=table.levels_target[key.n1p].degeneracy,
        g2p=table.levels_projectile[key.n2p].degeneracy,
    )


class XsecInterpolant:
    """Temperature-independent interpolation of one symmetrized cross section."""

    def __init__(self, sx: SymmetrizedXsec, u_min: float):
        grid = np.asarray(sx.grid, dtype=float)
        values = np.asarray(sx.values, dtype=float)
        usable = (grid > u_min) & ~np.isnan(values)
        self.u_min = float(u_min)
        self.knots = grid[usable]
        self.values = values[usable]
        self.n_dropped = int(len(grid) - usable.sum())
        if len(self.knots) < 2:
            raise InsufficientDataError(
                f"transition {sx.pair}: {len(self.knots)} usable cross-section samples above "
                f"U_min={u_min:g} cm^-1, need 2")
        if np.all(self.values > 0):
            self.kind = "log-spline"
            self._spline = CubicSpline(self.knots, np.log(self.values), bc_type="natural")
            self._lo_slope = float(self._spline(self.knots[0], 1))
            self.tail_slope = min(float(self._spline(self.knots[-1], 1)), 0.0)
        else:
            self.kind = "pchip"
            self._spline = PchipInterpolator(self.knots, self.values)
            self._lo_slope = 0.0
            s_n, s_prev = self.values[-1], self.values[-2]
            if s_n > 0 and s_prev > 0:
                slope = math.log(s_n / s_prev) / (self.knots[-1] - self.knots[-2])
                self.tail_slope = min(slope, 0.0)
            else:
                self.tail_slope = 0.0

    def __call__(self, U):
        U = np.asarray(U, dtype=float)
        lo, hi = self.knots[0], self.knots[-1]
        inside = np.clip(U, lo, hi)
        if self.kind == "log-spline":
            log_s = self._spline(inside)
            log_s = np.where(U < lo, log_s + self._lo_slope * (U - lo), log_s)
            log_s = np.where(U > hi, log_s + self.tail_slope * (U - hi), log_s)
            return np.exp(np.minimum(log_s, MAX_LOG_XSEC))
        s = np.maximum(self._spline(inside), 0.0)
        return np.where(U > hi, s * np.exp(self.tail_slope * (U - hi)), s)

    def local_maxima(self, n=2000) -> int:
        """Interior local maxima of the interpolated curve (smoothness diagnostic)."""
        x = np.geomspace(self.knots[0], self.knots[-1], n)
        y = self(x)
        dy = np.sign(np.diff(y))
        dy = dy[dy != 0]
        return int(np.sum((dy[:-1] > 0) & (dy[1:] < 0)))


def scaled_kernel(U, u_min, kT):
    """exp(-(U-Umin)^2/(U kT)) (1 - (Umin/U)^2) U, zero at and below Umin."""
    U = np.asarray(U, dtype=float)
    above = U > u_min
    Us = np.where(above, U, 1.0)
    r = u_min / Us
    val = np.exp(-((Us - u_min) ** 2) / (Us * kT)) * (1.0 - r * r) * Us
    return np.where(above, val, 0.0)


@dataclass
class IntegrandCurve:
    """The rate integrand for one transition at one temperature.

    Calling the curve gives I(U) exactly as written in the rate formula;
    ``scaled`` gives I(U) * exp(|dE|/2kT), which is what gets integrated.
    """

    interp: XsecInterpolant
    dE: float
    kT: float

    @property
    def u_min(self) -> float:
        return abs(self.dE) / 4.0

    @property
    def anchor(self):
        return (self.u_min, 0.0)

    @property
    def samples(self):
        U = self.interp.knots
        return U, self(U)

    def scaled(self, U):
        U = np.asarray(U, dtype=float)
        above = U > self.u_min
        out = np.zeros(U.shape)
        out[above] = self.interp(U[above]) * scaled_kernel(U[above], self.u_min, self.kT)
        return out

    def __call__(self, U):
        return self.scaled(U) * math.exp(-abs(self.dE) / (2.0 * self.kT))


def build_integrand(sx: SymmetrizedXsec, ctx: TransitionContext, T, k_B=None) -> IntegrandCurve:
    if not T > 0:
        raise ValueError(f"temperature must be positive, got {T}")
    k_B = PhysicalConstants().k_B if k_B is None else k_B
    curve = IntegrandCurve(XsecInterpolant(sx, ctx.u_min), ctx.dE, k_B * T)
    _, I = curve.samples
    if np.any(I < 0):
        raise NumericalError(f"transition {sx.pair}: negative integrand sample (invariant violated)")
    return curve


def integrate_scaled(interp: XsecInterpolant, dE, temps, cfg: PipelineConfig) -> np.ndarray:
    """Int_{Umin}^inf I(U) exp(|dE|/2kT) dU for every temperature in ``temps``."""
    temps = np.asarray(temps, dtype=float)
    kT = cfg.k_B * temps
    u_min = abs(dE) / 4.0
    n = len(temps)

    def f(x, owner):
        return interp(x) * scaled_kernel(x, u_min, kT[owner][:, None])

    edges = np.concatenate([[u_min], interp.knots])
    a = np.tile(edges[:-1], n)
    b = np.tile(edges[1:], n)
    owner = np.repeat(np.arange(n), len(edges) - 1)
    total, _ = integrate_family(f, a, b, owner, n, cfg.quad_rtol, cfg.max_refinements)

    # tail beyond the last knot, in chunks of a few kT until negligible
    start = np.full(n, interp.knots[-1])
    active = np.arange(n)
    for _ in range(MAX_TAIL_CHUNKS):
        width = TAIL_CHUNK_KT * kT[active]
        part, _ = integrate_family(
            lambda x, o: f(x, active[o]), start[active], start[active] + width,
            np.arange(len(active)), len(active), cfg.quad_rtol, cfg.max_refinements)
        total[active] += part
        start[active] += width
        done = np.abs(part) <= cfg.quad_rtol * np.abs(total[active])
        active = active[~done]
        if len(active) == 0:
            return total
    raise QuadratureError(f"high-energy tail did not converge within {MAX_TAIL_CHUNKS} chunks")


def rate_prefactor(dE, g_initial, temps, cfg: PipelineConfig) -> np.ndarray:
    """v/(kT)^2 * exp(-(dE+|dE|)/2kT) / g * (A^2 -> cm^2)."""
    temps = np.asarray(temps, dtype=float)
    kT = cfg.k_B * temps
    v = mean_speed(temps, cfg.mu, cfg.constants)
    return v / kT**2 * np.exp(-(dE + abs(dE)) / (2.0 * kT)) / g_initial * cfg.constants.angstrom2


def integrate_rate(curve: IntegrandCurve, ctx: TransitionContext, T, cfg: PipelineConfig = None) -> float:
    """Rate coefficient in cm^3/s for the direction described by ``ctx``."""
    cfg = cfg or PipelineConfig()
    integral = integrate_scaled(curve.interp, ctx.dE, [T], cfg)
    k = rate_prefactor(ctx.dE, ctx.g1 * ctx.g2, [T], cfg) * integral
    return float(k[0])


def pair_rates(sx: SymmetrizedXsec, ctx: TransitionContext, temps, cfg: PipelineConfig):
    """Forward and backward rates over ``temps`` from a single integral.

    ``ctx`` describes the direction of ``sx.pair``. Sharing the integral makes
    detailed balance hold to rounding error.
    """
    interp = XsecInterpolant(sx, ctx.u_min)
    integral = integrate_scaled(interp, ctx.dE, temps, cfg)
    fwd = rate_prefactor(ctx.dE, ctx.g1 * ctx.g2, temps, cfg) * integral
    bwd = rate_prefactor(-ctx.dE, ctx.g1p * ctx.g2p, temps, cfg) * integral
    return fwd, bwd, interp


@dataclass
class RateTable:
    """k(T) in cm^3/s per transition key on a shared temperature grid."""

    temps: tuple
    entries: dict = field(default_factory=dict)

    def __post_init__(self):
        self.temps = tuple(float(t) for t in self.temps)
        check_temperature_grid(self.temps)
        self.entries = {TransitionKey(*k): np.asarray(v, dtype=float) for k, v in self.entries.items()}
        for k, v in self.entries.items():
            if v.shape != (len(self.temps),):
                raise ValueError(f"transition {k}: {v.size} rates for {len(self.temps)} temperatures")

    def __len__(self):
        return len(self.entries)

    def keys(self):
        return sorted(self.entries)

    def temp_index(self, T) -> int:
        for i, t in enumerate(self.temps):
            if math.isclose(t, T, rel_tol=1e-9):
                return i
        raise KeyError(f"temperature {T} not in grid {self.temps}")


@dataclass
class SmoothnessRow:
    key: TransitionKey
    n_used: int
    n_dropped: int
    kind: str
    tail_slope: float
    local_maxima: int


@dataclass
class RateSummary:
    n_items: int = 0
    n_rows: int = 0
    one_sided: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    smoothness: list = field(default_factory=list)


def _work_items(table: CrossSectionTable):
    inv = pair_inventory(table)
    return sorted(inv.elastic + inv.pairs()), inv


def _compute_items(args):
    table, items, temps, cfg = args
    out = []
    for key in items:
        try:
            sx = symmetrize(table, key, cfg.missing_reverse)
            ctx = transition_context(table, sx.pair)
            fwd, bwd, interp = pair_rates(sx, ctx, temps, cfg)
            smooth = SmoothnessRow(sx.pair, len(interp.knots), interp.n_dropped, interp.kind,
                                   interp.tail_slope, interp.local_maxima())
            out.append((key, fwd, bwd, smooth, None))
        except CollratesError as exc:
            out.append((key, None, None, None, exc))
    return out


def rate_table(table: CrossSectionTable, temps, cfg: PipelineConfig = None, jobs: int = 1):
    """Rates for every transition in ``table`` (both directions of each pair).

    Work is split into contiguous chunks and merged in sorted key order, so
    the result does not depend on ``jobs``. Per-transition failures are
    collected in the returned summary rather than raised.
    """
    cfg = cfg or PipelineConfig()
    temps = tuple(float(t) for t in temps)
    check_temperature_grid(temps)
    items, inv = _work_items(table)
    summary = RateSummary(n_items=len(items), one_sided=list(inv.one_sided))
    if jobs > 1 and len(items) > 1:
        n_chunks = min(len(items), 4 * jobs)
        bounds = np.linspace(0, len(items), n_chunks + 1).astype(int)
        chunks = [(table, items[lo:hi], temps, cfg) for lo, hi in zip(bounds[:-1], bounds[1:])]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = [r for part in pool.map(_compute_items, chunks) for r in part]
    else:
        results = _compute_items((table, items, temps, cfg))

    entries = {}
    for key, fwd, bwd, smooth, exc in results:
        if exc is not None:
            summary.failures.append((key, exc))
            log.warning("transition %s failed: %s", key, exc)
            continue
        summary.smoothness.append(smooth)
        if key.is_elastic:
            entries[key] = fwd
            continue
        # both directions, including the absent side of a one-sided entry
        entries[key] = fwd
        entries[key.reverse()] = bwd
    entries = {k: entries[k] for k in sorted(entries)}
    summary.n_rows = len(entries)
    return RateTable(temps, entries), summary
