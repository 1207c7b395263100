"""Weights and the Muckenhoupt-type constants used by the probes.

Every "sup over cubes" runs over the shifted dyadic enumeration; the
constants are therefore computable minorants of the continuum values,
bracketed within the usual 6^n covering factor.  Class membership on a
finite grid is operationalized as two-resolution stability: the constant
computed at levels m and m+1 must stay within a fixed ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exponent import VariableExponent, dual_exponent
from .grid import Cube, Domain, GridFunction, all_shifts, cube_index_map, level_range
from .report import Report

__all__ = [
    "Weight",
    "MuckenhouptReport",
    "a_loc_infty_constant",
    "a_loc_p_constant",
    "a1_loc_constant",
    "reverse_holder_check",
    "a_loc_var_constant",
    "dual_weight",
    "q_w_estimate",
    "tilde_a_constant",
    "stability_ratio",
    "STABILITY_FACTOR",
]

STABILITY_FACTOR = 1.5  # constant(m+1)/constant(m) above this means "not in the class"
# The critical-index search needs a much finer cut: near the threshold
# exponent the constant grows like a small power of 1/h (about 2^{q_w - p}
# per level for power weights), so a 1.5 cut would miss the transition
# entirely.  1.05 locates the power-weight critical index within the 1/32
# bisection tolerance.
Q_W_STABILITY = 1.05
CLAMP_FLOOR = 2.0 ** -52


@dataclass(frozen=True)
class Weight:
    """Strictly positive locally integrable density on the lattice."""

    values: GridFunction
    generator: Callable | None = field(default=None, compare=False, repr=False)
    midpoint: bool = False  # generator sampled at cell centers (singular weights)

    def __post_init__(self):
        v = self.values.samples
        if np.min(v) <= 0 or not np.all(np.isfinite(v)):
            raise ValueError("weight samples must be strictly positive and finite")

    @classmethod
    def from_callable(cls, domain: Domain, fn: Callable, midpoint: bool = False) -> "Weight":
        vals = _sample(domain, fn, midpoint)
        gf = GridFunction(domain, np.maximum(vals, CLAMP_FLOOR))
        return cls(gf, generator=fn, midpoint=midpoint)

    @classmethod
    def constant(cls, domain: Domain, c: float) -> "Weight":
        return cls.from_callable(
            domain, lambda *xs: np.full(np.broadcast(*xs).shape, float(c))
        )

    @property
    def domain(self) -> Domain:
        return self.values.domain

    def at_level(self, level: int) -> "Weight":
        if self.generator is None:
            raise ValueError("weight has no generator; cannot change resolution")
        d = self.domain
        return Weight.from_callable(
            Domain(d.dim, d.half_width, level), self.generator, self.midpoint
        )

    def mass(self, cube: Cube | None = None) -> float:
        from .grid import quadrature

        return quadrature(self.values, cube)


def _sample(domain: Domain, fn: Callable, midpoint: bool) -> np.ndarray:
    off = domain.h / 2 if midpoint else 0.0
    if domain.dim == 1:
        return np.broadcast_to(fn(domain.axis() + off), domain.shape).astype(float)
    x, y = domain.coords()
    return np.broadcast_to(fn(x + off, y + off), domain.shape).astype(float)


@dataclass
class MuckenhouptReport:
    constant: float
    worst_cube: Cube | None
    cube_count: int
    resolution_stable: bool | None = None


def _sweep_cubes(
    domain: Domain,
    per_level_fn,
    max_side: float = 1.0,
    shifts=None,
) -> MuckenhouptReport:
    """Maximize a per-cube quantity over the enumeration, tracking the argmax.

    per_level_fn(level, shift) must return a flat array of cube values
    together with the flat index offset (first cube index at that level).
    """
    if shifts is None:
        shifts = all_shifts(domain.dim)
    best = -np.inf
    best_cube = None
    count = 0
    for k in level_range(domain, max_side):
        for a in shifts:
            vals, offsets = per_level_fn(k, a)
            count += vals.size
            j = int(np.argmax(vals))
            if vals[j] > best:
                best = float(vals[j])
                best_cube = _cube_from_flat(domain, k, a, j, offsets)
    return MuckenhouptReport(best, best_cube, count)


def _flat_layout(domain: Domain, level: int, shift):
    idx = cube_index_map(domain, level, shift)
    if domain.dim == 1:
        q0 = int(idx[0][0])
        qidx = idx[0] - q0
        ncubes = int(qidx[-1]) + 1
        return qidx, ncubes, (q0,)
    qx, qy = idx
    qx0, qy0 = int(qx[0]), int(qy[0])
    ncols = int(qy[-1]) - qy0 + 1
    qidx = (qx[:, None] - qx0) * ncols + (qy[None, :] - qy0)
    return qidx, int(qidx.max()) + 1, (qx0, qy0, ncols)


def _cube_from_flat(domain: Domain, level: int, shift, flat: int, offsets) -> Cube:
    if domain.dim == 1:
        return Cube(level, shift, (flat + offsets[0],))
    qx0, qy0, ncols = offsets
    return Cube(level, shift, (flat // ncols + qx0, flat % ncols + qy0))


def _cube_means(domain: Domain, samples: np.ndarray, level: int, shift):
    """Cube means with zero extension: integral / full cube volume."""
    qidx, ncubes, offsets = _flat_layout(domain, level, shift)
    hn = domain.h ** domain.dim
    vol = (2.0 ** (-level)) ** domain.dim
    sums = np.bincount(qidx.ravel(), weights=samples.ravel(), minlength=ncubes)
    return sums * (hn / vol), qidx, offsets


def _occupancy(domain: Domain, level: int, shift):
    qidx, ncubes, _ = _flat_layout(domain, level, shift)
    counts = np.bincount(qidx.ravel(), minlength=ncubes)
    full = (2.0 ** (domain.level - level)) ** domain.dim
    return counts / full


def a_loc_infty_constant(w: Weight) -> MuckenhouptReport:
    """sup over cubes |Q| <= 1 of m_Q(w) exp(-m_Q(log w)).

    Only cubes fully inside the window enter: with zero extension the
    logarithmic mean is undefined on partially covered cubes.
    """
    d = w.domain
    ws = w.values.samples
    logw = np.log(ws)

    def per_level(k, a):
        mw, qidx, offsets = _cube_means(d, ws, k, a)
        mlog, _, _ = _cube_means(d, logw, k, a)
        occ = _occupancy(d, k, a)
        vals = np.where(occ > 1.0 - 1e-9, mw * np.exp(-mlog), -np.inf)
        return vals, offsets

    return _sweep_cubes(d, per_level)


def a_loc_p_constant(w: Weight, p: float) -> MuckenhouptReport:
    """sup over cubes |Q| <= 1 of m_Q(w) m_Q(w^{-1/(p-1)})^{p-1}."""
    if p <= 1:
        raise ValueError("p must exceed 1")
    d = w.domain
    ws = w.values.samples
    sig = ws ** (-1.0 / (p - 1.0))

    def per_level(k, a):
        mw, _, offsets = _cube_means(d, ws, k, a)
        ms, _, _ = _cube_means(d, sig, k, a)
        occ = _occupancy(d, k, a)
        vals = np.where(occ > 1.0 - 1e-9, mw * ms ** (p - 1.0), -np.inf)
        return vals, offsets

    return _sweep_cubes(d, per_level)


def a1_loc_constant(w: Weight) -> MuckenhouptReport:
    """sup over the lattice of M^loc w / w."""
    from .maximal import local_maximal

    mloc = local_maximal(w.values)
    ratio = mloc.samples / w.values.samples
    j = int(np.argmax(ratio))
    return MuckenhouptReport(float(ratio.flat[j]), None, ratio.size)


def reverse_holder_check(w: Weight, q: float | None = None) -> Report:
    """Self-improvement check m_Q(w^q)^{1/q} <= 2 m_Q(w) over cubes |Q| <= 1.

    Without an explicit q, uses q = 1 + 1/(4^{n+6} [w]_{A1 loc}) computed
    from the measured constant; that exponent makes the factor-2 bound hold
    for any A1-type weight.
    """
    d = w.domain
    if q is None:
        a1 = a1_loc_constant(w).constant
        if not np.isfinite(a1):
            raise ValueError("A1 constant not finite")
        q = 1.0 + 1.0 / (4.0 ** (d.dim + 6) * a1)
    ws = w.values.samples
    wq = ws ** q
    worst = -np.inf
    worst_cube = None
    for k in level_range(d, 1.0):
        for a in all_shifts(d.dim):
            mq, _, offsets = _cube_means(d, wq, k, a)
            mw, _, _ = _cube_means(d, ws, k, a)
            occ = _occupancy(d, k, a)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(occ > 1.0 - 1e-9, mq ** (1.0 / q) / mw, -np.inf)
            j = int(np.argmax(ratio))
            if ratio[j] > worst:
                worst = float(ratio[j])
                worst_cube = _cube_from_flat(d, k, a, j, offsets)
    return Report(
        "reverse_holder_check",
        passed=worst <= 2.0,
        quantities={"worst_ratio": worst, "q": q},
        details={"worst_cube": worst_cube},
    )


def dual_weight(w: Weight, p: VariableExponent) -> Weight:
    """sigma = w^{-1/(p(.)-1)}; the conjugate density."""
    p.requires_class_p()
    sig = w.values.samples ** (-1.0 / (p.values.samples - 1.0))
    gen = None
    if w.generator is not None and p.generator is not None:
        wg, pg, mp = w.generator, p.generator, w.midpoint
        dom = w.domain

        def gen(*xs):
            wv = np.maximum(np.asarray(wg(*xs), dtype=float), CLAMP_FLOOR)
            # exponent generators sample at lattice points even when the
            # weight uses midpoints; shift back for consistency
            off = dom.h / 2 if mp else 0.0
            pv = np.asarray(pg(*[np.asarray(x) - off for x in xs]), dtype=float)
            return wv ** (-1.0 / (pv - 1.0))

    return Weight(GridFunction(w.domain, sig), generator=gen, midpoint=w.midpoint)


def a_loc_var_constant(w: Weight, p: VariableExponent) -> MuckenhouptReport:
    """sup over cubes |Q| <= 1 of |Q|^{-1} ||chi_Q||_{p(.),w} ||chi_Q||_{p'(.),sigma}."""
    from .norms import batch_indicator_norms

    p.requires_class_p()
    d = w.domain
    pd = dual_exponent(p)
    sigma = dual_weight(w, p)
    best = -np.inf
    best_cube = None
    count = 0
    for k in level_range(d, 1.0):
        vol = (2.0 ** (-k)) ** d.dim
        for a in all_shifts(d.dim):
            n1, _ = batch_indicator_norms(p, w, k, a)
            n2, _ = batch_indicator_norms(pd, sigma, k, a)
            vals = n1 * n2 / vol
            count += vals.size
            j = int(np.argmax(vals))
            if vals[j] > best:
                best = float(vals[j])
                _, _, offsets = _flat_layout(d, k, a)
                best_cube = _cube_from_flat(d, k, a, j, offsets)
    return MuckenhouptReport(best, best_cube, count)


def q_w_estimate(
    w: Weight,
    tol: float = 1.0 / 32.0,
    cap: float = 64.0,
    threshold: float = Q_W_STABILITY,
) -> float:
    """Critical index: smallest p with a resolution-stable A_p^loc constant.

    Bisection over (1, cap]; requires a generator on the weight so the
    constant can be recomputed one level finer.
    """
    fine = w.at_level(w.domain.level + 1)

    def stable(p: float) -> bool:
        c0 = a_loc_p_constant(w, p).constant
        c1 = a_loc_p_constant(fine, p).constant
        return c1 <= threshold * c0

    if not stable(cap):
        raise ValueError("not in A^loc_infty numerically: unstable at the search cap")
    lo, hi = 1.0, cap
    # most weights are stable well below the cap; tighten before bisecting
    if stable(2.0):
        hi = 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if stable(mid):
            hi = mid
        else:
            lo = mid
    return hi


def tilde_a_constant(
    w: Weight, p: VariableExponent, max_side: float | None = None
) -> MuckenhouptReport:
    """Dyadic-grid variant: sup over cubes of one grid of
    |Q|^{-p_Q} ||w||_{L^1(Q)} ||w^{-1}||_{L^{p'(.)/p(.)}(Q)}."""
    from .norms import batch_restricted_norms

    p.requires_class_p()
    d = w.domain
    shift = (1,) * d.dim
    if max_side is None:
        max_side = 2.0 * d.half_width
    pv = p.values.samples
    ratio_exp = VariableExponent(
        GridFunction(d, pv / (pv - 1.0) / pv), p_infty=None
    )  # p'(.)/p(.) = 1/(p(.)-1)
    winv = 1.0 / w.values.samples
    ws = w.values.samples
    best = -np.inf
    best_cube = None
    count = 0
    for k in level_range(d, max_side):
        vol = (2.0 ** (-k)) ** d.dim
        hn = d.h ** d.dim
        qidx, ncubes, offsets = _flat_layout(d, k, shift)
        w_l1 = np.bincount(qidx.ravel(), weights=ws.ravel(), minlength=ncubes) * hn
        norms, _ = batch_restricted_norms(winv, ratio_exp, None, k, shift)
        occ = _occupancy(d, k, shift)
        # p_Q via harmonic mean of p over each cube
        inv_p = np.bincount(qidx.ravel(), weights=(1.0 / pv).ravel(), minlength=ncubes)
        cnt = np.bincount(qidx.ravel(), minlength=ncubes)
        with np.errstate(divide="ignore", invalid="ignore"):
            p_q = np.where(cnt > 0, cnt / np.maximum(inv_p, 1e-300), np.nan)
            vals = np.where(occ > 1.0 - 1e-9, vol ** (-p_q) * w_l1 * norms, -np.inf)
        count += vals.size
        j = int(np.argmax(vals))
        if vals[j] > best:
            best = float(vals[j])
            best_cube = _cube_from_flat(d, k, shift, j, offsets)
    return MuckenhouptReport(best, best_cube, count)


def stability_ratio(coarse: float, fine: float) -> float:
    """Finer-over-coarser constant ratio; > STABILITY_FACTOR flags blow-up."""
    if coarse <= 0:
        return math.inf
    return fine / coarse
