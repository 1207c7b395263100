"""Grand maximal functions and the weighted local Hardy quasi-norm.

The supremum over the continuum ball of test functions is replaced by a
finite dictionary of normalized smooth bumps: each member satisfies
|D^alpha phi| <= 1 on its support ball for all orders up to N+1 (checked
by finite differences at build time, with margin 0.9).  The dictionary
supremum is a certified lower bound of the continuum one; equivalence
probes always compare like with like, i.e. the same dictionary on both
sides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import maximum_filter, maximum_filter1d

from .exponent import VariableExponent
from .grid import Domain, GridFunction, convolve, quadrature, rescale_mollifier
from .norms import luxemburg_norm
from .report import Report
from .weights import Weight, q_w_estimate, stability_ratio, STABILITY_FACTOR

__all__ = [
    "TestDictionary",
    "build_dictionary",
    "grand_maximal",
    "hardy_norm",
    "capital_n",
    "dirac_membership_check",
    "SMALL_RADIUS",
    "LARGE_RADIUS",
]

SMALL_RADIUS = 1.0
LARGE_RADIUS = 4.0  # stand-in for the astronomically large proof radius
DERIVATIVE_MARGIN = 0.9


@dataclass(frozen=True)
class TestDictionary:
    """Finite family of normalized test bumps.

    Every member is compactly supported in the ball of radius `radius`,
    with all finite-difference derivatives up to order `order` + 1 bounded
    by 1 there.  `nondegenerate` records that at least one member has
    nonvanishing integral, which makes the grand maximal function vanish
    only on the zero function.
    """

    domain: Domain
    radius: float
    order: int
    members: tuple[GridFunction, ...]
    masses: tuple[float, ...]
    seed: int

    @property
    def nondegenerate(self) -> bool:
        return any(abs(m) > 1e-12 for m in self.masses)


def _fd_derivative_sup(vals: np.ndarray, h: float, order: int, dim: int) -> float:
    """Max absolute finite-difference derivative over all orders <= order."""
    worst = float(np.max(np.abs(vals)))
    if dim == 1:
        cur = {(): vals}
        for total in range(1, order + 1):
            nxt = {}
            for key, arr in cur.items():
                darr = np.gradient(arr, h)
                nxt[key + (0,)] = darr
                worst = max(worst, float(np.max(np.abs(darr))))
            cur = nxt
        return worst
    # all mixed partials via repeated gradients along each axis
    frontier = {(0, 0): vals}
    for total in range(1, order + 1):
        nxt = {}
        for (ax_count_x, ax_count_y), arr in frontier.items():
            for ax in (0, 1):
                key = (ax_count_x + (ax == 0), ax_count_y + (ax == 1))
                if key in nxt:
                    continue
                darr = np.gradient(arr, h, axis=ax)
                nxt[key] = darr
                worst = max(worst, float(np.max(np.abs(darr))))
        frontier = nxt
    return worst


def _profiles(count: int, rng: np.random.Generator):
    """Analytic radial profiles on [0, 1): bump, modulations, perturbations."""

    def base(u):
        u2 = np.minimum(u * u, 1.0)
        with np.errstate(divide="ignore", over="ignore"):
            v = np.exp(1.0 - 1.0 / np.maximum(1.0 - u2, 1e-300))
        return np.where(u2 < 1.0, v, 0.0)

    profiles = [lambda u: base(u)]
    modulations = [
        lambda u: base(u) * np.cos(np.pi * u),
        lambda u: base(u) * np.sin(np.pi * u),
        lambda u: base(u) * np.cos(2 * np.pi * u),
        lambda u: base(u) * (1.0 - 2.0 * u * u),
    ]
    profiles.extend(modulations)
    while len(profiles) < count:
        coefs = rng.normal(scale=0.5, size=3)

        def perturbed(u, c=coefs):
            trig = 1.0 + c[0] * np.cos(np.pi * u) + c[1] * np.sin(2 * np.pi * u) + c[2] * np.cos(
                3 * np.pi * u
            )
            return base(u) * trig

        profiles.append(perturbed)
    return profiles[:count]


def build_dictionary(
    N: int,
    variant: str = "small",
    count: int = 8,
    domain: Domain | None = None,
    seed: int = 42,
    radius: float | None = None,
) -> TestDictionary:
    """Normalized bump dictionary of the requested derivative order.

    variant "small" supports members in the unit ball; "large" uses
    `radius` (default 4) and includes the small members, so the small and
    large dictionaries are nested.
    """
    if count < 4:
        raise ValueError("count must be at least 4")
    if domain is None:
        domain = Domain(1, 8, 9)
    if variant not in ("small", "large"):
        raise ValueError("variant must be 'small' or 'large'")
    r_d = SMALL_RADIUS if variant == "small" else (radius or LARGE_RADIUS)
    rng = np.random.default_rng(seed)
    profiles = _profiles(count, rng)
    if variant == "small":
        specs = [(i, SMALL_RADIUS) for i in range(count)]
    else:
        # first half identical to the small variant so the dictionaries nest
        n_small = count // 2
        specs = [(i, SMALL_RADIUS) for i in range(n_small)]
        specs += [(i, r_d) for i in range(count - n_small)]
    members: list[GridFunction] = []
    masses: list[float] = []
    r = domain.radius()
    for prof_i, rad in specs:
        vals = profiles[prof_i](r / (rad * 0.999))
        sup_d = _fd_derivative_sup(vals, domain.h, N + 1, domain.dim)
        if not np.isfinite(sup_d) or sup_d == 0.0:
            continue  # normalization failure: drop the member
        vals = vals * (DERIVATIVE_MARGIN / sup_d)
        member = GridFunction(domain, vals)
        members.append(member)
        masses.append(quadrature(member))
    return TestDictionary(domain, r_d, N, tuple(members), tuple(masses), seed)


def nested_dictionaries(
    N: int,
    count: int = 8,
    domain: Domain | None = None,
    seed: int = 42,
    radius: float | None = None,
) -> tuple[TestDictionary, TestDictionary]:
    """(small, large) pair with the small members a prefix of the large ones."""
    large = build_dictionary(N, "large", count, domain, seed, radius)
    small = build_dictionary(N, "small", count // 2, domain, seed)
    return small, large


def _offset_max(vals: np.ndarray, t_over_h: int, dim: int) -> np.ndarray:
    """sup over lattice offsets |z - x| < t of vals(z)."""
    w = t_over_h - 1  # strict inequality: offsets up to t/h - 1 cells
    if w <= 0:
        return vals
    if dim == 1:
        return maximum_filter1d(vals, size=2 * w + 1, mode="constant", cval=0.0)
    delta = np.arange(-w, w + 1)
    fp = delta[:, None] ** 2 + delta[None, :] ** 2 <= w * w
    return maximum_filter(vals, footprint=fp, mode="constant", cval=0.0)


def grand_maximal(f: GridFunction, dic: TestDictionary, mode: str = "MN") -> GridFunction:
    """Grand maximal function over the dictionary and dyadic scales t < 1.

    mode "M0" and "Mbar0" take the sup of |phi_t * f(x)| over members and
    scales; "MN" additionally takes the sup over lattice offsets |z-x| < t.
    The scale floor is 4h so the discrete convolutions stay faithful.
    """
    if mode not in ("M0", "Mbar0", "MN"):
        raise ValueError("mode must be M0, Mbar0 or MN")
    d = f.domain
    if dic.domain != d:
        raise ValueError("dictionary and function domains differ")
    out = np.zeros(d.shape)
    j_max = d.level - 2  # t >= 4h
    for member in dic.members:
        for j in range(0, j_max + 1):
            t = 2.0 ** (-j)
            phi_t = rescale_mollifier(member, t)
            conv = np.abs(convolve(f, phi_t).samples)
            if mode == "MN":
                conv = _offset_max(conv, 1 << (d.level - j), d.dim)  # t/h cells
            np.maximum(out, conv, out=out)
    return GridFunction(d, out)


def capital_n(p: VariableExponent, w: Weight) -> int:
    """Order threshold 2 + floor(n (q_w / min(1, p_minus) - 1))."""
    q_w = q_w_estimate(w)
    n = p.domain.dim
    return 2 + math.floor(n * (q_w / min(1.0, p.p_minus) - 1.0))


def hardy_norm(
    f: GridFunction,
    p: VariableExponent,
    w: Weight | None,
    dic: TestDictionary,
    check_order: bool = True,
) -> float:
    """Luxemburg norm of the offset grand maximal function."""
    if check_order and w is not None:
        needed = capital_n(p, w)
        if dic.order < needed:
            raise ValueError(
                f"dictionary order {dic.order} below the required threshold {needed}"
            )
    return luxemburg_norm(grand_maximal(f, dic, "MN"), p, w)


def dirac_membership_check(
    p: VariableExponent, w: Weight, threshold: float = STABILITY_FACTOR
) -> Report:
    """Two-resolution integrability probe for the point-mass criterion.

    Evaluates the clamped-midpoint integral of |x|^{-n p(x)} w(x) over the
    unit ball at levels m and m+1; a stable value means the point mass
    belongs to the space.
    """
    d = p.domain

    def integral(pp: VariableExponent, ww: Weight) -> float:
        dd = pp.domain
        half = dd.h / 2
        if dd.dim == 1:
            r = np.abs(dd.axis() + half)
        else:
            x, y = dd.coords()
            r = np.hypot(x + half, y + half)
        mask = r < 1.0
        integrand = np.where(mask, r ** (-dd.dim * pp.values.samples), 0.0)
        return dd.h ** dd.dim * float(np.sum(integrand * ww.values.samples))

    i0 = integral(p, w)
    i1 = integral(p.at_level(d.level + 1), w.at_level(d.level + 1))
    ratio = stability_ratio(i0, i1)
    return Report(
        "dirac_membership_check",
        passed=ratio <= threshold,
        quantities={"integral_m": i0, "integral_m1": i1, "ratio": ratio},
    )
