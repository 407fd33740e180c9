"""Dirichlet-form convergence experiments on [0, 1].

Two approximating product structures and their limit forms:

* Poisson point process: N independent Poisson counts sitting on anchor
  points of an equal-mass partition of [0, 1] under a reference density.
  The product-space form converges to E[int |F(w + e_x) - F(w)|^2 dM(x)].
* Brownian motion: a random walk built from N orthonormal ramp functions
  h_k with iid standard Gaussian steps.  The product-space form converges
  to E[ ||grad F||_H^2 ].

Exact fast paths are provided for linear functionals; everything else is
Monte-Carlo with explicit RNG streams and reported standard errors.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import BadDensity, BadParameters, TruncationFailure

DENSITY_GRID = 8192
TRUNCATION_CAP = 400


# -- partition schemes --------------------------------------------------------


@dataclass(frozen=True)
class PartitionScheme:
    """Equal-mass cells of [0, 1] under a density, with mass-midpoint anchors."""

    N: int
    masses: np.ndarray
    anchors: np.ndarray
    boundaries: np.ndarray
    density: Callable
    mass_bound_constant: float  # recorded C with sup_k p_k <= C / N

    def riemann_gap(self, fns=None, quad_points: int = 512) -> float:
        """Max gap between sum p_k f(anchor_k) and int f dM on a test family."""
        if fns is None:
            fns = [
                lambda x: np.ones_like(x),
                lambda x: x,
                lambda x: x * x,
                lambda x: np.cos(3.0 * x),
                lambda x: np.exp(-x),
            ]
        nodes, weights = np.polynomial.legendre.leggauss(quad_points)
        x = 0.5 * (nodes + 1.0)
        w = 0.5 * weights * self.density(x)
        worst = 0.0
        for f in fns:
            riemann = float(np.sum(self.masses * f(self.anchors)))
            integral = float(np.sum(w * f(x)))
            worst = max(worst, abs(riemann - integral))
        return worst


def poisson_scheme(density: Callable, N: int) -> PartitionScheme:
    """Quantile partition of [0, 1] into N cells of mass 1/N each."""
    if N < 1:
        raise BadParameters(f"need N >= 1, got {N}")
    grid = np.linspace(0.0, 1.0, DENSITY_GRID + 1)
    d = np.asarray(density(grid), dtype=float)
    if d.shape != grid.shape:
        d = np.broadcast_to(d, grid.shape).astype(float)
    if not np.all(np.isfinite(d)) or np.any(d < 0.0):
        raise BadDensity("density must be finite and non-negative on [0, 1]")
    cdf = np.concatenate([[0.0], cumulative_trapezoid(d, grid)])
    total = cdf[-1]
    if not total > 0.0:
        raise BadDensity("density has zero total mass")
    if abs(total - 1.0) > 1e-6:
        raise BadDensity(f"density mass {total} is not 1")
    cdf = cdf / total
    levels = np.arange(0, N + 1) / N
    boundaries = np.interp(levels, cdf, grid)
    anchors = np.interp((np.arange(N) + 0.5) / N, cdf, grid)
    masses = np.full(N, 1.0 / N)
    return PartitionScheme(
        N=N,
        masses=masses,
        anchors=anchors,
        boundaries=boundaries,
        density=density,
        mass_bound_constant=float(N * masses.max()),
    )


# -- point configurations and functionals -------------------------------------


@dataclass(frozen=True)
class PointConfiguration:
    """Finite integer-valued measure on [0, 1]."""

    locations: tuple
    multiplicities: tuple

    def __post_init__(self):
        if len(self.locations) != len(set(self.locations)):
            raise BadParameters("locations must be distinct")
        if any(m < 1 for m in self.multiplicities):
            raise BadParameters("multiplicities must be >= 1")

    @property
    def total_mass(self) -> int:
        return int(sum(self.multiplicities))

    def add(self, x: float, m: int = 1) -> "PointConfiguration":
        locs, mults = list(self.locations), list(self.multiplicities)
        if x in locs:
            mults[locs.index(x)] += m
        else:
            locs.append(x)
            mults.append(m)
        return PointConfiguration(tuple(locs), tuple(mults))


def configuration_from_counts(anchors, counts) -> PointConfiguration:
    locs, mults = [], []
    for x, c in zip(anchors, counts):
        if c > 0:
            locs.append(float(x))
            mults.append(int(c))
    return PointConfiguration(tuple(locs), tuple(mults))


def tv_distance(a: PointConfiguration, b: PointConfiguration) -> int:
    """Number of distinct points counted with multiplicity."""
    ma = dict(zip(a.locations, a.multiplicities))
    mb = dict(zip(b.locations, b.multiplicities))
    return int(sum(abs(ma.get(x, 0) - mb.get(x, 0)) for x in set(ma) | set(mb)))


@dataclass(frozen=True)
class PointFunctional:
    """Functional of point configurations, assumed TV-Lipschitz.

    When `linear_coefficient` c is given the functional is declared linear
    in the counts, F(w) = sum_k m_k c(x_k), unlocking the exact path of the
    product-space form.
    """

    name: str
    fn: Callable
    linear_coefficient: Callable | None = None


def total_mass_functional() -> PointFunctional:
    return PointFunctional(
        name="total-mass",
        fn=lambda w: float(w.total_mass),
        linear_coefficient=lambda x: np.ones_like(np.asarray(x, dtype=float)),
    )


def capped_mass_functional(cap: int = 1) -> PointFunctional:
    return PointFunctional(name=f"capped-mass-{cap}", fn=lambda w: float(min(w.total_mass, cap)))


def constant_point_functional(c: float) -> PointFunctional:
    return PointFunctional(name="constant", fn=lambda w: c)


# -- Poisson product-space form ------------------------------------------------


@dataclass
class FormReport:
    value: float
    se: float
    exact: bool
    truncation_bound: float = 0.0


def _truncation_order(p: float, tail_eps: float, max_order: int) -> int:
    """Smallest T with Poisson(p) tail mass beyond T below tail_eps."""
    from scipy.stats import poisson

    for T in range(max_order + 1):
        if poisson.sf(T, p) < tail_eps:
            return T
    raise TruncationFailure(
        f"Poisson({p}) tail stays above {tail_eps} up to order {max_order}"
    )


def poisson_form(
    F: PointFunctional,
    scheme: PartitionScheme,
    tail_eps: float = 1e-9,
    rng: np.random.Generator | None = None,
    trials: int = 0,
    max_order: int = TRUNCATION_CAP,
) -> FormReport:
    """Product-space Dirichlet form of F on the N-cell approximation.

    sum_m E[(F(w) - E'[F(w_(m) + M'_m e_{anchor_m})])^2], the inner
    expectation truncated (and renormalized) where the Poisson tail falls
    below `tail_eps`; the discarded tail mass is reported.  Linear
    functionals take the exact route sum_m c(anchor_m)^2 p_m.
    """
    if not tail_eps > 0:
        raise BadParameters(f"tail_eps must be > 0, got {tail_eps}")
    p = scheme.masses
    if F.linear_coefficient is not None:
        c = np.asarray(F.linear_coefficient(scheme.anchors), dtype=float)
        return FormReport(value=float(np.sum(c * c * p)), se=0.0, exact=True)
    if trials <= 0 or rng is None:
        raise BadParameters("non-linear functionals need rng and trials > 0")
    from scipy.stats import poisson

    N = scheme.N
    orders = [_truncation_order(p[m], tail_eps, max_order) for m in range(N)]
    pmf = []
    for m, T in enumerate(orders):
        w = poisson.pmf(np.arange(T + 1), p[m])
        pmf.append(w / w.sum())
    trunc = float(sum(poisson.sf(T, p[m]) for m, T in enumerate(orders)))
    per_trial = np.empty(trials)
    for s in range(trials):
        counts = rng.poisson(p)
        total = 0.0
        for m in range(N):
            saved = counts[m]
            actual = F.fn(configuration_from_counts(scheme.anchors, counts))
            inner = 0.0
            for tau, w in enumerate(pmf[m]):
                counts[m] = tau
                inner += w * F.fn(configuration_from_counts(scheme.anchors, counts))
            counts[m] = saved
            total += (actual - inner) ** 2
        per_trial[s] = total
    return FormReport(
        value=float(per_trial.mean()),
        se=float(per_trial.std(ddof=1) / sqrt(trials)),
        exact=False,
        truncation_bound=trunc,
    )


def sample_poisson_process(
    scheme_or_density, rng: np.random.Generator
) -> PointConfiguration:
    """One draw of the Poisson point process with unit-mass control measure."""
    if isinstance(scheme_or_density, PartitionScheme):
        density = scheme_or_density.density
    else:
        density = scheme_or_density
    grid = np.linspace(0.0, 1.0, DENSITY_GRID + 1)
    d = np.maximum(np.asarray(density(grid), dtype=float), 0.0)
    cdf = np.concatenate([[0.0], cumulative_trapezoid(d, grid)])
    cdf /= cdf[-1]
    k = rng.poisson(1.0)
    locs = np.interp(rng.uniform(size=k), cdf, grid)
    cfg = PointConfiguration((), ())
    for x in locs:
        cfg = cfg.add(float(x))
    return cfg


def poisson_limit(
    F: PointFunctional,
    density: Callable,
    rng: np.random.Generator,
    trials: int = 2000,
    quad_points: int = 32,
) -> FormReport:
    """Monte-Carlo estimate of E[int |F(w + e_x) - F(w)|^2 dM(x)]."""
    nodes, weights = np.polynomial.legendre.leggauss(quad_points)
    x = 0.5 * (nodes + 1.0)
    w = 0.5 * weights * np.asarray(density(x), dtype=float)
    per_trial = np.empty(trials)
    for s in range(trials):
        cfg = sample_poisson_process(density, rng)
        base = F.fn(cfg)
        diffs = np.array([F.fn(cfg.add(float(xi))) - base for xi in x])
        per_trial[s] = float(np.sum(w * diffs**2))
    return FormReport(
        value=float(per_trial.mean()),
        se=float(per_trial.std(ddof=1) / sqrt(trials)),
        exact=False,
    )


# -- random-walk form ----------------------------------------------------------


@dataclass(frozen=True)
class WalkScheme:
    """N orthonormal ramp directions with iid standard Gaussian steps."""

    N: int

    def __post_init__(self):
        if self.N < 1:
            raise BadParameters(f"need N >= 1, got {self.N}")

    def sample_steps(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.normal(size=(size, self.N))


def h_gram(N: int) -> np.ndarray:
    """Exact Gram matrix of the ramp family in H (identity by construction)."""
    cells = np.eye(N) * sqrt(N)  # step-vector representation of e_k per cell
    return cells @ cells.T / N


@dataclass(frozen=True)
class WalkFunctional:
    """Linear path functional with known gradient coefficients.

    coeffs(N)[k] = <grad F, h_k^N>_H, so the product-space form is exactly
    sum_k coeffs(N)[k]^2 and the limit form is `limit`.
    """

    name: str
    coeffs: Callable
    limit: float

    def evaluate(self, steps: np.ndarray) -> np.ndarray:
        c = self.coeffs(steps.shape[-1])
        return steps @ c


def endpoint_functional() -> WalkFunctional:
    return WalkFunctional(
        name="endpoint",
        coeffs=lambda N: np.full(N, 1.0 / sqrt(N)),
        limit=1.0,
    )


def _tail_integral(g: Callable, grid: np.ndarray) -> np.ndarray:
    vals = np.asarray(g(grid), dtype=float)
    cum = np.concatenate([[0.0], cumulative_trapezoid(vals, grid)])
    return cum[-1] - cum


def weighted_integral_functional(g: Callable, name: str = "weighted") -> WalkFunctional:
    """F(w) = int_0^1 g(t) w(t) dt; gradient density is s -> int_s^1 g."""
    grid = np.linspace(0.0, 1.0, DENSITY_GRID + 1)
    tail = _tail_integral(g, grid)

    def coeffs(N: int) -> np.ndarray:
        out = np.empty(N)
        for k in range(N):
            lo, hi = k / N, (k + 1) / N
            cell = np.linspace(lo, hi, 65)
            vals = np.interp(cell, grid, tail)
            out[k] = sqrt(N) * np.trapezoid(vals, cell)
        return out

    limit = float(np.trapezoid(tail**2, grid))
    return WalkFunctional(name=name, coeffs=coeffs, limit=limit)


def time_integral_functional() -> WalkFunctional:
    """F(w) = int_0^1 w(t) dt with closed-form coefficients."""
    return WalkFunctional(
        name="time-integral",
        coeffs=lambda N: (1.0 - (np.arange(1, N + 1) - 0.5) / N) / sqrt(N),
        limit=1.0 / 3.0,
    )


def walk_form(
    F: WalkFunctional,
    scheme: WalkScheme,
    rng: np.random.Generator | None = None,
    trials: int = 0,
    inner: int = 64,
) -> FormReport:
    """Product-space form sum_k E[(F(w) - E'[F(w_(k) + M'_k h_k)])^2].

    The exact path uses the gradient coefficients; with `trials` > 0 a
    Monte-Carlo estimate with sub-sampled inner expectation is returned
    instead (agrees with the exact value for the linear built-ins).
    """
    c = np.asarray(F.coeffs(scheme.N), dtype=float)
    if trials <= 0 or rng is None:
        return FormReport(value=float(np.sum(c * c)), se=0.0, exact=True)
    steps = scheme.sample_steps(rng, trials)
    fresh = rng.normal(size=(trials, inner))
    inner_mean = fresh.mean(axis=1)
    per_trial = np.zeros(trials)
    for k in range(scheme.N):
        per_trial += (c[k] * (steps[:, k] - inner_mean)) ** 2
    return FormReport(
        value=float(per_trial.mean()),
        se=float(per_trial.std(ddof=1) / sqrt(trials)),
        exact=False,
    )


def walk_limit(F: WalkFunctional) -> float:
    """Analytic limit E[||grad F||_H^2] for the built-in family."""
    return F.limit
