"""Coordinate-resampling semigroup: exact evaluation, jump simulator, resolvent.

P_t acts coordinate-wise: each coordinate is independently kept with
probability e^{-t} and resampled from its marginal otherwise.  The keep
probability is e^{-t}; the resampled branch has probability 1 - e^{-t},
which is the orientation forced by the commutation identity
D_a P_t = e^{-t} P_t D_a and by stationarity (see also
`mehler_apply_swapped`, kept so both conventions can be compared).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import exp, factorial
from typing import Sequence

import numpy as np

from .errors import ExactModeOverflow, NegativeTime
from .space import (
    Functional,
    ProductSpace,
    conditional_drop,
    conditional_prefix,
    expectation,
    integrate_out,
)
from .calculus import gradient_component

MAX_RESOLVENT_COORDS = 20


@dataclass
class Trajectory:
    """Jump record of the resampling process on [0, horizon]."""

    initial: tuple
    horizon: float
    events: list = field(default_factory=list)  # (time, coordinate, new outcome)

    def state_at(self, t: float) -> tuple:
        cfg = list(self.initial)
        for s, a, v in self.events:
            if s > t:
                break
            cfg[a] = v
        return tuple(cfg)


def _mix(space: ProductSpace, F: Functional, keep: float, frozen=()) -> Functional:
    out = F
    for a in sorted(F.deps - frozenset(frozen)):
        out = out * keep + conditional_drop(space, out, a) * (1.0 - keep)
    return out


def mehler_apply(space: ProductSpace, F: Functional, t: float, frozen=()) -> Functional:
    """P_t F: keep each coordinate with probability e^{-t}, else resample.

    `frozen` lists coordinates exempt from resampling; this realizes the
    semigroup acting on a gradient process, where the differentiated
    coordinate stays fixed.
    """
    if t < 0:
        raise NegativeTime(f"negative time {t}")
    return _mix(space, F, exp(-t), frozen)


def mehler_apply_swapped(space: ProductSpace, F: Functional, t: float) -> Functional:
    """Same mixture with the keep/resample weights exchanged (for comparison)."""
    if t < 0:
        raise NegativeTime(f"negative time {t}")
    return _mix(space, F, 1.0 - exp(-t))


def simulate(
    space: ProductSpace,
    x0: Sequence[int],
    horizon: float,
    rng: np.random.Generator,
) -> Trajectory:
    """Jump-chain sampler: Poisson clock of rate n, uniform coordinate, resample."""
    if horizon < 0:
        raise NegativeTime(f"negative horizon {horizon}")
    traj = Trajectory(initial=tuple(int(v) for v in x0), horizon=horizon)
    n = space.n
    t = rng.exponential(1.0 / n)
    while t <= horizon:
        a = int(rng.integers(n))
        v = int(rng.choice(space.coords[a].size, p=space.coords[a].pmf))
        traj.events.append((t, a, v))
        t += rng.exponential(1.0 / n)
    return traj


def simulate_terminal(
    space: ProductSpace,
    x0: Sequence[int],
    t: float,
    rng: np.random.Generator,
    size: int,
) -> np.ndarray:
    """Terminal states of `size` independent jump chains started at x0.

    Batched version of `simulate` keeping only the time-t state: draws the
    jump counts, coordinate choices and resampled outcomes for all
    replications at once.
    """
    if t < 0:
        raise NegativeTime(f"negative time {t}")
    n = space.n
    counts = rng.poisson(n * t, size=size)
    total = int(counts.sum())
    coords_hit = rng.integers(n, size=total)
    out = np.tile(np.asarray(x0, dtype=np.int64), (size, 1))
    resampled = np.empty(total, dtype=np.int64)
    for a in range(n):
        mask = coords_hit == a
        if mask.any():
            resampled[mask] = rng.choice(
                space.coords[a].size, size=int(mask.sum()), p=space.coords[a].pmf
            )
    # jumps within one trajectory are exchangeable given the count, so the
    # last resample of each coordinate can be read off in draw order
    offsets = np.concatenate([[0], np.cumsum(counts)])
    for i in range(size):
        lo, hi = offsets[i], offsets[i + 1]
        for j in range(lo, hi):
            out[i, coords_hit[j]] = resampled[j]
    return out


def beta_weight(k: int, n: int) -> float:
    """int_0^1 u^k (1-u)^{n-k} du = k! (n-k)! / (n+1)!."""
    return factorial(k) * factorial(n - k) / factorial(n + 1)


def resolvent(space: ProductSpace, G: Functional, frozen=()) -> Functional:
    """int_0^inf e^{-t} P_t G dt in closed form over subsets of dep(G).

    Coordinates in `frozen` are exempt from resampling, matching
    `mehler_apply(..., frozen=...)`.
    """
    deps = sorted(G.deps - frozenset(frozen))
    n = len(deps)
    if n > MAX_RESOLVENT_COORDS:
        raise ExactModeOverflow(
            f"resolvent over {n} coordinates exceeds the {MAX_RESOLVENT_COORDS}-coordinate cap"
        )
    out = space.constant(0.0)
    for r in range(n + 1):
        w = beta_weight(r, n)
        for K in combinations(deps, r):
            dropped = set(deps) - set(K)
            out = out + integrate_out(space, G, dropped) * w
    return out


def covariance_semigroup(
    space: ProductSpace,
    F: Functional,
    G: Functional,
    order: Sequence[int] | None = None,
    conditioned: bool = False,
) -> tuple[float, float]:
    """Both sides of the semigroup covariance identity.

    Default (exact) form::

        cov(F, G) = E[sum_k D_kF  int_0^inf e^{-t} P_t D_kG dt]

    where the semigroup inside the integral leaves coordinate k frozen — the
    integral is then exactly -D_k applied to the pseudo-inverse of the
    number operator at G, so the identity reduces to integration by parts
    and holds to machine precision.

    With ``conditioned=True``, D_kG is first replaced by E[D_kG | F_k]
    (conditioning on the first coordinates of `order`, up to and including
    k).  That is how the identity is sometimes stated, but the conditioned
    form is *not* exact: on fair +-1 coordinates with F = G = X1*X2 it
    yields 1/2 against cov = 1, because the cross-terms
    E[D_k E[F|F_k] * D_l P_t E[G|F_k]] with l != k do not vanish.  It is
    kept so the discrepancy stays observable.
    """
    space.require_exact()
    if order is None:
        order = list(range(space.n))
    order = list(order)
    lhs = expectation(space, F * G) - expectation(space, F) * expectation(space, G)
    rhs = 0.0
    for pos, k in enumerate(order, start=1):
        inner = gradient_component(space, G, k)
        if conditioned:
            inner = conditional_prefix(space, inner, pos, order)
        rhs += expectation(
            space,
            gradient_component(space, F, k) * resolvent(space, inner, frozen={k}),
        )
    return lhs, rhs


# -- validators -------------------------------------------------------------


def check_semigroup_law(space, F: Functional, s: float, t: float) -> float:
    lhs = mehler_apply(space, mehler_apply(space, F, s), t)
    rhs = mehler_apply(space, F, s + t)
    return (lhs - rhs).sup_norm()


def check_commutation(space, F: Functional, a: int, t: float) -> float:
    """Residual of D_a P_t F = e^{-t} P_t D_a F.

    On the right the semigroup acts on the gradient as a process: the
    differentiated coordinate a stays frozen (it is the argument of the
    process, not a coordinate to resample).  With the full semigroup on the
    right the identity would pick up a spurious extra factor e^{-t}.
    """
    lhs = gradient_component(space, mehler_apply(space, F, t), a)
    rhs = mehler_apply(space, gradient_component(space, F, a), t, frozen={a}) * exp(-t)
    return (lhs - rhs).sup_norm()


def check_contraction(space, F: Functional, t: float) -> tuple[float, float]:
    PtF = mehler_apply(space, F, t)
    return expectation(space, PtF * PtF), expectation(space, F * F)


def jump_kernel_matrix(space: ProductSpace) -> np.ndarray:
    """One-jump transition matrix on configuration indices."""
    space.require_exact()
    m = space.config_count
    P = np.zeros((m, m))
    n = space.n
    for idx in range(m):
        cfg = space.index_to_config(idx)
        for a in range(n):
            for v, p in enumerate(space.coords[a].pmf):
                new = list(cfg)
                new[a] = v
                P[idx, space.config_to_index(new)] += p / n
    return P


def check_stationarity(space: ProductSpace) -> float:
    """Sup distance between the product law and its one-jump pushforward."""
    P = jump_kernel_matrix(space)
    pi = space.weights.reshape(-1)
    return float(np.max(np.abs(pi @ P - pi)))
