"""Log-Sobolev and concentration inequalities as computable reports."""

from __future__ import annotations

import numpy as np

from .errors import NonPositiveFunctional
from .space import (
    Functional,
    ProductSpace,
    conditional_drop,
    conditional_prefix,
    expectation,
)
from .calculus import gradient_component


def entropy(space: ProductSpace, G: Functional) -> float:
    """E[G log G] - E[G] log E[G] for positive G."""
    if float(np.min(G.values)) <= 0.0:
        raise NonPositiveFunctional("entropy needs a pointwise positive functional")
    m = expectation(space, G)
    return expectation(space, G * G.apply(np.log)) - m * float(np.log(m))


def log_sobolev(space: ProductSpace, G: Functional) -> tuple[float, float]:
    """(entropy, modified gradient energy sum_k E[(D_kG)^2 / E[G|G_k]])."""
    space.require_exact()
    ent = entropy(space, G)
    rhs = 0.0
    for k in sorted(G.deps):
        DkG = gradient_component(space, G, k)
        denom = conditional_drop(space, G, k)
        rhs += expectation(space, DkG * DkG / denom)
    return ent, rhs


def ell(x: float, y: float) -> float:
    """(x+y)log(x+y) - x log x - (log x + 1)y; the Bregman gap of u log u.

    Satisfies 0 <= ell(x, y) <= y^2/x for x > 0, x + y >= 0.
    """
    xy = x + y
    first = 0.0 if xy == 0.0 else xy * np.log(xy)
    return float(first - x * np.log(x) - (np.log(x) + 1.0) * y)


def concentration(space: ProductSpace, F: Functional, order=None):
    """(M, tail bound x -> exp(-x^2 / 2M)) for P(F - E[F] >= x).

    M = sup over configurations of sum_k |D_kF| * E[|D_kF| | F_k].
    """
    space.require_exact()
    if order is None:
        order = list(range(space.n))
    order = list(order)
    total = space.constant(0.0)
    for pos, k in enumerate(order, start=1):
        absD = gradient_component(space, F, k).abs()
        total = total + absD * conditional_prefix(space, absD, pos, order)
    M = float(np.max(total.values))

    def tail_bound(x: float) -> float:
        if M == 0.0:
            return 1.0 if x <= 0.0 else 0.0
        if x <= 0.0:
            return 1.0
        return float(np.exp(-(x * x) / (2.0 * M)))

    return M, tail_bound


def exact_tail(space: ProductSpace, F: Functional, x: float) -> float:
    """P(F - E[F] >= x) by enumeration."""
    m = expectation(space, F)
    mask = (F.values - m) >= x
    return float(np.sum(space.weights[mask]))
