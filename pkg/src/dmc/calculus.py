"""Operator core: gradient, divergence, number operator, ANOVA, trace form.

The gradient of F along coordinate a is F minus its conditional expectation
given all other coordinates; the divergence of a coordinate field U is the
sum of the per-coordinate gradients of its components.  The number operator
L = -sum_a D_a acts as multiplication by -|S| on the ANOVA component
supported on the coordinate subset S, which gives an exact pseudo-inverse
on centered functionals.
"""

from __future__ import annotations

from itertools import combinations
from typing import Dict, FrozenSet, Iterable, Mapping

import numpy as np

from .errors import ExactModeOverflow, NotCentered
from .space import (
    Functional,
    ProductSpace,
    conditional_drop,
    conditional_on,
    expectation,
)

MAX_ANOVA_COORDS = 20


class CoordinateField:
    """Indexed family of functionals U = (U_a); absent indices mean zero."""

    def __init__(self, space: ProductSpace, components: Mapping[int, Functional]):
        self.space = space
        self.components = dict(components)
        for a in self.components:
            space.check_axis(a)

    def indices(self):
        return sorted(self.components)

    def __getitem__(self, a: int) -> Functional:
        if a in self.components:
            return self.components[a]
        return self.space.constant(0.0)

    def __contains__(self, a: int) -> bool:
        return a in self.components


def gradient_component(space: ProductSpace, F: Functional, a: int) -> Functional:
    """D_a F = F - E[F | G_a]."""
    if a not in F.deps:
        return space.constant(0.0)
    return F - conditional_drop(space, F, a)


def gradient(space: ProductSpace, F: Functional) -> CoordinateField:
    return CoordinateField(
        space, {a: gradient_component(space, F, a) for a in sorted(F.deps)}
    )


def divergence(space: ProductSpace, U: CoordinateField) -> Functional:
    out = space.constant(0.0)
    for a in U.indices():
        out = out + gradient_component(space, U[a], a)
    return out


def number_operator(space: ProductSpace, F: Functional) -> Functional:
    out = space.constant(0.0)
    for a in sorted(F.deps):
        out = out - gradient_component(space, F, a)
    return out


class AnovaDecomposition:
    """Orthogonal expansion of F over subsets of its dependency set."""

    def __init__(self, space: ProductSpace, components: Dict[FrozenSet[int], Functional]):
        self.space = space
        self.components = components

    def component(self, subset: Iterable[int]) -> Functional:
        key = frozenset(subset)
        if key in self.components:
            return self.components[key]
        return self.space.constant(0.0)

    def reconstruct(self) -> Functional:
        out = self.space.constant(0.0)
        for comp in self.components.values():
            out = out + comp
        return out

    def order_sum(self, k: int) -> Functional:
        """Sum of all components supported on subsets of size k."""
        out = self.space.constant(0.0)
        for S, comp in self.components.items():
            if len(S) == k:
                out = out + comp
        return out


def anova(space: ProductSpace, F: Functional) -> AnovaDecomposition:
    """Moebius construction: F_S = sum_{T subset S} (-1)^{|S|-|T|} E[F | X_T]."""
    space.require_exact()
    deps = sorted(F.deps)
    if len(deps) > MAX_ANOVA_COORDS:
        raise ExactModeOverflow(
            f"ANOVA over {len(deps)} coordinates exceeds the {MAX_ANOVA_COORDS}-coordinate cap"
        )
    conditionals: Dict[FrozenSet[int], np.ndarray] = {}
    for r in range(len(deps) + 1):
        for T in combinations(deps, r):
            conditionals[frozenset(T)] = conditional_on(space, F, T).values
    components: Dict[FrozenSet[int], Functional] = {}
    for r in range(len(deps) + 1):
        for S in combinations(deps, r):
            Sf = frozenset(S)
            # product form of the Moebius sum: prod_{a in S} (I - E_a)
            # applied to E[F | X_S]; algebraically identical but without
            # the heavy cancellation of the alternating subset sum
            comp = Functional(space, conditionals[Sf].copy(), deps=Sf)
            for a in S:
                comp = comp - conditional_drop(space, comp, a)
            if Sf == frozenset() or comp.sup_norm() > 0.0:
                components[Sf] = comp
    return AnovaDecomposition(space, components)


def invert_number_operator(space: ProductSpace, F: Functional) -> Functional:
    """Pseudo-inverse of L on centered functionals: rescale ANOVA components."""
    mean = expectation(space, F)
    if abs(mean) > 1e-10 * F.scale():
        raise NotCentered(f"functional has mean {mean!r}")
    dec = anova(space, F)
    out = space.constant(0.0)
    for S, comp in dec.components.items():
        if len(S) == 0:
            continue
        out = out + comp * (-1.0 / len(S))
    return out


def trace_form(space: ProductSpace, U: CoordinateField, V: CoordinateField) -> float:
    """E[trace(DU o DV)] = E[sum_{a,b} D_a U_b D_b V_a]."""
    space.require_exact()
    total = 0.0
    for b in U.indices():
        for a in V.indices():
            dU = gradient_component(space, U[b], a)
            dV = gradient_component(space, V[a], b)
            total += expectation(space, dU * dV)
    return total


def field_inner(space: ProductSpace, U: CoordinateField, V: CoordinateField) -> float:
    """<U, V> in L2(A x E_A): sum_a E[U_a V_a]."""
    total = 0.0
    for a in set(U.indices()) | set(V.indices()):
        total += expectation(space, U[a] * V[a])
    return total


# -- identity validators ----------------------------------------------------


def check_integration_by_parts(space, F: Functional, U: CoordinateField):
    """<DF, U> vs E[F * sum_a D_a U_a]; returns (lhs, rhs, residual)."""
    lhs = field_inner(space, gradient(space, F), U)
    rhs = expectation(space, F * divergence(space, U))
    return lhs, rhs, abs(lhs - rhs)


def check_product_rule(space, F: Functional, G: Functional, a: int):
    """Pointwise residual of the gradient product rule for D_a(FG)."""
    lhs = gradient_component(space, F * G, a)
    rhs = (
        F * gradient_component(space, G, a)
        + G * gradient_component(space, F, a)
        - gradient_component(space, F, a) * gradient_component(space, G, a)
        - conditional_drop(space, F * G, a)
        + conditional_drop(space, F, a) * conditional_drop(space, G, a)
    )
    return (lhs - rhs).sup_norm()


def check_gradient_commutation(space, F: Functional, a: int, b: int) -> float:
    """Residual of D_a D_b F = D_b D_a F (and idempotence when a == b)."""
    ab = gradient_component(space, gradient_component(space, F, b), a)
    if a == b:
        return (ab - gradient_component(space, F, a)).sup_norm()
    ba = gradient_component(space, gradient_component(space, F, a), b)
    return (ab - ba).sup_norm()


def check_weitzenbock(space, U: CoordinateField, V: CoordinateField):
    """E[delta U delta V] vs E[trace(DU o DV)]."""
    lhs = expectation(space, divergence(space, U) * divergence(space, V))
    rhs = trace_form(space, U, V)
    return lhs, rhs, abs(lhs - rhs)


def check_innovation_identity(space, U: CoordinateField):
    """For U adapted to the coordinate order: E[(delta U)^2] vs innovation norm."""
    from .space import conditional_prefix

    dU = divergence(space, U)
    lhs = expectation(space, dU * dU)
    rhs = 0.0
    for k in U.indices():
        innov = U[k] - conditional_prefix(space, U[k], k)
        rhs += expectation(space, innov * innov)
    return lhs, rhs, abs(lhs - rhs)
