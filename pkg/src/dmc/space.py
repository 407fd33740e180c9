"""Finite product probability spaces and functionals on them.

A space is an ordered family of finitely supported coordinates.  Functionals
are real random variables stored as dense tensors over the configuration
grid (exact mode) or as black-box evaluators with a declared dependency set
(Monte-Carlo mode).  Everything downstream (gradient, divergence, semigroup,
Clark decompositions, ...) is built from the two conditioning primitives
defined here: integrating out a single coordinate and conditioning on a
prefix of a coordinate ordering.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
import yaml

from .errors import (
    EmptySupport,
    ExactModeOverflow,
    IndexOutOfRange,
    UnnormalizedPmf,
)

PMF_TOL = 1e-9
DEFAULT_EXACT_CEILING = 10**7


@dataclass(frozen=True)
class Coordinate:
    """One coordinate space: finite support with pmf and optional real embedding."""

    id: str
    labels: tuple
    pmf: np.ndarray
    embedding: np.ndarray | None = None

    def __post_init__(self):
        if len(self.labels) == 0:
            raise EmptySupport(f"coordinate {self.id!r} has empty support")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError(f"coordinate {self.id!r} has duplicate outcome labels")
        pmf = np.asarray(self.pmf, dtype=float)
        object.__setattr__(self, "pmf", pmf)
        if len(pmf) != len(self.labels):
            raise ValueError("pmf length does not match support size")
        if np.any(pmf <= 0):
            raise UnnormalizedPmf(f"coordinate {self.id!r} has non-positive pmf entries")
        if abs(pmf.sum() - 1.0) > PMF_TOL:
            raise UnnormalizedPmf(
                f"coordinate {self.id!r} pmf sums to {pmf.sum()!r}"
            )
        if self.embedding is not None:
            emb = np.asarray(self.embedding, dtype=float)
            if len(emb) != len(self.labels):
                raise ValueError("embedding length does not match support size")
            object.__setattr__(self, "embedding", emb)

    @property
    def size(self) -> int:
        return len(self.labels)


class ProductSpace:
    """Ordered product of coordinates; the order realizes the filtration."""

    def __init__(self, coords: Sequence[Coordinate], exact_ceiling: int = DEFAULT_EXACT_CEILING):
        self.coords = tuple(coords)
        if not self.coords:
            raise EmptySupport("a product space needs at least one coordinate")
        self.shape = tuple(c.size for c in self.coords)
        self.config_count = int(np.prod([c.size for c in self.coords], dtype=object))
        self.exact_ceiling = exact_ceiling
        self._weights = None

    @property
    def n(self) -> int:
        return len(self.coords)

    @property
    def exact(self) -> bool:
        return self.config_count <= self.exact_ceiling

    def require_exact(self):
        if not self.exact:
            raise ExactModeOverflow(
                f"{self.config_count} configurations exceed the exact-mode "
                f"ceiling {self.exact_ceiling}"
            )

    @property
    def weights(self) -> np.ndarray:
        """Product probability of every configuration, shape == self.shape."""
        if self._weights is None:
            self.require_exact()
            w = np.ones((), dtype=float)
            for c in self.coords:
                w = np.multiply.outer(w, c.pmf)
            self._weights = w
        return self._weights

    def check_axis(self, a: int):
        if not 0 <= a < self.n:
            raise IndexOutOfRange(f"coordinate index {a} out of range [0, {self.n})")

    def index_to_config(self, idx: int) -> tuple:
        return tuple(int(v) for v in np.unravel_index(idx, self.shape))

    def config_to_index(self, config: Sequence[int]) -> int:
        for a, v in enumerate(config):
            if not 0 <= v < self.shape[a]:
                raise IndexOutOfRange(f"outcome {v} invalid for coordinate {a}")
        return int(np.ravel_multi_index(tuple(config), self.shape))

    def embedding(self, a: int) -> np.ndarray:
        self.check_axis(a)
        emb = self.coords[a].embedding
        if emb is None:
            raise ValueError(f"coordinate {self.coords[a].id!r} has no real embedding")
        return emb

    # -- functional constructors -------------------------------------------

    def from_table(self, values) -> "Functional":
        self.require_exact()
        vals = np.asarray(values, dtype=float)
        if vals.size != self.config_count:
            raise ValueError("table length does not match configuration count")
        vals = vals.reshape(self.shape)
        return Functional(self, vals, deps=frozenset(range(self.n)))

    def from_evaluator(self, fn: Callable, deps: Iterable[int]) -> "Functional":
        """Materialize a black-box functional over its dependency grid.

        `fn` maps a configuration (tuple of outcome indices, one per
        coordinate) to a real; it must only look at coordinates in `deps`.
        """
        deps = frozenset(deps)
        for a in deps:
            self.check_axis(a)
        self.require_exact()
        dep_axes = sorted(deps)
        sub_shape = tuple(self.shape[a] for a in dep_axes)
        sub = np.empty(sub_shape if sub_shape else (), dtype=float)
        base = [0] * self.n
        for sub_idx in np.ndindex(*sub_shape) if sub_shape else [()]:
            cfg = list(base)
            for a, v in zip(dep_axes, sub_idx):
                cfg[a] = v
            sub[sub_idx] = fn(tuple(cfg))
        full_shape = tuple(
            self.shape[a] if a in deps else 1 for a in range(self.n)
        )
        vals = np.broadcast_to(sub.reshape(full_shape), self.shape).copy()
        return Functional(self, vals, deps=deps)

    def constant(self, c: float) -> "Functional":
        return Functional(self, np.full(self.shape, float(c)), deps=frozenset())

    def coordinate_functional(self, a: int) -> "Functional":
        """X_a through the coordinate's real embedding."""
        emb = self.embedding(a)
        shape = tuple(self.shape[a] if i == a else 1 for i in range(self.n))
        vals = np.broadcast_to(emb.reshape(shape), self.shape).copy()
        return Functional(self, vals, deps=frozenset({a}))

    def indicator(self, predicate: Callable, deps: Iterable[int]) -> "Functional":
        return self.from_evaluator(lambda cfg: 1.0 if predicate(cfg) else 0.0, deps)

    # -- sampling ----------------------------------------------------------

    def sample_configs(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """iid configurations, shape (size, n), entries are outcome indices."""
        cols = [
            rng.choice(c.size, size=size, p=c.pmf) for c in self.coords
        ]
        return np.stack(cols, axis=1)


class Functional:
    """Real random variable on a ProductSpace, stored as a dense tensor."""

    __slots__ = ("space", "values", "deps")

    def __init__(self, space: ProductSpace, values: np.ndarray, deps: frozenset):
        self.space = space
        self.values = values
        self.deps = frozenset(deps)

    def __call__(self, config: Sequence[int]) -> float:
        return float(self.values[tuple(config)])

    def _coerce(self, other):
        if isinstance(other, Functional):
            if other.space is not self.space:
                raise ValueError("functionals live on different spaces")
            return other.values, other.deps
        return float(other), frozenset()

    def __add__(self, other):
        v, d = self._coerce(other)
        return Functional(self.space, self.values + v, self.deps | d)

    __radd__ = __add__

    def __sub__(self, other):
        v, d = self._coerce(other)
        return Functional(self.space, self.values - v, self.deps | d)

    def __rsub__(self, other):
        v, d = self._coerce(other)
        return Functional(self.space, v - self.values, self.deps | d)

    def __mul__(self, other):
        v, d = self._coerce(other)
        return Functional(self.space, self.values * v, self.deps | d)

    __rmul__ = __mul__

    def __truediv__(self, other):
        v, d = self._coerce(other)
        return Functional(self.space, self.values / v, self.deps | d)

    def __neg__(self):
        return Functional(self.space, -self.values, self.deps)

    def abs(self) -> "Functional":
        return Functional(self.space, np.abs(self.values), self.deps)

    def apply(self, fn) -> "Functional":
        return Functional(self.space, fn(self.values), self.deps)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def scale(self) -> float:
        return max(1.0, self.sup_norm())


# -- core primitives -------------------------------------------------------


def build_space(coords: Sequence[Coordinate], exact_ceiling: int = DEFAULT_EXACT_CEILING) -> ProductSpace:
    return ProductSpace(coords, exact_ceiling=exact_ceiling)


def expectation(space: ProductSpace, F: Functional) -> float:
    return float(np.sum(F.values * space.weights))


def expectation_mc(
    space: ProductSpace,
    fn: Callable,
    rng: np.random.Generator,
    size: int,
) -> tuple[float, float]:
    """Sample mean and standard error of a black-box evaluator."""
    configs = space.sample_configs(rng, size)
    vals = np.array([fn(tuple(cfg)) for cfg in configs])
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(size))


def variance(space: ProductSpace, F: Functional) -> float:
    m = expectation(space, F)
    return float(np.sum((F.values - m) ** 2 * space.weights))


def integrate_out(space: ProductSpace, F: Functional, axes: Iterable[int]) -> Functional:
    """Condition on everything except `axes`: average those coordinates away."""
    vals = F.values
    axes = sorted(set(axes))
    for a in axes:
        space.check_axis(a)
        vals = np.tensordot(vals, space.coords[a].pmf, axes=([a], [0]))
        vals = np.expand_dims(vals, a)
    vals = np.broadcast_to(vals, space.shape).copy()
    return Functional(space, vals, F.deps - set(axes))


def conditional_drop(space: ProductSpace, F: Functional, a: int) -> Functional:
    """E[F | G_a]: integrate coordinate a out against its marginal."""
    space.check_axis(a)
    return integrate_out(space, F, [a])


def conditional_on(space: ProductSpace, F: Functional, keep: Iterable[int]) -> Functional:
    """E[F | X_keep]."""
    keep = set(keep)
    return integrate_out(space, F, set(range(space.n)) - keep)


def conditional_prefix(
    space: ProductSpace,
    F: Functional,
    k: int,
    order: Sequence[int] | None = None,
) -> Functional:
    """E[F | F_k] for the filtration generated by the first k coordinates of `order`."""
    if order is None:
        order = range(space.n)
    order = list(order)
    if sorted(order) != list(range(space.n)):
        raise IndexOutOfRange("order must be a permutation of the coordinates")
    if not 0 <= k <= space.n:
        raise IndexOutOfRange(f"prefix length {k} out of range")
    return conditional_on(space, F, order[:k])


def check_declared_dependencies(
    space: ProductSpace,
    fn: Callable,
    deps: Iterable[int],
    rng: np.random.Generator,
    trials: int = 50,
) -> bool:
    """Spot-check that `fn` ignores coordinates outside `deps`.

    Resamples one out-of-set coordinate at a time and compares evaluations.
    """
    deps = frozenset(deps)
    outside = [a for a in range(space.n) if a not in deps]
    if not outside:
        return True
    configs = space.sample_configs(rng, trials)
    for cfg in configs:
        cfg = tuple(int(v) for v in cfg)
        a = outside[rng.integers(len(outside))]
        alt = list(cfg)
        alt[a] = int(rng.choice(space.coords[a].size, p=space.coords[a].pmf))
        if fn(cfg) != fn(tuple(alt)):
            return False
    return True


# -- construction helpers and file format ----------------------------------


def rademacher_coordinate(cid: str = "x", p: float = 0.5) -> Coordinate:
    return Coordinate(
        id=cid,
        labels=("-1", "+1"),
        pmf=np.array([1.0 - p, p]),
        embedding=np.array([-1.0, 1.0]),
    )


def rademacher_space(n: int) -> ProductSpace:
    """n fair +-1 coordinates."""
    return build_space([rademacher_coordinate(f"x{i + 1}") for i in range(n)])


def iid_space(coord: Coordinate, n: int) -> ProductSpace:
    return build_space(
        [
            Coordinate(id=f"{coord.id}{i + 1}", labels=coord.labels, pmf=coord.pmf,
                       embedding=coord.embedding)
            for i in range(n)
        ]
    )


def space_from_file(path) -> ProductSpace:
    """Load a space description from a YAML file.

    Format::

        coords:
          - id: x1
            outcomes:
              - {label: "-1", p: 0.5, value: -1.0}
              - {label: "+1", p: 0.5, value: 1.0}
    """
    with open(path) as f:
        doc = yaml.safe_load(f)
    coords = []
    for entry in doc["coords"]:
        outcomes = entry["outcomes"]
        labels = tuple(str(o["label"]) for o in outcomes)
        pmf = np.array([float(o["p"]) for o in outcomes])
        if all("value" in o for o in outcomes):
            emb = np.array([float(o["value"]) for o in outcomes])
        else:
            emb = None
        coords.append(Coordinate(id=str(entry["id"]), labels=labels, pmf=pmf, embedding=emb))
    return build_space(coords)
