import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dmc.errors import ArityError, BadKernel, NotIID
from dmc.space import Coordinate, build_space, iid_space, rademacher_space
from dmc.ustat import (
    SymmetricKernel,
    check_total_against_symmetric_clark,
    degeneracy_order,
    hoeffding_decompose,
    hoeffding_kernels,
    hoeffding_via_projections,
    symmetric_clark_groups,
    u_statistic,
)
from dmc.calculus import number_operator
from dmc.space import expectation

TOL = 1e-12

FAIR = Coordinate(
    id="x", labels=("-1", "+1"), pmf=np.array([0.5, 0.5]),
    embedding=np.array([-1.0, 1.0]),
)
# three-point coordinate with mean 0, variance 1, third moment 1
SKEWED = Coordinate(
    id="s",
    labels=("a", "b", "c"),
    pmf=np.array([1 / 3, 1 / 2, 1 / 6]),
    embedding=np.array([-1.0, 0.0, 2.0]),
)

PROD = SymmetricKernel(2, lambda x, y: x * y)
SUM2 = SymmetricKernel(2, lambda x, y: x + y)
SQSUM = SymmetricKernel(2, lambda x, y: (x + y) ** 2)


class TestKernel:
    def test_arity_validated(self):
        with pytest.raises(ArityError):
            SymmetricKernel(0, lambda: 1.0)

    def test_symmetry_check_catches_asymmetric(self, rng):
        bad = SymmetricKernel(2, lambda x, y: x - y)
        with pytest.raises(BadKernel):
            bad.check_symmetry(rng)
        PROD.check_symmetry(rng)


class TestUStatistic:
    def test_product_kernel_two_coords(self):
        sp = rademacher_space(2)
        U = u_statistic(sp, PROD, 2)
        want = sp.coordinate_functional(0) * sp.coordinate_functional(1)
        assert (U - want).sup_norm() <= TOL

    def test_identity_kernel_mean(self):
        sp = rademacher_space(3)
        U = u_statistic(sp, SymmetricKernel(1, lambda x: x), 3)
        want = (
            sp.coordinate_functional(0)
            + sp.coordinate_functional(1)
            + sp.coordinate_functional(2)
        ) * (1.0 / 3.0)
        assert (U - want).sup_norm() <= TOL

    def test_sum_kernel_three_coords(self):
        sp = rademacher_space(3)
        U = u_statistic(sp, SUM2, 3)
        want = (
            sp.coordinate_functional(0)
            + sp.coordinate_functional(1)
            + sp.coordinate_functional(2)
        ) * (2.0 / 3.0)
        assert (U - want).sup_norm() <= TOL

    def test_not_iid_rejected(self):
        mixed = build_space(
            [FAIR, Coordinate(id="y", labels=("0", "1"), pmf=np.array([0.3, 0.7]),
                              embedding=np.array([0.0, 1.0]))]
        )
        with pytest.raises(NotIID):
            u_statistic(mixed, PROD, 2)

    def test_too_few_coordinates_rejected(self):
        sp = rademacher_space(1)
        with pytest.raises(ArityError):
            u_statistic(sp, PROD, 1)


class TestRecursiveKernels:
    def test_product_kernel_fully_degenerate(self):
        k = hoeffding_kernels(PROD, FAIR)
        assert abs(k.theta) <= TOL
        assert np.max(np.abs(k.degenerate[0])) <= TOL
        assert np.max(np.abs(k.degenerate[1] - np.outer(FAIR.embedding, FAIR.embedding))) <= TOL

    def test_sum_kernel_first_order(self):
        k = hoeffding_kernels(SUM2, FAIR)
        assert abs(k.theta) <= TOL
        assert np.max(np.abs(k.degenerate[0] - FAIR.embedding)) <= TOL
        assert np.max(np.abs(k.degenerate[1])) <= TOL

    def test_squared_sum_kernel(self):
        k = hoeffding_kernels(SQSUM, FAIR)
        assert abs(k.theta - 2.0) <= TOL
        assert np.max(np.abs(k.degenerate[0])) <= TOL
        want = 2.0 * np.outer(FAIR.embedding, FAIR.embedding)
        assert np.max(np.abs(k.degenerate[1] - want)) <= TOL

    def test_degeneracy_orders(self):
        assert degeneracy_order(PROD, FAIR) == 2
        assert degeneracy_order(SUM2, FAIR) == 1
        assert degeneracy_order(SymmetricKernel(2, lambda x, y: 5.0), FAIR) is None

    def test_degenerate_kernel_eigenvalue(self):
        # U-statistic of a fully degenerate order-2 kernel is an eigenvector
        # of the number operator with eigenvalue -2.
        sp = rademacher_space(3)
        U = u_statistic(sp, PROD, 3)
        rep = hoeffding_decompose(sp, PROD, 3)
        centered = U - rep.theta
        assert (number_operator(sp, centered) + 2.0 * centered).sup_norm() <= TOL


class TestDecomposition:
    @pytest.mark.parametrize("base", [FAIR, SKEWED], ids=["fair", "skewed"])
    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_layers_reconstruct_and_match_projections(self, base, m):
        kernels = {
            1: SymmetricKernel(1, lambda x: x * x + x),
            2: SymmetricKernel(2, lambda x, y: x * y + (x + y) ** 2),
            3: SymmetricKernel(3, lambda x, y, z: x * y * z + x + y + z),
        }
        h = kernels[m]
        for n in range(m, 7):
            sp = iid_space(base, n)
            rep = hoeffding_decompose(sp, h, n)
            assert rep.residual <= 1e-12
            assert rep.max_off_diagonal <= 1e-10
            var, total = rep.variance_pair
            assert abs(var - total) <= 1e-10
            proj = hoeffding_via_projections(sp, h, n)
            for L, P in zip(rep.layers, proj):
                assert (L - P).sup_norm() <= 1e-11

    def test_product_kernel_single_layer(self):
        sp = rademacher_space(3)
        rep = hoeffding_decompose(sp, PROD, 3)
        U = u_statistic(sp, PROD, 3)
        assert rep.layers[0].sup_norm() <= TOL
        assert (rep.layers[1] - U).sup_norm() <= TOL

    def test_sum_kernel_single_layer(self):
        sp = rademacher_space(3)
        rep = hoeffding_decompose(sp, SUM2, 3)
        want = (
            sp.coordinate_functional(0)
            + sp.coordinate_functional(1)
            + sp.coordinate_functional(2)
        ) * (2.0 / 3.0)
        assert (rep.layers[0] - want).sup_norm() <= TOL
        assert rep.layers[1].sup_norm() <= TOL

    def test_constant_kernel(self):
        sp = rademacher_space(3)
        rep = hoeffding_decompose(sp, SymmetricKernel(2, lambda x, y: 4.0), 3)
        assert rep.theta == 4.0
        assert all(L.sup_norm() <= TOL for L in rep.layers)


class TestSymmetricClarkLink:
    @pytest.mark.parametrize("base", [FAIR, SKEWED], ids=["fair", "skewed"])
    def test_total_matches_order_free_clark(self, base):
        sp = iid_space(base, 4)
        for h in (PROD, SUM2, SQSUM):
            assert check_total_against_symmetric_clark(sp, h, 4) <= 1e-12

    def test_subset_size_groups_total_but_not_layerwise(self):
        # Pinned discrepancy: grouping the order-free Clark expansion by
        # subset size reconstructs U - theta, yet the groups differ from the
        # Hoeffding layers already for h(x,y) = x + y.
        sp = rademacher_space(3)
        groups = symmetric_clark_groups(sp, SUM2, 3)
        rep = hoeffding_decompose(sp, SUM2, 3)
        U = u_statistic(sp, SUM2, 3)
        total = sp.constant(rep.theta)
        for G in groups:
            total = total + G
        assert (total - U).sup_norm() <= TOL
        sum_x = (
            sp.coordinate_functional(0)
            + sp.coordinate_functional(1)
            + sp.coordinate_functional(2)
        )
        assert (groups[0] - sum_x * (1.0 / 3.0)).sup_norm() <= TOL
        assert (groups[1] - sum_x * (1.0 / 3.0)).sup_norm() <= TOL
        assert (groups[0] - rep.layers[0]).sup_norm() > 0.1
