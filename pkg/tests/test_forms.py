"""Forms and the discrete calculus: d, d*, Laplacians, norms, tensor products."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from villainlab.forms import (
    Form,
    TensorProduct,
    codifferential_d_star,
    delta,
    divergence,
    dump_text,
    embed,
    exterior_d,
    grad_tower_energy,
    gradient,
    gradient_tensor,
    inner_product,
    laplacian,
    laplacian_power,
    laplacian_power_ambient,
    load_form,
    norm_l1,
    norm_l2,
    norm_linf,
    random_form,
    restrict,
    save_form,
    zeros,
)
from villainlab.lattice import LatticeBox, OrientedCell, enumerate_cells

BOX3 = LatticeBox(3, 2)


class TestGradient:
    def test_constant_has_zero_gradient(self):
        u = zeros(BOX3, 0)
        u.values[:] = 5.0
        g = gradient(u)
        # zero on every edge not crossing the box edge (u is constant on Z^d
        # only up to the zero-extension outside the box)
        for i in (1, 2, 3):
            assert g.value_on(OrientedCell(1, (0, 0, 0), (i,))) == 0.0
            assert g.value_on(OrientedCell(1, (-1, 1, 0), (i,))) == 0.0

    def test_gradient_of_delta(self):
        u = delta(BOX3, OrientedCell(0, (0, 0, 0), ()))
        g = gradient(u)
        assert g.value_on(OrientedCell(1, (0, 0, 0), (1,))) == -1
        assert g.value_on(OrientedCell(1, (-1, 0, 0), (1,))) == 1
        assert g.value_on(OrientedCell(1, (0, 0, 0), (2,))) == -1

    def test_dirichlet_energy_of_delta(self):
        u = delta(BOX3, OrientedCell(0, (0, 0, 0), ()))
        g = gradient(u)
        assert inner_product(g, g) == 6  # 2d incident edges

    def test_wrong_degree(self):
        with pytest.raises(ValueError):
            gradient(zeros(BOX3, 1))


class TestLaplacian:
    def test_delta_at_center(self):
        u = delta(BOX3, OrientedCell(0, (0, 0, 0), ()))
        lu = laplacian(u)
        assert lu.value_on(OrientedCell(0, (0, 0, 0), ())) == -6
        assert lu.value_on(OrientedCell(0, (1, 0, 0), ())) == 1

    def test_constant_nonzero_only_near_boundary(self):
        u = zeros(BOX3, 0)
        u.values[:] = 1.0
        lu = laplacian(u)
        for idx, site in enumerate(BOX3.sites()):
            if BOX3.is_interior(site):
                assert lu.values[idx, 0] == 0.0
            else:
                assert lu.values[idx, 0] != 0.0

    def test_biharmonic_of_delta(self):
        # direct enumeration oracle: (-Delta)^2 delta_0 (0)
        #   = sum_{y~0} (Delta d(y) - Delta d(0)) with Delta d = -6 at 0, 1 at nbrs
        u = delta(BOX3, OrientedCell(0, (0, 0, 0), ()))
        l2u = laplacian_power(u, 2)
        oracle = sum(1 - (-6) for _ in range(6))
        assert l2u.value_on(OrientedCell(0, (0, 0, 0), ())) == oracle == 42

    def test_matches_div_grad(self):
        # Delta = divergence o gradient exactly, under zero-extension
        rng = np.random.default_rng(1)
        u = random_form(BOX3, 0, rng)
        lhs = embed(laplacian(u), BOX3.half_side + 2).values
        rhs = divergence(gradient(u)).values
        # Dirichlet Laplacian is the full-lattice one restricted to the box
        dg = divergence(gradient(u))
        assert np.allclose(restrict(dg, BOX3.half_side).values,
                           laplacian(u).values, atol=1e-13)
        assert lhs.shape == rhs.shape

    def test_power_validation(self):
        with pytest.raises(ValueError):
            laplacian_power(zeros(BOX3, 0), 0)


class TestExteriorDerivative:
    def test_gradient_is_closed(self):
        rng = np.random.default_rng(2)
        u = random_form(BOX3, 0, rng)
        dh = exterior_d(gradient(u))
        assert np.max(np.abs(dh.values)) < 1e-12

    def test_single_edge_on_face(self):
        h = delta(BOX3, OrientedCell(1, (0, 0, 0), (1,)))
        dh = exterior_d(h)
        assert dh.value_on(OrientedCell(2, (0, 0, 0), (1, 2))) == 1

    def test_dd_zero_integer_forms(self):
        rng = np.random.default_rng(3)
        box = LatticeBox(3, 4)
        for _ in range(200):
            h = random_form(box, 1, rng, integer=True)
            ddh = exterior_d(exterior_d(h))
            assert np.all(ddh.values == 0)

    def test_wrong_degree(self):
        with pytest.raises(ValueError):
            exterior_d(zeros(BOX3, 0))


class TestCodifferential:
    def test_single_face_on_edge(self):
        k = delta(BOX3, OrientedCell(2, (0, 0, 0), (1, 2)))
        dk = codifferential_d_star(k)
        assert dk.value_on(OrientedCell(1, (0, 0, 0), (1,))) == 1

    def test_single_cell_adjointness(self):
        h = delta(BOX3, OrientedCell(1, (0, 0, 0), (1,)))
        k = delta(BOX3, OrientedCell(2, (0, 0, 0), (1, 2)))
        dh = exterior_d(h)
        dstark = codifferential_d_star(k)
        lhs = inner_product(*_on_common(dh, embed(k, dh.box.half_side)))
        rhs = inner_product(*_on_common(embed(h, dstark.box.half_side), dstark))
        assert lhs == rhs == 1

    def test_adjointness_random(self):
        rng = np.random.default_rng(4)
        box = LatticeBox(3, 4)
        for _ in range(100):
            h = random_form(box, 1, rng)
            k = random_form(box, 2, rng)
            lhs = inner_product(*_on_common(exterior_d(h), k))
            rhs = inner_product(*_on_common(h, codifferential_d_star(k)))
            assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(lhs))

    def test_wrong_degree(self):
        with pytest.raises(ValueError):
            codifferential_d_star(zeros(BOX3, 1))


def _on_common(f, g):
    L = max(f.box.half_side, g.box.half_side)
    return embed(f, L), embed(g, L)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_adjointness_property(seed):
    rng = np.random.default_rng(seed)
    box = LatticeBox(3, 2)
    h = random_form(box, 1, rng)
    k = random_form(box, 2, rng)
    lhs = inner_product(*_on_common(exterior_d(h), k))
    rhs = inner_product(*_on_common(h, codifferential_d_star(k)))
    assert abs(lhs - rhs) < 1e-11 * max(1.0, abs(lhs))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_dd_zero_property(seed):
    rng = np.random.default_rng(seed)
    h = random_form(LatticeBox(3, 2), 1, rng, integer=True)
    assert np.all(exterior_d(exterior_d(h)).values == 0)


class TestInnerProductAndNorms:
    def test_delta_normalized(self):
        for cell in [OrientedCell(0, (0, 0, 0), ()), OrientedCell(2, (1, 0, -1), (1, 3))]:
            f = delta(BOX3, cell)
            assert inner_product(f, f) == 1

    def test_l1_of_elementary_charge(self):
        q = exterior_d(delta(BOX3, OrientedCell(1, (0, 0, 0), (1,))))
        assert norm_l1(q) == 4  # 2(d-1) faces of unit magnitude

    def test_cauchy_schwarz(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            f = random_form(BOX3, 1, rng)
            g = random_form(BOX3, 1, rng)
            assert abs(inner_product(f, g)) <= norm_l2(f) * norm_l2(g) + 1e-12

    def test_l2_squared_is_inner_product(self):
        rng = np.random.default_rng(6)
        f = random_form(BOX3, 2, rng)
        assert norm_l2(f) ** 2 == pytest.approx(inner_product(f, f), rel=1e-14)

    def test_norm_linf(self):
        f = zeros(BOX3, 1)
        f.values[3, 1] = -7.5
        assert norm_linf(f) == 7.5

    def test_box_mismatch(self):
        with pytest.raises(ValueError):
            inner_product(zeros(BOX3, 1), zeros(LatticeBox(3, 3), 1))


class TestTensorProduct:
    def test_single_entry(self):
        k = delta(BOX3, OrientedCell(2, (0, 0, 0), (1, 2)))
        t = TensorProduct(k, k)
        m = t((0, 0, 0), (0, 0, 0))
        assert m[0, 0] == 1
        assert np.count_nonzero(m) == 1

    def test_swap_transpose_symmetry(self):
        rng = np.random.default_rng(7)
        k = random_form(BOX3, 2, rng)
        l = random_form(BOX3, 2, rng)
        kl = TensorProduct(k, l)
        lk = TensorProduct(l, k)
        x, y = (1, 0, -1), (0, 2, 0)
        assert np.allclose(kl(x, y), lk(y, x).T)

    def test_matches_double_loop_oracle(self):
        rng = np.random.default_rng(8)
        k = random_form(BOX3, 2, rng, integer=True, lo=-2, hi=2)
        l = random_form(BOX3, 2, rng, integer=True, lo=-2, hi=2)
        # sparsify
        k.values[np.abs(k.values) < 2] = 0
        l.values[np.abs(l.values) < 2] = 0
        t = TensorProduct(k, l)
        for x in [(0, 0, 0), (1, -1, 0)]:
            for y in [(0, 0, 0), (-2, 1, 2)]:
                got = t(x, y)
                for a in range(3):
                    for b in range(3):
                        exp = k.values[BOX3.site_index(x), a] * l.values[BOX3.site_index(y), b]
                        assert got[a, b] == exp


class TestGradientTower:
    def test_first_order_matches_quadratic_form(self):
        rng = np.random.default_rng(9)
        f = random_form(BOX3, 2, rng)
        lhs = grad_tower_energy(f, 1)
        mlf = laplacian_power(f, 1)
        rhs = -inner_product(f, mlf)
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_energy_equals_ambient_laplacian_power_form(self):
        rng = np.random.default_rng(10)
        f = random_form(BOX3, 2, rng)
        for n in (1, 2, 3):
            lhs = grad_tower_energy(f, n)
            amb = laplacian_power_ambient(f, n)
            rhs = (-1) ** n * inner_product(embed(f, amb.box.half_side), amb)
            assert lhs == pytest.approx(rhs, rel=1e-11)

    def test_dirichlet_and_ambient_agree_away_from_boundary(self):
        f = delta(BOX3, OrientedCell(2, (0, 0, 0), (1, 2)))
        a = laplacian_power(f, 2)
        b = restrict(laplacian_power_ambient(f, 2), BOX3.half_side)
        assert np.array_equal(a.values, b.values)

    def test_tensor_shape(self):
        f = zeros(BOX3, 2)
        t = gradient_tensor(f, 2)
        side = BOX3.side + 4
        assert t.shape == (side, side, side, 3, 3, 3)


class TestSerialization:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(11)
        f = random_form(BOX3, 2, rng, integer=True)
        p = tmp_path / "form.vlf"
        save_form(f, p)
        g = load_form(p)
        assert g.degree == 2 and g.box == BOX3
        assert np.array_equal(f.values, g.values)

    def test_text_dump(self):
        f = delta(BOX3, OrientedCell(1, (1, 0, 0), (2,)))
        txt = dump_text(f)
        assert "(1, 0, 0)" in txt and "(2,)" in txt
