import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import exact_model, protocol_data
from zerosheet import (
    Image,
    UniPoly,
    ZeroPolynomialError,
    elementary_symmetric_coeffs,
    find_roots,
    slice_in_v,
    slice_roots,
    synth_image,
    unit_point,
    ztransform,
)
from zerosheet.zpoly import ROOT_TOL, BivariatePoly, residual_scale

ONES2 = Image([[1.0, 1.0], [1.0, 1.0]])


def separated_roots(seed: int, count: int, min_sep: float = 0.2) -> np.ndarray:
    rng = np.random.default_rng(seed)
    while True:
        roots = rng.uniform(-1.5, 1.5, count) + 1j * rng.uniform(-1.5, 1.5, count)
        if count == 1:
            return roots
        d = np.abs(roots[:, None] - roots[None, :])
        np.fill_diagonal(d, np.inf)
        if d.min() > min_sep:
            return roots


class TestZtransform:
    def test_single_pixel_constant(self):
        P = ztransform(Image([[1.0, 0.0], [0.0, 0.0]]))
        for u, v in [(0j, 0j), (1 + 1j, -2j), (0.5, 3.0)]:
            assert P.eval(u, v) == pytest.approx(0.25)

    def test_ones_factorization(self):
        P = ztransform(ONES2)
        assert P.eval(1.0, 1.0) == pytest.approx(1.0)
        rng = np.random.default_rng(0)
        for _ in range(5):
            u = complex(*rng.uniform(-1, 1, 2))
            v = complex(*rng.uniform(-1, 1, 2))
            assert P.eval(u, v) == pytest.approx((1 + u) * (1 + v) / 4)

    def test_degrees_and_prefactor(self):
        img = synth_image(6, 4, 3)
        P = ztransform(img)
        assert (P.degree_u, P.degree_v) == (5, 3)
        assert P.coeffs[2, 1] == img.pixels[1, 2] / 24

    def test_convolution_multiplies_transforms(self):
        # evaluation oracle: transforms of the factors, times the ratio of
        # the per-image 1/(width*height) prefactors
        f, h, g = exact_model(seed=5, fw=7, fh=6, m=3, n=2)
        Pf, Ph, Pg = ztransform(f), ztransform(h), ztransform(g)
        const = (f.width * f.height) * (h.width * h.height) / (g.width * g.height)
        rng = np.random.default_rng(1)
        for _ in range(5):
            u = complex(*rng.uniform(-0.9, 0.9, 2))
            v = complex(*rng.uniform(-0.9, 0.9, 2))
            lhs = Pg.eval(u, v)
            rhs = Pf.eval(u, v) * Ph.eval(u, v) * const
            assert abs(lhs - rhs) <= 1e-10 * max(abs(lhs), abs(rhs), 1e-3)


class TestSliceInV:
    def test_at_one(self):
        p = slice_in_v(ztransform(ONES2), 1.0)
        assert p.effective_degree == 1
        assert np.allclose(p.coeffs, [0.5, 0.5])

    def test_degenerate_at_minus_one(self):
        with pytest.raises(ZeroPolynomialError):
            slice_in_v(ztransform(ONES2), -1.0)

    def test_degenerate_near_minus_one(self):
        # floating-point unit-circle point never hits -1 exactly; the factor
        # (1 + u) still collapses every coefficient relative to the grid
        with pytest.raises(ZeroPolynomialError):
            slice_in_v(ztransform(ONES2), unit_point(np.pi))

    def test_at_zero_keeps_first_row(self):
        img = synth_image(5, 4, 9)
        P = ztransform(img)
        p = slice_in_v(P, 0.0)
        assert np.allclose(p.coeffs, P.coeffs[0])

    def test_trailing_trim(self):
        # top v-row cancels at u = 1: coefficients (x + y-independent) trick
        coeffs = np.zeros((2, 3), complex)
        coeffs[:, 0] = [1.0, 2.0]
        coeffs[:, 1] = [3.0, 1.0]
        coeffs[:, 2] = [1.0, -1.0]  # (1 - 1) at u = 1
        p = slice_in_v(BivariatePoly(coeffs), 1.0)
        assert p.effective_degree == 1


class TestFindRoots:
    def test_quadratic_pm1(self):
        roots, _ = find_roots(UniPoly([-1.0, 0.0, 1.0]))
        assert np.allclose(roots, [-1.0, 1.0])

    def test_quadratic_two_three(self):
        roots, _ = find_roots(UniPoly([6.0, -5.0, 1.0]))
        assert np.allclose(roots, [2.0, 3.0])

    def test_requires_degree_one(self):
        with pytest.raises(ValueError):
            find_roots(UniPoly([3.0]))

    def test_deterministic_order(self):
        p = UniPoly(elementary_symmetric_coeffs(separated_roots(3, 6)))
        r1, _ = find_roots(p)
        r2, _ = find_roots(p)
        assert np.array_equal(r1, r2)
        assert np.all(np.diff(r1.real) >= 0)

    def test_protocol_scale_slice(self):
        # degree-44 slice of the three-blur image: all roots polished below
        # the relative residual bound, checked by independent Horner evaluation
        _, _, observed = protocol_data()
        P = ztransform(observed)
        u = unit_point(0.3)
        p = slice_in_v(P, u)
        assert p.effective_degree == 44
        rs = slice_roots(P, u)
        assert rs.count == 44
        for root, res in zip(rs.roots, rs.residuals):
            # independent Horner evaluation as the residual oracle; both it
            # and the recorded residual must sit below the bound
            bound = ROOT_TOL * residual_scale(p.coeffs, root)
            assert abs(np.polyval(p.coeffs[::-1], root)) <= bound
            assert res <= bound

    def test_multiple_root_with_multiplicity(self):
        # (v - 1)^2 (v + 2) = v^3 - 3v + 2
        roots, _ = find_roots(UniPoly([2.0, -3.0, 0.0, 1.0]))
        assert len(roots) == 3
        assert sorted(np.round(roots.real, 4).tolist()) == [-2.0, 1.0, 1.0]

    def test_cluster_flag(self):
        g = np.array([0.5, 0.5 + 1e-8, -1.0])
        rs_coeffs = elementary_symmetric_coeffs(g)
        img_like = BivariatePoly(rs_coeffs.reshape(1, -1))
        rs = slice_roots(img_like, 0.7)
        assert rs.clustered


class TestElementarySymmetric:
    def test_single_root(self):
        assert np.allclose(elementary_symmetric_coeffs([2.0]), [-2.0, 1.0])

    def test_two_roots(self):
        assert np.allclose(elementary_symmetric_coeffs([2.0, 3.0]), [6.0, -5.0, 1.0])

    def test_empty(self):
        assert np.allclose(elementary_symmetric_coeffs([]), [1.0])

    def test_leading_is_exactly_one(self):
        c = elementary_symmetric_coeffs(separated_roots(11, 7))
        assert c[-1] == 1.0 + 0j

    @given(st.integers(0, 10**6), st.integers(1, 8))
    @settings(max_examples=60, deadline=None)
    def test_matches_product_evaluation(self, seed, count):
        # oracle: evaluate the monic product directly at probe points
        roots = separated_roots(seed, count, min_sep=0.0)
        c = elementary_symmetric_coeffs(roots)
        rng = np.random.default_rng(seed + 1)
        for _ in range(4):
            v = complex(*rng.uniform(-2, 2, 2))
            direct = np.prod([v - g for g in roots])
            horner = np.polyval(c[::-1], v)
            scale = max(abs(direct), abs(horner), 1.0)
            assert abs(direct - horner) <= 1e-12 * scale

    def test_matches_numpy_poly(self):
        roots = separated_roots(21, 6)
        ours = elementary_symmetric_coeffs(roots)
        ref = np.poly(roots)[::-1]  # ascending
        assert np.allclose(ours, ref, rtol=1e-12, atol=1e-12)

    @given(st.integers(0, 10**6), st.integers(1, 8))
    @settings(max_examples=60, deadline=None)
    def test_vieta_closure(self, seed, count):
        roots = separated_roots(seed, count)
        c = elementary_symmetric_coeffs(roots)
        got, _ = find_roots(UniPoly(c))
        err = np.max(np.abs(np.sort_complex(got) - np.sort_complex(roots)))
        assert err <= 1e-8


class TestZeroSubset:
    def test_blur_roots_inside_image_roots(self):
        # roots of the blur slice must reappear among the observed image's
        # slice roots at any sample point
        f, h, g = exact_model(seed=17, fw=10, fh=9, m=2, n=3)
        Pg, Ph = ztransform(g), ztransform(h)
        for k in range(5):
            u = unit_point(0.25 + 0.6 * k)
            hr = slice_roots(Ph, u).roots
            gr = slice_roots(Pg, u).roots
            worst = max(min(abs(a - b) for b in gr) for a in hr)
            assert worst <= 1e-6

    def test_scale_invariance_of_roots(self):
        img = synth_image(9, 8, 4)
        u = unit_point(0.4)
        base = slice_roots(ztransform(img), u).roots
        for s in (1000.0, 1e-3, 7.5):
            scaled = slice_roots(ztransform(img.scaled(s)), u).roots
            assert np.max(np.abs(scaled - base)) <= 1e-10

    def test_synth_image_slice_has_roots(self):
        rs = slice_roots(ztransform(synth_image(40, 40, 7)), unit_point(0.3))
        assert rs.count >= 1


class TestEval:
    def test_constant(self):
        P = BivariatePoly(np.array([[0.25 + 0j]]))
        assert P.eval(3 + 2j, -1j) == 0.25

    def test_ones_at_one_one(self):
        assert ztransform(ONES2).eval(1.0, 1.0) == pytest.approx(1.0)

    def test_vanishes_at_slice_roots(self):
        img = synth_image(8, 8, 6)
        P = ztransform(img)
        u = unit_point(0.3)
        p = slice_in_v(P, u)
        rs = slice_roots(P, u)
        for root in rs.roots:
            assert abs(P.eval(u, root)) <= ROOT_TOL * residual_scale(p.coeffs, root)
