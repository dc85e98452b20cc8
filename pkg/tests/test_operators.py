import math

import numpy as np
import pytest

from specpart.errors import ConfigError, GridMismatch, ZeroField
from specpart.geometry import Ball, GridSpec, Rect, build_mask
from specpart.operators import (
    Field,
    Potential,
    assemble,
    count_below,
    k_smallest,
    rayleigh,
    smallest_eigenpair,
)

PI = math.pi


def interval_mask(n_cells=64, length=PI, lo=0.0):
    g = GridSpec.from_window([(lo, lo + length)], length / n_cells)
    return build_mask(Rect((lo,), (lo + length,)), g)


def square_mask(n_cells=32, side=PI):
    g = GridSpec.from_window([(0, side), (0, side)], side / n_cells)
    return build_mask(Rect((0, 0), (side, side)), g)


def fd_interval_eig(m, n_interior, h):
    """Exact m-th discrete Dirichlet eigenvalue of the 3-point stencil."""
    return (2 - 2 * math.cos(m * PI / (n_interior + 1))) / h**2


class TestPotential:
    def test_negative_tabulated_rejected(self):
        with pytest.raises(ConfigError):
            Potential.tabulated(np.array([[0.0, -1.0], [0.0, 0.0]]))

    def test_axial_step_sampling(self):
        m = interval_mask(10, length=10.0)
        v = Potential.axial_step(L=4.0, c=5.0).on_mask(m)
        xs = m.points()[:, 0]
        h = m.grid.spacing
        # cell-averaged step: 0 left of the jump cell, c right of it, c/2 on it
        assert (v[xs <= 4.0 - h / 2] == 0).all()
        assert (v[xs >= 4.0 + h / 2] == 5.0).all()
        assert v[np.abs(xs - 4.0) < h / 2] == pytest.approx(2.5)

    def test_radial_step_zero_inside(self):
        g = GridSpec.from_window([(-2, 2), (-2, 2)], 0.25)
        m = build_mask(Rect((-2, -2), (2, 2)), g)
        v = Potential.radial_step(r=1.0, c=3.0).on_mask(m)
        d = np.linalg.norm(m.points(), axis=1)
        h = g.spacing
        assert (v[d <= 1.0 - h / 2] == 0).all()
        assert (v[d >= 1.0 + h / 2] == 3.0).all()
        assert (v >= 0).all() and (v <= 3.0).all()

    @pytest.mark.parametrize("bad", [dict(L=0, c=5), dict(L=1, c=0), dict(L=-1, c=5)])
    def test_step_parameter_validation(self, bad):
        with pytest.raises(ConfigError):
            Potential.axial_step(**bad)

    def test_tabulated_wrong_shape(self):
        m = interval_mask(8)
        with pytest.raises(GridMismatch):
            Potential.tabulated(np.zeros(5)).on_mask(m)


class TestAssemble:
    def test_textbook_tridiagonal(self):
        # (0,pi), V=0, h=pi/4: stiffness is tridiag(-1,2,-1)/h^2 on 3 points
        m = interval_mask(4)
        form = assemble(m, Potential.zero())
        h = m.grid.spacing
        expected = np.array([[2, -1, 0], [-1, 2, -1], [0, -1, 2]]) / h**2
        assert np.allclose(form.matrix.toarray(), expected, rtol=0, atol=1e-14)

    def test_symmetry_and_positivity(self):
        rng = np.random.default_rng(3)
        g = GridSpec.from_window([(-2, 2), (-2, 2)], 0.2)
        m = build_mask(Ball((0.1, -0.3), 1.5), g)
        vals = rng.random(g.counts) * 2.0
        form = assemble(m, Potential.tabulated(vals))
        for _ in range(5):
            u = rng.standard_normal(form.n)
            v = rng.standard_normal(form.n)
            au_v = (form.matrix @ u) @ v
            u_av = u @ (form.matrix @ v)
            assert abs(au_v - u_av) <= 1e-12 * max(abs(au_v), 1.0)
            assert u @ (form.matrix @ u) >= 0

    def test_constant_field_energy_tends_to_c(self):
        # form_energy/||u||^2 -> c for a constant field on growing masks
        c = 3.0
        errs = []
        for n in (100, 200, 400, 800):
            m = interval_mask(n, length=float(n) / 2)
            form = assemble(m, Potential.tabulated(np.full(m.grid.counts, c)))
            u = Field(m, np.ones(form.n))
            errs.append(abs(form.energy(u) / u.norm() ** 2 - c))
        assert errs[-1] < errs[0] / 4
        assert errs[-1] < 0.02


class TestRayleigh:
    def test_eigenvector_gives_eigenvalue(self):
        form = assemble(square_mask(16), Potential.zero())
        lam, u = smallest_eigenpair(form)
        assert rayleigh(form, u) == pytest.approx(lam, rel=1e-12)

    def test_sampled_sine_near_one(self):
        m = interval_mask(256)
        form = assemble(m, Potential.zero())
        u = Field(m, np.sin(m.points()[:, 0]))
        assert rayleigh(form, u) == pytest.approx(1.0, abs=1e-3)

    def test_scale_invariance(self):
        m = interval_mask(32)
        form = assemble(m, Potential.zero())
        u = Field(m, np.sin(m.points()[:, 0]))
        r1 = rayleigh(form, u)
        r2 = rayleigh(form, Field(m, 2.0 * u.values))
        assert abs(r1 - r2) <= 1e-14 * abs(r1)

    def test_zero_field(self):
        m = interval_mask(8)
        form = assemble(m, Potential.zero())
        with pytest.raises(ZeroField):
            rayleigh(form, Field(m, np.zeros(form.n)))


class TestSmallestEigenpair:
    def test_interval_ground_state(self):
        m = interval_mask(128)
        form = assemble(m, Potential.zero())
        lam, u = smallest_eigenpair(form)
        h = m.grid.spacing
        assert lam == pytest.approx(fd_interval_eig(1, form.n, h), rel=1e-10)
        assert abs(lam - 1.0) < h**2
        # ground state matches the sine up to discretization error, sign fixed
        xs = m.points()[:, 0]
        ref = np.sin(xs)
        ref /= math.sqrt(h * ref @ ref)
        assert np.max(np.abs(u.values - ref)) < 1e-3
        assert u.values.sum() > 0

    def test_square_separable_value(self):
        m = square_mask(32)
        form = assemble(m, Potential.zero())
        lam, _ = smallest_eigenpair(form)
        h = m.grid.spacing
        exact_fd = 2 * (2 - 2 * math.cos(PI / 32)) / h**2  # k=1 mode per axis
        assert lam == pytest.approx(exact_fd, rel=1e-9)
        assert abs(lam - 2.0) < 5e-3

    def test_halfline_step_matches_transcendental_root(self):
        from specpart.oracles import transcendental_root

        g = GridSpec.from_window([(0, 30)], 1.0 / 200)
        m = build_mask(Rect((0,), (30,)), g)
        form = assemble(m, Potential.axial_step(L=1.0, c=5.0))
        lam, _ = smallest_eigenpair(form)
        assert lam == pytest.approx(transcendental_root(1.0, 5.0), abs=1e-4)

    def test_normalization(self):
        form = assemble(interval_mask(64), Potential.zero())
        _, u = smallest_eigenpair(form)
        assert u.norm() == pytest.approx(1.0, abs=1e-12)


class TestKSmallest:
    def test_square_first_three(self):
        form = assemble(square_mask(32), Potential.zero())
        pairs = k_smallest(form, 3)
        lams = [lam for lam, _ in pairs]
        assert lams == pytest.approx([2.0, 5.0, 5.0], abs=2e-2)

    def test_interval_first_two(self):
        form = assemble(interval_mask(128), Potential.zero())
        lams = [lam for lam, _ in k_smallest(form, 2)]
        assert lams == pytest.approx([1.0, 4.0], abs=2e-3)

    def test_orthonormal_gram(self):
        form = assemble(square_mask(24), Potential.zero())
        pairs = k_smallest(form, 4)
        w = form.weight
        V = np.stack([u.values for _, u in pairs], axis=1)
        gram = w * (V.T @ V)
        assert np.max(np.abs(gram - np.eye(4))) < 1e-8

    def test_k_exceeding_interior_count(self):
        form = assemble(interval_mask(4), Potential.zero())
        with pytest.raises(ConfigError):
            k_smallest(form, form.n + 1)

    def test_discrete_exactness_on_rectangle(self):
        # sparse path vs the closed-form discrete spectrum of a rectangle mask
        g = GridSpec.from_window([(0, 1.0), (0, 2.0)], 1.0 / 16)
        m = build_mask(Rect((0, 0), (1, 2)), g)
        form = assemble(m, Potential.zero())
        h = g.spacing
        exact = sorted(
            fd_interval_eig(a, 15, h) + fd_interval_eig(b, 31, h)
            for a in range(1, 6)
            for b in range(1, 6)
        )[:4]
        lams = [lam for lam, _ in k_smallest(form, 4)]
        assert lams == pytest.approx(exact, rel=1e-9)


class TestCountBelow:
    def test_square_counts(self):
        form = assemble(square_mask(32), Potential.zero())
        assert count_below(form, 4.9) == 1
        assert count_below(form, 5.1) == 3
        assert count_below(form, 1.0) == 0

    def test_counts_whole_spectrum_when_needed(self):
        form = assemble(interval_mask(6), Potential.zero())
        assert count_below(form, 1e9) == form.n


class TestInvariantProperties:
    def test_domain_monotonicity(self):
        rng = np.random.default_rng(17)
        g = GridSpec.from_window([(-2, 2), (-2, 2)], 0.2)
        for _ in range(20):
            c = rng.uniform(-0.5, 0.5, size=2)
            r1 = rng.uniform(0.5, 1.2)
            r2 = r1 + rng.uniform(0.1, 0.7)
            inner = build_mask(Ball(tuple(c), r1), g)
            outer = build_mask(Ball(tuple(c), r2), g)
            v = Potential.radial_step(r=0.7, c=2.0)
            lam_in, _ = smallest_eigenpair(assemble(inner, v))
            lam_out, _ = smallest_eigenpair(assemble(outer, v))
            assert lam_in >= lam_out - 1e-9

    def test_potential_monotonicity(self):
        rng = np.random.default_rng(23)
        m = square_mask(12)
        base = rng.random(m.grid.counts)
        bump = rng.random(m.grid.counts)
        lam_lo, _ = smallest_eigenpair(assemble(m, Potential.tabulated(base)))
        lam_hi, _ = smallest_eigenpair(assemble(m, Potential.tabulated(base + bump)))
        assert lam_hi >= lam_lo - 1e-9

    def test_rayleigh_dominates_ground_energy(self):
        rng = np.random.default_rng(29)
        form = assemble(square_mask(12), Potential.zero())
        lam, _ = smallest_eigenpair(form)
        for _ in range(10):
            u = Field(form.mask, rng.standard_normal(form.n))
            assert rayleigh(form, u) >= lam - 1e-10

    def test_second_order_convergence(self):
        errs = []
        for n in (64, 128):
            form = assemble(interval_mask(n), Potential.zero())
            lam, _ = smallest_eigenpair(form)
            errs.append(abs(lam - 1.0))
        assert 3.8 < errs[0] / errs[1] < 4.2


class TestField:
    def test_embed_zero_extends(self):
        g = GridSpec.from_window([(0, PI), (0, PI)], PI / 8)
        small = build_mask(Rect((0, 0), (PI / 2, PI)), g)
        big = build_mask(Rect((0, 0), (PI, PI)), g)
        u = Field(small, np.ones(small.interior_count))
        v = u.embed(big)
        assert v.values.sum() == pytest.approx(small.interior_count)
        assert v.norm() == pytest.approx(u.norm())

    def test_embed_requires_subset(self):
        g = GridSpec.from_window([(0, PI), (0, PI)], PI / 8)
        left = build_mask(Rect((0, 0), (PI / 2 + 0.1, PI)), g)
        right = build_mask(Rect((PI / 2, 0), (PI, PI)), g)
        u = Field(left, np.ones(left.interior_count))
        with pytest.raises(GridMismatch):
            u.embed(right)

    def test_normalized(self):
        m = interval_mask(16)
        u = Field(m, np.linspace(1, 2, m.interior_count)).normalized()
        assert u.norm() == pytest.approx(1.0, abs=1e-12)
        with pytest.raises(ZeroField):
            Field(m, np.zeros(m.interior_count)).normalized()
