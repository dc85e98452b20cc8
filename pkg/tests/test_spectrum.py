import math

import numpy as np
import pytest

from specpart.errors import InsufficientSweep
from specpart.geometry import GridSpec, Rect, build_mask, full_window_mask
from specpart.operators import Potential, assemble
from specpart.spectrum import (
    PerssonSweep,
    count_bounds,
    p_norm,
    persson_sweep,
    sigma_estimate,
    threshold,
)

PI = math.pi


def halfline_mask(length=60.0, h=0.05):
    g = GridSpec.from_window([(0.0, length)], h)
    return build_mask(Rect((0.0,), (length,)), g)


class TestPerssonSweep:
    def test_axial_step_matches_truncated_exterior_oracle(self):
        # exterior problem past the step is -u'' + 5u on (r, X): the truncated
        # value is exactly 5 + (pi/(X - r))^2 up to O(h^2)
        X = 60.0
        mask = halfline_mask(X)
        sweep = persson_sweep(mask, Potential.axial_step(L=1.0, c=5.0), [5.0, 10.0, 20.0])
        for r, lam, ok in sweep.rows():
            assert ok
            assert lam == pytest.approx(5.0 + (PI / (X - r)) ** 2, abs=1e-4)

    def test_axial_step_approaches_sigma_on_large_window(self):
        mask = halfline_mask(length=300.0, h=0.05)
        sweep = persson_sweep(mask, Potential.axial_step(L=1.0, c=5.0), [50.0, 120.0, 200.0])
        assert abs(sweep.lambdas[-1] - 5.0) < 1e-3
        assert all(sweep.monotone_ok)
        # approach is monotone from the smallest-radius value upward
        assert sweep.lambdas == sorted(sweep.lambdas)

    def test_plane_no_potential_values_near_zero(self):
        g = GridSpec.from_window([(-20, 20), (-20, 20)], 0.5)
        m = full_window_mask(g)
        sweep = persson_sweep(m, Potential.zero(), [2.0, 3.0, 4.0])
        assert all(sweep.monotone_ok)
        assert max(sweep.lambdas) < 0.1

    def test_harmonic_sweep_increases_steeply(self):
        g = GridSpec.from_window([(-8, 8), (-8, 8)], 0.125)
        m = full_window_mask(g)
        sweep = persson_sweep(m, Potential.harmonic(), [2.0, 4.0, 6.0])
        assert sweep.lambdas[0] >= 4.0
        assert sweep.lambdas[2] >= 36.0

    def test_annulus_refinement_decreases_and_approaches(self):
        X = 60.0
        mask = halfline_mask(X)
        sweep = persson_sweep(mask, Potential.axial_step(L=1.0, c=5.0), [5.0, 10.0, 20.0],
                              annulus_outer=[30.0, 40.0, 55.0])
        ann = sweep.annulus_lambdas
        assert all(a >= b - 1e-8 for a, b in zip(ann, ann[1:]))
        # largest annulus nearly exhausts the window: matches the punctured value
        assert ann[-1] == pytest.approx(sweep.lambdas[0], abs=5e-2)
        assert ann[-1] >= sweep.lambdas[0] - 1e-8


class TestSigmaEstimate:
    def test_axial_step_sigma(self):
        mask = halfline_mask(60.0)
        sweep = persson_sweep(mask, Potential.axial_step(L=1.0, c=5.0), [5.0, 10.0, 20.0])
        sigma, unc = sigma_estimate(sweep)
        assert sigma == pytest.approx(5.0, abs=1e-2)
        assert unc < 1e-2

    def test_harmonic_gives_infinity_sentinel(self):
        g = GridSpec.from_window([(-8, 8), (-8, 8)], 0.125)
        sweep = persson_sweep(full_window_mask(g), Potential.harmonic(), [2.0, 4.0, 6.0])
        sigma, unc = sigma_estimate(sweep)
        assert math.isinf(sigma)

    def test_cap_rule(self):
        sweep = PerssonSweep([1.0, 2.0, 3.0], [10.0, 1500.0, 3000.0], [True, True, True])
        sigma, _ = sigma_estimate(sweep, cap=1e3)
        assert math.isinf(sigma)

    def test_insufficient(self):
        with pytest.raises(InsufficientSweep):
            sigma_estimate(PerssonSweep([1.0, 2.0], [0.1, 0.2], [True, True]))

    def test_flat_sweep_returns_value(self):
        sweep = PerssonSweep([1, 2, 3], [5.0, 5.0, 5.0], [True, True, True])
        sigma, unc = sigma_estimate(sweep)
        assert sigma == pytest.approx(5.0)
        assert unc == pytest.approx(0.0)


class TestThreshold:
    def test_k1_any_p_gives_sigma(self):
        for p in (1.0, 2.0, 7.5, math.inf):
            rep = threshold(1, p, sigma=3.7, lambda_prev=0.0)
            assert rep.threshold == pytest.approx(3.7, rel=1e-14)

    def test_arithmetic_example(self):
        rep = threshold(2, 1.0, sigma=5.0, lambda_prev=3.0)
        assert rep.threshold == pytest.approx(8.0, rel=1e-14)

    def test_p_inf_is_sigma(self):
        rep = threshold(3, math.inf, sigma=5.0, lambda_prev=4.0)
        assert rep.threshold == pytest.approx(5.0)

    def test_second_theorem_inequality(self):
        # T_{k,p} <= k^{1/p} Sigma whenever Lambda_{k-1} <= (k-1)^{1/p} Sigma
        rng = np.random.default_rng(5)
        for _ in range(100):
            k = int(rng.integers(1, 6))
            p = float(rng.uniform(1, 8))
            sigma = float(rng.uniform(0.1, 10))
            lam_prev = float(rng.uniform(0, (k - 1) ** (1 / p) * sigma)) if k > 1 else 0.0
            rep = threshold(k, p, sigma, lam_prev)
            assert rep.threshold <= k ** (1 / p) * sigma + 1e-12

    def test_strict_flag_subtracts_uncertainty(self):
        rep = threshold(2, 2.0, sigma=5.0, lambda_prev=3.0, lambda_k=5.7,
                        sigma_uncertainty=0.05)
        assert rep.strict is True
        rep2 = threshold(2, 2.0, sigma=5.0, lambda_prev=3.0, lambda_k=5.82,
                         sigma_uncertainty=0.05)
        assert rep2.strict is False  # 5.82 is within the error bar of T=5.831

    def test_infinite_sigma_trivially_strict(self):
        rep = threshold(4, 2.0, sigma=math.inf, lambda_prev=2.0, lambda_k=100.0)
        assert math.isinf(rep.threshold)
        assert rep.strict is True

    def test_monotone_in_k_given_chain(self):
        # feed the threshold its own computed energies as Lambda_prev
        sigma = 5.0
        lam = [0.0, 2.0, 4.2, 6.0]  # non-decreasing computed Lambda_{k,p}
        ts = [threshold(k, 2.0, sigma, lam[k - 1]).threshold for k in (1, 2, 3, 4)]
        assert all(a <= b + 1e-12 for a, b in zip(ts, ts[1:]))

    def test_monotone_and_continuous_in_p(self):
        # with Lambda_prev non-increasing in p, T is non-increasing and has no jumps
        ps = [1.0, 1.5, 2.0, 4.0, 8.0, 16.0, 64.0, math.inf]
        lam_prev = [4.0, 3.6, 3.3, 3.05, 3.0, 3.0, 3.0, 3.0]
        ts = [threshold(2, p, 5.0, lp).threshold for p, lp in zip(ps, lam_prev)]
        assert all(a >= b - 1e-12 for a, b in zip(ts, ts[1:]))
        assert ts[-2] == pytest.approx(ts[-1], rel=0.05)

    def test_validation(self):
        with pytest.raises(ValueError):
            threshold(1, 0.5, 1.0, 0.0)
        with pytest.raises(ValueError):
            threshold(1, 2.0, -1.0, 0.0)


class TestPNorm:
    def test_matches_numpy(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            v = rng.random(4) * 10
            p = float(rng.uniform(1, 30))
            assert p_norm(v, p) == pytest.approx(np.linalg.norm(v, ord=p), rel=1e-12)

    def test_large_p_no_overflow(self):
        assert p_norm([1e8, 2e8], 400.0) == pytest.approx(2e8, rel=1e-3)

    def test_inf_and_zero(self):
        assert p_norm([3.0, 4.0], math.inf) == 4.0
        assert p_norm([0.0, 0.0], 2.0) == 0.0
        assert math.isinf(p_norm([1.0, math.inf], 2.0))


class TestCountBounds:
    def square_form(self):
        g = GridSpec.from_window([(0, PI), (0, PI)], PI / 32)
        return assemble(build_mask(Rect((0, 0), (PI, PI)), g), Potential.zero())

    def test_square_chain(self):
        form = self.square_form()
        rep = count_bounds(form, 5.1, {1.0: 2, 2.0: 3, math.inf: 3})
        assert rep.n_eigenvalues == 3
        assert rep.ok

    def test_violation_flagged(self):
        form = self.square_form()
        rep = count_bounds(form, 4.9, {math.inf: 2})
        assert rep.n_eigenvalues == 1
        assert not rep.ok

    def test_c_below_lambda1(self):
        form = self.square_form()
        rep = count_bounds(form, 0.5, {1.0: 0, math.inf: 0})
        assert rep.n_eigenvalues == 0 and rep.ok
