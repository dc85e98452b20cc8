"""Essential-spectrum estimation, threshold values and counting bounds.

The bottom of the essential spectrum is approached by puncturing the domain
with growing closed balls (Persson exhaustion): the punctured ground energies
increase monotonically toward Sigma.  A Richardson-style extrapolation
against 1/r provides the estimate and its uncertainty; compact-resolvent
sweeps (Sigma = infinity) are detected and reported as an IEEE infinity
sentinel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InsufficientSweep
from .geometry import DomainMask
from .operators import DiscreteForm, Potential, assemble, count_below, smallest_eigenpair

MONOTONE_SLACK = 1e-8


@dataclass
class PerssonSweep:
    """Ground energies of the domain punctured by closed balls of growing radius."""

    radii: list[float]
    lambdas: list[float]
    monotone_ok: list[bool]
    annulus_outer: Optional[list[float]] = None
    annulus_lambdas: Optional[list[float]] = None

    @property
    def window_too_small(self) -> bool:
        """Monotonicity violations signal radii too close to the window edge."""
        return not all(self.monotone_ok)

    def rows(self):
        return list(zip(self.radii, self.lambdas, self.monotone_ok))


def persson_sweep(base: DomainMask, V: Potential, radii: Sequence[float],
                  center=None, annulus_outer: Optional[Sequence[float]] = None,
                  tol: float = 1e-10) -> PerssonSweep:
    """lambda(Omega \\ closed ball B_r) for each r, with monotonicity diagnostics.

    When ``annulus_outer`` radii are given, also computes the Lemma-style
    refinement lambda(Omega intersect A_{r1, R}) for each R, using the
    smallest sweep radius as the inner radius.
    """
    rs = sorted(float(r) for r in radii)
    lams = []
    for r in rs:
        punctured = base.minus_closed_ball(r, center=center, label=f"punctured r={r:g}")
        punctured.require_nonempty()
        lam, _ = smallest_eigenpair(assemble(punctured, V), tol)
        lams.append(lam)
    ok = [True] + [b >= a - MONOTONE_SLACK for a, b in zip(lams, lams[1:])]
    sweep = PerssonSweep(rs, lams, ok)
    if annulus_outer:
        inner = rs[0]
        outs = sorted(float(R) for R in annulus_outer)
        ann = []
        for R in outs:
            shell = base.minus_closed_ball(inner, center=center).intersect_region(
                _ball_region(base.grid.dim, R, center), label=f"annulus ({inner:g},{R:g})"
            )
            shell.require_nonempty()
            lam, _ = smallest_eigenpair(assemble(shell, V), tol)
            ann.append(lam)
        sweep.annulus_outer = outs
        sweep.annulus_lambdas = ann
    return sweep


def _ball_region(dim, R, center):
    from .geometry import Ball

    c = (0.0,) * dim if center is None else tuple(center)
    return Ball(c, R)


def _richardson(r1, l1, r2, l2):
    """Extrapolate lambda(r) = Sigma - C/r to r = infinity from two samples."""
    return (l2 * r2 - l1 * r1) / (r2 - r1)


def sigma_estimate(sweep: PerssonSweep, cap: float = 1e3):
    """Estimate (Sigma, uncertainty) from a Persson sweep.

    Returns +inf when the sweep is increasing and either exceeds ``cap`` or
    its Richardson extrapolants diverge (compact-resolvent regime).
    """
    if len(sweep.radii) < 3:
        raise InsufficientSweep("need at least 3 radii to extrapolate")
    r, lam = sweep.radii, sweep.lambdas
    ext_prev = _richardson(r[-3], lam[-3], r[-2], lam[-2])
    ext_last = _richardson(r[-2], lam[-2], r[-1], lam[-1])
    increasing = lam[-1] > lam[0] + MONOTONE_SLACK
    diverging = ext_last > 2.0 * abs(ext_prev) + MONOTONE_SLACK and ext_prev > 0
    if increasing and (lam[-1] > cap or diverging):
        return math.inf, math.inf
    last = lam[-1]
    sane = min(lam) - abs(last) <= ext_last <= cap and np.isfinite(ext_last)
    sigma = ext_last if sane and ext_last >= last - MONOTONE_SLACK else last
    return float(sigma), float(abs(last - ext_last))


@dataclass
class ThresholdReport:
    """T_{k,p} and the strict threshold condition around a computed energy."""

    k: int
    p: float
    sigma: float
    lambda_prev: float
    threshold: float
    lambda_k: Optional[float] = None
    strict: Optional[bool] = None
    margin: Optional[float] = None
    sigma_uncertainty: float = 0.0

    def to_dict(self):
        return {
            "k": self.k,
            "p": None if math.isinf(self.p) else self.p,
            "sigma": self.sigma,
            "lambda_prev": self.lambda_prev,
            "threshold": self.threshold,
            "lambda_k": self.lambda_k,
            "strict": self.strict,
            "margin": self.margin,
        }


def p_norm(values: Sequence[float], p: float) -> float:
    """l^p norm of nonnegative values, overflow-safe for large p; max for p=inf."""
    vals = [float(v) for v in values]
    if any(math.isinf(v) for v in vals):
        return math.inf
    top = max(vals, default=0.0)
    if math.isinf(p) or top == 0.0:
        return top
    return top * sum((v / top) ** p for v in vals) ** (1.0 / p)


def threshold(k: int, p: float, sigma: float, lambda_prev: float,
              lambda_k: Optional[float] = None,
              sigma_uncertainty: float = 0.0) -> ThresholdReport:
    """Threshold value T_{k,p} = (Lambda_{k-1,p}^p + Sigma^p)^{1/p}, Sigma for p=inf.

    The strict flag, when a computed Lambda_{k,p} is supplied, requires
    lambda_k < T - sigma_uncertainty so the claim is robust to the Sigma
    error bar; an infinite threshold is trivially strict.
    """
    if sigma < 0 or lambda_prev < 0 or p < 1:
        raise ValueError("need sigma >= 0, lambda_prev >= 0 and p >= 1")
    if math.isinf(p):
        t = sigma
    else:
        t = p_norm([lambda_prev, sigma], p)
    report = ThresholdReport(k, p, sigma, lambda_prev, t,
                             sigma_uncertainty=sigma_uncertainty)
    if lambda_k is not None:
        report.lambda_k = float(lambda_k)
        report.margin = t - lambda_k
        report.strict = bool(math.isinf(t) or lambda_k < t - sigma_uncertainty)
    return report


@dataclass
class CountBoundReport:
    """N(c) against the partition counting numbers N~_p(c)."""

    c: float
    n_eigenvalues: int
    partition_counts: dict
    ok: bool

    def to_dict(self):
        return {
            "c": self.c,
            "N": self.n_eigenvalues,
            "partition_counts": {str(k): v for k, v in self.partition_counts.items()},
            "ok": self.ok,
        }


def count_bounds(form: DiscreteForm, c: float, partition_counts: dict) -> CountBoundReport:
    """Check N~_p(c) <= N~_inf(c) <= N(c); c must sit below the Sigma estimate.

    ``partition_counts`` maps p (float or inf) to the computed N~_p(c).
    """
    n = count_below(form, c)
    n_inf = partition_counts.get(math.inf)
    ok = True
    if n_inf is not None:
        ok &= n_inf <= n
        for p, np_count in partition_counts.items():
            if not math.isinf(p):
                ok &= np_count <= n_inf
    else:
        ok &= all(v <= n for v in partition_counts.values())
    return CountBoundReport(c, n, dict(partition_counts), bool(ok))
