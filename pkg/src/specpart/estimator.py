"""scikit-learn estimator facade for the partition optimizer.

``SpectralPartitioner`` is clustering-shaped: parameters in the constructor,
``fit`` on a discretized domain, learned per-point cell labels afterwards.
It composes with the usual sklearn tooling (``get_params`` / ``set_params``,
``clone``, ``fit_predict``).
"""

from __future__ import annotations

import math

from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.exceptions import NotFittedError

from .errors import ConfigError
from .geometry import DomainMask
from .operators import Potential
from .partition import optimize, optimize_pinf


def check_domain(X) -> DomainMask:
    if not isinstance(X, DomainMask):
        raise ConfigError("X must be a DomainMask (see specpart.geometry.build_mask)")
    X.require_nonempty()
    return X


def check_k_p(k, p):
    if not (isinstance(k, int) and k >= 1):
        raise ConfigError(f"k must be a positive integer, got {k!r}")
    pv = math.inf if p in ("inf", math.inf) else float(p)
    if pv < 1:
        raise ConfigError(f"p must be >= 1 or 'inf', got {p!r}")
    return k, pv


class SpectralPartitioner(ClusterMixin, BaseEstimator):
    """Partition a masked grid domain into k cells of minimal spectral energy.

    Parameters
    ----------
    k : number of cells.
    p : energy exponent, a float >= 1 or "inf" (handled by p-continuation).
    potential : Potential or None (None means V = 0).
    n_starts : multi-start count for the random Voronoi seeding.
    seed_policy : "auto" (axis splits + random Voronoi), "voronoi" or "axis".
    random_state : seed for all stochastic choices.
    rel_tol, patience, max_iters, tol : optimizer tolerances.

    Attributes (after fit)
    ----------------------
    labels_ : per-interior-point cell index, -1 for released points, aligned
        with ``X.points()`` row order.
    cell_energies_ : per-cell ground energies lambda(omega_i).
    energy_ : the optimized partition energy Lambda_{k,p}.
    equipartition_gap_ : max lambda_i - min lambda_i.
    n_iter_ : iterations of the winning run.
    state_, report_ : the underlying PartitionState and EnergyReport.
    """

    def __init__(self, k=2, p=2.0, potential=None, n_starts=8, seed_policy="auto",
                 random_state=0, rel_tol=1e-6, patience=3, max_iters=250, tol=1e-10):
        self.k = k
        self.p = p
        self.potential = potential
        self.n_starts = n_starts
        self.seed_policy = seed_policy
        self.random_state = random_state
        self.rel_tol = rel_tol
        self.patience = patience
        self.max_iters = max_iters
        self.tol = tol

    def fit(self, X, y=None):
        domain = check_domain(X)
        k, p = check_k_p(self.k, self.p)
        V = self.potential if self.potential is not None else Potential.zero()
        if not isinstance(V, Potential):
            raise ConfigError("potential must be a specpart.operators.Potential")
        kwargs = dict(n_starts=self.n_starts, seed_policy=self.seed_policy,
                      rng_seed=self.random_state, rel_tol=self.rel_tol,
                      patience=self.patience, max_iters=self.max_iters, tol=self.tol)
        if math.isinf(p):
            state, report = optimize_pinf(domain, V, k, **kwargs)
        else:
            state, report = optimize(domain, V, k, p, **kwargs)
        self.state_ = state
        self.report_ = report
        self.labels_ = state.labels()[domain.interior]
        self.cell_energies_ = list(state.cell_energies)
        self.energy_ = report.strong
        self.equipartition_gap_ = report.equipartition_gap
        self.n_iter_ = state.iteration + 1
        return self

    def fit_predict(self, X, y=None):
        return self.fit(X).labels_

    def predict(self, X=None):
        """Labels of the fitted domain (the partition is tied to its grid)."""
        if not hasattr(self, "labels_"):
            raise NotFittedError("call fit first")
        return self.labels_
