"""Discrete Dirichlet forms -Delta_h + V on masks and their low eigenpairs.

The form uses the standard 3-point (1-D) / 5-point (2-D) stencil with
Dirichlet rows eliminated: exterior points contribute zero.  All L2
quantities carry the midpoint quadrature weight h^d, so form energies and
norms are consistent with the continuum integrals they approximate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, eigsh

from .errors import ConfigError, EmptyMask, GridMismatch, NoConvergence, ZeroField
from .geometry import DomainMask

DEFAULT_TOL = 1e-10

# dense solves are faster and more robust below this size or when k ~ n
_DENSE_CUTOFF = 260


@dataclass(frozen=True)
class Potential:
    """Nonnegative potential V on the domain.

    Variants: zero; axial_step (0 for x <= L, c for x > L); radial_step
    (0 inside the ball of radius r, c outside); harmonic |x|^2; tabulated
    per-grid-point samples.
    """

    kind: str
    L: float = 0.0
    c: float = 0.0
    r: float = 0.0
    values: Optional[np.ndarray] = None

    @classmethod
    def zero(cls) -> "Potential":
        return cls("zero")

    @classmethod
    def axial_step(cls, L: float, c: float) -> "Potential":
        if L <= 0 or c <= 0:
            raise ConfigError("axial_step needs L > 0 and c > 0")
        return cls("axial_step", L=float(L), c=float(c))

    @classmethod
    def radial_step(cls, r: float, c: float) -> "Potential":
        if r <= 0 or c <= 0:
            raise ConfigError("radial_step needs r > 0 and c > 0")
        return cls("radial_step", r=float(r), c=float(c))

    @classmethod
    def harmonic(cls) -> "Potential":
        return cls("harmonic")

    @classmethod
    def tabulated(cls, values: np.ndarray) -> "Potential":
        arr = np.asarray(values, dtype=float)
        if np.any(arr < 0):
            raise ConfigError("tabulated potential has negative entries (V >= 0 required)")
        return cls("tabulated", values=arr)

    def on_mask(self, mask: DomainMask) -> np.ndarray:
        """Sample V at the mask's interior points (row-major order).

        Step potentials use the cell average over the midpoint cell of width h
        (a linear ramp across one cell at the jump).  Pointwise sampling would
        shift the effective step by h/2 and cost one order of accuracy.
        """
        if self.kind == "tabulated":
            if self.values.shape != mask.grid.counts:
                raise GridMismatch("tabulated potential shape does not match the grid")
            return self.values[mask.interior].astype(float)
        pts = mask.points()
        h = mask.grid.spacing
        if self.kind == "zero":
            return np.zeros(pts.shape[0])
        if self.kind == "axial_step":
            return self.c * np.clip((pts[:, 0] - self.L) / h + 0.5, 0.0, 1.0)
        if self.kind == "radial_step":
            d = np.sqrt(np.sum(pts**2, axis=1))
            return self.c * np.clip((d - self.r) / h + 0.5, 0.0, 1.0)
        if self.kind == "harmonic":
            return np.sum(pts**2, axis=1)
        raise ConfigError(f"unknown potential kind '{self.kind}'")


@dataclass
class Field:
    """Discrete H^1_{0,V} function: values on a mask's interior points, zero outside."""

    mask: DomainMask
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.mask.interior_count,):
            raise GridMismatch("field length does not match the mask's interior count")
        object.__setattr__(self, "values", v)

    @property
    def weight(self) -> float:
        return self.mask.grid.spacing ** self.mask.grid.dim

    def norm(self) -> float:
        return math.sqrt(self.weight * float(self.values @ self.values))

    def normalized(self) -> "Field":
        n = self.norm()
        if n == 0:
            raise ZeroField("cannot normalize the zero field")
        return Field(self.mask, self.values / n)

    def to_full(self) -> np.ndarray:
        """Values over the full window lattice, exterior = 0."""
        full = np.zeros(self.mask.grid.counts)
        full[self.mask.interior] = self.values
        return full

    def embed(self, base: DomainMask) -> "Field":
        """Zero-extend onto a larger mask on the same grid."""
        self.mask.same_grid(base)
        if not self.mask.is_subset_of(base):
            raise GridMismatch("field support is not contained in the target mask")
        full = self.to_full()
        return Field(base, full[base.interior])


@dataclass
class DiscreteForm:
    """Sparse symmetric PSD operator for the quadratic form a_V on a mask."""

    mask: DomainMask
    matrix: sparse.csr_matrix
    potential_diag: np.ndarray

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def weight(self) -> float:
        return self.mask.grid.spacing ** self.mask.grid.dim

    def apply(self, values: np.ndarray) -> np.ndarray:
        return self.matrix @ values

    def energy(self, u: Field) -> float:
        """Quadrature-weighted form energy sum(|grad_h u|^2 + V u^2)."""
        v = self._aligned(u)
        return self.weight * float(v @ (self.matrix @ v))

    def _aligned(self, u: Field) -> np.ndarray:
        if u.mask is self.mask or u.mask == self.mask:
            return u.values
        return u.embed(self.mask).values


def assemble(mask: DomainMask, V: Potential) -> DiscreteForm:
    """Assemble -Delta_h + V with Dirichlet rows eliminated."""
    mask.require_nonempty()
    grid = mask.grid
    h = grid.spacing
    m = mask.interior_count
    idx = -np.ones(grid.counts, dtype=np.int64)
    idx[mask.interior] = np.arange(m)

    vdiag = V.on_mask(mask)
    diag = vdiag + 2.0 * grid.dim / h**2
    rows, cols = [], []
    for axis in range(grid.dim):
        lo = [slice(None)] * grid.dim
        hi = [slice(None)] * grid.dim
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        both = mask.interior[tuple(lo)] & mask.interior[tuple(hi)]
        rows.append(idx[tuple(lo)][both])
        cols.append(idx[tuple(hi)][both])
    r = np.concatenate(rows) if rows else np.empty(0, dtype=np.int64)
    c = np.concatenate(cols) if cols else np.empty(0, dtype=np.int64)
    off = np.full(r.size, -1.0 / h**2)
    A = sparse.coo_matrix(
        (np.concatenate([diag, off, off]),
         (np.concatenate([np.arange(m), r, c]), np.concatenate([np.arange(m), c, r]))),
        shape=(m, m),
    ).tocsr()
    return DiscreteForm(mask, A, vdiag)


def rayleigh(form: DiscreteForm, u: Field) -> float:
    """<Au, u> / <u, u>; scale invariant and independent of the quadrature weight."""
    v = form._aligned(u)
    denom = float(v @ v)
    if denom == 0:
        raise ZeroField("Rayleigh quotient of the zero field")
    return float(v @ (form.matrix @ v)) / denom


def _max_iterations(n: int) -> int:
    return int(10 * math.isqrt(n)) + 1000


def _polish(A, lam, v, tol):
    """Rayleigh-quotient refinement: push the residual to the rounding floor.

    ARPACK's back-transformed residual on fine grids sits an order above
    eps * ||A||; one or two shifted solves recover it.
    """
    from scipy.sparse.linalg import splu

    n = A.shape[0]
    for _ in range(3):
        res = np.linalg.norm(A @ v - lam * v)
        if res <= tol:
            break
        try:
            lu = splu((A - lam * sparse.identity(n, format="csr")).tocsc())
            w = lu.solve(v)
        except RuntimeError:
            break
        norm = np.linalg.norm(w)
        if not np.isfinite(norm) or norm == 0:
            break
        w /= norm
        lam_new = float(w @ (A @ w))
        if np.linalg.norm(A @ w - lam_new * w) < res:
            v, lam = w, lam_new
        else:
            break
    return lam, v


def _finalize(form: DiscreteForm, lams: np.ndarray, vecs: np.ndarray, k: int,
              tol: float, iterations: int):
    order = np.argsort(lams)[:k]
    lams = lams[order].astype(float)
    vecs = vecs[:, order]
    hw = math.sqrt(form.weight)
    # float64 can never push ||Av - lam v|| below ~eps * ||A||; the contract
    # tolerance is therefore supplemented by this backward-error floor
    opnorm = float(np.abs(form.matrix).sum(axis=1).max())
    floor = 16 * np.finfo(float).eps * opnorm
    out = []
    ok = True
    for j in range(k):
        # with a unit vector, the weighted-norm residual of the weighted-
        # normalized eigenvector equals the plain relative residual
        v = vecs[:, j] / np.linalg.norm(vecs[:, j])
        lam = lams[j]
        target = tol * max(abs(lam), 1.0) + floor
        if np.linalg.norm(form.matrix @ v - lam * v) > target:
            lam, v = _polish(form.matrix, lam, v, target)
        res = np.linalg.norm(form.matrix @ v - lam * v)
        ok &= res <= target
        v = v / hw  # weighted L2 norm 1
        if v.sum() < 0:
            v = -v
        out.append((float(lam), Field(form.mask, v)))
    out.sort(key=lambda pair: pair[0])
    if not ok:
        raise NoConvergence(
            f"eigensolver residual exceeds tol {tol:.2e} plus the rounding floor",
            iterations=iterations, residual=res,
        )
    return out


def k_smallest(form: DiscreteForm, k: int, tol: float = DEFAULT_TOL):
    """The k smallest eigenpairs of the form, ascending, orthonormal vectors.

    Contract: each pair satisfies ||A u - lam u||_2 <= tol * max(lam, 1) in the
    weighted norm with ||u||_2 = 1.  Shift-invert ARPACK with a dense fallback
    for small or nearly full problems.
    """
    n = form.n
    if n == 0:
        raise EmptyMask("form has no degrees of freedom")
    if not 1 <= k <= n:
        raise ConfigError(f"k={k} outside 1..{n}")
    maxiter = _max_iterations(n)
    if n <= _DENSE_CUTOFF or k > n - 2:
        lams, vecs = np.linalg.eigh(form.matrix.toarray())
        return _finalize(form, lams, vecs, k, tol, iterations=0)
    v0 = np.full(n, 1.0 / math.sqrt(n))  # deterministic start vector
    try:
        lams, vecs = eigsh(form.matrix, k=k, sigma=0.0, which="LM", v0=v0,
                           maxiter=maxiter, tol=0)
    except ArpackNoConvergence as exc:
        raise NoConvergence("ARPACK did not converge", iterations=maxiter) from exc
    except ArpackError as exc:
        raise NoConvergence(f"ARPACK failure: {exc}", iterations=maxiter) from exc
    return _finalize(form, lams, vecs, k, tol, iterations=maxiter)


def smallest_eigenpair(form: DiscreteForm, tol: float = DEFAULT_TOL):
    """Ground state: minimal eigenvalue and the nonnegative-sum normalized eigenvector."""
    return k_smallest(form, 1, tol)[0]


def count_below(form: DiscreteForm, c: float, tol: float = DEFAULT_TOL) -> int:
    """Number of eigenvalues <= c, multiplicity counted (repeated deflation)."""
    n = form.n
    k = min(8, n)
    while True:
        pairs = k_smallest(form, k, tol)
        lams = np.array([lam for lam, _ in pairs])
        if lams[-1] > c or k == n:
            return int(np.count_nonzero(lams <= c))
        k = min(2 * k + 4, n)
