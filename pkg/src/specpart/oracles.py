"""Semi-analytic reference values for 1-D and separable 2-D problems.

Everything here is grid-free: closed forms and a bisection root, used as the
independent side of every numerical cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import BracketInvalid


def transcendental_root(L: float, c: float) -> float:
    """Unique bound-state energy of -u'' + c*1{x>L} u on the half line.

    Solves tan(sqrt(lam) L) = -1 / sqrt(c/lam - 1) by bisection on
    (pi^2/(4 L^2), c); the parameter window pi^2/(4L^2) < c < pi^2/L^2
    guarantees exactly one root.
    """
    if L <= 0 or c <= 0:
        raise BracketInvalid("need L > 0 and c > 0")
    lo = math.pi**2 / (4 * L**2)
    hi = math.pi**2 / L**2
    if not lo < c < hi:
        raise BracketInvalid(f"c={c} outside (pi^2/(4L^2), pi^2/L^2) = ({lo:.6g}, {hi:.6g})")

    def g(lam: float) -> float:
        return math.tan(math.sqrt(lam) * L) + 1.0 / math.sqrt(c / lam - 1.0)

    # g runs from -inf (just above lo) to +inf (just below c); bisect.
    a = lo * (1 + 1e-12)
    b = c * (1 - 1e-12)
    fa = g(a)
    if fa > 0 or g(b) < 0:
        raise BracketInvalid("root bracket lost; parameters out of range")
    for _ in range(200):
        mid = 0.5 * (a + b)
        if g(mid) <= 0:
            a = mid
        else:
            b = mid
        if b - a <= 1e-12 * max(1.0, a):
            break
    root = 0.5 * (a + b)
    if abs(g(root)) > 1e-9:
        raise BracketInvalid(f"bisection residual {g(root):.2e} too large")
    return root


@dataclass(frozen=True)
class HalfStripSpec:
    """Half-strip (0, inf) x (0, ell*pi) with the axial step potential (L, c)."""

    ell: float
    L: float
    c: float

    def __post_init__(self):
        if self.ell <= 0:
            raise BracketInvalid("need ell > 0")
        lo = math.pi**2 / (4 * self.L**2) if self.L > 0 else math.inf
        hi = math.pi**2 / self.L**2 if self.L > 0 else math.inf
        if self.L <= 0 or self.c <= 0 or not lo < self.c < hi:
            raise BracketInvalid("half-strip spec violates pi^2/(4L^2) < c < pi^2/L^2")

    @property
    def width(self) -> float:
        return self.ell * math.pi


def halfstrip_spectrum(spec: HalfStripSpec, count: int):
    """Point spectrum lam0 + j^2/ell^2 (j = 1..count), the essential infimum
    c + 1/ell^2, and the number m of eigenvalues strictly below it."""
    lam0 = transcendental_root(spec.L, spec.c)
    sigma = spec.c + 1.0 / spec.ell**2
    eigs = [lam0 + (j / spec.ell) ** 2 for j in range(1, count + 1)]
    j = 1
    while lam0 + (j / spec.ell) ** 2 < sigma:
        j += 1
    return eigs, sigma, j - 1


def rectangle_eigs(a: float, b: float, count: int):
    """Sorted Dirichlet Laplacian eigenvalues pi^2 (m^2/a^2 + n^2/b^2) of (0,a)x(0,b)."""
    if a <= 0 or b <= 0:
        raise BracketInvalid("need positive side lengths")
    # any value ranked <= count has both indices <= count
    vals = sorted(
        math.pi**2 * (m**2 / a**2 + n**2 / b**2)
        for m in range(1, count + 1)
        for n in range(1, count + 1)
    )
    return vals[:count]


def strip_room_energy(j: int) -> float:
    """First eigenvalue of the j-th 'room' rectangle in the strip partition.

    (pi/(pi - 1/j))^2 + (pi/(2^{2j} - 2^{2j-1}))^2, tending to 1 as j grows.
    """
    if j < 1:
        raise BracketInvalid("need j >= 1")
    width = math.pi - 1.0 / j
    inv_length = 2.0 ** (1 - 2 * j)  # 1 / (2^{2j} - 2^{2j-1}), exact, underflow-safe
    return (math.pi / width) ** 2 + (math.pi * inv_length) ** 2
