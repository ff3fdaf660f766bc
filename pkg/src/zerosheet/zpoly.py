"""Bivariate z-transform polynomials, univariate slices, and root finding.

A W x H image g maps to the polynomial

    G(u, v) = (1 / (W * H)) * sum_{x, y} g(x, y) u^x v^y

with complex u, v.  Fixing u gives a univariate polynomial in v whose roots
are the image's zero values at that sample point; convolution multiplies
transforms, so the zero values of a convolved-in blur are a subset of the
image's zero values at every u.  The 1/(W*H) prefactor only rescales the
coefficients and never moves a root.

Coefficient grids are indexed ``coeffs[x, y]`` (x along u, y along v), the
transpose of the image pixel layout.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .errors import RootFindingError, ZeroPolynomialError
from .image import Image

__all__ = [
    "TRIM_TOL",
    "ROOT_TOL",
    "CLUSTER_TOL",
    "BivariatePoly",
    "UniPoly",
    "RootSlice",
    "ztransform",
    "slice_in_v",
    "find_roots",
    "slice_roots",
    "residual_scale",
    "elementary_symmetric_coeffs",
]

# Relative threshold below which a trailing slice coefficient counts as zero.
TRIM_TOL = 1e-12
# Relative residual bound every polished root must satisfy.
ROOT_TOL = 1e-9
# Pairwise distance below which roots of one slice count as clustered.
CLUSTER_TOL = 1e-6

_NEWTON_MAX_ITER = 40


@dataclass(frozen=True, eq=False)
class BivariatePoly:
    """Polynomial sum of ``coeffs[x, y] * u**x * v**y``."""

    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.array(self.coeffs, dtype=np.complex128)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("coefficient grid must be a non-empty 2D array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coefficients must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @property
    def degree_u(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def degree_v(self) -> int:
        return self.coeffs.shape[1] - 1

    def eval(self, u: complex, v: complex) -> complex:
        """Nested Horner evaluation, outer in u, inner in v."""
        acc = 0j
        for x in range(self.coeffs.shape[0] - 1, -1, -1):
            acc = acc * u + _horner(self.coeffs[x], v)
        return acc


def ztransform(img: Image) -> BivariatePoly:
    """z-transform of an image: coefficient (x, y) is pixel (x, y) / (W * H)."""
    scale = img.width * img.height
    return BivariatePoly(img.pixels.T.astype(np.complex128) / scale)


@dataclass(frozen=True, eq=False)
class UniPoly:
    """Univariate complex polynomial, ascending coefficients, trailing-trimmed."""

    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.array(self.coeffs, dtype=np.complex128)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("coefficients must form a non-empty 1D array")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @property
    def effective_degree(self) -> int:
        return len(self.coeffs) - 1

    def eval(self, v: complex) -> complex:
        return _horner(self.coeffs, v)


def _horner(coeffs: np.ndarray, z: complex) -> complex:
    acc = 0j
    for a in coeffs[::-1]:
        acc = acc * z + a
    return complex(acc)


def _horner_pair(coeffs: np.ndarray, z: complex) -> tuple[complex, complex]:
    """Value and first derivative in one pass."""
    b = 0j
    db = 0j
    for a in coeffs[::-1]:
        db = db * z + b
        b = b * z + a
    return complex(b), complex(db)


def slice_in_v(P: BivariatePoly, u: complex, trim_tol: float = TRIM_TOL) -> UniPoly:
    """Fix u and collapse to the polynomial in v.

    Coefficient y of the result is ``sum_x coeffs[x, y] * u**x``.  Trailing
    coefficients whose magnitude falls below ``trim_tol`` times the largest
    slice coefficient are trimmed, so the effective degree can drop below
    the grid's degree_v.

    A sample point where every slice coefficient collapses relative to the
    grid's own coefficient scale is degenerate (the transform carries a
    factor vanishing at that u, e.g. 1 + u near u = -1) and raises
    :class:`ZeroPolynomialError`.  The test is against the grid scale, not
    the slice's own maximum: a vanishing factor shrinks all coefficients
    uniformly, which a slice-relative threshold would never notice.
    """
    u = complex(u)
    if not (np.isfinite(u.real) and np.isfinite(u.imag)):
        raise ValueError("sample point u must be finite")
    m = P.coeffs.shape[0]
    pows = np.empty(m, dtype=np.complex128)
    pows[0] = 1.0
    for x in range(1, m):
        pows[x] = pows[x - 1] * u
    a = pows @ P.coeffs
    grid_scale = float(np.max(np.abs(P.coeffs))) * max(1.0, abs(u)) ** (m - 1)
    scale = float(np.max(np.abs(a)))
    if scale <= trim_tol * grid_scale:
        raise ZeroPolynomialError(
            f"slice at u = {u:.6g} is degenerate (all coefficients vanish)"
        )
    d = len(a) - 1
    while d >= 0 and abs(a[d]) <= trim_tol * scale:
        d -= 1
    return UniPoly(a[: d + 1])


def residual_scale(coeffs: np.ndarray, z: complex) -> float:
    """Evaluation magnitude ``sum_y |a_y| |z|^y``, the smallest scale at which
    a Horner residual at z is meaningful in double precision."""
    acc = 0.0
    az = abs(z)
    for a in np.abs(coeffs)[::-1]:
        acc = acc * az + a
    return float(acc)


def find_roots(p: UniPoly, tol_root: float = ROOT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """All roots of p, Newton-polished, in deterministic order.

    Initial estimates come from the companion-matrix eigenvalues; each is
    then polished by Newton iteration on the original coefficients until
    ``|p(root)| <= tol_root * sum_y |a_y| |root|^y``.  The bound scales with
    the evaluation magnitude at the root, so roots outside the unit circle
    get the same relative accuracy as roots inside.  Returns
    (roots, residuals) sorted by real part, then imaginary part; raises
    :class:`RootFindingError` if any root misses its bound.
    """
    d = p.effective_degree
    if d < 1:
        raise ValueError("find_roots requires effective degree >= 1")
    guesses = np.roots(p.coeffs[::-1])
    roots = np.empty(d, dtype=np.complex128)
    residuals = np.empty(d, dtype=np.float64)
    worst_rel = 0.0
    for i, z0 in enumerate(guesses):
        roots[i], residuals[i] = _newton_polish(p.coeffs, complex(z0), tol_root)
        rel = residuals[i] / residual_scale(p.coeffs, roots[i])
        worst_rel = max(worst_rel, rel)
    if worst_rel > tol_root:
        raise RootFindingError(
            f"root polishing stalled at relative residual {worst_rel:.3e} "
            f"(bound {tol_root:.3e}, degree {d})"
        )
    order = np.lexsort((roots.imag, roots.real))
    return roots[order], residuals[order]


def _newton_polish(coeffs: np.ndarray, z: complex, tol_rel: float) -> tuple[complex, float]:
    best_z, best_res = z, float("inf")
    for _ in range(_NEWTON_MAX_ITER):
        pv, dv = _horner_pair(coeffs, z)
        res = abs(pv)
        if res < best_res:
            best_z, best_res = z, res
        if res <= tol_rel * residual_scale(coeffs, z) or dv == 0:
            return best_z, best_res
        step = pv / dv
        if not (np.isfinite(step.real) and np.isfinite(step.imag)):
            return best_z, best_res
        z = z - step
    res = abs(_horner(coeffs, z))
    if res < best_res:
        best_z, best_res = z, res
    return best_z, best_res


@dataclass(frozen=True, eq=False)
class RootSlice:
    """Root data of one slice: the roots in v at a fixed sample point u."""

    sample_point: complex
    leading_coeff: complex
    roots: np.ndarray
    residuals: np.ndarray
    clustered: bool

    @property
    def count(self) -> int:
        return len(self.roots)


def slice_roots(
    P: BivariatePoly,
    u: complex,
    trim_tol: float = TRIM_TOL,
    tol_root: float = ROOT_TOL,
) -> RootSlice:
    """Slice at u and solve: the full root set with residual diagnostics."""
    poly = slice_in_v(P, u, trim_tol)
    roots, residuals = find_roots(poly, tol_root)
    clustered = False
    if len(roots) > 1:
        dist = np.abs(roots[:, None] - roots[None, :])
        np.fill_diagonal(dist, np.inf)
        clustered = bool(dist.min() < CLUSTER_TOL)
    return RootSlice(
        sample_point=complex(u),
        leading_coeff=complex(poly.coeffs[-1]),
        roots=roots,
        residuals=residuals,
        clustered=clustered,
    )


def elementary_symmetric_coeffs(gammas) -> np.ndarray:
    """Ascending coefficients of the monic polynomial with the given roots.

    For k roots the result has k + 1 entries ``c_0 .. c_k`` with ``c_k = 1``
    exactly and ``c_y = (-1)^(k - y) e_{k - y}(gammas)``, where ``e_j`` is
    the j-th elementary symmetric polynomial.  An empty root set yields the
    constant polynomial [1].
    """
    g = np.asarray(gammas, dtype=np.complex128)
    if g.ndim != 1:
        raise ValueError("root set must be one-dimensional")
    if g.size and not np.all(np.isfinite(g)):
        raise ValueError("roots must be finite")
    coeffs = np.array([1.0 + 0j])
    for gamma in g:
        nxt = np.zeros(len(coeffs) + 1, dtype=np.complex128)
        nxt[1:] += coeffs
        nxt[:-1] -= gamma * coeffs
        coeffs = nxt
    return coeffs


def unit_point(phase: float) -> complex:
    """Point on the unit circle at the given phase (radians)."""
    return cmath.rect(1.0, phase)
