"""Blur search over zero values of the image z-transform.

An m x n blur convolved into an image leaves a fingerprint: at every sample
point u the blur's n - 1 roots in v sit among the image slice's roots.  For
a candidate root set tracked across q unit-circle sample points, write the
slice coefficients of the hypothesised blur in two ways: directly as
``sum_x h(x, y) u_j^x``, and as an unknown scale p_j times the elementary
symmetric coefficients of the tracked roots.  Equating the two over all q
points gives a homogeneous linear system in the m*n blur entries and the q
scales.  Choosing q = ceil(m*n / (n - 1)) makes the system square or tall,
so a numerically rank-deficient system (tiny sigma_min / sigma_second)
certifies that the tracked roots belong to an actual m x n blur, and the
corresponding null vector holds its entries.

The search enumerates all combinations of n - 1 base-point roots in
lexicographic order, tracks each across the sample points by injective
nearest-neighbour matching (halving the phase step when matching turns
ambiguous), and reports every evaluated candidate.
"""

from __future__ import annotations

import enum
import itertools
import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    AxisError,
    DegenerateCandidateError,
    LinearAlgebraError,
    RootFindingError,
    SamplingError,
    TrackingError,
    ZeroPolynomialError,
)
from .image import Image, transpose
from .zpoly import (
    BivariatePoly,
    RootSlice,
    elementary_symmetric_coeffs,
    slice_in_v,
    slice_roots,
    unit_point,
    ztransform,
)

__all__ = [
    "Axis",
    "SearchConfig",
    "SamplePoint",
    "SheetTrack",
    "BlurCandidate",
    "SearchReport",
    "compute_q",
    "choose_sample_points",
    "track_roots",
    "enumerate_combinations",
    "build_system",
    "nullspace_min",
    "extract_blur",
    "search_blur",
    "search_image",
]

log = logging.getLogger("zerosheet.search")

# How often the phase step may be halved when tracking turns ambiguous.
_MAX_HALVINGS = 4
# Replacement attempts per sample point before sampling fails.
_MAX_REPLACEMENTS = 8


class Axis(enum.Enum):
    """Which variable the root search scans: V (columns) or U (rows)."""

    V = "v"
    U = "u"


@dataclass(frozen=True)
class SearchConfig:
    """Blur size hypothesis plus the search's numeric knobs."""

    blur_m: int
    blur_n: int
    base_phase: float = 0.3
    phase_step: float = 0.01
    tol_null: float = 1e-6
    tol_real: float = 1e-6
    tol_track_ratio: float = 0.5
    max_combinations: int = 1_000_000
    axis: Axis = Axis.V
    early_stop: bool = False

    def __post_init__(self):
        if self.blur_m < 1:
            raise ValueError("blur_m must be >= 1")
        if self.blur_n < 1:
            raise ValueError("blur_n must be >= 1")
        if self.axis is Axis.V and self.blur_n < 2:
            raise AxisError(
                "an m x 1 blur has no roots in v; search the transposed "
                "image instead (axis=U)"
            )
        if self.axis is Axis.U and self.blur_m < 2:
            raise AxisError(
                "a 1 x n blur has no roots in u; search it along v (axis=V)"
            )
        if not math.isfinite(self.base_phase):
            raise ValueError("base_phase must be finite")
        if not 0.0 < self.phase_step < math.pi / 8:
            raise ValueError("phase_step must lie in (0, pi/8)")
        for name in ("tol_null", "tol_real", "tol_track_ratio"):
            val = getattr(self, name)
            if not 0.0 < val < 1.0:
                raise ValueError(f"{name} must lie in (0, 1)")
        if self.max_combinations < 1:
            raise ValueError("max_combinations must be >= 1")


@dataclass(frozen=True)
class SamplePoint:
    """One unit-circle sample point u_j."""

    index: int
    value: complex
    phase: float


@dataclass(frozen=True, eq=False)
class SheetTrack:
    """A candidate root set followed across all sample points.

    ``per_point_roots[0]`` holds the chosen base-point roots; entry j holds
    their matched counterparts at sample point j + 1.  ``tracking_margins``
    records the worst (largest) nearest/second-nearest distance ratio seen
    at each step.
    """

    combination: tuple[int, ...]
    per_point_roots: tuple[np.ndarray, ...]
    tracking_margins: tuple[float, ...]


@dataclass(frozen=True, eq=False)
class BlurCandidate:
    """Outcome of testing one root combination.

    ``h`` is the recovered (m, n) blur matrix indexed [x, y], normalized to
    unit sum unless the sum itself vanished (then max-abs 1 and ``zero_sum``
    set).  ``sigma_gap`` is sigma_min / sigma_second of the homogeneous
    system, the scale-free detection statistic.
    """

    h: np.ndarray
    p: np.ndarray
    sigma_min: float
    sigma_second: float
    sigma_gap: float
    realness: float
    combination: tuple[int, ...]
    accepted: bool
    zero_sum: bool = False


@dataclass(frozen=True, eq=False)
class SearchReport:
    """Everything one search run produced, in deterministic order."""

    blur_m: int
    blur_n: int
    q: int
    axis: Axis
    sample_phases: tuple[float, ...]
    n_prime: int
    candidates: list[BlurCandidate]
    best: BlurCandidate | None
    combinations_total: int
    combinations_evaluated: int
    tracking_failures: int
    truncated: bool
    sampling_failed: bool = False


def compute_q(m: int, n: int) -> int:
    """Number of sample points needed to pin down an m x n blur: ceil(mn/(n-1)).

    With q points the system has q*n equations against m*n + q unknowns, and
    q*(n-1) >= m*n makes it square or tall, leaving exactly the one-dimensional
    solution ray when the candidate roots are genuine.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if n < 2:
        raise AxisError(
            "n < 2 leaves no roots in v; transpose the image (axis=U) and "
            "search the m x 1 blur as 1 x m"
        )
    return -(-m * n // (n - 1))


def choose_sample_points(q: int, cfg: SearchConfig, P: BivariatePoly) -> list[SamplePoint]:
    """Pick q non-degenerate unit-circle points near the base phase.

    Point j starts at phase ``base_phase + (j-1) * phase_step``; a point
    whose slice is the zero polynomial, or whose effective degree differs
    from the base point's, is replaced by advancing one extra step, at most
    eight times.  All returned points are pairwise distinct by construction.
    """
    if q < 2:
        raise ValueError("q must be >= 2")
    points: list[SamplePoint] = []
    base_degree: int | None = None
    slot = 0
    for j in range(1, q + 1):
        placed = False
        for _ in range(_MAX_REPLACEMENTS + 1):
            phase = cfg.base_phase + slot * cfg.phase_step
            slot += 1
            u = unit_point(phase)
            try:
                sliced = slice_in_v(P, u)
            except ZeroPolynomialError:
                log.debug("sample point %d at phase %.6f degenerate (zero slice)", j, phase)
                continue
            if base_degree is None:
                base_degree = sliced.effective_degree
            elif sliced.effective_degree != base_degree:
                log.debug(
                    "sample point %d at phase %.6f dropped degree %d (base %d)",
                    j, phase, sliced.effective_degree, base_degree,
                )
                continue
            points.append(SamplePoint(index=j, value=u, phase=phase))
            placed = True
            break
        if not placed:
            raise SamplingError(
                f"no non-degenerate sample point found for index {j} "
                f"after {_MAX_REPLACEMENTS} replacements"
            )
    return points


def _match_selected(
    prev_roots: np.ndarray,
    next_roots: np.ndarray,
    selected: tuple[int, ...],
    tol_track_ratio: float,
) -> tuple[tuple[int, ...], float]:
    """Injective nearest-neighbour matching of the selected roots.

    Returns the matched indices into ``next_roots`` (selected order
    preserved) and the worst ambiguity ratio d_best / d_second seen.
    """
    used: set[int] = set()
    out: list[int] = []
    worst = 0.0
    for i in selected:
        d = np.abs(next_roots - prev_roots[i])
        j_best = int(np.argmin(d))
        d_best = float(d[j_best])
        if len(d) > 1:
            d2 = np.delete(d, j_best)
            d_second = float(d2.min())
        else:
            d_second = math.inf
        if d_second == 0.0:
            raise TrackingError(
                f"root {i} matches a repeated target root; correspondence ambiguous"
            )
        ratio = d_best / d_second if math.isfinite(d_second) else 0.0
        if ratio > tol_track_ratio:
            raise TrackingError(
                f"ambiguity ratio {ratio:.3g} exceeds {tol_track_ratio} for root {i}"
            )
        if j_best in used:
            raise TrackingError(f"two selected roots map to target root {j_best}")
        used.add(j_best)
        out.append(j_best)
        worst = max(worst, ratio)
    return tuple(out), worst


def track_roots(
    prev: RootSlice,
    next: RootSlice,
    selected,
    tol_track_ratio: float = 0.5,
) -> tuple[int, ...]:
    """Map selected roots of one slice to their counterparts in the next.

    Both slices must carry the same number of roots.  Raises
    :class:`TrackingError` on a count mismatch, an ambiguous match
    (nearest/second-nearest ratio above ``tol_track_ratio``), or a
    collision; callers recover by halving the phase step.
    """
    if prev.count != next.count:
        raise TrackingError(
            f"root counts differ between slices ({prev.count} vs {next.count})"
        )
    indices, _ = _match_selected(prev.roots, next.roots, tuple(selected), tol_track_ratio)
    return indices


def enumerate_combinations(n_prime: int, k: int, cap: int):
    """Sorted k-subsets of range(n_prime), lexicographic, at most ``cap``."""
    if not 1 <= k <= n_prime:
        raise ValueError(f"need 1 <= k <= n_prime, got k={k}, n_prime={n_prime}")
    for count, combo in enumerate(itertools.combinations(range(n_prime), k)):
        if count >= cap:
            return
        yield combo


def build_system(
    track: SheetTrack,
    points: list[SamplePoint],
    m: int,
    n: int,
) -> np.ndarray:
    """Assemble the (q*n) x (m*n + q) homogeneous matrix for one candidate.

    Unknown vector layout: the m*n blur entries first, x-major within each
    y block (column y*m + x), then the q scales p_j.  Row (j, y) encodes
    ``sum_x h(x, y) u_j^x - p_j c_y = 0`` with c the monic coefficients of
    the roots tracked at point j.
    """
    q = len(points)
    if len(track.per_point_roots) != q:
        raise ValueError("track does not span the sample points")
    A = np.zeros((q * n, m * n + q), dtype=np.complex128)
    for j, pt in enumerate(points):
        roots_j = track.per_point_roots[j]
        if len(roots_j) != n - 1:
            raise ValueError(f"expected {n - 1} tracked roots, got {len(roots_j)}")
        pows = np.empty(m, dtype=np.complex128)
        pows[0] = 1.0
        for x in range(1, m):
            pows[x] = pows[x - 1] * pt.value
        c = elementary_symmetric_coeffs(roots_j)
        for y in range(n):
            row = j * n + y
            A[row, y * m : (y + 1) * m] = pows
            A[row, m * n + j] = -c[y]
    return A


def nullspace_min(A: np.ndarray) -> tuple[float, float, np.ndarray]:
    """Two smallest singular values of A plus a unit null-direction vector.

    The returned vector is the right singular vector of the smallest
    singular value, deterministic up to a global complex phase.
    """
    A = np.asarray(A)
    rows, cols = A.shape
    if rows < cols - 1:
        raise ValueError(f"matrix {rows}x{cols} is too wide for a rank test")
    if cols < 2:
        raise ValueError("matrix must have at least two columns")
    try:
        _, s, vh = np.linalg.svd(A)
    except np.linalg.LinAlgError as exc:
        raise LinearAlgebraError(f"SVD failed to converge: {exc}") from exc
    xi = vh[-1].conj()
    return float(s[-1]), float(s[-2]), xi


def extract_blur(
    xi: np.ndarray,
    m: int,
    n: int,
    q: int,
    cfg: SearchConfig,
    sigma_min: float,
    sigma_second: float,
    combination: tuple[int, ...] = (),
) -> BlurCandidate:
    """Turn a null vector into a real, normalized blur candidate.

    Removes the global phase by making the largest blur entry real and
    positive, measures how non-real the remainder is, projects to the real
    part, and normalizes the sum to 1 (falling back to max-abs 1 when the
    sum vanishes).  Acceptance requires both the nullspace gap and the
    realness residual to pass their tolerances.
    """
    xi = np.asarray(xi, dtype=np.complex128)
    if len(xi) != m * n + q:
        raise ValueError(f"null vector length {len(xi)} != m*n + q = {m * n + q}")
    h = xi[: m * n].copy()
    p = xi[m * n :].copy()
    mags = np.abs(h)
    k = int(np.argmax(mags))
    if mags[k] == 0.0:
        raise DegenerateCandidateError("null vector carries an all-zero blur block")
    phase = h[k] / mags[k]
    h /= phase
    p /= phase
    realness = float(np.max(np.abs(h.imag)) / np.max(np.abs(h.real)))
    h_mat = h.real.reshape(n, m).T  # (m, n), [x, y]
    total = float(h_mat.sum())
    zero_sum = abs(total) < 1e-9 * float(np.max(np.abs(h_mat)))
    scale = float(np.max(np.abs(h_mat))) if zero_sum else total
    h_mat = h_mat / scale
    p = p / scale
    sigma_gap = sigma_min / sigma_second if sigma_second > 0.0 else math.inf
    accepted = (
        not zero_sum
        and sigma_gap <= cfg.tol_null
        and realness <= cfg.tol_real
    )
    return BlurCandidate(
        h=h_mat,
        p=p,
        sigma_min=sigma_min,
        sigma_second=sigma_second,
        sigma_gap=sigma_gap,
        realness=realness,
        combination=tuple(combination),
        accepted=accepted,
        zero_sum=zero_sum,
    )


class _TrackingLevels:
    """Sample points plus progressively finer tracking chains between them.

    The rank test always runs on the level-0 sample points; deeper levels
    insert intermediate unit-circle points at half the previous phase
    spacing (the halved grid contains the original points exactly), used
    only to carry root correspondence across a step that is ambiguous when
    taken whole.  Intermediate points that are degenerate or change root
    count are skipped as stepping stones.
    """

    def __init__(self, P: BivariatePoly, cfg: SearchConfig, q: int):
        self._P = P
        self._cfg = cfg
        self._q = q
        self._points: list[SamplePoint] | None = None
        self._slices: list[RootSlice] | None = None
        self._chains: dict[int, tuple[list[int], list[RootSlice | None]]] = {}
        self._lock = threading.Lock()

    def system_points(self) -> tuple[list[SamplePoint], list[RootSlice]]:
        with self._lock:
            self._ensure_base()
            return self._points, self._slices

    def _ensure_base(self) -> None:
        if self._points is None:
            self._points = choose_sample_points(self._q, self._cfg, self._P)
            self._slices = [slice_roots(self._P, pt.value) for pt in self._points]

    def chain(self, level: int) -> tuple[list[int], list[RootSlice | None]]:
        """Anchor positions of the sample points and the slice chain."""
        with self._lock:
            self._ensure_base()
            if level not in self._chains:
                self._chains[level] = self._build_chain(level)
            return self._chains[level]

    def _build_chain(self, level: int) -> tuple[list[int], list[RootSlice | None]]:
        cfg = self._cfg
        slots = [round((pt.phase - cfg.base_phase) / cfg.phase_step) for pt in self._points]
        factor = 2**level
        anchors = [s * factor for s in slots]
        chain: list[RootSlice | None] = [None] * (anchors[-1] + 1)
        for j, a in enumerate(anchors):
            chain[a] = self._slices[j]
        if level == 0:
            return anchors, chain
        n_prime = self._slices[0].count
        sub = cfg.phase_step / factor
        for t in range(anchors[0] + 1, anchors[-1]):
            if chain[t] is not None:
                continue
            u = unit_point(cfg.base_phase + t * sub)
            try:
                rs = slice_roots(self._P, u)
            except (ZeroPolynomialError, RootFindingError):
                continue
            if rs.count == n_prime:
                chain[t] = rs
        log.debug("built tracking chain at halving level %d", level)
        return anchors, chain


def _walk_chain(
    anchors: list[int],
    chain: list[RootSlice | None],
    cfg: SearchConfig,
    combo: tuple[int, ...],
) -> tuple[list[np.ndarray], list[float]] | None:
    """Carry the combination across all anchors; None when matching breaks."""
    selected = tuple(combo)
    per_point = [chain[anchors[0]].roots[list(combo)]]
    margins: list[float] = []
    current = chain[anchors[0]]
    for j in range(1, len(anchors)):
        worst = 0.0
        for t in range(anchors[j - 1] + 1, anchors[j] + 1):
            nxt = chain[t]
            if nxt is None:
                continue
            try:
                selected, margin = _match_selected(
                    current.roots, nxt.roots, selected, cfg.tol_track_ratio
                )
            except TrackingError:
                return None
            worst = max(worst, margin)
            current = nxt
        per_point.append(current.roots[list(selected)])
        margins.append(worst)
    return per_point, margins


def _evaluate_combination(
    levels: _TrackingLevels,
    cfg: SearchConfig,
    q: int,
    m: int,
    n: int,
    combo: tuple[int, ...],
) -> BlurCandidate | None:
    """Track one combination and rank-test it; None when tracking fails.

    Tracking starts anchor-to-anchor and refines through up to four
    halvings; the homogeneous system is always built at the level-0 sample
    points so the rank test keeps its full discrimination.
    """
    points, _ = levels.system_points()
    for level in range(_MAX_HALVINGS + 1):
        anchors, chain = levels.chain(level)
        walked = _walk_chain(anchors, chain, cfg, combo)
        if walked is None:
            continue
        per_point, margins = walked
        track = SheetTrack(
            combination=tuple(combo),
            per_point_roots=tuple(per_point),
            tracking_margins=tuple(margins),
        )
        A = build_system(track, points, m, n)
        sigma_min, sigma_second, xi = nullspace_min(A)
        return extract_blur(xi, m, n, q, cfg, sigma_min, sigma_second, tuple(combo))
    return None


def _empty_report(cfg: SearchConfig, q: int, phases=(), n_prime=0, total=0,
                  sampling_failed=False) -> SearchReport:
    return SearchReport(
        blur_m=cfg.blur_m,
        blur_n=cfg.blur_n,
        q=q,
        axis=cfg.axis,
        sample_phases=tuple(phases),
        n_prime=n_prime,
        candidates=[],
        best=None,
        combinations_total=total,
        combinations_evaluated=0,
        tracking_failures=0,
        truncated=False,
        sampling_failed=sampling_failed,
    )


def search_blur(P: BivariatePoly, cfg: SearchConfig, threads: int = 1) -> SearchReport:
    """Search the transform for a blur_m x blur_n blur along v.

    Evaluates every combination of n - 1 base-point roots (lexicographic,
    capped at ``cfg.max_combinations``), reports each with its metrics, and
    picks as best the accepted candidate with the smallest sigma_gap (ties
    go to the lexicographically smallest combination).  A run that accepts
    nothing returns an empty-best report rather than raising.
    """
    if cfg.axis is not Axis.V:
        raise AxisError(
            "search_blur scans roots in v; use search_image or remove_blur "
            "for axis=U searches"
        )
    m, n = cfg.blur_m, cfg.blur_n
    q = compute_q(m, n)
    levels = _TrackingLevels(P, cfg, q)
    try:
        points0, slices0 = levels.system_points()
    except SamplingError as exc:
        log.info("sampling failed: %s", exc)
        return _empty_report(cfg, q, sampling_failed=True)
    phases = tuple(pt.phase for pt in points0)
    n_prime = slices0[0].count
    k = n - 1
    if n_prime < k:
        return _empty_report(cfg, q, phases, n_prime, total=0)
    total = math.comb(n_prime, k)
    truncated = total > cfg.max_combinations
    combos = enumerate_combinations(n_prime, k, cfg.max_combinations)

    def evaluate(combo):
        return _evaluate_combination(levels, cfg, q, m, n, combo)

    outcomes: list[BlurCandidate | None] = []
    if cfg.early_stop:
        for combo in combos:
            cand = evaluate(combo)
            outcomes.append(cand)
            if cand is not None and cand.accepted:
                break
    elif threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(evaluate, combos))
    else:
        outcomes = [evaluate(combo) for combo in combos]

    candidates = [c for c in outcomes if c is not None]
    tracking_failures = len(outcomes) - len(candidates)
    best: BlurCandidate | None = None
    for cand in candidates:
        if cand.accepted and (best is None or cand.sigma_gap < best.sigma_gap):
            best = cand
    if best is not None:
        log.info(
            "accepted combination %s with sigma_gap %.3e", best.combination, best.sigma_gap
        )
    return SearchReport(
        blur_m=m,
        blur_n=n,
        q=q,
        axis=cfg.axis,
        sample_phases=phases,
        n_prime=n_prime,
        candidates=candidates,
        best=best,
        combinations_total=total,
        combinations_evaluated=len(outcomes),
        tracking_failures=tracking_failures,
        truncated=truncated,
    )


def _reorient_candidate(cand: BlurCandidate) -> BlurCandidate:
    return BlurCandidate(
        h=cand.h.T.copy(),
        p=cand.p,
        sigma_min=cand.sigma_min,
        sigma_second=cand.sigma_second,
        sigma_gap=cand.sigma_gap,
        realness=cand.realness,
        combination=cand.combination,
        accepted=cand.accepted,
        zero_sum=cand.zero_sum,
    )


def search_image(img: Image, cfg: SearchConfig, threads: int = 1) -> SearchReport:
    """Search an image for a blur, transposing first when axis is U.

    For axis=U the search runs on the transposed image with swapped blur
    dimensions; candidate matrices in the returned report are transposed
    back to the caller's (blur_m, blur_n) orientation.  Combination indices
    then refer to base-slice roots of the transposed image.
    """
    if cfg.axis is Axis.V:
        return search_blur(ztransform(img), cfg, threads)
    cfg_v = replace(cfg, blur_m=cfg.blur_n, blur_n=cfg.blur_m, axis=Axis.V)
    rep = search_blur(ztransform(transpose(img)), cfg_v, threads)
    candidates = [_reorient_candidate(c) for c in rep.candidates]
    best = None
    if rep.best is not None:
        best = candidates[rep.candidates.index(rep.best)]
    return SearchReport(
        blur_m=cfg.blur_m,
        blur_n=cfg.blur_n,
        q=rep.q,
        axis=Axis.U,
        sample_phases=rep.sample_phases,
        n_prime=rep.n_prime,
        candidates=candidates,
        best=best,
        combinations_total=rep.combinations_total,
        combinations_evaluated=rep.combinations_evaluated,
        tracking_failures=rep.tracking_failures,
        truncated=rep.truncated,
        sampling_failed=rep.sampling_failed,
    )
