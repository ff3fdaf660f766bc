"""Image restoration given a recovered blur, and the multi-blur pipeline.

The primary route divides the DFT of the observed image by the DFT of the
zero-padded blur and inverse-transforms; because the observed size equals
the full-convolution size, circular and linear convolution coincide and the
division is exact for noise-free data.  A blur whose transform nearly
vanishes somewhere on the DFT grid makes that division unstable, so an
independent least-squares route (normal equations of the linear convolution
operator) backs it up.
"""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateBlurError, DivisionUnstableError, NoBlurFoundError
from .image import Image, convolve, image_from_matrix
from .search import BlurCandidate, SearchConfig, SearchReport, search_image

__all__ = [
    "RestoreMethod",
    "RestorationResult",
    "StageResult",
    "PipelineResult",
    "spectral_restore",
    "least_squares_restore",
    "restore_with_fallback",
    "remove_blur",
    "pipeline",
]

log = logging.getLogger("zerosheet.restore")

# Below this min|H|/max|H| on the DFT grid, spectral division is refused.
UNSTABLE_TOL = 1e-9


class RestoreMethod(enum.Enum):
    SPECTRAL = "spectral"
    LEAST_SQUARES = "least_squares"


@dataclass(frozen=True, eq=False)
class RestorationResult:
    """A restored image with the diagnostics needed to trust it.

    ``forward_residual`` is ``max|convolve(restored, blur) - observed|``
    over ``max|observed|``; ``min_H_on_grid`` is the smallest blur-transform
    magnitude on the DFT grid relative to the largest.
    """

    image: Image
    method: RestoreMethod
    forward_residual: float
    min_H_on_grid: float


def _check_restore_inputs(g: Image, h: Image) -> None:
    if h.width > g.width or h.height > g.height:
        raise ValueError(
            f"blur {h.width}x{h.height} larger than image {g.width}x{g.height}"
        )
    if float(np.max(np.abs(h.pixels))) == 0.0:
        raise DegenerateBlurError("blur is identically zero")


def _grid_transform_ratio(g: Image, h: Image) -> tuple[np.ndarray, float]:
    padded = np.zeros((g.height, g.width))
    padded[: h.height, : h.width] = h.pixels
    H = np.fft.fft2(padded)
    mags = np.abs(H)
    return H, float(mags.min() / mags.max())


def _forward_residual(f: Image, h: Image, g: Image) -> float:
    diff = convolve(f, h).pixels - g.pixels
    peak = float(np.max(np.abs(g.pixels)))
    worst = float(np.max(np.abs(diff)))
    return worst / peak if peak > 0.0 else worst


def spectral_restore(g: Image, h: Image) -> RestorationResult:
    """Restore by DFT division; exact on noise-free full-convolution data.

    Raises :class:`DivisionUnstableError` when the blur transform dips
    below ``UNSTABLE_TOL`` (relative) anywhere on the grid, in which case
    :func:`least_squares_restore` is the safe route.
    """
    _check_restore_inputs(g, h)
    H, min_ratio = _grid_transform_ratio(g, h)
    if min_ratio < UNSTABLE_TOL:
        raise DivisionUnstableError(min_ratio)
    F = np.fft.fft2(g.pixels) / H
    full = np.fft.ifft2(F).real
    out = Image(full[: g.height - h.height + 1, : g.width - h.width + 1])
    return RestorationResult(
        image=out,
        method=RestoreMethod.SPECTRAL,
        forward_residual=_forward_residual(out, h, g),
        min_H_on_grid=min_ratio,
    )


def _convolution_operator(h: Image, fh: int, fw: int) -> np.ndarray:
    """Dense matrix of full convolution by h acting on an fh x fw image."""
    hh, hw = h.pixels.shape
    gh, gw = fh + hh - 1, fw + hw - 1
    T = np.zeros((gh * gw, fh * fw))
    cols_x = np.arange(fw)
    for b in range(hh):
        for a in range(hw):
            w = h.pixels[b, a]
            for y in range(fh):
                rows = (y + b) * gw + cols_x + a
                cols = y * fw + cols_x
                T[rows, cols] += w
    return T


def least_squares_restore(g: Image, h: Image) -> RestorationResult:
    """Restore by solving the normal equations of the convolution operator.

    Independent of the spectral route and immune to DFT-grid zeros of the
    blur transform; any nonzero blur gives a full-column-rank operator.
    """
    _check_restore_inputs(g, h)
    fh = g.height - h.height + 1
    fw = g.width - h.width + 1
    T = _convolution_operator(h, fh, fw)
    ata = T.T @ T
    atb = T.T @ g.pixels.ravel()
    try:
        sol = np.linalg.solve(ata, atb)
    except np.linalg.LinAlgError as exc:
        raise DegenerateBlurError(f"normal equations singular: {exc}") from exc
    out = Image(sol.reshape(fh, fw))
    _, min_ratio = _grid_transform_ratio(g, h)
    return RestorationResult(
        image=out,
        method=RestoreMethod.LEAST_SQUARES,
        forward_residual=_forward_residual(out, h, g),
        min_H_on_grid=min_ratio,
    )


def restore_with_fallback(g: Image, h: Image) -> RestorationResult:
    """Spectral division when stable, least squares otherwise."""
    try:
        return spectral_restore(g, h)
    except DivisionUnstableError as exc:
        log.info("spectral division unstable (%s); using least squares", exc)
        return least_squares_restore(g, h)


def remove_blur(
    g: Image, cfg: SearchConfig, threads: int = 1
) -> tuple[BlurCandidate, RestorationResult, SearchReport]:
    """Search for one blur of the configured size and undo it.

    Handles axis=U by searching the transposed image (the returned
    candidate is already back in the caller's orientation).  Raises
    :class:`NoBlurFoundError`, carrying the search report, when no
    candidate is accepted.
    """
    report = search_image(g, cfg, threads)
    if report.best is None:
        raise NoBlurFoundError(
            f"no {cfg.blur_m}x{cfg.blur_n} blur accepted "
            f"({report.combinations_evaluated} combinations evaluated)",
            report=report,
        )
    h_img = image_from_matrix(report.best.h)
    result = restore_with_fallback(g, h_img)
    log.info(
        "removed %dx%d blur, forward residual %.3e (%s)",
        cfg.blur_m, cfg.blur_n, result.forward_residual, result.method.value,
    )
    return report.best, result, report


@dataclass(frozen=True, eq=False)
class StageResult:
    candidate: BlurCandidate
    restoration: RestorationResult
    report: SearchReport
    wall_time_ms: float = 0.0


@dataclass(frozen=True, eq=False)
class PipelineResult:
    """Outcome of sequential blur removal.

    ``failed_stage`` is the 1-based index of the first stage whose search
    accepted nothing (None when every stage succeeded); ``failure_report``
    carries that stage's search report for diagnostics.
    """

    stages: list[StageResult]
    failed_stage: int | None
    failure_report: SearchReport | None
    failure_wall_ms: float = 0.0

    @property
    def ok(self) -> bool:
        return self.failed_stage is None

    @property
    def final_image(self) -> Image | None:
        return self.stages[-1].restoration.image if self.stages else None


def pipeline(
    g: Image,
    sizes,
    cfg: SearchConfig,
    threads: int = 1,
) -> PipelineResult:
    """Remove several blurs in the given (m, n) order, feeding each result on.

    Stops at the first stage that finds no blur and returns the stages
    completed so far together with the failing stage's index.
    """
    sizes = list(sizes)
    if not sizes:
        raise ValueError("pipeline needs at least one blur size")
    current = g
    stages: list[StageResult] = []
    for idx, (m, n) in enumerate(sizes, start=1):
        stage_cfg = replace(cfg, blur_m=int(m), blur_n=int(n))
        t0 = time.perf_counter()
        try:
            candidate, restoration, report = remove_blur(current, stage_cfg, threads)
        except NoBlurFoundError as exc:
            wall = (time.perf_counter() - t0) * 1e3
            log.info("pipeline stage %d (%dx%d) found no blur", idx, m, n)
            return PipelineResult(
                stages=stages,
                failed_stage=idx,
                failure_report=exc.report,
                failure_wall_ms=wall,
            )
        wall = (time.perf_counter() - t0) * 1e3
        stages.append(
            StageResult(
                candidate=candidate,
                restoration=restoration,
                report=report,
                wall_time_ms=wall,
            )
        )
        current = restoration.image
    return PipelineResult(stages=stages, failed_stage=None, failure_report=None)
