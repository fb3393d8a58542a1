"""Quantitative diagnostics for generated signals.

FID here is the Frechet distance between Gaussian fits of two signals'
sample distributions (univariate per window; the matrix form is kept for
multichannel summaries). SSIM uses global window statistics, one score
per pair, which drives the creativity (generated vs real) and diversity
(generated vs generated) checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError


@dataclass
class GaussianSummary:
    mean: float | np.ndarray
    std: float | None = None
    cov: np.ndarray | None = None

    def __post_init__(self):
        if self.std is None and self.cov is None:
            raise ValueError("summary needs a std or a covariance matrix")
        if self.std is not None and self.std < 0:
            raise ValueError("std must be non-negative")
        if self.cov is not None:
            self.cov = np.asarray(self.cov, dtype=np.float64)
            if not np.allclose(self.cov, self.cov.T, atol=1e-10):
                raise ValueError("covariance matrix must be symmetric")


@dataclass
class SsimParams:
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 2.0  # data in [-1, +1]
    duplicate_threshold: float = 0.8

    def __post_init__(self):
        if not 0.0 < self.duplicate_threshold <= 1.0:
            raise ValueError("duplicate threshold must be in (0, 1]")

    @property
    def c1(self):
        return (self.k1 * self.dynamic_range) ** 2

    @property
    def c2(self):
        return (self.k2 * self.dynamic_range) ** 2


def _samples(window):
    return window.samples if hasattr(window, "samples") else np.asarray(window, dtype=np.float64)


def gaussian_summary(window):
    """Fit (mean, population std) to one window's sample distribution."""
    x = _samples(window)
    if x.size == 0:
        raise ValueError("cannot summarize an empty window")
    return GaussianSummary(mean=float(x.mean()), std=float(x.std()))


def pooled_summary(windows):
    """One Gaussian summary over all samples of a window set."""
    x = np.concatenate([_samples(w) for w in windows])
    return GaussianSummary(mean=float(x.mean()), std=float(x.std()))


def _sqrtm_psd(mat):
    vals, vecs = np.linalg.eigh(mat)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def fid(a, b):
    """Frechet distance between two Gaussian summaries.

    Scalar form: (mu_a - mu_b)^2 + (sigma_a - sigma_b)^2, which is the
    covariance-trace formula reduced to one dimension. Matrix form uses
    symmetric square roots with negative eigenvalues clamped at zero.
    """
    if (a.cov is None) != (b.cov is None):
        raise ValueError("cannot mix scalar and matrix summaries")
    if a.cov is None:
        return (a.mean - b.mean) ** 2 + (a.std - b.std) ** 2
    mu_a, mu_b = np.atleast_1d(a.mean), np.atleast_1d(b.mean)
    if mu_a.shape != mu_b.shape or a.cov.shape != b.cov.shape:
        raise ValueError("summary dimensionality mismatch")
    root_a = _sqrtm_psd(a.cov)
    cross = _sqrtm_psd(root_a @ b.cov @ root_a)
    return float(np.sum((mu_a - mu_b) ** 2)
                 + np.trace(a.cov) + np.trace(b.cov) - 2.0 * np.trace(cross))


def ssim(x, g, params=None):
    """Structural similarity from global means, variances, and covariance."""
    params = params or SsimParams()
    xs, gs = _samples(x), _samples(g)
    if xs.shape != gs.shape:
        raise ValueError(f"window length mismatch: {xs.shape} vs {gs.shape}")
    mu_x, mu_g = xs.mean(), gs.mean()
    var_x, var_g = xs.var(), gs.var()
    cov_xg = ((xs - mu_x) * (gs - mu_g)).mean()
    c1, c2 = params.c1, params.c2
    return float((2 * mu_x * mu_g + c1) * (2 * cov_xg + c2)
                 / ((mu_x ** 2 + mu_g ** 2 + c1) * (var_x + var_g + c2)))


def creativity_scores(generated, real, params=None):
    """SSIM of every (generated, real) pair; scores above the duplicate
    threshold are counted as duplicates. Returns (scores, duplicate_count)."""
    params = params or SsimParams()
    if not generated or not real:
        raise ValueError("creativity needs non-empty generated and real sets")
    scores = np.array([[ssim(g, r, params) for r in real] for g in generated]).ravel()
    duplicates = int(np.sum(scores > params.duplicate_threshold))
    return scores, duplicates


def diversity_scores(generated, params=None):
    """SSIM over all unordered distinct generated pairs: n(n-1)/2 scores."""
    params = params or SsimParams()
    n = len(generated)
    if n < 2:
        raise ValueError("diversity needs at least two generated windows")
    scores = [ssim(generated[i], generated[j], params)
              for i in range(n) for j in range(i + 1, n)]
    return np.array(scores)


def fid_scores(generated, real, pairing="one_to_one", seed=0):
    """Per-pair FID between generated and real window sets.

    one_to_one: random pairing without replacement (requires equal sizes);
    all_pairs: every (generated, real) combination.
    """
    if not generated or not real:
        raise ValueError("fid_scores needs non-empty sets")
    gs = [gaussian_summary(w) for w in generated]
    rs = [gaussian_summary(w) for w in real]
    if pairing == "one_to_one":
        if len(gs) != len(rs):
            raise InsufficientDataError(
                f"one-to-one pairing needs equal sizes, got {len(gs)} vs {len(rs)}")
        perm = np.random.default_rng(seed).permutation(len(rs))
        return np.array([fid(gs[i], rs[perm[i]]) for i in range(len(gs))])
    if pairing == "all_pairs":
        return np.array([fid(g, r) for g in gs for r in rs])
    raise ValueError(f"unknown pairing {pairing!r}")


def pdf_estimate(scores, bin_count):
    """Histogram density over [min, max]; the Riemann sum is exactly 1.

    A degenerate (constant) score set gets a single unit-width bin.
    Returns (bin_centers, densities).
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise ValueError("cannot estimate a density from no scores")
    if bin_count < 1:
        raise ValueError("bin count must be at least 1")
    lo, hi = scores.min(), scores.max()
    if hi == lo:
        return np.array([lo]), np.array([1.0])
    densities, edges = np.histogram(scores, bins=bin_count, range=(lo, hi), density=True)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return centers, densities


def boxplot_stats(window):
    """Five-number summary with 1.5*IQR whiskers and the mean.

    Returns a dict: min, q1, median, q3, max, whisker_lo, whisker_hi, mean.
    Quantiles use linear interpolation.
    """
    x = _samples(window)
    if x.size == 0:
        raise ValueError("cannot summarize an empty window")
    q1, med, q3 = np.quantile(x, [0.25, 0.5, 0.75])
    iqr = q3 - q1
    in_lo = x[x >= q1 - 1.5 * iqr]
    in_hi = x[x <= q3 + 1.5 * iqr]
    return {
        "min": float(x.min()), "q1": float(q1), "median": float(med),
        "q3": float(q3), "max": float(x.max()),
        "whisker_lo": float(in_lo.min()), "whisker_hi": float(in_hi.max()),
        "mean": float(x.mean()),
    }
