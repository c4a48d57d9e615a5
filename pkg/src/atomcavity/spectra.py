"""Liouvillian spectrum analysis: gaps, rate ordering, clusters, analytic tables.

Zero eigenvalues are identified with a threshold relative to the spectral
radius of the computed spectrum, never absolutely: the rates of interest span
many orders of magnitude across parameter regimes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .errors import SpectrumDiagnosticError, UnsupportedRegimeError
from .linalg import eig_general
from .models import ModelParams, Superoperator

DEFAULT_ZERO_TOL = 1e-9
DEFAULT_CLUSTER_TOL = 1e-7


@dataclass(frozen=True)
class Cluster:
    """A group of numerically coincident eigenvalues."""

    value: complex
    count: int
    indices: tuple[int, ...]


@dataclass(frozen=True)
class SpectrumReport:
    """Classified Liouvillian spectrum.

    ``eigenvalues`` are sorted by |Re| ascending; ``distinct_rates`` holds the
    clustered nonzero decay rates (-Re) ascending; ``gap`` is the smallest
    nonzero rate; ``second_rate`` the next distinct one (None when absent).
    ``partial`` marks reports built from a targeted (shift-invert) solve that
    only sees the slow end of the spectrum.
    """

    eigenvalues: np.ndarray
    clusters: tuple[Cluster, ...]
    gap: float
    second_rate: float | None
    distinct_rates: np.ndarray
    kernel_dim: int
    near_defective: bool
    scale: float
    partial: bool = False
    condition_estimate: float = np.nan

    def rate(self, index: int) -> float:
        """Distinct nonzero decay rate by ascending index (0 = gap)."""
        return float(self.distinct_rates[index])


@dataclass(frozen=True)
class AnalyticSpectrum:
    """Closed-form eigenvalue table of an effective model."""

    case: str
    entries: tuple[tuple[float, int], ...]
    params: ModelParams

    def total_multiplicity(self) -> int:
        return sum(m for _, m in self.entries)


@dataclass(frozen=True)
class MatchedEntry:
    analytic_value: float
    multiplicity: int
    numeric_value: complex | None
    numeric_count: int
    rel_error: float
    multiplicity_ok: bool


@dataclass(frozen=True)
class MatchReport:
    """Result of pairing numeric clusters with an analytic table."""

    entries: tuple[MatchedEntry, ...]
    unmatched_clusters: tuple[Cluster, ...]
    all_matched: bool
    max_rel_error: float


@dataclass(frozen=True)
class SplittingDiagnostic:
    """Dominant separation of time scales in the rate ladder.

    ``ratio`` compares the rate just above the widest multiplicative break in
    the distinct-rate ladder with the spectral gap; ratios much greater than 1
    signal metastability (quasi-stationarity between 1/fast_rate and 1/gap).
    """

    ratio: float
    gap: float
    fast_rate: float
    split_index: int
    metastable: bool


def _cluster_complex(values: np.ndarray, tol: float) -> list[list[int]]:
    """Greedy clustering of complex values with absolute tolerance ``tol``."""
    order = np.lexsort((values.imag, values.real))
    groups: list[list[int]] = []
    reps: list[complex] = []
    for idx in order:
        z = values[idx]
        placed = False
        for g, rep in enumerate(reps):
            if abs(z - rep) <= tol:
                groups[g].append(int(idx))
                reps[g] = np.mean(values[groups[g]])
                placed = True
                break
        if not placed:
            groups.append([int(idx)])
            reps.append(z)
    return groups


def analyze(
    sup: Superoperator,
    zero_tol: float = DEFAULT_ZERO_TOL,
    cluster_tol: float = DEFAULT_CLUSTER_TOL,
    dense_cap: int = 4096,
    k: int = 24,
    sigma: float | None = None,
    force_targeted: bool = False,
) -> SpectrumReport:
    """Spectrum report for a Liouvillian.

    Dense full diagonalization when the superoperator dimension fits under
    ``dense_cap``; otherwise (or when ``force_targeted`` is set) a targeted
    shift-invert solve for the ``k`` eigenvalues nearest ``sigma`` (a small
    positive real shift by default, which is never an eigenvalue of a
    Lindblad generator), yielding a partial report of the slow end of the
    spectrum.
    """
    if sup.dim <= dense_cap and not force_targeted:
        decomp = eig_general(sup.as_dense(cap=dense_cap), dense_cap=dense_cap)
        w = decomp.eigenvalues
        partial = False
        cond = decomp.condition_estimate
        near_defective = decomp.near_defective
    else:
        if sigma is None:
            sigma = 1e-3
        w = spla.eigs(
            sup.as_sparse().tocsc(),
            k=k,
            sigma=sigma,
            which="LM",
            return_eigenvectors=False,
            v0=arpack_start_vector(sup.dim),
        )
        partial = True
        cond = np.nan
        near_defective = False
    return classify(
        w,
        zero_tol=zero_tol,
        cluster_tol=cluster_tol,
        partial=partial,
        condition=cond,
        near_defective=near_defective,
    )


def classify(
    eigenvalues: np.ndarray,
    zero_tol: float = DEFAULT_ZERO_TOL,
    cluster_tol: float = DEFAULT_CLUSTER_TOL,
    partial: bool = False,
    condition: float = np.nan,
    near_defective: bool = False,
) -> SpectrumReport:
    """Build a SpectrumReport from raw eigenvalues."""
    w = np.asarray(eigenvalues, dtype=complex)
    order = np.lexsort((w.imag, np.abs(w.real)))
    w = w[order]
    scale = float(np.abs(w).max()) if w.size else 0.0
    abs_tol = zero_tol * scale
    zero_mask = (np.abs(w.real) <= abs_tol) & (np.abs(w.imag) <= abs_tol)
    kernel_dim = int(zero_mask.sum())
    groups = _cluster_complex(w, cluster_tol * scale)
    clusters = tuple(
        Cluster(complex(np.mean(w[g])), len(g), tuple(g))
        for g in sorted(groups, key=lambda g: (abs(np.mean(w[g]).real), np.mean(w[g]).imag))
    )
    rates = -w[~zero_mask].real
    if rates.size:
        gap = float(rates.min())
        if gap < 0.0 and abs(gap) <= abs_tol:
            gap = 0.0
        rate_groups = _cluster_complex(rates.astype(complex), cluster_tol * scale)
        distinct = np.sort([float(np.mean(rates[g])) for g in rate_groups])
    else:
        gap = 0.0
        distinct = np.array([])
    second = float(distinct[1]) if distinct.size >= 2 else None
    return SpectrumReport(
        eigenvalues=w,
        clusters=clusters,
        gap=gap,
        second_rate=second,
        distinct_rates=distinct,
        kernel_dim=kernel_dim,
        near_defective=near_defective,
        scale=scale,
        partial=partial,
        condition_estimate=condition,
    )


# ---------------------------------------------------------------------------
# analytic results for the effective models
# ---------------------------------------------------------------------------


def gap_coherent(params: ModelParams) -> float:
    """Gap of the effective coherent model: 4 Gamma_eps = kappa (2 eps/kappa)^-2."""
    return 4.0 * params.gamma_eps


def tau_coherent(params: ModelParams) -> float:
    """Longest relaxation time, kappa*tau = (2 eps/kappa)^2."""
    return 1.0 / gap_coherent(params)


def coherent_lambda3(params: ModelParams) -> float:
    """Decay rate of the third distinct coherent cluster, 4 Gamma_g0 + 2 Gamma_eps."""
    return 4.0 * params.gamma_g0 + 2.0 * params.gamma_eps


def gap_incoherent(params: ModelParams) -> float:
    """Gap of the effective thermal model: 2 n_th Gamma = 2 n_th (g0/kappa)^2 kappa."""
    return 2.0 * params.n_th * params.gamma_collective


def tau_incoherent(params: ModelParams) -> float:
    """Longest relaxation time, kappa*tau = (kappa/g0)^2 / (2 n_th)."""
    gap = gap_incoherent(params)
    if gap == 0.0:
        raise UnsupportedRegimeError("tau_incoherent requires n_th > 0 and g0 > 0")
    return 1.0 / gap


def analytic_coherent(params: ModelParams) -> AnalyticSpectrum:
    """Six-entry eigenvalue table of the effective coherent model."""
    if params.eps <= 0.0:
        raise UnsupportedRegimeError("the coherent table requires eps > 0")
    ge = params.gamma_eps
    gg = params.gamma_g0
    entries = (
        (0.0, 2),
        (-4.0 * ge, 3),
        (-12.0 * ge, 1),
        (-4.0 * gg - 2.0 * ge, 6),
        (-4.0 * gg - 10.0 * ge, 2),
        (-4.0 * (4.0 * gg + ge), 2),
    )
    return AnalyticSpectrum("coherent", entries, params)


def analytic_incoherent(params: ModelParams) -> AnalyticSpectrum:
    """Eight-entry eigenvalue table of the effective thermal model."""
    if params.n_th < 0.0:
        raise ValueError("n_th must be nonnegative")
    g = params.gamma_collective
    n = params.n_th
    s1 = np.sqrt(1.0 + 16.0 * n * (n + 1.0))
    s2 = np.sqrt(n * (n + 1.0))
    entries = (
        (0.0, 2),
        (-2.0 * n * g, 2),
        ((-3.0 * (2.0 * n + 1.0) + s1) * g, 2),
        (-2.0 * (n + 1.0) * g, 2),
        (-2.0 * (2.0 * n + 1.0) * g, 4),
        ((-4.0 * (2.0 * n + 1.0) + 4.0 * s2) * g, 1),
        ((-3.0 * (2.0 * n + 1.0) - s1) * g, 2),
        ((-4.0 * (2.0 * n + 1.0) - 4.0 * s2) * g, 1),
    )
    return AnalyticSpectrum("incoherent", entries, params)


def _merge_entries(
    entries: tuple[tuple[float, int], ...], tol: float
) -> list[tuple[float, int]]:
    """Merge analytic entries that coincide (degenerate parameter points)."""
    merged: list[tuple[float, int]] = []
    for value, mult in sorted(entries, key=lambda e: e[0], reverse=True):
        if merged and abs(value - merged[-1][0]) <= tol:
            merged[-1] = (merged[-1][0], merged[-1][1] + mult)
        else:
            merged.append((value, mult))
    return merged


def compare_spectra(
    numeric: SpectrumReport, analytic: AnalyticSpectrum, rel_tol: float = 1e-10
) -> MatchReport:
    """Greedy pairing of numeric clusters with the analytic table.

    Each analytic entry takes the nearest unused numeric cluster; per-entry
    relative errors use the entry magnitude (the spectral scale for the zero
    entry).  Unmatched clusters are reported, never raised.
    """
    scale = max(abs(v) for v, _ in analytic.entries)
    merged = _merge_entries(analytic.entries, 1e-12 * scale)
    available = list(numeric.clusters)
    results: list[MatchedEntry] = []
    max_rel = 0.0
    for value, mult in sorted(merged, key=lambda e: abs(e[0])):
        if not available:
            results.append(MatchedEntry(value, mult, None, 0, np.inf, False))
            max_rel = np.inf
            continue
        dists = [abs(c.value - value) for c in available]
        best = int(np.argmin(dists))
        cluster = available.pop(best)
        denom = abs(value) if abs(value) > 0.0 else scale
        rel = abs(cluster.value - value) / denom
        results.append(
            MatchedEntry(value, mult, cluster.value, cluster.count, float(rel), cluster.count == mult)
        )
        max_rel = max(max_rel, rel)
    all_matched = (
        not available
        and all(e.multiplicity_ok for e in results)
        and all(e.rel_error <= rel_tol for e in results)
    )
    return MatchReport(tuple(results), tuple(available), all_matched, float(max_rel))


def match_eigenvalue_sets(
    a: np.ndarray, b: np.ndarray, zero_floor: float = 1e-3
) -> np.ndarray:
    """Greedy nearest-pair matching of two eigenvalue lists.

    Conjugate partners are first folded onto the upper half plane (spectra of
    Hermiticity-preserving generators are conjugation-symmetric, so Re + i|Im|
    carries the full information); this keeps truncated lists comparable when
    a selection boundary splits a conjugate pair.  Returns per-pair relative
    deviations |a_i - b_j| / max(|a_i|, zero_floor * scale), with scale the
    largest magnitude present.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.size != b.size:
        raise ValueError("eigenvalue lists must have equal length")
    a = a.real + 1j * np.abs(a.imag)
    b = b.real + 1j * np.abs(b.imag)
    scale = max(float(np.abs(a).max()), float(np.abs(b).max()), 1e-300)
    remaining = list(range(b.size))
    devs = np.empty(a.size)
    for i, z in enumerate(a):
        dists = [abs(z - b[j]) for j in remaining]
        pick = int(np.argmin(dists))
        j = remaining.pop(pick)
        devs[i] = abs(z - b[j]) / max(abs(z), zero_floor * scale)
    return devs


def arpack_start_vector(n: int) -> np.ndarray:
    """Deterministic generic start vector (reproducible targeted solves)."""
    return np.cos(0.7 * np.arange(n)) + 0.3


def slowest_eigenvalues(
    sup: Superoperator, count: int, k: int = 48, sigma: complex = 0.05
) -> np.ndarray:
    """The ``count`` eigenvalues of smallest |Re|, via shift-invert near ``sigma``.

    ``k`` controls how many eigenvalues the targeted solve retrieves before
    the |Re| selection; it must comfortably exceed ``count`` so slow modes
    with large imaginary parts are not missed near the selection boundary.
    """
    w = spla.eigs(
        sup.as_sparse().tocsc(),
        k=k,
        sigma=sigma,
        which="LM",
        return_eigenvectors=False,
        v0=arpack_start_vector(sup.dim),
    )
    order = np.lexsort((np.abs(w.imag), np.abs(w.real)))
    return w[order][:count]


def splitting_diagnostic(
    report: SpectrumReport, threshold: float = 10.0
) -> SplittingDiagnostic:
    """Locate the dominant break in the distinct-rate ladder.

    The break is the largest ratio between consecutive distinct rates; the
    reported ratio compares the rate just above the break with the gap, and
    the metastable flag fires when it exceeds ``threshold``.
    """
    rates = report.distinct_rates
    if rates.size < 2:
        raise SpectrumDiagnosticError(
            "splitting diagnostic requires at least 2 distinct nonzero rates"
        )
    consecutive = rates[1:] / rates[:-1]
    split = int(np.argmax(consecutive)) + 1
    ratio = float(rates[split] / report.gap)
    return SplittingDiagnostic(
        ratio=ratio,
        gap=report.gap,
        fast_rate=float(rates[split]),
        split_index=split,
        metastable=ratio > threshold,
    )
