"""Time evolution, steady states, relaxation fits and truncation checks.

Two evolution paths: adaptive ODE integration of the vectorized state, and
spectral expansion rho(t) = sum_k c_k e^{w_k t} r_k when the generator is
safely diagonalizable.  They cross-check each other; neither renormalizes
drifting traces - accuracy failures surface as errors.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse.linalg as spla

from .errors import (
    FitWindowError,
    KernelAmbiguityError,
    NumericalAccuracyError,
    StateValidityError,
    TruncationLimitError,
    UnsupportedRegimeError,
)
from .linalg import EigenDecomposition, eig_general, integrate_ode, null_space
from .models import MasterEquation, ModelParams, Superoperator, unvec, vec, vectorize
from .operators import SystemSpace, atomic_space, make_space

#: default slacks for density-matrix invariants at construction time
HERM_TOL = 1e-10
TRACE_TOL = 1e-8
POSITIVITY_TOL = 1e-8

#: invariant slack enforced along integrated trajectories
EVOLUTION_INVARIANT_TOL = 1e-6


@dataclass(frozen=True)
class DensityMatrix:
    """Validated density matrix on a SystemSpace (or the atomic-only space)."""

    matrix: np.ndarray
    space: SystemSpace

    @classmethod
    def from_matrix(
        cls,
        matrix: np.ndarray,
        space: SystemSpace,
        herm_tol: float = HERM_TOL,
        trace_tol: float = TRACE_TOL,
        pos_tol: float = POSITIVITY_TOL,
    ) -> "DensityMatrix":
        m = np.asarray(matrix, dtype=complex)
        if m.shape != (space.dim, space.dim):
            raise StateValidityError(
                f"state shape {m.shape} does not match space dimension {space.dim}"
            )
        herm_dev = float(np.abs(m - m.conj().T).max())
        if herm_dev > herm_tol:
            raise StateValidityError(f"Hermiticity deviation {herm_dev:.3e} > {herm_tol:.1e}")
        trace_dev = abs(np.trace(m) - 1.0)
        if trace_dev > trace_tol:
            raise StateValidityError(f"trace deviation {trace_dev:.3e} > {trace_tol:.1e}")
        min_eig = float(np.linalg.eigvalsh((m + m.conj().T) / 2.0).min())
        if min_eig < -pos_tol:
            raise StateValidityError(f"negative eigenvalue {min_eig:.3e} < -{pos_tol:.1e}")
        return cls(m, space)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class Trajectory:
    """States sampled on a time grid (times in units of 1/kappa)."""

    times: np.ndarray
    states: tuple[DensityMatrix, ...]
    model: str = ""

    def observable(self, fn: Callable[[DensityMatrix], float]) -> np.ndarray:
        return np.array([fn(s) for s in self.states])

    def __len__(self) -> int:
        return len(self.states)


@dataclass(frozen=True)
class RelaxationEstimate:
    tau_fit: float
    fit_window: tuple[float, float]
    residual: float
    method: str


# ---------------------------------------------------------------------------
# state constructors
# ---------------------------------------------------------------------------


def pure_state(vector: np.ndarray, space: SystemSpace) -> DensityMatrix:
    v = np.asarray(vector, dtype=complex)
    v = v / np.linalg.norm(v)
    return DensityMatrix.from_matrix(np.outer(v, v.conj()), space)


def basis_vector(space: SystemSpace, atom1: int, atom2: int, n: int = 0) -> np.ndarray:
    """Product basis ket |atom1 atom2 n>; atom indices 0 = ground, 1 = excited."""
    v1 = np.zeros(2, dtype=complex)
    v1[atom1] = 1.0
    v2 = np.zeros(2, dtype=complex)
    v2[atom2] = 1.0
    out = np.kron(v1, v2)
    if space.has_field:
        vf = np.zeros(space.fock_cutoff, dtype=complex)
        vf[n] = 1.0
        out = np.kron(out, vf)
    return out


def ground_state(space: SystemSpace) -> DensityMatrix:
    """Both atoms in the ground state, cavity in the vacuum (the default of
    every time-evolution scenario)."""
    return pure_state(basis_vector(space, 0, 0, 0), space)


def singlet_state() -> DensityMatrix:
    """Atomic singlet (|ge> - |eg>)/sqrt(2), the collective dark state."""
    space = atomic_space()
    v = (basis_vector(space, 0, 1) - basis_vector(space, 1, 0)) / np.sqrt(2.0)
    return pure_state(v, space)


def bell_state() -> DensityMatrix:
    """(|gg> + |ee>)/sqrt(2) on the atomic space."""
    space = atomic_space()
    v = (basis_vector(space, 0, 0) + basis_vector(space, 1, 1)) / np.sqrt(2.0)
    return pure_state(v, space)


def maximally_mixed(space: SystemSpace) -> DensityMatrix:
    return DensityMatrix.from_matrix(
        np.eye(space.dim, dtype=complex) / space.dim, space
    )


# ---------------------------------------------------------------------------
# time grids
# ---------------------------------------------------------------------------


def time_grid(
    t_max: float, points: int, spacing: str = "log", t_min: float = 0.1
) -> np.ndarray:
    """Sampling grid starting at 0; log-uniform over [t_min, t_max] by default."""
    if t_max <= 0.0 or points < 2:
        raise ValueError("time grid requires t_max > 0 and points >= 2")
    if spacing == "log":
        if t_min <= 0.0 or t_min >= t_max:
            raise ValueError("log spacing requires 0 < t_min < t_max")
        body = np.logspace(np.log10(t_min), np.log10(t_max), points)
        body[-1] = t_max
        return np.concatenate(([0.0], body))
    if spacing == "linear":
        return np.linspace(0.0, t_max, points + 1)
    raise ValueError(f"unknown spacing {spacing!r}")


# ---------------------------------------------------------------------------
# evolution
# ---------------------------------------------------------------------------


def _check_sample(
    m: np.ndarray, t: float, tol: float
) -> None:
    herm = float(np.abs(m - m.conj().T).max())
    tr = abs(np.trace(m) - 1.0)
    min_eig = float(np.linalg.eigvalsh((m + m.conj().T) / 2.0).min())
    if herm > tol or tr > tol or min_eig < -tol:
        raise NumericalAccuracyError(
            f"state invariants violated at t={t:.6g}: hermiticity {herm:.2e}, "
            f"trace {tr:.2e}, min eigenvalue {min_eig:.2e} (slack {tol:.0e}); "
            "tighten rtol/atol"
        )


def _as_trajectory(
    raw: np.ndarray,
    t_grid: np.ndarray,
    space: SystemSpace,
    model: str,
    validate: bool,
    invariant_tol: float,
) -> Trajectory:
    states = []
    for row, t in zip(raw, t_grid):
        m = unvec(row)
        if validate:
            _check_sample(m, t, invariant_tol)
        states.append(DensityMatrix(m, space))
    return Trajectory(np.asarray(t_grid, dtype=float), tuple(states), model)


def evolve_ode(
    sup: Superoperator,
    rho0: DensityMatrix,
    t_grid: np.ndarray,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    validate: bool = True,
    invariant_tol: float = EVOLUTION_INVARIANT_TOL,
) -> Trajectory:
    """Integrate rho' = L rho on the grid (grid must start at 0).

    Stiff Liouvillians are handled by passing the sparse generator as the
    Jacobian.  State invariants are checked at every sample; violations raise
    instead of being renormalized away.
    """
    jac = sup.dense if sup.dense is not None else sup.as_sparse()
    raw = integrate_ode(sup.apply, vec(rho0.matrix), t_grid, rtol=rtol, atol=atol, jac=jac)
    return _as_trajectory(
        raw, t_grid, rho0.space, sup.me.label, validate, invariant_tol
    )


def evolve_spectral(
    decomp: EigenDecomposition,
    rho0: DensityMatrix,
    t_grid: np.ndarray,
    validate: bool = True,
    invariant_tol: float = EVOLUTION_INVARIANT_TOL,
    model: str = "",
) -> Trajectory:
    """Evolve through the eigenbasis: rho(t) = sum c_k e^{w_k t} r_k.

    Refuses near-defective decompositions (eigenvector condition above the
    guard threshold); fall back to ``evolve_ode`` in that case.
    """
    if decomp.near_defective:
        raise UnsupportedRegimeError(
            "eigendecomposition is near-defective (condition estimate "
            f"{decomp.condition_estimate:.2e}); use evolve_ode instead"
        )
    v = decomp.right_eigenvectors
    c = np.linalg.solve(v, vec(rho0.matrix))
    t = np.asarray(t_grid, dtype=float)
    phases = np.exp(np.outer(t, decomp.eigenvalues))  # (T, n)
    raw = (phases * c) @ v.T
    return _as_trajectory(raw, t, rho0.space, model, validate, invariant_tol)


def evolve(
    me: MasterEquation,
    rho0: DensityMatrix,
    t_grid: np.ndarray,
    prefer_spectral: bool | None = None,
    **kwargs,
) -> Trajectory:
    """Evolve under a model, choosing the spectral path when it is safe.

    Spectral evolution requires a dense diagonalization; it is preferred for
    small generators (and mandatory when oscillation frequencies times the
    final time are astronomically large).  Falls back to ODE integration when
    near-defectiveness is detected.
    """
    sup = vectorize(me, materialize=me.dim**2 <= 4096)
    use_spectral = prefer_spectral
    if use_spectral is None:
        use_spectral = sup.dense is not None
    if use_spectral:
        decomp = eig_general(sup.as_dense())
        if not decomp.near_defective:
            return evolve_spectral(decomp, rho0, t_grid, model=me.label, **kwargs)
    return evolve_ode(sup, rho0, t_grid, **kwargs)


# ---------------------------------------------------------------------------
# steady states
# ---------------------------------------------------------------------------


def _kernel_basis(sup: Superoperator, adjoint: bool, zero_tol: float) -> np.ndarray:
    """Orthonormal kernel basis of L (or L^dag), dense or targeted.

    The dense SVD route is kept for small generators; above that the kernel
    comes from a shift-invert solve near zero (the SVD cost grows cubically
    and dominates well before the dense cap is reached).
    """
    if sup.dim <= 1500:
        mat = sup.as_dense()
        if adjoint:
            mat = mat.conj().T
        return null_space(mat, tol=zero_tol)
    mat = sup.as_sparse().tocsc()
    if adjoint:
        mat = mat.conj().T.tocsc()
    k = min(8, sup.dim - 2)
    from .spectra import arpack_start_vector

    w, v = spla.eigs(mat, k=k, sigma=1e-3, which="LM", v0=arpack_start_vector(sup.dim))
    scale = max(float(np.abs(w).max()), 1.0)
    keep = np.abs(w) <= 1e3 * zero_tol * scale
    basis = v[:, keep]
    q, _ = np.linalg.qr(basis)
    return q


def steady_state(
    sup: Superoperator,
    rho0: DensityMatrix | None = None,
    zero_tol: float = 1e-9,
) -> DensityMatrix:
    """Stationary state of the generator.

    A 1-dimensional kernel yields the unique trace-normalized kernel element.
    A degenerate kernel requires ``rho0``: the t -> infinity limit is the
    projection of rho0 onto the kernel along the decaying eigenspaces,
    computed from the right and left zero-eigenvectors (conserved quantities).
    """
    space = _space_of(sup)
    right = _kernel_basis(sup, adjoint=False, zero_tol=zero_tol)
    kdim = right.shape[1]
    if kdim == 0:
        raise NumericalAccuracyError("no kernel vector found; not a Lindblad generator?")
    if kdim == 1:
        m = unvec(right[:, 0])
        m = m / np.trace(m)
        m = (m + m.conj().T) / 2.0
        return DensityMatrix.from_matrix(m, space)
    if rho0 is None:
        raise KernelAmbiguityError(
            f"kernel is {kdim}-dimensional; the asymptotic state depends on the "
            "initial state - pass rho0"
        )
    left = _kernel_basis(sup, adjoint=True, zero_tol=zero_tol)
    if left.shape[1] != kdim:
        raise NumericalAccuracyError(
            f"left/right kernel dimensions disagree ({left.shape[1]} vs {kdim})"
        )
    overlap = left.conj().T @ right
    coeff = np.linalg.solve(overlap, left.conj().T @ vec(rho0.matrix))
    m = unvec(right @ coeff)
    m = (m + m.conj().T) / 2.0
    return DensityMatrix.from_matrix(m, space)


def _space_of(sup: Superoperator) -> SystemSpace:
    return sup.me.space


# ---------------------------------------------------------------------------
# relaxation fits and plateaus
# ---------------------------------------------------------------------------


def trace_norm(m: np.ndarray) -> float:
    """Tr sqrt(X^dag X) = sum of singular values."""
    return float(np.linalg.svd(m, compute_uv=False).sum())


def fit_relaxation(
    traj: Trajectory,
    rho_ss: DensityMatrix,
    min_decay: float = 0.1,
) -> RelaxationEstimate:
    """Fit tau from the exponential tail of ||rho(t) - rho_ss||.

    Requires the final distance below ``min_decay`` times the initial one.
    The fit window starts at the first sample whose distance has fallen below
    the geometric half-decay point sqrt(d_initial * d_final) - the midpoint
    of the decay on a log scale - so the window covers the final log-linear
    regime even in the presence of an intermediate plateau.
    """
    d = np.array([trace_norm(s.matrix - rho_ss.matrix) for s in traj.states])
    t = traj.times
    positive = d > 0.0
    if not positive[0] or d[0] == 0.0:
        raise FitWindowError("initial state coincides with the steady state")
    if d[-1] >= min_decay * d[0]:
        raise FitWindowError(
            f"trajectory has not decayed enough to fit: final/initial distance "
            f"= {d[-1] / d[0]:.3g} >= {min_decay}"
        )
    threshold = np.sqrt(d[0] * max(d[-1], 1e-300))
    below = np.nonzero(d <= threshold)[0]
    start = int(below[0])
    window = slice(start, len(d))
    tw = t[window]
    dw = d[window]
    good = dw > 0.0
    tw, dw = tw[good], dw[good]
    if tw.size < 3:
        raise FitWindowError("fewer than 3 usable samples in the fit window")
    slope, intercept = np.polyfit(tw, np.log(dw), 1)
    if slope >= 0.0:
        raise FitWindowError("tail distance is not decaying; cannot fit a rate")
    resid = float(np.sqrt(np.mean((np.log(dw) - (slope * tw + intercept)) ** 2)))
    return RelaxationEstimate(
        tau_fit=float(-1.0 / slope),
        fit_window=(float(tw[0]), float(tw[-1])),
        residual=resid,
        method="trajectory-fit",
    )


def detect_plateau(
    times: np.ndarray,
    values: np.ndarray,
    slope_tol: float = 0.01,
    min_decades: float = 1.0,
) -> list[tuple[float, float]]:
    """Flat windows of a log-sampled series.

    A plateau is a maximal window where |d(value)/d(log10 t)| stays below
    ``slope_tol`` times the series range and which spans at least
    ``min_decades`` decades.  Expects t > 0 samples (leading zeros are
    dropped); returns (t_start, t_end) pairs.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    keep = t > 0.0
    t, v = t[keep], v[keep]
    if t.size < 3:
        return []
    x = np.log10(t)
    vrange = float(v.max() - v.min())
    slopes = np.diff(v) / np.diff(x)
    flat = np.abs(slopes) <= slope_tol * vrange
    windows: list[tuple[float, float]] = []
    i = 0
    while i < flat.size:
        if flat[i]:
            j = i
            while j + 1 < flat.size and flat[j + 1]:
                j += 1
            if x[j + 1] - x[i] >= min_decades:
                windows.append((float(t[i]), float(t[j + 1])))
            i = j + 1
        i += 1
    return windows


# ---------------------------------------------------------------------------
# truncation convergence
# ---------------------------------------------------------------------------


def check_truncation(
    builder: Callable[[SystemSpace, ModelParams], MasterEquation],
    params: ModelParams,
    extractor: Callable[[MasterEquation], float],
    rel_tol: float = 1e-3,
    start: int = 4,
    hard_cap: int = 512,
) -> int:
    """Double the Fock cutoff until the extracted observable stabilizes.

    Returns the first cutoff whose observable differs from the previous
    (half-size) one by less than ``rel_tol`` in relative terms.
    """
    cutoff = start
    prev = extractor(builder(make_space(cutoff), params))
    while cutoff < hard_cap:
        cutoff *= 2
        cur = extractor(builder(make_space(cutoff), params))
        denom = max(abs(cur), abs(prev), 1e-300)
        if abs(cur - prev) <= rel_tol * denom:
            return cutoff
        prev = cur
    raise TruncationLimitError(
        f"observable did not converge below relative change {rel_tol} by cutoff {hard_cap}"
    )


def converged_cutoff_for_gap(
    builder: Callable[[SystemSpace, ModelParams], MasterEquation],
    params: ModelParams,
    rel_tol: float = 1e-3,
    start: int = 4,
    hard_cap: int = 512,
    k: int = 12,
) -> int:
    """Truncation sweep using the spectral gap as the convergence observable.

    Always uses the targeted shift-invert path: the sweep visits sizes where
    full dense diagonalization would dominate the runtime for no benefit.
    """
    from .spectra import analyze  # local import to avoid a cycle

    def gap_of(me: MasterEquation) -> float:
        sup = vectorize(me, materialize=False)
        return analyze(sup, k=k, force_targeted=True).gap

    return check_truncation(builder, params, gap_of, rel_tol, start, hard_cap)
