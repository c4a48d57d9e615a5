"""Dense complex linear-algebra kernel.

Everything the physics layers consume: Kronecker products, general and
Hermitian eigendecompositions with residual checks, SVD-based null spaces,
and adaptive integration of linear ODEs.  All functions are pure and all
returned arrays are freshly allocated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp

from .errors import (
    DimensionLimitError,
    HermiticityError,
    NumericalAccuracyError,
    ShapeError,
    StiffnessError,
)

#: dimension above which dense eigendecompositions are refused
DENSE_EIG_CAP = 4096

#: per-axis entry cap for Kronecker products
KRON_AXIS_CAP = 1_000_000

#: eigenpair residual bound, relative to ||A||_F * ||v||
EIG_RESIDUAL_TOL = 1e-9

#: eigenvector-matrix condition number above which a decomposition is
#: treated as near-defective and spectral evolution must not be used
NEAR_DEFECTIVE_COND = 1e8


@dataclass(frozen=True)
class EigenDecomposition:
    """Full spectrum of a square complex matrix.

    ``right_eigenvectors`` holds one eigenvector per column, matching the
    order of ``eigenvalues``.  ``condition_estimate`` is a 1-norm estimate of
    cond(V); values above ``NEAR_DEFECTIVE_COND`` mark the matrix as too
    close to defective for V-based reconstruction.
    """

    eigenvalues: np.ndarray
    right_eigenvectors: np.ndarray
    condition_estimate: float

    @property
    def near_defective(self) -> bool:
        return not np.isfinite(self.condition_estimate) or (
            self.condition_estimate > NEAR_DEFECTIVE_COND
        )


def _as_square(m: np.ndarray, who: str) -> np.ndarray:
    a = np.asarray(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"{who} requires a square matrix, got shape {a.shape}")
    return a.astype(complex, copy=False)


def kron(a: np.ndarray, b: np.ndarray, axis_cap: int = KRON_AXIS_CAP) -> np.ndarray:
    """Kronecker product with a guard against runaway dimensions."""
    a = np.asarray(a)
    b = np.asarray(b)
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if rows > axis_cap or cols > axis_cap:
        raise DimensionLimitError(
            f"kron result would be {rows}x{cols}, exceeding the per-axis cap {axis_cap}"
        )
    return np.kron(a, b)


#: below this dimension the condition number is computed exactly (2-norm SVD)
_EXACT_COND_DIM = 2048


def condition_estimate(v: np.ndarray) -> float:
    """Condition number of a square matrix.

    Exact 2-norm condition (via singular values) up to dimension 2048; above
    that a 1-norm estimate from a single LU factorization, which is
    conservative (it can exceed the 2-norm condition by up to the dimension).
    Returns ``inf`` when the factorization detects (numerical) singularity.
    """
    v = _as_square(v, "condition_estimate")
    n = v.shape[0]
    if n <= _EXACT_COND_DIM:
        s = np.linalg.svd(v, compute_uv=False)
        if s[-1] == 0.0 or not np.all(np.isfinite(s)):
            return np.inf
        return float(s[0] / s[-1])
    norm_v = np.linalg.norm(v, 1)
    if norm_v == 0.0:
        return np.inf
    try:
        lu = scipy.linalg.lu_factor(v)
    except (scipy.linalg.LinAlgError, ValueError):
        return np.inf
    diag = np.abs(np.diag(lu[0]))
    if not np.all(diag > 0.0) or not np.all(np.isfinite(diag)):
        return np.inf
    inv_op = spla.LinearOperator(
        (n, n),
        matvec=lambda x: scipy.linalg.lu_solve(lu, x),
        rmatvec=lambda x: scipy.linalg.lu_solve(lu, x, trans=2),
        dtype=complex,
    )
    try:
        norm_inv = spla.onenormest(inv_op)
    except Exception:
        norm_inv = np.linalg.norm(np.linalg.inv(v), 1)
    return float(norm_v * norm_inv)


def eig_general(
    m: np.ndarray,
    dense_cap: int = DENSE_EIG_CAP,
    residual_tol: float = EIG_RESIDUAL_TOL,
) -> EigenDecomposition:
    """Full eigendecomposition of a general complex matrix.

    Postconditions: per-pair residuals ``||A v - w v|| <= residual_tol *
    ||A||_F * ||v||`` (raises ``NumericalAccuracyError`` otherwise) and a
    populated condition estimate of the eigenvector matrix.
    """
    a = _as_square(m, "eig_general")
    n = a.shape[0]
    if n > dense_cap:
        raise DimensionLimitError(
            f"matrix dimension {n} exceeds the dense-eig cap {dense_cap}"
        )
    try:
        w, v = np.linalg.eig(a)
    except np.linalg.LinAlgError as exc:  # QR iteration failure
        raise NumericalAccuracyError(
            f"eigenvalue iteration did not converge for a {n}x{n} matrix: {exc}"
        ) from exc
    norm_a = np.linalg.norm(a)
    if norm_a > 0.0:
        residuals = np.linalg.norm(a @ v - v * w, axis=0)
        bound = residual_tol * norm_a * np.linalg.norm(v, axis=0)
        worst = int(np.argmax(residuals - bound))
        if residuals[worst] > bound[worst]:
            raise NumericalAccuracyError(
                "eigenpair residual check failed: "
                f"||A v - w v|| = {residuals[worst]:.3e} for eigenvalue "
                f"{w[worst]:.6g} exceeds {bound[worst]:.3e}"
            )
    return EigenDecomposition(w, v, condition_estimate(v))


def eig_hermitian(m: np.ndarray, herm_tol: float = 1e-10) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    a = _as_square(m, "eig_hermitian")
    norm_a = np.linalg.norm(a)
    dev = np.linalg.norm(a - a.conj().T)
    if dev > herm_tol * max(norm_a, 1e-300):
        raise HermiticityError(
            f"matrix deviates from Hermiticity by {dev:.3e} (norm {norm_a:.3e})"
        )
    w, v = np.linalg.eigh(a)
    return EigenDecomposition(w.astype(complex), v, 1.0)


def null_space(m: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Orthonormal basis of the right kernel, one vector per column.

    Keeps singular directions with ``sigma <= tol * sigma_max``.  Returns an
    ``(n, k)`` array; ``k`` may be zero.
    """
    a = _as_square(m, "null_space")
    _, s, vh = np.linalg.svd(a)
    if s.size == 0 or s[0] == 0.0:
        return np.eye(a.shape[0], dtype=complex)
    keep = s <= tol * s[0]
    return vh[keep].conj().T


def reconstruct(decomp: EigenDecomposition) -> np.ndarray:
    """Rebuild A = V diag(w) V^-1 from its decomposition."""
    v = decomp.right_eigenvectors
    scaled = v * decomp.eigenvalues[None, :]
    return np.linalg.solve(v.T, scaled.T).T


def integrate_ode(
    apply: Callable[[np.ndarray], np.ndarray],
    y0: np.ndarray,
    t_grid: np.ndarray,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    jac: np.ndarray | sp.spmatrix | None = None,
    method: str | None = None,
) -> np.ndarray:
    """Integrate ``y' = apply(y)`` on a sorted time grid starting at 0.

    Uses an adaptive explicit scheme by default; when ``jac`` (the constant
    generator matrix) is supplied the stiff BDF scheme is selected, which is
    required for Liouvillians whose rates span many orders of magnitude.
    Returns one row per grid point.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 1:
        raise ShapeError("t_grid must be a 1-D array of times")
    if t[0] != 0.0:
        raise ValueError("t_grid must start at 0")
    if t.size > 1 and not np.all(np.diff(t) > 0.0):
        raise ValueError("t_grid must be strictly increasing")
    y0 = np.asarray(y0, dtype=complex)
    if t.size == 1:
        return y0[None, :].copy()
    if method is None:
        method = "BDF" if jac is not None else "DOP853"
    kwargs = {}
    if jac is not None and method in ("BDF", "Radau", "LSODA"):
        kwargs["jac"] = sp.csc_matrix(jac) if sp.issparse(jac) else np.asarray(jac)
    sol = solve_ivp(
        lambda _t, y: apply(y),
        (0.0, float(t[-1])),
        y0,
        method=method,
        t_eval=t,
        rtol=rtol,
        atol=atol,
        **kwargs,
    )
    if sol.status != 0 or sol.y.shape[1] != t.size:
        raise StiffnessError(
            f"ODE integration failed ({sol.message!r}); the generator is likely "
            "too stiff for this method - use the spectral-decomposition path "
            "or pass the generator matrix as `jac` to select BDF"
        )
    return sol.y.T.copy()
