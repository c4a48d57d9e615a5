"""Master equations for the driven-dissipative two-atom/cavity system.

Dissipator convention (fixed, no configuration flag):

    D[O] rho = 2 O rho O^dag - O^dag O rho - rho O^dag O

i.e. the factor-2 form without a 1/2 prefactor.  All analytic gap and
eigenvalue results in this package hold only under this convention; under it
a bare cavity amplitude decays at kappa and the photon number at 2*kappa.

Vectorization is column-stacking: vec(rho) stacks columns, so
vec(A rho B) = (B^T kron A) vec(rho) and the generator reads

    L = -i (I kron H - H^T kron I)
        + sum_k r_k (2 conj(O_k) kron O_k - I kron O_k^dag O_k
                     - (O_k^dag O_k)^T kron I)

Rates and times are expressed in units of kappa, which is pinned to 1.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DimensionLimitError, ShapeError, UnsupportedRegimeError
from .operators import (
    LabeledOperator,
    SystemSpace,
    annihilation,
    atomic_space,
    collective_spin,
    creation,
    dressed_spin,
    single_atom,
)

#: largest superoperator dimension (D^2) that may be materialized densely
DENSE_SUPEROP_CAP = 4096

DISSIPATOR_CONVENTION = "factor-2"


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters, all rates in units of kappa (pinned to 1).

    g0: atom-field coupling; eps: coherent drive strength; n_th: mean thermal
    photon number of the bath; gamma: atomic decay rate.
    """

    g0: float
    eps: float = 0.0
    n_th: float = 0.0
    gamma: float = 0.0
    kappa: float = 1.0

    def __post_init__(self):
        if self.kappa != 1.0:
            raise ValueError("kappa is the unit of rate and must equal 1")
        for name in ("eps", "n_th", "gamma"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")

    @property
    def omega(self) -> float:
        """Dressed-atom splitting Omega = g0*eps/kappa."""
        return self.g0 * self.eps / self.kappa

    @property
    def gamma_eps(self) -> float:
        """Drive-side effective rate kappa*(kappa/4 eps)^2."""
        if self.eps == 0.0:
            raise UnsupportedRegimeError("gamma_eps requires eps > 0")
        return self.kappa * (self.kappa / (4.0 * self.eps)) ** 2

    @property
    def gamma_g0(self) -> float:
        """Coupling-side effective rate kappa*(g0/2 kappa)^2."""
        return self.kappa * (self.g0 / (2.0 * self.kappa)) ** 2

    @property
    def gamma_collective(self) -> float:
        """Collective-emission rate kappa*(g0/kappa)^2 of the thermal effective model."""
        return self.kappa * (self.g0 / self.kappa) ** 2


@dataclass(frozen=True)
class CrossTerm:
    """Non-Lindblad bilinear term  w * (2 A rho B^dag - B^dag A rho - rho B^dag A).

    Each such term annihilates the trace functional on its own.  Hermiticity
    preservation requires the list to be closed under (A, B, w) -> (B, A,
    conj(w)); the builders construct closed pairs.
    """

    left: np.ndarray
    right: np.ndarray
    weight: complex


@dataclass(frozen=True)
class MasterEquation:
    """Hamiltonian plus weighted jump list (and optional cross terms)."""

    hamiltonian: LabeledOperator
    dissipators: tuple[tuple[LabeledOperator, float], ...]
    space: SystemSpace
    cross_terms: tuple[CrossTerm, ...] = ()
    label: str = ""

    def __post_init__(self):
        dim = self.space.dim
        if self.hamiltonian.matrix.shape != (dim, dim):
            raise ShapeError("hamiltonian dimension does not match the space")
        for op, rate in self.dissipators:
            if op.matrix.shape != (dim, dim):
                raise ShapeError(f"jump operator {op.label} does not match the space")
            if rate < 0.0:
                raise ValueError(f"negative dissipator rate for {op.label}")
        for ct in self.cross_terms:
            if ct.left.shape != (dim, dim) or ct.right.shape != (dim, dim):
                raise ShapeError("cross-term operator does not match the space")

    @property
    def dim(self) -> int:
        return self.space.dim


class Superoperator:
    """Liouvillian acting on column-stacked density matrices.

    Carries a matrix-free applier (D x D matrix algebra) always; a sparse
    CSR form built on demand; and optionally a dense matrix when requested
    and within ``DENSE_SUPEROP_CAP``.
    """

    def __init__(self, me: MasterEquation, dense: np.ndarray | None = None):
        self.me = me
        self.hilbert_dim = me.dim
        self.dim = me.dim**2
        self._dense = dense
        self._sparse: sp.csr_matrix | None = None
        # precompute O^dag O pairs for the matrix-free applier
        self._ham = me.hamiltonian.matrix
        self._jumps = [
            (op.matrix, op.matrix.conj().T, rate) for op, rate in me.dissipators
        ]
        self._jump_odo = [od @ o for o, od, _ in self._jumps]
        self._crosses = [
            (ct.left, ct.right.conj().T, ct.right.conj().T @ ct.left, ct.weight)
            for ct in me.cross_terms
        ]

    def apply_matrix(self, rho: np.ndarray) -> np.ndarray:
        """Apply the generator to a D x D matrix."""
        h = self._ham
        out = -1j * (h @ rho - rho @ h)
        for (o, od, rate), odo in zip(self._jumps, self._jump_odo):
            out += rate * (2.0 * (o @ rho @ od) - odo @ rho - rho @ odo)
        for a, bd, bda, w in self._crosses:
            out += w * (2.0 * (a @ rho @ bd) - bda @ rho - rho @ bda)
        return out

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Apply the generator to a vectorized state."""
        if self._dense is not None:
            return self._dense @ v
        d = self.hilbert_dim
        return self.apply_matrix(v.reshape(d, d, order="F")).reshape(-1, order="F")

    @property
    def dense(self) -> np.ndarray | None:
        return self._dense

    def as_dense(self, cap: int = DENSE_SUPEROP_CAP) -> np.ndarray:
        if self._dense is None:
            if self.dim > cap:
                raise DimensionLimitError(
                    f"superoperator dimension {self.dim} exceeds the dense cap "
                    f"{cap}; use the sparse/matrix-free representation"
                )
            self._dense = _build_liouvillian(self.me, np, np.eye(self.hilbert_dim, dtype=complex))
        return self._dense

    def as_sparse(self) -> sp.csr_matrix:
        if self._sparse is None:
            self._sparse = _build_liouvillian(
                self.me, _SparseOps, sp.identity(self.hilbert_dim, dtype=complex, format="csr")
            ).tocsr()
        return self._sparse

    def norm_estimate(self) -> float:
        """1-norm of the generator (sparse path; cheap)."""
        mat = self._dense if self._dense is not None else self.as_sparse()
        return float(abs(mat).sum(axis=0).max())


class _SparseOps:
    """Adapter so the Liouvillian assembly works for numpy and scipy.sparse."""

    @staticmethod
    def kron(a, b):
        return sp.kron(a, b, format="csr")


def _build_liouvillian(me: MasterEquation, ops, eye):
    """Assemble L in the column-stacking convention; `ops` supplies kron."""
    if ops is np:
        h = me.hamiltonian.matrix
        krn = np.kron
        to_mat = lambda x: x  # noqa: E731
    else:
        krn = ops.kron
        to_mat = lambda x: sp.csr_matrix(x)  # noqa: E731
        h = to_mat(me.hamiltonian.matrix)
    lv = -1j * (krn(eye, h) - krn(h.T, eye))
    for op, rate in me.dissipators:
        o = to_mat(op.matrix)
        od = o.conj().T
        odo = od @ o
        lv = lv + rate * (2.0 * krn(o.conj(), o) - krn(eye, odo) - krn(odo.T, eye))
    for ct in me.cross_terms:
        a = to_mat(ct.left)
        b = to_mat(ct.right)
        bda = b.conj().T @ a
        lv = lv + ct.weight * (2.0 * krn(b.conj(), a) - krn(eye, bda) - krn(bda.T, eye))
    return lv


def vec(rho: np.ndarray) -> np.ndarray:
    """Column-stack a matrix into a vector."""
    return np.asarray(rho, dtype=complex).reshape(-1, order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    """Inverse of ``vec`` for square targets."""
    d = math.isqrt(v.size)
    if d * d != v.size:
        raise ShapeError(f"vector of length {v.size} is not a stacked square matrix")
    return np.asarray(v).reshape(d, d, order="F")


def vectorize(me: MasterEquation, materialize: bool = True) -> Superoperator:
    """Turn a MasterEquation into a Superoperator.

    ``materialize=True`` builds the dense D^2 x D^2 matrix (subject to
    ``DENSE_SUPEROP_CAP``); otherwise the superoperator stays matrix-free
    with a sparse form available on demand.
    """
    sup = Superoperator(me)
    if materialize:
        sup.as_dense()
    return sup


# ---------------------------------------------------------------------------
# model builders
# ---------------------------------------------------------------------------


def build_full(space: SystemSpace, params: ModelParams) -> MasterEquation:
    """Lab-frame model: Tavis-Cummings + drive, thermal cavity and atomic baths.

    H = g0 (a S_+ + a^dag S_-) + i eps (a^dag - a); dissipators
    (a, kappa(n_th+1)), (a^dag, kappa n_th), and per atom
    (sigma_-^j, gamma(n_th+1)/2), (sigma_+^j, gamma n_th/2).
    Zero-rate channels are omitted.
    """
    k = params.kappa
    a = annihilation(space)
    adag = creation(space)
    s_plus = collective_spin(space, "plus")
    s_minus = collective_spin(space, "minus")
    h = params.g0 * (a.matrix @ s_plus.matrix + adag.matrix @ s_minus.matrix)
    h = h + 1j * params.eps * (adag.matrix - a.matrix)
    diss: list[tuple[LabeledOperator, float]] = []
    if k * (params.n_th + 1.0) > 0.0:
        diss.append((a, k * (params.n_th + 1.0)))
    if k * params.n_th > 0.0:
        diss.append((adag, k * params.n_th))
    for j in (1, 2):
        if params.gamma * (params.n_th + 1.0) > 0.0:
            diss.append((single_atom(space, "minus", j), params.gamma * (params.n_th + 1.0) / 2.0))
        if params.gamma * params.n_th > 0.0:
            diss.append((single_atom(space, "plus", j), params.gamma * params.n_th / 2.0))
    return MasterEquation(
        LabeledOperator("H_TC + H_d", h), tuple(diss), space, label="full"
    )


def build_coherent_displaced(space: SystemSpace, params: ModelParams) -> MasterEquation:
    """Displaced-frame coherent model (drive removed by the displacement).

    H1 = Omega J_z + (g0/2) J_z (a^dag + a) + (g0/2)(J_+ a + J_- a^dag)
         - (g0/2)(J_+ a^dag + J_- a),  dissipator (a, kappa);
    requires n_th = 0 and gamma = 0.
    """
    if params.n_th != 0.0 or params.gamma != 0.0:
        raise UnsupportedRegimeError(
            "the displaced coherent model requires n_th = 0 and gamma = 0"
        )
    a = annihilation(space)
    adag_m = a.matrix.conj().T
    jz = dressed_spin(space, "z").matrix
    jp = dressed_spin(space, "plus").matrix
    jm = dressed_spin(space, "minus").matrix
    half_g = params.g0 / 2.0
    h = params.omega * jz
    h = h + half_g * (jz @ (adag_m + a.matrix))
    h = h + half_g * (jp @ a.matrix + jm @ adag_m)
    h = h - half_g * (jp @ adag_m + jm @ a.matrix)
    return MasterEquation(
        LabeledOperator("H_1", h),
        ((a, params.kappa),),
        space,
        label="coherent-displaced",
    )


def build_rwa_displaced(space: SystemSpace, params: ModelParams) -> MasterEquation:
    """Displaced model after the rotating-wave approximation.

    Lindblad part (a, kappa), (J_-, w), (J_+, w) with w = kappa (g0/4 Omega)^2,
    plus the two conjugate non-Lindblad cross terms carrying weight -w:
    (J_z a^dag) rho-bilinear with a, and its Hermitian partner.  Intended for
    Omega >> kappa; emits a warning when 4 eps/kappa < 10.
    """
    if params.n_th != 0.0 or params.gamma != 0.0:
        raise UnsupportedRegimeError(
            "the RWA displaced model requires n_th = 0 and gamma = 0"
        )
    if params.eps == 0.0:
        raise UnsupportedRegimeError("the RWA displaced model requires eps > 0")
    if 4.0 * params.eps / params.kappa < 10.0:
        warnings.warn(
            "RWA displaced model outside its regime: 4*eps/kappa = "
            f"{4.0 * params.eps / params.kappa:.3g} < 10",
            stacklevel=2,
        )
    omega = params.omega
    a = annihilation(space)
    am = a.matrix
    adag_m = am.conj().T
    jz = dressed_spin(space, "z").matrix
    jp = dressed_spin(space, "plus")
    jm = dressed_spin(space, "minus")
    h = omega * jz
    h = h + (params.g0 / 2.0) * (jz @ (am + adag_m))
    x = am - adag_m
    h = h - (params.g0**2 / (8.0 * omega)) * (jz @ (x @ x))
    w = params.kappa * (params.g0 / (4.0 * omega)) ** 2
    jza_dag = jz @ adag_m
    cross = (
        CrossTerm(jza_dag, am, -w),
        CrossTerm(am, jza_dag, -w),
    )
    return MasterEquation(
        LabeledOperator("H_3", h),
        ((a, params.kappa), (jm, w), (jp, w)),
        space,
        cross_terms=cross,
        label="rwa-displaced",
    )


def build_effective_coherent(params: ModelParams) -> MasterEquation:
    """Adiabatically eliminated atomic model of the coherent case (4-dim).

    H = 0; dissipators (J_-, Gamma_eps), (J_+, Gamma_eps), (J_z, Gamma_g0)
    with Gamma_eps = kappa (kappa/4 eps)^2 and Gamma_g0 = kappa (g0/2 kappa)^2.
    Valid for eps >> kappa >> g0; the spectrum is exact for the model itself
    at any parameters.
    """
    if params.eps == 0.0:
        raise UnsupportedRegimeError(
            "the effective coherent model requires eps > 0 (Gamma_eps diverges)"
        )
    space = atomic_space()
    g_eps = params.gamma_eps
    g_g0 = params.gamma_g0
    zero = LabeledOperator("0", np.zeros((4, 4), dtype=complex))
    return MasterEquation(
        zero,
        (
            (dressed_spin(space, "minus"), g_eps),
            (dressed_spin(space, "plus"), g_eps),
            (dressed_spin(space, "z"), g_g0),
        ),
        space,
        label="effective-coherent",
    )


def build_incoherent(space: SystemSpace, params: ModelParams) -> MasterEquation:
    """Lab-frame thermal model: H_TC with thermal cavity dissipators only."""
    if params.eps != 0.0:
        raise UnsupportedRegimeError("the incoherent model requires eps = 0")
    k = params.kappa
    a = annihilation(space)
    adag = creation(space)
    s_plus = collective_spin(space, "plus")
    s_minus = collective_spin(space, "minus")
    h = params.g0 * (a.matrix @ s_plus.matrix + adag.matrix @ s_minus.matrix)
    diss: list[tuple[LabeledOperator, float]] = [(a, k * (params.n_th + 1.0))]
    if k * params.n_th > 0.0:
        diss.append((adag, k * params.n_th))
    return MasterEquation(
        LabeledOperator("H_TC", h), tuple(diss), space, label="incoherent"
    )


def build_full_displaced(space: SystemSpace, params: ModelParams) -> MasterEquation:
    """Displaced-frame form of the full model at n_th = 0.

    The displacement acts on the field only, so the atomic decay channels
    pass through unchanged: H_1 with dissipators (a, kappa) and
    (sigma_-^j, gamma/2).  Unitarily equivalent to ``build_full`` (same
    spectrum, same atomic observables) but free of the drive term, which
    makes large-drive runs tractable.
    """
    if params.n_th != 0.0:
        raise UnsupportedRegimeError("the displaced full model requires n_th = 0")
    base = build_coherent_displaced(
        space, ModelParams(g0=params.g0, eps=params.eps, kappa=params.kappa)
    )
    diss = list(base.dissipators)
    if params.gamma > 0.0:
        for j in (1, 2):
            diss.append((single_atom(space, "minus", j), params.gamma / 2.0))
    return MasterEquation(
        base.hamiltonian, tuple(diss), space, label="full-displaced"
    )


def build_effective_incoherent(params: ModelParams) -> MasterEquation:
    """Adiabatically eliminated atomic model of the thermal case (4-dim).

    H = 0; dissipators (S_-, Gamma(n_th+1)), (S_+, Gamma n_th) with
    Gamma = kappa (g0/kappa)^2: two atoms sharing one thermal bath.
    """
    space = atomic_space()
    g = params.gamma_collective
    zero = LabeledOperator("0", np.zeros((4, 4), dtype=complex))
    diss: list[tuple[LabeledOperator, float]] = [
        (collective_spin(space, "minus"), g * (params.n_th + 1.0))
    ]
    if g * params.n_th > 0.0:
        diss.append((collective_spin(space, "plus"), g * params.n_th))
    return MasterEquation(zero, tuple(diss), space, label="effective-incoherent")
