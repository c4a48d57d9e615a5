import numpy as np
import pytest
from numpy.testing import assert_allclose

from atomcavity import ModelParams, atomic_space, make_space, models
from atomcavity.errors import DimensionLimitError, UnsupportedRegimeError
from atomcavity.models import (
    MasterEquation,
    Superoperator,
    build_coherent_displaced,
    build_effective_coherent,
    build_effective_incoherent,
    build_full,
    build_full_displaced,
    build_incoherent,
    build_rwa_displaced,
    unvec,
    vec,
    vectorize,
)
from atomcavity.operators import LabeledOperator, SystemSpace, collective_spin, dressed_spin

from conftest import random_hermitian


def trace_functional_residual(sup: Superoperator, rho: np.ndarray) -> float:
    """|<vec(I), L vec(rho)>| = |d/dt Tr rho|."""
    d = sup.hilbert_dim
    out = sup.apply(vec(rho))
    return abs(np.trace(unvec(out)))


class TestParams:
    def test_kappa_pinned(self):
        with pytest.raises(ValueError):
            ModelParams(g0=0.1, kappa=2.0)

    def test_negative_rate_rejected(self):
        with pytest.raises(ValueError):
            ModelParams(g0=0.1, gamma=-1.0)

    def test_effective_rates(self):
        p = ModelParams(g0=0.25, eps=10.0)
        assert_allclose(p.gamma_eps, 1.0 / 1600.0)
        assert_allclose(p.gamma_g0, 1.0 / 64.0)


class TestVectorizeOracle:
    def test_two_level_cascade(self):
        # hand-computed: H=0, single jump a at rate kappa on a 2-dim Fock-only
        # space gives eigenvalues {0, -kappa, -kappa, -2 kappa}
        a = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
        space = SystemSpace(None)  # any 4-dim marker is wrong here; build manually
        me = MasterEquation(
            LabeledOperator("0", np.zeros((2, 2), dtype=complex)),
            ((LabeledOperator("a", a), 1.0),),
            _TwoDim(),
        )
        sup = vectorize(me)
        w = np.linalg.eigvals(sup.as_dense())
        assert_allclose(sorted(w.real), [-2.0, -1.0, -1.0, 0.0], atol=1e-12)
        assert_allclose(w.imag, 0.0, atol=1e-12)

    def test_effective_coherent_matches_table(self):
        from atomcavity import spectra

        p = ModelParams(g0=0.25, eps=10.0)
        sup = vectorize(build_effective_coherent(p))
        rep = spectra.analyze(sup)
        match = spectra.compare_spectra(rep, spectra.analytic_coherent(p))
        assert match.all_matched

    def test_steady_state_annihilated(self):
        from atomcavity.dynamics import ground_state, steady_state

        p = ModelParams(g0=0.1, n_th=2.0)
        sup = vectorize(build_effective_incoherent(p))
        ss = steady_state(sup, ground_state(atomic_space()))
        resid = np.linalg.norm(sup.apply(vec(ss.matrix)))
        assert resid <= 1e-10 * sup.norm_estimate()

    def test_dense_cap(self):
        p = ModelParams(g0=0.1, n_th=1.0)
        me = build_incoherent(make_space(32), p)
        with pytest.raises(DimensionLimitError):
            vectorize(me, materialize=True)
        sup = vectorize(me, materialize=False)
        assert sup.dense is None and sup.as_sparse().shape == (128**2, 128**2)


class _TwoDim:
    """Minimal space stand-in for the 2-level cascade oracle."""

    dim = 2
    has_field = True
    fock_cutoff = 2
    dims = (2,)


class TestBuildFull:
    def test_pure_cavity_decay_vacuum_stationary(self):
        p = ModelParams(g0=0.0, eps=0.0)
        space = make_space(3)
        me = build_full(space, p)
        sup = vectorize(me)
        # vacuum (x) any atomic state is stationary
        for atomic in (0, 3):
            rho = np.zeros((12, 12), dtype=complex)
            rho[atomic * 3, atomic * 3] = 1.0
            assert np.linalg.norm(sup.apply(vec(rho))) < 1e-12

    def test_reduces_to_displaced_form_termwise(self):
        # gamma=0, n_th=0: H = H_TC + H_d with single dissipator (a, kappa),
        # and H equals the dressed-basis form of the displaced builder plus
        # the drive (the displaced H1 with Omega from the same params)
        p = ModelParams(g0=0.25, eps=2.0)
        space = make_space(4)
        me = build_full(space, p)
        assert len(me.dissipators) == 1
        op, rate = me.dissipators[0]
        assert op.label == "a" and rate == 1.0
        # H is exactly H_TC + i eps (a^dag - a)
        from atomcavity.operators import annihilation

        a = annihilation(space).matrix
        sp_ = collective_spin(space, "plus").matrix
        sx = collective_spin(space, "x").matrix
        h_tc = p.g0 * (a @ sp_ + a.conj().T @ sp_.conj().T)
        h_d = 1j * p.eps * (a.conj().T - a)
        assert_allclose(me.hamiltonian.matrix, h_tc + h_d, atol=1e-14)
        # and H_TC + Omega S_x equals the displaced H1 (basis identity)
        h1 = build_coherent_displaced(space, p).hamiltonian.matrix
        assert_allclose(h_tc + p.omega * sx, h1, atol=1e-13)

    def test_fig5_model_has_atomic_channels(self):
        p = ModelParams(g0=0.1, eps=np.sqrt(10.0), gamma=1e-3)
        me = build_full(make_space(2), p)
        labels = [op.label for op, _ in me.dissipators]
        assert labels == ["a", "sigma_minus^1", "sigma_minus^2"]
        rates = [r for _, r in me.dissipators]
        assert_allclose(rates, [1.0, 5e-4, 5e-4])

    def test_thermal_case_equals_build_incoherent(self):
        p = ModelParams(g0=0.05, eps=0.0, n_th=1.5)
        space = make_space(3)
        me_full = build_full(space, p)
        me_inc = build_incoherent(space, p)
        assert_allclose(me_full.hamiltonian.matrix, me_inc.hamiltonian.matrix)
        assert len(me_full.dissipators) == len(me_inc.dissipators) == 2
        for (o1, r1), (o2, r2) in zip(me_full.dissipators, me_inc.dissipators):
            assert_allclose(o1.matrix, o2.matrix)
            assert r1 == r2


class TestDisplacedModels:
    def test_eps_zero_reduces_to_tc(self):
        p = ModelParams(g0=0.3, eps=0.0)
        space = make_space(3)
        h1 = build_coherent_displaced(space, p).hamiltonian.matrix
        h_full = build_full(space, p).hamiltonian.matrix
        assert_allclose(h1, h_full, atol=1e-14)

    def test_regime_guard(self):
        with pytest.raises(UnsupportedRegimeError):
            build_coherent_displaced(make_space(2), ModelParams(g0=0.1, n_th=1.0))
        with pytest.raises(UnsupportedRegimeError):
            build_full_displaced(make_space(2), ModelParams(g0=0.1, n_th=0.5))

    def test_isospectral_with_lab_frame(self):
        # similarity invariance at eps=2, g0=1/4 on the 10 slowest eigenvalues
        from atomcavity import spectra

        p = ModelParams(g0=0.25, eps=2.0)
        lab = vectorize(build_full(make_space(24), p), materialize=False)
        disp = vectorize(build_coherent_displaced(make_space(10), p), materialize=False)
        w_lab = spectra.slowest_eigenvalues(lab, 10)
        w_disp = spectra.slowest_eigenvalues(disp, 10)
        devs = spectra.match_eigenvalue_sets(w_lab, w_disp)
        assert devs.max() < 1e-3

    def test_gamma_variant_isospectral_with_lab_frame(self):
        # the displacement commutes with the atomic decay channels, so the
        # gamma > 0 displaced surrogate shares the lab-frame spectrum
        from atomcavity import spectra

        p = ModelParams(g0=0.25, eps=1.0, gamma=0.05)
        lab = vectorize(build_full(make_space(20), p), materialize=False)
        disp = vectorize(build_full_displaced(make_space(10), p), materialize=False)
        w_lab = spectra.slowest_eigenvalues(lab, 10, k=40, sigma=0.02)
        w_disp = spectra.slowest_eigenvalues(disp, 10, k=40, sigma=0.02)
        devs = spectra.match_eigenvalue_sets(w_lab, w_disp)
        assert devs.max() < 1e-3


class TestRwaDisplaced:
    def test_decoupled_limit(self):
        # g0 -> 0: H collapses to the bare Omega J_z rotation on top of cavity
        # decay; the J_+- rates stay at kappa (kappa/4 eps)^2 by construction
        # (g0/4 Omega = kappa/4 eps is g0-independent)
        p = ModelParams(g0=1e-12, eps=100.0)
        me = build_rwa_displaced(make_space(3), p)
        jz = dressed_spin(make_space(3), "z").matrix
        assert_allclose(me.hamiltonian.matrix, p.omega * jz, atol=1e-10)
        assert me.dissipators[0][1] == 1.0  # cavity channel at kappa
        assert me.dissipators[1][1] == pytest.approx(p.gamma_eps)

    def test_regime_warning(self):
        with pytest.warns(UserWarning):
            build_rwa_displaced(make_space(2), ModelParams(g0=0.25, eps=1.0))

    def test_cross_terms_annihilate_trace(self, rng):
        p = ModelParams(g0=0.25, eps=100.0)
        space = make_space(4)
        me = build_rwa_displaced(space, p)
        cross_only = MasterEquation(
            LabeledOperator("0", np.zeros((space.dim, space.dim), dtype=complex)),
            (),
            space,
            cross_terms=me.cross_terms,
        )
        sup = vectorize(cross_only, materialize=False)
        for _ in range(5):
            rho = random_hermitian(space.dim, rng)
            assert trace_functional_residual(sup, rho) < 1e-12

    def test_cross_terms_preserve_hermiticity(self, rng):
        p = ModelParams(g0=0.25, eps=100.0)
        space = make_space(3)
        sup = vectorize(build_rwa_displaced(space, p), materialize=False)
        rho = random_hermitian(space.dim, rng)
        out = unvec(sup.apply(vec(rho)))
        assert_allclose(out, out.conj().T, atol=1e-12)

    def test_atomic_reduction_matches_effective(self):
        # adiabatic elimination cross-model oracle at desk scale:
        # mutual-information trajectories agree to 1e-3 for eps=1000, g0=1/4
        from atomcavity import dynamics as dyn
        from atomcavity import observables as obs
        from atomcavity.linalg import eig_general

        p = ModelParams(g0=0.25, eps=1000.0)
        space = make_space(4)
        # the elimination carries an O(1/kappa) time offset, so compare after
        # the initial rise has completed
        grid = dyn.time_grid(2.0e4, 40, t_min=40.0)

        sup_rwa = vectorize(build_rwa_displaced(space, p), materialize=False)
        dec = eig_general(sup_rwa.as_dense(cap=4096))
        traj_rwa = dyn.evolve_spectral(dec, dyn.ground_state(space), grid, validate=False)
        mi_rwa = np.array([obs.atomic_mutual_information(s) for s in traj_rwa.states])

        sup_eff = vectorize(build_effective_coherent(p))
        dec_e = eig_general(sup_eff.as_dense())
        traj_eff = dyn.evolve_spectral(dec_e, dyn.ground_state(atomic_space()), grid)
        mi_eff = np.array([obs.mutual_information(s) for s in traj_eff.states])
        assert np.max(np.abs(mi_rwa - mi_eff)) < 1e-3


class TestEffectiveModels:
    def test_effective_coherent_rates(self):
        p = ModelParams(g0=0.25, eps=10.0)
        me = build_effective_coherent(p)
        rates = {op.label: r for op, r in me.dissipators}
        assert_allclose(rates["J_minus"], 1.0 / 1600.0)
        assert_allclose(rates["J_plus"], 1.0 / 1600.0)
        assert_allclose(rates["J_z"], 1.0 / 64.0)

    def test_effective_coherent_requires_drive(self):
        with pytest.raises(UnsupportedRegimeError):
            build_effective_coherent(ModelParams(g0=0.25, eps=0.0))

    def test_incoherent_requires_no_drive(self):
        with pytest.raises(UnsupportedRegimeError):
            build_incoherent(make_space(2), ModelParams(g0=0.1, eps=1.0))

    def test_effective_incoherent_dark_singlet(self):
        from atomcavity.dynamics import singlet_state

        p = ModelParams(g0=0.1, n_th=0.0)
        sup = vectorize(build_effective_incoherent(p))
        s = singlet_state()
        assert np.linalg.norm(sup.apply(vec(s.matrix))) < 1e-12

    def test_kernel_dimension_two(self):
        from atomcavity.linalg import null_space

        for me in (
            build_effective_coherent(ModelParams(g0=0.25, eps=10.0)),
            build_effective_incoherent(ModelParams(g0=0.1, n_th=10.0)),
            build_effective_incoherent(ModelParams(g0=0.1, n_th=0.5)),
        ):
            sup = vectorize(me)
            assert null_space(sup.as_dense(), tol=1e-10).shape[1] == 2


class TestGeneratorInvariants:
    MODELS = [
        ("full", lambda: build_full(make_space(4), ModelParams(g0=0.2, eps=1.0, n_th=0.3, gamma=0.01))),
        ("incoherent", lambda: build_incoherent(make_space(4), ModelParams(g0=0.1, n_th=1.0))),
        ("eff-coh", lambda: build_effective_coherent(ModelParams(g0=0.25, eps=10.0))),
        ("eff-inc", lambda: build_effective_incoherent(ModelParams(g0=0.1, n_th=1.0))),
    ]

    @pytest.mark.parametrize("name,factory", MODELS, ids=[m[0] for m in MODELS])
    def test_trace_hermiticity_and_spectrum(self, name, factory, rng):
        me = factory()
        sup = vectorize(me, materialize=me.dim**2 <= 4096)
        rho = random_hermitian(me.dim, rng)
        # trace functional annihilated
        assert trace_functional_residual(sup, rho) < 1e-10 * sup.norm_estimate()
        # Hermitian maps to Hermitian
        out = unvec(sup.apply(vec(rho)))
        assert_allclose(out, out.conj().T, atol=1e-12)
        # all eigenvalues in the closed left half plane (numerical slack)
        w = np.linalg.eigvals(sup.as_dense())
        assert w.real.max() <= 1e-9 * np.abs(w).max()
        # conjugate-pair symmetry of the spectrum (greedy multiset matching;
        # lexicographic sorting misaligns conjugate partners under noise)
        from atomcavity.spectra import match_eigenvalue_sets

        devs = match_eigenvalue_sets(w, w.conj())
        assert devs.max() <= 1e-7

    def test_sparse_dense_agree(self, rng):
        me = build_full(make_space(3), ModelParams(g0=0.2, eps=0.5, n_th=0.2, gamma=0.02))
        sup = vectorize(me)
        dense = sup.as_dense()
        sparse = sup.as_sparse().toarray()
        assert_allclose(dense, sparse, atol=1e-14)
        v = rng.standard_normal(me.dim**2) + 1j * rng.standard_normal(me.dim**2)
        free = Superoperator(me)
        assert_allclose(free.apply(v), dense @ v, atol=1e-11)
