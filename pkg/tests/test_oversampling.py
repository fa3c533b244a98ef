import numpy as np
import pytest

from dbsampling.kernel import transform
from dbsampling.numerics import integrate, make_grid
from dbsampling.oversampling import (OversamplingContext, OversamplingError,
                                     abs_sum_modified, abs_sum_plain,
                                     free_weighted_inner, kernel_tilde,
                                     oversampled_reconstruct,
                                     robustness_report, weight_R)
from dbsampling.schrodinger import Potential
from dbsampling.spectrum import free_spectrum


@pytest.fixture(scope="module")
def free_ctx():
    p = Potential.zero(np.pi)
    return OversamplingContext(potential=p, a=np.pi / 2, b=np.pi,
                               spectral_b=free_spectrum(400), zmax_hint=64.0)


@pytest.fixture(scope="module")
def cosine_ctx(cosine_pot, spec400_cosine):
    return OversamplingContext(potential=cosine_pot, a=np.pi / 2, b=np.pi,
                               spectral_b=spec400_cosine, zmax_hint=64.0)


class TestWeight:
    def test_plateau_and_ramp(self):
        a, b = np.pi / 2, np.pi
        assert weight_R(a, b, a / 2) == 1.0
        assert weight_R(a, b, b) == 0.0
        assert abs(weight_R(a, b, (a + b) / 2) - 0.5) <= 1e-15

    def test_range_validation(self):
        with pytest.raises(OversamplingError):
            weight_R(1.0, 2.0, 2.5)
        with pytest.raises(OversamplingError):
            weight_R(2.0, 1.0, 0.5)

    def test_vectorized_values_within_unit_interval(self):
        x = np.linspace(0, np.pi, 101)
        r = weight_R(1.0, np.pi, x)
        assert np.all((0.0 <= r) & (r <= 1.0))


class TestFreeWeightedInner:
    def test_against_quadrature(self):
        a = np.pi / 2
        for n, z in ((0, 0.3), (2, 3.0), (5, 17.2), (3, 9.0 + 1.0j), (7, 0.0)):
            g = make_grid(0.0, np.pi, oscillation=n + 6.0, breakpoints=[a])
            rz = np.sqrt(complex(z))
            vals = np.cos(rz * g.nodes) * weight_R(a, np.pi, g.nodes) \
                * np.cos(n * g.nodes)
            quad = integrate(g, vals)
            assert abs(free_weighted_inner(a, n, z) - quad) <= 1e-10

    def test_diagonal_limit_by_offsets(self):
        # removable singularity at z -> n^2: series branch must agree with
        # offset evaluations extrapolated to the diagonal
        a, n = np.pi / 2, 3
        at = free_weighted_inner(a, n, float(n ** 2))
        offs = [free_weighted_inner(a, n, n ** 2 + h) for h in (1e-5, -1e-5)]
        assert abs(0.5 * (offs[0] + offs[1]) - at) <= 1e-8

    def test_zero_argument_pair(self):
        a = np.pi / 2
        val = free_weighted_inner(a, 0, 0.0)
        g = make_grid(0.0, np.pi, oscillation=2.0, breakpoints=[a])
        quad = integrate(g, weight_R(a, np.pi, g.nodes))
        assert abs(val - quad) <= 1e-12


class TestKernelTilde:
    def test_free_case_matches_closed_form(self, free_ctx):
        p = free_ctx.potential
        for n, z in ((0, 0.7), (3, 5.5), (12, 30.25)):
            got = kernel_tilde(p, free_ctx, z, n)
            want = free_weighted_inner(np.pi / 2, n, z) / free_ctx.spectral_b.norming[n]
            assert abs(got - want) <= 1e-10

    def test_reconstruction_identity_free(self, free_ctx):
        # f in the small space from a flat profile: f(z) = sin(sqrt(z) a)/sqrt(z)
        p = free_ctx.potential
        a = free_ctx.a
        rows = free_ctx.rows(np.linspace(0.1, 20.0, 9), 200)
        lam = free_ctx.spectral_b.eigenvalues[:201]
        rl = np.sqrt(lam)
        samples = np.where(lam > 0, np.sin(rl * a) / np.where(rl > 0, rl, 1.0), a)
        recon = rows @ samples
        zs = np.linspace(0.1, 20.0, 9)
        exact = np.sin(np.sqrt(zs) * a) / np.sqrt(zs)
        assert np.max(np.abs(recon - exact)) <= 1e-3
        assert np.max(np.abs(recon - exact)) >= 1e-9  # truncation is visible

    def test_invalid_index(self, free_ctx):
        with pytest.raises(OversamplingError):
            kernel_tilde(free_ctx.potential, free_ctx, 1.0, 4000)

    def test_wrong_potential_rejected(self, free_ctx, cosine_pot):
        with pytest.raises(OversamplingError):
            kernel_tilde(cosine_pot, free_ctx, 1.0, 1)


class TestOversampledReconstruct:
    def test_zero_noise_reduction(self, cosine_ctx, cosine_pot):
        g = make_grid(0.0, cosine_ctx.a, oscillation=4.0)
        phi = np.cos(1.7 * g.nodes) * (1.0 + 0.2 * g.nodes)
        f = transform(cosine_pot, cosine_ctx.a, phi, g)
        from dbsampling.sampling import take_samples
        sf = take_samples(f, cosine_ctx.spectral_b, 200)
        from dbsampling.kernel import evaluate
        for z in (0.9, 7.7, 16.4):
            got = oversampled_reconstruct(cosine_ctx, sf.samples, None, z, 200)
            assert abs(got - evaluate(f, z)) <= 1e-4

    def test_noise_linearity(self, cosine_ctx):
        rng = np.random.default_rng(4)
        samples = rng.normal(size=201)
        eps = rng.uniform(-1, 1, 201)
        z = 3.3
        base = oversampled_reconstruct(cosine_ctx, samples, None, z, 200)
        noisy = oversampled_reconstruct(cosine_ctx, samples, eps, z, 200)
        direct = np.dot(cosine_ctx.rows([z], 200)[0], eps)
        assert abs((noisy - base) - direct) <= 1e-12 * (1 + abs(direct))


class TestAbsSums:
    def test_modified_sum_cauchy_off_spectrum(self, free_ctx, cosine_ctx):
        # between consecutive spectral points the weighted tails settle at
        # the 1e-3 level by N = 200
        zs = np.array([10.5, 12.5, 14.5, 18.0, 19.5])
        for ctx in (free_ctx, cosine_ctx):
            s200 = abs_sum_modified(ctx, zs, 200)
            s400 = abs_sum_modified(ctx, zs, 400)
            assert np.all(s400 >= s200)
            assert np.max(s400 - s200) <= 1e-3

    @pytest.mark.xfail(strict=True, reason="near the sampled spectrum the "
                       "settled tail level is ~1.0e-3 (free) to ~2.4e-3 "
                       "(cosine); see decisions ledger")
    def test_modified_sum_cauchy_near_spectrum(self, free_ctx, cosine_ctx):
        zs = np.linspace(0.0, 20.0, 25)
        for ctx in (free_ctx, cosine_ctx):
            tails = abs_sum_modified(ctx, zs, 400) - abs_sum_modified(ctx, zs, 200)
            assert np.max(tails) <= 1e-3

    def test_modified_sum_bounded_everywhere(self, free_ctx, cosine_ctx):
        zs = np.linspace(0.0, 20.0, 25)
        for ctx in (free_ctx, cosine_ctx):
            tails = abs_sum_modified(ctx, zs, 400) - abs_sum_modified(ctx, zs, 200)
            assert np.all(tails >= 0.0) and np.max(tails) <= 3e-3

    def test_plain_sum_grows_much_faster(self, free_ctx):
        # the unweighted series of absolute values is far from settled at the
        # same truncation: its tail dominates the weighted tail tenfold
        p = free_ctx.potential
        sd = free_ctx.spectral_b
        z = np.array([30.25])
        t200 = abs_sum_plain(p, sd, z, 200)
        t400 = abs_sum_plain(p, sd, z, 400)
        s200 = abs_sum_modified(free_ctx, z, 200)
        s400 = abs_sum_modified(free_ctx, z, 400)
        assert (t400 - t200)[0] >= 10.0 * (s400 - s200)[0]


class TestRobustnessReport:
    def test_report_structure_and_bound(self, cosine_ctx, cosine_pot):
        g = make_grid(0.0, cosine_ctx.a, oscillation=4.0)
        phi = np.exp(-g.nodes) + 0.1 * np.sin(3 * g.nodes)
        f = transform(cosine_pot, cosine_ctx.a, phi, g)
        zs = np.linspace(0.0, 20.0, 9)
        rep = robustness_report(cosine_ctx, f, (1e-1, 1e-2, 1e-3), zs, 200,
                                seed=7, trials=2)
        assert rep.empirical_c > 0 and np.isfinite(rep.empirical_c)
        assert rep.max_trial_excess <= 1e-12 * (1.0 + rep.empirical_c)
        assert rep.ratio_spread < 0.10
        assert rep.truncation_floor < 1e-6
        d = rep.to_json_dict()
        assert set(d) >= {"a", "b", "gamma", "N", "deltas", "empirical_C",
                          "ratios", "pass"}

    def test_zero_delta_hits_floor(self, cosine_ctx, cosine_pot):
        g = make_grid(0.0, cosine_ctx.a, oscillation=3.0)
        f = transform(cosine_pot, cosine_ctx.a, np.ones(g.size), g)
        zs = np.linspace(0.5, 10.0, 4)
        from dbsampling.kernel import evaluate_many
        from dbsampling.sampling import take_samples
        sf = take_samples(f, cosine_ctx.spectral_b, 150)
        rows = cosine_ctx.rows(zs, 150)
        recon = rows @ sf.samples
        exact = evaluate_many(f, zs)
        assert np.max(np.abs(recon - exact)) < 1e-5

    def test_large_function_rejected(self, cosine_ctx, cosine_pot):
        g = make_grid(0.0, np.pi, oscillation=3.0)
        f = transform(cosine_pot, np.pi, np.ones(g.size), g)
        with pytest.raises(OversamplingError):
            robustness_report(cosine_ctx, f, (1e-2,), [1.0], 100, seed=1)
