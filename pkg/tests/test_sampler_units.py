"""Unit tests of every conditional update against independent oracles."""

import numpy as np
import pytest

from netresp._numeric import sample_inverse_wishart
from netresp.model import ItemResponses, LatentState, ModelConfig, NetworkData
from netresp.sampler import (
    DecorrelationCoeffs,
    _column_system,
    _draw_network_column,
    _dyad_quadform,
    augment_probit,
    conditional_block,
    decorrelate,
    update_delta,
    update_item_params,
    update_latent_dimension,
    update_rho,
    update_sigma_e,
    update_sigma_eps,
    update_sigma_utheta,
    update_theta_dimension,
)


def random_spd(rng, p, strength=1.0):
    a = rng.standard_normal((p, p))
    return a @ a.T / p + strength * np.eye(p)


class TestDecorrelation:
    def test_coeff_formulas(self):
        cd = DecorrelationCoeffs.from_params(0.5, 2.0)
        sp, sm = 1.5**-0.5, 0.5**-0.5
        assert cd.c == pytest.approx((sp + sm) / 4.0, abs=1e-15)
        assert cd.d == pytest.approx((sp - sm) / 4.0, abs=1e-15)

    def test_rho_zero(self):
        cd = DecorrelationCoeffs.from_params(0.0, 2.0)
        assert cd.c == pytest.approx(0.5) and cd.d == 0.0
        r = np.random.default_rng(0).standard_normal((5, 5))
        assert np.allclose(decorrelate(r, 0.0, 1.0), r)

    def test_invalid_rho(self):
        with pytest.raises(ValueError):
            DecorrelationCoeffs.from_params(1.0, 1.0)

    def test_symmetric_input(self):
        rng = np.random.default_rng(1)
        r = rng.standard_normal((6, 6))
        r = r + r.T
        cd = DecorrelationCoeffs.from_params(0.37, 1.3)
        assert np.allclose(decorrelate(r, 0.37, 1.3), (cd.c + cd.d) * r, atol=1e-12)

    def test_monte_carlo_whitening(self):
        # dyad errors with correlation 0.5 should come out unit-variance and
        # uncorrelated after the transform
        rng = np.random.default_rng(2)
        n_dyads = 100_000
        rho, sigma = 0.5, 1.7
        z1 = rng.standard_normal(n_dyads)
        z2 = rng.standard_normal(n_dyads)
        e_ab = sigma * z1
        e_ba = sigma * (rho * z1 + np.sqrt(1 - rho**2) * z2)
        cd = DecorrelationCoeffs.from_params(rho, sigma)
        t_ab = cd.c * e_ab + cd.d * e_ba
        t_ba = cd.c * e_ba + cd.d * e_ab
        assert t_ab.var() == pytest.approx(1.0, abs=0.02)
        assert t_ba.var() == pytest.approx(1.0, abs=0.02)
        assert np.corrcoef(t_ab, t_ba)[0, 1] == pytest.approx(0.0, abs=0.02)

    def test_quadform_identity(self):
        # sum of squared whitened off-diagonal residuals equals the dyad
        # quadratic form divided by the error variance
        rng = np.random.default_rng(3)
        e = rng.standard_normal((8, 8))
        np.fill_diagonal(e, 0.0)
        rho, sigma2 = -0.4, 2.3
        tilde = decorrelate(e, rho, np.sqrt(sigma2))
        np.fill_diagonal(tilde, 0.0)
        quad, _, _ = _dyad_quadform(e, rho)
        assert float((tilde**2).sum()) == pytest.approx(quad / sigma2, abs=1e-10)

    def test_quadform_dense_oracle(self):
        rng = np.random.default_rng(4)
        n = 7
        e = rng.standard_normal((n, n))
        np.fill_diagonal(e, 0.0)
        rho = 0.9
        c_inv = np.linalg.inv(np.array([[1.0, rho], [rho, 1.0]]))
        expected = 0.0
        for a in range(n):
            for b in range(a + 1, n):
                pair = np.array([e[a, b], e[b, a]])
                expected += pair @ c_inv @ pair
        quad, _, _ = _dyad_quadform(e, rho)
        assert quad == pytest.approx(expected, abs=1e-12)


class TestConditionalBlock:
    def test_identity(self):
        blk = conditional_block(np.eye(5), 0, 1, 3)
        assert blk.q_u == pytest.approx(1.0)
        assert np.allclose(blk.q_theta, np.eye(3))
        assert np.allclose(blk.q_theta_u, 0.0)
        assert np.allclose(blk.s_u, 0.0)

    def test_closed_form(self):
        sigma = np.array([[1.0, 0.0, 0.6], [0.0, 1.0, 0.0], [0.6, 0.0, 1.0]])
        blk = conditional_block(sigma, 0, 1, 1)
        assert blk.q_u == pytest.approx(1.0 / (1.0 - 0.36), abs=1e-12)

    def test_dense_inverse_oracle(self):
        rng = np.random.default_rng(5)
        for trial in range(100):
            k = int(rng.integers(1, 4))
            d = int(rng.integers(1, 4))
            p = 2 * k + d
            sigma = random_spd(rng, p)
            target = int(rng.integers(0, 2 * k))
            blk = conditional_block(sigma, target, k, d)
            block_idx = np.r_[target, np.arange(2 * k, p)]
            ctx = np.array([i for i in range(2 * k) if i != target])
            s_bb = sigma[np.ix_(block_idx, block_idx)]
            if ctx.size:
                s_bc = sigma[np.ix_(block_idx, ctx)]
                s_cc = sigma[np.ix_(ctx, ctx)]
                cond = s_bb - s_bc @ np.linalg.inv(s_cc) @ s_bc.T
                coef = s_bc @ np.linalg.inv(s_cc)
            else:
                cond = s_bb
                coef = np.zeros((1 + d, 0))
            q_oracle = np.linalg.inv(cond)
            assert np.max(np.abs(blk.assembled_precision() - q_oracle)) < 1e-10
            assert np.max(np.abs(blk.s_u - (q_oracle @ coef)[0])) < 1e-10
            # the assembled precision is also the sub-block of the full inverse
            full_prec = np.linalg.inv(sigma)
            assert np.max(
                np.abs(blk.assembled_precision() - full_prec[np.ix_(block_idx, block_idx)])
            ) < 1e-9

    def test_assembled_precision_spd(self):
        rng = np.random.default_rng(6)
        sigma = random_spd(rng, 7)
        blk = conditional_block(sigma, 2, 2, 3)
        np.linalg.cholesky(blk.assembled_precision())

    def test_invalid_target(self):
        with pytest.raises(ValueError):
            conditional_block(np.eye(5), 2, 1, 3)


def dense_column_oracle(resid, partner, c, d, q, lin):
    """Explicit design-matrix construction over the off-diagonal cells."""
    n = partner.shape[0]
    rt = c * resid + d * resid.T
    rows, vec = [], []
    for a in range(n):
        for b in range(n):
            if a == b:
                continue
            row = np.zeros(n)
            row[a] += c * partner[b]
            row[b] += d * partner[a]
            rows.append(row)
            vec.append(rt[a, b])
    m = np.array(rows)
    prec = m.T @ m + q * np.eye(n)
    rhs = m.T @ np.array(vec) + lin
    return prec, rhs


class TestLatentColumnDraw:
    @pytest.mark.parametrize("rho", [0.0, 0.45, -0.6])
    def test_system_matches_dense_construction(self, rho):
        rng = np.random.default_rng(7)
        n = 6
        resid = rng.standard_normal((n, n))
        partner = rng.standard_normal(n)
        lin = rng.standard_normal(n)
        cd = DecorrelationCoeffs.from_params(rho, 1.2)
        q = 0.8
        diag, beta, b = _column_system(resid, partner, cd.c, cd.d, q, lin)
        prec = beta * np.outer(partner, partner)
        prec[np.diag_indices(n)] = diag + beta * partner**2
        prec_oracle, rhs_oracle = dense_column_oracle(resid, partner, cd.c, cd.d, q, lin)
        assert np.max(np.abs(prec - prec_oracle)) < 1e-10
        assert np.max(np.abs(b - rhs_oracle)) < 1e-10

    @pytest.mark.parametrize("rho", [0.3, -0.5])
    def test_draw_moments_match_dense_oracle(self, rho):
        rng = np.random.default_rng(8)
        n = 5
        resid = rng.standard_normal((n, n))
        partner = rng.standard_normal(n)
        lin = 0.3 * rng.standard_normal(n)
        cd = DecorrelationCoeffs.from_params(rho, 1.0)
        q = 1.1
        prec_oracle, rhs_oracle = dense_column_oracle(resid, partner, cd.c, cd.d, q, lin)
        cov_oracle = np.linalg.inv(prec_oracle)
        mean_oracle = cov_oracle @ rhs_oracle
        draws = np.array(
            [
                _draw_network_column(resid, partner, cd.c, cd.d, q, lin, rng)
                for _ in range(40_000)
            ]
        )
        se = np.sqrt(np.diag(cov_oracle) / draws.shape[0])
        assert np.all(np.abs(draws.mean(axis=0) - mean_oracle) < 5 * se)
        assert np.max(np.abs(np.cov(draws.T) - cov_oracle)) < 0.05 * np.max(np.diag(cov_oracle))

    def test_dense_fallback_path(self):
        # partner mass on one coordinate with negative rho drives the
        # diagonal split negative, forcing the dense Cholesky branch
        rng = np.random.default_rng(9)
        n = 5
        partner = np.zeros(n)
        partner[0] = 8.0
        resid = rng.standard_normal((n, n))
        cd = DecorrelationCoeffs.from_params(-0.6, 1.0)
        q = 0.5
        diag, beta, _ = _column_system(resid, partner, cd.c, cd.d, q, np.zeros(n))
        assert diag.min() <= 0 or beta > 0
        prec_oracle, rhs_oracle = dense_column_oracle(resid, partner, cd.c, cd.d, q, np.zeros(n))
        cov_oracle = np.linalg.inv(prec_oracle)
        mean_oracle = cov_oracle @ rhs_oracle
        draws = np.array(
            [
                _draw_network_column(resid, partner, cd.c, cd.d, q, np.zeros(n), rng)
                for _ in range(40_000)
            ]
        )
        se = np.sqrt(np.diag(cov_oracle) / draws.shape[0])
        assert np.all(np.abs(draws.mean(axis=0) - mean_oracle) < 5 * se)

    def test_zero_partner_gives_prior(self):
        rng = np.random.default_rng(10)
        n = 4
        resid = rng.standard_normal((n, n))
        q = 2.0
        lin = np.array([1.0, -1.0, 0.5, 0.0])
        draws = np.array(
            [
                _draw_network_column(resid, np.zeros(n), 1.0, 0.0, q, lin, rng)
                for _ in range(30_000)
            ]
        )
        assert np.allclose(draws.mean(axis=0), lin / q, atol=0.02)
        assert np.allclose(draws.var(axis=0), 1.0 / q, atol=0.02)


def make_state(rng, n=6, k=2, d=2, rho=0.2):
    sigma = random_spd(rng, 2 * k + d)
    z = rng.standard_normal((n, 2 * k + d))
    return LatentState(
        U=z[:, :k],
        V=z[:, k : 2 * k],
        Theta=z[:, 2 * k :],
        Sigma_utheta=sigma,
        delta=-0.5,
        rho=rho,
        sigma2_e=1.0,
        sigma2_eps=0.7,
        Beta=rng.standard_normal(5),
        A=rng.standard_normal((5, d)),
    )


class TestUpdateLatentDimension:
    def test_matches_column_draw_statistics(self):
        # the public op agrees with the dense oracle built from the state's
        # own precision rows
        rng = np.random.default_rng(11)
        state = make_state(rng)
        resid = rng.standard_normal((6, 6))
        q_full = np.linalg.inv(state.Sigma_utheta)
        z = np.hstack([state.U, state.V, state.Theta])
        coord = 1
        q = q_full[coord, coord]
        lin = -(z @ q_full[:, coord]) + q * z[:, coord]
        cd = DecorrelationCoeffs.from_params(state.rho, 1.0)
        prec_oracle, rhs_oracle = dense_column_oracle(
            resid, state.V[:, 1], cd.c, cd.d, q, lin
        )
        mean_oracle = np.linalg.solve(prec_oracle, rhs_oracle)
        draws = np.array(
            [update_latent_dimension(state, resid, 1, "sender", rng) for _ in range(20_000)]
        )
        se = np.sqrt(np.diag(np.linalg.inv(prec_oracle)) / draws.shape[0])
        assert np.all(np.abs(draws.mean(axis=0) - mean_oracle) < 5 * se)

    def test_receiver_uses_transpose(self):
        rng = np.random.default_rng(12)
        state = make_state(rng, rho=0.0)
        resid = rng.standard_normal((6, 6))
        q_full = np.linalg.inv(state.Sigma_utheta)
        z = np.hstack([state.U, state.V, state.Theta])
        coord = 2 + 0  # receiver dim 0 with k=2
        q = q_full[coord, coord]
        lin = -(z @ q_full[:, coord]) + q * z[:, coord]
        prec_oracle, rhs_oracle = dense_column_oracle(
            resid.T, state.U[:, 0], 1.0, 0.0, q, lin
        )
        mean_oracle = np.linalg.solve(prec_oracle, rhs_oracle)
        draws = np.array(
            [update_latent_dimension(state, resid, 0, "receiver", rng) for _ in range(20_000)]
        )
        se = np.sqrt(np.diag(np.linalg.inv(prec_oracle)) / draws.shape[0])
        assert np.all(np.abs(draws.mean(axis=0) - mean_oracle) < 5 * se)

    def test_bad_side(self):
        rng = np.random.default_rng(13)
        state = make_state(rng)
        with pytest.raises(ValueError):
            update_latent_dimension(state, np.zeros((6, 6)), 0, "up", rng)


class TestUpdateThetaDimension:
    def test_conjugate_hand_case(self):
        # one item, slope 1, unit noise, standard normal prior, residual 2:
        # posterior mean 1, variance 1/2
        rng = np.random.default_rng(14)
        n = 200
        state = LatentState(
            U=np.zeros((n, 1)),
            V=np.zeros((n, 1)),
            Theta=np.zeros((n, 1)),
            Sigma_utheta=np.eye(3),
            delta=0.0,
            rho=0.0,
            sigma2_e=1.0,
            sigma2_eps=1.0,
            Beta=np.zeros(1),
            A=np.array([[1.0]]),
        )
        resid = np.full((n, 1), 2.0)
        draws = np.concatenate(
            [update_theta_dimension(state, resid, 0, rng) for _ in range(300)]
        )
        assert draws.mean() == pytest.approx(1.0, abs=0.02)
        assert draws.var() == pytest.approx(0.5, abs=0.02)

    def test_closed_form_posterior_mean(self):
        # independent-prior factor-score draw matches the normal-equations
        # solution for several items
        rng = np.random.default_rng(15)
        n, m, d = 3, 6, 2
        alpha = rng.standard_normal((m, d))
        resid_full = rng.standard_normal((n, m))
        sigma2_eps = 0.5
        state = LatentState(
            U=np.zeros((n, 1)),
            V=np.zeros((n, 1)),
            Theta=np.zeros((n, d)),
            Sigma_utheta=np.eye(2 + d),
            delta=0.0,
            rho=0.0,
            sigma2_e=1.0,
            sigma2_eps=sigma2_eps,
            Beta=np.zeros(m),
            A=alpha,
        )
        # with the other theta dimension at zero, the dim-0 conditional is the
        # one-dimensional posterior given residuals against alpha[:, 0]
        a0 = alpha[:, 0]
        prec = 1.0 + (a0 @ a0) / sigma2_eps
        mean = (resid_full @ a0) / sigma2_eps / prec
        draws = np.stack(
            [update_theta_dimension(state, resid_full, 0, rng) for _ in range(40_000)]
        )
        assert np.max(np.abs(draws.mean(axis=0) - mean)) < 1e-8 + 5 * np.sqrt(1 / prec / 40_000)
        assert np.allclose(draws.var(axis=0), 1.0 / prec, atol=0.02)

    def test_zero_slopes_give_conditional_prior(self):
        rng = np.random.default_rng(16)
        n, d = 4, 2
        sigma = random_spd(rng, 2 + d)
        z = rng.standard_normal((n, 2 + d))
        state = LatentState(
            U=z[:, :1],
            V=z[:, 1:2],
            Theta=z[:, 2:],
            Sigma_utheta=sigma,
            delta=0.0,
            rho=0.0,
            sigma2_e=1.0,
            sigma2_eps=1.0,
            Beta=np.zeros(3),
            A=np.zeros((3, d)),
        )
        q_full = np.linalg.inv(sigma)
        coord = 2
        q = q_full[coord, coord]
        lin = -(z @ q_full[:, coord]) + q * z[:, coord]
        draws = np.stack(
            [update_theta_dimension(state, np.zeros((n, 3)), 0, rng) for _ in range(40_000)]
        )
        assert np.max(np.abs(draws.mean(axis=0) - lin / q)) < 5 * np.sqrt(1 / q / 40_000)
        assert np.allclose(draws.var(axis=0), 1.0 / q, atol=0.03)


class TestUpdateSigmaUtheta:
    def test_prior_mean_identity(self):
        cfg = ModelConfig(k=1, d=1, iterations=10, burn_in=1)
        rng = np.random.default_rng(17)
        empty = np.zeros((0, 1))
        draws = np.stack(
            [update_sigma_utheta(empty, empty, empty, cfg, rng) for _ in range(100_000)]
        )
        mean = draws.mean(axis=0)
        assert np.max(np.abs(mean - np.eye(3))) < 0.1

    def test_concentration_with_zero_crossproduct(self):
        cfg = ModelConfig(k=1, d=1, iterations=10, burn_in=1)
        rng = np.random.default_rng(18)
        n = 1000
        zeros = np.zeros((n, 1))
        draws = np.stack(
            [update_sigma_utheta(zeros, zeros, zeros, cfg, rng) for _ in range(4000)]
        )
        mean = draws.mean(axis=0)
        target = np.eye(3) / (n + 1)
        assert np.max(np.abs(mean - target)) < 0.02 * target[0, 0]

    def test_draws_symmetric_spd(self):
        cfg = ModelConfig(k=2, d=1, iterations=10, burn_in=1)
        rng = np.random.default_rng(19)
        u = rng.standard_normal((30, 2))
        v = rng.standard_normal((30, 2))
        t = rng.standard_normal((30, 1))
        for _ in range(50):
            draw = update_sigma_utheta(u, v, t, cfg, rng)
            assert np.array_equal(draw, draw.T)
            np.linalg.cholesky(draw)


class TestUpdateSigmaE:
    def test_zero_residual_distribution(self):
        rng = np.random.default_rng(20)
        n = 5
        draws = np.array(
            [1.0 / update_sigma_e(np.zeros((n, n)), 0.0, rng) for _ in range(40_000)]
        )
        shape = (n * n + 1) / 2
        assert draws.mean() == pytest.approx(shape / 0.5, rel=0.01)
        assert draws.var() == pytest.approx(shape / 0.25, rel=0.05)

    def test_observed_cells_shape(self):
        rng = np.random.default_rng(21)
        n = 5
        draws = np.array(
            [
                1.0 / update_sigma_e(np.zeros((n, n)), 0.0, rng, include_self_pairs=False)
                for _ in range(40_000)
            ]
        )
        shape = (n * (n - 1) + 1) / 2
        assert draws.mean() == pytest.approx(shape / 0.5, rel=0.01)

    def test_variance_recovery(self):
        # the complete-matrix shape counts N extra zero cells, shrinking the
        # estimate by about N/(N^2); the observed-cells shape is unbiased
        rng = np.random.default_rng(22)
        n = 80
        e = 2.0 * rng.standard_normal((n, n))
        np.fill_diagonal(e, 0.0)
        clean = np.array(
            [update_sigma_e(e, 0.0, rng, include_self_pairs=False) for _ in range(2000)]
        )
        assert clean.mean() == pytest.approx(4.0, rel=0.05)
        padded = np.array([update_sigma_e(e, 0.0, rng) for _ in range(2000)])
        assert padded.mean() == pytest.approx(clean.mean() * (n - 1) / n, rel=0.01)


class TestUpdateRho:
    def test_out_of_support_rejected(self):
        # sd = 50 puts essentially every proposal outside (-1, 1); those must
        # come back rejected with rho unchanged, and any accepted move stays
        # inside the support
        rng = np.random.default_rng(23)
        e = np.random.default_rng(0).standard_normal((10, 10))
        np.fill_diagonal(e, 0.0)
        unchanged = 0
        rho = 0.0
        for _ in range(200):
            new, accepted = update_rho(e, 1.0, rho, 50.0, rng)
            assert -1.0 < new < 1.0
            if not accepted:
                assert new == rho
                unchanged += 1
            rho = new
        assert unchanged >= 190

    def test_posterior_recovery(self):
        rng = np.random.default_rng(24)
        n = 100
        rho_true = 0.6
        iu, ju = np.triu_indices(n, 1)
        z1 = rng.standard_normal(iu.shape[0])
        z2 = rng.standard_normal(iu.shape[0])
        e = np.zeros((n, n))
        e[iu, ju] = z1
        e[ju, iu] = rho_true * z1 + np.sqrt(1 - rho_true**2) * z2
        rho = 0.0
        trace = []
        for _ in range(3000):
            rho, _ = update_rho(e, 1.0, rho, 0.05, rng)
            trace.append(rho)
        assert 0.5 < np.mean(trace[500:]) < 0.7

    def test_symmetric_residual_stays_inside_support(self):
        rng = np.random.default_rng(25)
        e = rng.standard_normal((20, 20))
        e = e + e.T
        np.fill_diagonal(e, 0.0)
        rho = 0.0
        for _ in range(800):
            rho, _ = update_rho(e, 1.0, rho, 0.1, rng)
            assert -1.0 < rho < 1.0
        assert rho > 0.8


class TestUpdateDelta:
    def test_constant_fit(self):
        rng = np.random.default_rng(26)
        n = 40
        u = rng.standard_normal((n, 2))
        v = rng.standard_normal((n, 2))
        x = u @ v.T + 3.0
        draws = np.array(
            [update_delta(x, u, v, 1.0, 0.0, 1e-4, rng) for _ in range(3000)]
        )
        assert draws.mean() == pytest.approx(3.0, abs=0.01)

    def test_prior_domination(self):
        rng = np.random.default_rng(27)
        n = 20
        u = np.zeros((n, 1))
        v = np.zeros((n, 1))
        x = np.full((n, n), 5.0)
        draws = np.array(
            [update_delta(x, u, v, 1.0, 0.0, 1e12, rng) for _ in range(2000)]
        )
        assert abs(draws.mean()) < 1e-3

    def test_reciprocity_discount(self):
        # with rho > 0 the intercept information per cell shrinks by 1/(1+rho)
        rng = np.random.default_rng(28)
        n = 30
        u = np.zeros((n, 1))
        v = np.zeros((n, 1))
        x = np.full((n, n), 1.0)
        var0 = np.var([update_delta(x, u, v, 1.0, 0.0, 1e-6, rng) for _ in range(20_000)])
        var9 = np.var([update_delta(x, u, v, 1.0, 0.9, 1e-6, rng) for _ in range(20_000)])
        assert var9 / var0 == pytest.approx(1.9, rel=0.1)


class TestUpdateItemParams:
    def make_config(self, d, mean=None, cov=None):
        return ModelConfig(
            k=1,
            d=d,
            iterations=10,
            burn_in=1,
            prior_xi_mean=mean,
            prior_xi_cov=cov,
        )

    def test_hand_conjugate_case(self):
        # theta (1, -1), responses (2, 0), unit noise, prior N((1,0), I):
        # posterior covariance diag(1/3); the posterior mean follows the
        # normal equations computed here from first principles
        theta = np.array([[1.0], [-1.0]])
        y = np.array([[2.0], [0.0]])
        g = np.hstack([theta, np.ones((2, 1))])
        prior_mean = np.array([1.0, 0.0])
        cov_oracle = np.linalg.inv(g.T @ g + np.eye(2))
        mean_oracle = cov_oracle @ (g.T @ y[:, 0] + prior_mean)
        assert np.allclose(cov_oracle, np.eye(2) / 3.0)
        cfg = self.make_config(1, mean=prior_mean, cov=np.eye(2))
        rng = np.random.default_rng(29)
        betas, alphas = [], []
        for _ in range(40_000):
            beta, a = update_item_params(y, theta, 1.0, cfg, rng)
            betas.append(beta[0])
            alphas.append(a[0, 0])
        assert np.mean(alphas) == pytest.approx(mean_oracle[0], abs=0.02)
        assert np.mean(betas) == pytest.approx(mean_oracle[1], abs=0.02)
        assert np.var(alphas) == pytest.approx(1.0 / 3.0, abs=0.02)
        assert np.var(betas) == pytest.approx(1.0 / 3.0, abs=0.02)

    def test_zero_theta(self):
        # slopes revert to the prior, intercepts to the conjugate mean of y
        rng = np.random.default_rng(30)
        n, m = 50, 3
        theta = np.zeros((n, 1))
        y = np.tile(np.array([1.0, 2.0, -1.0]), (n, 1))
        cfg = self.make_config(1)
        betas, alphas = [], []
        for _ in range(20_000):
            beta, a = update_item_params(y, theta, 1.0, cfg, rng)
            betas.append(beta)
            alphas.append(a[:, 0])
        alphas = np.array(alphas)
        betas = np.array(betas)
        assert np.allclose(alphas.mean(axis=0), 1.0, atol=0.03)
        assert np.allclose(alphas.var(axis=0), 1.0, atol=0.05)
        target_beta = n * y[0] / (n + 1.0)
        assert np.allclose(betas.mean(axis=0), target_beta, atol=0.02)

    def test_no_data_limit(self):
        rng = np.random.default_rng(31)
        theta = np.random.default_rng(1).standard_normal((10, 2))
        y = np.random.default_rng(2).standard_normal((10, 4))
        cfg = self.make_config(2)
        draws = []
        for _ in range(20_000):
            beta, a = update_item_params(y, theta, 1e12, cfg, rng)
            draws.append(np.column_stack([a, beta]))
        draws = np.array(draws)
        assert np.allclose(draws.mean(axis=0), cfg.resolved_xi_mean()[None, :], atol=0.05)
        assert np.allclose(draws.var(axis=0), 1.0, atol=0.08)


class TestUpdateSigmaEps:
    def test_zero_residual(self):
        rng = np.random.default_rng(32)
        n, m = 8, 5
        draws = np.array(
            [1.0 / update_sigma_eps(np.zeros((n, m)), rng) for _ in range(40_000)]
        )
        shape = (n * m + 1) / 2
        assert draws.mean() == pytest.approx(shape / 0.5, rel=0.01)

    def test_single_cell(self):
        rng = np.random.default_rng(33)
        draws = np.array(
            [1.0 / update_sigma_eps(np.array([[1.0]]), rng) for _ in range(40_000)]
        )
        # shape (1+1)/2 = 1, rate (1+1)/2 = 1
        assert draws.mean() == pytest.approx(1.0, abs=0.02)
        assert draws.var() == pytest.approx(1.0, abs=0.05)

    def test_variance_recovery(self):
        rng = np.random.default_rng(34)
        resid = 0.5 * rng.standard_normal((100, 40))
        draws = np.array([update_sigma_eps(resid, rng) for _ in range(2000)])
        assert draws.mean() == pytest.approx(0.25, rel=0.05)


class TestAugmentProbit:
    def test_truncation_signs(self):
        rng = np.random.default_rng(35)
        x = (np.random.default_rng(3).random((8, 8)) < 0.4).astype(float)
        np.fill_diagonal(x, 0.0)
        net = NetworkData(x, kind="binary")
        latent = None
        expected = np.zeros((8, 8))
        for _ in range(50):
            latent = augment_probit(net, expected, 0.3, rng, current=latent)
            off = ~np.eye(8, dtype=bool)
            assert np.all((latent[off] > 0) == (x[off] > 0))

    def test_inactive_truncation_mean(self):
        rng = np.random.default_rng(36)
        n = 140
        x = np.ones((n, n))
        np.fill_diagonal(x, 0.0)
        net = NetworkData(x, kind="binary")
        expected = np.full((n, n), 10.0)
        latent = augment_probit(net, expected, 0.0, rng)
        off = ~np.eye(n, dtype=bool)
        assert latent[off].mean() == pytest.approx(10.0, abs=0.05)
        assert latent[off].var() == pytest.approx(1.0, abs=0.05)

    def test_dyad_correlation_vs_rejection_oracle(self):
        rho = 0.8
        x = np.array([[0.0, 1.0], [1.0, 0.0]])
        net = NetworkData(x, kind="binary")
        expected = np.zeros((2, 2))
        rng = np.random.default_rng(37)
        latent = None
        pairs = []
        for sweep in range(120_000):
            latent = augment_probit(net, expected, rho, rng, current=latent)
            if sweep >= 500:
                pairs.append((latent[0, 1], latent[1, 0]))
        pairs = np.array(pairs)
        gibbs_corr = np.corrcoef(pairs.T)[0, 1]

        oracle_rng = np.random.default_rng(38)
        cov = np.array([[1.0, rho], [rho, 1.0]])
        z = oracle_rng.multivariate_normal([0.0, 0.0], cov, size=600_000)
        kept = z[(z[:, 0] > 0) & (z[:, 1] > 0)]
        oracle_corr = np.corrcoef(kept.T)[0, 1]
        assert gibbs_corr == pytest.approx(oracle_corr, abs=0.03)

    def test_unobserved_cells_untruncated(self):
        rng = np.random.default_rng(39)
        x = np.ones((40, 40))
        np.fill_diagonal(x, 0.0)
        mask = np.ones((40, 40), dtype=bool)
        mask[0, :] = False
        net = NetworkData(x, kind="binary", mask=mask)
        expected = np.full((40, 40), -3.0)
        draws = []
        latent = None
        for _ in range(300):
            latent = augment_probit(net, expected, 0.0, rng, current=latent)
            draws.append(latent[0, 1:].copy())
        draws = np.concatenate(draws)
        # untruncated draws center on the expected value even though x is 1
        assert draws.mean() == pytest.approx(-3.0, abs=0.02)
        assert (draws > 0).mean() < 0.01

    def test_items_binary(self):
        rng = np.random.default_rng(40)
        y = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, np.nan]])
        items = ItemResponses(y, kind="binary")
        expected = np.zeros((3, 2))
        latent = augment_probit(items, expected, None, rng)
        assert latent[0, 0] > 0 and latent[0, 1] <= 0
        assert latent[1, 0] <= 0 and latent[1, 1] > 0

    def test_kind_validation(self):
        with pytest.raises(ValueError):
            augment_probit(
                NetworkData(np.zeros((3, 3)), kind="continuous"),
                np.zeros((3, 3)),
                0.0,
                np.random.default_rng(0),
            )


class TestInverseWishart:
    def test_prior_moments(self):
        # Wishart(nu, I) inverse has mean scale/(nu - p - 1)
        rng = np.random.default_rng(41)
        draws = np.stack(
            [sample_inverse_wishart(np.eye(2), 8.0, rng) for _ in range(60_000)]
        )
        assert np.max(np.abs(draws.mean(axis=0) - np.eye(2) / 5.0)) < 0.01

    def test_df_bound(self):
        with pytest.raises(ValueError):
            sample_inverse_wishart(np.eye(3), 1.5, np.random.default_rng(0))
