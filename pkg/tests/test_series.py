import random

import pytest
from mpmath import mp, mpf

from ljscatt.mpkernel import make_context
from ljscatt.series import (
    PotentialSpec,
    TermBudgetError,
    ZTooLargeError,
    a_coeffs,
    b_coeffs,
    eval_w,
    series_buffer,
    thome_logderiv,
    thome_parameters,
)

CTX = make_context(15)


class TestPotentialSpec:
    def test_validation(self):
        PotentialSpec(4, 1)
        PotentialSpec(7, "2.5")
        with pytest.raises(ValueError):
            PotentialSpec(3, 1)
        with pytest.raises(ValueError):
            PotentialSpec(8, 1)
        with pytest.raises(ValueError):
            PotentialSpec(6, 0)
        with pytest.raises(ValueError):
            PotentialSpec(6, 1, r0=-2)

    def test_hashable_and_frozen(self):
        spec = PotentialSpec(6, 2)
        assert hash(spec) == hash(PotentialSpec(6, 2))
        with pytest.raises(Exception):
            spec.s = 4


class TestPowerSeriesCoefficients:
    def test_hand_unrolled_values_exact(self):
        # s=6, lam=1: the recurrence collapses to single exact divisions.
        tab1 = a_coeffs(PotentialSpec(6, 1), 1, 12, CTX)
        tab2 = a_coeffs(PotentialSpec(6, 1), 2, 12, CTX)
        with mp.workdps(CTX.working_digits):
            assert tab1.coeffs[4] == mpf(-1) / 12
            assert tab2.coeffs[4] == mpf(-1) / 20
            assert tab2.coeffs[10] == mpf(1) / 110

    @pytest.mark.parametrize("s,lam", [(4, 2.5), (5, 9), (6, 100), (7, 16)])
    def test_forced_start_values(self, s, lam):
        tab = a_coeffs(PotentialSpec(s, lam), 1, 3, CTX)
        assert tab.coeffs[0] == 1
        assert tab.coeffs[1] == 0
        assert tab.nu == 1
        tab2 = a_coeffs(PotentialSpec(s, lam), 2, 3, CTX)
        assert tab2.coeffs[0] == 1
        assert tab2.nu == 0

    def test_recurrence_satisfied_at_working_precision(self):
        spec = PotentialSpec(5, "3.7")
        tab = a_coeffs(spec, 2, 60, CTX)
        with mp.workdps(CTX.working_digits):
            lam = +spec.lam
            for n in range(2, 61):
                t1 = tab.coeffs[n - 10] if n >= 10 else mpf(0)
                t2 = tab.coeffs[n - 3] if n >= 3 else mpf(0)
                assert tab.coeffs[n] == lam * (t1 - t2) / (n * (n + 1))

    def test_invalid_j(self):
        with pytest.raises(ValueError):
            a_coeffs(PotentialSpec(6, 1), 3, 5, CTX)


class TestOriginSeriesCoefficients:
    def test_hand_evaluated_s6(self):
        tab = b_coeffs(PotentialSpec(6, 4), "reg", 6, CTX)
        assert tab.beta == -2
        assert tab.mu == 3
        assert tab.coeffs[1] == -1
        assert tab.coeffs[2] == mpf("0.5")

    def test_hand_evaluated_s7(self):
        tab = b_coeffs(PotentialSpec(7, 4), "reg", 6, CTX)
        assert tab.beta == -2
        assert tab.mu == 2
        with mp.workdps(CTX.working_digits):
            assert tab.coeffs[5] == mpf(2) / (-20)

    @pytest.mark.parametrize("lam", [4, 9, "12.3"])
    def test_s7_sparsity(self, lam):
        tab = b_coeffs(PotentialSpec(7, lam), "reg", 41, CTX)
        for n, b in enumerate(tab.coeffs):
            if n % 5 != 0:
                assert b == 0

    def test_s7_closed_form_product(self):
        # First-order recurrence: iterating it gives an explicit product.
        spec = PotentialSpec(7, "7.3")
        tab = b_coeffs(spec, "reg", 30, CTX)
        with mp.workdps(CTX.working_digits):
            beta, mu = thome_parameters(spec, "reg")
            prod = mpf(1)
            for i in range(1, 7):
                n = 5 * i
                prod *= (n - 2 + beta / 2) * (n - 3 + beta / 2) / (2 * n * beta)
                rel = abs(tab.coeffs[n] - prod) / abs(prod)
                assert rel < mpf(10) ** (-(CTX.working_digits - 5))

    def test_irregular_branch_sign(self):
        tab = b_coeffs(PotentialSpec(6, 4), "irr", 3, CTX)
        assert tab.beta == 2
        assert tab.coeffs[1] == 1  # lam*b_0/(2*beta)

    def test_mu_for_small_s(self):
        for s in (4, 5, 6):
            tab = b_coeffs(PotentialSpec(s, 2), "reg", 2, CTX)
            assert tab.mu == 3


class TestCaching:
    def test_same_buffer_reused_and_extended(self):
        spec = PotentialSpec(6, "1.25")
        buf = series_buffer(spec, 1, 40)
        first = buf.ensure(50)
        assert buf is series_buffer(spec, 1, 40)
        longer = buf.ensure(200)
        assert len(longer) >= 201
        assert longer[:51] == first[:51]

    def test_distinct_keys(self):
        spec = PotentialSpec(6, "1.25")
        assert series_buffer(spec, 1, 40) is not series_buffer(spec, 2, 40)
        assert series_buffer(spec, 1, 40) is not series_buffer(spec, 1, 50)

    def test_deterministic_tabulation(self):
        spec = PotentialSpec(4, "33.1")
        t1 = a_coeffs(spec, 2, 40, CTX)
        t2 = a_coeffs(spec, 2, 40, CTX)
        assert t1.coeffs == t2.coeffs


class TestConcurrentUse:
    def test_threads_with_mixed_contexts_match_sequential(self):
        import threading

        specs = [PotentialSpec(6, 10), PotentialSpec(4, "3.3"), PotentialSpec(7, 16)]
        ctxs = [make_context(d) for d in (10, 15, 20)]
        expected = [eval_w(sp, 1, 2, cx) for sp, cx in zip(specs, ctxs)]

        results = [None] * len(specs)

        def worker(i):
            for _ in range(3):
                results[i] = eval_w(specs[i], 1, 2, ctxs[i])

        threads = [threading.Thread(target=worker, args=(i,))
                   for i in range(len(specs))]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert results == expected


class TestEvalW:
    def test_free_limit(self):
        spec = PotentialSpec(6, "1e-30")
        v1, d1 = eval_w(spec, 1, 2, CTX)
        assert abs(v1 - 2) < mpf("1e-25")
        assert abs(d1 - 1) < mpf("1e-25")
        v2, d2 = eval_w(spec, 2, 2, CTX)
        assert abs(v2 - 1) < mpf("1e-25")
        assert abs(d2) < mpf("1e-25")

    def test_resummation_oracle_at_doubled_precision(self):
        spec = PotentialSpec(6, 10)
        v, d = eval_w(spec, 1, 2, CTX)
        wide = make_context(15, guard=CTX.working_digits + 30)
        v2, d2 = eval_w(spec, 1, 2, wide)
        with mp.workdps(wide.working_digits):
            assert abs(v - v2) < mpf(10) ** (-(CTX.working_digits - 10)) * abs(v2)
            assert abs(d - d2) < mpf(10) ** (-(CTX.working_digits - 10)) * abs(d2)

    def test_domain(self):
        with pytest.raises(ValueError):
            eval_w(PotentialSpec(6, 1), 1, 0.99, CTX)

    def test_term_budget_error(self):
        with pytest.raises(TermBudgetError):
            eval_w(PotentialSpec(6, 400), 1, 1, CTX, term_budget=30)

    @pytest.mark.parametrize("s,sq,z", [(6, 10, 2), (4, 3, "1.2"), (7, 9, 4),
                                        (5, "7.7", "2.6")])
    def test_wronskian_normalization(self, s, sq, z):
        with mp.workdps(CTX.working_digits):
            spec = PotentialSpec(s, mpf(sq) ** 2)
        w1, d1 = eval_w(spec, 1, z, CTX)
        w2, d2 = eval_w(spec, 2, z, CTX)
        with mp.workdps(CTX.working_digits):
            assert abs(w1 * d2 - w2 * d1 + 1) < CTX.tolerance

    def test_radial_equation_residual(self):
        # -z^2 w'' + lam (z^-10 - z^(-s+2)) w = 0 with a series-differentiated w''.
        rng = random.Random(1771)
        for _ in range(4):
            s = rng.choice((4, 5, 6, 7))
            j = rng.choice((1, 2))
            with mp.workdps(CTX.working_digits):
                spec = PotentialSpec(s, mpf(0.5 + 15 * rng.random()) ** 2)
                z = mpf(1 + 2 * rng.random())
            tab = a_coeffs(spec, j, 600, CTX)
            w, _ = eval_w(spec, j, z, CTX)
            with mp.workdps(CTX.working_digits):
                nu = tab.nu
                wpp = mpf(0)
                for n, a in enumerate(tab.coeffs):
                    wpp += a * (nu - n) * (nu - n - 1) * z ** (nu - n - 2)
                lam = spec.lam
                residual = -z ** 2 * wpp + lam * (z ** -10 - z ** (-s + 2)) * w
                scale = abs(lam * z ** -10 * w)
                assert abs(residual) < CTX.tolerance * scale


class TestThomeLogderiv:
    @pytest.mark.parametrize("s", [4, 5, 6])
    def test_leading_order_small_z(self, s):
        # beta_reg = -1 for lam = 1, so the leading term is +z^-6.
        ld, _ = thome_logderiv(PotentialSpec(s, 1), "0.1", CTX)
        with mp.workdps(CTX.working_digits):
            assert abs(ld * mpf("0.1") ** 6 - 1) < mpf("1e-3")

    def test_s7_structure_and_cross_check(self):
        spec = PotentialSpec(7, 4)
        ld, trunc = thome_logderiv(spec, "0.3", CTX)
        with mp.workdps(CTX.working_digits):
            z = mpf("0.3")
            dominant = 2 * z ** -6 + 2 / z  # sqrt(lam) z^-6 plus mu/z with mu=2
            assert abs(ld - dominant) / abs(ld) < mpf("1e-4")
        wide = make_context(15, guard=CTX.working_digits + 30)
        ld_wide, _ = thome_logderiv(spec, "0.3", wide)
        ld_q, _ = thome_logderiv(spec, "0.25", wide)
        with mp.workdps(wide.working_digits):
            assert abs(ld - ld_wide) / abs(ld) < 10 * trunc + mpf("1e-30")
            assert abs(ld_q * mpf("0.25") ** 6 / 2 - 1) < mpf("0.05")

    def test_truncation_error_deep_inside(self):
        _, trunc = thome_logderiv(PotentialSpec(6, 100), "0.4", CTX)
        assert trunc < mpf("1e-12")

    def test_z_too_large(self):
        with pytest.raises(ZTooLargeError):
            thome_logderiv(PotentialSpec(6, 1), "0.9", CTX)

    def test_domain(self):
        with pytest.raises(ValueError):
            thome_logderiv(PotentialSpec(6, 1), 1.5, CTX)
