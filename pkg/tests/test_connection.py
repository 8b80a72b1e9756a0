import pytest
from mpmath import mp, mpf

import ljscatt.connection as connection
from ljscatt.connection import (
    AtPoleError,
    gamma_p,
    scattering_length,
    wronskian,
)
from ljscatt.mpkernel import PrecisionExhaustedError, make_context
from ljscatt.oracle import oracle_scattering_length
from ljscatt.series import PotentialSpec, a_coeffs, b_coeffs

CTX = make_context(15)


def spec_from_sqrt(s, sq, ctx=CTX):
    with mp.workdps(ctx.working_digits):
        return PotentialSpec(s, mpf(sq) ** 2)


class TestGammaP:
    def test_free_limit_is_lambda_independent(self):
        # As lam -> 0 the contraction does NOT collapse to its m=0 content
        # ((-p - 1 + mu - nu) a_0 = 3 here): the origin coefficients scale
        # like b_{5k} ~ beta^-k, which the beta prefactor and a_{5k} ~ lam^k
        # tame to finite ladder contributions.  The limit itself is exactly
        # lambda independent; its value is frozen from runs spanning twenty
        # orders of magnitude in lam.
        v30 = gamma_p(PotentialSpec(6, "1e-30"), 2, -1, CTX)
        v40 = gamma_p(PotentialSpec(6, "1e-40"), 2, -1, CTX)
        assert v30.value == v40.value
        with mp.workdps(40):
            assert abs(v30.value - mpf("2.731511116306168934089118")) < mpf("1e-20")
        assert v30.terms_used >= 1
        assert v30.est_err >= 0

    def test_resummation_at_doubled_precision(self):
        spec = PotentialSpec(6, 25)
        got = gamma_p(spec, 1, -20, CTX)
        wide = make_context(15, guard=CTX.working_digits + 30)
        ref = gamma_p(spec, 1, -20, wide)
        with mp.workdps(wide.working_digits):
            assert abs(got.value - ref.value) <= CTX.tolerance * abs(ref.value)

    def test_s7_only_multiples_of_five_contribute(self):
        # b_m vanishes off multiples of 5, so the full contraction must
        # equal the manual sum restricted to m = 0, 5, 10, ...
        spec = PotentialSpec(7, 16)
        p = -15
        got = gamma_p(spec, 2, p, CTX)
        a = a_coeffs(spec, 2, 200, CTX).coeffs
        b = b_coeffs(spec, "reg", got.terms_used + 5, CTX)
        with mp.workdps(CTX.working_digits):
            beta, mu = b.beta, b.mu
            manual = mpf(0)
            for m in range(0, got.terms_used + 1, 5):
                manual += b.coeffs[m] * (-beta * a[-p + m - 6]
                                         + (-p + 2 * m - 1 + mu - 0) * a[-p + m - 1])
            assert abs(got.value - manual) <= mpf(10) ** (-(CTX.working_digits - 8)) \
                * max(abs(manual), 1)


class TestWronskian:
    def test_s7_zero_of_scattering_length(self):
        res = wronskian(PotentialSpec(7, 16), 1, CTX)
        assert abs(res.value) < CTX.tolerance
        assert res.n_used > 4

    def test_s7_pole_of_scattering_length(self):
        res = wronskian(PotentialSpec(7, 36), 2, CTX)
        assert abs(res.value) < CTX.tolerance

    def test_s7_partner_wronskian_is_regular(self):
        res = wronskian(PotentialSpec(7, 16), 2, CTX)
        assert abs(res.value) > mpf("0.1")

    def test_n_independence_two_apart(self):
        spec = PotentialSpec(6, 100)
        res_a = wronskian(spec, 1, CTX, n=12)
        res_b = wronskian(spec, 1, CTX, n=14)
        with mp.workdps(CTX.working_digits):
            assert abs(res_a.value - res_b.value) <= CTX.tolerance * abs(res_a.value)

    def test_consistency_invariant_on_success(self):
        res = wronskian(spec_from_sqrt(4, "17.3"), 2, CTX)
        with mp.workdps(CTX.working_digits):
            assert res.consistency_err < CTX.tolerance * max(1, abs(res.value))
        assert res.n_used > 17

    def test_rejects_n_below_sqrt_lambda(self):
        with pytest.raises(ValueError):
            wronskian(PotentialSpec(6, 100), 1, CTX, n=9)

    def test_budget_error_escalates_then_exhausts(self, monkeypatch):
        monkeypatch.setattr(connection, "_term_budget", lambda dps: 3)
        ctx = make_context(10, max_escalations=1)
        with pytest.raises(PrecisionExhaustedError):
            wronskian(PotentialSpec(6, 30), 1, ctx)

    def test_consistency_failure_escalates_with_diagnostics(self, monkeypatch):
        calls = []

        def fake_once(spec, j, n, eff):
            calls.append(eff.working_digits)
            # Disagreement far above any threshold, never resolving.
            return mpf(n), mpf(1)

        monkeypatch.setattr(connection, "_wronskian_once", fake_once)
        ctx = make_context(10, max_escalations=2)
        with pytest.raises(PrecisionExhaustedError) as err:
            wronskian(PotentialSpec(6, 9), 1, ctx)
        assert "mismatch" in err.value.diagnostics
        # base attempt plus two escalations, two orders each
        assert len(calls) == 6
        assert calls[2] > calls[0]


class TestScatteringLength:
    def test_table_zero_s6(self):
        res = scattering_length(spec_from_sqrt(6, "2.944907"), CTX)
        assert abs(res.a_over_r0) < mpf("1e-5")

    def test_table_zero_s4(self):
        res = scattering_length(spec_from_sqrt(4, "1.135708"), CTX)
        assert abs(res.a_over_r0) < mpf("1e-5")

    def test_oracle_agreement_s6(self):
        ctx = make_context(12)
        spec = spec_from_sqrt(6, 10, ctx)
        conn = scattering_length(spec, ctx).a_over_r0
        orac = oracle_scattering_length(spec, ctx)
        with mp.workdps(ctx.working_digits):
            assert abs(conn - orac) <= mpf("1e-8") * abs(conn)

    def test_small_intensity_sanity(self):
        ctx = make_context(12)
        spec = PotentialSpec(6, "1e-4")
        res = scattering_length(spec, ctx)
        assert abs(res.a_over_r0) < mpf("0.5")
        orac = oracle_scattering_length(spec, ctx)
        assert (res.a_over_r0 > 0) == (orac > 0)

    def test_at_pole_raises_with_certificates(self):
        ctx = make_context(6)
        with pytest.raises(AtPoleError) as err:
            scattering_length(spec_from_sqrt(6, "4.728696", ctx), ctx)
        assert err.value.w2.j == 2
        assert abs(err.value.w2.value) <= ctx.tolerance * abs(err.value.w1.value)

    def test_pole_threshold_scales_with_target(self):
        # The same intensity is resolvable at 15 digits: huge but finite.
        res = scattering_length(spec_from_sqrt(6, "4.728696"), CTX)
        assert abs(res.a_over_r0) > mpf("1e6")

    def test_dimensional_scaling(self):
        ctx = make_context(10)
        with mp.workdps(ctx.working_digits):
            spec = PotentialSpec(6, 100, r0="2.5")
        res = scattering_length(spec, ctx)
        with mp.workdps(ctx.working_digits):
            assert res.a == res.a_over_r0 * mpf("2.5")

    def test_err_est_bounds_observed_error(self):
        ctx = make_context(10)
        spec = spec_from_sqrt(6, "7.7", ctx)
        res = scattering_length(spec, ctx)
        ref = scattering_length(spec, make_context(20))
        with mp.workdps(60):
            observed = abs(res.a_over_r0 - ref.a_over_r0)
            assert observed <= max(res.err_est, ctx.tolerance * abs(ref.a_over_r0))
