import math
import threading

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from karamata.errors import DomainError, ParameterError, UnderflowError
from karamata.numerics import lambert_w0, lambert_wm1
from karamata.rates import (
    PhiIntegral,
    PhiSpec,
    RateBound,
    asymptotic_profile,
    build_phi,
    classify_rate,
    compose_psi,
    default_delta,
    entropic_psi,
    g_function,
    g_hat,
    holder_entropic_psi,
    holder_psi,
    invert_phi_big,
    linear_psi,
    logarithmic_psi,
    phi_big,
    phi_constant,
    rate_bound,
)
from karamata.regvar import RegFunc, estimate_rv0_index

IDENT = RegFunc(lambda t: t, 0.0, 1.0, index=1.0)
SQUARE = RegFunc(lambda t: t * t, 0.0, 1.0, index=2.0)
ENTROPIC = RegFunc(lambda t: -t * math.log(t), 0.0, math.exp(-2), index=1.0)

# mpmath quadrature of dt / exp(W_{-1}(-t)) over [u, e^-2] at 30 digits.
ENTROPIC_PHI = {1e-6: 119.79081755221769827, 1e-3: 30.647941856631503023}
ENTROPIC_INV_50 = 0.00014933337521603097215


def test_phi_constant():
    assert phi_constant(0.5, 1.0, 2) == 18.0
    assert phi_constant(0.5, 1.0, 1) == 10.0
    for bad in [(0.0, 1.0, 2), (1.0, 1.0, 2), (0.5, 0.0, 2), (0.5, 1.5, 2), (0.5, 1.0, 0), (0.5, 1.0, 1.5)]:
        with pytest.raises(ParameterError):
            phi_constant(*bad)


def test_build_phi_identity():
    phi = build_phi(PhiSpec(linear_psi(1.0), 0.5, 1.0, 2, a_hat=1.0))
    for u in (1e-8, 0.01, 0.7):
        assert phi(u) == pytest.approx(18 * u, rel=1e-14)
    assert phi.domain_hi == 1.0 and phi.monotone == "nondecreasing"
    assert phi.inverse(18 * 0.01) == pytest.approx(0.01, rel=1e-14)


def test_build_phi_dr_constant():
    spec = PhiSpec(holder_psi(2.0, 0.5), 0.5, 1.0, 1)
    phi = build_phi(spec)
    assert spec.c == 10.0
    assert phi(0.1) == pytest.approx(2.0 ** 2 * math.sqrt(10 * 0.1), rel=1e-14)


def test_phispec_validation():
    with pytest.raises(ParameterError):
        PhiSpec(IDENT, alpha=1.0)
    with pytest.raises(ParameterError):
        PhiSpec(IDENT, a_hat=0.0)
    with pytest.raises(ParameterError):
        build_phi(PhiSpec(RegFunc(lambda t: 1 / t, monotone="nonincreasing")))


def test_default_delta():
    assert default_delta(RegFunc(lambda t: 2 * t, 0.0, 1.0)) == 1.0
    assert default_delta(RegFunc(lambda t: 0.5 * t, 0.0, 1.0)) == 0.5


@pytest.mark.parametrize("u", [1e-12, 1e-6, 0.01, 0.5])
def test_phi_big_closed_forms(u):
    assert phi_big(IDENT, 1.0, u) == pytest.approx(math.log(1 / u), rel=1e-10)
    assert phi_big(SQUARE, 1.0, u) == pytest.approx(2 * (1 - math.sqrt(u)), rel=1e-10)


def test_phi_big_negative_above_delta():
    assert phi_big(IDENT, 0.5, 0.8) == pytest.approx(-math.log(0.8 / 0.5), rel=1e-10)
    assert phi_big(IDENT, 0.5, 0.5) == 0.0


@pytest.mark.parametrize("u, val", sorted(ENTROPIC_PHI.items()))
def test_phi_big_entropic_oracle(u, val):
    assert phi_big(ENTROPIC, math.exp(-2), u) == pytest.approx(val, rel=1e-10)
    closed = RegFunc(ENTROPIC.eval, 0.0, math.exp(-2), inverse=lambda y: math.exp(lambert_wm1(-y)))
    assert phi_big(closed, math.exp(-2), u) == pytest.approx(val, rel=1e-12)


def test_invert_phi_big_examples():
    assert invert_phi_big(IDENT, 1.0, math.log(1e6)) == pytest.approx(1e-6, rel=1e-10)
    assert invert_phi_big(SQUARE, 1.0, 1.0) == pytest.approx(0.25, rel=1e-10)
    assert invert_phi_big(ENTROPIC, math.exp(-2), 50.0) == pytest.approx(ENTROPIC_INV_50, rel=1e-8)
    assert invert_phi_big(IDENT, 0.5, -math.log(1.6)) == pytest.approx(0.8, rel=1e-10)
    assert invert_phi_big(IDENT, 0.5, 0.0) == 0.5


def test_invert_phi_big_underflow():
    with pytest.raises(UnderflowError) as info:
        invert_phi_big(IDENT, 1.0, 800.0)
    assert info.value.bracket is not None


def test_phi_big_domain():
    with pytest.raises(DomainError):
        phi_big(IDENT, 1.0, 0.0)


@settings(max_examples=60, deadline=None)
@given(st.floats(-6.0, -0.1), st.floats(-6.0, -0.1))
def test_phi_big_strictly_decreasing(a, b):
    P = PhiIntegral(ENTROPIC, math.exp(-2))
    if a == b:
        return
    lo, hi = 10 ** min(a, b), 10 ** max(a, b)
    assert P(lo) > P(hi)


@settings(max_examples=60, deadline=None)
@given(st.floats(-7.0, -1.0), st.sampled_from([0.3, 0.5, 0.7, 1.0]))
def test_phi_big_roundtrip(lu, rho):
    phi = RegFunc(lambda t: -t ** rho * math.log(t), 0.0, 0.1)
    P = PhiIntegral(phi, 0.1)
    u = 10 ** lu
    assert P.inverse(P(u)) == pytest.approx(u, rel=1e-6)


def test_rate_bound_linear_chain():
    # phi(u) = 18 u: Phi(u) = 18 ln(delta/u), so R(k)^2 = d0^2 exp(-floor(k/s)/18).
    spec = PhiSpec(linear_psi(1.0), 0.5, 1.0, 2, a_hat=2.0)
    for k in (0, 1, 2, 3, 4, 10, 101, 1000):
        assert rate_bound(spec, 1.0, k) == pytest.approx(math.exp(-(k // 2) / 36), rel=1e-8)


def test_rate_bound_k0_and_window():
    spec = PhiSpec(holder_psi(3.0, 0.5), 0.5, 1.0, 2, a_hat=1.0)
    rb = RateBound.from_spec(spec, 0.3)
    assert rb(0) == rb(1) == math.sqrt(0.3)
    vals = [rb(k) for k in range(0, 400)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    assert all(vals[2 * m] == vals[2 * m + 1] for m in range(200))


def test_rate_bound_enlarges_a_hat():
    spec = PhiSpec(holder_psi(1.0, 0.5), a_hat=0.1)
    assert RateBound.from_spec(spec, 1.0)(0) == 1.0


def test_rate_bound_array():
    spec = PhiSpec(holder_psi(1.0, 0.5))
    rb = RateBound.from_spec(spec, 0.5)
    out = rb(np.array([0, 10, 100]))
    assert out.shape == (3,) and out[0] == math.sqrt(0.5)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(["holder", "holder_entropic", "entropic", "logarithmic"]),
       st.floats(0.01, 0.9), st.lists(st.integers(0, 5000), min_size=2, max_size=6))
def test_rate_bound_nonincreasing(kind, d0_sq, ks):
    psi = {"holder": holder_psi(2.0, 0.4),
           "holder_entropic": holder_entropic_psi(3.0, 0.01, 1.0),
           "entropic": entropic_psi(1.0),
           "logarithmic": logarithmic_psi(1.0, 1.0)}[kind]
    rb = RateBound.from_spec(PhiSpec(psi), d0_sq)
    ks = sorted(ks)
    vals = []
    for k in ks:
        try:
            vals.append(rb(k))
        except UnderflowError:
            break
    assert all(b <= a * (1 + 1e-12) for a, b in zip(vals, vals[1:]))
    assert vals[0] <= math.sqrt(d0_sq) * (1 + 1e-12)


def test_rate_bound_holder_slope_quick():
    rb = RateBound.from_spec(PhiSpec(holder_psi(1.0, 0.5)), 1.0)
    assert rb.log_slope(10 ** 6) == pytest.approx(-0.5, abs=0.02)


def test_rate_bound_threadsafe():
    rb = RateBound.from_spec(PhiSpec(holder_psi(1.0, 0.5)), 1.0)
    ref = RateBound.from_spec(PhiSpec(holder_psi(1.0, 0.5)), 1.0)
    ks = [10 ** j for j in range(1, 7)]
    out = {}

    def work(k):
        out[k] = rb(k)

    threads = [threading.Thread(target=work, args=(k,)) for k in ks]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    for k in ks:
        assert out[k] == ref(k)


def test_classify_rate():
    c = classify_rate(0.5)
    assert c.regime == "sublinear" and c.exponent == 0.5
    assert c.phi_index == -1.0 and c.inverse_index == -1.0
    assert classify_rate(1.0, linear_floor=True).regime == "almost_linear"
    assert classify_rate(1.0).regime == "unclassified"
    assert classify_rate(0.0).regime == "sub_polynomial"
    with pytest.raises(ParameterError):
        classify_rate(1.5)
    with pytest.raises(ParameterError):
        classify_rate(-0.1)


@pytest.mark.parametrize("rho", [0.3, 0.5, 0.7])
def test_phi_big_index_matches_classification(rho):
    phi = RegFunc(lambda t: t ** rho, 0.0, 1.0, index=rho)
    P = PhiIntegral(phi, 1.0)
    big = RegFunc(P.value, 0.0, 1.0, monotone="nonincreasing")
    est = estimate_rv0_index(big, grid=np.logspace(-3, -30, 28))
    assert est.value == pytest.approx(classify_rate(rho).phi_index, abs=0.05)


def test_g_function_examples():
    for s in (10.0, 1e4, 1e8):
        assert g_function(IDENT, s) == pytest.approx(1.0, rel=1e-12)
        assert g_function(SQUARE, s) == pytest.approx(s ** -0.5, rel=1e-10)
    with pytest.raises(DomainError):
        g_function(IDENT, 0.0)


@pytest.mark.parametrize("s", [1e3, 1e5, 1e7, 1e9])
def test_g_function_closed_form(s):
    phi = RegFunc(lambda t: math.sqrt(t) * math.log(t) ** 2, 0.0, math.exp(-4), index=0.5)
    closed = 256 * s * lambert_wm1(-1 / (4 * math.sqrt(s))) ** 4
    assert g_function(phi, s) == pytest.approx(closed, rel=1e-6)


def test_g_hat():
    assert g_hat(SQUARE, 100.0) == pytest.approx(100 * 0.1)
    assert g_hat(SQUARE, 100.0, alpha=0.5) == pytest.approx(1.0)


def test_asymptotic_profiles():
    assert asymptotic_profile("holder", gamma=0.5)(100) == pytest.approx(0.1)
    he = asymptotic_profile("holder_entropic")
    assert he(10 ** 4) == pytest.approx(lambert_w0(100.0) ** 2 / 100, rel=1e-14)
    assert asymptotic_profile("logarithmic", gamma=1.0)(math.exp(10)) == pytest.approx(0.1)
    assert asymptotic_profile("logarithmic", gamma=1.0)(1) == 1.0
    env = asymptotic_profile("entropic_envelope", c=2.0)
    assert env(100) == pytest.approx(10 * 2.0 ** -10)
    lin = asymptotic_profile("holder", gamma=1.0, rate=0.25)
    assert lin.regime == "linear" and lin(3) == pytest.approx(0.25 ** 3)
    assert np.allclose(asymptotic_profile("holder", gamma=0.5)(np.array([1, 4])), [1.0, 0.5])
    for bad in [("holder", {"gamma": 1.5}), ("linear", {"rate": 1.0}),
                ("entropic_envelope", {"c": 1.0}), ("logarithmic", {"gamma": 0.0}), ("nope", {})]:
        with pytest.raises(ParameterError):
            asymptotic_profile(bad[0], **bad[1])


@pytest.mark.parametrize("case, params", [
    ("holder", {"gamma": 0.3}), ("holder_entropic", {}), ("entropic_envelope", {"c": 1.5}),
    ("logarithmic", {"gamma": 2.0}), ("linear", {"rate": 0.9}),
])
def test_profiles_positive_eventually_nonincreasing(case, params):
    prof = asymptotic_profile(case, **params)
    ks = np.unique(np.logspace(1, 6, 60).astype(int))
    vals = prof(ks)
    assert np.all(vals >= 0) and np.all(np.diff(vals) <= 0)


def test_compose_psi_examples():
    sqrt = RegFunc(lambda t: math.sqrt(t), index=0.5)
    ident = RegFunc(lambda t: t, index=1.0)
    psi = compose_psi(sqrt, [ident])
    assert psi(0.25) == pytest.approx(0.5) and psi.index == 0.5
    psi = compose_psi(ident, [sqrt, ident])
    assert psi(0.25) == pytest.approx(0.75) and psi.index == 0.5
    log = RegFunc(lambda t: -1 / math.log(t), 0.0, 0.5, index=0.0)
    assert compose_psi(log, [RegFunc(lambda t: t, 0.0, 0.5)]).index == 0.0
    with pytest.raises(ParameterError):
        compose_psi(ident, [])


def test_compose_psi_estimates_missing_index():
    psi = compose_psi(RegFunc(lambda t: t ** 0.5), [RegFunc(lambda t: t * t)])
    assert psi.index == pytest.approx(1.0, abs=0.02)


@pytest.mark.parametrize("psi", [
    holder_psi(2.0, 0.5), holder_entropic_psi(4.0, 0.01, 1.0), entropic_psi(1.5),
    logarithmic_psi(1.0, 2.0),
])
def test_gauge_closed_form_inverse(psi):
    from karamata.regvar import minus_inverse
    for y in (1e-6, 1e-3, 0.05):
        assert minus_inverse(psi, y) == pytest.approx(minus_inverse(psi, y, method="bisect"), rel=1e-9)


def test_gauge_validation():
    with pytest.raises(ParameterError):
        holder_entropic_psi(1.0, 0.2, 1.0)
    with pytest.raises(ParameterError):
        entropic_psi(1.0, c=0.5)
    with pytest.raises(ParameterError):
        logarithmic_psi(1.0, 1.0, c=1.0)
