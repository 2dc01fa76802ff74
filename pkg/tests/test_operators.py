import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from karamata.errors import DomainError, ParameterError
from karamata.operators import (
    GAMMA_HALF,
    Affine,
    CoordinatePlane,
    DRFixRay,
    ExpCone,
    ExpConeFace,
    FlatEpigraph,
    FixedPointOperator,
    GammaEpigraph,
    Halfspace,
    PowerEpigraph,
    Singleton,
    average,
    distance_to,
    dr_operator,
    gamma,
    gamma_inv,
    line,
    project,
    projector,
    residual,
    set_from_dict,
)

from oracles import exp_cone_oracle, gamma_epigraph_oracle, gamma_ref, in_exp_cone

RNG = np.random.default_rng(12345)

SETS_2D = [
    line(0.3), Halfspace([1.0, 2.0], 0.5), CoordinatePlane(1), Singleton((0.2, -0.1)),
    DRFixRay(), GammaEpigraph(), FlatEpigraph(1.0), FlatEpigraph(0.5), PowerEpigraph(0.5),
    PowerEpigraph(1.0, 0.7),
]
SETS_3D = [ExpCone(), ExpConeFace(), Affine([[1.0, 1.0, 1.0]], [1.0]), CoordinatePlane(1)]


def _ids(sets):
    return [type(s).__name__ + str(i) for i, s in enumerate(sets)]


# --- gamma pair ---------------------------------------------------------------

def test_gamma_examples():
    assert gamma_inv(math.exp(-2)) == pytest.approx(2 / math.e, rel=1e-15)
    assert gamma(gamma_inv(0.01)) == pytest.approx(0.01, abs=1e-10)
    # mpmath value of exp(2 W_{-1}(-1/4)) at 40 digits.
    assert gamma(0.5) == pytest.approx(0.013479507251343891091, rel=1e-13)
    assert GAMMA_HALF < 1 and gamma(0.0) == 0.0 and gamma_inv(0.0) == 0.0


def test_gamma_domain():
    with pytest.raises(DomainError):
        gamma(0.6)
    with pytest.raises(DomainError):
        gamma_inv(-1e-3)
    with pytest.raises(DomainError):
        gamma_inv(0.2)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-300, GAMMA_HALF))
def test_gamma_inverse_identity(y):
    assert gamma(gamma_inv(y)) == pytest.approx(y, rel=1e-10)


@settings(max_examples=200, deadline=None)
@given(st.floats(-0.5, 0.5))
def test_gamma_matches_scipy(x):
    assert gamma(x) == pytest.approx(gamma_ref(x), rel=1e-12, abs=1e-300)
    assert gamma(x) == gamma(-x)


def test_gamma_tiny_underflows_to_zero():
    assert gamma(1e-200) == 0.0 or gamma(1e-200) < 1e-300
    assert gamma(np.array([0.0, 0.25])).shape == (2,)


# --- projections --------------------------------------------------------------

def test_expcone_examples():
    K = ExpCone()
    assert np.array_equal(K.project((0.0, 1.0, 3.0)), [0.0, 1.0, 3.0])
    p = np.array([1.0, 0.0, -1.0])
    assert np.linalg.norm(K.project(p) - exp_cone_oracle(p)) <= 1e-6
    assert np.array_equal(K.project((1.0, -1.0, -1.0)), np.zeros(3))  # polar cone point
    assert np.array_equal(K.project((-1.0, -1.0, 2.0)), [-1.0, 0.0, 2.0])


def test_expcone_against_oracle():
    pts = RNG.uniform(-2, 2, size=(30, 3))
    K = ExpCone()
    err = max(np.linalg.norm(K.project(p) - exp_cone_oracle(p)) for p in pts)
    assert err <= 1e-4


def test_expcone_polar_identity():
    K = ExpCone()
    for p in RNG.uniform(-3, 3, size=(500, 3)):
        q = K.project(p)
        if K.in_polar(p):
            assert np.linalg.norm(q) == 0.0
        # Moreau decomposition: q is orthogonal to p - q.
        assert abs(q @ (p - q)) <= 1e-8 * max(1.0, p @ p)


def test_expcone_membership():
    K = ExpCone()
    for p in RNG.uniform(-2, 2, size=(300, 3)):
        assert K.contains(p) == in_exp_cone(p)


def test_gamma_epigraph_example():
    q = GammaEpigraph().project((0.1, 0.0))
    # Golden-section oracle with mpmath's W_{-1}: xbar = 0.099999607988819122445.
    assert q[0] == pytest.approx(0.099999607988819122445, abs=1e-10)
    assert q[1] == pytest.approx(gamma(q[0]), rel=1e-10)


def test_gamma_epigraph_against_oracle():
    C = GammaEpigraph()
    for p in RNG.uniform(-0.8, 0.8, size=(200, 2)):
        assert np.linalg.norm(C.project(p) - gamma_epigraph_oracle(p)) <= 1e-8


@pytest.mark.parametrize("S", SETS_2D + SETS_3D, ids=_ids(SETS_2D + SETS_3D))
def test_idempotent_nonexpansive(S):
    dim = 3 if S in SETS_3D else 2
    pts = RNG.uniform(-2, 2, size=(1000, dim))
    proj = np.array([S.project(p) for p in pts])
    again = np.array([S.project(q) for q in proj])
    assert np.max(np.linalg.norm(again - proj, axis=1)) <= 1e-9
    d_in = np.linalg.norm(pts[1:] - pts[:-1], axis=1)
    d_out = np.linalg.norm(proj[1:] - proj[:-1], axis=1)
    assert np.all(d_out <= d_in + 1e-9)
    # Distance consistency: members are exactly the zero-distance points.
    assert all(S.distance(q) <= 1e-9 for q in proj[:50])


@pytest.mark.parametrize("S", SETS_2D + SETS_3D, ids=_ids(SETS_2D + SETS_3D))
def test_variational_inequality(S):
    dim = 3 if S in SETS_3D else 2
    pts = RNG.uniform(-2, 2, size=(300, dim))
    members = np.array([S.project(z) for z in RNG.uniform(-3, 3, size=(300, dim))])
    for p in pts:
        q = S.project(p)
        assert np.max((members - q) @ (p - q)) <= 1e-8


def test_distance_formulas():
    assert distance_to(DRFixRay(), (3.0, -4.0)) == 5.0
    assert distance_to(DRFixRay(), (0.0, 7.0)) == 0.0
    assert distance_to(Singleton((0.0, 0.0)), (1.0, 1.0)) == pytest.approx(math.sqrt(2))
    assert distance_to(CoordinatePlane(1), (2.0, -0.5)) == 0.5
    assert distance_to(line(0.0), (3.0, 4.0)) == pytest.approx(4.0)
    assert np.allclose(project(Halfspace([0.0, 1.0], 1.0), (0.0, 3.0)), [0.0, 1.0])


def test_non_finite_point_rejected():
    with pytest.raises(DomainError):
        ExpCone().project((math.nan, 0.0, 0.0))


def test_affine_validation():
    with pytest.raises(ParameterError):
        Affine([[1.0, 1.0], [2.0, 2.0]], [0.0, 1.0])
    with pytest.raises(ParameterError):
        Halfspace([0.0, 0.0], 1.0)


@pytest.mark.parametrize("S", SETS_2D + SETS_3D, ids=_ids(SETS_2D + SETS_3D))
def test_descriptor_roundtrip(S):
    d = json.loads(json.dumps(S.to_dict()))
    T = set_from_dict(d)
    dim = 3 if S in SETS_3D else 2
    for p in RNG.uniform(-1, 1, size=(20, dim)):
        assert np.allclose(S.project(p), T.project(p))


def test_descriptor_errors():
    with pytest.raises(ParameterError):
        set_from_dict({"kind": "torus"})
    with pytest.raises(ParameterError):
        set_from_dict({"kind": "halfspace"})


# --- operators ----------------------------------------------------------------

def _dr():
    C1, C2 = GammaEpigraph(), CoordinatePlane(1)
    return dr_operator(C2.project, C1.project, DRFixRay())


def test_dr_examples():
    T = _dr()
    assert np.allclose(T((0.0, 1.0)), [0.0, 1.0])
    assert residual((0.0, -1.0), [T]) > 0
    ident = dr_operator(lambda w: np.asarray(w, float), lambda w: np.asarray(w, float))
    assert np.array_equal(ident((0.3, -2.0)), [0.3, -2.0])
    assert T.alpha == 0.5 and isinstance(T.fix_set, DRFixRay)


def test_dr_fixed_set_grid():
    T = _dr()
    g = np.round(np.arange(-1.0, 1.0 + 1e-9, 0.05), 10)
    for x in g:
        for mu in g:
            r = residual((x, mu), [T])
            if abs(x) <= 1e-8 and mu >= -1e-8:
                assert r <= 1e-10
            else:
                assert r > 1e-10


@settings(max_examples=200, deadline=None)
@given(st.floats(0.0, 5.0))
def test_dr_ray_points_fixed(mu):
    assert residual((0.0, mu), [_dr()]) <= 1e-10


def test_average_examples():
    P1, P2 = projector(line(0.0)), projector(line(math.pi / 2))
    assert np.allclose(average([P1, P2], [0.5, 0.5])((1.0, 1.0)), [0.5, 0.5])
    assert np.allclose(average([P1], [1.0])((1.0, 2.0)), P1((1.0, 2.0)))
    assert np.allclose(average([P1, P1], [0.5, 0.5])((1.0, 2.0)), P1((1.0, 2.0)))
    # Lines at 0 and pi/4: P1(1,2) = (1,0), P2(1,2) = (1.5,1.5).
    P3 = projector(line(math.pi / 4))
    assert np.allclose(average([P1, P3], [0.5, 0.5])((1.0, 2.0)), [1.25, 0.75])
    with pytest.raises(ParameterError):
        average([P1, P2], [0.5, 0.4])


def test_residual_examples():
    C1, C2 = GammaEpigraph(), CoordinatePlane(1)
    ops = [projector(C1), projector(C2)]
    assert residual((0.0, 0.0), ops) == 0.0
    for t in (0.05, 0.2, 0.45):
        r = residual((t, 0.0), ops)
        assert r > 0
        assert r == pytest.approx(np.linalg.norm(np.array([t, 0.0]) - gamma_epigraph_oracle((t, 0.0))),
                                  rel=1e-8)
    P = projector(line(0.0))
    assert residual((1.0, 2.0), [P]) == 2.0


def test_operator_validation():
    with pytest.raises(ParameterError):
        FixedPointOperator(lambda x: x, alpha=1.0)
