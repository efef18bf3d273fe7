"""Hypothesis properties for the structural invariants."""

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from hamthermo import (
    GeneralProcessHamiltonian,
    IdealGasEnergy,
    IdealGasParams,
    IntegratorConfig,
    IsochoricHamiltonian,
    IsothermalIsochoricHamiltonian,
    InteractingMapHamiltonian,
    PhasePoint,
    ProcessSpec,
    TangentVector,
    TransformedPotential,
    canonical_pairing,
    embed,
    energy_rate,
    hydrostatic_preset,
    integrate,
    onshell_residual,
)
from hamthermo.geometry import HYDROSTATIC, ShiftedHamiltonian

finite = st.floats(-10.0, 10.0, allow_nan=False)
vec3 = st.lists(finite, min_size=3, max_size=3)
S_ = st.floats(-2.0, 2.0)
pos = st.floats(0.1, 10.0)
q_points = st.tuples(S_, pos, pos).map(list)
params = st.builds(IdealGasParams, st.floats(0.1, 5.0), st.floats(0.5, 4.0))
coef = st.floats(-1.0, 1.0, allow_nan=False).map(lambda c: round(c, 6))


@st.composite
def process(draw):
    exprs = []
    for _ in range(3):
        c = [draw(coef) for _ in range(4)]
        exprs.append(f"{c[0]} + {c[1]}*S + {c[2]}*V*N + {c[3]}*exp(S/(V+N))")
    return ProcessSpec.from_expressions(exprs, HYDROSTATIC)


def rel(a, b):
    return abs(a - b) / max(1.0, abs(b))


@given(vec3, vec3, vec3, vec3)
def test_pairing_antisymmetric(a, b, c, d):
    u, v = TangentVector(a, b), TangentVector(c, d)
    w = canonical_pairing(u, v)
    assert abs(w + canonical_pairing(v, u)) <= 1e-12 * max(1.0, abs(w))
    assert canonical_pairing(u, u) == 0.0


@given(vec3, vec3, vec3, vec3, finite)
def test_pairing_bilinear(a, b, c, d, s):
    u, v = TangentVector(a, b), TangentVector(c, d)
    su = TangentVector(np.multiply(s, a), np.multiply(s, b))
    assert rel(canonical_pairing(su, v), s * canonical_pairing(u, v)) <= 1e-10


@given(params, q_points, st.floats(0.2, 5.0))
def test_homogeneity(p, q, lam):
    phi = IdealGasEnergy(p)
    E = phi(q)
    assert abs(phi([lam * v for v in q]) - lam * E) <= 1e-12 * abs(lam * E)


@given(params, q_points)
def test_euler_identity(p, q):
    phi = IdealGasEnergy(p)
    E = phi(q)
    assert abs(E - float(np.dot(q, phi.gradient(q)))) <= 1e-10 * abs(E)


@given(params, q_points)
def test_hessian_symmetric_and_degenerate_along_q(p, q):
    phi = IdealGasEnergy(p)
    h = phi.dual_hessian(q)
    scale = np.max(np.abs(h))
    assert np.max(np.abs(h - h.T)) <= 1e-10 * scale
    # homogeneity of degree one puts q in the kernel of the Hessian
    assert np.max(np.abs(h @ np.asarray(q))) <= 1e-9 * scale * max(1.0, np.max(np.abs(q)))


@given(params, q_points)
def test_entropy_round_trip(p, q):
    phi = IdealGasEnergy(p)
    E = phi(q)
    S = phi.entropy(E, q[1], q[2])
    assert abs(phi([S, q[1], q[2]]) - E) <= 1e-12 * abs(E)
    assert abs(S - q[0]) <= 1e-12 * max(1.0, abs(q[0])) * (p.C * q[2])


@given(params, q_points)
def test_embed_lies_on_equilibrium_set(p, q):
    phi = IdealGasEnergy(p)
    assert onshell_residual(phi, embed(phi, q)) <= 1e-12


@given(q_points, vec3, st.sampled_from(["isochoric", "isothermal", "interacting"]))
def test_energy_stationarity(q, dp, kind):
    phi = IdealGasEnergy(IdealGasParams(1.0, 1.5))
    H = {
        "isochoric": IsochoricHamiltonian(),
        "isothermal": IsothermalIsochoricHamiltonian(),
        "interacting": InteractingMapHamiltonian(0.1, -0.05),
    }[kind]
    x = embed(phi, q)
    x = PhasePoint(x.q, x.p + 0.01 * np.asarray(dp), HYDROSTATIC)
    rate, norm = energy_rate(H, x)
    assert abs(rate) <= 1e-10 * max(norm * norm, 1e-300)


@given(process(), q_points, st.floats(-10.0, 10.0))
def test_general_process_level_set(X, q, Lam):
    phi = IdealGasEnergy(IdealGasParams(1.0, 1.5))
    H = GeneralProcessHamiltonian(phi, X, Lam)
    assert rel(H(embed(phi, q)), Lam) <= 1e-12


@given(process(), q_points)
def test_general_process_configuration_flow_is_X(X, q):
    phi = IdealGasEnergy(IdealGasParams(1.0, 1.5))
    H = GeneralProcessHamiltonian(phi, X)
    x = embed(phi, q)
    gq, gp = H.gradient(x.q, x.p)
    np.testing.assert_allclose(gp, X(q), rtol=1e-12, atol=1e-12)


@given(st.floats(-50.0, 50.0), st.sampled_from(["implicit-midpoint", "rk4"]))
def test_lambda_shift_leaves_flow_unchanged(shift, method):
    phi = IdealGasEnergy(IdealGasParams(1.0, 1.5))
    x0 = embed(phi, [0.3, 1.0, 1.2])
    cfg = IntegratorConfig(method=method, dt=1e-2, steps=20)
    H = IsochoricHamiltonian()
    a = integrate(H, x0, cfg).states
    b = integrate(ShiftedHamiltonian(H, shift), x0, cfg).states
    assert np.array_equal(a, b)


@given(q_points, st.sampled_from(["helmholtz", "enthalpy", "gibbs"]))
def test_legendre_value_and_recovery(q, name):
    phi = IdealGasEnergy(IdealGasParams(1.0, 1.5))
    spec = hydrostatic_preset(name)
    g = phi.gradient(q)
    z = [g[i] if i in spec.K else q[i] for i in range(3)]
    psi, qK = TransformedPotential(phi, spec, [q[k] for k in spec.K]).evaluate(z)
    expect = phi(q) - sum(g[k] * q[k] for k in spec.K)
    assert rel(psi, expect) <= 1e-10
    for k, v in zip(spec.K, qK):
        assert rel(v, q[k]) <= 1e-10
