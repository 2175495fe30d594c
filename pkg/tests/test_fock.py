import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_isometry, random_unitary
from noonsim.fock import (
    CreationMonomial,
    FockState,
    ModeError,
    ModeId,
    ModeTransform,
    NonIsometricTransformError,
    apply_monomial,
    apply_transform,
    compose,
    fidelity,
    fock,
    inner_product,
    max_amplitude_difference,
    modes_for,
    monomial_coefficient,
    monomials_to_state,
    number_distribution,
    project_occupation,
    relative_phase,
    state_to_monomials,
    superpose,
    total_number_distribution,
    vacuum,
)


# -- polynomial-substitution oracle ------------------------------------------
# Independent of the permanent route: expand prod_i (sum_j M[j,i] b_j)^{k_i}
# as a dict polynomial, then read it as a state via a^dag^n |0> = sqrt(n!) |n>.

def _poly_mul(p, q):
    out = {}
    for e1, c1 in p.items():
        for e2, c2 in q.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            out[e] = out.get(e, 0) + c1 * c2
    return out


def substitute(state, matrix):
    n_out = matrix.shape[0]
    result = {}
    for occ, amp in state.terms.items():
        coeff = amp / math.sqrt(math.prod(math.factorial(n) for n in occ))
        poly = {(0,) * n_out: coeff}
        for i, k in enumerate(occ):
            lin = {tuple(int(j == r) for r in range(n_out)): matrix[j, i] for j in range(n_out)}
            for _ in range(k):
                poly = _poly_mul(poly, lin)
        for e, c in poly.items():
            result[e] = result.get(e, 0) + c
    return {e: c * math.sqrt(math.prod(math.factorial(n) for n in e)) for e, c in result.items()}


def random_state(modes, max_photons, rng, terms=4):
    out = {}
    for _ in range(terms):
        n = rng.integers(0, max_photons + 1)
        occ = tuple(rng.multinomial(n, [1 / len(modes)] * len(modes)))
        out[occ] = out.get(occ, 0) + complex(rng.normal(), rng.normal())
    return FockState(modes, out).normalize()


def test_mode_parse_and_str():
    assert ModeId.parse("2H") == ModeId("2", "H")
    assert ModeId.parse("loss0:V") == ModeId("loss0", "V")
    assert str(ModeId("a", "V")) == "a:V"
    with pytest.raises(ValueError):
        ModeId("a", "D")
    with pytest.raises(ValueError):
        ModeId.parse("H")


def test_state_rejects_bad_modesets():
    with pytest.raises(ModeError):
        FockState(())
    with pytest.raises(ModeError):
        FockState((ModeId("1"), ModeId("1")))
    with pytest.raises(ValueError):
        FockState(modes_for("1"), {(1,): 1.0})


def test_creation_operator_ladder():
    modes = modes_for("1")
    s = vacuum(modes)
    for n in range(1, 6):
        s = apply_monomial(CreationMonomial({ModeId("1", "H"): 1}), s)
        assert s.amplitude({ModeId("1", "H"): n}) == pytest.approx(math.sqrt(math.factorial(n)))


def test_two_pair_source_is_normalized():
    modes = modes_for("src")
    s = monomials_to_state(modes, [CreationMonomial({"srcH": 2, "srcV": 2}, 0.5)])
    assert s.norm == pytest.approx(1.0, abs=1e-15)
    assert monomial_coefficient(s, {"srcH": 2, "srcV": 2}) == pytest.approx(0.5)
    assert state_to_monomials(s) == {(2, 2): pytest.approx(0.5)}


def test_monomial_rejects_negative_exponent():
    with pytest.raises(ValueError):
        CreationMonomial({"1H": -1})


def test_isometry_check():
    m = modes_for("1")
    with pytest.raises(NonIsometricTransformError):
        ModeTransform(m, m, np.array([[1.0, 0.1], [0.0, 1.0]]))
    with pytest.raises(ModeError):
        ModeTransform(m, m[::-1], np.eye(2))
    t = ModeTransform(m, m + (ModeId("loss"),), random_isometry(3, 2, np.random.default_rng(1)))
    assert t.kind == "isometry" and t.loss_modes == (ModeId("loss"),)
    with pytest.raises(NonIsometricTransformError):
        t.inverse()


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n_modes=st.integers(1, 4), photons=st.integers(0, 4))
def test_transform_matches_polynomial_substitution(seed, n_modes, photons):
    rng = np.random.default_rng(seed)
    modes = tuple(ModeId(str(i), "H") for i in range(n_modes))
    state = random_state(modes, photons, rng)
    u = random_unitary(n_modes, rng)
    out = apply_transform(ModeTransform(modes, modes, u), state)
    ref = substitute(state, u)
    keys = set(out.terms) | set(ref)
    assert max(abs(out.terms.get(k, 0) - ref.get(k, 0)) for k in keys) < 1e-12


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_isometry_matches_substitution_and_keeps_norm(seed):
    rng = np.random.default_rng(seed)
    modes = modes_for("1")
    outs = modes + (ModeId("l0"), ModeId("l1"))
    m = random_isometry(4, 2, rng)
    state = random_state(modes, 4, rng)
    out = apply_transform(ModeTransform(modes, outs, m), state)
    ref = substitute(state, m)
    keys = set(out.terms) | set(ref)
    assert max(abs(out.terms.get(k, 0) - ref.get(k, 0)) for k in keys) < 1e-12
    assert out.norm == pytest.approx(1.0, abs=1e-12)


def test_transform_leaves_other_modes_alone(rng):
    modes = modes_for("1", "2")
    state = random_state(modes, 3, rng)
    t = ModeTransform(modes_for("1"), modes_for("1"), random_unitary(2, rng))
    out = apply_transform(t, state)
    assert total_number_distribution(out, modes_for("2")) == pytest.approx(
        total_number_distribution(state, modes_for("2")))


def test_transform_errors():
    t = ModeTransform.identity(modes_for("9"))
    with pytest.raises(ModeError):
        apply_transform(t, vacuum(modes_for("1")))
    lossy = ModeTransform(modes_for("1"), modes_for("1") + (ModeId("x"),),
                          np.array([[1, 0], [0, 1 / math.sqrt(2)], [0, 1 / math.sqrt(2)]]))
    with pytest.raises(ModeError):
        apply_transform(lossy, vacuum(modes_for("1") + (ModeId("x"),)))


def test_hom_dip():
    modes = (ModeId("a"), ModeId("b"))
    bs = ModeTransform(modes, modes, np.array([[1, 1], [1, -1]]) / math.sqrt(2))
    out = apply_transform(bs, fock(modes, {"aH": 1, "bH": 1}))
    assert abs(out.amplitude({"aH": 1, "bH": 1})) < 1e-15
    assert abs(out.amplitude({"aH": 2})) == pytest.approx(1 / math.sqrt(2))


def test_compose_equals_sequential(rng):
    modes = modes_for("1", "2")
    s = random_state(modes, 3, rng)
    t1 = ModeTransform(modes_for("1"), modes_for("1"), random_unitary(2, rng))
    t2 = ModeTransform((ModeId("1", "V"), ModeId("2", "H")), (ModeId("1", "V"), ModeId("2", "H")),
                       random_unitary(2, rng))
    seq = apply_transform(t2, apply_transform(t1, s))
    once = apply_transform(compose(t2, t1), s)
    assert max_amplitude_difference(seq, once, modulo_phase=False) < 1e-12
    assert max_amplitude_difference(apply_transform(t1.then(t2), s), seq, modulo_phase=False) < 1e-12


def test_inverse_round_trip(rng):
    modes = modes_for("1")
    t = ModeTransform(modes, modes, random_unitary(2, rng))
    s = random_state(modes, 4, rng)
    back = apply_transform(t.inverse(), apply_transform(t, s))
    assert max_amplitude_difference(back, s, modulo_phase=False) < 1e-12


def test_inner_product_fidelity_and_phase():
    modes = (ModeId("a"), ModeId("b"))
    x = fock(modes, {"aH": 3})
    y = fock(modes, {"bH": 3})
    noon = superpose((1 / math.sqrt(2), x), (1j / math.sqrt(2), y))
    assert inner_product(x, noon) == pytest.approx(1 / math.sqrt(2))
    assert fidelity(noon, noon.scaled(cmath.exp(0.7j))) == pytest.approx(1.0)
    assert relative_phase(noon.amplitude({"aH": 3}), noon.amplitude({"bH": 3})) == pytest.approx(math.pi / 2)


def test_projection_and_distributions():
    modes = (ModeId("a"), ModeId("b"))
    s = superpose((math.sqrt(0.25), fock(modes, {"aH": 1})), (math.sqrt(0.75), fock(modes, {"bH": 2})))
    proj = project_occupation(s, [ModeId("a")], [0])
    assert proj.defined and proj.probability == pytest.approx(0.75)
    assert proj.state.norm == pytest.approx(1.0)
    empty = project_occupation(s, [ModeId("a")], [5])
    assert not empty.defined and empty.probability == 0
    assert number_distribution(s, [ModeId("b")]) == {(0,): pytest.approx(0.25), (2,): pytest.approx(0.75)}


def test_json_round_trip(rng):
    s = random_state(modes_for("1", "2"), 3, rng)
    back = FockState.from_json(s.to_json())
    assert back.modes == s.modes
    assert dict(back.terms) == dict(s.terms)


def test_reorder_and_extend(rng):
    s = random_state(modes_for("1"), 3, rng)
    r = s.reorder(s.modes[::-1])
    assert inner_product(s, r) == pytest.approx(1.0)
    e = s.with_modes([ModeId("z"), s.modes[0]])
    assert e.modes[-1] == ModeId("z") and len(e.modes) == 3
    with pytest.raises(ModeError):
        s.extend([s.modes[0]])
