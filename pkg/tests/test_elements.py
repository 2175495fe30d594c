import math

import numpy as np
import pytest

from noonsim.elements import (
    ELEMENT_KINDS,
    ElementSpec,
    chain,
    geometry_spacing,
    hwp,
    mode_converter,
    pbs,
    phase,
    polarizer,
    ppbs,
    qwp,
)
from noonsim.fock import (
    ModeId,
    apply_transform,
    compose,
    fock,
    max_amplitude_difference,
    modes_for,
    monomial_coefficient,
    project_occupation,
    relative_phase,
)
from noonsim.scenarios import EQ1_TARGETS, Experiment, source_state

R_V = math.sqrt(2 / 3)
H1, V1, H2, V2 = ModeId("1", "H"), ModeId("1", "V"), ModeId("2", "H"), ModeId("2", "V")


def prepared():
    st = source_state("two_pair", "src", ("1", "2"))
    return apply_transform(chain([hwp("src", math.radians(22.5)), ppbs("src", "1", "2", R_V)]), st)


def unitary_check(t):
    m = t.matrix
    assert np.allclose(m.conj().T @ m, np.eye(m.shape[1]), atol=1e-14)


def test_hwp_matrix_convention():
    t = hwp("p", 0.3)
    c, s = math.cos(0.6), math.sin(0.6)
    assert np.allclose(t.matrix, [[c, s], [s, -c]], atol=1e-15)
    # 22.5 deg turns H into diagonal
    out = apply_transform(hwp("p", math.pi / 8), fock(modes_for("p"), {"pH": 1}))
    assert out.amplitude({"pH": 1}) == pytest.approx(1 / math.sqrt(2))
    assert out.amplitude({"pV": 1}) == pytest.approx(1 / math.sqrt(2))


@pytest.mark.parametrize("theta", [0.0, 0.4, math.pi / 4, 1.3])
def test_two_quarter_wave_plates_make_a_half_wave_plate(theta):
    q = qwp("p", theta)
    assert np.allclose(compose(q, q).matrix, hwp("p", theta).matrix, atol=1e-15)


def test_qwp_at_45_deg_gives_circular_light():
    out = apply_transform(qwp("p", math.pi / 4), fock(modes_for("p"), {"pH": 1}))
    a, b = out.amplitude({"pH": 1}), out.amplitude({"pV": 1})
    assert abs(a) == pytest.approx(1 / math.sqrt(2))
    assert abs(relative_phase(a, b)) == pytest.approx(math.pi / 2)


@pytest.mark.parametrize("t", [hwp("p", 0.2), qwp("p", 0.7), ppbs("in", "r", "t", 0.3, 0.1),
                               ppbs("in", "r", "in", R_V), pbs("in", "r", "t"), phase("p", "V", 1.1),
                               mode_converter("s", "a", "b", 0.5)])
def test_elements_are_unitary(t):
    assert t.kind == "unitary"
    unitary_check(t)


def test_ppbs_splits_v_and_transmits_h():
    t = ppbs("src", "1", "2", R_V)
    modes = modes_for("src", "1", "2")
    v = apply_transform(t, fock(modes, {"srcV": 1}))
    assert v.amplitude({V1: 1}) == pytest.approx(R_V)
    assert v.amplitude({V2: 1}) == pytest.approx(math.sqrt(1 / 3))
    h = apply_transform(t, fock(modes, {"srcH": 1}))
    assert h.amplitude({H2: 1}) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        ppbs("src", "1", "2", 1.2)
    with pytest.raises(ValueError):
        ppbs("src", "src", "2", 0.5)


def test_polarizer_routes_blocked_light_to_loss():
    t = polarizer("2", "H")
    assert t.kind == "isometry" and t.loss_modes == (ModeId("2.loss", "V"),)
    out = apply_transform(t, fock(modes_for("2"), {V2: 1}))
    assert out.amplitude({ModeId("2.loss", "V"): 1}) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        polarizer("2", "D")


def test_mode_converter_mapping():
    t = mode_converter("2", "a", "b", 0.25)
    modes = modes_for("2", "a", "b")
    out = apply_transform(t, fock(modes, {H2: 2, V2: 1}))
    assert out.amplitude({"aH": 2, "bH": 1}) == pytest.approx(np.exp(0.25j))
    with pytest.raises(ValueError):
        mode_converter("2", "2", "b")


def test_geometry_spacing():
    assert geometry_spacing(1e-3, math.pi / 6) == pytest.approx(1e-3)
    with pytest.raises(ValueError):
        geometry_spacing(0.0, 0.1)


def test_ppbs_output_coefficients():
    st = prepared()
    want = {tuple(sorted(c.items())): t for c, t in EQ1_TARGETS}
    got = {k: monomial_coefficient(st, {ModeId(p, pol): n for (p, pol), n in k}) for k in want}
    ph = got[((("2", "H"), 4),)] / abs(got[((("2", "H"), 4),)])
    for k, t in want.items():
        assert abs(got[k] / ph - t) < 1e-12


def test_named_terms_carry_all_three_photon_signal_weight():
    st = prepared()
    sig = [st.index(H2), st.index(V2)]
    for occ in st.terms:
        if sum(occ[i] for i in sig) == 3:
            assert occ[st.index(V1)] == 1 and occ[st.index(H1)] == 0


def test_herald_probability():
    st = prepared()
    p = project_occupation(st, modes_for("1"), (0, 1)).probability
    # direct norm of the heralded component
    direct = sum(abs(a) ** 2 for occ, a in st.terms.items()
                 if occ[st.index(H1)] == 0 and occ[st.index(V1)] == 1)
    assert p == pytest.approx(4 / 27, abs=1e-12)
    assert direct == pytest.approx(4 / 27, abs=1e-12)


def test_circular_noon_and_path_noon():
    exp = Experiment()
    circ = apply_transform(exp.qwp2(), exp.heralded_signal())
    a30, a03 = circ.amplitude({H2: 3, V1: 1}), circ.amplitude({V2: 3, V1: 1})
    assert abs(a30) == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    assert abs(a03) == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    assert relative_phase(a30, a03) == pytest.approx(-math.pi / 2, abs=1e-9)
    path = apply_transform(exp.converter(), circ.with_modes(modes_for("a", "b")))
    target = (fock(path.modes, {"aH": 3, V1: 1}) + fock(path.modes, {"bH": 3, V1: 1})).scaled(1 / math.sqrt(2))
    # equal up to a global phase
    assert max_amplitude_difference(target, path) < 1e-12


def test_element_spec_build_and_chain():
    specs = [ElementSpec("hwp", "src", math.radians(22.5)),
             ElementSpec("PPBS", "src", path_refl="1", path_trans="2", r_v=R_V)]
    t = chain(specs)
    st = apply_transform(t, source_state("two_pair", "src", ("1", "2")))
    assert max_amplitude_difference(st, prepared()) < 1e-14
    for kind in ELEMENT_KINDS:
        spec = ElementSpec(kind, "p", 0.1, path_refl="r", path_trans="t", path_a="a", path_b="b", r_v=0.5)
        spec.build()
    with pytest.raises(ValueError):
        ElementSpec("mirror", "p")
    with pytest.raises(ValueError):
        chain([])
