import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from noonsim.detection import (
    Detector,
    DetectorSpec,
    StateEnsemble,
    accidental_model,
    click_probability_given_n,
    dephasing_noise,
    enumerate_click_probability,
    herald,
    pattern_rate,
    photon_number_distribution,
    reproduces_threefold_shape,
    routing_from_tree,
    routing_ratio,
    subtract_accidentals,
    threefold_reference,
)
from noonsim.fock import ModeId, fock, modes_for
from noonsim.scenarios import Experiment, eq4_residual, temporal_rates

IDS = ("spc2", "spc3", "spc4")


def all_patterns(ids):
    for k in range(len(ids) + 1):
        yield from itertools.combinations(ids, k)


@pytest.mark.parametrize("spec", [DetectorSpec.from_tree(efficiency=0.37), DetectorSpec.symmetric(efficiency=0.8),
                                  DetectorSpec.from_tree((("a", "b"), ("c", "d")), efficiency=0.6)],
                         ids=["tree", "symmetric", "four-leaf"])
def test_formula_matches_enumeration(spec):
    for n in range(7):
        for pat in all_patterns(spec.ids):
            assert abs(click_probability_given_n(n, spec, pat) - enumerate_click_probability(n, spec, pat)) < 1e-12


@settings(max_examples=25, deadline=None)
@given(q=st.lists(st.floats(0.01, 1.0), min_size=3, max_size=3),
       eta=st.lists(st.floats(0.0, 1.0), min_size=3, max_size=3),
       n=st.integers(0, 6))
def test_formula_matches_enumeration_random_routing(q, eta, n):
    q = np.array(q) / sum(q)
    q[-1] = 1.0 - q[:-1].sum()
    spec = DetectorSpec(tuple(Detector(i, e) for i, e in zip(IDS, eta)), tuple(q))
    for pat in all_patterns(IDS):
        assert abs(click_probability_given_n(n, spec, pat) - enumerate_click_probability(n, spec, pat)) < 1e-12


@pytest.mark.parametrize("eta", [0.1, 0.5, 1.0])
def test_three_photon_tree_value(eta):
    spec = DetectorSpec.from_tree(efficiency=eta)
    assert click_probability_given_n(3, spec, IDS) == pytest.approx(3 / 16 * eta ** 3, rel=1e-12)


def test_fewer_photons_than_detectors_never_click():
    spec = DetectorSpec.from_tree(efficiency=0.1)
    for n in range(3):
        assert click_probability_given_n(n, spec, IDS) == 0.0
    assert click_probability_given_n(0, spec, ()) == 1.0


def test_errors():
    spec = DetectorSpec.from_tree()
    with pytest.raises(ValueError):
        click_probability_given_n(2, spec, ["spc9"])
    with pytest.raises(ValueError):
        click_probability_given_n(-1, spec, IDS)
    with pytest.raises(ValueError):
        Detector("x", 1.5)
    with pytest.raises(ValueError):
        DetectorSpec((Detector("x"), Detector("y")), (0.5, 0.6))
    with pytest.raises(ValueError):
        routing_from_tree(("a", ("a", "b")))
    with pytest.raises(ValueError):
        routing_from_tree(("a", "b", "c"))


def test_routing_from_tree():
    assert routing_from_tree(("spc2", ("spc3", "spc4"))) == {"spc2": 0.5, "spc3": 0.25, "spc4": 0.25}


@settings(max_examples=25, deadline=None)
@given(q=st.lists(st.floats(0.05, 1.0), min_size=3, max_size=3), eta=st.floats(0.05, 1.0))
def test_every_routing_reproduces_four_to_three_ratio(q, eta):
    # P(all click | 4) / P(all click | 3) = 2 (2 - eta) for any routing
    q = np.array(q) / sum(q)
    q[-1] = 1.0 - q[:-1].sum()
    spec = DetectorSpec(tuple(Detector(i, eta) for i in IDS), tuple(q))
    assert routing_ratio(spec) == pytest.approx(2 * (2 - eta), rel=1e-10)
    assert reproduces_threefold_shape(spec, tol=1e-10)


def test_unequal_efficiencies_do_not_qualify():
    spec = DetectorSpec(tuple(Detector(i, e) for i, e in zip(IDS, (0.5, 0.6, 0.7))), (0.5, 0.25, 0.25))
    assert not reproduces_threefold_shape(spec)


@pytest.mark.parametrize("eta", [0.1, 0.5, 1.0])
def test_unheralded_threefold_shape(experiment, eta):
    assert eq4_residual(experiment, eta) < 1e-9


def test_symmetric_routing_also_reproduces_shape(default_data):
    data = dict(default_data, detectors=dict(default_data["detectors"], routing=[1 / 3, 1 / 3, 1 / 3]))
    assert eq4_residual(Experiment(data), 0.5) < 1e-9


def test_herald_branch_weights():
    modes = modes_for("1", "2")
    st_ = (fock(modes, {"1V": 1, "2H": 1}) + fock(modes, {"2H": 2})).normalize()
    for eta in (0.3, 1.0):
        click, miss = herald(st_, modes_for("1"), eta), herald(st_, modes_for("1"), eta, click=False)
        assert click.total_weight == pytest.approx(0.5 * eta)
        assert click.total_weight + miss.total_weight == pytest.approx(1.0)
    with pytest.raises(ValueError):
        herald(st_, modes_for("1"), 1.5)


def test_heralded_fringe_is_pure_third_harmonic(default_data):
    chi = np.linspace(0, 2 * np.pi, 48, endpoint=False)
    data = dict(default_data, detectors=dict(default_data["detectors"], trigger_efficiency=1.0))
    r = temporal_rates(Experiment(data), chi)["heralded"]
    c = r.max()
    assert np.max(np.abs(r - c * np.sin(1.5 * chi) ** 2)) < 1e-12 * c


def test_background_term_never_heralds(experiment):
    # the four-photon term has nothing at the trigger
    ens = herald(experiment.prepared(), experiment.herald_modes, 1.0)
    dist = photon_number_distribution(ens, [ModeId("2", "H"), ModeId("2", "V")])
    assert dist.get(4, 0.0) == 0.0


def test_accidental_model_round_trip():
    noon, bg = np.array([1.0, 2.0]), np.array([0.5, 4.0])
    assert np.array_equal(accidental_model(noon, bg, 0.0), noon)
    tot = accidental_model(noon, bg, 0.05)
    assert np.allclose(subtract_accidentals(tot, bg, 0.05), noon)
    with pytest.raises(ValueError):
        accidental_model(-noon, bg, 0.1)
    with pytest.raises(ValueError):
        subtract_accidentals(tot, bg, -0.1)


def test_dephasing_noise_mixes_noon_branches():
    modes = (ModeId("a"), ModeId("b"))
    noon = (fock(modes, {"aH": 3}) + fock(modes, {"bH": 3})).normalize()
    ens = dephasing_noise(noon, 0.49, [ModeId("b")])
    assert ens.total_weight == pytest.approx(1.0)
    assert sorted(round(w, 12) for w, _ in ens) == [0.255, 0.255, 0.49]
    assert len(dephasing_noise(noon, 1.0, [ModeId("b")])) == 1
    with pytest.raises(ValueError):
        dephasing_noise(noon, 1.2, [ModeId("b")])


def test_pattern_rate_on_pure_state():
    spec = DetectorSpec.from_tree(efficiency=1.0)
    s = fock(modes_for("2"), {"2H": 3})
    assert pattern_rate(s, "2H", spec, IDS) == pytest.approx(3 / 16)
    assert pattern_rate(StateEnsemble.pure(s), ["2H"], spec, ["spc2"]) == pytest.approx(1 - 0.5 ** 3)


def test_threefold_reference_values():
    assert threefold_reference(0.0, 1.0) == pytest.approx(81.0)
    assert threefold_reference(math.pi, 0.5) == pytest.approx(0.125 * (4 + 1.5))
