"""Threshold detectors behind a 3 dB splitter tree, heralding and accidentals.

Photons reaching the fiber are routed to detector ``i`` with probability
``q_i`` (from the splitter tree) and detected there with efficiency
``eta_i``.  A detector clicks on one or more detected photons.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .fock import FockState, ModeId, number_distribution, project_occupation

DEFAULT_TREE = ("spc2", ("spc3", "spc4"))


@dataclass(frozen=True)
class Detector:
    id: str
    efficiency: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError(f"detector {self.id}: efficiency must lie in [0, 1]")


def routing_from_tree(tree) -> dict[str, Fraction]:
    """Routing probabilities of a nested 50/50 splitter tree.

    ``("spc2", ("spc3", "spc4"))`` -> ``{spc2: 1/2, spc3: 1/4, spc4: 1/4}``.
    """
    out: dict[str, Fraction] = {}

    def walk(node, weight):
        if isinstance(node, str):
            if node in out:
                raise ValueError(f"detector {node!r} appears twice in the splitter tree")
            out[node] = weight
            return
        node = tuple(node)
        if len(node) != 2:
            raise ValueError("every 3 dB coupler splits into exactly two branches")
        for child in node:
            walk(child, weight / 2)

    walk(tree, Fraction(1))
    return out


def tree_leaf_paths(tree) -> list[tuple[str, tuple[int, ...]]]:
    """Each detector with its sequence of coupler output ports (0/1)."""
    if isinstance(tree, str):
        return [(tree, ())]
    left, right = tree
    return ([(d, (0,) + p) for d, p in tree_leaf_paths(left)]
            + [(d, (1,) + p) for d, p in tree_leaf_paths(right)])


@dataclass(frozen=True)
class DetectorSpec:
    """Detector array with per-detector efficiency and routing probabilities."""

    detectors: tuple[Detector, ...]
    routing: tuple[float, ...]
    tree: object = None

    def __post_init__(self):
        ids = [d.id for d in self.detectors]
        if len(set(ids)) != len(ids):
            raise ValueError("detector ids must be unique")
        if len(self.routing) != len(self.detectors):
            raise ValueError("one routing probability per detector is required")
        if any(q < 0 for q in self.routing) or abs(sum(self.routing) - 1.0) > 1e-12:
            raise ValueError("routing probabilities must be non-negative and sum to 1")
        object.__setattr__(self, "detectors", tuple(self.detectors))
        object.__setattr__(self, "routing", tuple(float(q) for q in self.routing))

    @classmethod
    def from_tree(cls, tree=DEFAULT_TREE, efficiency=1.0) -> "DetectorSpec":
        q = routing_from_tree(tree)
        effs = efficiency if isinstance(efficiency, dict) else {k: efficiency for k in q}
        dets = tuple(Detector(k, float(effs[k])) for k in q)
        return cls(dets, tuple(float(v) for v in q.values()), tree)

    @classmethod
    def symmetric(cls, ids: Sequence[str] = ("spc2", "spc3", "spc4"), efficiency=1.0) -> "DetectorSpec":
        n = len(ids)
        return cls(tuple(Detector(i, efficiency) for i in ids), (1.0 / n,) * n)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(d.id for d in self.detectors)

    def with_efficiency(self, efficiency: float) -> "DetectorSpec":
        return DetectorSpec(tuple(Detector(d.id, efficiency) for d in self.detectors),
                            self.routing, self.tree)

    def _indices(self, pattern: Iterable[str]) -> list[int]:
        ids = self.ids
        out = []
        for p in pattern:
            if p not in ids:
                raise ValueError(f"pattern references unknown detector {p!r}")
            out.append(ids.index(p))
        return out


def click_probability_given_n(n: int, spec: DetectorSpec, pattern: Iterable[str]) -> float:
    """P(every detector in ``pattern`` clicks | ``n`` photons enter the tree).

    Inclusion-exclusion over the detectors that stay dark:
    ``sum_{S in pattern} (-1)^|S| (1 - sum_{i in S} eta_i q_i)^n``.
    """
    if n < 0:
        raise ValueError("photon number must be non-negative")
    idx = spec._indices(pattern)
    if n < len(set(idx)):
        # pigeonhole; the alternating sum would leave ~1e-17 cancellation residue
        return 0.0
    p = [spec.detectors[i].efficiency * spec.routing[i] for i in idx]
    total = 0.0
    for k in range(len(idx) + 1):
        for subset in itertools.combinations(range(len(idx)), k):
            total += (-1) ** k * (1.0 - sum(p[i] for i in subset)) ** n
    return min(max(total, 0.0), 1.0)


def enumerate_click_probability(n: int, spec: DetectorSpec, pattern: Iterable[str]) -> float:
    """Brute-force reference for :func:`click_probability_given_n`.

    Walks every photon through every coupler output port (or, without a
    tree, every detector) and then through detect/miss, enumerating all joint
    outcomes.
    """
    pattern = set(pattern)
    spec._indices(pattern)
    eff = {d.id: d.efficiency for d in spec.detectors}
    if spec.tree is not None:
        leaves = [(d, 0.5 ** len(ports)) for d, ports in tree_leaf_paths(spec.tree)]
    else:
        leaves = list(zip(spec.ids, spec.routing))
    # per-photon outcomes: (detector or None, probability)
    outcomes = []
    for d, q in leaves:
        outcomes.append((d, q * eff[d]))
        outcomes.append((None, q * (1.0 - eff[d])))
    total = 0.0
    for combo in itertools.product(outcomes, repeat=n):
        clicked = {d for d, _ in combo if d is not None}
        if pattern <= clicked:
            total += math.prod(p for _, p in combo)
    return total


class Branch(NamedTuple):
    weight: float
    state: FockState


@dataclass(frozen=True)
class StateEnsemble:
    """Weighted pure states; weights sum to at most 1 (the rest was discarded)."""

    branches: tuple[Branch, ...]

    def __post_init__(self):
        branches = tuple(Branch(float(w), s) for w, s in self.branches)
        for w, s in branches:
            if w < -1e-15 or w > 1 + 1e-12:
                raise ValueError("branch weights must lie in [0, 1]")
            if w > 0 and not s.normalized:
                raise ValueError("ensemble members must be normalized")
        if sum(w for w, _ in branches) > 1 + 1e-9:
            raise ValueError("ensemble weights exceed 1")
        object.__setattr__(self, "branches", branches)

    @classmethod
    def pure(cls, state: FockState) -> "StateEnsemble":
        return cls((Branch(1.0, state.normalize()),))

    @property
    def total_weight(self) -> float:
        return sum(w for w, _ in self.branches)

    def map(self, fn) -> "StateEnsemble":
        return StateEnsemble(tuple(Branch(w, fn(s)) for w, s in self.branches))

    def __iter__(self):
        return iter(self.branches)

    def __len__(self):
        return len(self.branches)


def _as_ensemble(obj) -> StateEnsemble:
    return obj if isinstance(obj, StateEnsemble) else StateEnsemble.pure(obj)


def _as_modes(detected) -> list[ModeId]:
    if isinstance(detected, (ModeId, str)):
        detected = [detected]
    return [m if isinstance(m, ModeId) else ModeId.parse(m) for m in detected]


def photon_number_distribution(ensemble, detected) -> dict[int, float]:
    """Mixture-weighted distribution of the summed photon number on ``detected``."""
    modes = _as_modes(detected)
    out: dict[int, float] = {}
    for w, s in _as_ensemble(ensemble):
        if w == 0:
            continue
        for key, p in number_distribution(s, modes).items():
            out[sum(key)] = out.get(sum(key), 0.0) + w * p
    return out


def pattern_rate(ensemble, detected, spec: DetectorSpec, pattern: Iterable[str]) -> float:
    """Per-pulse probability that all of ``pattern`` clicks."""
    pattern = tuple(pattern)
    dist = photon_number_distribution(ensemble, detected)
    return float(sum(p * click_probability_given_n(n, spec, pattern) for n, p in dist.items()))


def herald(state: FockState, herald_modes, efficiency: float = 1.0, click: bool = True) -> StateEnsemble:
    """Condition on a threshold trigger detector watching ``herald_modes``.

    Branch ``m`` (exactly ``m`` photons at the trigger) carries weight
    ``P(m) (1 - (1 - eta_t)^m)`` when ``click`` is true and
    ``P(m) (1 - eta_t)^m`` otherwise.
    """
    if not 0.0 <= efficiency <= 1.0:
        raise ValueError("trigger efficiency must lie in [0, 1]")
    modes = _as_modes(herald_modes)
    state = state.normalize()
    branches = []
    for key, p in sorted(number_distribution(state, modes).items()):
        m = sum(key)
        miss = (1.0 - efficiency) ** m
        w = p * ((1.0 - miss) if click else miss)
        if w <= 0:
            continue
        proj = project_occupation(state, modes, key)
        if proj.defined:
            branches.append(Branch(w, proj.state))
    return StateEnsemble(tuple(branches))


def heralded_rate(state: FockState, herald_modes, trigger_efficiency: float, detected,
                  spec: DetectorSpec, pattern: Iterable[str]) -> float:
    """Coincidence rate of the trigger with ``pattern`` on the detected modes."""
    return pattern_rate(herald(state, herald_modes, trigger_efficiency), detected, spec, pattern)


def unheralded_background(state: FockState, herald_modes, trigger_efficiency: float, detected,
                          spec: DetectorSpec, pattern: Iterable[str]) -> float:
    """Rate of ``pattern`` in pulses where the trigger stays dark."""
    ens = herald(state, herald_modes, trigger_efficiency, click=False)
    return pattern_rate(ens, detected, spec, pattern)


def _check_rates(*values):
    for v in values:
        if np.any(np.asarray(v) < 0):
            raise ValueError("rates and probabilities must be non-negative")


def accidental_model(rate_noon, rate_background, p_false_trigger: float):
    """Four-fold rate including uncorrelated trigger clicks."""
    _check_rates(rate_noon, rate_background, p_false_trigger)
    if p_false_trigger > 1:
        raise ValueError("p_false_trigger must lie in [0, 1]")
    return np.asarray(rate_noon) + p_false_trigger * np.asarray(rate_background)


def subtract_accidentals(total, rate_background, p_false_trigger: float):
    """Inverse of :func:`accidental_model`."""
    _check_rates(total, rate_background, p_false_trigger)
    return np.asarray(total) - p_false_trigger * np.asarray(rate_background)


def dephasing_noise(state: FockState, visibility: float, branch_modes) -> StateEnsemble:
    """Mix ``state`` with its copy dephased between branches.

    The dephased copy is ``state`` with a uniformly random phase on
    ``branch_modes``: it is diagonal in the photon number found there. For
    a N00N state on modes (a, b) with ``branch_modes=[b]`` this yields
    ``V|psi><psi| + (1-V)(|N,0><N,0| + |0,N><0,N|)/2``.
    """
    if not 0.0 <= visibility <= 1.0:
        raise ValueError("visibility must lie in [0, 1]")
    modes = _as_modes(branch_modes)
    state = state.normalize()
    branches = [Branch(visibility, state)] if visibility > 0 else []
    if visibility < 1:
        idx = [state.index(m) for m in modes]
        groups: dict[int, dict] = {}
        for occ, a in state.terms.items():
            groups.setdefault(sum(occ[i] for i in idx), {})[occ] = a
        for _, terms in sorted(groups.items()):
            part = FockState(state.modes, terms)
            branches.append(Branch((1 - visibility) * part.norm_squared, part.normalize()))
    return StateEnsemble(tuple(branches))


def threefold_reference(chi, eta):
    """Closed-form unheralded three-fold curve (unnormalized).

    ``eta^3 [4 sin^2(3chi/2) + 8 (sin chi + sin 2chi)^2 + (2 - eta)(1 + 2 cos chi)^4]``
    """
    chi = np.asarray(chi, dtype=float)
    return eta ** 3 * (4 * np.sin(1.5 * chi) ** 2
                       + 8 * (np.sin(chi) + np.sin(2 * chi)) ** 2
                       + (2 - eta) * (1 + 2 * np.cos(chi)) ** 4)


def routing_ratio(spec: DetectorSpec, pattern=None) -> float:
    """``P(all click | 4) / P(all click | 3)``, computed with the brute-force oracle.

    The closed-form three-fold curve needs this to equal ``2 (2 - eta)``.
    """
    pattern = spec.ids if pattern is None else pattern
    p3 = enumerate_click_probability(3, spec, pattern)
    p4 = enumerate_click_probability(4, spec, pattern)
    return p4 / p3


def reproduces_threefold_shape(spec: DetectorSpec, tol: float = 1e-12) -> bool:
    """True when every detector has the same efficiency and the four- to
    three-photon click ratio is ``2 (2 - eta)``."""
    effs = {d.efficiency for d in spec.detectors}
    if len(effs) != 1 or len(spec.detectors) != 3:
        return False
    eta = effs.pop()
    if eta == 0:
        return False
    return abs(routing_ratio(spec) - 2 * (2 - eta)) < tol
