"""Multimode bosonic states as finite superpositions of occupation-number kets.

A :class:`FockState` stores ``{occupation tuple: amplitude}`` over an ordered,
declared tuple of :class:`ModeId`.  Linear optics acts through
:class:`ModeTransform`, a map of creation operators
``a_i^dag -> sum_j M[j, i] a_j^dag``.  Transition amplitudes between
occupation patterns are matrix permanents, evaluated by the kernel in
:mod:`noonsim._kernels`.
"""
from __future__ import annotations

import cmath
import itertools
import json
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from ._kernels import permanent

PRUNE_TOL = 1e-14
NORM_TOL = 1e-10
ISOMETRY_TOL = 1e-12

POLARIZATIONS = ("H", "V")


class ModeError(ValueError):
    """A mode was used that is not declared, or a new mode collides with a declared one."""


class NonIsometricTransformError(ValueError):
    """A transform matrix failed its unitarity / isometry check."""


@dataclass(frozen=True, order=True)
class ModeId:
    path: str
    pol: str = "H"

    def __post_init__(self):
        if self.pol not in POLARIZATIONS:
            raise ValueError(f"polarization must be H or V, got {self.pol!r}")
        object.__setattr__(self, "path", str(self.path))

    @classmethod
    def parse(cls, text: str) -> "ModeId":
        """``"2H"`` -> ``ModeId("2", "H")``; ``"loss0:V"`` is also accepted."""
        text = text.strip()
        if ":" in text:
            path, pol = text.rsplit(":", 1)
        else:
            path, pol = text[:-1], text[-1:]
        if not path:
            raise ValueError(f"cannot parse mode {text!r}")
        return cls(path, pol)

    def __str__(self):
        return f"{self.path}:{self.pol}"


def modes_for(*paths: str) -> tuple[ModeId, ...]:
    """Both polarizations of each path, in order."""
    return tuple(ModeId(p, pol) for p in paths for pol in POLARIZATIONS)


def _as_mode(m) -> ModeId:
    if isinstance(m, ModeId):
        return m
    if isinstance(m, tuple):
        return ModeId(*m)
    return ModeId.parse(m)


def _prune(terms: Mapping, tol: float) -> dict:
    return {tuple(int(n) for n in k): complex(v) for k, v in terms.items() if abs(v) > tol}


@dataclass(frozen=True)
class FockState:
    """Immutable superposition of occupation states over ``modes``."""

    modes: tuple[ModeId, ...]
    terms: Mapping[tuple[int, ...], complex] = field(default_factory=dict)
    prune_tol: float = PRUNE_TOL

    def __post_init__(self):
        modes = tuple(_as_mode(m) for m in self.modes)
        if not modes:
            raise ModeError("a state needs at least one declared mode")
        if len(set(modes)) != len(modes):
            raise ModeError("duplicate modes in modeset")
        for occ in self.terms:
            if len(occ) != len(modes) or any(n < 0 for n in occ):
                raise ValueError(f"bad occupation {occ} for {len(modes)} modes")
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "terms", MappingProxyType(_prune(self.terms, self.prune_tol)))

    # -- basic quantities -------------------------------------------------
    @property
    def norm_squared(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.terms.values()))

    @property
    def norm(self) -> float:
        return math.sqrt(self.norm_squared)

    @property
    def normalized(self) -> bool:
        return abs(self.norm - 1.0) < NORM_TOL

    def index(self, mode) -> int:
        mode = _as_mode(mode)
        try:
            return self.modes.index(mode)
        except ValueError:
            raise ModeError(f"mode {mode} is not declared in {[str(m) for m in self.modes]}") from None

    def photon_numbers(self) -> set[int]:
        return {sum(occ) for occ in self.terms}

    def amplitude(self, occupation: Mapping) -> complex:
        """Amplitude of the ket given as ``{mode: count}`` (absent modes are empty)."""
        return self.terms.get(self.occupation(occupation), 0j)

    def occupation(self, counts: Mapping) -> tuple[int, ...]:
        occ = [0] * len(self.modes)
        for m, n in counts.items():
            occ[self.index(m)] = int(n)
        return tuple(occ)

    def scaled(self, factor: complex) -> "FockState":
        return FockState(self.modes, {k: factor * v for k, v in self.terms.items()}, self.prune_tol)

    def normalize(self) -> "FockState":
        n = self.norm
        if n == 0:
            raise ZeroDivisionError("cannot normalize the zero vector")
        return self.scaled(1.0 / n)

    def reorder(self, modes: Sequence) -> "FockState":
        """Same state expressed over a permutation of its modeset."""
        modes = tuple(_as_mode(m) for m in modes)
        if set(modes) != set(self.modes) or len(modes) != len(self.modes):
            raise ModeError("reorder needs a permutation of the modeset")
        perm = [self.index(m) for m in modes]
        return FockState(modes, {tuple(occ[i] for i in perm): a for occ, a in self.terms.items()},
                         self.prune_tol)

    def extend(self, new_modes: Iterable) -> "FockState":
        """Append empty modes to the modeset."""
        new_modes = tuple(_as_mode(m) for m in new_modes)
        clash = set(new_modes) & set(self.modes)
        if clash:
            raise ModeError(f"modes already declared: {sorted(map(str, clash))}")
        pad = (0,) * len(new_modes)
        return FockState(self.modes + new_modes, {occ + pad: a for occ, a in self.terms.items()},
                         self.prune_tol)

    def with_modes(self, modes: Iterable) -> "FockState":
        """Declare any of ``modes`` not yet in the modeset (as empty modes)."""
        return self.extend(m for m in map(_as_mode, modes) if m not in self.modes)

    def __add__(self, other: "FockState") -> "FockState":
        other = _aligned(self, other)
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms.get(k, 0j) + v
        return FockState(self.modes, terms, self.prune_tol)

    def __sub__(self, other: "FockState") -> "FockState":
        return self + other.scaled(-1)

    def __repr__(self):
        parts = []
        for occ, a in sorted(self.terms.items(), key=lambda kv: -abs(kv[1])):
            ket = ",".join(f"{n}" for n in occ)
            parts.append(f"({a.real:+.6g}{a.imag:+.6g}j)|{ket}>")
        names = ",".join(map(str, self.modes))
        return f"FockState[{names}](" + " ".join(parts or ["0"]) + ")"

    # -- serialization -----------------------------------------------------
    def to_json(self) -> str:
        """Debug serialization: ``{"modes": [...], "terms": [{occupation, re, im}]}``."""
        rows = [
            {"occupation": list(occ), "re": a.real, "im": a.imag}
            for occ, a in sorted(self.terms.items())
        ]
        return json.dumps({"modes": [str(m) for m in self.modes], "terms": rows}, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "FockState":
        data = json.loads(text)
        modes = tuple(ModeId.parse(m) for m in data["modes"])
        terms = {tuple(r["occupation"]): complex(r["re"], r["im"]) for r in data["terms"]}
        return cls(modes, terms)


def _aligned(x: FockState, y: FockState) -> FockState:
    if x.modes == y.modes:
        return y
    if set(x.modes) != set(y.modes):
        raise ModeError("states live on different modesets")
    return y.reorder(x.modes)


def vacuum(modes: Iterable) -> FockState:
    modes = tuple(_as_mode(m) for m in modes)
    return FockState(modes, {(0,) * len(modes): 1.0 + 0j})


def fock(modes: Iterable, counts: Mapping, amplitude: complex = 1.0) -> FockState:
    """Single normalized ket ``|counts>`` (times ``amplitude``)."""
    v = vacuum(modes)
    return FockState(v.modes, {v.occupation(counts): complex(amplitude)})


def superpose(*pairs: tuple[complex, FockState]) -> FockState:
    out = None
    for c, s in pairs:
        s = s.scaled(c)
        out = s if out is None else out + s
    return out


# -- creation-operator polynomials -------------------------------------------

@dataclass(frozen=True)
class CreationMonomial:
    """``coefficient * prod_m (a_m^dag)^exponents[m]``."""

    exponents: Mapping[ModeId, int]
    coefficient: complex = 1.0

    def __post_init__(self):
        exps = {}
        for m, n in dict(self.exponents).items():
            if n < 0:
                raise ValueError("exponents must be non-negative")
            if n:
                exps[_as_mode(m)] = int(n)
        object.__setattr__(self, "exponents", MappingProxyType(exps))
        object.__setattr__(self, "coefficient", complex(self.coefficient))

    @property
    def degree(self) -> int:
        return sum(self.exponents.values())


def apply_monomial(poly, state: FockState) -> FockState:
    """Apply a creation-operator polynomial (monomial or list of monomials).

    Uses ``a^dag |n> = sqrt(n + 1) |n + 1>`` on every term.
    """
    if isinstance(poly, CreationMonomial):
        poly = [poly]
    out: dict[tuple[int, ...], complex] = {}
    for mono in poly:
        idx = [(state.index(m), n) for m, n in mono.exponents.items()]
        for occ, amp in state.terms.items():
            new = list(occ)
            factor = mono.coefficient * amp
            for i, n in idx:
                # sqrt((k+n)! / k!)
                factor *= math.sqrt(math.prod(range(new[i] + 1, new[i] + n + 1)))
                new[i] += n
            key = tuple(new)
            out[key] = out.get(key, 0j) + factor
    return FockState(state.modes, out, state.prune_tol)


def monomials_to_state(modes: Iterable, poly: Sequence[CreationMonomial]) -> FockState:
    """Polynomial applied to the vacuum."""
    return apply_monomial(poly, vacuum(modes))


def state_to_monomials(state: FockState) -> dict[tuple[int, ...], complex]:
    """Coefficients of the creation polynomial P with ``state = P |0>``.

    Inverse of :func:`monomials_to_state`: divides by ``sqrt(prod n!)``.
    """
    return {
        occ: a / math.sqrt(math.prod(math.factorial(n) for n in occ))
        for occ, a in state.terms.items()
    }


def monomial_coefficient(state: FockState, exponents: Mapping) -> complex:
    occ = state.occupation(exponents)
    return state.terms.get(occ, 0j) / math.sqrt(math.prod(math.factorial(n) for n in occ))


# -- transforms --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ModeTransform:
    """Linear map of creation operators, ``a_in[i]^dag -> sum_j matrix[j, i] a_out[j]^dag``.

    ``outputs`` always starts with ``inputs`` in the same order; any further
    outputs are fresh loss modes and make the transform an isometry.
    """

    inputs: tuple[ModeId, ...]
    outputs: tuple[ModeId, ...]
    matrix: np.ndarray
    name: str = ""

    def __post_init__(self):
        ins = tuple(_as_mode(m) for m in self.inputs)
        outs = tuple(_as_mode(m) for m in self.outputs)
        m = np.array(self.matrix, dtype=complex)
        if len(set(ins)) != len(ins) or len(set(outs)) != len(outs):
            raise ModeError("duplicate modes in transform")
        if outs[: len(ins)] != ins:
            raise ModeError("transform outputs must begin with its inputs")
        if m.shape != (len(outs), len(ins)):
            raise ValueError(f"matrix shape {m.shape} does not match {len(outs)}x{len(ins)}")
        gram = m.conj().T @ m
        err = np.max(np.abs(gram - np.eye(len(ins)))) if len(ins) else 0.0
        if err > ISOMETRY_TOL:
            raise NonIsometricTransformError(
                f"{self.name or 'transform'}: columns not orthonormal (max error {err:.3g})")
        m.setflags(write=False)
        object.__setattr__(self, "inputs", ins)
        object.__setattr__(self, "outputs", outs)
        object.__setattr__(self, "matrix", m)

    @property
    def kind(self) -> str:
        return "unitary" if len(self.outputs) == len(self.inputs) else "isometry"

    @property
    def loss_modes(self) -> tuple[ModeId, ...]:
        return self.outputs[len(self.inputs):]

    @classmethod
    def from_images(cls, images: Mapping, name: str = "") -> "ModeTransform":
        """Build from ``{input mode: {output mode: coefficient}}``.

        Output modes that are not inputs become loss modes.
        """
        ins = tuple(_as_mode(m) for m in images)
        extra: list[ModeId] = []
        for img in images.values():
            for m in img:
                m = _as_mode(m)
                if m not in ins and m not in extra:
                    extra.append(m)
        outs = ins + tuple(extra)
        pos = {m: k for k, m in enumerate(outs)}
        mat = np.zeros((len(outs), len(ins)), dtype=complex)
        for i, img in enumerate(images.values()):
            for m, c in img.items():
                mat[pos[_as_mode(m)], i] += c
        return cls(ins, outs, mat, name)

    @classmethod
    def identity(cls, modes: Iterable) -> "ModeTransform":
        modes = tuple(_as_mode(m) for m in modes)
        return cls(modes, modes, np.eye(len(modes)), "identity")

    def embed(self, modes: Sequence[ModeId]) -> "ModeTransform":
        """Extend to act as the identity on every other mode of ``modes``."""
        modes = tuple(_as_mode(m) for m in modes)
        missing = [m for m in self.inputs if m not in modes]
        if missing:
            raise ModeError(f"undeclared modes: {[str(m) for m in missing]}")
        clash = [m for m in self.loss_modes if m in modes]
        if clash:
            raise ModeError(f"loss mode collision: {[str(m) for m in clash]}")
        outs = modes + self.loss_modes
        pos = {m: k for k, m in enumerate(outs)}
        mat = np.zeros((len(outs), len(modes)), dtype=complex)
        local = {m: i for i, m in enumerate(self.inputs)}
        for c, m in enumerate(modes):
            if m in local:
                i = local[m]
                for j, o in enumerate(self.outputs):
                    mat[pos[o], c] = self.matrix[j, i]
            else:
                mat[pos[m], c] = 1.0
        return ModeTransform(modes, outs, mat, self.name)

    def inverse(self) -> "ModeTransform":
        if self.kind != "unitary":
            raise NonIsometricTransformError("only unitary transforms are invertible")
        return ModeTransform(self.inputs, self.inputs, self.matrix.conj().T, f"inverse({self.name})")

    def then(self, other: "ModeTransform") -> "ModeTransform":
        """``other`` applied after ``self``."""
        return compose(other, self)


def compose(second: ModeTransform, first: ModeTransform) -> ModeTransform:
    """``second o first``: first acts, then second."""
    base = list(first.inputs)
    for m in second.inputs:
        if m not in first.outputs and m not in base:
            base.append(m)
    e1 = first.embed(tuple(base))
    e2 = second.embed(e1.outputs)
    name = f"{second.name}*{first.name}" if first.name or second.name else ""
    return ModeTransform(e1.inputs, e2.outputs, e2.matrix @ e1.matrix, name)


def _compositions(total: int, slots: int):
    """All tuples of ``slots`` non-negative ints summing to ``total``."""
    if slots == 0:
        if total == 0:
            yield ()
        return
    for cut in itertools.combinations(range(total + slots - 1), slots - 1):
        prev = -1
        out = []
        for c in cut:
            out.append(c - prev - 1)
            prev = c
        out.append(total + slots - 1 - prev - 1)
        yield tuple(out)


def transition_amplitudes(matrix: np.ndarray, n_in: Sequence[int]) -> dict[tuple[int, ...], complex]:
    """Output occupation amplitudes for the input ket ``|n_in>``.

    ``<e| U |n> = Per(U[e, n]) / sqrt(prod e! prod n!)``, with rows repeated
    ``e_j`` times and columns ``n_i`` times.
    """
    n_in = tuple(n_in)
    total = sum(n_in)
    n_out = matrix.shape[0]
    if total == 0:
        return {(0,) * n_out: 1.0 + 0j}
    cols = [i for i, n in enumerate(n_in) for _ in range(n)]
    used = [i for i, n in enumerate(n_in) if n]
    live = [j for j in range(n_out) if np.any(np.abs(matrix[j, used]) > 0)]
    sub = matrix[:, cols]
    norm_in = math.prod(math.factorial(n) for n in n_in)
    out = {}
    for comp in _compositions(total, len(live)):
        rows = [j for j, e in zip(live, comp) for _ in range(e)]
        amp = permanent(sub[rows, :])
        if amp == 0:
            continue
        norm = math.sqrt(norm_in * math.prod(math.factorial(e) for e in comp))
        e_full = [0] * n_out
        for j, e in zip(live, comp):
            e_full[j] = e
        out[tuple(e_full)] = amp / norm
    return out


def apply_transform(transform: ModeTransform, state: FockState) -> FockState:
    """Evolve ``state`` through ``transform``.

    Modes not among the transform inputs are left alone; loss modes are
    appended to the modeset.
    """
    missing = [m for m in transform.inputs if m not in state.modes]
    if missing:
        raise ModeError(f"undeclared modes: {[str(m) for m in missing]}")
    clash = [m for m in transform.loss_modes if m in state.modes]
    if clash:
        raise ModeError(f"loss mode collision: {[str(m) for m in clash]}")
    new_modes = state.modes + transform.loss_modes
    local = [state.index(m) for m in transform.inputs]
    out_pos = local + list(range(len(state.modes), len(new_modes)))
    pad = (0,) * len(transform.loss_modes)

    cache: dict[tuple[int, ...], dict] = {}
    out: dict[tuple[int, ...], complex] = {}
    for occ, amp in state.terms.items():
        n_local = tuple(occ[i] for i in local)
        images = cache.get(n_local)
        if images is None:
            images = cache[n_local] = transition_amplitudes(transform.matrix, n_local)
        rest = list(occ) + list(pad)
        for i in local:
            rest[i] = 0
        for e, c in images.items():
            new = list(rest)
            for p, k in zip(out_pos, e):
                new[p] += k
            key = tuple(new)
            out[key] = out.get(key, 0j) + amp * c
    return FockState(new_modes, out, state.prune_tol)


# -- measurement-type functions ----------------------------------------------

def inner_product(x: FockState, y: FockState) -> complex:
    """``<x|y>``, conjugate-linear in ``x``."""
    y = _aligned(x, y)
    small, large = (x.terms, y.terms) if len(x.terms) <= len(y.terms) else (y.terms, x.terms)
    total = 0j
    for occ in small:
        if occ in large:
            total += x.terms[occ].conjugate() * y.terms[occ]
    return total


def fidelity(x: FockState, y: FockState) -> float:
    """``|<x|y>| / (|x| |y|)``: overlap modulo global phase."""
    return abs(inner_product(x, y)) / (x.norm * y.norm)


def phase_aligned(x: FockState, y: FockState) -> FockState:
    """``y`` times the global phase that best matches it to ``x``."""
    ip = inner_product(y, x)
    if ip == 0:
        return _aligned(x, y)
    return _aligned(x, y).scaled(ip / abs(ip))


def max_amplitude_difference(x: FockState, y: FockState, modulo_phase: bool = True) -> float:
    if modulo_phase:
        y = phase_aligned(x, y)
    y = _aligned(x, y)
    keys = set(x.terms) | set(y.terms)
    return max((abs(x.terms.get(k, 0j) - y.terms.get(k, 0j)) for k in keys), default=0.0)


class Projection(NamedTuple):
    probability: float
    state: FockState
    defined: bool


def project_occupation(state: FockState, modes: Sequence, counts: Sequence[int],
                       undefined_below: float = PRUNE_TOL) -> Projection:
    """Project onto exact photon numbers ``counts`` on ``modes``.

    ``probability`` is relative to the squared norm of ``state``. When it
    falls below ``undefined_below`` the unnormalized component is returned
    with ``defined=False``.
    """
    idx = [state.index(m) for m in modes]
    counts = tuple(int(c) for c in counts)
    if len(counts) != len(idx):
        raise ValueError("one count per projected mode is required")
    kept = {occ: a for occ, a in state.terms.items() if tuple(occ[i] for i in idx) == counts}
    part = FockState(state.modes, kept, state.prune_tol)
    total = state.norm_squared
    p = part.norm_squared / total if total > 0 else 0.0
    if p < undefined_below:
        return Projection(p, part, False)
    return Projection(p, part.scaled(1.0 / part.norm), True)


def number_distribution(state: FockState, modes: Sequence) -> dict[tuple[int, ...], float]:
    """Joint photon-number distribution on ``modes`` (diagonal of the reduced state).

    Probabilities are normalized by the state's squared norm.
    """
    idx = [state.index(m) for m in modes]
    total = state.norm_squared
    out: dict[tuple[int, ...], float] = {}
    for occ, a in state.terms.items():
        key = tuple(occ[i] for i in idx)
        out[key] = out.get(key, 0.0) + abs(a) ** 2 / total
    return out


def total_number_distribution(state: FockState, modes: Sequence) -> dict[int, float]:
    """Distribution of the summed photon number over ``modes``."""
    out: dict[int, float] = {}
    for key, p in number_distribution(state, modes).items():
        n = sum(key)
        out[n] = out.get(n, 0.0) + p
    return out


def relative_phase(a: complex, b: complex) -> float:
    """``arg(b / a)`` wrapped to (-pi, pi]."""
    return cmath.phase(b / a)
