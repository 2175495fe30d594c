"""Mode transforms for the elements on the optical table.

Conventions (all angles in radians, fast axis measured from H):

* wave plate at angle t: ``R(-t) diag(1, e^{i*retardance}) R(t)``; for the half-wave
  plate this is ``[[cos 2t, sin 2t], [sin 2t, -cos 2t]]`` with no extra phase.
* PPBS: H is transmitted; V goes to ``+r a_refl + t a_trans``.

This set reproduces the textbook four-photon PPBS output and the circular
three-photon N00N state exactly; ``tests/test_elements.py`` pins it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .fock import ModeId, ModeTransform, compose

ELEMENT_KINDS = ("HWP", "QWP", "PBS", "PPBS", "POLARIZER", "PHASE", "MODE_CONVERTER")


def _waveplate_jones(theta: float, retardance: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    rot = np.array([[c, s], [-s, c]])
    return rot.T @ np.diag([1.0, np.exp(1j * retardance)]) @ rot


def _polarization_transform(path: str, jones: np.ndarray, name: str) -> ModeTransform:
    h, v = ModeId(path, "H"), ModeId(path, "V")
    return ModeTransform((h, v), (h, v), jones, name)


def hwp(path: str, theta: float) -> ModeTransform:
    """Half-wave plate on ``path`` with fast axis at ``theta``."""
    c, s = math.cos(2 * theta), math.sin(2 * theta)
    return _polarization_transform(path, np.array([[c, s], [s, -c]]), f"HWP({path})")


def qwp(path: str, theta: float) -> ModeTransform:
    """Quarter-wave plate on ``path`` with fast axis at ``theta``."""
    return _polarization_transform(path, _waveplate_jones(theta, math.pi / 2), f"QWP({path})")


def phase(path: str, pol: str, phi: float) -> ModeTransform:
    m = ModeId(path, pol)
    return ModeTransform((m,), (m,), np.array([[np.exp(1j * phi)]]), f"PHASE({m})")


def ppbs(path_in: str, path_refl: str, path_trans: str, r_v: float, r_h: float = 0.0) -> ModeTransform:
    """Partially polarizing beam splitter.

    Light enters on ``path_in``; the unused input port is ``path_refl``'s
    vacuum.  Amplitude reflectivities ``r_v`` (V) and ``r_h`` (H, default 0:
    H fully transmitted). When ``path_in`` differs from ``path_trans`` the
    vacuum modes of ``path_trans`` are relabelled to ``path_in`` so the whole
    map stays unitary.
    """
    for r in (r_v, r_h):
        if not 0.0 <= r <= 1.0:
            raise ValueError(f"amplitude reflectivity must lie in [0, 1], got {r}")
    if path_refl in (path_in, path_trans):
        raise ValueError("reflected path must differ from the input and transmitted paths")
    images = {}
    for pol, r in (("H", r_h), ("V", r_v)):
        t = math.sqrt(1.0 - r * r)
        refl, trans = ModeId(path_refl, pol), ModeId(path_trans, pol)
        images[ModeId(path_in, pol)] = {refl: r, trans: t}
        images[refl] = {refl: t, trans: -r}
        if path_in != path_trans:
            images[trans] = {ModeId(path_in, pol): 1.0}
    return _clean(ModeTransform.from_images(images, f"PPBS({path_in})"))


def pbs(path_in: str, path_refl: str, path_trans: str) -> ModeTransform:
    """Polarizing beam splitter: H transmitted, V reflected."""
    return ppbs(path_in, path_refl, path_trans, r_v=1.0, r_h=0.0)


def polarizer(path: str, pass_axis: str = "H", loss_path: str | None = None) -> ModeTransform:
    """Ideal polarizer; the blocked polarization is routed into a fresh loss mode."""
    if pass_axis not in ("H", "V"):
        raise ValueError("pass axis must be H or V")
    blocked = "V" if pass_axis == "H" else "H"
    loss = ModeId(loss_path or f"{path}.loss", blocked)
    return ModeTransform.from_images(
        {ModeId(path, pass_axis): {ModeId(path, pass_axis): 1.0},
         ModeId(path, blocked): {loss: 1.0}},
        f"POL({path})",
    )


def mode_converter(path: str, path_a: str, path_b: str, phase_b: float = 0.0) -> ModeTransform:
    """Polarization-to-path converter: ``(path,H) -> (a,H)``, ``(path,V) -> e^{i phase_b} (b,H)``.

    ``phase_b`` stands for the quartz-plate compensation between the arms.
    The vacuum inputs ``(a,H)`` and ``(b,H)`` are routed back to ``path`` so the map is unitary.
    """
    if len({path, path_a, path_b}) != 3:
        raise ValueError("mode converter needs three distinct paths")
    src_h, src_v = ModeId(path, "H"), ModeId(path, "V")
    a, b = ModeId(path_a, "H"), ModeId(path_b, "H")
    w = np.exp(1j * phase_b)
    return ModeTransform.from_images(
        {src_h: {a: 1.0}, src_v: {b: w}, a: {src_h: 1.0}, b: {src_v: np.conj(w)}},
        f"CONVERTER({path})",
    )


def geometry_spacing(walk_off: float, theta: float) -> float:
    """Arm spacing ``2 L sin(theta)`` of the birefringent-prism converter."""
    if walk_off <= 0:
        raise ValueError("walk-off length must be positive")
    return 2.0 * walk_off * math.sin(theta)


def _clean(t: ModeTransform) -> ModeTransform:
    # drop exact-zero rounding noise such as sqrt(1 - 1**2) residue
    m = np.where(np.abs(t.matrix) < 1e-15, 0.0, t.matrix)
    return ModeTransform(t.inputs, t.outputs, m, t.name)


@dataclass(frozen=True)
class ElementSpec:
    """One element of an optical chain, as written in a config file."""

    kind: str
    path: str = ""
    angle: float = 0.0
    pol: str = "H"
    path_refl: str = ""
    path_trans: str = ""
    path_a: str = ""
    path_b: str = ""
    r_v: float = 0.0
    r_h: float = 0.0
    loss_path: str = ""
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        kind = self.kind.upper()
        if kind not in ELEMENT_KINDS:
            raise ValueError(f"unknown element kind {self.kind!r}; expected one of {ELEMENT_KINDS}")
        object.__setattr__(self, "kind", kind)
        if kind == "PPBS" and not 0.0 <= self.r_v <= 1.0:
            raise ValueError("PPBS r_v must lie in [0, 1]")

    def build(self) -> ModeTransform:
        k = self.kind
        if k == "HWP":
            return hwp(self.path, self.angle)
        if k == "QWP":
            return qwp(self.path, self.angle)
        if k == "PHASE":
            return phase(self.path, self.pol, self.angle)
        if k == "PPBS":
            return ppbs(self.path, self.path_refl, self.path_trans, self.r_v, self.r_h)
        if k == "PBS":
            return pbs(self.path, self.path_refl, self.path_trans)
        if k == "POLARIZER":
            return polarizer(self.path, self.pol, self.loss_path or None)
        return mode_converter(self.path, self.path_a, self.path_b, self.angle)


def chain(elements: Iterable) -> ModeTransform:
    """Compose elements (``ElementSpec`` or ``ModeTransform``) in beam order."""
    out = None
    for el in elements:
        t = el.build() if isinstance(el, ElementSpec) else el
        out = t if out is None else compose(t, out)
    if out is None:
        raise ValueError("empty element chain")
    return out


def declared_paths(transforms: Sequence[ModeTransform]) -> list[str]:
    seen: list[str] = []
    for t in transforms:
        for m in t.outputs:
            if m.path not in seen:
                seen.append(m.path)
    return seen
