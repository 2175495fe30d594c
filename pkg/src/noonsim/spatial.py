"""Double-slit fringes at the focus of a lens, seen through a single-mode fiber.

Both collimated Gaussian beams focus onto the same spot; arm ``a`` (``b``)
arrives tilted so its focal field carries ``exp(+i k x)`` (``exp(-i k x)``)
with ``k = pi d / (lambda f)``.  The scanning fiber detects the coherent
overlap of that field with its own Gaussian mode.

Lengths are in meters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from math import comb

import numpy as np


@dataclass(frozen=True)
class ExperimentGeometry:
    """Spacing ``d`` between arms, collimated 1/e^2 beam diameter, wavelength,
    lens focal length and fiber mode-field diameter. ``mfd=0`` selects an ideal
    point detector."""

    d: float = 2.2e-3
    # reproduces the measured 10.8 um single-photon profile; see README
    beam_diameter: float = 1.05e-3
    wavelength: float = 780e-9
    focal_length: float = 15e-3
    mfd: float = 5.6e-6

    def __post_init__(self):
        for name in ("beam_diameter", "wavelength", "focal_length"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.d < 0 or self.mfd < 0:
            raise ValueError("d and mfd must be non-negative")

    def replace(self, **changes) -> "ExperimentGeometry":
        return replace(self, **changes)

    @property
    def focal_radius(self) -> float:
        """1/e field radius of one beam's focal spot, ``lambda f / (pi W)``."""
        return self.wavelength * self.focal_length / (math.pi * self.beam_diameter / 2)

    @property
    def mode_radius(self) -> float:
        return self.mfd / 2

    @property
    def wavenumber(self) -> float:
        """Transverse phase gradient of each arm at the focus."""
        return math.pi * self.d / (self.wavelength * self.focal_length)

    def fringe_period(self, n: int = 1) -> float:
        """Focal-plane fringe period ``lambda f / (N d)``."""
        return self.wavelength * self.focal_length / (n * self.d)

    @property
    def period_stretch(self) -> float:
        """Fiber-coupled period divided by the focal-plane period."""
        a, b = self.focal_radius ** 2, self.mode_radius ** 2
        return (a + b) / a

    def coupled_fringe_period(self, n: int = 1) -> float:
        return self.fringe_period(n) * self.period_stretch

    @property
    def profile_width(self) -> float:
        """1/e half-width ``w0`` of the single-photon count profile, ``exp[-(x/w0)^2]``."""
        return math.sqrt((self.focal_radius ** 2 + self.mode_radius ** 2) / 2)


def _sign(arm: str) -> int:
    if arm == "a":
        return 1
    if arm == "b":
        return -1
    raise ValueError(f"arm must be 'a' or 'b', got {arm!r}")


def focal_field(x, geometry: ExperimentGeometry, arm: str):
    """Normalized 1D focal-plane field of one arm."""
    x = np.asarray(x, dtype=float)
    w = geometry.focal_radius
    g = (2 / (math.pi * w * w)) ** 0.25 * np.exp(-(x / w) ** 2)
    return g * np.exp(1j * _sign(arm) * geometry.wavenumber * x)


def fiber_overlap(x, geometry: ExperimentGeometry, arm: str):
    """Amplitude for one arm's photon to couple into the fiber centered at ``x``.

    Closed-form overlap of the tilted focal Gaussian with the fiber's
    Gaussian mode, both normalized in 2D (the y overlap is the constant
    mode-matching factor). ``|A|^2`` is the coupling efficiency.
    """
    x = np.asarray(x, dtype=float)
    if geometry.mfd == 0:
        # point detector: field samples, scaled so |A_a|^2 + |A_b|^2 <= 1
        w = geometry.focal_radius
        return np.exp(-(x / w) ** 2) * np.exp(1j * _sign(arm) * geometry.wavenumber * x) / math.sqrt(2)
    a, b = geometry.focal_radius ** 2, geometry.mode_radius ** 2
    k = geometry.wavenumber
    match = 2 * math.sqrt(a * b) / (a + b)  # per transverse axis, amplitude squared
    amp = match * np.exp(-x * x / (a + b) - k * k * a * b / (4 * (a + b)))
    return amp * np.exp(1j * _sign(arm) * k * x * a / (a + b))


def noon_spatial_rate(x, geometry: ExperimentGeometry, n: int, phase: float = 0.0,
                      visibility: float = 1.0):
    """Probability that all ``n`` photons of ``(|n,0> + e^{i phase}|0,n>)/sqrt(2)`` enter the fiber.

    ``visibility`` < 1 mixes in the dephased state.
    """
    if n < 1:
        raise ValueError("N must be at least 1")
    aa = fiber_overlap(x, geometry, "a") ** n
    ab = fiber_overlap(x, geometry, "b") ** n
    coherent = np.abs(aa + np.exp(1j * phase) * ab) ** 2
    incoherent = np.abs(aa) ** 2 + np.abs(ab) ** 2
    return 0.5 * (visibility * coherent + (1 - visibility) * incoherent)


def profile_rate(x, geometry: ExperimentGeometry, n: int, open_arm: str = "a"):
    """Same state with the other arm blocked: ``|A_open|^{2n} / 2``."""
    if n < 1:
        raise ValueError("N must be at least 1")
    return 0.5 * np.abs(fiber_overlap(x, geometry, open_arm)) ** (2 * n)


def classical_visibility_bound(n: int, samples: int | None = None) -> float:
    """Visibility of the ``n``-th harmonic of ``(1 + cos phi)^n`` relative to its mean.

    Fourier coefficients come from an FFT on a grid fine enough to be exact
    for this trigonometric polynomial.
    """
    if n < 1:
        raise ValueError("N must be at least 1")
    m = samples or 4 * n + 4
    phi = 2 * np.pi * np.arange(m) / m
    coeffs = np.fft.rfft((1 + np.cos(phi)) ** n) / m
    return float(2 * abs(coeffs[n]) / abs(coeffs[0]))


def classical_visibility_closed_form(n: int) -> float:
    """``2 / C(2n, n)``."""
    return 2 / comb(2 * n, n)


def spatial_scan_table(x, geometry: ExperimentGeometry, phase: float = 0.0, visibility: float = 1.0):
    """Expected-rate columns for the spatial CSV, keyed by column name."""
    x = np.asarray(x, dtype=float)
    return {
        "x_um": x * 1e6,
        "rate_N1": noon_spatial_rate(x, geometry, 1, phase, 1.0),
        "rate_N3": noon_spatial_rate(x, geometry, 3, phase, visibility),
        "profile_N1": profile_rate(x, geometry, 1),
        "profile_N3": profile_rate(x, geometry, 3),
    }
