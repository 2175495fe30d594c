"""Weighted least-squares fits of fringes and beam profiles.

Counts are weighted as Poisson data: a first pass uses ``sigma^2 = max(count, 1)``,
then the weights are refined to ``max(model, 1)``.
Uncertainties are 1-sigma from the unscaled covariance ``(J^T W J)^-1``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.optimize import least_squares

from .records import ScanRecord
from .spatial import classical_visibility_bound

MAX_NFEV = 4000
START_NFEV = 200  # per exploratory start; the winner is polished with MAX_NFEV


class FitWarning(UserWarning):
    pass


def _data(source, y=None, use: str = "counts"):
    if isinstance(source, ScanRecord):
        x = source.settings
        if use == "counts":
            y = source.sampled_counts.astype(float)
        elif use == "expected":
            # expected counts, so Poisson weights keep their meaning
            y = source.expected_counts
        else:
            raise ValueError("use must be 'counts' or 'expected'")
    else:
        x = source
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1D arrays of equal length")
    order = np.argsort(x)
    return x[order], y[order]


def poisson_sigma(y) -> np.ndarray:
    return np.sqrt(np.maximum(y, 1.0))


def _reweighted(res, resid, jac, model, sn, y_scale, rounds):
    """Refit with ``sigma^2 = max(model, 1)``, updating ``sn`` in place."""
    for _ in range(rounds):
        sn[:] = poisson_sigma(model(res.x) * y_scale) / y_scale
        try:
            new = least_squares(resid, res.x, jac=jac, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                                max_nfev=MAX_NFEV)
        except (ValueError, FloatingPointError):
            break
        if not np.all(np.isfinite(new.x)):
            break
        done = np.allclose(new.x, res.x, rtol=1e-10, atol=1e-12)
        res = new
        if done:
            break
    return res


def _covariance(jac):
    jtj = jac.T @ jac
    try:
        cov = np.linalg.inv(jtj)
    except np.linalg.LinAlgError:
        return np.full_like(jtj, np.inf), True
    if not np.all(np.isfinite(cov)) or np.any(np.diag(cov) < 0):
        return np.full_like(jtj, np.inf), True
    return cov, np.linalg.cond(jtj) > 1e14


@dataclass
class GaussianFit:
    w0: float
    w0_err: float
    amplitude: float
    center: float
    offset: float
    chi2_reduced: float
    converged: bool
    message: str = ""

    def as_dict(self):
        return asdict(self)


def fit_gaussian_profile(source, y=None, use: str = "counts", offset: bool = False,
                         sigma=None, reweight: int = 4) -> GaussianFit:
    """Fit ``A exp[-((x - x0)/w0)^2] (+ B)``.

    Poisson weights are refined from the model as in :func:`fit_fringe`.
    """
    x, y = _data(source, y, use)
    if len(x) < 6:
        raise ValueError("a profile fit needs at least 6 points")
    sig = poisson_sigma(y) if sigma is None else np.asarray(sigma, dtype=float)
    peak = int(np.argmax(y))
    if peak in (0, len(x) - 1):
        raise ValueError("profile scan must span the peak")
    x_ref, x_scale = x[peak], (x[-1] - x[0]) / 2
    u = (x - x_ref) / x_scale
    y_scale = max(np.max(np.abs(y)), 1e-300)
    yn, sn = y / y_scale, sig / y_scale
    wts = np.clip(yn, 0, None)
    mean = np.sum(wts * u) / np.sum(wts)
    width = math.sqrt(max(2 * np.sum(wts * (u - mean) ** 2) / np.sum(wts), 1e-6))

    def model(p):
        out = p[0] * np.exp(-((u - p[1]) / p[2]) ** 2)
        return out + p[3] if offset else out

    def resid(p):
        return (model(p) - yn) / sn

    def jac(p):
        env = np.exp(-((u - p[1]) / p[2]) ** 2)
        g = p[0] * env
        cols = [env, g * 2 * (u - p[1]) / p[2] ** 2, g * 2 * (u - p[1]) ** 2 / p[2] ** 3]
        if offset:
            cols.append(np.ones_like(u))
        return np.column_stack(cols) / sn[:, None]

    p0 = [yn[peak], mean, width] + ([0.0] if offset else [])
    res = least_squares(resid, p0, jac=jac, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=MAX_NFEV)
    if sigma is None:
        res = _reweighted(res, resid, jac, model, sn, y_scale, reweight)
    cov, _ = _covariance(res.jac)
    dof = max(len(x) - len(p0), 1)
    w0 = abs(res.x[2]) * x_scale
    fit = GaussianFit(
        w0=w0,
        w0_err=math.sqrt(cov[2, 2]) * x_scale,
        amplitude=res.x[0] * y_scale,
        center=x_ref + res.x[1] * x_scale,
        offset=(res.x[3] * y_scale) if offset else 0.0,
        chi2_reduced=float(2 * res.cost / dof),
        converged=bool(res.success),
        message=res.message,
    )
    if not fit.converged:
        warnings.warn(f"Gaussian profile fit did not converge: {res.message}", FitWarning)
    return fit


@dataclass
class FringeFit:
    """``B + A env(x) (1 + V cos(2 pi x / period + phase))``."""

    amplitude: float
    offset: float
    visibility: float
    visibility_err: float
    period: float
    period_err: float
    phase: float
    envelope_width: float
    envelope_center: float
    chi2_reduced: float
    converged: bool
    degenerate: bool = False
    uncertainty: str = "covariance 1-sigma"
    covariance: list = field(default_factory=list)
    parameters: tuple = ()

    def as_dict(self):
        d = asdict(self)
        d["parameters"] = list(self.parameters)
        return d


def _fft_frequencies(u, r, count=3):
    """Strongest frequencies (cycles per unit u) of residual ``r`` on a uniform resample."""
    n = len(u)
    grid = np.linspace(u[0], u[-1], n)
    rr = np.interp(grid, u, r)
    rr = rr - rr.mean()
    pad = 16 * n
    spec = np.abs(np.fft.rfft(rr * np.hanning(n), pad))
    freqs = np.fft.rfftfreq(pad, d=grid[1] - grid[0])
    spec[freqs < 1.5 / (u[-1] - u[0])] = 0
    peaks = [i for i in range(1, len(spec) - 1) if spec[i] >= spec[i - 1] and spec[i] >= spec[i + 1]]
    peaks.sort(key=lambda i: -spec[i])
    return [freqs[i] for i in peaks[:count] if spec[i] > 0]


def fit_fringe(source, y=None, use: str = "counts", envelope: str = "gaussian", offset: bool = True,
               period_guess: float | None = None, sigma=None, reweight: int = 4) -> FringeFit:
    """Fit a fringe with optional Gaussian envelope.

    Multi-start damped least squares; periods are seeded by FFT peaks (or
    ``period_guess``). A constant envelope forces ``offset=False`` because the
    offset would duplicate the mean level.

    With Poisson weights the best start is refit ``reweight`` times with
    ``sigma^2 = max(model, 1)``. Count-based weights favour low points and
    bias V upward at a few counts per point; model weights do not.
    """
    x, y = _data(source, y, use)
    if envelope not in ("gaussian", "none"):
        raise ValueError("envelope must be 'gaussian' or 'none'")
    gaussian = envelope == "gaussian"
    offset = offset and gaussian
    sig = poisson_sigma(y) if sigma is None else np.asarray(sigma, dtype=float)
    x_ref, x_scale = x[0], (x[-1] - x[0])
    if x_scale <= 0:
        raise ValueError("scan needs at least two distinct settings")
    u = (x - x_ref) / x_scale
    y_scale = max(np.max(np.abs(y)), 1e-300)
    yn, sn = y / y_scale, sig / y_scale

    if np.ptp(y) == 0:
        return _degenerate_fit(x, y, sig, x_ref, x_scale, y_scale, gaussian)

    # envelope seed
    if gaussian:
        g = fit_gaussian_profile(u, yn, sigma=sn) if 0 < np.argmax(yn) < len(u) - 1 else None
        if g is not None and g.converged and g.w0 > 0:
            env0 = (g.amplitude / 1.0, g.center, g.w0)
        else:
            env0 = (yn.max(), u[np.argmax(yn)], 0.5)
        base = env0[0] * np.exp(-((u - env0[1]) / env0[2]) ** 2)
    else:
        env0 = (yn.mean(), 0.0, 1.0)
        base = np.full_like(u, yn.mean())

    if period_guess is not None:
        freqs = [x_scale / period_guess]
    else:
        freqs = _fft_frequencies(u, yn - base) or [3.0]

    def unpack(p):
        a, v, f, ph = p[:4]
        k = 4
        b = 0.0
        if offset:
            b = p[k]
            k += 1
        if gaussian:
            c, w = p[k], p[k + 1]
            env = np.exp(-((u - c) / w) ** 2)
        else:
            env = 1.0
        return a, v, f, ph, b, env

    def model(p):
        a, v, f, ph, b, env = unpack(p)
        return b + a * env * (1 + v * np.cos(2 * np.pi * f * u + ph))

    def resid(p):
        return (model(p) - yn) / sn

    def jac(p):
        a, v, f, ph, b, env = unpack(p)
        theta = 2 * np.pi * f * u + ph
        cos, sin = np.cos(theta), np.sin(theta)
        env = np.broadcast_to(env, u.shape)
        cols = [env * (1 + v * cos), a * env * cos, -a * env * v * sin * 2 * np.pi * u, -a * env * v * sin]
        if offset:
            cols.append(np.ones_like(u))
        if gaussian:
            c, w = p[-2], p[-1]
            g = a * env * (1 + v * cos)
            cols += [g * 2 * (u - c) / w ** 2, g * 2 * (u - c) ** 2 / w ** 3]
        return np.column_stack(cols) / sn[:, None]

    best = None
    for f0 in freqs:
        # V may change sign, so starts at ph0 and ph0 + pi coincide
        for ph0 in (0.0, np.pi / 2):
            p0 = [env0[0] if gaussian else yn.mean(), 0.5, f0, ph0]
            if offset:
                p0.append(0.0)
            if gaussian:
                p0 += [env0[1], env0[2]]
            try:
                res = least_squares(resid, p0, jac=jac, method="lm", xtol=1e-8, ftol=1e-8, max_nfev=START_NFEV)
            except (ValueError, FloatingPointError):
                continue
            if not np.all(np.isfinite(res.x)):
                continue
            if best is None or res.cost < best.cost:
                best = res
    if best is None:
        return _degenerate_fit(x, y, sig, x_ref, x_scale, y_scale, gaussian)

    # polish the winning start
    try:
        res = least_squares(resid, best.x, jac=jac, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                            max_nfev=MAX_NFEV)
        if np.all(np.isfinite(res.x)) and res.cost <= best.cost:
            best = res
    except (ValueError, FloatingPointError):
        pass

    if sigma is None:
        best = _reweighted(best, resid, jac, model, sn, y_scale, reweight)

    p = best.x.copy()
    cov, singular = _covariance(best.jac)
    # canonical signs: V >= 0, f > 0
    if p[1] < 0:
        p[1], p[3] = -p[1], p[3] + np.pi
    if p[2] < 0:
        p[2], p[3] = -p[2], -p[3]
    p[3] = (p[3] + np.pi) % (2 * np.pi) - np.pi
    a, v, f, ph, b, _ = unpack(p)
    k = 4 + (1 if offset else 0)
    if gaussian:
        center, width = x_ref + p[k] * x_scale, abs(p[k + 1]) * x_scale
    else:
        center, width = float("nan"), float("inf")
    period = x_scale / f
    f_err = math.sqrt(cov[2, 2])
    dof = max(len(x) - len(p), 1)
    # phase referenced to x = 0 instead of the first scan point
    phase = (ph - 2 * np.pi * f * x_ref / x_scale + np.pi) % (2 * np.pi) - np.pi
    fit = FringeFit(
        amplitude=a * y_scale,
        offset=b * y_scale,
        visibility=float(v),
        visibility_err=float(math.sqrt(cov[1, 1])),
        period=float(period),
        period_err=float(period * f_err / f),
        phase=float(phase),
        envelope_width=float(width),
        envelope_center=float(center),
        chi2_reduced=float(2 * best.cost / dof),
        converged=bool(best.success),
        degenerate=bool(singular or not np.isfinite(cov[1, 1])),
        covariance=cov.tolist(),
        parameters=tuple(float(t) for t in p),
    )
    if not fit.converged:
        warnings.warn(f"fringe fit did not converge: {best.message}", FitWarning)
    return fit


def _degenerate_fit(x, y, sig, x_ref, x_scale, y_scale, gaussian):
    warnings.warn("flat or unfittable data: visibility undetermined", FitWarning)
    return FringeFit(
        amplitude=float(np.mean(y)), offset=0.0, visibility=0.0, visibility_err=float("inf"),
        period=float("nan"), period_err=float("inf"), phase=0.0,
        envelope_width=float("inf") if not gaussian else float("nan"),
        envelope_center=float("nan"), chi2_reduced=float("nan"), converged=False, degenerate=True,
    )


@dataclass
class BoundComparison:
    verdict: str
    z: float
    bound: float
    visibility: float
    visibility_err: float

    def as_dict(self):
        return asdict(self)


def compare_bound(fit, n: int, visibility_err: float | None = None, threshold: float = 2.0) -> BoundComparison:
    """One-sided comparison of a fitted visibility with the classical ``n``-photon bound.

    ``fit`` is a :class:`FringeFit` or a bare visibility (then pass
    ``visibility_err``). ``above`` needs ``z > threshold``; ``below`` needs
    ``z < -threshold``.
    """
    if isinstance(fit, FringeFit):
        v, s = fit.visibility, fit.visibility_err
    else:
        v, s = float(fit), visibility_err
    if s is None or not (s > 0 and math.isfinite(s)):
        raise ValueError("a finite positive visibility uncertainty is required")
    bound = classical_visibility_bound(n)
    z = (v - bound) / s
    verdict = "above" if z > threshold else "below" if z < -threshold else "consistent"
    return BoundComparison(verdict, float(z), bound, float(v), float(s))
