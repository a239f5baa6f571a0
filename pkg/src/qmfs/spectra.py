"""Output spectra, Lorentzian peak fits and inference of effective occupations.

Spectra are symmetrized power spectral densities in units of quanta, on a
grid of angular frequencies relative to the cavity resonance. Lorentzian
areas are measured as ``integral S dw / 2pi`` so that a mechanical peak area
in mechanical units is directly a variance.
"""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import least_squares

from . import _kernels
from .dynamics import LinearModel, OutputMap
from .errors import PeaksOverlapWarning, PeaksUnresolvedError, TransductionError
from .model import QuadratureSelector
from .steadystate import check_stable

TWO_PI = 2.0 * math.pi
DEFAULT_POINTS = 8001
DEFAULT_SPAN_LINEWIDTHS = 30.0


@dataclass(frozen=True, eq=False)
class SpectrumTrace:
    grid: np.ndarray
    psd: np.ndarray
    cavity: str = "pump"
    lo_phase: Optional[float] = None
    n_amp: float = 0.0

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        p = np.asarray(self.psd, dtype=float)
        if g.ndim != 1 or g.shape != p.shape:
            raise ValueError("grid and psd must be 1-D arrays of equal length")
        if np.any(np.diff(g) <= 0):
            raise ValueError("grid must be strictly increasing")
        if not np.all(np.isfinite(p)):
            raise ValueError("psd must be finite")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "psd", p)

    def to_csv(self) -> str:
        buf = io.StringIO()
        lo = "none" if self.lo_phase is None else repr(float(self.lo_phase))
        buf.write(f"# cavity={self.cavity} lo_phase={lo} n_amp={float(self.n_amp)!r}\n")
        buf.write("# omega_rel_hz, psd_quanta\n")
        for w, s in zip(self.grid, self.psd):
            buf.write(f"{float(w) / TWO_PI!r},{float(s)!r}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SpectrumTrace":
        meta = {}
        rows = []
        for line in text.splitlines():
            if line.startswith("#"):
                for tok in line[1:].split():
                    if "=" in tok:
                        k, _, v = tok.partition("=")
                        meta[k] = v
                continue
            if line.strip():
                f, s = line.split(",")
                rows.append((float(f) * TWO_PI, float(s)))
        arr = np.array(rows)
        lo = meta.get("lo_phase", "none")
        return cls(arr[:, 0], arr[:, 1], meta.get("cavity", "pump"),
                   None if lo == "none" else float(lo), float(meta.get("n_amp", 0.0)))


class PeakFit(NamedTuple):
    center: float
    fwhm: float
    area: float
    floor: float

    def __call__(self, x):
        return self.area * self.fwhm / ((np.asarray(x) - self.center) ** 2 + 0.25 * self.fwhm ** 2)


def mechanical_linewidth(model: LinearModel) -> float:
    """Largest mechanical energy linewidth in the model (rad/s).

    Uses the intrinsic/cooled damping and the slow eigenvalues of the drift
    (those well below the cavity decay rates), which include dynamical
    damping by the tones.
    """
    lam = model.eigenvalues()
    slow = -lam.real[-lam.real < 0.25 * model.kappa_min()]
    gam = max(m.gamma_effective for m in model.config.mech)
    if slow.size:
        gam = max(gam, 2.0 * float(np.max(slow)))
    return gam


def default_grid(model: LinearModel, points: int = DEFAULT_POINTS,
                 span_linewidths: float = DEFAULT_SPAN_LINEWIDTHS) -> np.ndarray:
    """Symmetric grid spanning ``+-(Omega + span * gamma)``."""
    half = model.config.detuning + span_linewidths * mechanical_linewidth(model)
    return np.linspace(-half, half, points)


def output_spectrum(model: LinearModel, routing: OutputMap, grid=None,
                    n_amp: Optional[float] = None) -> SpectrumTrace:
    """Symmetrized PSD of the detected output plus amplifier noise ``n_amp``.

    The output field itself contributes the vacuum 1/2, so an empty cavity
    gives a flat background ``n_amp + 1/2``.
    """
    check_stable(model)
    grid = default_grid(model) if grid is None else np.asarray(grid, dtype=float)
    if n_amp is None:
        n_amp = model.config.amplifier_noise
    s = _kernels.psd(model.drift, routing.row.astype(complex), model.input_matrix,
                     routing.direct.astype(complex), model.noise, grid)
    return SpectrumTrace(grid, np.asarray(s) + n_amp, routing.cavity, routing.lo_phase, n_amp)


def mechanical_spectrum(model: LinearModel, q: QuadratureSelector, grid) -> np.ndarray:
    """Symmetrized PSD of an intracavity mechanical quadrature."""
    check_stable(model)
    grid = np.asarray(grid, dtype=float)
    h = model.embed(q).astype(complex)
    f = np.zeros(model.input_matrix.shape[1], dtype=complex)
    return np.asarray(_kernels.psd(model.drift, h, model.input_matrix, f, model.noise, grid))


def mechanical_response(model: LinearModel, routing: OutputMap, omega: float) -> np.ndarray:
    """Complex map from mechanical quadratures ``(X1, P1, X2, P2)`` at
    frequency ``omega`` to the detected output, through the cavity alone."""
    s = "c" if routing.cavity == "pump" else "d"
    i = model.index(f"X_{s}")
    cav = slice(i, i + 2)
    A = model.drift
    chi = np.linalg.inv(-1j * omega * np.eye(2) - A[cav, cav])
    return routing.row[cav] @ chi @ A[cav, model.mech_slice]


def calibrate_gain(model: LinearModel, routing: OutputMap) -> float:
    """Transduction from mechanical-quadrature PSD at ``+-Omega`` to output PSD.

    Raises
    ------
    TransductionError
        If the selected cavity does not couple to the mechanics.
    """
    check_stable(model)
    omega = model.config.detuning
    gains = [float(np.sum(np.abs(mechanical_response(model, routing, w)) ** 2))
             for w in (-omega, omega)]
    gain = 0.5 * (gains[0] + gains[1])
    if not gain > 0.0:
        raise TransductionError(f"no transduction: {routing.cavity} cavity does not see the mechanics")
    return gain


# ---------------------------------------------------------------------------
# fitting

def _initial_guess(x, y):
    floor = float(np.percentile(y, 5))
    dx = float(np.median(np.diff(x)))
    guesses = []
    for mask in (x < 0, x >= 0):
        if not np.any(mask):
            mask = np.ones_like(x, dtype=bool)
        idx = np.flatnonzero(mask)
        k = idx[np.argmax(y[idx])]
        height = y[k] - floor
        half = floor + 0.5 * height
        # walk outwards to the half-maximum on the side away from the origin
        j = k
        step = -1 if x[k] < 0 else 1
        while 0 <= j + step < len(x) and y[j + step] > half:
            j += step
        width = max(2.0 * abs(x[j] - x[k]), 2.0 * dx)
        guesses.append((x[k], width, max(height, 0.0) * width / 4.0))
    return floor, guesses


def fit_two_lorentzians(trace: SpectrumTrace, max_iterations: int = 200,
                        xtol: float = 1e-8) -> tuple:
    """Fit ``floor + L1 + L2`` to a trace by damped least squares.

    Returns the two fits ordered by center (left, right); both carry the
    shared floor.

    Raises
    ------
    PeaksUnresolvedError
        If the trace has no peak standing above its floor.

    Warns
    -----
    PeaksOverlapWarning
        If the peak half-separation is smaller than a fitted FWHM; the joint
        fit result is still returned.
    """
    x, y = trace.grid, trace.psd
    floor0, guesses = _initial_guess(x, y)
    height = float(np.max(y)) - floor0
    edge = max(len(y) // 20, 3)
    noise = float(np.std(np.diff(np.concatenate([y[:edge], y[-edge:]])))) / math.sqrt(2.0)
    if not height > 3.0 * noise or not height > 1e-9 * max(abs(floor0), 1e-300):
        raise PeaksUnresolvedError("peaks unresolved: no peak above the floor")

    xs = float(np.max(np.abs(x)))
    ys = float(np.max(np.abs(y)))
    xn, yn = x / xs, y / ys
    p0 = [floor0 / ys]
    for c, w, a in guesses:
        p0 += [c / xs, w / xs, a / (xs * ys)]
    p0 = np.array(p0)

    def resid(p):
        return _kernels.lorentz2(xn, p)[0] - yn

    def jac(p):
        return _kernels.lorentz2(xn, p)[1]

    res = least_squares(resid, p0, jac=jac, method="lm", xtol=xtol, ftol=1e-15, gtol=1e-15,
                        max_nfev=max_iterations * (len(p0) + 1))
    p = res.x
    floor = p[0] * ys
    peaks = []
    for col in (1, 4):
        peaks.append(PeakFit(float(p[col] * xs), float(abs(p[col + 1]) * xs),
                             float(p[col + 2] * xs * ys), float(floor)))
    left, right = sorted(peaks, key=lambda pk: pk.center)
    if 0.5 * (right.center - left.center) < max(left.fwhm, right.fwhm):
        warnings.warn("peaks overlap: half-separation smaller than linewidth; "
                      "joint fit with shared floor", PeaksOverlapWarning, stacklevel=2)
    return left, right


def fit_model(peaks, x) -> np.ndarray:
    """Evaluate the fitted floor plus both Lorentzians."""
    return peaks[0].floor + sum(pk(x) for pk in peaks)


class EffectiveOccupation(NamedTuple):
    x2_eff: float
    n_imp: float
    peaks: tuple


def effective_occupation(trace: SpectrumTrace, gamma: float, gain: float,
                         peaks=None) -> EffectiveOccupation:
    """Refer the output spectrum to mechanical units.

    ``x2_eff = gamma S_eff(+-Omega) / 2`` averaged over both peaks, with
    ``S_eff = S_out / gain`` evaluated at the fitted peak centers, and
    ``n_imp = gamma floor / (2 gain)``.
    """
    if not gain > 0:
        raise ValueError("transduction gain must be > 0")
    if peaks is None:
        peaks = fit_two_lorentzians(trace)
    vals = [float(fit_model(peaks, np.array([pk.center]))[0]) for pk in peaks]
    x2 = float(np.mean([gamma * v / (2.0 * gain) for v in vals]))
    n_imp = gamma * peaks[0].floor / (2.0 * gain)
    return EffectiveOccupation(x2, n_imp, tuple(peaks))


def _lorentz_tails(pk: PeakFit, lo: float, hi: float) -> float:
    """Area of one fitted Lorentzian lying outside ``[lo, hi]``."""
    upper = 0.5 * math.pi - math.atan(2.0 * (hi - pk.center) / pk.fwhm)
    lower = 0.5 * math.pi + math.atan(2.0 * (lo - pk.center) / pk.fwhm)
    return pk.area * (upper + lower) / math.pi


def integrated_variance(trace: SpectrumTrace, gain: float, floor: Optional[float] = None,
                        peaks=None) -> float:
    """Mechanical variance from the area under the trace above its floor.

    The trapezoid integral over the grid is completed with the analytic
    Lorentzian tails outside it, taken from the peak fit.
    """
    if peaks is None:
        peaks = fit_two_lorentzians(trace)
    if floor is None:
        floor = peaks[0].floor
    x, y = trace.grid, trace.psd
    area = float(np.trapezoid(y - floor, x)) / TWO_PI if hasattr(np, "trapezoid") \
        else float(np.trapz(y - floor, x)) / TWO_PI
    area += sum(_lorentz_tails(pk, x[0], x[-1]) for pk in peaks)
    return area / gain
