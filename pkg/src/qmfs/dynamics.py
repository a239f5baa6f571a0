"""Rotating-frame linear model of the two oscillators and their cavities.

The frame rotates at the cavity frequency for each cavity field and at
``omega_1 - Omega`` and ``omega_2 + Omega`` for the oscillators. Within the
rotating-wave approximation each cavity couples as

    H_c = a^dag sum_j (g_{j-} b_j + g_{j+} b_j^dag) + h.c.,
    g_{j+-} = |G_{j+-}| exp(i theta_{j+-}),

and the free part is ``Omega (b1^dag b1 - b2^dag b2)``, which gives
oscillator 2 its negative effective mass. Writing ``H = x^T M x / 2`` in the
quadrature vector ``x`` gives the drift ``A = sigma M - diag(rates) / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, InstabilityError
from .model import SystemConfig, TONE_ORDER, QuadratureSelector

SQRT2 = math.sqrt(2.0)

# Collective basis (X+, X-, P+, P-) expressed on (X1, P1, X2, P2): rows are
# collective quadratures.
COLLECTIVE_TO_SINGLE = np.array([
    [1.0, 0.0, 1.0, 0.0],
    [1.0, 0.0, -1.0, 0.0],
    [0.0, 1.0, 0.0, 1.0],
    [0.0, 1.0, 0.0, -1.0],
]) / SQRT2
COLLECTIVE_LABELS = ("X+", "X-", "P+", "P-")


@dataclass(frozen=True)
class CouplingCoefficients:
    """Coefficients of ``H_c = (G/2) a (A- X- + A+ X+ + B- P- + B+ P+) + h.c.``

    ``g_ref`` is the normalization ``G``: the mean of the four tone
    amplitudes. With four equal amplitudes and all phases zero this gives
    ``a_plus = 4`` and the other three zero, i.e. ``2 sqrt(2) G X_c X+``.
    """

    a_minus: complex
    a_plus: complex
    b_minus: complex
    b_plus: complex
    g_ref: float

    def collective_vector(self) -> np.ndarray:
        """Operator coefficients ``(G/2)(A+, A-, B+, B-)`` on ``(X+, X-, P+, P-)``."""
        return 0.5 * self.g_ref * np.array(
            [self.a_plus, self.a_minus, self.b_plus, self.b_minus], dtype=complex)

    def single_vector(self) -> np.ndarray:
        """Same coefficients on ``(X1, P1, X2, P2)``."""
        return self.collective_vector() @ COLLECTIVE_TO_SINGLE


def coupling_coefficients(tones) -> CouplingCoefficients:
    """Coupling coefficients of one cavity as functions of its tone phases.

    Writing ``H_c = a L^dag + h.c.`` with
    ``L^dag = sum_j (g*_{j-} b_j^dag + g*_{j+} b_j)`` and expanding
    ``b_j = (X_j + i P_j)/sqrt(2)`` gives, per oscillator,
    ``u_j = g*_{j-} + g*_{j+}`` on ``X_j`` and ``v_j = i (g*_{j+} - g*_{j-})``
    on ``P_j`` (each over sqrt(2)). Rotating to collective quadratures then
    yields ``A+- = (u_1 +- u_2)/G`` and ``B+- = (v_1 +- v_2)/G``.
    """
    g = {(t.oscillator_index, t.sideband): t.complex_coupling for t in tones.tones}
    amps = [abs(g[k]) for k in TONE_ORDER]
    g_ref = float(np.mean(amps))
    if g_ref == 0.0:
        return CouplingCoefficients(0j, 0j, 0j, 0j, 0.0)
    u = {j: np.conj(g[(j, "red")]) + np.conj(g[(j, "blue")]) for j in (1, 2)}
    v = {j: 1j * (np.conj(g[(j, "blue")]) - np.conj(g[(j, "red")])) for j in (1, 2)}
    return CouplingCoefficients(
        a_minus=complex((u[1] - u[2]) / g_ref),
        a_plus=complex((u[1] + u[2]) / g_ref),
        b_minus=complex((v[1] - v[2]) / g_ref),
        b_plus=complex((v[1] + v[2]) / g_ref),
        g_ref=g_ref,
    )


def phases_for_quadrature(q: QuadratureSelector) -> tuple:
    """Tone phases ``(theta_1-, theta_1+, theta_2-, theta_2+)`` for a BAE
    measurement of the collective quadrature ``q`` with equal amplitudes.

    Oscillator ``j`` couples through ``X_j cos(d_j) + P_j sin(d_j)`` when
    ``theta_{j-} = -d_j`` and ``theta_{j+} = d_j``; the cavity quadrature
    that is coupled is then ``X_c`` for every choice.
    """
    v = q.vector()
    n1, n2 = math.hypot(v[0], v[1]), math.hypot(v[2], v[3])
    if not math.isclose(n1, n2, rel_tol=1e-12):
        raise ConfigError("quadrature", f"{q} does not weight both oscillators equally")
    d1 = math.atan2(v[1], v[0])
    d2 = math.atan2(v[3], v[2])
    return (-d1, d1, -d2, d2)


@dataclass(frozen=True)
class InputChannel:
    """A bosonic input port: ``rate`` in rad/s and thermal ``occupation``."""

    name: str
    mode: str
    rate: float
    occupation: float


@dataclass(frozen=True, eq=False)
class LinearModel:
    """``dx/dt = A x + B xi`` with white symmetrized input noise.

    ``noise`` holds ``n + 1/2`` for each input quadrature (two per channel,
    X then P), so ``D = B diag(noise) B^T``.
    """

    ordering: tuple
    drift: np.ndarray
    diffusion: np.ndarray
    input_matrix: np.ndarray
    noise: np.ndarray
    channels: tuple
    config: SystemConfig
    cavities: tuple = field(default=("pump",))

    @property
    def dim(self) -> int:
        return len(self.ordering)

    def index(self, label: str) -> int:
        return self.ordering.index(label)

    @property
    def mech_slice(self) -> slice:
        i = self.index("X1")
        return slice(i, i + 4)

    def channel_columns(self, name: str) -> tuple:
        k = [c.name for c in self.channels].index(name)
        return 2 * k, 2 * k + 1

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.drift)

    def kappa_min(self) -> float:
        cavs = [self.config.pump_cavity]
        if self.config.probe_cavity is not None:
            cavs.append(self.config.probe_cavity)
        return min(c.kappa for c in cavs)

    def embed(self, q) -> np.ndarray:
        """Embed a mechanical selector (or 4-vector) into the full state basis."""
        v = q.vector() if isinstance(q, QuadratureSelector) else np.asarray(q, dtype=float)
        out = np.zeros(self.dim)
        out[self.mech_slice] = v
        return out


def _hamiltonian_block(coeffs: CouplingCoefficients) -> np.ndarray:
    """Rows ``(X_c, P_c)`` of the symmetric Hamiltonian matrix on the mechanics.

    ``a L^dag + h.c. = sqrt(2) (X_c Re L^dag - P_c Im L^dag)``.
    """
    c = coeffs.single_vector()
    return SQRT2 * np.vstack([c.real, -c.imag])


def _build(config: SystemConfig, detuning: float, probe_backaction: bool = True) -> LinearModel:
    cavities = [("pump", "c", config.pump_cavity, config.pump_tones)]
    if config.probe_cavity is not None:
        cavities.append(("probe", "d", config.probe_cavity, config.probe_tones))
    ordering = []
    for _, s, _, _ in cavities:
        ordering += [f"X_{s}", f"P_{s}"]
    ordering += ["X1", "P1", "X2", "P2"]
    n = len(ordering)
    m0 = n - 4

    M = np.zeros((n, n))
    M[m0:m0 + 2, m0:m0 + 2] = detuning * np.eye(2)
    M[m0 + 2:, m0 + 2:] = -detuning * np.eye(2)
    for k, (_, _, _, tones) in enumerate(cavities):
        if tones is None:
            continue
        block = _hamiltonian_block(coupling_coefficients(tones))
        M[2 * k:2 * k + 2, m0:] = block
        M[m0:, 2 * k:2 * k + 2] = block.T

    sigma = np.zeros((n, n))
    for i in range(0, n, 2):
        sigma[i, i + 1] = 1.0
        sigma[i + 1, i] = -1.0

    channels = []
    for k, (name, s, cav, _) in enumerate(cavities):
        channels.append(InputChannel(f"{name}_ext", f"{s}", cav.kappa_ext, cav.n_cavity_thermal))
        channels.append(InputChannel(f"{name}_int", f"{s}", cav.kappa_int, cav.n_cavity_thermal))
    for j, mode in enumerate(config.mech, start=1):
        channels.append(InputChannel(f"mech{j}", str(j), mode.gamma_effective, mode.n_thermal))

    B = np.zeros((n, 2 * len(channels)))
    noise = np.zeros(2 * len(channels))
    rates = np.zeros(n)
    for k, ch in enumerate(channels):
        row = 2 * (k // 2) if ch.mode in ("c", "d") else m0 + 2 * (int(ch.mode) - 1)
        B[row, 2 * k] = math.sqrt(ch.rate)
        B[row + 1, 2 * k + 1] = math.sqrt(ch.rate)
        noise[2 * k:2 * k + 2] = ch.occupation + 0.5
        rates[row:row + 2] += ch.rate

    A = sigma @ M - 0.5 * np.diag(rates)
    if not probe_backaction and len(cavities) > 1:
        # keep the probe readout, drop the probe force on the mechanics
        A[m0:, 2:4] = 0.0
    D = B @ np.diag(noise) @ B.T
    return LinearModel(
        ordering=tuple(ordering),
        drift=A,
        diffusion=0.5 * (D + D.T),
        input_matrix=B,
        noise=noise,
        channels=tuple(channels),
        config=config,
        cavities=tuple(c[0] for c in cavities),
    )


def assemble_drift(config: SystemConfig, check_stability: bool = True,
                   probe_backaction: bool = True) -> LinearModel:
    """Build the drift and diffusion matrices for a validated config.

    ``probe_backaction=False`` removes the probe cavity's force on the
    oscillators while keeping its readout, i.e. an ideal tomography probe.

    Raises
    ------
    InstabilityError
        If any eigenvalue of the drift has a positive real part.
    """
    model = _build(config, config.detuning, probe_backaction)
    if check_stability:
        lam = model.eigenvalues()
        if np.max(lam.real) > 0.0:
            raise InstabilityError(
                f"unstable model: max Re(lambda) = {np.max(lam.real):.6g} rad/s")
    return model


@dataclass(frozen=True)
class OutputMap:
    """Linear map from (state, inputs) to detected output quadratures.

    ``state_rows @ x + feedthrough @ xi`` gives the output quadratures
    ``(X_out, P_out)`` (heterodyne) or the single homodyne quadrature.
    ``weights`` combines rows into the detected field: ``(1, i)/sqrt(2)`` for
    the phase-insensitive field ``a_out`` and ``(1,)`` for homodyne.
    """

    cavity: str
    lo_phase: Optional[float]
    state_rows: np.ndarray
    feedthrough: np.ndarray
    weights: np.ndarray
    kappa_ext: float

    @property
    def row(self) -> np.ndarray:
        """Complex row vector on the state for the detected field."""
        return self.weights @ self.state_rows

    @property
    def direct(self) -> np.ndarray:
        """Complex direct-feedthrough coefficients on each input quadrature."""
        return self.weights @ self.feedthrough


def output_routing(model: LinearModel, cavity: str = "pump",
                   lo_phase: Optional[float] = None) -> OutputMap:
    """Input-output map ``a_out = a_in - sqrt(kappa_ext) a`` for one cavity.

    With ``lo_phase=None`` the detected signal is the full output field, as
    seen by a phase-insensitive amplifier followed by a spectrum analyzer.
    With a number, the detected signal is the homodyne quadrature
    ``X cos(lo_phase) + P sin(lo_phase)`` of the output field. For a cavity
    coupled through ``X_c^phi`` the mechanical signal appears in the
    conjugate output quadrature, at ``lo_phase = phi/2 + pi/2``.
    """
    if cavity not in ("pump", "probe"):
        raise ConfigError("cavity", f"unknown cavity {cavity!r}")
    if cavity not in model.cavities:
        raise ConfigError("cavity", "no probe cavity in this model")
    s = "c" if cavity == "pump" else "d"
    cav = model.config.pump_cavity if cavity == "pump" else model.config.probe_cavity
    ix, ip = model.index(f"X_{s}"), model.index(f"P_{s}")
    rows = np.zeros((2, model.dim))
    rows[0, ix] = rows[1, ip] = -math.sqrt(cav.kappa_ext)
    ff = np.zeros((2, model.input_matrix.shape[1]))
    cx, cp = model.channel_columns(f"{cavity}_ext")
    ff[0, cx] = ff[1, cp] = 1.0
    if lo_phase is None:
        weights = np.array([1.0, 1.0j]) / SQRT2
    else:
        lo = float(lo_phase)
        rot = np.array([[math.cos(lo), math.sin(lo)]])
        rows, ff = rot @ rows, rot @ ff
        weights = np.array([1.0 + 0j])
    return OutputMap(cavity, lo_phase, rows, ff, weights, cav.kappa_ext)
