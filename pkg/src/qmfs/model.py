"""Domain types and validated configuration.

All frequencies and rates are angular (rad/s) in memory. The JSON config
format stores ``f/2pi`` values in fields ending in ``_hz`` and converts on
load and dump. Quadratures are normalized so that vacuum variance is 1/2.
"""

from __future__ import annotations

import dataclasses
import json
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from typing import Optional

import numpy as np

from .errors import ConfigError, RegimeWarning

TWO_PI = 2.0 * math.pi
SCHEMA_VERSION = 1

# Minimum ratio omega_j / kappa (and |omega_1 - omega_2| / kappa) below which
# a RegimeWarning is raised.
RWA_MARGIN = 1.0

SIDEBANDS = ("red", "blue")
# Canonical tone order used for phase tuples: (1-, 1+, 2-, 2+).
TONE_ORDER = ((1, "red"), (1, "blue"), (2, "red"), (2, "blue"))


def fold_phase(phase: float) -> float:
    """Fold an angle into [0, 2pi)."""
    p = math.fmod(float(phase), TWO_PI)
    if p < 0.0:
        p += TWO_PI
    if p >= TWO_PI:
        p = 0.0
    return p + 0.0


def hz(value_hz: float) -> float:
    """Convert an ``f/2pi`` value in Hz to rad/s."""
    return float(value_hz) * TWO_PI


def to_hz(omega: float) -> float:
    return float(omega) / TWO_PI


@dataclass(frozen=True)
class MechanicalMode:
    """One mechanical oscillator.

    ``gamma_effective`` and ``n_thermal`` describe the oscillator after any
    sideband cooling; ``gamma_intrinsic`` is kept for bookkeeping.
    """

    omega: float
    gamma_intrinsic: float
    gamma_effective: float
    n_thermal: float


@dataclass(frozen=True)
class CavityMode:
    omega_c: float
    kappa_ext: float
    kappa_int: float
    n_cavity_thermal: float = 0.0

    @property
    def kappa(self) -> float:
        return self.kappa_ext + self.kappa_int


@dataclass(frozen=True)
class PumpTone:
    """A drive tone giving the effective coupling ``amplitude * exp(i phase)``.

    ``sideband`` is ``"red"`` for the tone below the cavity (the ``j-`` tone)
    and ``"blue"`` for the tone above it (``j+``).
    """

    oscillator_index: int
    sideband: str
    amplitude: float
    phase: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "phase", fold_phase(self.phase))
        object.__setattr__(self, "amplitude", float(self.amplitude))

    @property
    def complex_coupling(self) -> complex:
        return self.amplitude * complex(math.cos(self.phase), math.sin(self.phase))


@dataclass(frozen=True)
class ToneSet:
    tones: tuple
    detuning: float

    def __post_init__(self):
        object.__setattr__(self, "tones", tuple(self.tones))

    @classmethod
    def uniform(cls, amplitude, detuning, phases=(0.0, 0.0, 0.0, 0.0), blue_ratio=1.0):
        """Four tones with equal red amplitude and ``blue_ratio`` times it on blue.

        ``phases`` is ordered ``(theta_1-, theta_1+, theta_2-, theta_2+)``.
        """
        tones = []
        for (j, sb), ph in zip(TONE_ORDER, phases):
            amp = amplitude if sb == "red" else amplitude * blue_ratio
            tones.append(PumpTone(j, sb, amp, ph))
        return cls(tuple(tones), float(detuning))

    def get(self, oscillator: int, sideband: str) -> PumpTone:
        for t in self.tones:
            if t.oscillator_index == oscillator and t.sideband == sideband:
                return t
        raise KeyError((oscillator, sideband))

    @property
    def phases(self) -> tuple:
        return tuple(self.get(j, sb).phase for j, sb in TONE_ORDER)

    @property
    def amplitudes(self) -> tuple:
        return tuple(self.get(j, sb).amplitude for j, sb in TONE_ORDER)

    def with_phases(self, phases) -> "ToneSet":
        tones = [dataclasses.replace(self.get(j, sb), phase=p)
                 for (j, sb), p in zip(TONE_ORDER, phases)]
        return ToneSet(tuple(tones), self.detuning)

    def scaled(self, factor: float) -> "ToneSet":
        tones = [dataclasses.replace(t, amplitude=t.amplitude * factor) for t in self.tones]
        return ToneSet(tuple(tones), self.detuning)

    def frequencies(self, omega_cavity: float, omega_1: float, omega_2: float) -> dict:
        """Lab-frame tone frequencies keyed by ``(oscillator, sideband)``."""
        shift = {1: omega_1 - self.detuning, 2: omega_2 + self.detuning}
        return {
            (j, sb): omega_cavity + (shift[j] if sb == "blue" else -shift[j])
            for j, sb in TONE_ORDER
        }


@dataclass(frozen=True)
class SystemConfig:
    mech: tuple
    pump_cavity: CavityMode
    pump_tones: ToneSet
    probe_cavity: Optional[CavityMode] = None
    probe_tones: Optional[ToneSet] = None
    amplifier_noise: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "mech", tuple(self.mech))

    @cached_property
    def gamma_mean(self) -> float:
        """Mean effective mechanical damping (gamma_1 + gamma_2) / 2."""
        return 0.5 * (self.mech[0].gamma_effective + self.mech[1].gamma_effective)

    @cached_property
    def gamma_intrinsic_mean(self) -> float:
        return 0.5 * (self.mech[0].gamma_intrinsic + self.mech[1].gamma_intrinsic)

    @property
    def detuning(self) -> float:
        return self.pump_tones.detuning

    @property
    def has_probe(self) -> bool:
        return self.probe_cavity is not None

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)

    def with_mechanics(self, gamma=None, n_thermal=None) -> "SystemConfig":
        """Set the same effective damping and/or occupation on both oscillators."""
        mech = []
        for m in self.mech:
            g = m.gamma_effective if gamma is None else gamma
            n = m.n_thermal if n_thermal is None else n_thermal
            mech.append(dataclasses.replace(
                m, gamma_effective=g, gamma_intrinsic=min(m.gamma_intrinsic, g), n_thermal=n))
        return self.replace(mech=tuple(mech))


# ---------------------------------------------------------------------------
# validation

def _require(cond, field_name, message):
    if not cond:
        raise ConfigError(field_name, message)


def _finite(x):
    return isinstance(x, (int, float, np.floating, np.integer)) and math.isfinite(x)


def _validate_cavity(cav: CavityMode, name: str):
    for attr in ("omega_c", "kappa_ext", "kappa_int", "n_cavity_thermal"):
        _require(_finite(getattr(cav, attr)), f"{name}.{attr}", "must be a finite number")
    _require(cav.kappa_ext >= 0, f"{name}.kappa_ext", "must be >= 0")
    _require(cav.kappa_int >= 0, f"{name}.kappa_int", "must be >= 0")
    _require(cav.kappa > 0, f"{name}.kappa", "cavity undamped (kappa_ext + kappa_int must be > 0)")
    _require(cav.omega_c > 0, f"{name}.omega_c", "must be > 0")
    _require(cav.n_cavity_thermal >= 0, f"{name}.n_cavity_thermal", "must be >= 0")


def _validate_tones(ts: ToneSet, name: str):
    _require(isinstance(ts, ToneSet), name, "must be a ToneSet")
    _require(_finite(ts.detuning) and ts.detuning > 0, f"{name}.detuning", "must be > 0")
    _require(len(ts.tones) == 4, f"{name}.tones", f"expected 4 tones, got {len(ts.tones)}")
    seen = set()
    for i, t in enumerate(ts.tones):
        where = f"{name}.tones[{i}]"
        _require(t.oscillator_index in (1, 2), f"{where}.oscillator_index", "must be 1 or 2")
        _require(t.sideband in SIDEBANDS, f"{where}.sideband", "must be 'red' or 'blue'")
        _require(_finite(t.amplitude) and t.amplitude >= 0, f"{where}.amplitude", "must be >= 0")
        _require(_finite(t.phase), f"{where}.phase", "must be finite")
        key = (t.oscillator_index, t.sideband)
        _require(key not in seen, f"{where}", f"duplicate tone for oscillator {key[0]} {key[1]}")
        seen.add(key)


def validate(config: SystemConfig) -> SystemConfig:
    """Check every invariant of ``config`` and return it.

    Raises
    ------
    ConfigError
        On the first violated invariant, naming the field.

    Warns
    -----
    RegimeWarning
        When a mechanical frequency or the mechanical frequency splitting is
        not larger than ``RWA_MARGIN`` cavity linewidths.
    """
    _require(len(config.mech) == 2, "mech", "exactly two mechanical modes are required")
    for j, m in enumerate(config.mech, start=1):
        where = f"mech[{j}]"
        for attr in ("omega", "gamma_intrinsic", "gamma_effective", "n_thermal"):
            _require(_finite(getattr(m, attr)), f"{where}.{attr}", "must be a finite number")
        _require(m.omega > 0, f"{where}.omega", "must be > 0")
        _require(m.gamma_intrinsic > 0, f"{where}.gamma_intrinsic", "must be > 0")
        _require(m.gamma_effective >= m.gamma_intrinsic, f"{where}.gamma_effective",
                 "must be >= gamma_intrinsic")
        _require(m.n_thermal >= 0, f"{where}.n_thermal", "must be >= 0")
    _validate_cavity(config.pump_cavity, "pump_cavity")
    _validate_tones(config.pump_tones, "pump_tones")
    if config.probe_tones is not None:
        _require(config.probe_cavity is not None, "probe_tones", "probe tones require a probe cavity")
        _validate_tones(config.probe_tones, "probe_tones")
        _require(config.probe_tones.detuning == config.pump_tones.detuning, "probe_tones.detuning",
                 "probe tones must share the pump detuning")
    if config.probe_cavity is not None:
        _validate_cavity(config.probe_cavity, "probe_cavity")
    _require(_finite(config.amplifier_noise) and config.amplifier_noise >= 0,
             "amplifier_noise", "must be >= 0")

    cavities = [config.pump_cavity] + ([config.probe_cavity] if config.probe_cavity else [])
    kappa_max = max(c.kappa for c in cavities)
    w1, w2 = config.mech[0].omega, config.mech[1].omega
    for j, w in ((1, w1), (2, w2)):
        if w <= RWA_MARGIN * kappa_max:
            warnings.warn(f"mech[{j}].omega is not large compared to kappa; "
                          "resolved-sideband RWA violated", RegimeWarning, stacklevel=2)
    if abs(w1 - w2) <= RWA_MARGIN * kappa_max:
        warnings.warn("sideband separation violates RWA (|omega_1 - omega_2| <= kappa)",
                      RegimeWarning, stacklevel=2)
    # warm the derived-quantity cache
    config.gamma_mean
    config.gamma_intrinsic_mean
    return config


# ---------------------------------------------------------------------------
# JSON serialization

def _cavity_to_dict(c: CavityMode) -> dict:
    return {
        "frequency_hz": to_hz(c.omega_c),
        "kappa_ext_hz": to_hz(c.kappa_ext),
        "kappa_int_hz": to_hz(c.kappa_int),
        "n_thermal": c.n_cavity_thermal,
    }


def _tones_to_dict(ts: ToneSet) -> dict:
    return {
        "detuning_hz": to_hz(ts.detuning),
        "tones": [
            {"oscillator": t.oscillator_index, "sideband": t.sideband,
             "coupling_hz": to_hz(t.amplitude), "phase_rad": t.phase}
            for t in ts.tones
        ],
    }


def to_dict(config: SystemConfig) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "mechanical": [
            {"frequency_hz": to_hz(m.omega), "gamma_intrinsic_hz": to_hz(m.gamma_intrinsic),
             "gamma_effective_hz": to_hz(m.gamma_effective), "n_thermal": m.n_thermal}
            for m in config.mech
        ],
        "pump_cavity": _cavity_to_dict(config.pump_cavity),
        "pump_tones": _tones_to_dict(config.pump_tones),
        "probe_cavity": None if config.probe_cavity is None else _cavity_to_dict(config.probe_cavity),
        "probe_tones": None if config.probe_tones is None else _tones_to_dict(config.probe_tones),
        "amplifier_noise": config.amplifier_noise,
    }


def _get(doc, key, where, kind=(int, float)):
    if not isinstance(doc, dict):
        raise ConfigError(where, "expected a JSON object")
    if key not in doc:
        raise ConfigError(f"{where}.{key}" if where else key, "missing field")
    value = doc[key]
    if kind is not None and (isinstance(value, bool) or not isinstance(value, kind)):
        raise ConfigError(f"{where}.{key}" if where else key,
                          f"expected {getattr(kind, '__name__', 'number')}, got {type(value).__name__}")
    return value


def _cavity_from_dict(doc, where) -> CavityMode:
    return CavityMode(
        omega_c=hz(_get(doc, "frequency_hz", where)),
        kappa_ext=hz(_get(doc, "kappa_ext_hz", where)),
        kappa_int=hz(_get(doc, "kappa_int_hz", where)),
        n_cavity_thermal=float(_get(doc, "n_thermal", where)),
    )


def _tones_from_dict(doc, where) -> ToneSet:
    raw = _get(doc, "tones", where, kind=list)
    tones = []
    for i, t in enumerate(raw):
        w = f"{where}.tones[{i}]"
        sideband = _get(t, "sideband", w, kind=str)
        tones.append(PumpTone(
            oscillator_index=_get(t, "oscillator", w, kind=int),
            sideband=sideband,
            amplitude=hz(_get(t, "coupling_hz", w)),
            phase=float(_get(t, "phase_rad", w)),
        ))
    return ToneSet(tuple(tones), hz(_get(doc, "detuning_hz", where)))


def from_dict(doc: dict) -> SystemConfig:
    """Build a config from a parsed JSON document (no validation)."""
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    version = _get(doc, "schema_version", "", kind=int)
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported schema version {version} "
                          f"(this build reads version {SCHEMA_VERSION})")
    mech_docs = _get(doc, "mechanical", "", kind=list)
    if len(mech_docs) != 2:
        raise ConfigError("mechanical", "exactly two mechanical modes are required")
    mech = tuple(
        MechanicalMode(
            omega=hz(_get(m, "frequency_hz", f"mechanical[{j}]")),
            gamma_intrinsic=hz(_get(m, "gamma_intrinsic_hz", f"mechanical[{j}]")),
            gamma_effective=hz(_get(m, "gamma_effective_hz", f"mechanical[{j}]")),
            n_thermal=float(_get(m, "n_thermal", f"mechanical[{j}]")),
        )
        for j, m in enumerate(mech_docs, start=1)
    )
    probe_cavity = doc.get("probe_cavity")
    probe_tones = doc.get("probe_tones")
    return SystemConfig(
        mech=mech,
        pump_cavity=_cavity_from_dict(_get(doc, "pump_cavity", "", kind=dict), "pump_cavity"),
        pump_tones=_tones_from_dict(_get(doc, "pump_tones", "", kind=dict), "pump_tones"),
        probe_cavity=None if probe_cavity is None else _cavity_from_dict(probe_cavity, "probe_cavity"),
        probe_tones=None if probe_tones is None else _tones_from_dict(probe_tones, "probe_tones"),
        amplifier_noise=float(doc.get("amplifier_noise", 0.0)),
    )


def dumps(config: SystemConfig) -> str:
    return json.dumps(to_dict(config), indent=2) + "\n"


def loads(text: str) -> SystemConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<json>", f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}")
    return from_dict(doc)


def load(path) -> SystemConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}")
    return loads(text)


def save(config: SystemConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(config))


def preset_names() -> list:
    pkg = resources.files("qmfs") / "presets"
    return sorted(p.name[:-5] for p in pkg.iterdir() if p.name.endswith(".json")
                  and not p.name.startswith("scenario"))


def load_preset(name: str) -> SystemConfig:
    """Load one of the versioned preset configs shipped with the package."""
    path = resources.files("qmfs") / "presets" / f"{name}.json"
    if not path.is_file():
        raise ConfigError("preset", f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return loads(path.read_text(encoding="utf-8"))


def paper_default_config() -> SystemConfig:
    """Device parameters reported for the measured sample.

    No cooling is applied (effective damping equals intrinsic damping) and
    the pump tones are present with zero amplitude; set them with
    :meth:`ToneSet.uniform` or :func:`qmfs.scenarios.bae_config`.
    """
    return validate(load_preset("paper_device"))


# ---------------------------------------------------------------------------
# quadrature selectors

_SQRT1_2 = 1.0 / math.sqrt(2.0)

# Components on the mechanical basis (X1, P1, X2, P2).
_BASIS = {
    "X1": (1.0, 0.0, 0.0, 0.0),
    "P1": (0.0, 1.0, 0.0, 0.0),
    "X2": (0.0, 0.0, 1.0, 0.0),
    "P2": (0.0, 0.0, 0.0, 1.0),
    "X+": (_SQRT1_2, 0.0, _SQRT1_2, 0.0),
    "X-": (_SQRT1_2, 0.0, -_SQRT1_2, 0.0),
    "P+": (0.0, _SQRT1_2, 0.0, _SQRT1_2),
    "P-": (0.0, _SQRT1_2, 0.0, -_SQRT1_2),
}

ALLOWED_PAIRS = (
    frozenset({"X+", "P-"}), frozenset({"X-", "P+"}),
    frozenset({"X+", "P+"}), frozenset({"X-", "P-"}),
)


@dataclass(frozen=True)
class QuadratureSelector:
    """A mechanical quadrature.

    ``kind`` is ``"single"`` (``X1``, ``P2``...), ``"collective"`` (``X+``,
    ``P-``...) or ``"generalized"``. A generalized selector with base
    ``(a, b)`` and angle ``phi`` is ``a cos(phi/2) + b sin(phi/2)``, so
    ``phi = pi`` reaches ``b``.
    """

    kind: str
    label: str = ""
    base: tuple = field(default=())
    angle: float = 0.0

    def __post_init__(self):
        if self.kind in ("single", "collective"):
            ok = self.label in _BASIS and (self.label[1] in "12") == (self.kind == "single")
            if not ok:
                raise ConfigError("quadrature", f"invalid {self.kind} quadrature {self.label!r}")
        elif self.kind == "generalized":
            if len(self.base) != 2 or frozenset(self.base) not in ALLOWED_PAIRS:
                raise ConfigError("quadrature", f"generalized base {self.base!r} must be one of "
                                  "{X+,P-}, {X-,P+}, {X+,P+}, {X-,P-}")
            object.__setattr__(self, "base", tuple(self.base))
            object.__setattr__(self, "angle", fold_phase(self.angle))
        else:
            raise ConfigError("quadrature", f"unknown selector kind {self.kind!r}")

    def vector(self) -> np.ndarray:
        """Unit vector on the mechanical basis ``(X1, P1, X2, P2)``."""
        if self.kind == "generalized":
            a, b = (np.array(_BASIS[k]) for k in self.base)
            return a * math.cos(self.angle / 2) + b * math.sin(self.angle / 2)
        return np.array(_BASIS[self.label], dtype=float)

    def __str__(self):
        if self.kind == "generalized":
            return f"{self.base[0]}:{self.base[1]}@{self.angle!r}"
        return self.label


def single(j: int, quadrature: str) -> QuadratureSelector:
    return QuadratureSelector("single", f"{quadrature}{j}")


def collective(sign: str, quadrature: str) -> QuadratureSelector:
    return QuadratureSelector("collective", f"{quadrature}{sign}")


def generalized(first: str, second: str, angle: float) -> QuadratureSelector:
    return QuadratureSelector("generalized", base=(first, second), angle=angle)


def parse_quadrature(text: str) -> QuadratureSelector:
    """Parse ``X1``, ``P-`` or ``X+:P-@<angle in rad>``."""
    text = text.strip()
    if "@" in text:
        pair, _, angle = text.partition("@")
        first, _, second = pair.partition(":")
        try:
            value = float(angle)
        except ValueError:
            raise ConfigError("quadrature", f"bad angle in {text!r}")
        return generalized(first, second, value)
    kind = "single" if text[-1:] in ("1", "2") else "collective"
    return QuadratureSelector(kind, text)
