"""Regenerate the shipped preset configs from the device parameters.

    python3 tools/make_presets.py

Every figure preset is derived from ``paper_device.json`` through the
library, so the files stay consistent with each other.
"""

import dataclasses
import pathlib

from qmfs.model import ToneSet, hz, load_preset, save, validate
from qmfs.scenarios import PROBE_AMPLITUDE_RATIO, bae_config

OUT = pathlib.Path(__file__).resolve().parents[1] / "src" / "qmfs" / "presets"


def cooled(cfg, gamma_hz, n):
    mech = tuple(dataclasses.replace(m, gamma_effective=hz(gamma_hz), n_thermal=n) for m in cfg.mech)
    return cfg.replace(mech=mech)


def cavity_occupation(cfg, n_c):
    return cfg.replace(pump_cavity=dataclasses.replace(cfg.pump_cavity, n_cavity_thermal=n_c))


def with_detuning(cfg, omega_hz):
    return cfg.replace(pump_tones=dataclasses.replace(cfg.pump_tones, detuning=hz(omega_hz)))


def main():
    dev = load_preset("paper_device")
    presets = {}

    weak = cavity_occupation(cooled(dev, 630.0, 2.7), 0.0).replace(probe_cavity=None)
    presets["fig2_weak"] = bae_config(with_detuning(weak, 10e3), 10.0)

    strong = cavity_occupation(cooled(dev, 4600.0, 0.5), 0.0).replace(probe_cavity=None)
    presets["fig2_strong"] = bae_config(with_detuning(strong, 200e3), 10.0)

    fig3 = cavity_occupation(cooled(dev, 630.0, 2.7), 0.23)
    presets["fig3"] = bae_config(with_detuning(fig3.replace(probe_cavity=None), 10e3), 2.1)

    tomo = bae_config(with_detuning(fig3, 200e3), 2.1)
    G = tomo.pump_tones.get(1, "red").amplitude
    presets["fig3_tomography"] = tomo.replace(
        probe_tones=ToneSet.uniform(G * PROBE_AMPLITUDE_RATIO, tomo.detuning))

    ent = cavity_occupation(dev.replace(mech=tuple(dataclasses.replace(m, n_thermal=53.5)
                                                   for m in dev.mech)), 0.0)
    red = hz(121e3)
    presets["fig4"] = ent.replace(
        pump_tones=ToneSet.uniform(red, hz(400e3), blue_ratio=0.37),
        probe_tones=ToneSet.uniform(red * PROBE_AMPLITUDE_RATIO, hz(400e3)))

    for name, cfg in presets.items():
        save(validate(cfg), OUT / f"{name}.json")
        print(f"wrote {name}.json")


if __name__ == "__main__":
    main()
