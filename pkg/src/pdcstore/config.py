"""Scenario configuration: INI-style ``key = value`` files with sections.

Units in files are the laboratory ones (ns, MHz, kHz); everything is
converted to SI when the ScenarioConfig is built.  ``calibrated`` stands
for the frozen calibration constants and ``auto`` for a background rate
derived from the offset ratio.  Schema::

    [scenario]   name, trials, seed, threads
    [source]     kind, mean_photons, tail_fraction, bypass_fraction,
                 pulse_fwhm_ns, pulse_center_ns, pulses_per_trial, pulse_period_ns
    [chain]      total_transmittance
    [eit]        enabled, optical_depth, gamma_excited_mhz, gamma_bc_khz,
                 rabi_control_mhz, probe_detuning_mhz, control, control_off_ns,
                 control_on_ns, edge_ns, z_steps, dt_ns
    [detection]  preset, topology, eff_a, eff_b, eff_c, eff_t, eff_1, eff_2,
                 split_t, split_s, gate_ns, trigger_gate_ns, background_rate,
                 offset_ratio, mcs_bin_ns, max_lag_ns
    [sweep]      mean_photons (comma list, alpha_curve)
    [spectrum]   span_mhz, points
    [calibration] fwhm_mhz, peak_min, delay_ns, delay_tolerance, retrieval,
                 gamma_bc_khz, offset_ratio, g2_target, w_target

Decay and Rabi rates are given as angular frequency / 2 pi.
"""

from __future__ import annotations

import configparser
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

from . import calibrate, optics
from .eit import ControlTimeline, EITParams, TWO_PI
from .errors import ConfigurationError
from .sim import DetectionConfig, EITConfig, ScenarioConfig, SourceConfig, background_rate_for_ratio

SCENARIOS = (
    "eit_spectrum",
    "slow_light",
    "store_retrieve",
    "w_incident",
    "w_retrieved",
    "alpha_curve",
    "paper_counts_check",
    "calibrate",
)

# every key with its default, as text
SCHEMA: dict[str, dict[str, str]] = {
    "scenario": {"name": "w_incident", "trials": "111", "seed": "0", "threads": "1"},
    "source": {
        "kind": "squeezed",
        "mean_photons": "calibrated",
        "tail_fraction": "calibrated",
        "bypass_fraction": "0",
        "pulse_fwhm_ns": "50",
        "pulse_center_ns": "120",
        "pulses_per_trial": "1817",
        "pulse_period_ns": "550.4",
    },
    "chain": {"total_transmittance": "0.2"},
    "eit": {
        "enabled": "false",
        "optical_depth": "7",
        "gamma_excited_mhz": "5.75",
        "gamma_bc_khz": "calibrated",
        "rabi_control_mhz": "calibrated",
        "probe_detuning_mhz": "0",
        "control": "storage",
        "control_off_ns": "140",
        "control_on_ns": "390",
        "edge_ns": "30",
        "z_steps": "100",
        "dt_ns": "0.4",
    },
    "detection": {
        "preset": "lab",
        "topology": "triple_hbt",
        "eff_a": "preset",
        "eff_b": "preset",
        "eff_c": "preset",
        "eff_t": "preset",
        "eff_1": "preset",
        "eff_2": "preset",
        "split_t": "0.5",
        "split_s": "0.5",
        "gate_ns": "none",
        "trigger_gate_ns": "none",
        "background_rate": "0",
        "offset_ratio": "2.0",
        "mcs_bin_ns": "1.6",
        "max_lag_ns": "825.6",
    },
    "sweep": {"mean_photons": "0.01, 0.02, 0.04, 0.08, 0.16"},
    "spectrum": {"span_mhz": "60", "points": "1201"},
    "calibration": {
        "fwhm_mhz": "12.6",
        "peak_min": "0.95",
        "delay_ns": "35",
        "delay_tolerance": "0.2",
        "retrieval": "0.14",
        "gamma_bc_khz": "fit",
        "offset_ratio": "2.0",
        "g2_target": "7.9",
        "w_target": "0.77",
    },
}

# desk-scale settings per scenario, applied under the file's own values
PRESETS: dict[str, dict[str, dict[str, str]]] = {
    "w_incident": {
        "scenario": {"trials": "111"},
        "chain": {"total_transmittance": "1"},
        "detection": {"preset": "desk"},
    },
    "w_retrieved": {
        "scenario": {"trials": "1101"},
        "chain": {"total_transmittance": "1"},
        "eit": {"enabled": "true"},
        "detection": {"preset": "desk", "gate_ns": "400, 450", "background_rate": "auto"},
    },
    "store_retrieve": {
        "scenario": {"trials": "55"},
        "chain": {"total_transmittance": "1"},
        "eit": {"enabled": "true"},
        "detection": {"preset": "desk", "gate_ns": "400, 450", "background_rate": "auto"},
    },
    "alpha_curve": {
        "scenario": {"trials": "551"},
        "source": {"tail_fraction": "0"},
        "chain": {"total_transmittance": "1"},
        "detection": {"preset": "desk", "topology": "heralded"},
    },
    "slow_light": {"eit": {"enabled": "true", "control": "constant"}},
    "eit_spectrum": {"eit": {"enabled": "true", "control": "constant"}},
    "calibrate": {"eit": {"enabled": "true"}, "detection": {"gate_ns": "400, 450"}},
    "paper_counts_check": {},
}


@dataclass(frozen=True)
class Resolved:
    """A fully resolved configuration: the scenario plus its auxiliary settings."""

    name: str
    scenario: ScenarioConfig
    sections: dict
    threads: int
    offset_ratio: float
    sweep: tuple[float, ...]
    span_hz: float
    points: int
    max_lag: float
    targets: calibrate.MediumTargets
    source_targets: tuple[float, float]


def _read_sections(path: Path) -> dict:
    if path.suffix == ".json":
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None
        sections = data.get("config", data)
        if not isinstance(sections, dict):
            raise ConfigurationError(f"{path}: 'config' must be an object of sections")
        return {s: {k: str(v) for k, v in kv.items()} for s, kv in sections.items()}
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
    return {s: dict(parser[s]) for s in parser.sections()}


def _check_keys(sections: dict, where: str) -> None:
    for sec, kv in sections.items():
        if sec not in SCHEMA:
            raise ConfigurationError(f"{where}: unknown section [{sec}]")
        for key in kv:
            if key not in SCHEMA[sec]:
                raise ConfigurationError(f"{where}: unknown key '{key}' in [{sec}]")


def merge_sections(file_sections: dict | None, scenario: str | None = None,
                   overrides: dict | None = None) -> dict:
    """Defaults, then the scenario preset, then the file, then overrides."""
    file_sections = file_sections or {}
    _check_keys(file_sections, "config")
    name = scenario or file_sections.get("scenario", {}).get("name") or SCHEMA["scenario"]["name"]
    if name not in SCENARIOS:
        raise ConfigurationError(f"unknown scenario '{name}' (choose from {', '.join(SCENARIOS)})")
    merged = {sec: dict(kv) for sec, kv in SCHEMA.items()}
    for layer in (PRESETS[name], file_sections, overrides or {}):
        for sec, kv in layer.items():
            merged[sec].update({k: str(v).strip() for k, v in kv.items()})
    merged["scenario"]["name"] = name
    return merged


class _Reader:
    def __init__(self, sections):
        self.s = sections

    def raw(self, sec, key):
        return self.s[sec][key].strip()

    def _fail(self, sec, key, what):
        raise ConfigurationError(f"[{sec}] {key} = {self.s[sec][key]!r}: {what}")

    def float(self, sec, key, factor=1.0):
        try:
            v = float(self.raw(sec, key))
        except ValueError:
            self._fail(sec, key, "expected a number")
        if not math.isfinite(v):
            self._fail(sec, key, "must be finite")
        return v * factor

    def int(self, sec, key):
        try:
            return int(self.raw(sec, key))
        except ValueError:
            self._fail(sec, key, "expected an integer")

    def bool(self, sec, key):
        v = self.raw(sec, key).lower()
        if v in ("1", "yes", "true", "on"):
            return True
        if v in ("0", "no", "false", "off"):
            return False
        self._fail(sec, key, "expected true or false")

    def choice(self, sec, key, options):
        v = self.raw(sec, key)
        if v not in options:
            self._fail(sec, key, f"expected one of {', '.join(options)}")
        return v

    def maybe(self, sec, key, word, factor=1.0):
        return None if self.raw(sec, key) == word else self.float(sec, key, factor)

    def window(self, sec, key, factor=1e-9):
        v = self.raw(sec, key)
        if v.lower() == "none":
            return None
        parts = [p for p in v.replace(",", " ").split()]
        try:
            lo, hi = (float(p) * factor for p in parts)
        except ValueError:
            self._fail(sec, key, "expected 'none' or 'start, end'")
        if not lo < hi:
            self._fail(sec, key, "start must precede end")
        return (lo, hi)

    def floats(self, sec, key):
        try:
            vals = tuple(float(p) for p in self.raw(sec, key).replace(",", " ").split())
        except ValueError:
            self._fail(sec, key, "expected a comma-separated list of numbers")
        if not vals:
            self._fail(sec, key, "list is empty")
        return vals


def _timeline(r: _Reader, period: float) -> ControlTimeline:
    mode = r.choice("eit", "control", ("storage", "constant", "off"))
    window = (0.0, period)
    if mode == "constant":
        return ControlTimeline.constant(window, 1.0)
    if mode == "off":
        return ControlTimeline.constant(window, 0.0)
    return ControlTimeline.storage(
        off=r.float("eit", "control_off_ns", 1e-9),
        on=r.float("eit", "control_on_ns", 1e-9),
        window=window,
        edge_time=r.float("eit", "edge_ns", 1e-9),
    )


def build(sections: dict) -> Resolved:
    """Turn merged text sections into validated configuration objects."""
    r = _Reader(sections)
    name = sections["scenario"]["name"]
    mean = r.maybe("source", "mean_photons", "calibrated")
    tail = r.maybe("source", "tail_fraction", "calibrated")
    period = r.float("source", "pulse_period_ns", 1e-9)
    try:
        source = SourceConfig(
            kind=r.choice("source", "kind", ("squeezed", "coherent", "thermal", "none")),
            mean_photons=calibrate.REFERENCE_CORE_MEAN if mean is None else mean,
            tail_fraction=calibrate.REFERENCE_TAIL_FRACTION if tail is None else tail,
            bypass_fraction=r.float("source", "bypass_fraction"),
            pulse_fwhm=r.float("source", "pulse_fwhm_ns", 1e-9),
            pulse_center=r.float("source", "pulse_center_ns", 1e-9),
            pulses_per_trial=r.int("source", "pulses_per_trial"),
            pulse_period=period,
        )
        chain = optics.reference_filter_chain(r.float("chain", "total_transmittance"))

        med = calibrate.REFERENCE_MEDIUM
        rabi = r.maybe("eit", "rabi_control_mhz", "calibrated", 1e6)
        gbc = r.maybe("eit", "gamma_bc_khz", "calibrated", 1e3)
        params = EITParams(
            optical_depth=r.float("eit", "optical_depth"),
            gamma_excited=TWO_PI * r.float("eit", "gamma_excited_mhz", 1e6),
            gamma_bc=med.gamma_bc if gbc is None else TWO_PI * gbc,
            rabi_control=med.rabi_control if rabi is None else TWO_PI * rabi,
            probe_detuning=TWO_PI * r.float("eit", "probe_detuning_mhz", 1e6),
        )
        eitcfg = EITConfig(
            enabled=r.bool("eit", "enabled"),
            params=params,
            timeline=_timeline(r, period),
            z_steps=r.int("eit", "z_steps"),
            dt=r.float("eit", "dt_ns", 1e-9),
        )

        preset = r.choice("detection", "preset", ("lab", "desk"))
        topology = r.choice("detection", "topology", ("triple_hbt", "heralded"))
        ref = DetectionConfig.desk(topology) if preset == "desk" else DetectionConfig(topology=topology)
        effs = {}
        for key in ("eff_a", "eff_b", "eff_c", "eff_t", "eff_1", "eff_2"):
            v = r.maybe("detection", key, "preset")
            effs[key] = getattr(ref, key) if v is None else v
        bg = r.maybe("detection", "background_rate", "auto")
        offset_ratio = r.float("detection", "offset_ratio")
        detection = DetectionConfig(
            topology=topology,
            split_t=r.float("detection", "split_t"),
            split_s=r.float("detection", "split_s"),
            gate=r.window("detection", "gate_ns"),
            trigger_gate=r.window("detection", "trigger_gate_ns"),
            background_rate=0.0 if bg is None else bg,
            mcs_bin=r.float("detection", "mcs_bin_ns", 1e-9),
            **effs,
        )
        scenario = ScenarioConfig(
            source=source,
            chain=chain,
            eit=eitcfg,
            detection=detection,
            trials=r.int("scenario", "trials"),
            seed=r.int("scenario", "seed"),
        )
        if bg is None:
            rate = background_rate_for_ratio(scenario, offset_ratio)
            scenario = scenario.with_(detection=replace(detection, background_rate=rate))

        forced = r.maybe("calibration", "gamma_bc_khz", "fit", 1e3)
        forced = None if forced is None else TWO_PI * forced
        targets = calibrate.MediumTargets(
            fwhm_hz=r.float("calibration", "fwhm_mhz", 1e6),
            peak_min=r.float("calibration", "peak_min"),
            delay=r.float("calibration", "delay_ns", 1e-9),
            delay_tolerance=r.float("calibration", "delay_tolerance"),
            retrieval=r.float("calibration", "retrieval"),
            optical_depth=params.optical_depth,
            gamma_excited=params.gamma_excited,
            pulse_fwhm=source.pulse_fwhm,
            pulse_center=source.pulse_center,
            timeline=eitcfg.timeline,
            gamma_bc=forced,
        )
    except ValueError as exc:  # constructor validation outside ConfigurationError
        raise ConfigurationError(str(exc)) from None

    threads = r.int("scenario", "threads")
    if threads < 1:
        raise ConfigurationError("[scenario] threads must be at least 1")
    return Resolved(
        name=name,
        scenario=scenario,
        sections=sections,
        threads=threads,
        offset_ratio=offset_ratio,
        sweep=r.floats("sweep", "mean_photons"),
        span_hz=r.float("spectrum", "span_mhz", 1e6),
        points=r.int("spectrum", "points"),
        max_lag=r.float("detection", "max_lag_ns", 1e-9),
        targets=targets,
        source_targets=(r.float("calibration", "g2_target"), r.float("calibration", "w_target")),
    )


def load(path=None, scenario=None, seed=None, trials=None, threads=None) -> Resolved:
    """Read an INI file (or a run manifest) and apply command-line overrides."""
    file_sections = _read_sections(Path(path)) if path is not None else {}
    over: dict[str, dict[str, str]] = {"scenario": {}}
    if seed is not None:
        over["scenario"]["seed"] = str(seed)
    if trials is not None:
        over["scenario"]["trials"] = str(trials)
    if threads is not None:
        over["scenario"]["threads"] = str(threads)
    return build(merge_sections(file_sections, scenario, over))
