"""Scenario runner: ``pdcstore --scenario NAME --out DIR``."""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, calibrate, config, eit, fock, sim, stats
from .errors import InsufficientStatisticsError, PdcStoreError
from .tables import write_manifest, write_table

log = logging.getLogger("pdcstore")

# published counts (N_A, N_AB, N_AC, N_ABC)
PUBLISHED_COUNTS = {
    "incident": (2968909, 18956, 15274, 75),
    "retrieved": (10420108, 10255, 7782, 4),
}

NS, MHZ = 1e9, 1e-6


def _witness_row(name, res):
    return (name, res.value, res.std_error, res.classical_probability)


WITNESS_HEADER = ("witness", "value", "std_error", "classical_probability")


def _safe(fn, *args):
    try:
        return fn(*args)
    except InsufficientStatisticsError:
        return None


def scenario_paper_counts_check(res, out):
    rows = []
    for name, counts in PUBLISHED_COUNTS.items():
        w = stats.estimate_w(stats.CoincidenceStats(*counts))
        rows.append(_witness_row(f"w_{name}", w))
    return [write_table(out / "witness.csv", WITNESS_HEADER, rows)]


def scenario_eit_spectrum(res, out):
    params = res.scenario.eit.params
    grid = np.linspace(-res.span_hz / 2, res.span_hz / 2, res.points)
    on = eit.transmission_spectrum(params, grid)
    off = eit.transmission_spectrum(params.with_(rabi_control=0.0), grid)
    files = [
        write_table(out / "spectrum.csv", ("detuning_mhz", "transmission"),
                    zip(grid * MHZ, on.intensity)),
        write_table(out / "spectrum_no_control.csv", ("detuning_mhz", "transmission"),
                    zip(grid * MHZ, off.intensity)),
    ]
    summary = [
        ("fwhm_mhz", eit.transparency_fwhm(params) * MHZ),
        ("fwhm_sampled_mhz", eit.spectrum_fwhm(on) * MHZ),
        ("peak_transmission", eit.peak_transmission(params)),
        ("opaque_transmission", eit.peak_transmission(params.with_(rabi_control=0.0))),
        ("group_delay_ns", eit.group_delay(params) * NS),
    ]
    files.append(write_table(out / "summary.csv", ("quantity", "value"), summary))
    return files


def _incident_pulse(scn):
    src = scn.source
    return eit.gaussian_pulse(src.pulse_fwhm, src.pulse_center, (0.0, src.pulse_period), scn.eit.dt)


def scenario_slow_light(res, out):
    scn = res.scenario
    pulse = _incident_pulse(scn)
    slow = eit.propagate(pulse, scn.eit.params, scn.eit.timeline, scn.eit.z_steps)
    oracle = eit.propagate_fourier(pulse, scn.eit.params)
    t = pulse.time_grid
    files = [write_table(out / "waveforms.csv", ("time_ns", "input", "output", "fourier_output"),
                         zip(t * NS, pulse.intensity, slow.intensity, oracle.intensity))]
    summary = [
        ("transmission", slow.photons() / pulse.photons()),
        ("centroid_delay_ns", (slow.centroid() - pulse.centroid()) * NS),
        ("peak_delay_ns", (slow.peak_time() - pulse.peak_time()) * NS),
        ("group_delay_ns", eit.group_delay(scn.eit.params) * NS),
        ("relative_l2_vs_fourier", eit.relative_l2(slow, oracle)),
    ]
    files.append(write_table(out / "summary.csv", ("quantity", "value"), summary))
    return files


def scenario_store_retrieve(res, out):
    scn = res.scenario
    resp = sim.storage_response(scn.eit, scn.source)
    t = resp.time_grid
    frac = scn.eit.timeline.power_fraction(t)
    files = [write_table(out / "waveforms.csv",
                         ("time_ns", "control_fraction", "input_density", "output_density"),
                         zip(t * NS, frac, resp.input_density / NS, resp.output_density / NS))]
    run = sim.run_trials(scn, threads=res.threads, max_lag=res.max_lag)
    centers = (np.arange(run.arrival.shape[1]) + 0.5) * run.arrival_bin
    files.append(write_table(out / "arrival.csv", ("time_ns", "source", "tail", "background"),
                             zip(centers * NS, *run.arrival)))
    gate = scn.detection.gate or (0.0, scn.source.pulse_period)
    sel = (centers >= gate[0]) & (centers < gate[1])
    signal = int(run.arrival[:2, sel].sum())
    offset = int(run.arrival[2, sel].sum())
    summary = [
        ("retrieved_fraction", resp.fraction_between(scn.eit.timeline.on_times()[-1], np.inf)
         if scn.eit.timeline.on_times() else 0.0),
        ("transmitted_fraction", resp.transmitted),
        ("background_rate", scn.detection.background_rate),
        ("gated_signal_counts", signal),
        ("gated_offset_counts", offset),
        ("gated_ratio", signal / offset if offset else float("nan")),
        ("pulses", run.counts.pulses),
    ]
    files.append(write_table(out / "summary.csv", ("quantity", "value"), summary))
    return files


def _histogram_table(path, hist):
    return write_table(path, ("bin_center_ns", "count"), zip(hist.centers * NS, hist.counts))


def _w_scenario(res, out):
    scn = res.scenario
    if scn.detection.topology != "triple_hbt":
        raise PdcStoreError("w scenarios need the triple_hbt topology")
    specs = (("A", "B"), ("A", "C"), ("B", "C"))
    run = sim.run_trials(scn, histograms=specs, threads=res.threads, max_lag=res.max_lag)
    cs = run.counts.coincidence_stats()
    total = run.histograms[specs[0]] + run.histograms[specs[1]] + run.histograms[specs[2]]
    period = scn.source.pulse_period
    rows = []
    w = _safe(stats.estimate_w, cs)
    if w is not None:
        rows.append(_witness_row("w", w))
    g2 = _safe(stats.estimate_g2_zero, total, period / 2)
    if g2 is not None:
        rows.append(_witness_row("g2_zero", g2))
    oracle = fock.factorial_moments(sim.routed_state(scn))
    files = [
        write_table(out / "counts.csv", ("quantity", "value"),
                    [("pulses", run.counts.pulses), ("n_a", cs.n_a), ("n_b", cs.n_b), ("n_c", cs.n_c),
                     ("n_ab", cs.n_ab), ("n_ac", cs.n_ac), ("n_abc", cs.n_abc),
                     ("duration_s", cs.duration)]),
        write_table(out / "witness.csv", WITNESS_HEADER, rows),
        write_table(out / "oracle.csv", ("quantity", "value"),
                    [("m1", oracle.m1), ("m2", oracle.m2), ("m3", oracle.m3),
                     ("g2_zero", oracle.g2), ("w", oracle.w)]),
        _histogram_table(out / "histogram.csv", total),
    ]
    fwhm = stats.correlation_fwhm(total, period)
    files.append(write_table(out / "correlation.csv", ("quantity", "value"),
                             [("correlation_fwhm_ns", fwhm * NS),
                              ("background_rate", scn.detection.background_rate)]))
    return files


scenario_w_incident = _w_scenario
scenario_w_retrieved = _w_scenario


def scenario_alpha_curve(res, out):
    base = res.scenario
    if base.detection.topology != "heralded":
        raise PdcStoreError("alpha_curve needs the heralded topology")
    rows = []
    for n in res.sweep:
        scn = base.with_(source=replace(base.source, mean_photons=n))
        run = sim.run_trials(scn, threads=res.threads, max_lag=res.max_lag)
        hs = run.counts.herald_stats()
        g2 = _safe(stats.estimate_g2_t1, hs)
        al = _safe(stats.estimate_alpha, hs)
        og2, oal = sim.heralded_prediction(scn)
        nan = float("nan")
        rows.append((n, g2.value if g2 else nan, g2.std_error if g2 else nan,
                     al.value if al else nan, al.std_error if al else nan, og2, oal, hs.n_t12))
    header = ("mean_photons", "g2_t1", "g2_t1_err", "alpha", "alpha_err",
              "oracle_g2_t1", "oracle_alpha", "n_t12")
    return [write_table(out / "alpha_curve.csv", header, rows)]


def scenario_calibrate(res, out):
    cal = calibrate.calibrate_medium(res.targets)
    scn = res.scenario.with_(eit=replace(res.scenario.eit, params=cal.params))
    rows = list(cal.as_rows())
    if scn.detection.gate is not None:
        rows.append(("background_rate", sim.background_rate_for_ratio(scn, res.offset_ratio)))
    core, tail = calibrate.calibrate_source(*res.source_targets)
    rows += [("source_core_mean", core), ("source_tail_fraction", tail)]
    return [write_table(out / "calibration.csv", ("quantity", "value"), rows)]


SCENARIO_RUNNERS = {name: globals()[f"scenario_{name}"] for name in config.SCENARIOS}


def run_scenario(config_path=None, output_dir="out", seed=None, trials=None,
                 scenario=None, threads=None) -> dict:
    """Resolve the configuration, run one scenario, write its tables and manifest."""
    start = time.perf_counter()
    res = config.load(config_path, scenario=scenario, seed=seed, trials=trials, threads=threads)
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = SCENARIO_RUNNERS[res.name](res, out)
    return write_manifest(out / "manifest.json", res.name, res.sections, res.scenario.seed,
                          __version__, time.perf_counter() - start, files)


def _u64(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pdcstore", description=__doc__)
    p.add_argument("--config", metavar="PATH", help="INI configuration or a previous manifest.json")
    p.add_argument("--out", metavar="DIR", default="out", help="output directory (default: out)")
    p.add_argument("--seed", type=_u64, metavar="U64")
    p.add_argument("--trials", type=_positive, metavar="N")
    p.add_argument("--scenario", choices=config.SCENARIOS, metavar="NAME",
                   help="one of: " + ", ".join(config.SCENARIOS))
    p.add_argument("--threads", type=_positive, metavar="N")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if args.config is None and args.scenario is None:
        print("pdcstore: error: give --scenario or --config", file=sys.stderr)
        return 2
    try:
        manifest = run_scenario(args.config, args.out, args.seed, args.trials,
                                args.scenario, args.threads)
    except PdcStoreError as exc:
        print(f"pdcstore: error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"pdcstore: error: {exc}", file=sys.stderr)
        return 1
    for entry in manifest["outputs"]:
        print(f"{Path(args.out) / entry['file']}  {entry['sha256'][:12]}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
