"""Command-line front end.

Subcommands::

    generate         random network only
    run              full recipe, junction census and visibility report
    sweep-tf         fusing temperature per film variant and wire diameter
    resolution-test  two-line patterns at decreasing line widths
    render           SVG of the processed network over its mask
    calibrate        fit the model constants and write a calibration file

Every subcommand writes its files into ``--out`` together with
``manifest.json``.  Exit status is 0 on success, 1 when the configuration or an
input file is invalid and 2 when the model fails at run time.
"""
from __future__ import annotations

import argparse
import hashlib
import logging
import os
import sys
from datetime import datetime, timezone

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2
_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")

log = logging.getLogger("gtepattern")


class InvalidInput(Exception):
    """Raised while preparing a run; maps to exit status 1."""


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run configuration (section.key = value)")
    common.add_argument("--seed", type=int, help="global seed, overrides run.seed")
    common.add_argument("--replicas", type=int, help="replica count, overrides the configured one")
    common.add_argument("--out", help="output directory, overrides run.output_dir")
    common.add_argument("--threads", type=int, default=1, help="numeric library threads (results do not depend on it)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="gtepattern", description="Junction-selective nanowire network patterning simulator.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="generate a network")
    sub.add_parser("run", parents=[common], help="run the configured recipe")
    sub.add_parser("sweep-tf", parents=[common], help="fusing-temperature sweep")
    sub.add_parser("resolution-test", parents=[common], help="line-width resolution test")
    r = sub.add_parser("render", parents=[common], help="SVG of the processed network")
    r.add_argument("--subsample", type=int, default=1, help="draw every k-th wire")
    c = sub.add_parser("calibrate", parents=[common], help="fit the calibration constants")
    c.add_argument("--rounds", type=int, default=2, help="alternating kinetics/UV fit rounds")
    return p


# ---------------------------------------------------------------------------
# configuration to model objects


def effective_config(args):
    from .config import ConfigError, load_config, parse_config

    try:
        if args.config:
            cfg = load_config(args.config)
        elif args.command in ("sweep-tf", "calibrate"):
            # these subcommands size their own domains
            cfg = parse_config("network.domain_width = 100\nnetwork.domain_height = 100\n", "<defaults>")
        else:
            raise InvalidInput(f"{args.command} requires --config")
    except (ConfigError, OSError) as exc:
        raise InvalidInput(str(exc)) from None
    changes = {}
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise InvalidInput("--seed must be a 64-bit unsigned integer")
        changes["run__seed"] = args.seed
    if args.replicas is not None:
        if args.replicas < 1:
            raise InvalidInput("--replicas must be >= 1")
        changes["run__replicas"] = args.replicas
        changes["resolution__replicas"] = args.replicas
    if args.out is not None:
        changes["run__output_dir"] = args.out
    if args.threads < 1:
        raise InvalidInput("--threads must be >= 1")
    return cfg.with_values(**changes)


def config_hash(cfg) -> str:
    from .config import serialize_config

    return hashlib.sha256(serialize_config(cfg).encode()).hexdigest()


def calibration_from_config(cfg):
    """Calibration file values with any network, optics or electrical overrides."""
    from dataclasses import replace

    from .calibration import load_calibration
    from .electrical import ElectricalParams

    cal = load_calibration(cfg.get("calibration.file"))
    top = {
        "network.areal_density": "areal_density",
        "network.length_mean": "length_mean",
        "network.diameter_mean": "diameter_mean",
        "decorate.coverage": "da_coverage",
        "optics.forward_fraction": "forward_fraction",
        "optics.medium_index": "medium_index",
    }
    cal = replace(cal, **{name: cfg[key] for key, name in top.items() if cfg.get(key) is not None})
    el = {}
    for key in ("resistivity_eff", "r_contact_pristine", "r_contact_da", "r_contact_welded", "solver_tolerance", "max_iterations", "preconditioner"):
        value = cfg.get("electrical." + key)
        if value is not None:
            el[key] = value
    try:
        electrical = ElectricalParams(**{**cal.electrical.__dict__, **el})
    except ValueError as exc:
        raise InvalidInput(str(exc)) from None
    return replace(cal, electrical=electrical)


def domain_from_config(cfg):
    from .netgen import Domain

    return Domain(cfg["network.domain_width"], cfg["network.domain_height"])


def mask_from_config(cfg, domain):
    from .masks import MaskFormatError, half_mask, load_mask_pbm, uniform_mask

    path = cfg.get("mask.file")
    try:
        if path:
            return load_mask_pbm(path, domain)
        pitch = cfg["mask.pitch_um"]
        return half_mask(domain, pitch) if cfg["mask.pattern"] == "half" else uniform_mask(domain, pitch)
    except (MaskFormatError, ValueError, OSError) as exc:
        raise InvalidInput(f"mask: {exc}") from None


def recipe_from_config(cfg, mask, default=("decorate", "expose", "anneal")):
    """Process recipe named by ``recipe.steps``; temperatures convert from C to K."""
    from .kinetics import AnnealStep, DecorateStep, ExposeStep
    from .pipeline import ProcessRecipe

    steps = []
    for name in cfg.steps or default:
        if name == "decorate":
            steps.append(DecorateStep(cfg["decorate.coverage"], cfg["decorate.compound"]))
        elif name == "expose":
            steps.append(
                ExposeStep(
                    mask,
                    cfg["expose.intensity_mw_cm2"],
                    cfg["expose.duration_s"],
                    cfg["expose.source_center_nm"],
                    cfg["expose.source_fwhm_nm"],
                )
            )
        else:
            steps.append(AnnealStep(cfg["anneal.temperature_c"] + 273.15, cfg["anneal.duration_s"]))
    return ProcessRecipe(tuple(steps))


def wavelengths_from_config(cfg):
    import numpy as np

    lo, hi, step = cfg["optics.wavelength_min"], cfg["optics.wavelength_max"], cfg["optics.wavelength_step"]
    if not (0 < lo < hi and step > 0):
        raise InvalidInput("optics wavelength grid must satisfy 0 < min < max and step > 0")
    wl = lo + step * np.arange(int(np.floor((hi - lo) / step + 1e-9)) + 1)
    if not np.any(np.isclose(wl, cfg["optics.reference_nm"], rtol=0, atol=1e-9)):
        raise InvalidInput(f"optics.reference_nm {cfg['optics.reference_nm']} is not on the wavelength grid")
    return np.round(wl, 9)


def network_from_config(cfg, cal):
    from .kinetics import NetworkState
    from .netgen import generate_network
    from .pipeline import network_params

    params = network_params(
        cal,
        domain_from_config(cfg),
        cfg["run.seed"],
        length_cv=cfg["network.length_cv"],
        diameter_cv=cfg["network.diameter_cv"],
    )
    return NetworkState.from_wires(generate_network(params), seed=cfg["run.seed"])


# ---------------------------------------------------------------------------
# subcommands; each returns the list of files written


def _write_bytes(path, data: bytes):
    with open(path, "wb") as f:
        f.write(data)
    return path


def cmd_generate(cfg, cal, out, args):
    state = network_from_config(cfg, cal)
    log.info("%d wires, %d junctions", len(state.wires), len(state.junctions))
    census = [dict(step=0, kind="initial", **state.census())]
    return [
        _write_bytes(os.path.join(out, "network.npz"), state.wires.tobytes()),
        _csv(census, out, "census"),
    ]


def _csv(obj, out, kind):
    from .report import emit_csv

    path = os.path.join(out, kind + ".csv")
    emit_csv(obj, path, kind)
    return path


def _processed(cfg, cal):
    from .pipeline import run_recipe

    state = network_from_config(cfg, cal)
    mask = mask_from_config(cfg, state.wires.domain)
    try:
        recipe = recipe_from_config(cfg, mask)
    except (TypeError, ValueError) as exc:
        raise InvalidInput(f"recipe: {exc}") from None
    state, census = run_recipe(state, recipe, cal)
    return state, mask, census


def cmd_run(cfg, cal, out, args):
    from .pipeline import visibility_report

    wl = wavelengths_from_config(cfg)
    state, mask, census = _processed(cfg, cal)
    report = visibility_report(state, mask, cal, wl, cfg["optics.reference_nm"])
    log.info("dT %.3f  dH %.3f points  Rs %.4g ohm/sq", report.delta_t, report.delta_h, report.rs_cond)
    return [
        _csv(census, out, "census"),
        _csv(report, out, "visibility"),
        _csv(report, out, "visibility_summary"),
        _write_bytes(os.path.join(out, "network.npz"), state.wires.tobytes()),
    ]


def cmd_sweep_tf(cfg, cal, out, args):
    from .pipeline import celsius_grid, fusing_temperature_sweep

    grid = celsius_grid(cfg["sweep.t_min_c"], cfg["sweep.t_max_c"], cfg["sweep.t_step_k"])
    results = fusing_temperature_sweep(
        cal,
        grid,
        diameters=cfg["sweep.diameters_nm"],
        variants=cfg["sweep.variants"],
        replicas=cfg["run.replicas"],
        seed=cfg["run.seed"],
        wires_per_replica=cfg["sweep.wires_per_replica"],
        duration=cfg["anneal.duration_s"],
    )
    for r in results:
        log.info("%-6s d=%5.1f nm  Tf=%.1f C", r.variant, r.diameter, r.tf_celsius)
    return [_csv(results, out, "sweep"), _csv(results, out, "sweep_curve")]


def cmd_resolution(cfg, cal, out, args):
    from .pipeline import linewidth_resolution_test

    results = linewidth_resolution_test(
        cal,
        cfg["resolution.linewidths_um"],
        replicas=cfg["resolution.replicas"],
        seed=cfg["run.seed"],
        line_length=cfg["resolution.line_length_um"],
    )
    for r in results:
        log.info("w=%5.1f um  P(percolate)=%.2f  P(pass)=%.2f", r.linewidth, r.percolation_probability, r.pass_probability)
    return [_csv(results, out, "resolution")]


def cmd_render(cfg, cal, out, args):
    from .svg import render_svg, subsample

    if args.subsample < 1:
        raise InvalidInput("--subsample must be >= 1")
    state, mask, census = _processed(cfg, cal)
    wires, junctions = subsample(state.wires, state.junctions, args.subsample)
    path = os.path.join(out, "network.svg")
    render_svg(wires, junctions, mask, path)
    return [path, _csv(census, out, "census")]


def cmd_calibrate(cfg, cal, out, args):
    from dataclasses import replace

    from .calibration import save_calibration
    from .fitting import calibrate

    fitted = calibrate(seed=cfg["run.seed"], base=cal, rounds=args.rounds)
    version = str(int(cal.version) + 1) if cal.version.isdigit() else "1"
    path = os.path.join(out, "calibration.txt")
    save_calibration(replace(fitted, version=version), path)
    return [path]


COMMANDS = {
    "generate": cmd_generate,
    "run": cmd_run,
    "sweep-tf": cmd_sweep_tf,
    "resolution-test": cmd_resolution,
    "render": cmd_render,
    "calibrate": cmd_calibrate,
}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    for var in _THREAD_VARS:
        # only effective before the numeric libraries load, which happens below
        os.environ.setdefault(var, str(args.threads))
    from .config import ConfigError

    started = _now()
    try:
        cfg = effective_config(args)
        cal = calibration_from_config(cfg)
        out = cfg["run.output_dir"]
        os.makedirs(out, exist_ok=True)
    except (InvalidInput, ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    from .report import RunManifest

    try:
        files = COMMANDS[args.command](cfg, cal, out, args)
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    manifest = RunManifest(args.command, config_hash(cfg), cfg["run.seed"], cal.version, started=started, finished=_now())
    for path in files:
        manifest.add_output(path)
    manifest.write(os.path.join(out, "manifest.json"))
    print(os.path.join(out, "manifest.json"))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
