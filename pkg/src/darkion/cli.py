"""Command-line entry point: ``darkion {modes,plan,map,tomo,figures}``.

Settings come from an optional JSON file (``--config``) overridden by flags.
Every document written embeds the resolved configuration.  Exit codes:
0 success, 2 configuration error, 3 feasibility failure, 4 certification
failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import fockengine as fe
from . import pulseplan as pp
from .errors import CutoffError, InvalidInputError, InversionError, ResolutionError
from .grid import alpha_axes
from .symplectic import mapping_squeezes, mode_scales
from .tomography import ReadoutConfig, compare, reconstruct_grid
from .trapmodes import IonPair, equilibrium_distance, normal_modes, ratio_grid
from .units import ANGULAR, DIMENSIONLESS, MASS, parse_quantity

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FEASIBILITY = 3
EXIT_CERTIFICATION = 4

OUTPUT_ENV = "DARKION_OUTPUT_DIR"

CONFIG_KEYS = {
    "m1", "m2", "omega2", "rabi", "eta2", "resolution_factor", "state", "cutoff",
    "grid", "readout", "seed", "output_dir",
}
GRID_KEYS = {"extent", "points"}
READOUT_KEYS = {"coupling", "n_max", "gamma", "shots", "sideband"}


class ConfigError(InvalidInputError):
    pass


@dataclass
class RunConfig:
    """Resolved settings; ``raw`` keeps the user's unit-tagged spellings."""

    raw: dict
    pair: Optional[IonPair] = None
    rabi: Optional[float] = None
    eta2: Optional[float] = None
    resolution_factor: float = pp.DEFAULT_RESOLUTION_FACTOR
    state: Optional[dict] = None
    cutoffs: tuple = (fe.DEFAULT_CUTOFF, fe.DEFAULT_CUTOFF)
    extent: float = 3.0
    points: int = 41
    readout: dict = field(default_factory=dict)
    seed: Optional[int] = None
    output_dir: Optional[str] = None

    def provenance(self) -> dict:
        """Configuration as embedded in outputs (the output location is left out)."""
        doc = {k: v for k, v in sorted(self.raw.items()) if k != "output_dir"}
        resolved = {}
        if self.pair is not None:
            resolved.update(m1_kg=self.pair.m1, m2_kg=self.pair.m2, omega2_rad_s=self.pair.omega2)
        if self.rabi is not None:
            resolved["rabi_rad_s"] = self.rabi
        if self.eta2 is not None:
            resolved["eta2"] = self.eta2
        resolved.update(cutoffs=list(self.cutoffs), extent=self.extent, points=self.points, seed=self.seed)
        resolved["resolution_factor"] = self.resolution_factor
        return {"input": doc, "resolved": resolved}


def _require(cfg: RunConfig, *names: str):
    for name in names:
        if getattr(cfg, name) is None:
            name = "m1" if name == "pair" else name
            flag = "--" + name.replace("_", "-")
            raise ConfigError(f"missing required field '{name}' ({flag})")


def _check_keys(doc: dict, allowed: set, where: str):
    if not isinstance(doc, dict):
        raise ConfigError(f"{where} must be a JSON object")
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")


def _field(fn, name: str, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except InvalidInputError as exc:
        raise ConfigError(f"field '{name}': {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"field '{name}': {exc}") from None


def _load_json_arg(text: str, name: str):
    try:
        if text.startswith("@"):
            with open(text[1:], encoding="utf-8") as fh:
                return json.load(fh)
        return json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"field '{name}': cannot read JSON ({exc})") from None


def build_config(args: argparse.Namespace) -> RunConfig:
    raw: dict = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {args.config!r}: {exc}") from None
    _check_keys(raw, CONFIG_KEYS, "config")
    raw = json.loads(json.dumps(raw))  # detached copy
    for key in ("m1", "m2", "omega2", "rabi", "eta2", "seed", "output_dir"):
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = value
    if getattr(args, "factor", None) is not None:
        raw["resolution_factor"] = args.factor
    if getattr(args, "state", None) is not None:
        raw["state"] = _load_json_arg(args.state, "state")
    if getattr(args, "cutoff", None) is not None:
        raw["cutoff"] = args.cutoff
    grid = dict(raw.get("grid", {}))
    _check_keys(grid, GRID_KEYS, "grid")
    for key in ("extent", "points"):
        if getattr(args, key, None) is not None:
            grid[key] = getattr(args, key)
    if grid:
        raw["grid"] = grid
    readout = dict(raw.get("readout", {}))
    _check_keys(readout, READOUT_KEYS, "readout")
    for key in READOUT_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            readout[key] = value
    if readout:
        raw["readout"] = readout

    cfg = RunConfig(raw=raw)
    if any(k in raw for k in ("m1", "m2", "omega2")):
        missing = [k for k in ("m1", "m2", "omega2") if k not in raw]
        if missing:
            raise ConfigError(f"missing required field '{missing[0]}' (--{missing[0]})")
        m1 = _field(parse_quantity, "m1", raw["m1"], MASS)
        m2 = _field(parse_quantity, "m2", raw["m2"], MASS)
        omega2 = _field(parse_quantity, "omega2", raw["omega2"], ANGULAR)
        cfg.pair = _field(IonPair, "m1/m2/omega2", m1, m2, omega2)
        _field(normal_modes, "m1", cfg.pair)  # rejects m1 < m2 up front
    omega2 = cfg.pair.omega2 if cfg.pair else None
    if "rabi" in raw:
        cfg.rabi = _field(parse_quantity, "rabi", raw["rabi"], ANGULAR, omega2)
    if "eta2" in raw:
        cfg.eta2 = _field(parse_quantity, "eta2", raw["eta2"], DIMENSIONLESS)
    if "resolution_factor" in raw:
        cfg.resolution_factor = _field(parse_quantity, "resolution_factor", raw["resolution_factor"], DIMENSIONLESS)
    cfg.state = raw.get("state")
    if "cutoff" in raw:
        cut = raw["cutoff"]
        cuts = cut if isinstance(cut, list) else [cut, cut]
        if len(cuts) != 2 or not all(isinstance(c, int) and not isinstance(c, bool) and c >= 4 for c in cuts):
            raise ConfigError("field 'cutoff': expected an integer >= 4 or a pair of them")
        cfg.cutoffs = tuple(cuts)
    if "extent" in grid:
        cfg.extent = _field(parse_quantity, "extent", grid["extent"], DIMENSIONLESS)
        if not cfg.extent > 0:
            raise ConfigError("field 'extent': must be positive")
    if "points" in grid:
        pts = grid["points"]
        if not isinstance(pts, int) or isinstance(pts, bool) or pts < 2:
            raise ConfigError("field 'points': expected an integer >= 2")
        cfg.points = pts
    cfg.readout = readout
    if "seed" in raw:
        if not isinstance(raw["seed"], int) or isinstance(raw["seed"], bool) or raw["seed"] < 0:
            raise ConfigError("field 'seed': expected a non-negative integer")
        cfg.seed = raw["seed"]
    cfg.output_dir = os.environ.get(OUTPUT_ENV) or raw.get("output_dir")
    return cfg


# -- output ------------------------------------------------------------------------


def atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _emit(cfg: RunConfig, name: str, text: str, stream=None) -> None:
    (stream or sys.stdout).write(text)
    if cfg.output_dir:
        atomic_write(os.path.join(cfg.output_dir, name), text)


def _csv_header(cfg: RunConfig, lines: list[str]) -> str:
    out = [f"# {line}" for line in lines]
    out.append("# config: " + json.dumps(cfg.provenance(), sort_keys=True))
    return "\n".join(out) + "\n"


# -- commands ------------------------------------------------------------------------


def cmd_modes(cfg: RunConfig) -> int:
    _require(cfg, "pair")
    pair = cfg.pair
    nm = normal_modes(pair)
    sc = mode_scales(pair)
    r_minus, r_plus = mapping_squeezes(pair)
    report = {
        "command": "modes",
        "config": cfg.provenance(),
        "ratio": pair.ratio,
        "s": nm.s,
        "phi": nm.phi,
        "omega_minus": {"value": nm.omega_minus, "unit": "rad/s", "over_omega2": nm.omega_minus / pair.omega2},
        "omega_plus": {"value": nm.omega_plus, "unit": "rad/s", "over_omega2": nm.omega_plus / pair.omega2},
        "omega1": {"value": pair.omega1, "unit": "rad/s"},
        "spring_constant": {"value": pair.k, "unit": "N/m"},
        "equilibrium_distance": {"value": equilibrium_distance(pair), "unit": "m"},
        "mode_rows": {
            "q_minus": nm.qrow_minus.tolist(),
            "q_plus": nm.qrow_plus.tolist(),
            "p_minus": nm.prow_minus.tolist(),
            "p_plus": nm.prow_plus.tolist(),
            "q_minus_normalized": nm.qrow_minus_normalized.tolist(),
            "q_plus_normalized": nm.qrow_plus_normalized.tolist(),
        },
        "eta_minus_ratio": nm.eta_minus_ratio,
        "eta_plus_ratio": nm.eta_plus_ratio,
        "mapping_squeezes": {"minus": r_minus, "plus": r_plus, "convention": "x -> exp(-r) x"},
        "readout_units": {"length": {"value": sc.x_dark, "unit": "m"}, "momentum": {"value": sc.p_dark, "unit": "kg m/s"}},
    }
    _emit(cfg, "modes.json", _json(report))
    return EXIT_OK


def cmd_plan(cfg: RunConfig) -> int:
    _require(cfg, "pair", "rabi", "eta2")
    schedule = _field(pp.build_schedule, "rabi/eta2", cfg.pair, cfg.rabi, cfg.eta2, cfg.resolution_factor)
    doc = {"command": "plan", "config": cfg.provenance(), "schedule": schedule.to_dict()}
    doc["feasible"] = schedule.feasible
    _emit(cfg, "plan.json", _json(doc))
    return EXIT_OK if schedule.feasible else EXIT_FEASIBILITY


def _axes(cfg: RunConfig):
    return alpha_axes(cfg.extent, cfg.points)


def _eigenmode_state(cfg: RunConfig) -> fe.TwoModeFockState:
    _require(cfg, "state")
    return _field(fe.state_from_spec, "state", cfg.state, cfg.cutoffs, cfg.pair)


def cmd_map(cfg: RunConfig) -> int:
    _require(cfg, "pair", "state")
    re, im = _axes(cfg)
    state = _eigenmode_state(cfg)
    doc = {"command": "map", "config": cfg.provenance(), "input_certified": state.certified}
    try:
        mapped_grid, mapped = fe.mapped_wigner(state, cfg.pair, re, im)
        oracle = fe.particle1_wigner_oracle(state, cfg.pair, re, im)
    except (CutoffError, ResolutionError) as exc:
        doc.update(certified=False, error=str(exc))
        _emit(cfg, "map.json", _json(doc))
        return EXIT_CERTIFICATION
    certified = bool(state.certified and mapped.certified)
    doc.update(
        certified=certified,
        tail_mass=mapped.tail_mass,
        metrics=compare(mapped_grid, oracle),
        oracle={"chi_shape": oracle.meta["chi_shape"], "drift": oracle.meta["drift"], "edge": oracle.meta["edge"]},
    )
    _emit(cfg, "map.json", _json(doc))
    if cfg.output_dir:
        head = ["mapped (-) mode Wigner function, displaced parity"]
        atomic_write(os.path.join(cfg.output_dir, "map_mapped.csv"), _csv_header(cfg, head) + _body(mapped_grid))
        head = ["dark-ion Wigner function, characteristic-function oracle"]
        atomic_write(os.path.join(cfg.output_dir, "map_oracle.csv"), _csv_header(cfg, head) + _body(oracle))
    return EXIT_OK if certified else EXIT_CERTIFICATION


def _body(grid) -> str:
    # WignerGrid.to_csv minus its own comment lines, so the config header comes first
    return "".join(line + "\n" for line in grid.to_csv().splitlines() if not line.startswith("#"))


def _readout_config(cfg: RunConfig) -> ReadoutConfig:
    r = cfg.readout
    if "coupling" in r:
        omega2 = cfg.pair.omega2 if cfg.pair else None
        coupling = _field(parse_quantity, "coupling", r["coupling"], ANGULAR, omega2)
    elif cfg.pair is not None and cfg.rabi is not None and cfg.eta2 is not None:
        coupling = cfg.rabi * cfg.eta2 * normal_modes(cfg.pair).eta_minus_ratio
    else:
        coupling = 1.0
    n_max = r.get("n_max")
    shots = r.get("shots")
    for name, value in (("n_max", n_max), ("shots", shots)):
        if value is not None and (not isinstance(value, int) or isinstance(value, bool)):
            raise ConfigError(f"field '{name}': expected an integer")
    gamma = _field(float, "gamma", r.get("gamma", 0.0))
    return _field(ReadoutConfig, "readout", coupling=coupling, n_max=n_max, gamma=gamma, shots=shots,
                  sideband=r.get("sideband", "red"))


def cmd_tomo(cfg: RunConfig) -> int:
    _require(cfg, "state")
    readout = _readout_config(cfg)
    if readout.shots and cfg.seed is None:
        raise ConfigError("missing required field 'seed' (--seed) for shot-noise runs")
    re, im = _axes(cfg)
    doc = {"command": "tomo", "config": cfg.provenance()}
    try:
        if isinstance(cfg.state, dict) and "readout" in cfg.state:
            if set(cfg.state) != {"readout"}:
                raise ConfigError("field 'state': a 'readout' spec takes no other keys")
            rho = _field(fe.single_mode_from_spec, "state", cfg.state["readout"], cfg.cutoffs[0])
            reference = fe.wigner_displaced_parity(rho, re, im)
            certified = fe.single_mode_tail(rho) < fe.TAIL_THRESHOLD
        else:
            _require(cfg, "pair")
            state = _eigenmode_state(cfg)
            mapped = fe.map_state(state, cfg.pair)
            rho = fe.partial_trace(mapped, "-")
            reference = fe.particle1_wigner_oracle(state, cfg.pair, re, im)
            certified = bool(state.certified and mapped.certified)
        report = reconstruct_grid(rho, re, im, readout, seed=cfg.seed, reference=reference)
    except (CutoffError, ResolutionError, InversionError) as exc:
        doc.update(certified=False, error=str(exc))
        _emit(cfg, "tomo.json", _json(doc))
        return EXIT_CERTIFICATION
    flags = report.grid.flags
    doc.update(
        certified=certified,
        metrics=report.metrics,
        max_residual=float(report.residuals.max()),
        flagged_points=int(np.count_nonzero(flags)),
        rows=int(flags.size),
    )
    head = [
        "reconstructed Wigner function of the (-) mode (sideband readout)",
        f"convention: {report.grid.convention}",
    ]
    csv_text = _csv_header(cfg, head) + _body(report.grid)
    out_dir = cfg.output_dir or "."
    atomic_write(os.path.join(out_dir, "tomo.csv"), csv_text)
    atomic_write(os.path.join(out_dir, "tomo.json"), _json(doc))
    sys.stdout.write(_json(doc))
    return EXIT_OK if certified else EXIT_CERTIFICATION


def _fmt(v: float) -> str:
    return f"{v:.10g}"


def cmd_figures(cfg: RunConfig, which: str, ratio_min: float, ratio_max: float, steps: int, spacing: str,
                eta2: float) -> int:
    if which not in ("2", "3", "4"):
        raise ConfigError(f"field 'which': unknown figure {which!r}; choose 2, 3 or 4")
    ratios = _field(ratio_grid, "ratio range", ratio_min, ratio_max, steps, spacing)
    if which == "2":
        cols = ("ratio", "eta_minus_ratio", "eta_plus_ratio")
        rows = [pp.figure2_row(float(r)) for r in ratios]
        head = ["figure 2: bright-ion Lamb-Dicke parameters of the two modes in units of the lone-ion value"]
    elif which == "3":
        cols = pp.FIGURE3_COLUMNS
        rows = [pp.figure3_row(float(r)) for r in ratios]
        head = [
            "figure 3: pulse durations in units of 1/(eta2^2 * rabi)",
            "t_squeeze_*_lns: squeeze each mode by ln s; t_squeeze_*: squeezes of the exact mapping",
        ]
    else:
        cols = pp.FIGURE4_COLUMNS
        rows = [pp.figure4_row(float(r), eta2) for r in ratios]
        head = [
            f"figure 4: mixing time in units of 1/rabi for eta2 = {_fmt(eta2)}",
            "omega2_over_*: inverse frequency scales in units of 1/omega2",
        ]
    cfg.raw["figure"] = {"which": which, "ratio_min": ratio_min, "ratio_max": ratio_max, "steps": steps,
                         "spacing": spacing, "eta2": eta2}
    text = _csv_header(cfg, head) + ",".join(cols) + "\n"
    text += "".join(",".join(_fmt(v) for v in row) + "\n" for row in rows)
    _emit(cfg, f"figure{which}.csv", text)
    return EXIT_OK


# -- argument parsing ----------------------------------------------------------------


def _add_pair(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--m1", help="dark-ion mass, e.g. 27u")
    p.add_argument("--m2", help="bright-ion mass, e.g. 9.012u")
    p.add_argument("--omega2", help="lone bright-ion angular trap frequency, e.g. 2pi*1MHz")
    p.add_argument("--output-dir", dest="output_dir", help=f"directory for output files (env {OUTPUT_ENV} wins)")


def _add_drive(p: argparse.ArgumentParser):
    p.add_argument("--rabi", help="Rabi frequency, e.g. 0.01*omega2 or 2pi*10kHz")
    p.add_argument("--eta2", help="lone bright-ion Lamb-Dicke parameter")
    p.add_argument("--factor", help="resolution factor (default 10)")


def _add_state(p: argparse.ArgumentParser):
    p.add_argument("--state", help="state spec as JSON text or @file")
    p.add_argument("--cutoff", type=int, help="Fock cutoff per mode (default 50)")
    p.add_argument("--extent", type=float, help="grid half-width in alpha (default 3)")
    p.add_argument("--points", type=int, help="grid points per axis (default 41)")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="darkion", description="Reconstruct the motional Wigner function of a dark ion through its bright partner.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("modes", help="normal-mode analysis")
    _add_pair(p)

    p = sub.add_parser("plan", help="laser pulse schedule and sideband-resolution margins")
    _add_pair(p)
    _add_drive(p)

    p = sub.add_parser("map", help="Fock-space mapping checked against the characteristic-function oracle")
    _add_pair(p)
    _add_state(p)

    p = sub.add_parser("tomo", help="simulated sideband tomography of the mapped state")
    _add_pair(p)
    _add_drive(p)
    _add_state(p)
    p.add_argument("--coupling", help="sideband Rabi rate rabi*eta, e.g. 2pi*5kHz")
    p.add_argument("--n-max", dest="n_max", type=int, help="highest fitted Fock level (default: automatic)")
    p.add_argument("--gamma", type=float, help="signal damping rate in 1/s")
    p.add_argument("--shots", type=int, help="shots per time point (default: noiseless)")
    p.add_argument("--sideband", choices=("red", "blue"))
    p.add_argument("--seed", type=int, help="master seed for shot noise")

    p = sub.add_parser("figures", help="ratio scans of mode and pulse quantities (figure ids 2, 3, 4)")
    p.add_argument("which", help="figure number: 2, 3 or 4")
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--ratio-min", dest="ratio_min", type=float, default=1.0)
    p.add_argument("--ratio-max", dest="ratio_max", type=float, default=20.0)
    p.add_argument("--steps", type=int, default=40)
    p.add_argument("--spacing", choices=("linear", "geometric"), default="linear")
    p.add_argument("--fig-eta2", dest="fig_eta2", type=float, default=0.2, help="eta2 for figure 4")
    p.add_argument("--output-dir", dest="output_dir")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        if args.command == "modes":
            return cmd_modes(cfg)
        if args.command == "plan":
            return cmd_plan(cfg)
        if args.command == "map":
            return cmd_map(cfg)
        if args.command == "tomo":
            return cmd_tomo(cfg)
        return cmd_figures(cfg, args.which, args.ratio_min, args.ratio_max, args.steps, args.spacing, args.fig_eta2)
    except InvalidInputError as exc:
        print(f"darkion: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
