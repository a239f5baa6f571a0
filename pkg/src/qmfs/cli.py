"""Command-line entry point.

Exit codes: 0 success, 1 config or usage error, 2 model instability,
3 any other numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import os
import sys
import warnings

import numpy as np

from . import __version__, _kernels, model as qmodel, scenarios
from .dynamics import assemble_drift, output_routing
from .errors import ConfigError, InstabilityError, QMFSError
from .model import parse_quadrature
from .spectra import output_spectrum
from .steadystate import duan_quantity, quadrature_variance, solve_lyapunov, sweep

EXIT_OK, EXIT_CONFIG, EXIT_UNSTABLE, EXIT_NUMERIC = 0, 1, 2, 3
DEFAULT_QUADRATURES = "X+,X-,P+,P-"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# helpers

def load_config(ref: str) -> qmodel.SystemConfig:
    """A path to a JSON file, or the name of a shipped preset."""
    if os.path.exists(ref) or ref.endswith(".json"):
        return qmodel.load(ref)
    return qmodel.load_preset(ref)


def config_hash(config: qmodel.SystemConfig) -> str:
    return hashlib.sha256(qmodel.dumps(config).encode()).hexdigest()


def file_sha256(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def write_manifest(out_dir, command: str, configs: dict, files) -> str:
    """Reproducibility record: no timestamps, so reruns are byte-identical."""
    manifest = {
        "tool": "qmfs",
        "version": __version__,
        "backend": _kernels.backend(),
        "command": command,
        "config_sha256": {k: config_hash(v) for k, v in sorted(configs.items())},
        "files": {os.path.basename(p): file_sha256(p) for p in sorted(files)},
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _num(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_num(v) for v in r])
    return buf.getvalue()


def _emit(text: str, out) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _quadratures(text: str):
    return [parse_quadrature(t.strip()) for t in text.split(",") if t.strip()]


def set_path(doc, path: str, value):
    """Set ``value`` at a dotted path in a JSON document.

    Integer segments index lists and ``*`` applies to every element, e.g.
    ``mechanical.*.n_thermal`` or ``pump_tones.tones.1.phase_rad``.
    """
    head, _, rest = path.partition(".")
    if head == "*":
        if not isinstance(doc, list):
            raise ConfigError(path, "'*' needs a list")
        targets = range(len(doc))
    elif isinstance(doc, list):
        try:
            targets = [int(head)]
            doc[targets[0]]
        except (ValueError, IndexError):
            raise ConfigError(path, f"bad list index {head!r}")
    elif isinstance(doc, dict):
        if head not in doc:
            raise ConfigError(path, f"no field {head!r}; available: {', '.join(doc)}")
        targets = [head]
    else:
        raise ConfigError(path, "path goes through a scalar")
    for t in targets:
        if rest:
            set_path(doc[t], rest, value)
        else:
            doc[t] = value


# ---------------------------------------------------------------------------
# subcommands

def cmd_validate(args) -> int:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        cfg = qmodel.validate(load_config(args.config))
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    model = assemble_drift(cfg, check_stability=False)
    worst = float(np.max(model.eigenvalues().real))
    print(f"ok: {args.config} (max Re(lambda) = {worst!r} rad/s)")
    if worst >= 0:
        raise InstabilityError(f"unstable model: max Re(lambda) = {worst:.6g} rad/s")
    return EXIT_OK


def cmd_solve(args) -> int:
    cfg = qmodel.validate(load_config(args.config))
    V = solve_lyapunov(assemble_drift(cfg, probe_backaction=not args.no_probe_backaction))
    qs = _quadratures(args.quadratures)
    rows = [[str(q), quadrature_variance(V, q)] for q in qs]
    d = duan_quantity(V)
    rows += [["duan", d.value], ["duan_db", d.margin_db],
             ["uncertainty_min_eig", V.uncertainty_min_eig()]]
    _emit(_csv(["quantity", "value"], rows), args.out)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    cfg = qmodel.validate(load_config(args.config))
    model = assemble_drift(cfg, probe_backaction=not args.no_probe_backaction)
    routing = output_routing(model, args.cavity, args.lo_phase)
    grid = None
    if args.points:
        from .spectra import default_grid
        grid = default_grid(model, args.points)
    _emit(output_spectrum(model, routing, grid).to_csv(), args.out)
    return EXIT_OK


def cmd_scenario(args) -> int:
    kw = {"threads": args.threads}
    if args.name == "fig2":
        report = scenarios.scenario_fig2(args.preset or "weak", **kw)
    elif args.name == "fig3":
        report = scenarios.scenario_fig3(args.preset or "Xp_to_Pm",
                                         probe_backaction=not args.no_probe_backaction, **kw)
    elif args.name == "fig4":
        if args.preset:
            raise ConfigError("--preset", "fig4 takes no preset")
        report = scenarios.scenario_fig4(probe_backaction=not args.no_probe_backaction, **kw)
    else:
        if args.preset:
            raise ConfigError("--preset", "force takes no preset")
        report = scenarios.scenario_force_sensing_note(**kw)
    for k, v in report.summary.items():
        print(f"{k}: {_num(v)}")
    if args.out:
        files = report.write(args.out)
        summary = os.path.join(args.out, f"{report.scenario}_summary.json")
        with open(summary, "w", encoding="utf-8") as fh:
            fh.write(json.dumps({k: (float(v) if isinstance(v, (float, np.floating)) else v)
                                for k, v in report.summary.items()}, indent=2, sort_keys=True) + "\n")
        files.append(summary)
        write_manifest(args.out, f"scenario {args.name} {args.preset or ''}".strip(),
                       report.configs, files)
    return EXIT_OK


def cmd_sweep(args) -> int:
    base = load_config(args.config)
    doc = qmodel.to_dict(base)
    values = [float(v) for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError("--values", "need at least one value")
    configs = []
    for v in values:
        d = copy.deepcopy(doc)
        set_path(d, args.param, v)
        configs.append(qmodel.validate(qmodel.from_dict(d)))
    qs = _quadratures(args.quadratures)
    rows = sweep(configs, qs, args.threads)
    header = [args.param] + [str(q) for q in qs] + ["error"]
    text = _csv(header, [[v] + [r[str(q)] for q in qs] + [r["error"]] for v, r in zip(values, rows)])
    _emit(text, args.out)
    if args.out:
        write_manifest(os.path.dirname(os.path.abspath(args.out)),
                       f"sweep {args.param}", {"base": base}, [args.out])
    return EXIT_OK if all(not r["error"] for r in rows) else EXIT_UNSTABLE


def cmd_presets(args) -> int:
    for name in qmodel.preset_names():
        print(name)
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qmfs", description="Two-oscillator QMFS measurement simulator.")
    p.add_argument("--version", action="version", version=f"qmfs {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("validate", help="check a config file or preset")
    s.add_argument("config")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("solve", help="steady-state variances")
    s.add_argument("config")
    s.add_argument("--quadratures", default=DEFAULT_QUADRATURES,
                   help="comma list, e.g. 'X+,P-,X1,X+:P-@0.5' (default %(default)s)")
    s.add_argument("--no-probe-backaction", action="store_true")
    s.add_argument("--out", help="CSV file (default stdout)")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("spectrum", help="detected output spectrum as CSV")
    s.add_argument("config")
    s.add_argument("--cavity", choices=("pump", "probe"), default="pump")
    s.add_argument("--lo-phase", type=float, default=None,
                   help="homodyne LO phase in rad (default: phase-insensitive detection)")
    s.add_argument("--points", type=int, default=None)
    s.add_argument("--no-probe-backaction", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("scenario", help="run a figure pipeline")
    s.add_argument("name", choices=sorted(scenarios.SCENARIOS))
    s.add_argument("--preset", help="fig2: weak|strong; fig3: Xp_to_Pp|Xp_to_Pm|tomography")
    s.add_argument("--out", help="directory for panel CSVs and the run manifest")
    s.add_argument("--threads", type=int, default=None, help="worker cap (default QMFS_THREADS)")
    s.add_argument("--no-probe-backaction", action="store_true")
    s.set_defaults(func=cmd_scenario)

    s = sub.add_parser("sweep", help="vary one config field and solve each point")
    s.add_argument("config")
    s.add_argument("--param", required=True, help="dotted JSON path, '*' matches list items")
    s.add_argument("--values", required=True, help="comma-separated numbers")
    s.add_argument("--quadratures", default=DEFAULT_QUADRATURES)
    s.add_argument("--threads", type=int, default=None)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("presets", help="list shipped presets")
    s.set_defaults(func=cmd_presets)
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InstabilityError as exc:
        print(f"instability: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except QMFSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
