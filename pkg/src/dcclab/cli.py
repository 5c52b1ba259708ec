"""Command-line front end: dcclab {validate-theorem1,sweep,simulate,scenario-gen}.

Settings come from an optional TOML file (``--config``) whose sections mirror
the flags; flags given on the command line win. CSV output always has a
header row and uses round-trip decimal formatting.

Exit codes: 0 success, 2 usage, 3 accuracy failure, 4 infeasible QoS
(with --strict), 5 I/O.
"""

import argparse
import csv
import io
import json
import math
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .asymptotes import asymptote_for_case, asymptote_ii, sinr_gap
from .closed_form import theorem1_closed_form
from .distributions import (ALL_CASES, DEFAULT_MIXTURE_CAP, CognitionCase, ScaledF)
from .engine import avg_dcc_adaptive, canonical_inputs, projected_rate
from .errors import AccuracyError, DccError, InfeasibleQosError
from .fbl import QosSpec
from .scenario import (LayoutSpec, PowerSpec, Scenario, allocate, build_experiment, generate,
                       monte_carlo_cases, worker_count)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXIT_OK, EXIT_USAGE, EXIT_ACCURACY, EXIT_INFEASIBLE, EXIT_IO = 0, 2, 3, 4, 5
RELIABILITY_MARGIN = 1.2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str = ""
    n: int = 200
    cases: list = field(default_factory=lambda: [str(c) for c in ALL_CASES])
    snr_db: list = None
    eps: list = field(default_factory=lambda: [1e-5])
    m0: list = field(default_factory=lambda: [2.0])
    mi: list = field(default_factory=lambda: [2.0])
    trials: int = None
    seed: int = 0
    out: str = None
    tolerance: float = 1e-4
    mixture_cap: int = DEFAULT_MIXTURE_CAP
    strict: bool = False
    scenario: str = None
    ue: int = 0
    layout: LayoutSpec = field(default_factory=LayoutSpec)
    power: PowerSpec = field(default_factory=PowerSpec)


DEFAULT_GRIDS = {
    "validate-theorem1": "0:20:0.5",
    "sweep": "0:60:2",
    "simulate": "20:20:1",
}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def parse_grid(text):
    """'start:stop:step' (inclusive stop) or a comma list -> list of floats."""
    text = str(text).strip()
    if not text:
        return []
    if ":" in text:
        try:
            start, stop, step = (float(v) for v in text.split(":"))
        except ValueError:
            raise UsageError(f"grid must be start:stop:step, got {text!r}") from None
        if step <= 0:
            raise UsageError("grid step must be positive")
        if stop < start:
            return []
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(count)]
    return parse_floats(text)


def parse_floats(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from None


def parse_cases(text):
    items = text if isinstance(text, (list, tuple)) else str(text).split(",")
    try:
        return [str(CognitionCase.parse(c)) for c in items if str(c).strip()]
    except DccError as exc:
        raise UsageError(str(exc)) from None


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML file with run settings")
    common.add_argument("--case", help="comma list of cognition cases, e.g. I/I,I/D,D/D")
    common.add_argument("--snr-db", help="mean SINR grid start:stop:step (dB)")
    common.add_argument("--eps", help="comma list of target BLERs")
    common.add_argument("--m0", help="comma list of signal shapes")
    common.add_argument("--mi", help="comma list of EIP shapes")
    common.add_argument("--n", type=int, help="blocklength in channel uses")
    common.add_argument("--trials", type=int, help="Monte Carlo trials")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--reuse", type=int, choices=(1, 3), help="frequency reuse factor")
    common.add_argument("--mixture-cap", type=int, help="largest allowed level-M mixture")
    common.add_argument("--tolerance", type=float, help="relative error threshold")
    common.add_argument("--strict", action="store_true", default=None,
                        help="exit with status 4 when a QoS target is infeasible")
    common.add_argument("--scenario", help="scenario file produced by scenario-gen")
    common.add_argument("--ue", type=int, help="device of interest in the scenario")
    common.add_argument("--ue-per-cell", type=int, help="devices per cell")

    parser = argparse.ArgumentParser(prog="dcclab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate-theorem1", parents=[common],
                   help="series closed form against quadrature")
    sub.add_parser("sweep", parents=[common], help="projected rates, asymptotes and SINR gaps")
    sub.add_parser("simulate", parents=[common], help="Monte Carlo actual BLER in a scenario")
    sub.add_parser("scenario-gen", parents=[common], help="generate and save a scenario")
    return parser


def _section(doc, name):
    sec = doc.get(name, {})
    if not isinstance(sec, dict):
        raise UsageError(f"config section [{name}] must be a table")
    return sec


def load_config(args):
    """Merge defaults, the TOML file and command-line flags into a RunConfig."""
    cfg = RunConfig(command=args.command)
    layout = {}
    power = {}
    grid_text = None
    if args.config:
        try:
            with open(args.config, "rb") as fh:
                doc = tomllib.load(fh)
        except OSError:
            raise
        except tomllib.TOMLDecodeError as exc:
            raise UsageError(f"cannot parse {args.config}: {exc}") from None
        qos = _section(doc, "qos")
        grid = _section(doc, "grid")
        run = _section(doc, "run")
        layout.update(_section(doc, "layout"))
        power.update(_section(doc, "power"))
        if "n" in qos:
            cfg.n = int(qos["n"])
        if "eps" in qos:
            cfg.eps = parse_floats(qos["eps"] if isinstance(qos["eps"], list) else [qos["eps"]])
        if "snr_db" in grid:
            grid_text = grid["snr_db"]
        if "cases" in grid:
            cfg.cases = parse_cases(grid["cases"])
        for key in ("m0", "mi"):
            if key in grid:
                val = grid[key]
                setattr(cfg, key, parse_floats(val if isinstance(val, list) else [val]))
        for key in ("trials", "seed", "out", "tolerance", "mixture_cap", "strict", "scenario", "ue"):
            if key in run:
                setattr(cfg, key, run[key])

    if args.n is not None:
        cfg.n = args.n
    if args.eps is not None:
        cfg.eps = parse_floats(args.eps)
    if args.case is not None:
        cfg.cases = parse_cases(args.case)
    if args.m0 is not None:
        cfg.m0 = parse_floats(args.m0)
    if args.mi is not None:
        cfg.mi = parse_floats(args.mi)
    if args.snr_db is not None:
        grid_text = args.snr_db
    for key in ("trials", "seed", "out", "tolerance", "mixture_cap", "strict", "scenario", "ue"):
        val = getattr(args, key)
        if val is not None:
            setattr(cfg, key, val)
    if args.reuse is not None:
        layout["reuse"] = args.reuse
    if args.ue_per_cell is not None:
        layout["ue_per_cell"] = args.ue_per_cell
    if args.seed is not None and "seed" not in layout:
        layout["seed"] = args.seed
    elif "seed" not in layout:
        layout["seed"] = cfg.seed

    cfg.snr_db = parse_grid(grid_text if grid_text is not None else DEFAULT_GRIDS.get(args.command, "20"))
    try:
        cfg.layout = LayoutSpec(**layout)
        cfg.power = PowerSpec(**{k: float(v) for k, v in power.items()})
    except TypeError as exc:
        raise UsageError(f"unknown layout/power field: {exc}") from None
    if cfg.trials is None:
        cfg.trials = int(math.ceil(10.0 / min(cfg.eps))) if cfg.eps else 0
    _validate(cfg)
    return cfg


def _validate(cfg):
    if cfg.command in ("validate-theorem1", "sweep", "simulate") and not cfg.snr_db:
        raise UsageError("the SINR grid is empty")
    if not cfg.eps or not cfg.m0 or not cfg.mi or not cfg.cases:
        raise UsageError("case, eps, m0 and mi lists must be nonempty")
    if cfg.tolerance < 0:
        raise UsageError("tolerance must be >= 0")
    if cfg.trials < 1 and cfg.command == "simulate":
        raise UsageError("trials must be positive")
    for m in cfg.m0 + cfg.mi:
        if not m >= 0.5:
            raise UsageError(f"shape parameters must be >= 0.5, got {m}")
    for e in cfg.eps:
        if not 0.0 < e < 0.5:
            raise UsageError(f"eps must lie in (0, 0.5), got {e}")


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def fmt(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(rows, header, out):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(row.get(h)) for h in header])
    write_text(buf.getvalue(), out)


def write_text(text, out):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _parallel(fn, items):
    workers = worker_count()
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

THEOREM1_HEADER = ["m0", "gamma_bar_db", "closed_form", "quadrature", "rel_error"]


def cmd_validate_theorem1(cfg):
    """Series closed form against quadrature for m_I = 0.5; fails above the tolerance."""
    qos = QosSpec(cfg.n, cfg.eps[0])

    def point(item):
        m0, db = item
        gbar = 10.0 ** (db / 10.0)
        cf = theorem1_closed_form(m0, gbar, qos).avg_rate
        quad = avg_dcc_adaptive(ScaledF(m0, 0.5, gbar, 3.0), qos).avg_rate
        return {"m0": m0, "gamma_bar_db": db, "closed_form": cf, "quadrature": quad,
                "rel_error": abs(cf - quad) / abs(quad)}

    rows = _parallel(point, [(m0, db) for m0 in cfg.m0 for db in cfg.snr_db])
    rows.sort(key=lambda r: (r["m0"], r["gamma_bar_db"]))
    write_csv(rows, THEOREM1_HEADER, cfg.out)
    worst = max(r["rel_error"] for r in rows)
    if not worst <= cfg.tolerance or cfg.tolerance == 0:
        print(f"dcclab: worst relative error {worst:.3e} exceeds tolerance {cfg.tolerance:g}",
              file=sys.stderr)
        return EXIT_ACCURACY
    return EXIT_OK


SWEEP_HEADER = ["case", "m0", "mi", "eps", "n", "gamma_bar_db", "projected_rate",
                "projected_rate_raw", "asymptote_rate", "sinr_gap_db", "closed_form_rate",
                "infeasible"]


def _sweep_point(cfg, case, m0, mi, eps, db):
    qos = QosSpec(cfg.n, eps)
    gbar = 10.0 ** (db / 10.0)
    row = {"case": case, "m0": m0, "mi": mi, "eps": eps, "n": cfg.n, "gamma_bar_db": db,
           "infeasible": False}
    cc = CognitionCase.parse(case)
    try:
        if cc.interference == "M":
            sc = generate(cfg.layout, cfg.power, m0, mi)
            exp = build_experiment(sc, cfg.ue, db, cfg.mixture_cap)
            alloc = allocate(cc, exp, qos)
            raw = float(alloc.projected[0])
            row["infeasible"] = bool(alloc.infeasible[0])
        else:
            signal, eip = canonical_inputs(m0, mi, gbar)
            raw = projected_rate(cc, signal, eip, qos).avg_rate
    except InfeasibleQosError:
        raw = 0.0
        row["infeasible"] = True
    row["projected_rate_raw"] = raw
    row["projected_rate"] = max(raw, 0.0)
    line = asymptote_for_case(cc, m0, mi, qos)
    if line is not None:
        row["asymptote_rate"] = float(line.value(db))
        row["sinr_gap_db"] = sinr_gap(line, asymptote_ii(m0, mi, qos))
    if case == "I/I" and mi == 0.5:
        try:
            row["closed_form_rate"] = theorem1_closed_form(m0, gbar, qos).avg_rate
        except AccuracyError:
            # the series runs out of binary64 headroom at high SINR; leave the cell empty
            pass
    return row


def cmd_sweep(cfg):
    """Projected rate, asymptote and SINR gap per case and grid point."""
    items = [(c, m0, mi, e, db) for c in cfg.cases for m0 in cfg.m0 for mi in cfg.mi
             for e in cfg.eps for db in cfg.snr_db]
    rows = _parallel(lambda it: _sweep_point(cfg, *it), items)
    order = {c: i for i, c in enumerate(cfg.cases)}
    rows.sort(key=lambda r: (order[r["case"]], r["m0"], r["mi"], r["eps"], r["gamma_bar_db"]))
    write_csv(rows, SWEEP_HEADER, cfg.out)
    if cfg.strict and any(r["infeasible"] for r in rows):
        print("dcclab: QoS target infeasible at some grid points", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


SIMULATE_HEADER = ["case", "gamma_bar_db", "configuration", "projected_rate", "projected_rate_raw",
                   "empirical_bler", "ci_half_width", "mean_realized_rate", "trials",
                   "reliability_violation", "infeasible"]


def _load_scenario(cfg):
    if cfg.scenario:
        with open(cfg.scenario, encoding="utf-8") as fh:
            return Scenario.loads(fh.read())
    return generate(cfg.layout, cfg.power, cfg.m0[0], cfg.mi[0])


def cmd_simulate(cfg):
    """Monte Carlo actual BLER per case; level-M cases also get one row per active set."""
    sc = _load_scenario(cfg)
    rows = []
    for eps in cfg.eps:
        qos = QosSpec(cfg.n, eps)
        for db in cfg.snr_db:
            exp = build_experiment(sc, cfg.ue, db, cfg.mixture_cap)
            res = monte_carlo_cases(exp, cfg.cases, qos, cfg.trials, cfg.seed)
            for case in cfg.cases:
                agg, per = res[case]
                stats = [("all", agg)]
                if case.endswith("/M") and len(per) > 1:
                    stats += [("-".join(str(i) for i in p.configuration), p) for p in per]
                for label, st in stats:
                    rows.append({"case": case, "gamma_bar_db": db, "configuration": label,
                                 "projected_rate": max(st.projected_rate, 0.0),
                                 "projected_rate_raw": st.projected_rate,
                                 "empirical_bler": st.empirical_bler,
                                 "ci_half_width": st.ci_half_width,
                                 "mean_realized_rate": st.mean_rate, "trials": st.trials,
                                 "reliability_violation": st.empirical_bler > RELIABILITY_MARGIN * eps,
                                 "infeasible": st.infeasible, "eps": eps})
    header = SIMULATE_HEADER if len(cfg.eps) == 1 else ["eps"] + SIMULATE_HEADER
    write_csv(rows, header, cfg.out)
    if cfg.strict and any(r["infeasible"] for r in rows):
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_scenario_gen(cfg):
    """Write a scenario file and print its summary."""
    sc = generate(cfg.layout, cfg.power, cfg.m0[0], cfg.mi[0])
    write_text(sc.dumps(), cfg.out or "scenario.json")
    print(json.dumps(sc.summary(), sort_keys=True))
    return EXIT_OK


COMMANDS = {
    "validate-theorem1": cmd_validate_theorem1,
    "sweep": cmd_sweep,
    "simulate": cmd_simulate,
    "scenario-gen": cmd_scenario_gen,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            warnings.showwarning = lambda msg, *a, **k: print(f"dcclab: warning: {msg}", file=sys.stderr)
            return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"dcclab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"dcclab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except AccuracyError as exc:
        print(f"dcclab: accuracy failure: {exc}", file=sys.stderr)
        return EXIT_ACCURACY
    except InfeasibleQosError as exc:
        print(f"dcclab: infeasible QoS: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except DccError as exc:
        print(f"dcclab: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
