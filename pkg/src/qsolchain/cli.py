"""Command-line driver: ``qsolchain {soliton,stage1,stage2,concurrence,pipeline,selftest}``.

Configuration files are flat ``key = value`` text with ``#`` comments.  Keys
are the :class:`~qsolchain.protocol.ProtocolConfig` fields plus a few run
options (``s_list``, ``stage2_elapsed``, ``soliton_sample_step``).  Float
values may use ``pi`` and basic arithmetic, e.g. ``beta = pi/4``.
"""
from __future__ import annotations

import argparse
import ast
import csv
import dataclasses
import json
import logging
import math
import operator
import os
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__, chain, protocol
from .errors import ParseError, QSolChainError, ValidationError
from .scs import SphereDirection

log = logging.getLogger("qsolchain")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_SELFTEST = 0, 1, 2, 3
THREADS_ENV = "QSOLCHAIN_THREADS"

INT_KEYS = {"two_s", "N", "n_A", "n_B", "n_theta", "n_phi"}
FLOAT_KEYS = {"g", "h_A", "h_B", "beta", "lambda_beta", "h", "phi0", "t0", "t1", "t1_window",
              "t1_step", "t2", "t3_window", "t3_step", "dt", "soliton_sample_step"}
QUBIT_KEYS = {"qubit_A", "qubit_B"}
LIST_KEYS = {"s_list": int, "stage2_elapsed": float}
OPTION_KEYS = {"s_list", "stage2_elapsed", "soliton_sample_step"}


@dataclass(frozen=True)
class RunOptions:
    """Output selection that does not change the physics of a run."""

    s_list: tuple = (4, 10, 20)
    stage2_elapsed: tuple = (400.0, 800.0)
    soliton_sample_step: float = 10.0

    def __post_init__(self):
        if not self.s_list or any(s < 1 for s in self.s_list):
            raise ValidationError("s_list", "needs positive two_s values")
        if not self.stage2_elapsed or any(t < 0 for t in self.stage2_elapsed):
            raise ValidationError("stage2_elapsed", "needs non-negative elapsed times")
        if not self.soliton_sample_step > 0:
            raise ValidationError("soliton_sample_step", "must be positive")


# -- config parsing -----------------------------------------------------------

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}


def _eval_number(text):
    def walk(node):
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            return node.value
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](walk(node.left), walk(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            return _UNARY[type(node.op)](walk(node.operand))
        raise ValueError(text)

    return walk(ast.parse(text.strip(), mode="eval").body)


def _parse_value(key, text):
    try:
        if key in INT_KEYS:
            value = _eval_number(text)
            if float(value) != int(value):
                raise ValueError(text)
            return int(value)
        if key in FLOAT_KEYS:
            if text.strip().lower() in ("none", "auto"):
                return None
            return float(_eval_number(text))
        if key in QUBIT_KEYS:
            return tuple(complex(part.strip().replace(" ", "")) for part in text.split(","))
        if key in LIST_KEYS:
            conv = LIST_KEYS[key]
            return tuple(conv(_eval_number(part)) for part in text.split(",") if part.strip())
    except (ValueError, SyntaxError, ZeroDivisionError, TypeError, OverflowError) as exc:
        raise ValidationError(key, f"cannot parse {text.strip()!r}") from exc
    raise AssertionError(key)


def parse_config_text(text):
    """Parse config text into ``(ProtocolConfig, RunOptions)``."""
    known = INT_KEYS | FLOAT_KEYS | QUBIT_KEYS | set(LIST_KEYS)
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise ParseError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ParseError(f"duplicate key {key!r}", lineno)
        if not value:
            raise ParseError(f"missing value for {key!r}", lineno)
        values[key] = _parse_value(key, value)
    options = RunOptions(**{k: values.pop(k) for k in OPTION_KEYS if k in values})
    return protocol.ProtocolConfig(**values), options


def parse_config(path):
    """Read a config file (or the ``config.cfg`` written next to earlier outputs)."""
    return parse_config_text(Path(path).read_text())[0]


def load_run(path):
    path = Path(path)
    if path.suffix == ".json":
        manifest = json.loads(path.read_text())
        return config_from_dict(manifest["config"]), RunOptions(
            **{k: tuple(v) if isinstance(v, list) else v for k, v in manifest["options"].items()})
    return parse_config_text(path.read_text())


def config_from_dict(d):
    d = dict(d)
    for key in QUBIT_KEYS:
        if key in d:
            d[key] = tuple(complex(re, im) for re, im in d[key])
    return protocol.ProtocolConfig(**d)


def format_config(cfg, options):
    """Config text that parses back to exactly ``cfg`` and ``options``."""
    lines = [f"# qsolchain {__version__} resolved configuration"]
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        if value is None:
            continue
        if f.name in QUBIT_KEYS:
            text = ", ".join(repr(complex(z)) for z in value)
        else:
            text = repr(value)
        lines.append(f"{f.name} = {text}")
    lines.append("s_list = " + ", ".join(str(s) for s in options.s_list))
    lines.append("stage2_elapsed = " + ", ".join(repr(float(t)) for t in options.stage2_elapsed))
    lines.append(f"soliton_sample_step = {options.soliton_sample_step!r}")
    return "\n".join(lines) + "\n"


# -- output -------------------------------------------------------------------

def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def spin_label(two_s):
    return f"S={two_s // 2}" if two_s % 2 == 0 else f"S={two_s}/2"


class Run:
    """One invocation: configuration, output directory, timings."""

    def __init__(self, cfg, options, out, workers):
        self.cfg = cfg
        self.options = options
        self.out = Path(out)
        self.workers = workers
        self.timings = {}
        self.files = []

    def timed(self, name, fn, *args, **kwargs):
        start = time.perf_counter()
        log.info("%s ...", name)
        try:
            return fn(*args, **kwargs)
        except QSolChainError as exc:
            raise StageError(name, exc) from exc
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - start

    def write(self, name, header, rows):
        write_csv(self.out / name, header, rows)
        self.files.append(name)

    def resolve(self, need_t2=False):
        cfg = self.cfg
        if cfg.t1 is None:
            cfg = replace(cfg, t1=self.timed("select_t1", protocol.select_t1, cfg))
        if need_t2 and cfg.t2 is None:
            cfg = replace(cfg, t2=self.timed("select_t2", protocol.select_t2, cfg))
        self.cfg = cfg
        return cfg

    def finish(self, command):
        cfg, sol = self.cfg, self.cfg.soliton
        (self.out / "config.cfg").write_text(format_config(cfg, self.options))
        manifest = {
            "tool": "qsolchain",
            "version": __version__,
            "command": command,
            "config": cfg.to_dict(),
            "options": dataclasses.asdict(self.options),
            "derived": {"h": cfg.h, "velocity": sol.velocity, "length": sol.length,
                        "tau": sol.tau, "energy": sol.energy, "t0": cfg.t0, "t1": cfg.t1,
                        "t2": cfg.t2, "timescale_ratio": cfg.timescale_ratio},
            "workers": self.workers,
            "timings_s": self.timings,
            "files": sorted(self.files + ["config.cfg"]),
        }
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=str) + "\n")


class StageError(QSolChainError):
    def __init__(self, stage, exc):
        self.stage = stage
        self.cause = exc
        super().__init__(f"{stage}: {type(exc).__name__}: {exc}")


# -- stages -------------------------------------------------------------------

def deformation_directions():
    return [SphereDirection(th, ph) for th in (math.pi / 4, math.pi / 2, 3 * math.pi / 4)
            for ph in (0.0, math.pi)]


def run_soliton(run):
    cfg, opts = run.cfg, run.options
    start = cfg.initial_chain()
    run.write("soliton_profile.csv", ["n", "theta", "phi", "one_minus_cos_theta"],
              zip(range(cfg.N), start.theta, start.phi, start.one_minus_cos()))

    span = max(opts.stage2_elapsed)
    times = opts.soliton_sample_step * np.arange(int(span // opts.soliton_sample_step) + 1)

    def conservation():
        vecs = chain.integrate_vectors(start.vectors(), cfg.h, cfg.dt, times)
        rows = []
        for t, vec in zip(times, vecs):
            c = chain.ChainConfig.from_vectors(vec)
            rows.append((t, chain.chain_energy(c, cfg.h), chain.total_sz(c), chain.soliton_center(c)))
        return rows

    run.write("soliton_conservation.csv", ["t", "energy", "total_sz", "center"],
              run.timed("soliton", conservation))

    elapsed = sorted(set(opts.stage2_elapsed))

    def deformed(omega):
        vec = start.vectors()
        vec[cfg.n_A] = omega.unit_vector()
        return chain.integrate_vectors(vec, cfg.h, cfg.dt, elapsed)

    omegas = deformation_directions()
    runs = run.timed("soliton", protocol._run_parallel, deformed, omegas, run.workers)
    rows = []
    for omega, vecs in zip(omegas, runs):
        for tau, vec in zip(elapsed, vecs):
            c = chain.ChainConfig.from_vectors(vec)
            rows.extend((tau, omega.theta, omega.phi, n, th, ph, d) for n, (th, ph, d)
                        in enumerate(zip(c.theta, c.phi, c.one_minus_cos())))
    run.write("soliton_deformed.csv",
              ["elapsed", "omega_theta", "omega_phi", "n", "theta", "phi", "one_minus_cos_theta"],
              rows)


def run_stage1(run):
    cfg = run.resolve()
    times = protocol._scan_times(cfg.t0, cfg.t1_window, cfg.t1_step)
    ent = run.timed("stage1", protocol.stage1_entropies, cfg, times)
    run.write("stage1_entropy.csv", ["t", "entropy"], zip(times, ent))


def run_stage2(run, extra_elapsed=()):
    """Entropy profiles for every spin in ``s_list``; returns the bundle."""
    cfg = run.resolve()
    opts = run.options
    grid = cfg.grid()
    elapsed = sorted(set(opts.stage2_elapsed) | set(extra_elapsed))
    bundle = run.timed("stage2_bundle", protocol.stage2_bundle, cfg, grid,
                       [cfg.t1 + e for e in elapsed], run.workers)

    ftables = []
    for two_s in opts.s_list:
        spin_cfg = replace(cfg, two_s=two_s, t1=None, t2=None)
        t1 = cfg.t1 if two_s == cfg.two_s else run.timed("select_t1", protocol.select_t1, spin_cfg)
        spin_cfg = replace(spin_cfg, t1=t1)
        res = protocol.stage1_evolve(spin_cfg, t1)
        ftables.append((t1, protocol.build_f_table(res, grid.with_spin(spin_cfg.spin))))

    spread_cols = {}
    for tau in sorted(set(opts.stage2_elapsed)):
        profiles = []
        for t1, ft in ftables:
            prof = run.timed("stage2_profile", protocol.site_entropy_profiles, [ft],
                             bundle.rebased(t1), t1 + tau, None, run.workers)[0]
            profiles.append([e for _, e in prof])
        run.write(f"stage2_entropy_t{_fmt(tau)}.csv",
                  ["n"] + [spin_label(s) for s in opts.s_list],
                  zip(range(cfg.N), *profiles))
        spread_cols[tau] = bundle.spread(cfg.t1 + tau)
    run.write("stage2_spread.csv", ["n"] + [f"elapsed={_fmt(t)}" for t in spread_cols],
              zip(range(cfg.N), *spread_cols.values()))
    return bundle


def run_concurrence(run, bundle=None):
    cfg = run.resolve(need_t2=True)
    if bundle is None:
        bundle = run.timed("stage2_bundle", protocol.stage2_bundle, cfg, cfg.grid(), [cfg.t2],
                           run.workers)
    res = protocol.stage1_evolve(cfg, cfg.t1)
    ft = protocol.build_f_table(res, cfg.grid())
    rho0 = run.timed("stage3", protocol.stage3_initial_state, cfg, ft, bundle.rebased(cfg.t1))
    times = protocol.stage3_times(cfg)
    c, mu = run.timed("stage3", protocol.concurrence_scan, cfg, rho0, times)
    run.write("concurrence.csv", ["t_minus_t2", "C", "mu1", "mu2", "mu3", "mu4"],
              ((t - cfg.t2, ci, *m) for t, ci, m in zip(times, c, mu)))
    return float(c.max())


def run_pipeline(run):
    run_soliton(run)
    run_stage1(run)
    cfg = run.resolve(need_t2=True)
    bundle = run_stage2(run, extra_elapsed=[cfg.t2 - cfg.t1])
    return run_concurrence(run, bundle)


# -- entry point ----------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="qsolchain", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("soliton", "soliton profile, conservation and deformed runs"),
                       ("stage1", "qubit entropy during the qubit-spin coupling"),
                       ("stage2", "site entropy profiles for the spins in s_list"),
                       ("concurrence", "A-B concurrence after the soliton reaches n_B"),
                       ("pipeline", "all of the above"),
                       ("selftest", "run the built-in oracle checks")):
        p = sub.add_parser(name, help=text)
        if name == "selftest":
            continue
        p.add_argument("--config", help="config file (key = value) or manifest.json")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--threads", type=int, default=None, help="worker threads, 0 = auto")
        p.add_argument("--force", action="store_true", help="allow a non-empty output directory")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def resolve_workers(requested):
    if requested is None:
        env = os.environ.get(THREADS_ENV)
        try:
            requested = int(env) if env else 0
        except ValueError:
            raise ValidationError(THREADS_ENV, f"not an integer: {env!r}") from None
    if requested < 0:
        raise ValidationError("threads", "must be >= 0")
    return requested or (os.cpu_count() or 1)


def prepare_out(path, force):
    out = Path(path)
    if out.exists() and not out.is_dir():
        raise FileExistsError(f"{out} exists and is not a directory")
    if out.exists() and any(out.iterdir()) and not force:
        raise FileExistsError(f"{out} is not empty (use --force to overwrite)")
    out.mkdir(parents=True, exist_ok=True)
    return out


COMMANDS = {"soliton": run_soliton, "stage1": run_stage1, "stage2": run_stage2,
            "concurrence": run_concurrence, "pipeline": run_pipeline}


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "selftest":
        from .selftest import run_selftest
        logging.basicConfig(level=logging.INFO, format="%(message)s")
        return EXIT_OK if run_selftest() else EXIT_SELFTEST

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s: %(message)s")
    try:
        if args.config:
            cfg, options = load_run(args.config)
        else:
            cfg, options = protocol.ProtocolConfig(), RunOptions()
        workers = resolve_workers(args.threads)
        out = prepare_out(args.out, args.force or args.command != "pipeline")
    except (QSolChainError, OSError, ValueError, KeyError) as exc:
        print(f"qsolchain: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    run = Run(cfg, options, out, workers)
    try:
        COMMANDS[args.command](run)
        run.finish(args.command)
    except QSolChainError as exc:
        print(f"qsolchain: {args.command} failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
