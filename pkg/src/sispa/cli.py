"""Command-line experiment runner.

Subcommands: ``run``, ``generate``, ``hardness``, ``estimate`` and ``suite``.
Exit codes: 0 success, 2 configuration error, 3 guard violation
(an enumeration cap was exceeded), 4 acceptance failure. Errors are
reported on stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .auction import MechanismKind, optimal_welfare
from .buyer import MWLearner, NoEnvyBidder, envy_gap, ftpl_buyer
from .hardness import (
    ConstantBid,
    FollowTheLeader,
    PerturbedLeader,
    SetCoverInstance,
    cover_from_apx,
    min_set_cover,
    opt_from_cover,
    random_regular_cover,
    reduce,
    regret_to_opt_estimator,
    solve_bidding_exact,
)
from .io import (
    TRACE_COLUMNS,
    format_set_cover,
    load_hardness_instance,
    read_set_cover,
    write_csv,
    write_json,
)
from .metrics import (
    IIDAdversary,
    ObliviousAdversary,
    UniformAdversary,
    best_fixed_bid,
    best_fixed_set,
    trace_rows,
)
from .rounding import PGDCoverageLearner
from .simulate import run_bidder, simulate_game
from .valuations import (
    CoverageValuation,
    ExplicitXOS,
    InstanceTooLargeError,
    valuation_from_dict,
)

EXIT_OK, EXIT_CONFIG, EXIT_GUARD, EXIT_SUITE = 0, 2, 3, 4
SUMMARY_COLUMNS = [
    "run_id", "repetition", "bidder", "learner", "T", "avg_utility", "avg_payment", "envy_gap",
    "regret_fixed_set", "regret_fixed_bid", "avg_welfare", "opt_welfare", "welfare_floor",
]
SCHEMA_VERSION = 1
LEARNERS = ("ftpl", "pgd", "mw")


class ConfigError(ValueError):
    """The configuration is malformed or inconsistent."""


# ------------------------------------------------------------------ config


def _read_json(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a JSON object")
    return data


def _positive_int(cfg, key, default=None):
    val = cfg.get(key, default)
    if not isinstance(val, int) or isinstance(val, bool) or val < 1:
        raise ConfigError(f"'{key}' must be a positive integer, got {val!r}")
    return val


def _resolve_valuation(spec, base: Path) -> dict:
    if isinstance(spec, str):
        path = (base / spec) if not Path(spec).is_absolute() else Path(spec)
        spec = _read_json(path)
    if not isinstance(spec, dict):
        raise ConfigError("a bidder's 'valuation' must be a file path or an inline object")
    try:
        return valuation_from_dict(spec).to_dict()
    except ValueError as exc:
        raise ConfigError(f"invalid valuation: {exc}") from None


def load_run_config(path) -> dict:
    """Read and validate a ``run`` configuration, inlining valuation files."""
    raw = _read_json(path)
    base = Path(path).parent
    cfg = {}
    try:
        cfg["mechanism"] = MechanismKind.parse(raw.get("mechanism", "second_price")).value
    except ValueError:
        raise ConfigError(f"unknown mechanism {raw.get('mechanism')!r}") from None
    cfg["T"] = _positive_int(raw, "T")
    cfg["N"] = _positive_int(raw, "N", 1)
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("'seed' must be a nonnegative integer")
    cfg["seed"] = seed
    bounds = raw.get("bounds", {})
    if not isinstance(bounds, dict):
        raise ConfigError("'bounds' must be an object")
    try:
        cfg["bounds"] = {k: float(v) for k, v in bounds.items() if v is not None}
    except (TypeError, ValueError):
        raise ConfigError("'bounds' entries must be numbers") from None
    bidders = raw.get("bidders")
    if not isinstance(bidders, list) or not bidders:
        raise ConfigError("'bidders' must be a nonempty list")
    cfg["bidders"] = []
    m = None
    for i, b in enumerate(bidders):
        if not isinstance(b, dict) or "valuation" not in b:
            raise ConfigError(f"bidder {i} needs a 'valuation'")
        learner = b.get("learner", "ftpl")
        if learner not in LEARNERS:
            raise ConfigError(f"bidder {i}: unknown learner {learner!r}; expected one of {LEARNERS}")
        val = _resolve_valuation(b["valuation"], base)
        if learner == "pgd" and val["kind"] != "coverage":
            raise ConfigError(f"bidder {i}: the pgd learner needs a coverage valuation")
        vm = valuation_from_dict(val).m
        if m is not None and vm != m:
            raise ConfigError(f"bidder {i} is over {vm} items, earlier bidders over {m}")
        m = vm
        params = b.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError(f"bidder {i}: 'params' must be an object")
        cfg["bidders"].append({"valuation": val, "learner": learner, "params": params})
    cfg["m"] = m
    adv = raw.get("adversary")
    if adv is not None:
        if not isinstance(adv, dict) or adv.get("kind") not in ("uniform", "iid", "oblivious"):
            raise ConfigError("'adversary.kind' must be one of uniform, iid, oblivious")
        if adv["kind"] == "oblivious" and len(adv.get("sequence", [])) < cfg["T"]:
            raise ConfigError("oblivious sequence is shorter than T")
    elif len(cfg["bidders"]) == 1:
        raise ConfigError("a single bidder needs an 'adversary' to face")
    cfg["adversary"] = adv
    if any(b["learner"] != "pgd" for b in cfg["bidders"]) and "D" not in cfg["bounds"]:
        if adv is not None and adv["kind"] == "uniform" and "D" in adv:
            cfg["bounds"]["D"] = float(adv["D"])
        else:
            raise ConfigError("'bounds.D' (threshold bound) is required for ftpl and mw learners")
    cfg["trace_regret"] = bool(raw.get("trace_regret", True))
    return cfg


# --------------------------------------------------------------------- run


def _make_adversary(spec, m, D, ss):
    kind = spec["kind"]
    try:
        if kind == "uniform":
            return UniformAdversary(m, float(spec.get("D", D)), ss, spec.get("grid"))
        if kind == "iid":
            return IIDAdversary(spec["support"], spec.get("probs"), ss, spec.get("D"))
        return ObliviousAdversary(spec["sequence"], spec.get("D"))
    except KeyError as exc:
        raise ConfigError(f"adversary is missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid adversary: {exc}") from None


def _make_bidder(spec, val, cfg, ss, opponent_bound):
    try:
        return _build_bidder(spec, val, cfg, ss, opponent_bound)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InstanceTooLargeError):
            raise
        raise ConfigError(f"invalid {spec['learner']} parameters: {exc}") from None


def _build_bidder(spec, val, cfg, ss, opponent_bound):
    p = dict(spec["params"])
    T = cfg["T"]
    bounds = cfg["bounds"]
    if spec["learner"] == "ftpl":
        learner = ftpl_buyer(val, T, H=p.get("H", bounds.get("H")), D=p.get("D", bounds["D"]), seed=ss,
                             fresh=bool(p.get("fresh", False)), eps=p.get("epsilon"),
                             schedule=p.get("schedule", "proof"))
    elif spec["learner"] == "pgd":
        K = p.get("K", bounds.get("K", opponent_bound))
        learner = PGDCoverageLearner(val, K, ss, p.get("step", "standard"))
    else:
        learner = MWLearner(val, int(p.get("d", val.m)), T, p.get("D", bounds["D"]),
                            H=p.get("H", bounds.get("H")), eta=p.get("eta"), seed=ss)
    return NoEnvyBidder(val, learner)


def _alpha(spec) -> float:
    return math.e / (math.e - 1) if spec["learner"] == "pgd" else 1.0


def run_cell(cfg, rep, ss):
    """One repetition: returns (trace rows, summary rows)."""
    vals = [valuation_from_dict(b["valuation"]) for b in cfg["bidders"]]
    n = len(vals)
    child = ss.spawn(n + 1)
    D = cfg["bounds"].get("D")
    adv = _make_adversary(cfg["adversary"], cfg["m"], D, child[n]) if cfg["adversary"] else None
    trace, summary = [], []
    if n == 1:
        bidder = _make_bidder(cfg["bidders"][0], vals[0], cfg, child[0], D)
        runs = [run_bidder(bidder, vals[0], adv, cfg["T"])]
        welfare = opt = floor = ""
    else:
        top = [float(v.singleton_values().max()) for v in vals]
        bidders = [
            _make_bidder(spec, vals[i], cfg, child[i], max(top[:i] + top[i + 1:] + [D or 0.0]))
            for i, spec in enumerate(cfg["bidders"])
        ]
        game = simulate_game(cfg["mechanism"], vals, bidders, cfg["T"], extra=adv)
        runs = [_SoloView(game, i) for i in range(n)]
        opt, _ = optimal_welfare(vals)
        welfare = float(game.welfare.mean())
        eps = [envy_gap(vals[i], game.thetas[:, i], game.utilities[:, i], _alpha(s))
               for i, s in enumerate(cfg["bidders"])]
        alpha = max(_alpha(s) for s in cfg["bidders"])
        floor = opt / (2 * alpha) - float(np.sum(eps))
    for i, (val, run, spec) in enumerate(zip(vals, runs, cfg["bidders"])):
        run_id = f"r{rep}-b{i}"
        trace.extend(trace_rows(run_id, run, val, _alpha(spec), with_regret=cfg["trace_regret"]))
        T = run.T
        total = float(run.utilities.sum())
        _, set_bench = best_fixed_set(val, run.thetas)
        try:
            _, bid_bench = best_fixed_bid(val, run.thetas)
            reg_bid = bid_bench - total
        except InstanceTooLargeError:
            reg_bid = ""
        summary.append({
            "run_id": run_id, "repetition": rep, "bidder": i, "learner": spec["learner"], "T": T,
            "avg_utility": total / T, "avg_payment": float(run.payments.mean()),
            "envy_gap": envy_gap(val, run.thetas, run.utilities, _alpha(spec)),
            "regret_fixed_set": set_bench - total, "regret_fixed_bid": reg_bid,
            "avg_welfare": welfare, "opt_welfare": opt, "welfare_floor": floor,
        })
    return trace, summary


class _SoloView:
    """One bidder's slice of a game, shaped like a solo run."""

    def __init__(self, game, i):
        self.bids = game.bids[:, i]
        self.thetas = game.thetas[:, i]
        self.won = game.won[:, i]
        self.payments = game.payments[:, i]
        self.values = game.values[:, i]
        self.utilities = self.values - self.payments
        self.T = self.bids.shape[0]


def _run_cell_star(args):
    return run_cell(*args)


def _map(fn, jobs, threads):
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def _manifest(command, seed, config, outputs, extra=None):
    out = {"tool": "sispa", "version": __version__, "schema_version": SCHEMA_VERSION, "command": command,
           "seed": seed, "config": config, "outputs": sorted(outputs)}
    if extra:
        out.update(extra)
    return out


def cmd_run(args) -> int:
    if not args.config:
        raise ConfigError("run needs --config")
    cfg = load_run_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    out = Path(args.out or "out")
    out.mkdir(parents=True, exist_ok=True)
    reps = np.random.SeedSequence(cfg["seed"]).spawn(cfg["N"])
    results = _map(_run_cell_star, [(cfg, r, ss) for r, ss in enumerate(reps)], args.threads)
    trace = [row for t, _ in results for row in t]
    summary = [row for _, s in results for row in s]
    write_csv(trace, out / "trace.csv", TRACE_COLUMNS)
    write_csv(summary, out / "summary.csv", SUMMARY_COLUMNS)
    write_json(_manifest("run", cfg["seed"], cfg, ["trace.csv", "summary.csv", "manifest.json"],
                         {"schema": {"trace": TRACE_COLUMNS, "summary": SUMMARY_COLUMNS}}), out / "manifest.json")
    for row in summary:
        print(f"{row['run_id']}: avg utility {row['avg_utility']:.4f}, envy gap {row['envy_gap']:.4f}")
    return EXIT_OK


# ---------------------------------------------------------------- generate


def _params(args) -> dict:
    params = {}
    if args.config:
        data = _read_json(args.config)
        params.update(data.get("params", data))
    for item in args.param or []:
        if "=" not in item:
            raise ConfigError(f"--param expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        try:
            params[key] = json.loads(value)
        except json.JSONDecodeError:
            params[key] = value
    return params


def _int(params, key, default):
    val = params.get(key, default)
    if not isinstance(val, int) or isinstance(val, bool):
        raise ConfigError(f"parameter {key!r} must be an integer")
    return val


def cmd_generate(args) -> int:
    params = _params(args)
    kind = args.kind or params.pop("kind", None)
    params.pop("kind", None)
    seed = args.seed if args.seed is not None else int(params.get("seed", 0))
    rng = np.random.default_rng(seed)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    written = []
    try:
        if kind == "random-xos":
            m, L = _int(params, "m", 5), _int(params, "L", 3)
            if m < 1 or L < 1:
                raise ConfigError("random-xos needs m >= 1 and L >= 1")
            lo, hi = float(params.get("low", 0.0)), float(params.get("high", 1.0))
            clauses = rng.uniform(lo, hi, (L, m))
            grid = params.get("grid")
            if grid:
                clauses = np.round(clauses * grid) / grid
            write_json(ExplicitXOS(clauses).to_dict(), out / "valuation.json")
            written.append("valuation.json")
        elif kind == "random-coverage":
            m, V = _int(params, "m", 5), _int(params, "vertices", 6)
            if m < 1 or V < 0:
                raise ConfigError("random-coverage needs m >= 1 and vertices >= 0")
            lo, hi = float(params.get("low", 0.0)), float(params.get("high", 1.0))
            p = float(params.get("p", 0.4))
            weights = rng.uniform(lo, hi, V)
            edges = [np.flatnonzero(rng.random(V) < p).tolist() for _ in range(m)]
            write_json(CoverageValuation(weights, edges).to_dict(), out / "valuation.json")
            written.append("valuation.json")
        elif kind in ("set-cover-regular", "hardness-reduction"):
            if "cover" in params:
                sc = read_set_cover(params["cover"])
            else:
                k, m, r = _int(params, "k", 2), _int(params, "m", 2), _int(params, "r", 1)
                sc = random_regular_cover(k, m, r, rng)
            (out / "cover.txt").write_text(format_set_cover(sc))
            written.append("cover.txt")
            if kind == "hardness-reduction":
                write_json(reduce(sc).to_dict(), out / "hardness.json")
                written.append("hardness.json")
        else:
            raise ConfigError(f"unknown instance kind {kind!r}; expected random-xos, random-coverage, "
                              "set-cover-regular or hardness-reduction")
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    write_json(_manifest("generate", seed, {"kind": kind, "params": params}, written + ["manifest.json"]),
               out / "manifest.json")
    for name in written:
        print(out / name)
    return EXIT_OK


# ---------------------------------------------------------------- hardness


def _load_cover(args, cfg) -> SetCoverInstance:
    path = args.instance
    if not path:
        path = cfg.get("set_cover") or cfg.get("instance")
        if not path:
            raise ConfigError("a set cover file is needed (--instance or 'set_cover' in the config)")
        if not Path(path).is_absolute():
            path = Path(args.config).parent / path
    try:
        return read_set_cover(path)
    except FileNotFoundError:
        raise ConfigError(f"file not found: {path}") from None
    except ValueError as exc:
        raise ConfigError(f"invalid set cover file: {exc}") from None


HARDNESS_COLUMNS = ["k", "m", "r", "v", "H", "OPT", "OPT_float", "argmax", "OPT_c", "identity", "Q"]


def cmd_hardness(args) -> int:
    cfg = _read_json(args.config) if args.config else {}
    sc = _load_cover(args, cfg)
    inst = reduce(sc)
    opt, S = solve_bidding_exact(inst)
    cover = min_set_cover(sc)
    row = {
        "k": inst.k, "m": inst.m, "r": inst.r, "v": inst.v, "H": inst.H, "OPT": str(opt),
        "OPT_float": float(opt), "argmax": " ".join(str(j + 1) for j in sorted(S)), "OPT_c": cover,
        "identity": opt == opt_from_cover(inst, cover), "Q": cover_from_apx(inst, opt),
    }
    out = Path(args.out or "out")
    out.mkdir(parents=True, exist_ok=True)
    write_csv([row], out / "summary.csv", HARDNESS_COLUMNS)
    write_json(inst.to_dict(), out / "hardness.json")
    write_json(_manifest("hardness", None, {"set_cover": format_set_cover(sc)},
                         ["summary.csv", "hardness.json", "manifest.json"]), out / "manifest.json")
    print(f"OPT = {opt} with bid set {{{row['argmax']}}}; OPT_c = {cover}; identity holds: {row['identity']}")
    return EXIT_OK


# ---------------------------------------------------------------- estimate

ESTIMATE_COLUMNS = ["T", "N", "zeta", "learner", "level", "estimate", "half_width", "OPT", "abs_error", "within"]
EST_LEARNERS = {"ftl": FollowTheLeader, "constant": ConstantBid, "perturbed": PerturbedLeader}


def cmd_estimate(args) -> int:
    cfg = _read_json(args.config) if args.config else {}
    if cfg.get("hardness_instance") and not args.instance:
        path = Path(cfg["hardness_instance"])
        if args.config and not path.is_absolute():
            path = Path(args.config).parent / path
        try:
            inst = load_hardness_instance(path)
        except (FileNotFoundError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot load hardness instance: {exc}") from None
    else:
        inst = reduce(_load_cover(args, cfg))
    T = _positive_int(cfg, "T", 2000)
    N = _positive_int(cfg, "N", T)
    zeta = float(cfg.get("zeta", 0.05))
    if not 0 < zeta < 1:
        raise ConfigError("'zeta' must lie in (0, 1)")
    level = float(cfg.get("level", 2.0))
    if not 1 < level < inst.H:
        raise ConfigError(f"bid level must lie strictly between 1 and H={inst.H}")
    name = cfg.get("learner", "ftl")
    if name not in EST_LEARNERS:
        raise ConfigError(f"unknown estimator learner {name!r}; expected one of {sorted(EST_LEARNERS)}")
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    res = regret_to_opt_estimator(inst, EST_LEARNERS[name](inst, level), T, N, rng=seed, zeta=zeta,
                                  threads=args.threads)
    opt, _ = solve_bidding_exact(inst)
    err = abs(res.estimate - float(opt))
    row = {"T": T, "N": N, "zeta": zeta, "learner": name, "level": level, "estimate": res.estimate,
           "half_width": res.half_width, "OPT": float(opt), "abs_error": err, "within": err <= res.half_width}
    out = Path(args.out or "out")
    out.mkdir(parents=True, exist_ok=True)
    write_csv([row], out / "summary.csv", ESTIMATE_COLUMNS)
    write_csv(({"repetition": i, "avg_utility": float(a)} for i, a in enumerate(res.averages)),
              out / "repetitions.csv", ["repetition", "avg_utility"])
    write_json(_manifest("estimate", seed, {**cfg, "instance": inst.to_dict()},
                         ["summary.csv", "repetitions.csv", "manifest.json"]), out / "manifest.json")
    print(f"estimate {res.estimate:.4f} (OPT {float(opt):.4f}), half-width {res.half_width:.4f}")
    return EXIT_OK


# ------------------------------------------------------------------- suite


def cmd_suite(args) -> int:
    from .acceptance import run_all

    selected = None
    if args.criteria:
        try:
            selected = {int(x) for x in args.criteria.split(",")}
        except ValueError:
            raise ConfigError("--criteria expects a comma-separated list of numbers") from None
    results = run_all(selected)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(({"criterion": r.number, "title": r.title, "passed": r.passed, "detail": r.detail}
                   for r in results), out / "suite.csv", ["criterion", "title", "passed", "detail"])
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)} of {len(results)} criteria passed")
    return EXIT_SUITE if failed else EXIT_OK


# -------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sispa", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"sispa {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, threads=False):
        p.add_argument("--config", metavar="PATH")
        p.add_argument("--seed", type=int, metavar="U64")
        p.add_argument("--out", metavar="DIR")
        if threads:
            p.add_argument("--threads", type=int, default=1, metavar="N")

    p = sub.add_parser("run", help="run a configured learning experiment")
    common(p, threads=True)
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("generate", help="write random valuation or set cover instances")
    p.add_argument("kind", nargs="?", help="random-xos | random-coverage | set-cover-regular | hardness-reduction")
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    common(p)
    p.set_defaults(func=cmd_generate)
    p = sub.add_parser("hardness", help="solve the bidding instance built from a set cover file")
    p.add_argument("--instance", metavar="PATH")
    common(p)
    p.set_defaults(func=cmd_hardness)
    p = sub.add_parser("estimate", help="estimate the optimal bid value by running a learner")
    p.add_argument("--instance", metavar="PATH")
    common(p, threads=True)
    p.set_defaults(func=cmd_estimate)
    p = sub.add_parser("suite", help="run the acceptance battery")
    p.add_argument("--criteria", metavar="LIST")
    common(p)
    p.set_defaults(func=cmd_suite)
    return parser


def _fail(kind: str, message: str, code: int) -> int:
    print(json.dumps({"status": "error", "kind": kind, "message": message, "exit_code": code}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", None) is not None and not 0 <= args.seed < 2**64:
        return _fail("config_error", "--seed must be an unsigned 64-bit integer", EXIT_CONFIG)
    if getattr(args, "threads", 1) < 1:
        return _fail("config_error", "--threads must be at least 1", EXIT_CONFIG)
    try:
        return args.func(args)
    except InstanceTooLargeError as exc:
        return _fail("guard_violation", str(exc), EXIT_GUARD)
    except ConfigError as exc:
        return _fail("config_error", str(exc), EXIT_CONFIG)


if __name__ == "__main__":
    sys.exit(main())
