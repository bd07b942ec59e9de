"""Command-line front end: ``quantpolar <subcommand> [options]``.

Every artifact starts with the fully resolved configuration, including the
argument vector, so rerunning with the same arguments reproduces it byte for
byte. CSV output opens with a ``# config: {...}`` line followed by a header
row. Floats are written with 17 significant digits. The worker count only
affects speed and is therefore left out of the artifact.

Exit status is 0 on success, 2 for invalid input and 1 for internal errors.

Output columns
--------------
evolve               step, sign, p, m, z, mutual_info, bhattacharyya, error_prob
region-check         p, m, z, curve_m, in_region
bounds               n, lower, upper
verify-submartingale exponent, grid, restricted, direction, worst_violation
mc-ratio, mc-exponent, weak-polarize
                     step, quantile, statistic, value
rate-search          method, rate, plus, minus
codec-construct      index, error_prob, frozen
codec-sim genie      index, errors, trials, predicted
codec-sim fer        frame_errors, trials, fer, ci_low, ci_high, union_bound
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import (
    BRANCH_CAP,
    gamma_bracket,
    plain_sign_rate,
    rate_search_dynamic,
    rate_search_static_pair,
    rate_search_static_single,
    verify_submartingale,
)
from .codec import (
    TIE_POLICIES,
    CodeConfig,
    branch_error_probs,
    construct_frozen,
    fer_sim,
    genie_aided_bit_error,
    k_for_target,
    union_bound,
)
from .dist import SymmetricDist, ThreeLevelState, channel_stats
from .evolve3 import curve_m_at, in_region_plus, parse_signs, transform_minus, transform_plus
from .montecarlo import (
    DECAY_REFERENCE,
    QUANTILES,
    decay_exponent,
    ratio_statistic,
    sample_trajectories,
    weak_polarization_stats,
)
from .quantd import StaticPolicy, uniform_quantizer


class ConfigError(ValueError):
    pass


# --- parsing helpers -----------------------------------------------------------------


def _load_json_arg(text: str):
    """Parse inline JSON or a JSON file; ``None`` if ``text`` is neither."""
    if text.lstrip()[:1] in ("{", "["):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--channel: invalid JSON: {exc}") from exc
    path = Path(text)
    if path.suffix == ".json" or path.is_file():
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise ConfigError(f"--channel: file not found: {text}") from exc
    return None


def parse_state(text: str) -> ThreeLevelState:
    """``p,m,z``, or inline or file JSON ``{"p":..,"m":..,"z":..}`` or ``[p, m, z]``."""
    obj = _load_json_arg(text)
    if obj is None:
        parts = text.split(",")
        if len(parts) != 3:
            raise ConfigError(f"--channel: expected 'p,m,z', got {text!r}")
        try:
            obj = [float(x) for x in parts]
        except ValueError as exc:
            raise ConfigError(f"--channel: not numeric: {text!r}") from exc
    try:
        if isinstance(obj, dict):
            obj = [obj["p"], obj["m"], obj["z"]]
        return ThreeLevelState(*obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"--channel: {exc!r}") from exc


def parse_dist(text: str) -> SymmetricDist:
    """A three-level state (unit magnitude) or JSON ``{"z": .., "levels": [[l, p, m], ..]}``."""
    obj = _load_json_arg(text)
    if obj is None or not (isinstance(obj, dict) and "levels" in obj):
        return SymmetricDist.from_state(parse_state(text))
    try:
        return SymmetricDist.from_json(obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"--channel: {exc}") from exc


def resolve_threads(flag: int | None) -> int:
    if flag is not None:
        if flag < 1:
            raise ConfigError("--threads must be at least 1")
        return flag
    env = os.environ.get("QUANTPOLAR_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"QUANTPOLAR_THREADS must be an integer, got {env!r}") from exc
    return os.cpu_count() or 1


def _check_n(n: int, name: str = "--n"):
    if n < 0:
        raise ConfigError(f"{name} must be nonnegative, got {n}")
    if n > BRANCH_CAP:
        raise ConfigError(f"{name}={n} exceeds the branch enumeration cap of {BRANCH_CAP}")


# --- output ----------------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    return str(x)


def _json(obj) -> str:
    """Deterministic JSON with floats at 17 significant digits (NaN/inf as null)."""
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_json(v) for v in obj) + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(obj) if math.isfinite(obj) else "null"
    if obj is None:
        return "null"
    return json.dumps(obj)


class Table:
    def __init__(self, columns, rows, summary):
        self.columns = list(columns)
        self.rows = [list(r) for r in rows]
        self.summary = dict(summary)

    def render(self, fmt: str, config: dict) -> str:
        if fmt == "json":
            return _json({"config": config, "columns": self.columns, "rows": self.rows,
                          "summary": self.summary}) + "\n"
        buf = io.StringIO()
        buf.write("# config: " + _json(config) + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_fmt(x) for x in row])
        return buf.getvalue()


def _summary_line(name: str, summary: dict) -> str:
    return name + ": " + " ".join(f"{k}={_fmt(v)}" for k, v in summary.items())


# --- subcommands ------------------------------------------------------------------------


def cmd_evolve(args, threads):
    s = parse_state(args.channel)
    signs = parse_signs(args.signs)
    rows = []
    for step in range(len(signs) + 1):
        st = channel_stats(s)
        rows.append([step, signs[step - 1] if step else "", s.p, s.m, s.z,
                     st.mutual_info, st.bhattacharyya, st.error_prob])
        if step < len(signs):
            s = transform_plus(s) if signs[step] == "+" else transform_minus(s)
    return Table(
        ["step", "sign", "p", "m", "z", "mutual_info", "bhattacharyya", "error_prob"],
        rows, {"p": s.p, "m": s.m, "z": s.z})


def cmd_region_check(args, threads):
    s = parse_state(args.channel)
    inside = in_region_plus(s, args.tol)
    return Table(["p", "m", "z", "curve_m", "in_region"],
                 [[s.p, s.m, s.z, curve_m_at(s.p), inside]], {"in_region": inside})


def cmd_bounds(args, threads):
    s = parse_state(args.channel)
    _check_n(args.n_max, "--n-max")
    br = gamma_bracket(s, args.delta, n_max=args.n_max)
    return Table(["n", "lower", "upper"], br.history,
                 {"lower": br.lower, "upper": br.upper, "n_used": br.n_used, "gap": br.gap})


def cmd_verify(args, threads):
    if args.grid < 2:
        raise ConfigError("--grid must be at least 2")
    worst = verify_submartingale(args.exponent, args.grid, args.region, args.direction)
    return Table(
        ["exponent", "grid", "restricted", "direction", "worst_violation"],
        [[args.exponent, args.grid, args.region, args.direction, worst]],
        {"worst_violation": worst, "passes_1e-10": worst >= -1e-10})


def _mc_checks(args):
    if args.n < 1 or args.count < 1:
        raise ConfigError("--n and --count must be at least 1")
    if not 0 < args.z_cutoff < 1:
        raise ConfigError("--z-cutoff must lie in (0, 1)")


def _dump_jsonl(path, ens):
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(ens.count):
            tr = ens.trajectory(i)
            fh.write(_json({"index": i, "seed": tr.seed, "signs": "".join(tr.signs),
                            "log2_states": tr.log_states}) + "\n")


def cmd_mc_ratio(args, threads):
    _mc_checks(args)
    if args.eps_r <= 0:
        raise ConfigError("--eps-r must be positive")
    ens = sample_trajectories(parse_state(args.channel), args.n, args.count, args.seed, threads)
    if args.dump_jsonl:
        _dump_jsonl(args.dump_jsonl, ens)
    r = ratio_statistic(ens, args.eps_r, args.z_cutoff)
    stats = {"fraction_all": r.fraction_all, "fraction_cutoff": r.fraction_cutoff,
             "n_cutoff": r.n_cutoff, "excluded": r.excluded, "underflow": r.underflow}
    rows = [[args.n, "", k, v] for k, v in stats.items()]
    return Table(["step", "quantile", "statistic", "value"], rows, stats)


def cmd_mc_exponent(args, threads):
    _mc_checks(args)
    ens = sample_trajectories(parse_state(args.channel), args.n, args.count, args.seed, threads)
    if args.dump_jsonl:
        _dump_jsonl(args.dump_jsonl, ens)
    d = decay_exponent(ens, args.z_cutoff)
    rows = [[args.n, q, "decay_exponent", d.quantiles.get(q, float("nan"))] for q in QUANTILES]
    rows.append([args.n, "", "n_subset", d.n_subset])
    rows.append([args.n, "", "reference", DECAY_REFERENCE])
    return Table(["step", "quantile", "statistic", "value"], rows,
                 {"median": d.median, "n_subset": d.n_subset, "reference": DECAY_REFERENCE})


def cmd_weak(args, threads):
    if args.n < 1 or args.count < 1:
        raise ConfigError("--n and --count must be at least 1")
    if args.levels < 1 or args.step <= 0:
        raise ConfigError("--levels must be >= 1 and --step > 0")
    policy = StaticPolicy(uniform_quantizer(args.step, args.levels))
    w = weak_polarization_stats(parse_dist(args.channel), policy, args.n, args.count, args.seed, threads)
    rows = []
    for k in w.steps:
        rows += [[k, 0.5, "Z", w.median_z[k]], [k, 0.5, "sum_pm", w.median_pm[k]],
                 [k, 0.5, "min_Z_1mZ", w.median_min_z[k]], [k, "", "frac_Z_le_0.01", w.frac_z_low[k]],
                 [k, "", "frac_Z_ge_0.99", w.frac_z_high[k]], [k, "", "frac_sum_pm_le_1e-3", w.frac_pm_small[k]]]
    return Table(["step", "quantile", "statistic", "value"], rows,
                 {"median_sum_pm": w.median_pm[-1], "median_min_Z_1mZ": w.median_min_z[-1]})


def cmd_rate_search(args, threads):
    dist = parse_dist(args.channel)
    _check_n(args.n)
    methods = ["plain", "pair", "single", "dynamic"] if args.method == "all" else [args.method]
    rows, summary = [], {}
    for meth in methods:
        if meth == "plain":
            rate, plus, minus = plain_sign_rate(dist, args.n), "", ""
        elif meth == "dynamic":
            res = rate_search_dynamic(dist, args.n)
            rate = res.rate
            plus = _json(res.plus.to_json()) if res.plus is not None else ""
            minus = _json(res.minus.to_json()) if res.minus is not None else ""
        else:
            search = rate_search_static_pair if meth == "pair" else rate_search_static_single
            res = search(dist, args.n, grid=args.grid)
            rate, plus, minus = res.rate, _json(list(res.alphas)), ""
        rows.append([meth, rate, plus, minus])
        summary[meth] = rate
    return Table(["method", "rate", "plus", "minus"], rows, summary)


def _code_config(args) -> CodeConfig:
    if args.config:
        try:
            return CodeConfig.from_json(Path(args.config).read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise ConfigError(f"--config: file not found: {args.config}") from exc
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"--config: malformed code config: {exc!r}") from exc
    if args.channel is None or args.n is None:
        raise ConfigError("either --config or both --channel and --n are required")
    s = parse_state(args.channel)
    _check_n(args.n)
    if (args.k is None) == (args.target is None):
        raise ConfigError("give exactly one of --k and --target")
    k = args.k if args.k is not None else k_for_target(s, args.n, args.target)
    if not 0 <= k <= 2**args.n:
        raise ConfigError(f"--k must lie in [0, {2**args.n}], got {k}")
    return CodeConfig(args.n, construct_frozen(s, args.n, k), args.tie_policy, s)


def cmd_codec_construct(args, threads):
    cfg = _code_config(args)
    pe = branch_error_probs(cfg.channel, cfg.n)
    mask = cfg.frozen_mask
    rows = [[i, pe[i], bool(mask[i])] for i in range(cfg.N)]
    ub = union_bound(cfg.channel, cfg.n, cfg.frozen)
    if args.config_out:
        Path(args.config_out).write_text(_json(cfg.to_json()) + "\n", encoding="utf-8")
    return Table(["index", "error_prob", "frozen"], rows, {"N": cfg.N, "k": cfg.k, "union_bound": ub})


def cmd_codec_sim(args, threads):
    cfg = _code_config(args)
    if args.trials < 1:
        raise ConfigError("--trials must be at least 1")
    if args.mode == "genie":
        g = genie_aided_bit_error(cfg, args.trials, args.seed, threads)
        rows = [[i, g.errors[i], g.trials, g.predicted[i]] for i in range(cfg.N)]
        ok = g.within_sigma()
        return Table(["index", "errors", "trials", "predicted"], rows,
                     {"indices": cfg.N, "within_3sigma": int(ok.sum())})
    r = fer_sim(cfg, args.trials, args.seed, threads)
    ub = union_bound(cfg.channel, cfg.n, cfg.frozen)
    row = [r.frame_errors, r.trials, r.fer, r.ci_low, r.ci_high, ub]
    return Table(["frame_errors", "trials", "fer", "ci_low", "ci_high", "union_bound"], [row],
                 {"k": cfg.k, "fer": r.fer, "ci_high": r.ci_high, "union_bound": ub})


# --- parser ------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quantpolar", description=__doc__.split("\n\n")[0],
        epilog=__doc__.split("Output columns\n--------------\n")[1],
        formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", default="-", help="output path; '-' for stdout")
    common.add_argument("--threads", type=int, default=None,
                        help="worker count (default: $QUANTPOLAR_THREADS or all cores)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=func)
        return p

    channel_help = "'p,m,z' or a JSON file"
    p = add("evolve", cmd_evolve, "evolve a three-level state along a sign sequence")
    p.add_argument("--channel", required=True, help=channel_help)
    p.add_argument("--signs", required=True, help="e.g. '+-+'")

    p = add("region-check", cmd_region_check, "test membership under the limiting curve")
    p.add_argument("--channel", required=True, help=channel_help)
    p.add_argument("--tol", type=float, default=1e-9)

    p = add("bounds", cmd_bounds, "bracket the rate of a three-level channel")
    p.add_argument("--channel", required=True, help=channel_help)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--n-max", type=int, default=20)

    p = add("verify-submartingale", cmd_verify, "grid check of the martingale inequality for I^e")
    p.add_argument("--exponent", type=float, required=True)
    p.add_argument("--grid", type=int, default=500)
    p.add_argument("--region", action="store_true", help="restrict to the region under the curve")
    p.add_argument("--direction", choices=("sub", "super"), default="sub")

    for name, func, text in (
        ("mc-ratio", cmd_mc_ratio, "Monte Carlo ratio log M_n / log Z_n"),
        ("mc-exponent", cmd_mc_exponent, "Monte Carlo decay exponent log2(-log2 Z_n) / n"),
    ):
        p = add(name, func, text)
        p.add_argument("--channel", required=True, help=channel_help)
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--count", type=int, required=True)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--z-cutoff", type=float, default=1e-6)
        p.add_argument("--dump-jsonl", default=None, help="write raw trajectories as JSON lines")
        if name == "mc-ratio":
            p.add_argument("--eps-r", type=float, default=0.15)

    p = add("weak-polarize", cmd_weak, "D-level weak polarization under a uniform static quantizer")
    p.add_argument("--channel", required=True, help="'p,m,z' or a SymmetricDist JSON file")
    p.add_argument("--levels", type=int, default=2, help="quantizer pairs (D = 2*levels + 1)")
    p.add_argument("--step", type=float, default=1.0)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)

    p = add("rate-search", cmd_rate_search, "achievable rates of quantized procedures")
    p.add_argument("--channel", required=True, help="'p,m,z' or a SymmetricDist JSON file")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--method", choices=("plain", "pair", "single", "dynamic", "all"), default="all")
    p.add_argument("--grid", type=int, default=16)

    for name, func in (("codec-construct", cmd_codec_construct), ("codec-sim", cmd_codec_sim)):
        p = add(name, func, "polar code construction" if name == "codec-construct" else "codec simulation")
        p.add_argument("--channel", default=None, help=channel_help)
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--k", type=int, default=None)
        p.add_argument("--target", type=float, default=None, help="union-bound target for choosing k")
        p.add_argument("--tie-policy", choices=TIE_POLICIES, default="coin")
        p.add_argument("--config", default=None, help="CodeConfig JSON file")
        if name == "codec-construct":
            p.add_argument("--config-out", default=None)
        else:
            p.add_argument("--mode", choices=("genie", "fer"), default="fer")
            p.add_argument("--trials", type=int, default=10000)
            p.add_argument("--seed", type=int, default=0)
    return parser


def _resolved_config(args, argv) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "threads", "out")}
    cfg["argv"] = list(argv)
    cfg["version"] = __version__
    return cfg


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        threads = resolve_threads(args.threads)
        table = args.func(args, threads)
        text = table.render(args.format, _resolved_config(args, argv))
        if args.out == "-":
            sys.stdout.write(text)
        else:
            Path(args.out).write_text(text, encoding="utf-8")
    except (ValueError, OSError) as exc:
        print(f"quantpolar {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"quantpolar {args.command}: internal error: {exc!r}", file=sys.stderr)
        return 1
    print(_summary_line(args.command, table.summary), file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
