"""Config-driven experiment runner.

    unidisc run config.json [--seed S] [--max-cpu W] [--cap C] [--out DIR]
    unidisc report DIR [--out DIR]
    unidisc schema

Exit codes: 0 ok, 2 invalid config, 3 combinatorial or size cap exceeded,
4 internal inconsistency.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .dictionary import (
    DEFAULT_SUPPORT_CAP,
    build_sine_system,
    build_trig_contiguous,
    build_trig_dictionary,
    build_trig_from_grid,
    hyperbolic_cross,
    wiener_class_instance,
)
from .discretization import empirical_min_m, one_sided_check, rip_delta, success_probability, universal_check
from .entropy import entropy_numbers, generate_cloud
from .errors import CombinatorialLimitError, InternalInconsistencyError, SizeLimitError
from .experiments import certify_iid_points, exact_recovery_trials, lebesgue_trials, perturbed_target
from .lowerbound import dirichlet_search, min_m_threshold, sine_failure_certificate
from .recovery import block_greedy, ls_universal
from .sampling import draw_points, normalized_system, pointset_csv_text

EXIT_OK, EXIT_CONFIG, EXIT_CAP, EXIT_INTERNAL = 0, 2, 3, 4


class ConfigError(Exception):
    def __init__(self, message: str, path: tuple = ()):
        super().__init__(message)
        self.path = path


def load_schema() -> dict:
    return json.loads(resources.files("unidisc").joinpath("config_schema.json").read_text())


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def _line_of(text: str, path) -> int:
    """Line of the deepest key in ``path`` found by scanning forward through ``text``."""
    pos, line = 0, 1
    for key in path:
        if not isinstance(key, str):
            continue
        i = text.find(json.dumps(key), pos)
        if i < 0:
            break
        pos = i
        line = text.count("\n", 0, i) + 1
    return line


def _require(cfg: dict, section: str, key: str, sub: str) -> None:
    if key not in cfg.get(section, {}):
        raise ConfigError(f"{sub} requires {section}.{key}", (section,))


def _semantic_check(cfg: dict) -> None:
    sub = cfg["subcommand"]
    dcfg, params, samp = cfg["dictionary"], cfg.get("params", {}), cfg.get("sampling", {})
    fam = dcfg["family"]
    need = {"trig": "M", "trig-contiguous": "N", "hyperbolic-cross": "N", "sine": "N"}[fam]
    if need not in dcfg and not (sub == "block-greedy" and fam == "trig"):
        raise ConfigError(f"dictionary family {fam!r} requires {need}", ("dictionary",))
    if fam in ("trig-contiguous", "sine") and dcfg.get("d", 1) != 1:
        raise ConfigError(f"dictionary family {fam!r} is one-dimensional", ("dictionary", "d"))
    if sub == "lowerbound" and fam != "sine":
        raise ConfigError("lowerbound requires the sine family", ("dictionary", "family"))
    if sub == "block-greedy" and fam != "trig":
        raise ConfigError("block-greedy requires the trig family", ("dictionary", "family"))
    if sub in ("discretize-check", "rip", "ls-universal", "lowerbound", "block-greedy"):
        _require(cfg, "sampling", "m", sub)
    if sub not in ("lowerbound", "block-greedy"):
        _require(cfg, "params", "v", sub)
    if sub == "block-greedy":
        for key in ("a", "max_level", "n_values"):
            _require(cfg, "params", key, sub)
    if "N" in dcfg and "v" in params and params["v"] > dcfg["N"]:
        raise ConfigError(f"v = {params['v']} exceeds the dictionary size N = {dcfg['N']}", ("params", "v"))
    if "M" in dcfg and "v" in params:
        size = (2 * dcfg["M"] + 1) ** dcfg.get("d", 1)
        if params["v"] > size:
            raise ConfigError(f"v = {params['v']} exceeds the dictionary size {size}", ("params", "v"))
    if samp.get("mode") == "equispaced" and dcfg.get("d", 1) != 1:
        raise ConfigError("equispaced sampling is one-dimensional", ("sampling", "mode"))
    if "m" in samp and "m_sweep" in samp:
        raise ConfigError("give either sampling.m or sampling.m_sweep", ("sampling", "m_sweep"))


def load_config(path: str | Path) -> dict:
    """Parse and validate a config file; :class:`ConfigError` messages are ``file:line: text``."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}:1: cannot read config: {exc.strerror}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        err = errors[0]
        where = list(err.absolute_path)
        if err.validator == "additionalProperties":
            extra = [k for k in err.instance if k not in err.schema.get("properties", {})]
            where = where + sorted(extra)[:1]
        loc = ".".join(map(str, err.absolute_path)) or "<root>"
        raise ConfigError(f"{path}:{_line_of(text, where)}: {loc}: {err.message}")
    try:
        _semantic_check(cfg)
    except ConfigError as exc:
        raise ConfigError(f"{path}:{_line_of(text, exc.path)}: {exc}") from None
    return cfg


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def build_dictionary(dcfg: dict):
    fam, d = dcfg["family"], dcfg.get("d", 1)
    if fam == "trig":
        D = build_trig_dictionary(dcfg["M"], d)
    elif fam == "trig-contiguous":
        D = build_trig_contiguous(dcfg["N"])
    elif fam == "hyperbolic-cross":
        D = build_trig_from_grid(hyperbolic_cross(dcfg["N"], d))
    else:
        return build_sine_system(dcfg["N"], dcfg.get("scale", math.sqrt(2.0)))
    if "scale" in dcfg:
        D = D.scaled(dcfg["scale"])
    return D


def dictionary_key(dcfg: dict) -> str:
    return dcfg["family"] + "(" + ",".join(f"{k}={dcfg[k]}" for k in sorted(dcfg) if k != "family") + ")"


def _points(cfg: dict, D, seed: int):
    samp = cfg.get("sampling", {})
    return draw_points(samp["m"], D.domain, samp.get("mode", "iid-uniform"), seed, samp.get("stream", 0))


def _coeff_list(vals) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(vals, dtype=complex)]


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in r])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# subcommands; each returns (results dict, {filename: text})
# ---------------------------------------------------------------------------


def _discretize_check(cfg, ctx):
    D = build_dictionary(cfg["dictionary"])
    p = cfg.get("params", {})
    xi = _points(cfg, D, ctx["seed"])
    C1 = p.get("C1", 0.5)
    if p.get("one_sided"):
        cert = one_sided_check(D, p["v"], xi, C1, cap=ctx["cap"])
    else:
        cert = universal_check(D, p["v"], xi, C1, p.get("C2", 1.5), cap=ctx["cap"])
    return {"certificate": cert.to_dict(), "m": xi.m}, {"points.csv": pointset_csv_text(xi)}


def _sweep_m(cfg, ctx):
    D = build_dictionary(cfg["dictionary"])
    p, samp = cfg.get("params", {}), cfg.get("sampling", {})
    C1, C2, trials = p.get("C1", 0.5), p.get("C2", 1.5), p.get("trials", 100)
    if "m_sweep" in samp:
        from .discretization import SweepResult

        sweep = SweepResult()
        for m in sorted(set(samp["m_sweep"])):
            sweep.add(success_probability(D, p["v"], m, C1, C2, trials, ctx["seed"], ctx["cap"], ctx["workers"]))
        res = {"m_hat": None, "target": None, "sweep": sweep.to_dict()}
    else:
        mm = empirical_min_m(
            D, p["v"], C1, C2, p.get("target", 0.9), trials, ctx["seed"],
            p.get("m_start", 1), p.get("m_cap", 1 << 14), ctx["cap"], ctx["workers"],
        )
        sweep, res = mm.sweep, mm.to_dict()
    res.update(v=p["v"], C1=C1, C2=C2, trials=trials)
    return res, {"sweep.csv": sweep.to_csv()}


def _rip(cfg, ctx):
    D = build_dictionary(cfg["dictionary"])
    v = cfg["params"]["v"]
    xi = _points(cfg, D, ctx["seed"])
    rep = rip_delta(normalized_system(D, xi), v, ctx["cap"])
    cert = universal_check(D, v, xi, 0.5, 1.5, cap=ctx["cap"])
    return {"rip": rep.to_dict(), "C1_global": cert.C1_global, "C2_global": cert.C2_global, "m": xi.m}, {}


def _recovery_points(cfg, ctx, D, u):
    if "m" in cfg.get("sampling", {}):
        xi = _points(cfg, D, ctx["seed"])
        cert = universal_check(D, u, xi, cap=ctx["cap"])
        return xi, cert
    cp = certify_iid_points(D, u, seed=ctx["seed"])
    return cp.xi, cp.certificate


def _recover(cfg, ctx):
    D = build_dictionary(cfg["dictionary"])
    p = cfg["params"]
    v, c = p["v"], p.get("c", 3)
    u = p.get("u", (1 + c) * v)
    xi, cert = _recovery_points(cfg, ctx, D, u)
    trials = exact_recovery_trials(D, xi, v, c, p.get("n_targets", 100), ctx["seed"], p.get("t", 1.0))
    rows = [(i, it, r) for i, tr in enumerate(trials) for it, r in enumerate(tr.residual_norms)]
    res = {
        "v": v, "c": c, "u": u, "m": xi.m,
        "certificate": cert.to_dict(),
        "recovered": sum(t.recovered for t in trials),
        "n_targets": len(trials),
        "max_residual": max(t.residual for t in trials),
        "targets": [
            {"support": list(t.target.support), "values": _coeff_list(t.target.values),
             "selected": list(t.trace_support), "iterations": t.iterations,
             "residual": t.residual, "recovered": t.recovered}
            for t in trials
        ],
    }
    return res, {"trace.csv": _csv(rows, ["target", "iteration", "residual_norm"])}


def _lebesgue(cfg, ctx):
    D = build_dictionary(cfg["dictionary"])
    p = cfg["params"]
    v, c = p["v"], p.get("c", 3)
    u = p.get("u", (1 + c) * v)
    xi, cert = _recovery_points(cfg, ctx, D, u)
    deltas = p.get("deltas", [1e-6, 1e-3, 1e-1])
    trials = lebesgue_trials(D, xi, v, c, deltas, p.get("n_targets", 50), ctx["seed"], p.get("t", 1.0))
    rows = [(t.delta, t.index, t.residual, t.sigma, t.discrete_ratio) for t in trials]
    res = {
        "v": v, "c": c, "u": u, "m": xi.m, "deltas": deltas,
        "certificate": cert.to_dict(),
        "max_ratio": max(t.discrete_ratio for t in trials),
        "max_ratio_by_delta": {repr(d): max(t.discrete_ratio for t in trials if t.delta == d) for d in deltas},
    }
    return res, {"lebesgue.csv": _csv(rows, ["delta", "target", "residual", "sigma_v", "ratio"])}


def _ls_universal(cfg, ctx):
    from .sampling import rng_stream

    D = build_dictionary(cfg["dictionary"])
    p = cfg["params"]
    v = p["v"]
    xi = _points(cfg, D, ctx["seed"])
    delta = p.get("deltas", [0.0])[0]
    f0, coeffs = perturbed_target(D, xi, v, delta, rng_stream(ctx["seed"], 1))
    rr = ls_universal(f0, D, v, xi, cap=ctx["cap"])
    cert = universal_check(D, p.get("u", 2 * v), xi, cap=ctx["cap"])
    return {
        "v": v, "m": xi.m, "delta": delta, "target": _coeff_list(coeffs),
        "certificate": cert.to_dict(), "result": rr.to_dict(),
    }, {}


def _block_greedy(cfg, ctx):
    dcfg, p = cfg["dictionary"], cfg["params"]
    d = dcfg.get("d", 1)
    f = wiener_class_instance(p["a"], p.get("b", 0.0), d, p["max_level"], ctx["seed"])
    xi = _points(cfg, build_trig_from_grid(f.grid), ctx["seed"])
    M = None
    if "M" in dcfg:
        M = dcfg["M"]
    rows, runs = [], []
    for n in p["n_values"]:
        r = block_greedy(f, n, xi, p.get("beta"), M=M)
        rows.append((n, r.term_count, r.error_mixed, r.term_count / 2**n))
        runs.append(r.to_dict())
    res = {"a": p["a"], "b": p.get("b", 0.0), "d": d, "max_level": p["max_level"], "m": xi.m, "runs": runs}
    return res, {"block_greedy.csv": _csv(rows, ["n", "term_count", "error_mixed", "terms_over_2n"])}


def _lowerbound(cfg, ctx):
    dcfg = cfg["dictionary"]
    N, scale = dcfg["N"], dcfg.get("scale", math.sqrt(2.0))
    C1 = cfg.get("params", {}).get("C1", 0.5)
    D = build_sine_system(N, scale)
    xi = _points(cfg, D, ctx["seed"])
    x = xi.points[:, 0]
    dr = dirichlet_search(x, N)
    cert = sine_failure_certificate(x, N, C1, scale)
    res = {
        "N": N, "m": xi.m, "scale": scale, "C1": C1,
        "threshold_m": min_m_threshold(N, C1, scale),
        "dirichlet": {"k": dr.k, "a": list(dr.a), "max_error": dr.max_error, "bound": dr.bound},
        "certificate": None if cert is None else cert.to_dict(),
    }
    if cert is not None:
        check = one_sided_check(D, 1, xi, C1, cap=ctx["cap"])
        res["one_sided_check"] = check.to_dict()
    return res, {}


def _entropy(cfg, ctx):
    D = build_dictionary(cfg["dictionary"])
    p = cfg["params"]
    k_max = p.get("k_max", 10)
    # the net must stay a small part of the cloud, or eps_k collapses at large k
    n_members = p.get("n_members", 4 * 2**k_max)
    cloud = generate_cloud(D, p["v"], p.get("p", 2.0), n_members, ctx["seed"], p.get("grid_size", 2048))
    est = entropy_numbers(cloud, k_max, N=D.size)
    return {"v": p["v"], "p": cloud.p, "n_members": cloud.size, "entropy": est.to_dict()}, {"entropy.csv": est.to_csv()}


HANDLERS = {
    "discretize-check": _discretize_check,
    "sweep-m": _sweep_m,
    "rip": _rip,
    "recover": _recover,
    "lebesgue": _lebesgue,
    "ls-universal": _ls_universal,
    "block-greedy": _block_greedy,
    "lowerbound": _lowerbound,
    "entropy": _entropy,
}


# ---------------------------------------------------------------------------
# run and report
# ---------------------------------------------------------------------------


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def run(config_path, seed=None, max_cpu=1, cap=None, out=None) -> int:
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if seed is not None:
        cfg["seed"] = seed
    cfg.setdefault("seed", 0)
    ctx = {"seed": cfg["seed"], "workers": max(1, max_cpu or 1), "cap": cap or DEFAULT_SUPPORT_CAP}
    out_dir = Path(out or cfg.get("output") or Path("results") / cfg["subcommand"])
    effective = dict(cfg, cap=ctx["cap"])
    effective.pop("output", None)
    config_hash = hashlib.sha256(json.dumps(effective, sort_keys=True).encode()).hexdigest()

    start = time.perf_counter()
    try:
        results, extra = HANDLERS[cfg["subcommand"]](cfg, ctx)
    except (CombinatorialLimitError, SizeLimitError) as exc:
        print(f"error: cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except InternalInconsistencyError as exc:
        print(f"error: internal inconsistency: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    wall = time.perf_counter() - start

    results = {"config": effective, "subcommand": cfg["subcommand"], "results": results}
    files = {"results.json": _dump(results), **extra}
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out_dir / name).write_text(text)
    manifest = {
        "config_hash": config_hash,
        "version": __version__,
        "seed": cfg["seed"],
        "subcommand": cfg["subcommand"],
        "dictionary": dictionary_key(cfg["dictionary"]),
        "wall_clock_seconds": wall,
        "outputs": sorted(files),
    }
    (out_dir / "manifest.json").write_text(_dump(manifest))
    print(out_dir / "results.json")
    return EXIT_OK


def _collect(root: Path):
    runs, skipped = [], []
    for mpath in sorted(root.rglob("manifest.json")):
        name = mpath.parent.relative_to(root).as_posix()
        try:
            manifest = json.loads(mpath.read_text())
            for key in ("subcommand", "dictionary", "outputs"):
                if key not in manifest:
                    raise ValueError(f"missing key {key!r}")
            results = json.loads((mpath.parent / "results.json").read_text())["results"]
        except (OSError, ValueError, KeyError, TypeError) as exc:
            print(f"warning: skipping {mpath}: {exc}", file=sys.stderr)
            skipped.append((name, str(exc)))
            continue
        runs.append((name, manifest, results))
    return runs, skipped


def _rows(runs):
    """Long-format rows ``(table, group, run, x, y, low, high)``."""
    rows = []
    for name, man, res in runs:
        sub, key = man["subcommand"], man["dictionary"]
        if sub == "sweep-m":
            for e in res["sweep"]["entries"]:
                rows.append(("sweep", f"{key} v={res['v']}", name, e["m"], e["estimate"], e["low"], e["high"]))
        elif sub == "recover":
            rows.append(("recovery", key, name, res["v"], res["max_residual"], "", ""))
        elif sub == "lebesgue":
            rows.append(("lebesgue", key, name, res["v"], res["max_ratio"], "", ""))
        elif sub == "ls-universal":
            rows.append(("recovery", key, name, res["v"], res["result"]["error_continuous"], "", ""))
        elif sub == "entropy":
            ent = res["entropy"]
            for k, e in zip(ent["ks"], ent["eps"]):
                rows.append(("entropy", f"{key} v={res['v']}", name, k, e, "", ""))
        elif sub == "block-greedy":
            for r in res["runs"]:
                rows.append(("block-greedy", key, name, r["n"], r["error_mixed"], "", ""))
    rows.sort(key=lambda r: (r[0], r[1], r[2], r[3]))
    return rows


_AXES = {
    "sweep": ("m", "success probability"),
    "recovery": ("v", "recovery error"),
    "lebesgue": ("v", "max Lebesgue ratio"),
    "entropy": ("k", "eps_k"),
    "block-greedy": ("n", "mu_xi error"),
}


def _markdown(runs, skipped, rows) -> str:
    lines = ["# Summary", ""]
    if not runs:
        lines += ["No runs found.", ""]
    else:
        lines += ["| run | subcommand | dictionary | seed |", "|---|---|---|---|"]
        lines += [f"| {n} | {m['subcommand']} | {m['dictionary']} | {m.get('seed', '')} |" for n, m, _ in runs]
        lines.append("")
    groups: dict = {}
    for table, group, run_name, x, y, _, _ in rows:
        groups.setdefault((table, group), {}).setdefault(x, {})[run_name] = y
    for (table, group), by_x in groups.items():
        xlab, ylab = _AXES[table]
        names = sorted({r for vals in by_x.values() for r in vals})
        lines += [f"## {table}: {group}", "", f"{ylab} by {xlab}", ""]
        lines.append("| " + " | ".join([xlab, *names]) + " |")
        lines.append("|" + "---|" * (len(names) + 1))
        for x in sorted(by_x):
            cells = [repr(by_x[x][n]) if n in by_x[x] else "" for n in names]
            lines.append("| " + " | ".join([str(x), *cells]) + " |")
        lines.append("")
    if skipped:
        lines += ["## Skipped", ""] + [f"- {n}: {why}" for n, why in skipped] + [""]
    return "\n".join(lines)


def report(results_dir, out=None) -> int:
    root = Path(results_dir)
    if not root.is_dir():
        print(f"error: {root} is not a directory", file=sys.stderr)
        return EXIT_CONFIG
    runs, skipped = _collect(root)
    rows = _rows(runs)
    out_dir = Path(out) if out else root
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "summary.csv").write_text(_csv(rows, ["table", "group", "run", "x", "y", "low", "high"]))
    (out_dir / "summary.md").write_text(_markdown(runs, skipped, rows))
    print(out_dir / "summary.md")
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="override the config seed")
    common.add_argument("--max-cpu", type=int, default=argparse.SUPPRESS, help="worker bound (default 1)")
    common.add_argument("--cap", type=int, default=argparse.SUPPRESS, help="support enumeration cap")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    parser = argparse.ArgumentParser(prog="unidisc", parents=[common], description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", parents=[common], help="run one experiment config")
    p_run.add_argument("config")
    p_rep = sub.add_parser("report", parents=[common], help="summarize a results directory")
    p_rep.add_argument("dir")
    sub.add_parser("schema", help="print the config JSON schema")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    opts = vars(args)
    if args.command == "run":
        return run(args.config, opts.get("seed"), opts.get("max_cpu", 1), opts.get("cap"), opts.get("out"))
    if args.command == "report":
        return report(args.dir, opts.get("out"))
    print(json.dumps(load_schema(), indent=2))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
