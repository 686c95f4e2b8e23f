"""Command-line entry point: ``laotest <command> --config run.json``.

Exit codes: 0 success, 1 conditions violated, 2 bad config or input,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Any

import numpy as np

from . import compound, simulation, single
from .config import ConfigError, ExperimentConfig, load_config, read_samples
from .probability import empirical_type, kl_divergence
from .projection import ConvergenceFailure, InfeasibleGeometry

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class CommandError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def jsonable(obj: Any) -> Any:
    """Replace infinities by "inf" and numpy scalars by Python numbers."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    return obj


def _csv_cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def to_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_csv_cell(v) for v in r])
    return buf.getvalue()


def _report_dict(report: single.ConditionReport) -> dict:
    return {
        "ok": report.ok,
        "violations": [v.to_dict() for v in report.violations],
        "bounds": [{"key": list(k) if isinstance(k, tuple) else k, "bound": b}
                   for k, b in report.bounds.items()],
    }


def _tuple_label(t) -> str:
    return ",".join(str(x) for x in t)


# ---------------------------------------------------------------------------
# commands; each returns (payload, csv_table or None, exit code)


def cmd_check(cfg: ExperimentConfig, args) -> tuple[dict, None, int]:
    if cfg.K == 1:
        report = single.check_conditions(cfg.H, cfg.single_given())
    else:
        report = compound.check_conditions_multi(cfg.multi_spec())
    body = {"command": "check", "log_base": cfg.H.log_base, "objects": cfg.K, **_report_dict(report)}
    return body, None, EXIT_OK if report.ok else EXIT_VIOLATION


def _matrix_rows(mat: single.ReliabilityMatrix, obj: int) -> list[list]:
    return [[obj, m, l, mat(m, l)] for m in range(1, mat.M + 1) for l in range(1, mat.M + 1)]


def cmd_matrix(cfg: ExperimentConfig, args):
    H = cfg.H
    mats, reports = [], []
    for i, s in enumerate(cfg.slices, start=1):
        rep = single.check_conditions(H, s, allow_zero=True)
        reports.append(rep)
        if not rep.ok and not args.force:
            raise CommandError(EXIT_VIOLATION, f"object {i}: conditions violated ({single.ConditionsViolated(rep)}); "
                                               "rerun with --force to build anyway")
        mats.append(single.build_matrix(H, s, force=args.force))
    body = {
        "command": "matrix",
        "log_base": H.log_base,
        "objects": [
            {"object": i, "conditions_ok": rep.ok, "stein": [m for m, e in enumerate(s, 1) if e == 0],
             **mat.to_dict()}
            for i, (mat, rep, s) in enumerate(zip(mats, reports, cfg.slices), start=1)
        ],
    }
    rows = [r for i, mat in enumerate(mats, start=1) for r in _matrix_rows(mat, i)]
    return body, (["object", "true", "accepted", "exponent"], rows), EXIT_OK


def cmd_tensor(cfg: ExperimentConfig, args):
    if cfg.K < 2:
        raise ConfigError("tensor needs objects >= 2")
    spec = cfg.multi_spec()
    family = compound.classify_family(spec.slices())
    fill = None
    if cfg.family_c:
        unknown = set(cfg.family_c) - {"hypothesis", "compound_givens"}
        if unknown:
            raise ConfigError(f"family_c: unknown keys {sorted(unknown)}")
        try:
            fill = compound.family_c_fill(spec, int(cfg.family_c["hypothesis"]),
                                          [float(g) for g in cfg.family_c["compound_givens"]],
                                          force=args.force)
        except KeyError as e:
            raise ConfigError(f"family_c: missing {e.args[0]!r}") from None
        except ValueError as e:
            raise ConfigError(str(e)) from None
        tensor = fill.tensor
    else:
        report = compound.check_conditions_multi(spec)
        zeros = family.label != "A"
        if not report.ok and not args.force and not zeros:
            raise CommandError(EXIT_VIOLATION, "conditions violated; rerun with --force to build anyway")
        tensor = compound.build_compound(spec, force=args.force)

    M, K = tensor.M, tensor.K
    selection = [(tuple(m), tuple(l)) for m, l in cfg.entries]
    if fill is not None:
        mp = fill.hypothesis
        selection.append(((mp,) * K, (M,) * K))
    entries, rows = [], []
    for m, l in selection:
        value = tensor(m, l)
        parts = [] if m == l else tensor.decomposition(m, l)
        entries.append({"true": list(m), "accepted": list(l), "value": value, "summands": parts})
        rows.append([_tuple_label(m), _tuple_label(l), value])
    body = {"command": "tensor", "log_base": tensor.log_base, "objects": K, "M": M,
            "family": {"label": family.label, "witness": [list(w) for w in family.witness]},
            "entries": entries}
    if fill is not None:
        body["family_c"] = {"hypothesis": fill.hypothesis, "right_exponents": list(fill.right_exponents),
                            "reconstructed_givens": list(fill.givens())}
    if cfg.dense:
        try:
            dense = tensor.dense()
        except ValueError as e:
            raise ConfigError(str(e)) from None
        labels = [_tuple_label(t) for t in tensor.tuples()]
        body["dense"] = {"tuples": labels, "values": dense}
        rows = [[labels[r], labels[c], dense[r, c]] for r in range(len(labels)) for c in range(len(labels))]
    return body, (["true", "accepted", "exponent"], rows), EXIT_OK


def cmd_classify(cfg: ExperimentConfig, args):
    if not args.data:
        raise ConfigError("classify needs --data <path>")
    H = cfg.H
    seqs = read_samples(args.data, cfg.K, H.alphabet_size)
    decisions, objects = [], []
    for i, (x, s) in enumerate(zip(seqs, cfg.slices), start=1):
        regions = single.DecisionRegions.from_given(H, s)
        d = single.classify(regions, x)
        t = empirical_type(x, H.alphabet_size)
        q = t.counts / t.length
        decisions.append(d)
        objects.append({
            "object": i, "decision": d, "counts": t.counts.tolist(), "type": q.tolist(),
            "divergences": [kl_divergence(q, H[m], H.log_base) for m in range(1, H.M + 1)],
        })
    return {"command": "classify", "decision": decisions, "N": int(len(seqs[0])), "objects": objects}, None, EXIT_OK


def _parse_pair(pair, K):
    if K == 1:
        m, l = pair
        return int(m), int(l)
    m, l = pair
    return tuple(int(v) for v in m), tuple(int(v) for v in l)


def cmd_simulate(cfg: ExperimentConfig, args):
    if len(cfg.n_grid) < 1:
        raise ConfigError("simulate needs an n_grid")
    if "monte_carlo" in cfg.methods and cfg.trials < 1:
        raise ConfigError("monte_carlo needs trials >= 1")
    H, K = cfg.H, cfg.K
    regions = [single.DecisionRegions.from_given(H, s) for s in cfg.slices]
    force = args.force
    if K == 1:
        mat = single.build_matrix(H, cfg.slices[0], force=force)
    else:
        tensor = compound.build_compound(cfg.multi_spec(), force=force)
    workers = args.workers or cfg.workers
    results, rows = [], []
    for pair in cfg.pairs:
        m, l = _parse_pair(pair, K)
        reject = m == l
        predicted = mat(m, l) if K == 1 else tensor(m, l)
        estimates = []
        for n in cfg.n_grid:
            if "exact" in cfg.methods:
                if K == 1:
                    est = simulation.exact_error(regions[0], m, l, n, rejection=reject)
                else:
                    est = simulation.compound_exact_error(regions, m, l, n, rejection=reject)
                estimates.append(est)
            if "monte_carlo" in cfg.methods:
                if K == 1:
                    est = simulation.monte_carlo_error(regions[0], m, l, n, cfg.trials, cfg.seed,
                                                       workers=workers, rejection=reject)
                else:
                    est = _compound_mc(regions, m, l, n, cfg.trials, cfg.seed, workers, reject)
                estimates.append(est)
        entry = {"true": m if K == 1 else list(m), "accepted": l if K == 1 else list(l),
                 "predicted": predicted, "estimates": [e.to_dict() for e in estimates]}
        exact = [e for e in estimates if e.method == "exact"]
        if math.isinf(predicted):
            entry["fit"] = None
            entry["note"] = "predicted exponent is infinite; no fit attempted"
        elif len(exact) >= 3:
            fit = simulation.fit_log_errors([e.N for e in exact], [e.log_alpha for e in exact], H.log_base)
            entry["fit"] = fit.to_dict()
            entry["ratio"] = fit.slope / predicted if predicted > 0 else None
        else:
            entry["fit"] = None
        results.append(entry)
        for e in estimates:
            rows.append([_tuple_label(np.atleast_1d(m)), _tuple_label(np.atleast_1d(l)), e.method, e.N,
                         e.alpha, e.log_alpha, predicted])
    body = {"command": "simulate", "log_base": H.log_base, "objects": K, "methods": list(cfg.methods),
            "trials": cfg.trials, "seed": cfg.seed, "results": results}
    header = ["true", "accepted", "method", "N", "alpha", "log_alpha", "predicted"]
    return body, (header, rows), EXIT_OK


def _compound_mc(regions, m, l, n, trials, seed, workers, reject):
    """Product of per-object Monte Carlo frequencies, object i seeded with seed + i."""
    total = 0.0
    hits = []
    for i, (r, mi, li) in enumerate(zip(regions, m, l)):
        est = simulation.monte_carlo_error(r, mi, li, n, trials, seed + i, workers=workers)
        total += est.log_alpha
        hits.append(est.hits)
    if reject:
        total = math.log(-math.expm1(total)) if total < 0 else -math.inf
    return simulation.ErrorEstimate(total, n, "monte_carlo", trials=trials, seed=seed, hits=min(hits))


def cmd_sweep(cfg: ExperimentConfig, args):
    """Exponent curve (one object) or surface (two objects) over prescribed exponents.

    ``value`` is the LAO reliability: the formula value where the
    prescription is feasible and 0 where the conditions fail.  ``raw`` is
    the formula value regardless.
    """
    if not cfg.sweep:
        raise ConfigError("sweep needs a 'sweep' section")
    unknown = set(cfg.sweep) - {"axes", "target"}
    if unknown:
        raise ConfigError(f"sweep: unknown keys {sorted(unknown)}")
    axes = cfg.sweep_axes()
    if "target" not in cfg.sweep:
        raise ConfigError("sweep: missing 'target'")
    H, K = cfg.H, cfg.K
    target = _parse_pair(cfg.sweep["target"], K)
    if K == 1 and len(axes) != 1:
        raise ConfigError("a single-object sweep takes exactly one axis")
    if K >= 2 and len(axes) != 2:
        raise ConfigError("a multi-object sweep takes exactly two axes")
    for a in axes:
        if not 1 <= a.hypothesis <= H.M - 1 or not 1 <= a.obj <= K:
            raise ConfigError(f"sweep axis ({a.obj}, {a.hypothesis}) out of range")

    grids = [a.values() for a in axes]
    rows = []
    points = [(v,) for v in grids[0]] if K == 1 else [(u, v) for u in grids[0] for v in grids[1]]
    for point in points:
        slices = [list(s) for s in cfg.slices]
        for a, v in zip(axes, point):
            slices[a.obj - 1][a.hypothesis - 1] = v
        if K == 1:
            ok = single.check_conditions(H, slices[0]).ok
            raw = single.build_matrix(H, slices[0], force=True)(*target)
        else:
            spec = compound.MultiObjectSpec.from_slices(H, slices)
            ok = compound.check_conditions_multi(spec).ok
            raw = compound.build_compound(spec, force=True)(*target)
        rows.append([*point, raw if ok else 0.0, raw, ok])

    def axis_name(a):
        return f"E_{a.hypothesis}|{a.hypothesis}" if K == 1 else f"obj{a.obj}:E_{a.hypothesis}|{a.hypothesis}"

    tname = f"E_{target[0]}|{target[1]}" if K == 1 else f"E_{_tuple_label(target[0])}|{_tuple_label(target[1])}"
    header = [axis_name(a) for a in axes] + ["value", "raw", "feasible"]
    body = {"command": "sweep", "log_base": H.log_base, "target": tname, "columns": header, "rows": rows}
    return body, (header, rows), EXIT_OK


COMMANDS = {
    "check": cmd_check,
    "matrix": cmd_matrix,
    "tensor": cmd_tensor,
    "classify": cmd_classify,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
}
CSV_COMMANDS = {"matrix", "tensor", "simulate", "sweep"}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="experiment config (JSON)")
    common.add_argument("--log-base", type=float, default=None, help="override the config's log base")
    common.add_argument("--output", default=None, help="write the result here instead of stdout")
    common.add_argument("--format", choices=["json", "csv"], default=None,
                        help="json (default; csv for sweep)")
    common.add_argument("--seed", type=int, default=None, help="override the config's seed")
    common.add_argument("--force", action="store_true", help="build even when conditions fail")
    parser = argparse.ArgumentParser(prog="laotest", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "classify":
            p.add_argument("--data", help="one whitespace-separated symbol sequence per line")
        if name == "simulate":
            p.add_argument("--workers", type=int, default=None, help="threads for Monte Carlo trials")
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    fmt = args.format or ("csv" if args.command == "sweep" else "json")
    try:
        cfg = load_config(args.config, args.log_base, args.seed)
        if fmt == "csv" and args.command not in CSV_COMMANDS:
            raise ConfigError(f"{args.command} has no CSV output")
        body, table, code = COMMANDS[args.command](cfg, args)
    except CommandError as e:
        print(f"laotest: {e}", file=sys.stderr)
        return e.code
    except ConfigError as e:
        print(f"laotest: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceFailure, InfeasibleGeometry, OverflowError, ArithmeticError) as e:
        print(f"laotest: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except single.ConditionsViolated as e:
        print(f"laotest: conditions violated: {e}", file=sys.stderr)
        return EXIT_VIOLATION
    except (ValueError, IndexError, TypeError) as e:
        print(f"laotest: invalid input: {e}", file=sys.stderr)
        return EXIT_CONFIG

    if fmt == "csv":
        text = to_csv(*table)
    else:
        text = json.dumps(jsonable(body), indent=2) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
