"""Command-line surface: quantize, mine, cross-validate, explain, attribute, assess.

Every output file carries a run manifest (inputs hashed, seeds, limits,
versions); payload records are deterministic given the same inputs, so
re-running a manifest reproduces them byte for byte (the manifest's own
`created`/`timings` fields are the only volatile bytes).

Exit codes: 0 success, 1 usage, 2 input error, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from typing import Optional

from . import __version__
from .core import Kind, SpaceError
from .explain import (ExplainError, attribute_rules, check_explanation,
                      enumerate_smallest, find_axp, reduce_explanation)
from .ingest import (Dataset, IngestError, fit_quantization, fold_indices,
                     load_csv, quantize, split_indices)
from .miner import (ExtractionLimit, MinerError, eclat_mine, extract_all,
                    load_knowledge, rule_accuracy, save_rules)
from .models import ModelError, load_model
from .oracle import OracleError

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3
SUBSETS_FORMAT = "kxp.subsets/1"

_INPUT_ERRORS = (IngestError, MinerError, ModelError, OracleError, ExplainError,
                 SpaceError, FileNotFoundError, IsADirectoryError,
                 json.JSONDecodeError, KeyError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write("%s: error: %s\n" % (self.prog, message))
        raise SystemExit(EXIT_USAGE)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _manifest(command: str, args: argparse.Namespace, inputs: list,
              seeds: Optional[dict] = None, limits: Optional[dict] = None) -> dict:
    return {"format": "kxp.manifest/1",
            "version": __version__,
            "command": command,
            "argv": list(getattr(args, "_argv", [])),
            "inputs": {str(p): _sha256(p) for p in inputs},
            "seeds": seeds or {},
            "limits": limits or {},
            "created": datetime.now(timezone.utc).isoformat(),
            "timings": {}}


def _write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_categorical(path, args) -> Dataset:
    class_col = getattr(args, "class_column", "last")
    if class_col == "none":
        class_col = None
    ds = load_csv(path, class_column=class_col)
    if ds.numeric_columns:
        raise IngestError("%s: numeric columns %s present; run `kxp quantize` first"
                          % (path, list(ds.numeric_columns)))
    return ds


def _limit_from_args(args) -> ExtractionLimit:
    return ExtractionLimit(max_size=args.max_size,
                           max_rules=args.max_rules,
                           time_budget=args.time_budget,
                           min_support=args.min_support)


# ---------------------------------------------------------------------------
# quantize

def cmd_quantize(args) -> int:
    class_col = None if args.class_column == "none" else args.class_column
    ds = load_csv(args.csv, class_column=class_col)
    spec = fit_quantization(ds, args.q, force=args.force)
    out_csv = args.out_prefix + ".csv"
    out_spec = args.out_prefix + ".qspec.json"
    t0 = time.perf_counter()
    quantized = quantize(ds, spec)
    quantized.write_csv(out_csv)
    manifest = _manifest("quantize", args, [args.csv],
                         limits={"q": args.q, "force": args.force})
    manifest["timings"]["wall"] = time.perf_counter() - t0
    obj = spec.to_obj()
    obj["manifest"] = manifest
    _write_json(out_spec, obj)
    print("quantized %d rows, %d numeric columns -> %s (+ %s)"
          % (ds.n_rows, len(spec.columns), out_csv, out_spec))
    return EXIT_OK


# ---------------------------------------------------------------------------
# mine

def cmd_mine(args) -> int:
    ds = _load_categorical(args.dataset, args)
    limit = _limit_from_args(args)
    manifest = _manifest("mine", args, [args.dataset],
                         limits={"engine": args.engine, "max_size": limit.max_size,
                                 "max_rules": limit.max_rules,
                                 "time_budget": limit.time_budget,
                                 "min_support": limit.min_support})
    t0 = time.perf_counter()
    if ds.n_rows == 0:
        from .core import FeatureSpace
        manifest["timings"]["wall"] = time.perf_counter() - t0
        save_rules(args.out, FeatureSpace(()), [], truncated=False,
                   engine=args.engine, manifest=manifest)
        print("empty dataset: wrote 0 rules -> %s" % args.out)
        return EXIT_OK
    if args.engine == "lattice":
        kb = extract_all(ds, limit)
        rules, truncated = kb.rules, kb.truncated
    else:
        rules = eclat_mine(ds, min_support=limit.min_support, limit=limit)
        truncated = limit.max_rules is not None and len(rules) >= limit.max_rules
    manifest["timings"]["wall"] = time.perf_counter() - t0
    manifest["truncated"] = truncated
    save_rules(args.out, ds.space, rules, truncated=truncated,
               engine=args.engine, manifest=manifest)
    print("mined %d rules (%s)%s -> %s"
          % (len(rules), args.engine, " [truncated]" if truncated else "", args.out))
    return EXIT_OK


# ---------------------------------------------------------------------------
# xval-rules

def cmd_xval_rules(args) -> int:
    class_col = None if args.class_column == "none" else args.class_column
    ds = load_csv(args.csv, class_column=class_col)
    limit = _limit_from_args(args)
    manifest = _manifest("xval-rules", args, [args.csv],
                         seeds={"fold_seed": args.seed},
                         limits={"k": args.k, "q": args.q,
                                 "max_size": limit.max_size,
                                 "max_rules": limit.max_rules,
                                 "time_budget": limit.time_budget,
                                 "min_support": limit.min_support})
    t0 = time.perf_counter()
    per_fold = []
    for train_idx, test_idx in fold_indices(ds.n_rows, args.k, args.seed):
        train, test = ds.take(train_idx), ds.take(test_idx)
        if ds.numeric_columns:
            spec = fit_quantization(train, args.q, force=args.force)
            train, test = quantize(train, spec), quantize(test, spec)
        kb = extract_all(train, limit)
        sizes: dict[int, list[float]] = {}
        for rule in kb.rules:
            sizes.setdefault(rule.size, []).append(rule_accuracy(rule, test))
        per_fold.append({"truncated": kb.truncated, "sizes": sizes,
                         "n_rules": len(kb.rules)})
    wall = time.perf_counter() - t0

    def fold_mean(fold, size=None):
        pool = [a for s, accs in fold["sizes"].items() for a in accs
                if size is None or s == size]
        return (sum(pool) / len(pool), len(pool)) if pool else (None, 0)

    report_sizes = {}
    for s in range(1, limit.max_size + 1):
        means = [m for m, _ in (fold_mean(f, s) for f in per_fold) if m is not None]
        count = sum(n for _, n in (fold_mean(f, s) for f in per_fold))
        report_sizes[str(s)] = {"mean_accuracy": sum(means) / len(means) if means else None,
                                "rules": count}
    all_means = [m for m, _ in (fold_mean(f) for f in per_fold) if m is not None]
    overall = {"mean_accuracy": sum(all_means) / len(all_means) if all_means else None,
               "rules": sum(n for _, n in (fold_mean(f) for f in per_fold))}
    manifest["timings"]["wall"] = wall
    report = {"format": "kxp.xval/1", "manifest": manifest, "folds": args.k,
              "per_size": report_sizes, "all": overall,
              "truncated_folds": sum(1 for f in per_fold if f["truncated"])}
    _write_json(args.out, report)

    headers = ["rule%d" % s for s in range(1, limit.max_size + 1)] + ["rule_all"]
    cells = []
    for s in range(1, limit.max_size + 1):
        m = report_sizes[str(s)]["mean_accuracy"]
        cells.append("-" if m is None else "%.4f" % m)
    cells.append("-" if overall["mean_accuracy"] is None else "%.4f" % overall["mean_accuracy"])
    width = max(len(h) for h in headers) + 2
    print("".join(h.rjust(width) for h in headers))
    print("".join(c.rjust(width) for c in cells))
    return EXIT_OK


# ---------------------------------------------------------------------------
# explain

_WORKER: dict = {}


def _init_worker(model_obj, kb_obj, kind, n):
    _WORKER.update(model=model_obj, kb=kb_obj, kind=kind, n=n)


def _run_one(task):
    index, values, use_kb = task
    from .core import Instance
    model, kb = _WORKER["model"], _WORKER["kb"]
    inst = Instance(tuple(values))
    t0 = time.perf_counter()
    res = enumerate_smallest(_WORKER["kind"], model, inst,
                             knowledge=kb if use_kb else None, n=_WORKER["n"])
    wall = time.perf_counter() - t0
    return {"type": "result", "index": index, "kind": _WORKER["kind"].value,
            "knowledge": use_kb,
            "explanations": [{"features": e.feature_names(model.space),
                              "size": e.size} for e in res.explanations],
            "n_found": len(res.explanations), "exhausted": res.exhausted,
            "calls": res.oracle_calls, "time": wall}


def cmd_explain(args) -> int:
    model = load_model(args.model)
    ds = _load_categorical(args.dataset, args)
    kb = load_knowledge(args.knowledge, model.space) if args.knowledge else None
    if args.compare and kb is None:
        raise ExplainError("--compare needs --knowledge")
    kind = Kind(args.kind)

    if args.instances == "all":
        indices = list(range(ds.n_rows))
    elif args.instances == "test":
        indices = split_indices(ds.n_rows, args.split_fraction, args.split_seed)[1]
    else:
        indices = [int(t) for t in args.instances.split(",") if t.strip()]
        bad = [i for i in indices if not 0 <= i < ds.n_rows]
        if bad:
            raise IngestError("instance indices out of range: %s" % bad)

    skipped = []
    tasks = []
    for i in indices:
        try:
            inst = model.space.instance_from_labels(ds.row_labels(i))
        except SpaceError as exc:
            skipped.append({"type": "skipped", "index": i, "reason": str(exc)})
            continue
        if kb is not None and not kb.satisfied_by(inst):
            skipped.append({"type": "skipped", "index": i,
                            "reason": "instance violates the knowledge base"})
            continue
        settings = [True] if not args.compare else [False, True]
        if kb is None:
            settings = [False]
        for use_kb in settings:
            tasks.append((i, tuple(inst.values), use_kb))

    manifest = _manifest("explain", args,
                         [args.model, args.dataset] +
                         ([args.knowledge] if args.knowledge else []),
                         seeds={"split_seed": args.split_seed},
                         limits={"kind": kind.value, "enum": args.enum,
                                 "instances": args.instances,
                                 "compare": args.compare, "jobs": args.jobs})
    t0 = time.perf_counter()
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs, initializer=_init_worker,
                                 initargs=(model, kb, kind, args.enum)) as pool:
            records = list(pool.map(_run_one, tasks))
    else:
        _init_worker(model, kb, kind, args.enum)
        records = [_run_one(t) for t in tasks]
    manifest["timings"]["wall"] = time.perf_counter() - t0

    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"format": "kxp.explanations/1", "manifest": manifest},
                            sort_keys=True) + "\n")
        for rec in skipped + records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")

    summary = _summarize_explanations(records, skipped, kind, args.compare)
    summary["format"] = "kxp.explain-summary/1"
    summary["manifest"] = manifest
    _write_json(args.summary or args.out + ".summary.json", summary)
    if skipped:
        print("skipped %d knowledge-incompatible or untranslatable instances"
              % len(skipped), file=sys.stderr)
    for line in summary["text"]:
        print(line)
    return EXIT_OK


def _summarize_explanations(records, skipped, kind, compare) -> dict:
    def smallest_sizes(use_kb):
        return [r["explanations"][0]["size"] for r in records
                if r["knowledge"] == use_kb and r["explanations"]]

    def avg(xs):
        return sum(xs) / len(xs) if xs else None

    summary = {"kind": kind.value, "instances": len({r["index"] for r in records}),
               "skipped": len(skipped)}
    text = []
    if compare:
        before, after = avg(smallest_sizes(False)), avg(smallest_sizes(True))
        summary["avg_smallest_size"] = {"without_knowledge": before,
                                        "with_knowledge": after}
        text.append("average smallest %s size: %.3f without knowledge, %.3f with"
                    % (kind.value, before or float("nan"), after or float("nan")))
    else:
        use_kb = any(r["knowledge"] for r in records)
        sizes = smallest_sizes(use_kb)
        summary["avg_smallest_size"] = avg(sizes)
        text.append("average smallest %s size over %d instances: %s"
                    % (kind.value, len(sizes),
                       "n/a" if not sizes else "%.3f" % avg(sizes)))
    summary["text"] = text
    return summary


# ---------------------------------------------------------------------------
# attribute

def cmd_attribute(args) -> int:
    model = load_model(args.model)
    ds = _load_categorical(args.dataset, args)
    kb = load_knowledge(args.knowledge, model.space)
    inst = model.space.instance_from_labels(ds.row_labels(args.instance))
    if args.axp == "auto":
        features = sorted(find_axp(model, inst, knowledge=kb).features)
    else:
        names = [t.strip() for t in args.axp.split(",") if t.strip()]
        features = sorted(model.space.feature_index(n) for n in names)
    manifest = _manifest("attribute", args,
                         [args.model, args.dataset, args.knowledge],
                         limits={"instance": args.instance, "axp": args.axp})
    t0 = time.perf_counter()
    used = attribute_rules(model, inst, kb, features)
    manifest["timings"]["wall"] = time.perf_counter() - t0
    rules_out = []
    for clause, rule in zip(used.clauses, used.rules):
        rules_out.append({"ids": list(used.provenance.get(clause, ())),
                          "rule": rule.render(model.space)})
    report = {"format": "kxp.attribution/1", "manifest": manifest,
              "instance": args.instance,
              "axp": [model.space.names[f] for f in features],
              "rules": rules_out}
    _write_json(args.out, report)
    print("AXp {%s} uses %d knowledge rule(s)"
          % (", ".join(report["axp"]), len(rules_out)))
    for r in rules_out:
        print("  [%s] %s" % (",".join(str(i) for i in r["ids"]), r["rule"]))
    return EXIT_OK


# ---------------------------------------------------------------------------
# assess

def cmd_assess(args) -> int:
    model = load_model(args.model)
    ds = _load_categorical(args.dataset, args)
    kb = load_knowledge(args.knowledge, model.space) if args.knowledge else None
    kind = Kind(args.kind)
    with open(args.explanations, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != SUBSETS_FORMAT:
        raise ExplainError("%s: unrecognized subsets format %r"
                           % (args.explanations, payload.get("format")))
    manifest = _manifest("assess", args,
                         [args.model, args.dataset, args.explanations] +
                         ([args.knowledge] if args.knowledge else []),
                         limits={"kind": kind.value})
    t0 = time.perf_counter()
    rows = []
    skipped = 0
    for rec in payload["records"]:
        index = rec["index"]
        features = sorted(model.space.feature_index(n) for n in rec["features"])
        inst = model.space.instance_from_labels(ds.row_labels(index))
        if kb is not None and not kb.satisfied_by(inst):
            skipped += 1
            rows.append({"index": index, "skipped": True})
            continue
        plain = check_explanation(features, kind, model, inst)
        row = {"index": index, "features": rec["features"], "size": len(features),
               "correct_plain": plain}
        assisted = None
        if kb is not None:
            assisted = check_explanation(features, kind, model, inst, knowledge=kb)
            row["correct_with_knowledge"] = assisted
        verdict = assisted if kb is not None else plain
        if verdict:
            reduced = reduce_explanation(features, kind, model, inst,
                                         knowledge=kb if kb is not None else None)
            row["reduced_size"] = reduced.size
        rows.append(row)
    manifest["timings"]["wall"] = time.perf_counter() - t0

    judged = [r for r in rows if not r.get("skipped")]
    def pct(key):
        vals = [r[key] for r in judged if key in r]
        return 100.0 * sum(vals) / len(vals) if vals else None
    report = {"format": "kxp.assess/1", "manifest": manifest, "kind": kind.value,
              "records": rows, "skipped": skipped,
              "percent_correct_plain": pct("correct_plain"),
              "percent_correct_with_knowledge": pct("correct_with_knowledge")}
    _write_json(args.out, report)
    print("assessed %d records: %.1f%% correct without knowledge%s"
          % (len(judged), report["percent_correct_plain"] or 0.0,
             "" if kb is None else ", %.1f%% with knowledge"
             % (report["percent_correct_with_knowledge"] or 0.0)))
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="kxp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("quantize", help="bin numeric CSV columns into intervals")
    p.add_argument("csv")
    p.add_argument("--q", type=int, default=5, help="intervals per column (4, 5 or 6)")
    p.add_argument("--force", action="store_true", help="allow other interval counts")
    p.add_argument("--class-column", default="last")
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_quantize)

    p = sub.add_parser("mine", help="extract 100%%-consistent rules from a dataset")
    p.add_argument("dataset")
    p.add_argument("--engine", choices=("lattice", "eclat"), default="lattice")
    p.add_argument("--max-size", type=int, default=5)
    p.add_argument("--min-support", type=int, default=1)
    p.add_argument("--max-rules", type=int, default=None)
    p.add_argument("--time-budget", type=float, default=None)
    p.add_argument("--class-column", default="last")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("xval-rules", help="k-fold rule accuracy protocol")
    p.add_argument("csv")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--q", type=int, default=5)
    p.add_argument("--force", action="store_true")
    p.add_argument("--max-size", type=int, default=5)
    p.add_argument("--min-support", type=int, default=1)
    p.add_argument("--max-rules", type=int, default=None)
    p.add_argument("--time-budget", type=float, default=None)
    p.add_argument("--class-column", default="last")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_xval_rules)

    p = sub.add_parser("explain", help="enumerate smallest explanations per instance")
    p.add_argument("model")
    p.add_argument("dataset")
    p.add_argument("--kind", choices=("axp", "cxp"), default="axp")
    p.add_argument("--knowledge", default=None, help="rules file to apply")
    p.add_argument("--enum", type=int, default=20, help="explanations per instance")
    p.add_argument("--instances", default="all", help="'all', 'test' or index list")
    p.add_argument("--split-fraction", type=float, default=0.8)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--compare", action="store_true",
                   help="run both with and without knowledge")
    p.add_argument("--jobs", type=int,
                   default=int(os.environ.get("KXP_JOBS", "1")))
    p.add_argument("--class-column", default="last")
    p.add_argument("--out", required=True)
    p.add_argument("--summary", default=None)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("attribute", help="which knowledge rules an AXp relies on")
    p.add_argument("model")
    p.add_argument("dataset")
    p.add_argument("--instance", type=int, required=True)
    p.add_argument("--knowledge", required=True)
    p.add_argument("--axp", default="auto",
                   help="comma-separated feature names, or 'auto'")
    p.add_argument("--class-column", default="last")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_attribute)

    p = sub.add_parser("assess", help="check and reduce external explanation files")
    p.add_argument("model")
    p.add_argument("dataset")
    p.add_argument("explanations", help="feature-subset file (kxp.subsets/1)")
    p.add_argument("--kind", choices=("axp", "cxp"), default="axp")
    p.add_argument("--knowledge", default=None)
    p.add_argument("--class-column", default="last")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_assess)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    args._argv = argv
    try:
        return args.func(args)
    except _INPUT_ERRORS as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_INPUT
    except AssertionError as exc:
        print("internal error: %s" % exc, file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    raise SystemExit(main())
