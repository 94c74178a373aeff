"""Command-line pipeline: ingest, simulate, featurize, corr, split, train-*, evaluate, report."""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, cnn, forest, svm
from .dataset import (
    DEFAULT_THRESHOLD,
    SplitSpec,
    correlation_matrix,
    featurize_entries,
    load_dataset,
    persist_dataset,
    redundant_pairs,
    stratified_sample,
)
from .enzymedb import bundled_catalog, load_enzyme_table
from .errors import RestrictMLError
from .evalreport import confusion, position_histograms, rates, write_report
from .features import ComplexityConfig
from .seqcore import read_fasta
from .sitescan import build_scanner
from .synthsim import DEFAULT_WINDOWS, generate_labeled_entries, read_entries, synthesize, write_entries

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    command: str
    flags: dict
    inputs: dict
    seed: int
    version: str = __version__
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))

    def stable(self) -> dict:
        """Everything except the timestamp, for embedding in hashed outputs."""
        d = asdict(self)
        d.pop("timestamp")
        return d


def _manifest(args, inputs: dict) -> RunManifest:
    flags = {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}
    digests = {}
    for name, path in inputs.items():
        if path is not None:
            digests[name] = {"path": str(path), "sha256": sha256(path)}
    return RunManifest(args.command, flags, digests, args.seed)


def _write_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _sidecar(path) -> Path:
    return Path(str(path) + ".manifest.json")


def _write_sidecar(man: RunManifest, path, extra: dict | None = None) -> None:
    d = asdict(man)
    if extra:
        d.update(extra)
    _write_json(d, _sidecar(path))


def _need_out(args) -> Path:
    if not args.out:
        raise UsageError(f"{args.command}: --out is required")
    return Path(args.out)


def _say(args, msg: str) -> None:
    if not args.quiet:
        print(msg)


def _enzymes(args):
    return load_enzyme_table(args.enzymes) if args.enzymes else bundled_catalog()


def _single_reference(path):
    recs = read_fasta(path)
    if len(recs) != 1:
        raise RestrictMLError(f"{path}: expected exactly one reference record, found {len(recs)}")
    return recs[0]


# --------------------------------------------------------------------------
# subcommands


def cmd_ingest(args) -> int:
    summary: dict = {}
    if args.genes:
        genes = read_fasta(args.genes)
        summary["genes"] = [{"id": g.id, "length": len(g.sequence)} for g in genes]
    if args.reference:
        ref = _single_reference(args.reference)
        summary["reference"] = {"id": ref.id, "length": len(ref.sequence)}
    db = _enzymes(args)
    summary["enzymes"] = len(db)
    if args.out:
        _write_json(summary, args.out)
        _write_sidecar(_manifest(args, {"genes": args.genes, "reference": args.reference, "enzymes": args.enzymes}), args.out)
    _say(args, json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_simulate(args) -> int:
    out = _need_out(args)
    genes = read_fasta(args.genes)
    ref = _single_reference(args.reference)
    db = _enzymes(args)
    scanner = build_scanner(db)
    windows = [int(w) for w in args.windows.split(",")]
    entries = generate_labeled_entries(genes, ref.sequence, scanner, db, windows)
    write_entries(entries, out)
    man = _manifest(args, {"genes": args.genes, "reference": args.reference, "enzymes": args.enzymes})
    applicable = sum(int(e.label) for e in entries)
    _write_sidecar(man, out, {"entries": len(entries), "applicable": applicable})
    if args.traces:
        traces = [synthesize(g.sequence, ref.sequence, scanner, db).to_json(g.id, db) for g in genes]
        _write_json(traces, args.traces)
    _say(args, f"{len(entries)} entries ({applicable} applicable) -> {out}")
    return EXIT_OK


def _reference_for_entries(args):
    if args.reference:
        return args.reference
    side = _sidecar(args.entries)
    if side.exists():
        with open(side, encoding="utf-8") as fh:
            ref = json.load(fh).get("inputs", {}).get("reference", {}).get("path")
        if ref:
            return ref
    raise RestrictMLError(f"no --reference given and {side} names none")


def cmd_featurize(args) -> int:
    out = _need_out(args)
    ref_path = _reference_for_entries(args)
    ref = _single_reference(ref_path)
    entries = read_entries(args.entries, ref.sequence)
    data = featurize_entries(entries, ComplexityConfig(args.b, args.p), args.width)
    man = _manifest(args, {"entries": args.entries, "reference": ref_path})
    persist_dataset(data, out, {"run": asdict(man)})
    t, f = data.class_counts
    _say(args, f"{len(data)} rows ({t} true, {f} false) -> {out}")
    return EXIT_OK


def cmd_corr(args) -> int:
    out = _need_out(args)
    data = load_dataset(args.data)
    R = correlation_matrix(data)
    cols = data.columns
    pairs = redundant_pairs(R, args.threshold)
    result = {
        "threshold": args.threshold,
        "columns": cols,
        "matrix": R.tolist(),
        "redundant_pairs": [[cols[i], cols[j], float(R[i, j])] for i, j in pairs],
    }
    _write_json(result, out)
    _write_sidecar(_manifest(args, {"data": args.data}), out)
    _say(args, f"{len(pairs)} pairs above |r| > {args.threshold}")
    for a, b, r in result["redundant_pairs"]:
        _say(args, f"  {a} {b} {r:.4f}")
    return EXIT_OK


def cmd_split(args) -> int:
    out = _need_out(args)
    out.mkdir(parents=True, exist_ok=True)
    data = load_dataset(args.data)
    spec = SplitSpec(args.train_size, args.train_ratio, args.test_size, args.test_ratio, args.seed)
    train, test = stratified_sample(data, spec)
    man = _manifest(args, {"data": args.data})
    persist_dataset(train, out / "train.csv", {"run": asdict(man)})
    persist_dataset(test, out / "test.csv", {"run": asdict(man)})
    _say(args, f"train {train.class_counts}, test {test.class_counts} -> {out}")
    return EXIT_OK


def _save_model(obj: dict, out: Path, man: RunManifest) -> None:
    obj["training_manifest"] = man.stable()
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")
    _write_sidecar(man, out)


def cmd_train_svm(args) -> int:
    out = _need_out(args)
    data = load_dataset(args.data)
    spec = svm.KernelSpec(args.kernel, args.degree, args.gamma, args.coef0)
    model = svm.svm_train(
        data.X, data.y, spec, args.C, args.tol, args.max_passes, args.seed, args.pcs
    )
    _save_model(model.to_json(), out, _manifest(args, {"data": args.data}))
    _say(args, f"{len(model.support_indices)} support vectors, converged={model.converged} -> {out}")
    return EXIT_OK


def cmd_train_forest(args) -> int:
    out = _need_out(args)
    data = load_dataset(args.data)
    model = forest.forest_train(
        data.X, data.y, args.trees, args.features_per_node, args.max_depth, args.seed, args.sampling
    )
    _save_model(model.to_json(), out, _manifest(args, {"data": args.data}))
    _say(args, f"{model.n_trees} trees, oob_error={model.oob_error} -> {out}")
    return EXIT_OK


def cmd_train_cnn(args) -> int:
    out = _need_out(args)
    data = load_dataset(args.data)
    spec = cnn.NetworkSpec(width=data.width, filters=args.filters, units=args.units)
    cfg = cnn.TrainConfig(
        optimizer=args.optimizer, learning_rate=args.lr, batch_size=args.batch,
        epochs=args.epochs, seed=args.seed, patience=args.patience, val_fraction=args.val_fraction,
    )
    state, log = cnn.train(cnn.net_build(spec, args.seed), data, cfg=cfg)
    _save_model(state.to_json(), out, _manifest(args, {"data": args.data}))
    log_path = Path(args.log) if args.log else Path(str(out) + ".epochs.csv")
    cnn.write_epoch_log(log, log_path)
    _say(args, f"{len(log)} epochs, final loss {log[-1].loss:.4f} -> {out}" if log else f"no epochs -> {out}")
    return EXIT_OK


def load_any_model(path):
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    kind = d.get("model_type")
    if kind == "svm":
        return svm.SvmModel.from_json(d)
    if kind == "forest":
        return forest.ForestModel.from_json(d)
    if kind == "cnn":
        return cnn.NetworkState.from_json(d)
    raise RestrictMLError(f"{path}: unknown model_type {kind!r}")


def predict_any(model, data) -> np.ndarray:
    """0/1 predictions for a loaded model of any supported type."""
    if isinstance(model, svm.SvmModel):
        return (svm.svm_predict(model, data.X)[0] > 0).astype(np.int64)
    if isinstance(model, forest.ForestModel):
        return forest.forest_predict(model, data.X)
    return cnn.predict(model, data.seq_block)


def _write_predictions(pred, truth, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row", "truth", "prediction"])
        for i, (t, p) in enumerate(zip(truth.tolist(), pred.tolist())):
            w.writerow([i, t, p])


def cmd_evaluate(args) -> int:
    out = _need_out(args)
    model = load_any_model(args.model)
    data = load_dataset(args.data)
    pred = predict_any(model, data)
    cm = confusion(pred, data.y)
    paths = write_report(cm, out)
    _write_predictions(pred, data.y, out / "predictions.csv")
    _write_sidecar(_manifest(args, {"model": args.model, "data": args.data}), out / "evaluation")
    r = rates(cm).formatted()
    _say(args, f"tp={cm.tp} fp={cm.fp} tn={cm.tn} fn={cm.fn} " + " ".join(f"{k}={v}" for k, v in r.items()))
    _say(args, "wrote " + ", ".join(str(p) for p in paths))
    return EXIT_OK


def cmd_report(args) -> int:
    out = _need_out(args)
    model = load_any_model(args.model)
    data = load_dataset(args.data)
    pred = predict_any(model, data)
    cm = confusion(pred, data.y)
    hists = position_histograms(data.subsequences(), data.y, pred, width=data.width)
    paths = write_report(cm, out, hists)
    _write_sidecar(_manifest(args, {"model": args.model, "data": args.data}), out / "report")
    _say(args, "wrote " + ", ".join(str(p) for p in paths))
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def _ratio(text: str) -> str:
    from fractions import Fraction

    try:
        r = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a ratio: {text!r}")
    if not 0 <= r <= 1:
        raise argparse.ArgumentTypeError(f"ratio {text} outside [0, 1]")
    return text


def build_parser() -> argparse.ArgumentParser:
    def globals_(defaults: bool) -> argparse.ArgumentParser:
        # subcommand copies default to SUPPRESS so flags given before the
        # subcommand are not overwritten
        g = argparse.ArgumentParser(add_help=False)
        kw = {} if defaults else {"default": argparse.SUPPRESS}
        g.add_argument("--seed", type=int, help="seed for every random choice (default 0)", **({"default": 0} | kw))
        g.add_argument("--out", help="output file or directory", **({"default": None} | kw))
        g.add_argument("--quiet", action="store_true", help="suppress progress output", **kw)
        return g

    common = globals_(False)
    parser = _Parser(prog="restrictml", description=__doc__, parents=[globals_(True)])
    parser.add_argument("--version", action="version", version=f"restrictml {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_, parents=[common])
        p.set_defaults(func=func)
        return p

    p = add("ingest", cmd_ingest, "validate FASTA and enzyme-table inputs")
    p.add_argument("--genes")
    p.add_argument("--reference")
    p.add_argument("--enzymes", help="enzyme TSV (default: bundled catalog)")

    p = add("simulate", cmd_simulate, "generate labeled subsequence entries")
    p.add_argument("--genes", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--enzymes", help="enzyme TSV (default: bundled catalog)")
    p.add_argument("--windows", default=",".join(map(str, DEFAULT_WINDOWS)))
    p.add_argument("--traces", help="also write per-gene synthesis traces (JSON)")

    p = add("featurize", cmd_featurize, "turn entries into the feature dataset CSV")
    p.add_argument("--entries", required=True)
    p.add_argument("--reference", help="default: the reference named in the entries manifest")
    p.add_argument("--width", type=int, default=24)
    p.add_argument("--b", type=int, default=4)
    p.add_argument("--p", type=int, default=8)

    p = add("corr", cmd_corr, "feature correlation matrix and redundant pairs")
    p.add_argument("--data", required=True)
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)

    p = add("split", cmd_split, "stratified train/test split into --out directory")
    p.add_argument("--data", required=True)
    p.add_argument("--train-size", type=int, default=50_000)
    p.add_argument("--train-ratio", type=_ratio, default="0.60")
    p.add_argument("--test-size", type=int, default=26_622)
    p.add_argument("--test-ratio", type=_ratio, default="0.50")

    p = add("train-svm", cmd_train_svm, "train a kernel SVM")
    p.add_argument("--data", required=True)
    p.add_argument("--kernel", choices=["linear", "poly", "polynomial", "rbf", "sigmoid"], default="poly")
    p.add_argument("--pcs", type=int, choices=[0, 2, 3], default=2)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--coef0", type=float, default=0.0)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--max-passes", type=int, default=1000)

    p = add("train-forest", cmd_train_forest, "train a random forest")
    p.add_argument("--data", required=True)
    p.add_argument("--trees", type=int, default=forest.DEFAULT_TREES)
    p.add_argument("--features-per-node", type=int, default=None)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--sampling", choices=["paper", "classical"], default="paper")

    p = add("train-cnn", cmd_train_cnn, "train the convolutional network")
    p.add_argument("--data", required=True)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--optimizer", choices=["adam", "sgd"], default="adam")
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--val-fraction", type=float, default=0.1)
    p.add_argument("--filters", type=int, default=64)
    p.add_argument("--units", type=int, default=128)
    p.add_argument("--log", help="epoch log CSV (default: <out>.epochs.csv)")

    p = add("evaluate", cmd_evaluate, "confusion matrix and rates for a model on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)

    p = add("report", cmd_report, "per-position nucleotide histograms of (mis)classifications")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_usage(sys.stderr)
            print("restrictml: error: a subcommand is required", file=sys.stderr)
            return EXIT_USAGE
        return args.func(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except (RestrictMLError, OSError, ValueError) as exc:
        print(f"restrictml: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        print(f"restrictml: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
