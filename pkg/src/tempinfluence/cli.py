"""Command-line entry point.

Settings come from built-in defaults, then an optional INI file
(``--config``; keys under ``[run]`` use the long flag names with dashes or
underscores, synthetic-log parameters go under ``[synth]``), then flags.
Flags win.  Every command writes its artifacts plus ``manifest.json``
under ``--out``.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import hashlib
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .activity_log import CANONICAL_COLUMNS, FilterSpec, LogParseError, compute_stats, dump_log, read_log
from .analysis import TAU_GRID, SweepConfig, sweep_grid
from .features import FEATURE_NAMES, FeatureConfig, TemporalFeatureExtractor
from .learning import DegenerateDataError, model_to_json
from .pipeline import CLASSIFIERS, compare_constraints, format_table
from .sampling import build_balanced_set, read_samples
from .synthgen import GenParams, generate
from .temporal_graph import TimeConstraints, active_neighbors, build_index, neighbors

logger = logging.getLogger("tempinfluence")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_CONFIG = 4
EXIT_DEGENERATE = 5
EXIT_IO = 6


class ConfigError(ValueError):
    pass


# name -> (converter, default); None default means "unset"
def _hours(text):
    text = str(text).strip().lower()
    return math.inf if text in ("inf", "none", "unconstrained") else float(text)


def _hour_list(text):
    vals = [_hours(v) for v in str(text).replace(" ", "").split(",") if v]
    if not vals or any(not v > 0 or math.isinf(v) for v in vals):
        raise ValueError("grid values must be positive finite hours")
    return tuple(vals)


def _features(text):
    text = str(text).strip()
    if text == "all":
        return list(FEATURE_NAMES)
    names = [v for v in text.replace(" ", "").split(",") if v]
    bad = [n for n in names if n not in FEATURE_NAMES]
    if bad or not names:
        raise ValueError(f"unknown features {bad}; choose from {', '.join(FEATURE_NAMES)} or 'all'")
    return names


def _filter(text):
    text = str(text).strip()
    return None if text.lower() in ("", "none") else FilterSpec.parse(text)


def _bool(text):
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _columns(text):
    cols = tuple(c.strip() for c in str(text).split(","))
    if sorted(cols) != sorted(CANONICAL_COLUMNS):
        raise ValueError(f"columns must be a permutation of {','.join(CANONICAL_COLUMNS)}")
    return cols


SETTINGS = {
    "input": (str, None),
    "format": (str, None),
    "columns": (_columns, CANONICAL_COLUMNS),
    "skip_malformed": (_bool, False),
    "synth": (_bool, False),
    "seed": (int, 0),
    "filter": (_filter, None),
    "tau_sus": (_hours, 720.0),
    "tau_fos": (_hours, 720.0),
    "grid": (_hour_list, TAU_GRID),
    "features": (_features, ["nan"]),
    "sigma": (float, None),
    "gamma": (int, 104),
    "mur_target": (str, "source_vprime"),
    "clt_pair_mode": (str, "ordered"),
    "acc_edge_scope": (str, "any_topic"),
    "leakage_strict": (_bool, True),
    "literal_negatives": (_bool, False),
    "correlation": (str, "curve"),
    "binning": (str, "auto"),
    "n_bins": (int, 20),
    "min_support": (int, 5),
    "exposed_only": (_bool, True),
    "classifier": (str, "forest"),
    "ratio": (float, 0.9),
    "learning_rate": (float, 0.1),
    "epochs": (int, 1000),
    "l2": (float, 1e-4),
    "n_trees": (int, 100),
    "max_depth": (int, 8),
    "samples": (str, None),
    "user": (str, None),
    "topic": (str, None),
    "time": (int, None),
}

SYNTH_FIELDS = {f.name: f.type for f in dataclasses.fields(GenParams)}


def _read_config(path):
    cp = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    run, synth = {}, {}
    for section in cp.sections():
        for key, value in cp.items(section):
            key = key.replace("-", "_")
            if section == "run":
                if key not in SETTINGS:
                    raise ConfigError(f"unknown key {key!r} in [run]")
                run[key] = value
            elif section == "synth":
                if key not in SYNTH_FIELDS:
                    raise ConfigError(f"unknown key {key!r} in [synth]")
                synth[key] = value
            else:
                raise ConfigError(f"unknown section [{section}]")
    return run, synth


def resolve(args) -> dict:
    """Merge defaults, config file and flags into one settings dict."""
    file_run, file_synth = _read_config(args.config) if args.config else ({}, {})
    out = {}
    for name, (conv, default) in SETTINGS.items():
        flag = getattr(args, name, None)
        raw = flag if flag is not None else file_run.get(name)
        if raw is None:
            out[name] = default
            continue
        try:
            out[name] = conv(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {name}: {exc}") from exc

    synth = {}
    for key, raw in file_synth.items():
        synth[key] = raw
    for key, raw in (json.loads(args.synth_params) if getattr(args, "synth_params", None) else {}).items():
        synth[key] = raw
    try:
        defaults = GenParams()
        typed = {k: type(getattr(defaults, k))(v) for k, v in synth.items() if k in SYNTH_FIELDS}
        if set(synth) - set(SYNTH_FIELDS):
            raise ValueError(f"unknown synth parameters {sorted(set(synth) - set(SYNTH_FIELDS))}")
        out["synth_params"] = GenParams(**typed)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad synth parameters: {exc}") from exc

    if out["correlation"] not in ("curve", "sample"):
        raise ConfigError("correlation must be 'curve' or 'sample'")
    if out["classifier"] not in CLASSIFIERS:
        raise ConfigError(f"classifier must be one of {CLASSIFIERS}")
    if not 0 < out["ratio"] < 1:
        raise ConfigError("ratio must be in (0, 1)")
    for name in ("tau_sus", "tau_fos"):
        if not out[name] > 0:
            raise ConfigError(f"{name} must be positive")
    try:
        FeatureConfig(
            sigma=out["sigma"],
            gamma=out["gamma"],
            mur_target=out["mur_target"],
            clt_pair_mode=out["clt_pair_mode"],
            acc_edge_scope=out["acc_edge_scope"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out["jobs"] = args.jobs
    return out


def _jsonable(value):
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, FilterSpec):
        return str(value)
    if isinstance(value, GenParams):
        return dataclasses.asdict(value)
    return value


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


class Run:
    """Output directory bookkeeping plus the resolved settings."""

    def __init__(self, command, settings, out_dir):
        self.command = command
        self.settings = settings
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.outputs: list[str] = []
        self.inputs: list[dict] = []

    def write(self, name, text):
        path = self.out / name
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        self.outputs.append(name)
        return path

    def config_doc(self) -> dict:
        # worker count never changes results, so it stays out of the hash
        keys = [k for k in self.settings if k != "jobs"]
        return {k: _jsonable(self.settings[k]) for k in sorted(keys)}

    def finish(self):
        config = self.config_doc()
        blob = json.dumps(config, sort_keys=True).encode()
        manifest = {
            "command": self.command,
            "version": __version__,
            "seed": self.settings["seed"],
            "inputs": self.inputs,
            "config": config,
            "config_hash": hashlib.sha256(blob).hexdigest(),
            "outputs": [{"path": p, "sha256": _sha256(self.out / p)} for p in sorted(self.outputs)],
        }
        with open(self.out / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(manifest, sort_keys=True, indent=1) + "\n")


def load_input(run: Run):
    s = run.settings
    if bool(s["input"]) == bool(s["synth"]):
        raise ConfigError("give exactly one input source: --input PATH or --synth")
    if s["synth"]:
        params = s["synth_params"]
        run.inputs.append({"synth": dataclasses.asdict(params), "seed": s["seed"]})
        return generate(params, s["seed"])
    path = s["input"]
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    log = read_log(path, s["format"], columns=s["columns"], skip_malformed=s["skip_malformed"])
    run.inputs.append({"path": str(path), "sha256": _sha256(path), "skipped_lines": log.n_skipped})
    return log


def _tc(s) -> TimeConstraints:
    return TimeConstraints(s["tau_sus"], s["tau_fos"])


def _feature_config(s, sigma=None) -> FeatureConfig:
    return FeatureConfig(
        sigma=sigma if sigma is not None else s["sigma"],
        gamma=s["gamma"],
        mur_target=s["mur_target"],
        clt_pair_mode=s["clt_pair_mode"],
        acc_edge_scope=s["acc_edge_scope"],
    )


def _extractor_params(s) -> dict:
    return {
        "sigma": s["sigma"],
        "gamma": s["gamma"],
        "mur_target": s["mur_target"],
        "clt_pair_mode": s["clt_pair_mode"],
        "acc_edge_scope": s["acc_edge_scope"],
        "leakage_strict": s["leakage_strict"],
    }


def _dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def cmd_ingest(run: Run):
    log = load_input(run)
    stats = compute_stats(log)
    doc = stats.to_dict()
    doc["skipped_lines"] = log.n_skipped
    run.write("stats.json", _dumps(doc))
    print(f"{stats.retweet_count} retweets, {stats.user_count} users, {stats.hashtag_count} hashtags")


def cmd_synth(run: Run):
    run.settings["synth"] = True
    run.settings["input"] = None
    log = load_input(run)
    run.write("log.tsv", dump_log(log, "tsv"))
    run.write("params.json", _dumps(dataclasses.asdict(run.settings["synth_params"])))
    print(f"generated {len(log)} records")


def _samples(run: Run, log, index):
    s = run.settings
    if s["samples"]:
        with open(s["samples"], encoding="utf-8") as fh:
            text = fh.read()
        run.inputs.append({"path": str(s["samples"]), "sha256": _sha256(s["samples"])})
        return read_samples(text)
    return build_balanced_set(
        index, log, s["filter"], _tc(s), s["seed"], literal=s["literal_negatives"], n_jobs=s["jobs"]
    )


def cmd_sample(run: Run):
    log = load_input(run)
    ss = _samples(run, log, build_index(log))
    if not len(ss):
        raise DegenerateDataError("no positive has a negative candidate; sample set is empty")
    run.write("samples.csv", ss.to_csv())
    run.write("samples.json", ss.to_json() + "\n")
    print(f"{len(ss) // 2} pairs ({ss.n_skipped} positives without candidates)")


def cmd_features(run: Run):
    s = run.settings
    log = load_input(run)
    index = build_index(log)
    ss = _samples(run, log, index)
    if not len(ss):
        raise DegenerateDataError("sample set is empty")
    tc = ss.tc if s["samples"] and ss.tc is not None else _tc(s)
    ext = TemporalFeatureExtractor(
        log,
        None if math.isinf(tc.tau_sus) else tc.tau_sus,
        None if math.isinf(tc.tau_fos) else tc.tau_fos,
        features=s["features"],
        **_extractor_params(s),
    )
    X = ext.fit_transform(ss.to_contexts())
    lines = [",".join(["ego", "source", "topic", "time", "label"] + list(ext.feature_names_))]
    for smp, row in zip(ss, X):
        vals = [repr(float(v)) for v in row]
        lines.append(",".join([smp.ego, smp.source, smp.topic, str(smp.time), str(smp.label)] + vals))
    run.write("features.csv", "\n".join(lines) + "\n")
    run.write("features_meta.json", _dumps({"sigma_hours": ext.sigma_, "features": list(ext.feature_names_)}))
    print(f"{len(ss)} rows x {len(ext.feature_names_)} features")


def cmd_sweep(run: Run):
    s = run.settings
    log = load_input(run)
    index = build_index(log)
    cfg = SweepConfig(
        tau_values=s["grid"],
        feature_config=_feature_config(s),
        correlation=s["correlation"],
        binning=s["binning"],
        n_bins=s["n_bins"],
        min_support=s["min_support"],
        literal=s["literal_negatives"],
        exposed_only=s["exposed_only"],
        n_jobs=s["jobs"],
    )
    summary = {}
    for feature in s["features"]:
        grid = sweep_grid(index, log, feature, s["filter"], s["seed"], cfg)
        run.write(f"sweep_{feature}.csv", grid.to_csv())
        run.write(f"sweep_{feature}.json", grid.to_json() + "\n")
        missing = int(np.isnan(grid.rho).sum())
        summary[feature] = {"cells": int(grid.rho.size), "missing": missing, "rho_base": grid.rho_base}
        if missing:
            logger.warning("%s: %d of %d cells have undefined correlation", feature, missing, grid.rho.size)
        print(f"{feature}: {grid.rho.size} cells, {missing} missing")
    run.write("sweep_summary.json", _dumps(summary))


def cmd_train_eval(run: Run):
    s = run.settings
    log = load_input(run)
    if s["classifier"] == "forest":
        cparams = {"n_estimators": s["n_trees"], "max_depth": s["max_depth"]}
    else:
        cparams = {"learning_rate": s["learning_rate"], "epochs": s["epochs"], "l2": s["l2"]}
    feature_sets = {n: [n] for n in s["features"]}
    if len(s["features"]) > 1:
        feature_sets["all"] = list(s["features"])
    rows, with_tc, without = compare_constraints(
        log,
        _tc(s),
        feature_sets,
        classifier=s["classifier"],
        classifier_params=cparams,
        extractor_params=_extractor_params(s),
        filter=s["filter"],
        ratio=s["ratio"],
        seed=s["seed"],
        n_jobs=s["jobs"],
    )
    doc = {
        "tau_sus": _jsonable(s["tau_sus"]),
        "tau_fos": _jsonable(s["tau_fos"]),
        "classifier": s["classifier"],
        "constrained": {k: dict(r.metrics.to_dict(), n_train=r.n_train, n_test=r.n_test) for k, r in with_tc.items()},
        "unconstrained": {k: dict(r.metrics.to_dict(), n_train=r.n_train, n_test=r.n_test) for k, r in without.items()},
        "comparison": [r.to_dict() for r in rows],
    }
    run.write("metrics.json", _dumps(doc))
    table = format_table(rows)
    run.write("metrics.txt", table)
    for name, res in with_tc.items():
        run.write(f"models/{name}.json", model_to_json(res.model) + "\n")
    sys.stdout.write(table)


def cmd_neighbors_debug(run: Run):
    s = run.settings
    if s["user"] is None or s["time"] is None:
        raise ConfigError("neighbors-debug needs --user and --time")
    log = load_input(run)
    index = build_index(log)
    tc = _tc(s)
    doc = {
        "user": s["user"],
        "time": s["time"],
        "tau_sus": _jsonable(tc.tau_sus),
        "tau_fos": _jsonable(tc.tau_fos),
        "neighbors": sorted(neighbors(index, s["user"], s["time"], tc.tau_sus)),
    }
    if s["topic"] is not None:
        doc["topic"] = s["topic"]
        doc["active_neighbors"] = [
            {"user": a.user, "edge_time": a.edge_time, "adopt_time": a.adopt_time}
            for a in active_neighbors(index, s["user"], s["topic"], s["time"], tc)
        ]
    text = _dumps(doc)
    run.write("neighbors.json", text)
    sys.stdout.write(text)


COMMANDS = {
    "ingest": (cmd_ingest, "parse a log and report dataset statistics"),
    "synth": (cmd_synth, "generate a synthetic log with planted influence windows"),
    "sample": (cmd_sample, "build the balanced positive/negative sample set"),
    "features": (cmd_features, "compute feature rows for a sample set"),
    "sweep": (cmd_sweep, "correlation gain grid over (tau_sus, tau_fos)"),
    "train-eval": (cmd_train_eval, "chronological train/test F1 with and without time constraints"),
    "neighbors-debug": (cmd_neighbors_debug, "print neighbours and active neighbours of one user"),
}


def _add_common(p: argparse.ArgumentParser):
    g = p.add_argument_group("input")
    g.add_argument("--input", help="activity log file (TSV or JSON lines)")
    g.add_argument("--format", choices=("tsv", "jsonl"), help="log format (default: from extension)")
    g.add_argument("--columns", help="column order of the log file, e.g. time,adopter,source,topic")
    g.add_argument("--skip-malformed", action="store_const", const=True, help="count bad lines instead of failing")
    g.add_argument("--synth", action="store_const", const=True, help="use a generated log instead of --input")
    g.add_argument("--synth-params", help="JSON object of generator parameters")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--out", default="out", help="output directory (default ./out)")
    p.add_argument("--filter", help="user filter such as R60 or H40")
    p.add_argument("--tau-sus", help="susceptible window in hours, or 'inf'")
    p.add_argument("--tau-fos", help="forgettable window in hours, or 'inf'")
    p.add_argument("--features", help="comma-separated feature names or 'all'")
    p.add_argument("--sigma", type=float, help="cdi decay scale in hours (default: estimated)")
    p.add_argument("--gamma", type=int, help="hub threshold (default 104)")
    p.add_argument("--mur-target")
    p.add_argument("--clt-pair-mode")
    p.add_argument("--acc-edge-scope")
    p.add_argument("--leakage-strict", help="true/false")
    p.add_argument("--literal-negatives", action="store_const", const=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tempinfluence", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="INI config file")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes (results do not depend on it)")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        if name in ("sample", "features"):
            p.add_argument("--samples", help="reuse a saved sample set (CSV or JSON)")
        if name == "sweep":
            p.add_argument("--grid", help="comma-separated tau values in hours")
            p.add_argument("--correlation", choices=("curve", "sample"))
            p.add_argument("--binning", choices=("auto", "exact", "width"))
            p.add_argument("--n-bins", type=int)
            p.add_argument("--min-support", type=int)
            p.add_argument("--exposed-only", help="true/false")
        if name == "train-eval":
            p.add_argument("--classifier", choices=CLASSIFIERS)
            p.add_argument("--ratio", type=float, help="training share (default 0.9)")
            p.add_argument("--learning-rate", type=float)
            p.add_argument("--epochs", type=int)
            p.add_argument("--l2", type=float)
            p.add_argument("--n-trees", type=int)
            p.add_argument("--max-depth", type=int)
        if name == "neighbors-debug":
            p.add_argument("--user")
            p.add_argument("--topic")
            p.add_argument("--time", type=int, help="query instant in log time units (seconds)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    func = COMMANDS[args.command][0]
    try:
        settings = resolve(args)
        if settings["jobs"] == 0:
            raise ConfigError("--jobs must be nonzero")
        run = Run(args.command, settings, args.out)
        func(run)
        run.finish()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LogParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DegenerateDataError as exc:
        print(f"degenerate data: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (OSError, json.JSONDecodeError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
