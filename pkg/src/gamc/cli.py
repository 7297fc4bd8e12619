"""Command-line interface.

Subcommands: synth, extract, train, eval, predict, report. Config files are
INI-style key = value sections mirroring PipelineConfig fields. Exit codes:
0 success, 2 config error, 3 data error, 4 internal error.
"""

import argparse
import configparser
import csv
import sys
from dataclasses import replace

import numpy as np

from . import gbt
from .errors import ConfigError, DataError, GamcError
from .frames import CLASS_NAMES, DIGITAL_SCHEMES, ModulationScheme, load_dataset, save_dataset
from .pipeline import (
    PipelineConfig,
    SyntheticRecipe,
    complexity_report,
    evaluate,
    extract_features,
    feature_names_for,
    importance_table,
    load_bundle,
    predict_dataset,
    save_bundle,
    train_pipeline,
)
from .statfeat import StatConfig

_PARAM_FIELDS = {
    "learning_rate": float,
    "max_depth": int,
    "n_estimators": int,
    "subsample": float,
    "colsample_bytree": float,
    "min_child_weight": float,
    "gamma": float,
    "reg_alpha": float,
    "reg_lambda": float,
    "tree_method": str,
    "max_bins": int,
    "rng_seed": int,
}

_STAT_FIELDS = {
    "amp_bins": int,
    "iq2d_bins": int,
    "phase_diff_bins": int,
    "logmag_bins": int,
    "bispec_bins": int,
    "phase_spec_bands": int,
}


def _parse_bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _parse_tuple(text, conv):
    items = [t for t in text.replace(",", " ").split() if t]
    try:
        return tuple(conv(t) for t in items)
    except ValueError:
        raise ConfigError(f"bad list value: {text!r}") from None


def _section(cp, name):
    return cp[name] if cp.has_section(name) else {}


def _typed_overrides(section, fields, where):
    out = {}
    for key, raw in section.items():
        if key not in fields:
            raise ConfigError(f"unknown key {key!r} in [{where}]")
        conv = fields[key]
        try:
            out[key] = conv(raw)
        except ValueError:
            raise ConfigError(f"bad value for {where}.{key}: {raw!r}") from None
    return out


def load_config(path) -> PipelineConfig:
    """Parse an INI config into a PipelineConfig."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    except configparser.Error as e:
        raise ConfigError(f"malformed config {path}: {e}") from None

    kw = {}
    pipe = _section(cp, "pipeline")
    simple = {
        "dataset_path": str,
        "q": int,
        "lambda_t": float,
        "folds": int,
        "l2": float,
        "split_seed": int,
        "train_fraction": float,
        "feature_set": str,
        "use_lnt": _parse_bool,
        "rng_seed": int,
    }
    for key, raw in pipe.items():
        if key in simple:
            try:
                kw[key] = simple[key](raw)
            except ValueError:
                raise ConfigError(f"bad value for pipeline.{key}: {raw!r}") from None
        elif key == "k_set":
            kw["k_set"] = _parse_tuple(raw, int)
        elif key == "sizes":
            kw["sizes"] = _parse_tuple(raw, int)
        else:
            raise ConfigError(f"unknown key {key!r} in [pipeline]")

    if cp.has_section("bands"):
        pairs = []
        for key in sorted(cp["bands"]):
            vals = _parse_tuple(cp["bands"][key], float)
            if len(vals) != 2:
                raise ConfigError(f"band {key!r} must be two dB values")
            pairs.append((vals[0], vals[1]))
        kw["bands"] = tuple(pairs)
        kw.setdefault("q", len(pairs))

    if cp.has_section("recipe"):
        r = cp["recipe"]
        rkw = {}
        for key, raw in r.items():
            if key == "schemes":
                rkw["schemes"] = _expand_schemes(raw)
            elif key == "snrs_db":
                rkw["snrs_db"] = _parse_tuple(raw, int)
            elif key in ("frames_per_cell", "frame_len", "seed"):
                try:
                    rkw[key] = int(raw)
                except ValueError:
                    raise ConfigError(f"bad value for recipe.{key}: {raw!r}") from None
            else:
                raise ConfigError(f"unknown key {key!r} in [recipe]")
        if "schemes" not in rkw or "snrs_db" not in rkw:
            raise ConfigError("[recipe] needs schemes and snrs_db")
        kw["recipe"] = SyntheticRecipe(**rkw)

    if cp.has_section("stat"):
        kw["stat"] = StatConfig(**_typed_overrides(cp["stat"], _STAT_FIELDS, "stat"))
    for section, field in (("cqi", "cqi_params"), ("expert", "expert_params"),
                           ("aux", "aux_params")):
        if cp.has_section(section):
            base = PipelineConfig.__dataclass_fields__[field].default
            kw[field] = replace(
                base, **_typed_overrides(cp[section], _PARAM_FIELDS, section)
            )

    known = {"pipeline", "bands", "recipe", "stat", "cqi", "expert", "aux"}
    for name in cp.sections():
        if name not in known:
            raise ConfigError(f"unknown config section [{name}]")
    return PipelineConfig(**kw)


def _expand_schemes(text):
    t = text.strip().lower()
    if t == "all":
        return CLASS_NAMES
    if t == "digital":
        return tuple(s.canonical for s in DIGITAL_SCHEMES)
    return _parse_tuple(text, str)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _cmd_synth(args):
    schemes = [ModulationScheme.from_name(n) for n in _expand_schemes(args.schemes)]
    recipe = SyntheticRecipe(
        schemes=tuple(s.canonical for s in schemes),
        snrs_db=tuple(_parse_tuple(args.snrs, int)),
        frames_per_cell=args.frames,
        frame_len=args.length,
        seed=args.seed,
    )
    ds = recipe.build()
    save_dataset(ds, args.out)
    print(f"wrote {len(ds)} frames ({len(schemes)} schemes x "
          f"{len(recipe.snrs_db)} SNRs x {args.frames}) to {args.out}")
    return 0


def _cmd_extract(args):
    cfg = load_config(args.config) if args.config else PipelineConfig()
    ds = load_dataset(args.data)
    x = extract_features(ds, cfg)
    names = feature_names_for(cfg)
    header = ["label", "snr_db", *names]
    rows = [
        [f.label.canonical, int(f.snr_db), *(f"{v:.10g}" for v in x[i])]
        for i, f in enumerate(ds.frames)
    ]
    _write_csv(args.out, header, rows)
    print(f"wrote {x.shape[0]} x {x.shape[1]} feature matrix to {args.out}")
    return 0


def _cmd_train(args):
    cfg = load_config(args.config)
    if args.data:
        cfg = replace(cfg, dataset_path=args.data)
    bundle = train_pipeline(cfg)
    save_bundle(bundle, args.out)
    print(f"trained {len(bundle.moe.experts)}-expert model on "
          f"{len(bundle.class_names)} classes; bundle written to {args.out}")
    return 0


def _cmd_eval(args):
    bundle = load_bundle(args.bundle)
    ds = load_dataset(args.data)
    report = evaluate(bundle, ds)
    print(report.summary())
    if args.out_prefix:
        _write_csv(
            f"{args.out_prefix}_per_snr.csv",
            ["snr_db", "accuracy", "frames"],
            [(f"{s:g}", f"{a:.6f}", n) for s, a, n in report.per_snr],
        )
        rows = []
        for tag, mat in [("overall", report.confusion_overall)] + [
            (str(k), v) for k, v in sorted(report.confusion_at.items())
        ]:
            for i, name in enumerate(report.class_names):
                rows.append([tag, name, *mat[i].tolist()])
        _write_csv(
            f"{args.out_prefix}_confusion.csv",
            ["snr", "true_class", *report.class_names],
            rows,
        )
        print(f"CSV reports written with prefix {args.out_prefix}")
    return 0


def _cmd_predict(args):
    bundle = load_bundle(args.bundle)
    ds = load_dataset(args.data)
    proba = predict_dataset(bundle, ds)
    pred = np.argmax(proba, axis=1)
    header = ["index", "label", "snr_db", "predicted",
              *(f"p_{n}" for n in bundle.class_names)]
    rows = [
        [i, f.label.canonical, int(f.snr_db), bundle.class_names[pred[i]],
         *(f"{p:.6f}" for p in proba[i])]
        for i, f in enumerate(ds.frames)
    ]
    _write_csv(args.out, header, rows)
    print(f"wrote per-frame probabilities for {len(ds)} frames to {args.out}")
    return 0


def _cmd_report(args):
    bundle = load_bundle(args.bundle)
    rep = complexity_report(bundle)
    print(rep.summary())
    if args.out:
        rows = [(n, f"{p:.1f}", f"{f:.1f}") for n, p, f in rep.rows]
        rows.append(("total", f"{rep.total_params:.1f}", f"{rep.total_flops:.1f}"))
        _write_csv(args.out, ["component", "params", "flops_per_frame"], rows)
    if args.importance:
        _write_csv(args.importance, ["feature", "gain"],
                   [(n, f"{g:.6g}") for n, g in importance_table(bundle)])
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="gamc",
        description="Graph-augmented modulation classifier "
        f"(tree kernels: {gbt.BACKEND} backend)",
    )
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate a synthetic portable dataset")
    s.add_argument("--out", required=True)
    s.add_argument("--schemes", default="all",
                   help="'all', 'digital', or a comma list of scheme names")
    s.add_argument("--snrs", default="-20,-16,-12,-8,-4,0,4,8,12,16,18")
    s.add_argument("--frames", type=int, default=100, help="frames per (scheme, SNR)")
    s.add_argument("--length", type=int, default=128)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=_cmd_synth)

    s = sub.add_parser("extract", help="extract features to CSV")
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--config")
    s.set_defaults(func=_cmd_extract)

    s = sub.add_parser("train", help="train a model bundle from a config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--data", help="override the config's dataset path")
    s.set_defaults(func=_cmd_train)

    s = sub.add_parser("eval", help="evaluate a bundle on a labeled dataset")
    s.add_argument("--bundle", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--out-prefix")
    s.set_defaults(func=_cmd_eval)

    s = sub.add_parser("predict", help="per-frame class probabilities to CSV")
    s.add_argument("--bundle", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_predict)

    s = sub.add_parser("report", help="complexity accounting for a bundle")
    s.add_argument("--bundle", required=True)
    s.add_argument("--out", help="write the accounting table as CSV")
    s.add_argument("--importance", help="write feature importance as CSV")
    s.set_defaults(func=_cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (DataError, FileNotFoundError, IsADirectoryError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3
    except GamcError as e:
        print(f"error: {e}", file=sys.stderr)
        return 4
    except Exception as e:  # pragma: no cover - defensive
        print(f"internal error: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
