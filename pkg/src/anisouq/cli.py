"""Command-line pipeline: features, labels, training, prediction, perturbation,
extrapolation distance, channel propagation and cross-validation.

Every command reads and writes the plain-text columnar format of
:mod:`anisouq.columnar`.  Settings come from flags, then from an optional
``--config`` file of ``key = value`` lines, then from built-in defaults.

Exit status is 0 on success, 2 for input or schema errors and 3 for
numerical or degenerate-data errors.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .channel import laminar_error, load_case, load_stress_profile, propagate
from .columnar import read_table, write_table
from .dataset import (
    HF_SCHEMA,
    LABELED_SCHEMA,
    RANS_SCHEMA,
    TAU_COLUMNS,
    LabeledSamples,
    filter_realizable,
    label_case,
    load_field,
    tu_mask,
    write_field,
)
from .errors import AnisoUQError, InputError, InsufficientData, InvalidInput, NumericalError
from .extrapolation import DEFAULT_FEATURES, correlation_report, fit_kde, kde_distance
from .features import FEATURE_NAMES, feature_index, feature_matrix, fit_scaler
from .forest import (
    ForestParams,
    fit_forest,
    leave_one_case_out,
    load_model,
    predict,
    rmse,
    save_model,
)
from .perturb import PerturbSpec, perturb_field, sweep_specs
from .tensor import sym_components

log = logging.getLogger("anisouq")

LAMINAR_TOL = 1e-6


@dataclass
class RunConfig:
    """Resolved settings shared by all commands."""

    seed: int = 0
    n_trees: int = 30
    max_depth: int = 15
    min_samples_split: int = 10
    max_features: int = 7
    target: str = "1C"
    delta_b: float = 1.0
    mode: str = "keep"
    f: float = 1.0
    u_ref: float | None = None
    tu_threshold: float = 1e-4
    features: str = ",".join(DEFAULT_FEATURES)

    @classmethod
    def resolve(cls, args: argparse.Namespace) -> "RunConfig":
        file_values = read_config(args.config) if getattr(args, "config", None) else {}
        known = {f.name: f for f in fields(cls)}
        unknown = set(file_values) - set(known)
        if unknown:
            raise InvalidInput(f"unknown configuration keys: {', '.join(sorted(unknown))}")
        values = {}
        for name, spec in known.items():
            flag = getattr(args, name, None)
            if flag is not None:
                values[name] = flag
            elif name in file_values:
                values[name] = _coerce(name, file_values[name], spec.default)
        return cls(**values)

    @property
    def forest_params(self) -> ForestParams:
        return ForestParams(self.n_trees, self.max_depth, self.min_samples_split, self.max_features)

    @property
    def kde_indices(self) -> tuple[int, ...]:
        return tuple(feature_index(name.strip()) for name in self.features.split(",") if name.strip())


def _coerce(name, text, default):
    if name == "u_ref":
        return float(text)
    try:
        return type(default)(text)
    except ValueError:
        raise InvalidInput(f"config value for {name!r} is not a valid {type(default).__name__}") from None


def read_config(path) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    with open(os.fspath(path), encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidInput(f"{path}:{lineno}: expected key = value")
            key, value = line.split("=", 1)
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _coords(field):
    return {name: field.col(name) for name in ("x", "y", "z") if field.has(name)}


def _load_labeled(paths) -> list[LabeledSamples]:
    out = []
    for path in paths:
        samples = LabeledSamples.from_field(load_field(path, LABELED_SCHEMA))
        kept, removed = filter_realizable(samples)
        if removed:
            print(f"{path}: removed {removed} non-realizable samples")
        out.append(kept)
    return out


def _xy(samples: list[LabeledSamples]):
    X = np.vstack([feature_matrix(s.rans) for s in samples])
    y = np.concatenate([s.target_p for s in samples])
    return X, y


# commands

def cmd_features(args, cfg):
    field = load_field(args.flow, RANS_SCHEMA)
    X = feature_matrix(field)
    cols = _coords(field)
    cols.update({name: X[:, j] for j, name in enumerate(FEATURE_NAMES)})
    write_table(args.out, cols, {"case_id": field.case_id} if field.case_id else None)
    print(f"wrote {X.shape[0]} samples x {X.shape[1]} features to {args.out}")


def cmd_label(args, cfg):
    rans = load_field(args.rans, RANS_SCHEMA)
    hf = load_field(args.hf, HF_SCHEMA)
    samples = label_case(rans, hf)
    n_bad = int(np.count_nonzero(~samples.realizable))
    labeled = samples.to_field()
    # degenerate points have no barycentric image; -1 marks them non-realizable on reload
    for name in ("bary_rans_x", "bary_rans_y", "bary_hf_x", "bary_hf_y"):
        col = labeled.col(name)
        labeled.columns[name] = np.where(np.isnan(col), -1.0, col)
    write_field(args.out, labeled)
    print(f"labeled {len(samples)} samples ({len(rans) - len(samples)} dropped, {n_bad} non-realizable)")


def cmd_train(args, cfg):
    samples = _load_labeled(args.labeled)
    X, y = _xy(samples)
    if y.size == 0:
        raise InsufficientData("no realizable training samples")
    model = fit_forest(X, y, cfg.forest_params, cfg.seed, FEATURE_NAMES)
    save_model(args.model, model)
    print(f"train_rmse {rmse(predict(model, X), y)!r}")
    if args.holdout:
        Xh, yh = _xy(_load_labeled(args.holdout))
        if yh.size == 0:
            raise InsufficientData("no realizable hold-out samples")
        print(f"holdout_rmse {rmse(predict(model, Xh), yh)!r}")


def cmd_predict(args, cfg):
    model = load_model(args.model)
    field = load_field(args.flow, RANS_SCHEMA)
    X = feature_matrix(field)
    if X.shape[0]:
        p = predict(model, X, clip=True)
    else:
        p = np.empty(0)
    if cfg.u_ref is not None:
        mask = tu_mask(field, cfg.u_ref, cfg.tu_threshold)
    else:
        mask = np.ones(len(field), dtype=bool)
    p = np.where(mask, p, 0.0)
    cols = _coords(field)
    cols.update(p=p, mask=mask.astype(float))
    write_table(args.out, cols, {"case_id": field.case_id} if field.case_id else None)
    print(f"predicted {p.size} samples, {int(mask.sum())} inside the mask")


def _perturbed_columns(field, result):
    cols = _coords(field)
    comps = sym_components(result.tau_star)
    cols.update({name: comps[:, j] for j, name in enumerate(TAU_COLUMNS)})
    cols.update(
        bary_before_x=result.bary_before[:, 0], bary_before_y=result.bary_before[:, 1],
        bary_after_x=result.bary_after[:, 0], bary_after_y=result.bary_after[:, 1],
        pk_before=result.pk_before, pk_after=result.pk_after, delta_b=result.delta_b,
        flag_degenerate=result.degenerate.astype(float),
        flag_nonrealizable=result.nonrealizable.astype(float),
    )
    # NaN is not representable in the file format; unmapped points get -1
    for name in ("bary_before_x", "bary_before_y", "bary_after_x", "bary_after_y"):
        cols[name] = np.where(np.isnan(cols[name]), -1.0, cols[name])
    return cols


def cmd_perturb(args, cfg):
    field = load_field(args.flow, RANS_SCHEMA)
    p_field = None
    if args.p_file:
        p_cols, _ = read_table(args.p_file)
        if "p" not in p_cols:
            raise InvalidInput(f"{args.p_file}: no 'p' column")
        p_field = p_cols["p"]
        if p_field.shape != (len(field),):
            raise InvalidInput(f"{args.p_file}: {p_field.size} values for {len(field)} samples")
    if args.sweep:
        # only an explicit --mode overrides the per-state alignment
        specs = sweep_specs(cfg.delta_b, cfg.f, data_driven=p_field is not None, mode_override=args.mode)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        targets = {label: out_dir / f"{label}.csv" for label in specs}
    else:
        spec = PerturbSpec(cfg.target, cfg.delta_b, cfg.mode, cfg.f)
        specs = {spec.label: spec}
        targets = {label: Path(args.out) for label in specs}
    for label, spec in specs.items():
        result = perturb_field(field, spec, p_field)
        meta = {"label": label, "target": spec.target.value, "mode": spec.production_mode.value,
                "moderation_f": repr(float(spec.moderation_f))}
        if p_field is None:
            meta["delta_b"] = repr(float(spec.delta_b))
        if field.case_id:
            meta["case_id"] = field.case_id
        write_table(targets[label], _perturbed_columns(field, result), meta)
        print(f"{label}: {len(result)} samples, {int(result.degenerate.sum())} degenerate, "
              f"{int(result.nonrealizable.sum())} non-realizable -> {targets[label]}")


def cmd_kde(args, cfg):
    train_cols, _ = read_table(args.train)
    test_cols, _ = read_table(args.test)
    names = [n.strip() for n in cfg.features.split(",") if n.strip()]
    for cols, path in ((train_cols, args.train), (test_cols, args.test)):
        missing = [n for n in names if n not in cols]
        if missing:
            raise InvalidInput(f"{path}: missing feature columns {', '.join(missing)}")
    train = np.column_stack([train_cols[n] for n in names])
    test = np.column_stack([test_cols[n] for n in names]) if names else np.empty((0, 0))
    if not args.no_standardize and train.shape[0]:
        scaler = fit_scaler(train)
        train = scaler.transform(train)
        test = scaler.transform(test) if test.shape[0] else test
    model = fit_kde(train, tuple(range(len(names))))
    dist = kde_distance(model, test) if test.shape[0] else np.empty(0)
    dist = np.atleast_1d(dist)
    cols = {n: test_cols[n] for n in ("x", "y", "z") if n in test_cols}
    cols["d_kde"] = dist
    write_table(args.out, cols, {"features": ",".join(names), "standardized": str(int(not args.no_standardize)),
                                 "sigma": repr(model.sigma),
                                 "volume": repr(model.volume)})
    if dist.size:
        print(f"d_kde mean {float(dist.mean())!r} std {float(dist.std())!r}")
    if args.errors:
        err_cols, _ = read_table(args.errors)
        if "abs_error" not in err_cols:
            raise InvalidInput(f"{args.errors}: no 'abs_error' column")
        rep = correlation_report(dist, err_cols["abs_error"])
        print(f"pearson_r {rep.pearson_r!r} n {rep.n}")


def cmd_channel(args, cfg):
    case = load_case(args.case)
    if args.verify_laminar:
        err = laminar_error(case)
        print(f"laminar max relative error {err!r}")
        if not err <= LAMINAR_TOL:
            raise NumericalError(f"laminar check failed: {err:.3e} > {LAMINAR_TOL:g}")
    profiles = {}
    for path in args.tau:
        label, y, tau = load_stress_profile(path)
        if label in profiles:
            raise InvalidInput(f"duplicate profile label {label!r}")
        profiles[label] = (y, tau)
    if not profiles:
        profiles["baseline"] = (case.y, case.tau12)
    cols = propagate(case, profiles)
    write_table(args.out, cols, {"labels": ",".join(profiles)})
    width = cols["band_max"] - cols["band_min"]
    print(f"{len(profiles)} profiles, max band width {float(width.max())!r}")


def cmd_crossval(args, cfg):
    grouped: dict[str, list[LabeledSamples]] = {}
    for path, samples in zip(args.labeled, _load_labeled(args.labeled)):
        grouped.setdefault(samples.case_id or Path(path).stem, []).append(samples)
    cases = {}
    for case, parts in grouped.items():
        X, y = _xy(parts)
        if y.size == 0:
            raise InsufficientData(f"case {case!r} has no realizable samples")
        cases[case] = (X, y)
    rows = leave_one_case_out(cases, cfg.forest_params, cfg.seed)
    print(f"{'scenario':<10}{'held_out':<24}{'n_train':>8}{'n_test':>8}{'train_rmse':>14}{'test_rmse':>14}")
    for i, row in enumerate(rows, 1):
        print(f"{i:<10}{row.held_out:<24}{row.n_train:>8}{row.n_test:>8}"
              f"{row.train_rmse:>14.6f}{row.test_rmse:>14.6f}")
    if args.out:
        write_table(args.out, {
            "scenario": np.arange(1, len(rows) + 1),
            "train_rmse": [r.train_rmse for r in rows],
            "test_rmse": [r.test_rmse for r in rows],
            "n_train": [r.n_train for r in rows],
            "n_test": [r.n_test for r in rows],
        }, {"held_out": ",".join(r.held_out for r in rows)})


# argument parsing

def _forest_flags(p):
    p.add_argument("--n-trees", dest="n_trees", type=int)
    p.add_argument("--max-depth", dest="max_depth", type=int)
    p.add_argument("--min-samples-split", dest="min_samples_split", type=int)
    p.add_argument("--max-features", dest="max_features", type=int)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value settings file (flags take precedence)")
    common.add_argument("--seed", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="anisouq", description="Data-driven eigenspace perturbation pipeline.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("features", parents=[common], help="write the 56-feature matrix of a RANS file")
    p.add_argument("flow")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("label", parents=[common], help="pair RANS with reference stresses and compute targets")
    p.add_argument("rans")
    p.add_argument("hf")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("train", parents=[common], help="fit the random forest on labeled files")
    p.add_argument("labeled", nargs="+")
    p.add_argument("--model", required=True)
    p.add_argument("--holdout", nargs="+")
    _forest_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", parents=[common], help="predict the perturbation magnitude per sample")
    p.add_argument("model")
    p.add_argument("flow")
    p.add_argument("--out", required=True)
    p.add_argument("--u-ref", dest="u_ref", type=float, help="reference velocity; enables the Tu mask")
    p.add_argument("--tu-threshold", dest="tu_threshold", type=float)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("perturb", parents=[common], help="perturbed Reynolds stresses for one state or the sweep")
    p.add_argument("flow")
    p.add_argument("--out", required=True, help="output file, or directory with --sweep")
    p.add_argument("--target", choices=["1C", "2C", "3C"])
    p.add_argument("--delta-b", dest="delta_b", type=float)
    p.add_argument("--mode", choices=["max", "min", "keep"])
    p.add_argument("--f", dest="f", type=float, help="moderation factor in [0, 1]")
    p.add_argument("--p-file", dest="p_file", help="per-sample magnitudes (column p) for a data-driven shift")
    p.add_argument("--sweep", action="store_true", help="all limiting states")
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("kde", parents=[common], help="extrapolation distance of test features")
    p.add_argument("train")
    p.add_argument("test")
    p.add_argument("--out", required=True)
    p.add_argument("--features", help="comma-separated feature names")
    p.add_argument("--errors", help="table with an abs_error column for the correlation report")
    p.add_argument("--no-standardize", dest="no_standardize", action="store_true",
                   help="use raw feature values instead of training-standardized ones")
    p.set_defaults(func=cmd_kde)

    p = sub.add_parser("channel", parents=[common], help="propagate stress profiles through the channel surrogate")
    p.add_argument("case")
    p.add_argument("tau", nargs="*")
    p.add_argument("--out", required=True)
    p.add_argument("--verify-laminar", action="store_true")
    p.set_defaults(func=cmd_channel)

    p = sub.add_parser("crossval", parents=[common], help="leave-one-case-out RMSE table")
    p.add_argument("labeled", nargs="+")
    p.add_argument("--out")
    _forest_flags(p)
    p.set_defaults(func=cmd_crossval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig.resolve(args)
        args.func(args, cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return InputError.exit_code
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return NumericalError.exit_code
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return InputError.exit_code
    except AnisoUQError as exc:  # pragma: no cover
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0
