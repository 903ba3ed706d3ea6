"""Command-line surface binding the pipeline:
generate -> label -> features -> train -> predict -> evaluate -> heatmap -> report.

Exit codes: 0 success, 1 usage error, 2 data error.  An optional config
file (key=value lines) mirrors the flags; flags override the file.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import characterizer
from .augment import plan_for_variant
from .behavior import build_consensus
from .errors import MexiError
from .evaluation import BASELINE_NAMES, kfold_protocol
from .expertise import (
    LABEL_NAMES,
    ThresholdConfig,
    fit_thresholds,
    labels_from_scores,
    score_session,
)
from .neural.nets import TrainerConfig
from .session import (
    DEFAULT_BINS,
    EVENT_KINDS,
    MatcherSession,
    heatmaps_from_map,
    match_of,
    matrix_from_history,
    parse_reference,
    parse_session,
    parse_task,
    serialize_reference,
    serialize_session,
    serialize_task,
)
from .synth import default_population_spec, generate_population, generate_task


def _read_config_file(path: str) -> dict[str, str]:
    values = {}
    for i, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise MexiError(f"{path}:{i}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _apply_config_file(args: argparse.Namespace, parser_defaults: dict):
    if not getattr(args, "config", None):
        return
    for key, value in _read_config_file(args.config).items():
        if not hasattr(args, key):
            continue
        # flags override the file: only fill values still at their default
        if getattr(args, key) == parser_defaults.get(key):
            current = parser_defaults.get(key)
            caster = type(current) if current is not None else str
            setattr(args, key, caster(value))


def _load_sessions(sessions_dir: str, task, jitter_ties: bool = False) -> list[MatcherSession]:
    paths = sorted(Path(sessions_dir).glob("*.json"))
    paths = [p for p in paths if p.name not in ("task.json", "manifest.json")]
    if not paths:
        raise MexiError(f"no session files found in {sessions_dir}")
    return [parse_session(p.read_bytes(), task, jitter_ties=jitter_ties) for p in paths]


def _load_task(path: str):
    return parse_task(Path(path).read_bytes())


def _load_reference(path: str, task):
    p = Path(path)
    if not p.exists():
        raise MexiError(f"reference file not found: {path}")
    return parse_reference(p.read_bytes(), task)


def _trainer_from_args(args) -> TrainerConfig:
    return TrainerConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
    )


def _write_json(path: Path, doc: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")


def cmd_generate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    task, ref = generate_task(args.n, args.m, args.density, args.seed)
    spec = default_population_spec(args.per_archetype)
    sessions, manifest = generate_population(spec, task, ref, args.seed)
    (out / "task.json").write_bytes(serialize_task(task))
    (out / "reference.csv").write_bytes(serialize_reference(ref))
    sessions_dir = out / "sessions"
    sessions_dir.mkdir(exist_ok=True)
    for session in sessions:
        (sessions_dir / f"{session.matcher_id}.json").write_bytes(serialize_session(session))
    _write_json(
        out / "manifest.json",
        {
            "archetypes": manifest,
            "config": {
                "n": args.n,
                "m": args.m,
                "density": args.density,
                "per_archetype": args.per_archetype,
                "seed": args.seed,
            },
        },
    )
    print(f"wrote {len(sessions)} sessions to {sessions_dir}")
    return 0


def cmd_label(args) -> int:
    task = _load_task(args.task)
    ref = _load_reference(args.ref, task)
    sessions = _load_sessions(args.sessions, task, jitter_ties=args.jitter_ties)
    scores = {}
    for s in sessions:
        match = match_of(matrix_from_history(s.history, s.task))
        scores[s.matcher_id] = score_session(s.history, match, ref, seed=args.seed)
    thresholds = fit_thresholds(list(scores.values()))
    if args.delta_p is not None or args.delta_r is not None:
        thresholds = ThresholdConfig(
            delta_p=args.delta_p if args.delta_p is not None else thresholds.delta_p,
            delta_r=args.delta_r if args.delta_r is not None else thresholds.delta_r,
            delta_res=thresholds.delta_res,
            delta_cal=thresholds.delta_cal,
        )
    lines = [
        f"# seed={args.seed} delta_p={thresholds.delta_p} delta_r={thresholds.delta_r}"
        f" delta_res={thresholds.delta_res:.6f} delta_cal={thresholds.delta_cal:.6f}",
        "matcher_id,P,R,Res,Res_p,Cal,precise,thorough,correlated,calibrated",
    ]

    def fmt(v):
        return "" if v is None else f"{v:.6f}"

    for s in sessions:
        sc = scores[s.matcher_id]
        labels = labels_from_scores(sc, thresholds)
        lines.append(
            ",".join(
                [s.matcher_id, fmt(sc.precision), fmt(sc.recall), fmt(sc.resolution),
                 fmt(sc.resolution_p), fmt(sc.calibration)]
                + [str(getattr(labels, name)) for name in LABEL_NAMES]
            )
        )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n")
    print(f"labeled {len(sessions)} matchers -> {out}")
    return 0


def cmd_train(args) -> int:
    task = _load_task(args.task)
    ref = _load_reference(args.ref, task)
    sessions = _load_sessions(args.sessions, task)
    model = characterizer.train(
        sessions,
        ref,
        plan_for_variant(args.variant),
        _trainer_from_args(args),
        bins=(args.bins_x, args.bins_y),
    )
    _write_json(Path(args.out), characterizer.model_to_jsonable(model))
    print(f"trained {args.variant} model on {len(sessions)} matchers -> {args.out}")
    return 0


def _load_model(path: str):
    p = Path(path)
    if not p.exists():
        raise MexiError(f"model file not found: {path}")
    return characterizer.model_from_jsonable(json.loads(p.read_text()))


def cmd_features(args) -> int:
    model = _load_model(args.model)
    sessions = _load_sessions(args.sessions, model.task)
    lines = [
        f"# model={args.model} seed={model.metadata.get('seed')}",
        "matcher_id," + ",".join(model.schema),
    ]
    for s in sessions:
        raw = characterizer.extract_features(s, model)
        lines.append(s.matcher_id + "," + ",".join(f"{v:.8g}" for v in raw))
    Path(args.out).write_text("\n".join(lines) + "\n")
    print(f"extracted features for {len(sessions)} matchers -> {args.out}")
    return 0


def cmd_predict(args) -> int:
    model = _load_model(args.model)
    sessions = _load_sessions(args.sessions, model.task)
    lines = [
        f"# model={args.model} seed={model.metadata.get('seed')}",
        "matcher_id,precise,thorough,correlated,calibrated,"
        "p_precise,p_thorough,p_correlated,p_calibrated",
    ]
    for s in sessions:
        labels, probs = characterizer.predict(model, s)
        lines.append(
            s.matcher_id
            + ","
            + ",".join(str(v) for v in labels.as_tuple())
            + ","
            + ",".join(f"{p:.6f}" for p in probs)
        )
    Path(args.out).write_text("\n".join(lines) + "\n")
    print(f"predicted {len(sessions)} matchers -> {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    task = _load_task(args.task)
    ref = _load_reference(args.ref, task)
    sessions = _load_sessions(args.sessions, task)
    baselines = tuple(args.baselines.split(",")) if args.baselines else BASELINE_NAMES
    report = kfold_protocol(
        sessions,
        ref,
        k=args.k,
        variant=args.variant,
        seed=args.seed,
        trainer=_trainer_from_args(args),
        baselines=baselines,
        bins=(args.bins_x, args.bins_y),
        bootstrap_samples=args.bootstrap,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "report.json", report.to_jsonable())

    metric_names = ("A_P", "A_R", "A_Res", "A_Cal", "A_ML")
    lines = ["method," + ",".join(metric_names)]
    for method, accs in report.accuracies.items():
        lines.append(method + "," + ",".join(f"{accs[m]:.4f}" for m in metric_names))
    (out / "accuracy.csv").write_text("\n".join(lines) + "\n")

    util_fields = ("mean_P", "mean_R", "mean_Res", "mean_abs_Cal", "count")
    lines = ["method," + ",".join(util_fields)]
    for table in (report.utilization, report.early_utilization):
        for method, row in table.items():
            vals = [("" if row[f] is None else str(row[f])) for f in util_fields]
            lines.append(method + "," + ",".join(vals))
    (out / "utilization.csv").write_text("\n".join(lines) + "\n")

    lines = ["matcher_id,fold,method,precise,thorough,correlated,calibrated"]
    for method, preds in sorted(report.predictions.items()):
        for matcher_id, values in sorted(preds.items()):
            fold = report.fold_assignments[matcher_id]
            lines.append(f"{matcher_id},{fold},{method}," + ",".join(str(v) for v in values))
    (out / "predictions.csv").write_text("\n".join(lines) + "\n")
    print(f"evaluation report -> {out}")
    return 0


def cmd_heatmap(args) -> int:
    task = _load_task(args.task)
    session_path = Path(args.session)
    if not session_path.exists():
        raise MexiError(f"session file not found: {args.session}")
    session = parse_session(session_path.read_bytes(), task)
    heatmaps = heatmaps_from_map(session.movement, session.screen, (args.bins_x, args.bins_y))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    kind_names = {"move": "move", "l": "left_click", "r": "right_click", "s": "scroll"}
    for kind in EVENT_KINDS:
        grid = heatmaps.grids[kind]
        name = kind_names[kind]
        peak = grid.max()
        scaled = (grid / peak * 255).astype(np.uint8) if peak > 0 else grid.astype(np.uint8)
        header = f"P5\n# kind={name} events={int(grid.sum())}\n{grid.shape[1]} {grid.shape[0]}\n255\n"
        (out / f"{name}.pgm").write_bytes(header.encode() + scaled.tobytes())
        csv_lines = [",".join(str(int(v)) for v in row) for row in grid]
        (out / f"{name}.csv").write_text("\n".join(csv_lines) + "\n")
    print(f"heat maps for {session.matcher_id} -> {out}")
    return 0


def cmd_report(args) -> int:
    doc = json.loads(Path(args.report).read_text())
    print(f"variant={doc['variant']} k={doc['k_folds']} seed={doc['seed']}")
    print()
    print(f"{'method':<12} {'A_P':>6} {'A_R':>6} {'A_Res':>6} {'A_Cal':>6} {'A_ML':>6}")
    for method, accs in doc["accuracies"].items():
        print(
            f"{method:<12} {accs['A_P']:>6.3f} {accs['A_R']:>6.3f} "
            f"{accs['A_Res']:>6.3f} {accs['A_Cal']:>6.3f} {accs['A_ML']:>6.3f}"
        )
    print()
    print("bootstrap p (A_ML):")
    for name, p in doc["bootstrap_p"].items():
        print(f"  {name}: {p:.4f}")
    print()
    print("utilization (selected experts):")
    for method, row in {**doc["utilization"], **doc["early_utilization"]}.items():
        if row.get("empty"):
            print(f"  {method}: empty selection")
            continue
        res = row["mean_Res"]
        print(
            f"  {method}: n={row['count']} P={row['mean_P']:.3f} R={row['mean_R']:.3f} "
            f"Res={res:.3f} |Cal|={row['mean_abs_Cal']:.3f}"
            if res is not None
            else f"  {method}: n={row['count']} P={row['mean_P']:.3f} R={row['mean_R']:.3f}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mexi", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, need_seed=True):
        p.add_argument("--config", help="key=value config file; flags override")
        if need_seed:
            p.add_argument("--seed", type=int, required=True, help="master seed")

    p = sub.add_parser("generate", help="generate a synthetic matcher population")
    add_common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=24)
    p.add_argument("--m", type=int, default=24)
    p.add_argument("--density", type=float, default=18 / 576)
    p.add_argument("--per-archetype", type=int, default=30)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("label", help="expertise measures and labels for a population")
    add_common(p)
    p.add_argument("--sessions", required=True)
    p.add_argument("--task", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--delta-p", type=float, default=None)
    p.add_argument("--delta-r", type=float, default=None)
    p.add_argument("--jitter-ties", action="store_true")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("features", help="extract fused feature vectors with a trained model")
    add_common(p, need_seed=False)
    p.add_argument("--model", required=True)
    p.add_argument("--sessions", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_features)

    for name, fn, helptext in (
        ("train", cmd_train, "train a characterizer model"),
        ("evaluate", cmd_evaluate, "k-fold evaluation with baselines"),
    ):
        p = sub.add_parser(name, help=helptext)
        add_common(p)
        p.add_argument("--sessions", required=True)
        p.add_argument("--task", required=True)
        p.add_argument("--ref", required=True)
        p.add_argument("--out", required=True)
        p.add_argument("--variant", default="mexi_50", choices=("mexi_base", "mexi_50", "mexi_70"))
        p.add_argument("--epochs", type=int, default=30)
        p.add_argument("--batch-size", type=int, default=8)
        p.add_argument("--bins-x", type=int, default=DEFAULT_BINS[0])
        p.add_argument("--bins-y", type=int, default=DEFAULT_BINS[1])
        if name == "evaluate":
            p.add_argument("--k", type=int, default=5)
            p.add_argument("--baselines", default=None, help="comma-separated subset")
            p.add_argument("--bootstrap", type=int, default=10_000)
        p.set_defaults(func=fn)

    p = sub.add_parser("predict", help="characterize sessions with a trained model")
    add_common(p, need_seed=False)
    p.add_argument("--model", required=True)
    p.add_argument("--sessions", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("heatmap", help="export per-kind heat maps of one session")
    add_common(p, need_seed=False)
    p.add_argument("--session", required=True)
    p.add_argument("--task", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--bins-x", type=int, default=DEFAULT_BINS[0])
    p.add_argument("--bins-y", type=int, default=DEFAULT_BINS[1])
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("report", help="print a readable summary of an evaluation report")
    add_common(p, need_seed=False)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    defaults = {
        action.dest: action.default
        for action in parser._subparsers._group_actions[0].choices[args.command]._actions
    }
    try:
        _apply_config_file(args, defaults)
        return args.func(args)
    except MexiError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
