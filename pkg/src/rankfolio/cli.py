"""Command-line interface: reproducible ranking experiments end to end.

Subcommands: ``generate`` (synthetic scenarios), ``evaluate`` (one
cross-validated cell), ``grid`` (scenarios x strategies x combos),
``report`` (quartile-sum tables and boxplot data), ``stats``
(significance tests) and ``simulate`` (schedules against true runtimes).

Every command is deterministic given its flags: identical invocations
write byte-identical files. Exit codes: 0 success, 2 usage/validation,
3 I/O failure. ``RANKFOLIO_THREADS`` caps the grid worker pool
(unset or 0 runs sequentially).

Predictions interchange file (UTF-8 CSV): header
``instance,level,ranking_label,scores`` with scores ``;``-joined and
empty at level R1. The score direction is not stored; it is recovered by
checking which direction's derived ranking matches the stored label.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import evaluation as ev
from . import portfolio as pf
from . import rankers as rk
from . import scenario as sc
from .errors import (
    InvalidBudget,
    InvalidSpec,
    LevelMismatch,
    MalformedFile,
    RankfolioError,
)
from .learners import CLASSIFIER_REGISTRY, REGRESSOR_REGISTRY

PREDICTIONS_HEADER = ["instance", "level", "ranking_label", "scores"]


# -- shared helpers ----------------------------------------------------------


def parse_combo(token: str) -> rk.LearnerCombo:
    """'tree' -> tree classifier + tree regressor; 'knn5+linear' -> pair;
    '-' stands for an absent side."""
    if "+" in token:
        clf, reg = token.split("+", 1)
    else:
        clf = token if token in CLASSIFIER_REGISTRY else "-"
        reg = token if token in REGRESSOR_REGISTRY else "-"
    clf = None if clf in ("", "-") else clf
    reg = None if reg in ("", "-") else reg
    if clf is None and reg is None:
        raise InvalidSpec(f"combo {token!r} names no usable learner")
    if clf is not None and clf not in CLASSIFIER_REGISTRY:
        raise InvalidSpec(f"unknown classifier {clf!r} in combo {token!r}")
    if reg is not None and reg not in REGRESSOR_REGISTRY:
        raise InvalidSpec(f"unknown regressor {reg!r} in combo {token!r}")
    return rk.LearnerCombo(classifier=clf, regressor=reg)


def combo_name(combo: rk.LearnerCombo) -> str:
    return f"{combo.classifier_name()}+{combo.regressor_name()}"


def _strategy_order(names) -> list:
    canonical = list(rk.STRATEGIES)
    known = [n for n in canonical if n in names]
    extra = sorted(n for n in names if n not in rk.STRATEGIES)
    return known + extra


def render_cell(value: float) -> str:
    """Three decimal places with trailing zeros trimmed: 3.0 -> '3'."""
    text = f"{value:.3f}".rstrip("0").rstrip(".")
    return "0" if text in ("-0", "") else text


def _write_predictions(path, predictions):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PREDICTIONS_HEADER)
        for instance_id, pred in predictions:
            scores = (
                ";".join(repr(float(s)) for s in pred.scores)
                if pred.scores is not None
                else ""
            )
            writer.writerow([
                instance_id, pred.level,
                rk.encode_ranking_label(pred.ranking), scores,
            ])


def _read_predictions(path):
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != PREDICTIONS_HEADER:
            raise MalformedFile(f"{path}: not a predictions file")
        for row in reader:
            if len(row) != 4:
                raise MalformedFile(f"{path}: bad row {row}")
            instance_id, level, label, scores_text = row
            ranking = rk.decode_ranking_label(label)
            if level == sc.PredictionLevel.R1:
                rows.append((instance_id, rk.RankPrediction.at_level1(ranking)))
                continue
            if level != sc.PredictionLevel.R2:
                raise MalformedFile(f"{path}: unknown level {level!r}")
            scores = tuple(float(v) for v in scores_text.split(";")) if scores_text else ()
            if len(scores) != len(ranking):
                raise MalformedFile(
                    f"{path}: {instance_id}: {len(scores)} scores for {len(ranking)} algorithms"
                )
            rows.append((instance_id, _rebuild_r2(ranking, scores, path, instance_id)))
    return rows


def _rebuild_r2(ranking, scores, path, instance_id):
    """Recover the score direction from the ranking/scores consistency rule."""
    for direction in (rk.SCORE_HIGHER, rk.SCORE_LOWER):
        if rk.derive_ranking_from_scores(scores, direction) == ranking:
            return rk.RankPrediction(ranking, sc.PredictionLevel.R2, scores, direction)
    raise MalformedFile(
        f"{path}: {instance_id}: scores are inconsistent with the stored ranking"
    )


# -- generate ----------------------------------------------------------------


def cmd_generate(args) -> int:
    spec = sc.GeneratorSpec(
        instances=args.instances,
        algorithms=args.algorithms,
        features=args.features,
        noise=args.noise,
        censored_fraction=args.censored_fraction,
        growth=args.growth,
        base_runtime=args.base_runtime,
        name=args.name,
    )
    scenario = sc.generate_synthetic(spec, args.seed)
    sc.save_scenario(scenario, args.out)
    censored = sum(
        1 for rec in scenario.performance.records.values() if rec.status != "ok"
    )
    print(
        f"wrote {args.out}: {len(scenario.instances)} instances x "
        f"{scenario.n_algorithms} algorithms, {scenario.n_features} features, "
        f"timeout {scenario.timeout:.3f}s, {censored} censored records"
    )
    return 0


# -- evaluate ----------------------------------------------------------------


def cmd_evaluate(args) -> int:
    scenario = sc.load_scenario(args.scenario)
    strategy = rk.strategy_by_name(args.strategy)
    combo = rk.LearnerCombo(classifier=args.classifier, regressor=args.regressor)
    scores, predictions = ev.cross_validate(
        scenario, strategy, combo, k=args.folds, seed=args.seed,
        stacking=args.stacking,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    clf, reg = combo.classifier_name(), combo.regressor_name()
    ev.write_scores_csv(
        out / "results.csv",
        [(scenario.name, strategy.name, clf, reg, s) for s in scores],
    )
    summary = ev.quartiles([s.rho for s in scores])
    ev.write_summary_csv(
        out / "summary.csv", [(scenario.name, strategy.name, clf, reg, summary)]
    )
    if args.predictions_out:
        _write_predictions(args.predictions_out, predictions)
    print(
        f"{scenario.name} {strategy.name} {combo_name(combo)}: "
        f"{len(scores)} instances, median rho {render_cell(summary.median)}"
    )
    return 0


# -- grid --------------------------------------------------------------------


def cmd_grid(args) -> int:
    scenarios = [sc.load_scenario(p) for p in args.scenarios]
    names = [s.name for s in scenarios]
    if len(set(names)) != len(names):
        raise InvalidSpec(f"scenario names must be unique, got {names}")
    strategy_names = (
        list(rk.STRATEGIES) if args.strategies == "all" else args.strategies.split(",")
    )
    for name in strategy_names:
        rk.strategy_by_name(name)  # fail fast on typos
    combo_tokens = (
        sorted(REGRESSOR_REGISTRY) if args.combos == "all" else args.combos.split(",")
    )
    combos = [(token, parse_combo(token)) for token in combo_tokens]

    cells = [
        (scenario, strategy, token, combo)
        for scenario in scenarios
        for strategy in strategy_names
        for token, combo in combos
    ]

    def run(cell):
        scenario, strategy, token, combo = cell
        try:
            scores, _ = ev.cross_validate(
                scenario, strategy, combo, k=args.folds, seed=args.seed
            )
            summary = ev.quartiles([s.rho for s in scores])
            return ev.GridCell(
                scenario.name, strategy, combo_name(combo),
                combo.classifier_name(), combo.regressor_name(),
                summary, tuple(scores),
            )
        except RankfolioError as exc:
            return ev.GridCell(
                scenario.name, strategy, combo_name(combo),
                combo.classifier_name(), combo.regressor_name(),
                error=f"{type(exc).__name__}: {exc}",
            )

    threads = int(os.environ.get("RANKFOLIO_THREADS", "0") or "0")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, cells))
    else:
        results = [run(cell) for cell in cells]

    grid = ev.GridResult()
    for cell in results:
        grid.add(cell)

    strat_pos = {name: i for i, name in enumerate(_strategy_order(strategy_names))}
    ordered = sorted(
        grid.cells.values(), key=lambda c: (c.dataset, strat_pos[c.strategy], c.combo)
    )

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    score_rows = []
    summary_rows = []
    cell_rows = []
    for cell in ordered:
        cell_rows.append([
            cell.dataset, cell.strategy, cell.classifier, cell.regressor,
            "error" if cell.error else "ok", cell.error or "",
        ])
        if cell.error:
            continue
        summary_rows.append(
            (cell.dataset, cell.strategy, cell.classifier, cell.regressor, cell.summary)
        )
        score_rows.extend(
            (cell.dataset, cell.strategy, cell.classifier, cell.regressor, s)
            for s in cell.scores
        )
    ev.write_scores_csv(out / "scores.csv", score_rows)
    ev.write_summary_csv(out / "summary.csv", summary_rows)
    with open(out / "cells.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["dataset", "strategy", "classifier", "regressor", "status", "message"])
        writer.writerows(cell_rows)

    with open(out / "best_worst.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["strategy", "mode", "combo", "sum"])
        for strategy in _strategy_order(strategy_names):
            try:
                best, worst = ev.select_best_worst(grid, strategy)
            except RankfolioError as exc:
                writer.writerow([strategy, "error", "", str(exc)])
                continue
            for mode, combo in (("best", best), ("worst", worst)):
                total = ev.sum_quartile_scores(
                    grid.cells[(d, strategy, combo)].summary for d in grid.datasets()
                )
                writer.writerow([strategy, mode, combo, repr(total)])

    failed = sum(1 for cell in results if cell.error)
    print(f"grid complete: {len(results)} cells, {failed} failed; results in {out}")
    return 0


# -- report ------------------------------------------------------------------


def _load_summaries(results_path):
    path = Path(results_path)
    if path.is_dir():
        path = path / "summary.csv"
    return path, ev.read_summary_csv(path)


def cmd_report(args) -> int:
    _, rows = _load_summaries(args.results)
    if not rows:
        raise InvalidSpec("results are empty")
    grid = ev.GridResult()
    for dataset, strategy, clf, reg, summary in rows:
        grid.add(ev.GridCell(dataset, strategy, f"{clf}+{reg}", clf, reg, summary))
    datasets = grid.datasets()
    out = Path(args.out if args.out else args.results)
    out.mkdir(parents=True, exist_ok=True)

    table_rows = []
    boxplot_rows = []
    for strategy in _strategy_order(grid.strategies()):
        best, worst = ev.select_best_worst(grid, strategy)
        combo = best if args.mode == "best" else worst
        sums = []
        for dataset in datasets:
            cell = grid.cells[(dataset, strategy, combo)]
            sums.append(cell.summary.spread_sum())
            q = cell.summary
            boxplot_rows.append([dataset, strategy, repr(q.min), repr(q.q1),
                                 repr(q.median), repr(q.q3), repr(q.max)])
        table_rows.append([strategy] + [render_cell(v) for v in sums]
                          + [render_cell(sum(sums))])

    header = ["strategy"] + datasets + ["total"]
    if args.format == "md":
        lines = ["| " + " | ".join(header) + " |",
                 "|" + "|".join(["---"] * len(header)) + "|"]
        lines += ["| " + " | ".join(row) + " |" for row in table_rows]
        text = "\n".join(lines) + "\n"
        (out / f"report-{args.mode}.md").write_text(text, encoding="utf-8")
    else:
        with open(out / f"report-{args.mode}.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(table_rows)
        text = "\n".join(",".join(row) for row in [header] + table_rows) + "\n"
    with open(out / "boxplot.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["dataset", "strategy", "min", "q1", "median", "q3", "max"])
        writer.writerows(boxplot_rows)
    print(text, end="")
    return 0


# -- stats -------------------------------------------------------------------


def _load_scores(results_path):
    path = Path(results_path)
    if path.is_dir():
        candidate = path / "scores.csv"
        path = candidate if candidate.exists() else path / "results.csv"
    return ev.read_scores_csv(path)


def _one_combo_per_strategy(rows, strategies, mode):
    """Keep a single combo per strategy, the best/worst one when several exist."""
    grid = ev.GridResult()
    grouped = {}
    for dataset, strategy, clf, reg, score in rows:
        grouped.setdefault((dataset, strategy, f"{clf}+{reg}"), []).append(score.rho)
    for (dataset, strategy, combo), rhos in grouped.items():
        clf, reg = combo.split("+", 1)
        grid.add(ev.GridCell(dataset, strategy, combo, clf, reg, ev.quartiles(rhos)))
    chosen = {}
    for strategy in strategies:
        best, worst = ev.select_best_worst(grid, strategy)
        chosen[strategy] = best if mode == "best" else worst
    return [
        (dataset, strategy, clf, reg, score)
        for dataset, strategy, clf, reg, score in rows
        if chosen.get(strategy) == f"{clf}+{reg}"
    ]


def cmd_stats(args) -> int:
    rows = _load_scores(args.results)
    if args.strategies:
        wanted = args.strategies.split(",")
        rows = [r for r in rows if r[1] in wanted]
        missing = [w for w in wanted if all(r[1] != w for r in rows)]
        if missing:
            raise InvalidSpec(f"no results for strategies {missing}")
    strategies = _strategy_order({r[1] for r in rows})
    if args.test == "kw" and len(strategies) < 2:
        raise InvalidSpec("kruskal-wallis needs >= 2 strategies in the results")
    if args.test == "wilcoxon" and len(strategies) != 2:
        raise InvalidSpec(
            f"wilcoxon compares exactly 2 strategies, got {len(strategies)}"
        )

    rows = _one_combo_per_strategy(rows, strategies, args.mode)

    if args.level == "instances":
        series = {
            s: {(r[0], r[4].instance_id): r[4].rho for r in rows if r[1] == s}
            for s in strategies
        }
    else:
        series = {}
        for s in strategies:
            per_dataset = {}
            for dataset, strategy, _, _, score in rows:
                if strategy == s:
                    per_dataset.setdefault(dataset, []).append(score.rho)
            triples = {}
            for dataset in sorted(per_dataset):
                q = ev.quartiles(per_dataset[dataset])
                triples[(dataset, "q1")] = q.q1
                triples[(dataset, "median")] = q.median
                triples[(dataset, "q3")] = q.q3
            series[s] = triples

    if args.test == "kw":
        groups = [list(series[s].values()) for s in strategies]
        result = ev.kruskal_wallis(groups)
    else:
        s1, s2 = strategies
        common = sorted(set(series[s1]) & set(series[s2]))
        if not common:
            raise InvalidSpec(f"strategies {s1!r} and {s2!r} share no observations")
        result = ev.wilcoxon_signed_rank(
            [series[s1][key] for key in common], [series[s2][key] for key in common]
        )
    print(
        f"{result.name} over {args.level} of {len(strategies)} strategies: "
        f"statistic={result.statistic:.6g} p={result.p_value:.6g} ({result.method})"
    )
    return 0


# -- simulate ----------------------------------------------------------------


def cmd_simulate(args) -> int:
    scenario = sc.load_scenario(args.scenario)
    predictions = _read_predictions(args.predictions)
    if not args.budget > 0:
        raise InvalidBudget(f"budget must be positive, got {args.budget}")
    known = {inst.id for inst in scenario.instances}
    out_rows = []
    solved_count = 0
    total_elapsed = 0.0
    for instance_id, pred in predictions:
        if instance_id not in known:
            raise InvalidSpec(f"prediction for unknown instance {instance_id!r}")
        if len(pred.ranking) != scenario.n_algorithms:
            raise InvalidSpec(
                f"{instance_id}: ranking covers {len(pred.ranking)} algorithms, "
                f"scenario has {scenario.n_algorithms}"
            )
        if args.policy == "equal":
            top_n = args.top_n if args.top_n else 1
            schedule = pf.schedule_equal_slices(
                pred.ranking, scenario.algorithms, args.budget, top_n
            )
        else:
            if pred.level != sc.PredictionLevel.R2:
                raise LevelMismatch(
                    f"{instance_id}: proportional scheduling needs R2 predictions with scores"
                )
            schedule = pf.schedule_proportional(pred, scenario.algorithms, args.budget)
        runtimes = {
            a: scenario.performance.record(instance_id, a).runtime
            for a in scenario.algorithms
        }
        outcome = pf.simulate(schedule, runtimes, scenario.timeout)
        solved_count += outcome.solved
        total_elapsed += outcome.elapsed
        out_rows.append([
            instance_id, args.policy, repr(float(args.budget)),
            "1" if outcome.solved else "0", outcome.solver or "",
            repr(float(outcome.elapsed)),
        ])
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["instance", "policy", "budget", "solved", "solver", "elapsed"])
        writer.writerows(out_rows)
    mean_elapsed = total_elapsed / len(out_rows) if out_rows else 0.0
    print(
        f"solved {solved_count}/{len(out_rows)} instances, "
        f"mean elapsed {mean_elapsed:.6g}s; report in {args.out}"
    )
    return 0


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rankfolio",
        description="Predict per-instance performance rankings of an algorithm portfolio.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic scenario directory")
    p.add_argument("--instances", type=int, required=True)
    p.add_argument("--algorithms", type=int, required=True)
    p.add_argument("--features", type=int, required=True)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--censored-fraction", type=float, default=0.1)
    p.add_argument("--growth", type=float, default=3.0)
    p.add_argument("--base-runtime", type=float, default=10.0)
    p.add_argument("--name", default="synthetic")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="cross-validate one strategy + combo")
    p.add_argument("--scenario", required=True)
    p.add_argument("--strategy", required=True)
    p.add_argument("--classifier")
    p.add_argument("--regressor")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stacking", choices=("oof", "resub"), default="oof")
    p.add_argument("--out", required=True)
    p.add_argument("--predictions-out", help="also write the predictions interchange CSV")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("grid", help="evaluate scenarios x strategies x combos")
    p.add_argument("--scenarios", nargs="+", required=True)
    p.add_argument("--strategies", default="all", help="comma list or 'all'")
    p.add_argument("--combos", default="all",
                   help="comma list of combos ('tree', 'knn5+linear', ...) or 'all'")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("report", help="render quartile-sum tables + boxplot data")
    p.add_argument("--results", required=True, help="grid output dir or summary.csv")
    p.add_argument("--format", choices=("md", "csv"), default="md")
    p.add_argument("--mode", choices=("best", "worst"), default="best")
    p.add_argument("--out", help="output dir (defaults to the results dir)")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("stats", help="significance tests over results")
    p.add_argument("--results", required=True, help="scores/results CSV or grid dir")
    p.add_argument("--test", choices=("kw", "wilcoxon"), required=True)
    p.add_argument("--level", choices=("quartiles", "instances"), default="quartiles")
    p.add_argument("--strategies", help="comma list; default: all in the results")
    p.add_argument("--mode", choices=("best", "worst"), default="best",
                   help="combo picked per strategy when several are present")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("simulate", help="simulate schedules from predictions")
    p.add_argument("--scenario", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--budget", type=float, required=True)
    p.add_argument("--policy", choices=("equal", "proportional"), default="equal")
    p.add_argument("--top-n", type=int, help="algorithms to schedule (equal policy; default 1)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except RankfolioError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
