"""Command-line entry point.

Subcommands: import-taxonomy, build-targets, eval, simulate, static-dm,
report. Exit codes: 0 success, 1 I/O trouble, 2 validation or usage, 3
quality gate missed. Every subcommand writes a manifest so a run can be
replayed to byte-identical outputs; existing outputs are never replaced
without --force.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path
from typing import Callable

from .embeddings import cosine_matrix, load_embeddings, write_embeddings
from .errors import TrainingGateError, ValidationError
from .lab.experiment import SimulateConfig, render_static_csv, run_simulation
from .metrics import (
    ClassTemplates,
    load_predictions,
    plot_data_rows,
    render_plot_data_csv,
    render_report_csv,
    report as metrics_report,
    static_dm,
    validate_log,
    write_predictions,
)
from .targets import build_targets, read_table, write_table
from .taxonomy import parse_taxonomy, write_classmap, write_edges

EXIT_OK = 0
EXIT_IO = 1
EXIT_VALIDATION = 2
EXIT_GATE = 3


def _read_text(path: str | Path) -> str:
    return Path(path).read_text(encoding="utf-8")


class _Outputs:
    """Staged writes: clash-check everything, then write everything."""

    def __init__(self, force: bool):
        self.force = force
        self._texts: list[tuple[Path, str]] = []
        self._renders: list[tuple[Path, Callable[[Path], None]]] = []

    def stage(self, path: str | Path, content: str) -> None:
        self._texts.append((Path(path), content))

    def stage_render(self, path: str | Path, render: Callable[[Path], None]) -> None:
        self._renders.append((Path(path), render))

    def paths(self) -> list[Path]:
        return [p for p, _ in self._texts] + [p for p, _ in self._renders]

    def commit(self) -> None:
        if not self.force:
            for p in self.paths():
                if p.exists():
                    raise FileExistsError(f"refusing to overwrite {p} (use --force)")
        for p, content in self._texts:
            p.parent.mkdir(parents=True, exist_ok=True)
            p.write_text(content, encoding="utf-8")
        for p, render in self._renders:
            p.parent.mkdir(parents=True, exist_ok=True)
            render(p)


def _manifest(subcommand: str, inputs: dict, outputs: dict, seeds: dict | None = None, config: dict | None = None) -> str:
    doc = {
        "subcommand": subcommand,
        "inputs": inputs,
        "outputs": outputs,
        "seeds": seeds or {},
        "config": config or {},
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


def cmd_import_taxonomy(args) -> int:
    tax = parse_taxonomy(_read_text(args.edges), _read_text(args.classmap))
    out = Path(args.out)
    w = _Outputs(args.force)
    w.stage(out / "edges.tsv", write_edges(tax))
    w.stage(out / "classmap.csv", write_classmap(tax))
    w.stage(
        out / "manifest.json",
        _manifest(
            "import-taxonomy",
            {"edges": str(args.edges), "classmap": str(args.classmap)},
            {"edges": "edges.tsv", "classmap": "classmap.csv"},
        ),
    )
    w.commit()
    _say(args, f"imported taxonomy: {len(tax.nodes)} nodes, {tax.num_classes} classes, root {tax.root_id}")
    return EXIT_OK


def cmd_build_targets(args) -> int:
    if args.wup:
        bundle = Path(args.wup)
        tax = parse_taxonomy(
            _read_text(bundle / "edges.tsv"), _read_text(bundle / "classmap.csv")
        )
        matrix = tax.wup_matrix()
        labels = tax.class_labels()
        inputs = {"wup": str(args.wup)}
    else:
        e = load_embeddings(_read_text(args.embeddings))
        matrix = cosine_matrix(e)
        labels = list(e.labels)
        inputs = {"embeddings": str(args.embeddings)}
    table = build_targets(matrix, labels)
    out = Path(args.out)
    w = _Outputs(args.force)
    w.stage(out, write_table(table))
    w.stage(
        Path(str(out) + ".manifest.json"),
        _manifest("build-targets", inputs, {"table": str(out)}),
    )
    w.commit()
    _say(args, f"C={table.num_classes} source={table.source_name}")
    return EXIT_OK


def _load_templates(path: str) -> ClassTemplates:
    return ClassTemplates.from_embeddings(load_embeddings(_read_text(path)))


def cmd_eval(args) -> int:
    log = load_predictions(_read_text(args.log))
    ct = _load_templates(args.templates) if args.templates else None
    if ct is not None:
        validate_log(log, ct.num_classes)
    drop = not args.keep_misclassified
    reports = metrics_report(log, ct, drop_misclassified=drop)
    out = Path(args.out)
    plot_path = Path(args.plot_data) if args.plot_data else out.with_name(out.stem + "_plot_data.csv")
    w = _Outputs(args.force)
    w.stage(out, render_report_csv(reports))
    w.stage(plot_path, render_plot_data_csv(plot_data_rows(reports)))
    inputs = {"log": str(args.log)}
    if args.templates:
        inputs["templates"] = str(args.templates)
    w.stage(
        Path(str(out) + ".manifest.json"),
        _manifest(
            "eval",
            inputs,
            {"report": str(out), "plot_data": str(plot_path)},
            config={"drop_misclassified": drop},
        ),
    )
    w.commit()
    _say(args, f"wrote {len(reports)} report row(s) to {out}")
    return EXIT_OK


def cmd_report(args) -> int:
    from .plotting import render_metric_figures

    log = load_predictions(_read_text(args.log))
    ct = _load_templates(args.templates) if args.templates else None
    if ct is not None:
        validate_log(log, ct.num_classes)
    drop = not args.keep_misclassified
    reports = metrics_report(log, ct, drop_misclassified=drop)
    rows = plot_data_rows(reports)
    out = Path(args.out)
    w = _Outputs(args.force)
    w.stage(out / "report.csv", render_report_csv(reports))
    w.stage(out / "plot_data.csv", render_plot_data_csv(rows))
    metrics_present = [m for m in ("fr", "tsr", "dm") if any(r[0] == m for r in rows)]
    for metric in metrics_present:
        w.stage_render(
            out / f"report_{metric}.png",
            lambda p, m=metric: render_metric_figures(
                [r for r in rows if r[0] == m], p.parent, stem="report"
            ),
        )
    inputs = {"log": str(args.log)}
    if args.templates:
        inputs["templates"] = str(args.templates)
    outputs = {"report": "report.csv", "plot_data": "plot_data.csv"}
    for metric in metrics_present:
        outputs[f"figure_{metric}"] = f"report_{metric}.png"
    w.stage(
        out / "manifest.json",
        _manifest("report", inputs, outputs, config={"drop_misclassified": drop}),
    )
    w.commit()
    _say(args, f"wrote report and {len(metrics_present)} figure(s) to {out}")
    return EXIT_OK


def cmd_static_dm(args) -> int:
    table = read_table(_read_text(args.table))
    ct = _load_templates(args.templates)
    rows = [
        (table.source_name, variant, static_dm(table, variant, ct))
        for variant in ("MS", "LS")
    ]
    out = Path(args.out)
    w = _Outputs(args.force)
    w.stage(out, render_static_csv(rows))
    w.stage(
        Path(str(out) + ".manifest.json"),
        _manifest(
            "static-dm",
            {"table": str(args.table), "templates": str(args.templates)},
            {"static_dm": str(out)},
        ),
    )
    w.commit()
    for source, variant, value in rows:
        _say(args, f"static_dm source={source} variant={variant} value={value:.6f}")
    return EXIT_OK


_TUPLE_FIELDS = {"attacks", "variants", "sources"}


def _parse_kv_lines(text: str, where: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValidationError(f"{where} line {lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def _build_simulate_config(raw: dict[str, str]) -> SimulateConfig:
    types = {f.name: f.type for f in dataclasses.fields(SimulateConfig)}
    kwargs: dict = {}
    for key, value in raw.items():
        if key not in types:
            raise ValidationError(f"unknown config key {key!r}")
        if key in _TUPLE_FIELDS:
            kwargs[key] = tuple(v.strip() for v in value.split(",") if v.strip())
        elif types[key] == "int":
            try:
                kwargs[key] = int(value)
            except ValueError:
                raise ValidationError(f"config key {key!r}: expected integer, got {value!r}") from None
        elif types[key] == "float":
            try:
                kwargs[key] = float(value)
            except ValueError:
                raise ValidationError(f"config key {key!r}: expected number, got {value!r}") from None
        else:
            kwargs[key] = value
    return SimulateConfig(**kwargs)


def cmd_simulate(args) -> int:
    raw: dict[str, str] = {}
    if args.config:
        raw.update(_parse_kv_lines(_read_text(args.config), args.config))
    for item in args.set or []:
        if "=" not in item:
            raise ValidationError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        raw[key.strip()] = value.strip()
    # Dedicated flags win over the config file and --set.
    if args.seed is not None:
        raw["seed"] = str(args.seed)
    for flag in ("attacks", "variants", "sources"):
        value = getattr(args, flag)
        if value:
            raw[flag] = value
    cfg = _build_simulate_config(raw)

    result = run_simulation(cfg)

    out = Path(args.out)
    w = _Outputs(args.force)
    w.stage(out / "edges.tsv", write_edges(result.task.class_tree))
    w.stage(out / "classmap.csv", write_classmap(result.task.class_tree))
    outputs = {
        "edges": "edges.tsv",
        "classmap": "classmap.csv",
        "templates": "templates.embjsonl",
        "log": "log.predjsonl",
        "report": "report.csv",
        "plot_data": "plot_data.csv",
        "static_dm": "static_dm.csv",
    }
    w.stage(
        out / "templates.embjsonl",
        write_embeddings(result.model.template_embeddings(result.task.labels())),
    )
    from .lab.experiment import source_embeddings

    for source in cfg.sources:
        if source != "wup":
            w.stage(
                out / f"{source}.embjsonl",
                write_embeddings(source_embeddings(result.task, source, cfg)),
            )
            outputs[f"embeddings_{source}"] = f"{source}.embjsonl"
        w.stage(out / f"table.{source}.csv", write_table(result.tables[source]))
        outputs[f"table_{source}"] = f"table.{source}.csv"
    w.stage(out / "log.predjsonl", write_predictions(result.log))
    w.stage(out / "report.csv", render_report_csv(result.reports))
    w.stage(out / "plot_data.csv", render_plot_data_csv(plot_data_rows(result.reports)))
    w.stage(out / "static_dm.csv", render_static_csv(result.static_rows))
    w.stage(
        out / "manifest.json",
        _manifest(
            "simulate",
            {} if not args.config else {"config": str(args.config)},
            outputs,
            seeds={"seed": cfg.seed},
            config=dataclasses.asdict(cfg),
        ),
    )
    w.commit()
    from .lab.classifier import accuracy

    acc = accuracy(result.model, result.data.X_test, result.data.y_test)
    _say(args, f"simulated seed={cfg.seed}: test accuracy {acc:.4f}, {len(result.log)} records, {len(result.reports)} report row(s)")
    _say(args, f"artifacts in {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semtarget",
        description="Similarity-guided target selection and evaluation for targeted attacks.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--force", action="store_true", help="overwrite existing outputs")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("import-taxonomy", parents=[common], help="validate and normalize a taxonomy")
    p.add_argument("edges", help="child<TAB>parent edge list (TSV)")
    p.add_argument("classmap", help="class_index,label,node_id map (CSV)")
    p.add_argument("--out", required=True, help="bundle directory to write")
    p.set_defaults(func=cmd_import_taxonomy)

    p = sub.add_parser("build-targets", parents=[common], help="build an MS/LS lookup table")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--wup", help="taxonomy bundle directory (tree similarity)")
    group.add_argument("--embeddings", help="label embeddings .embjsonl (cosine similarity)")
    p.add_argument("--out", required=True, help="table CSV to write")
    p.set_defaults(func=cmd_build_targets)

    p = sub.add_parser("eval", parents=[common], help="score a prediction log")
    p.add_argument("--log", required=True, help="prediction log (.predjsonl)")
    p.add_argument("--templates", help="class templates .embjsonl (enables the dm column)")
    p.add_argument("--out", required=True, help="report CSV to write")
    p.add_argument("--plot-data", help="plot-data CSV path (default: <out>_plot_data.csv)")
    p.add_argument(
        "--keep-misclassified",
        action="store_true",
        help="keep records whose pre-attack prediction was already wrong",
    )
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", parents=[common], help="score a log and render figures")
    p.add_argument("--log", required=True, help="prediction log (.predjsonl)")
    p.add_argument("--templates", help="class templates .embjsonl (enables the dm column)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--keep-misclassified", action="store_true", help="keep pre-attack misses")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("simulate", parents=[common], help="run the synthetic pipeline end to end")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="simulation seed")
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="config override (repeatable)")
    p.add_argument("--attacks", help="comma-separated attack list")
    p.add_argument("--variants", help="comma-separated variants (ms,ls)")
    p.add_argument("--sources", help="comma-separated similarity sources")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("static-dm", parents=[common], help="score a table without running attacks")
    p.add_argument("--table", required=True, help="target table CSV")
    p.add_argument("--templates", required=True, help="class templates .embjsonl")
    p.add_argument("--out", required=True, help="CSV to write")
    p.set_defaults(func=cmd_static_dm)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TrainingGateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GATE
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
