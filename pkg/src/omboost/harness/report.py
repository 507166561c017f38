"""results.csv / results.md emission.

Every number is formatted once to four decimals and both files reuse that
string.  Wall time goes only into the markdown table so that the CSV is
byte-identical across reruns with the same seed.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

from .runner import RunResult, SimulationReport

CSV_COLUMNS = ["dataset", "k", "algorithm", "column", "N", "gamma", "loss", "status", "metric", "value"]


def fmt(v) -> str:
    if v is None:
        return ""
    v = float(v)
    if math.isnan(v):
        return "nan"
    return f"{v:.4f}"


def _rows(r: RunResult):
    base = [r.dataset, r.k, r.algorithm, r.column, r.N,
            "" if r.gamma is None else f"{r.gamma:g}", r.loss or "",
            "partial" if r.partial else "ok"]
    yield base + ["total_accuracy", fmt(r.total_accuracy)]
    yield base + ["final20_accuracy", fmt(r.final20_accuracy)]
    if r.tie_loss_rate is not None:
        yield base + ["tie_loss_rate", fmt(r.tie_loss_rate)]
    if r.empirical_edges is not None:
        defined = [g for g in r.empirical_edges if g is not None]
        yield base + ["mean_empirical_edge", fmt(sum(defined) / len(defined)) if defined else "nan"]


def emit_results(results: list[RunResult], outdir) -> tuple[Path, Path]:
    if not results:
        raise ValueError("no results to emit")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / "results.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in results:
            w.writerows(_rows(r))
    md_path = outdir / "results.md"
    md_path.write_text(markdown_table(results), encoding="utf-8")
    return csv_path, md_path


def markdown_table(results: list[RunResult]) -> str:
    """One row per (dataset, k); final-20% accuracy and seconds per algorithm column."""
    columns = []
    for r in results:
        if r.column not in columns:
            columns.append(r.column)
    mb = [c for c in columns if c.startswith("MB ")]
    groups: dict = {}
    for r in results:
        groups.setdefault((r.dataset, r.k), {})[r.column] = r
    header = ["dataset", "k"]
    for c in columns:
        header += [f"{c} acc", f"{c} s"]
    if len(mb) > 1:
        header.append("Best MB acc")
    lines = [header]
    for (ds, k), cells in groups.items():
        row = [ds, str(k)]
        for c in columns:
            r = cells.get(c)
            acc = fmt(r.final20_accuracy) + ("*" if r and r.partial else "") if r else ""
            row += [acc, f"{r.seconds:.2f}" if r else ""]
        if len(mb) > 1:
            vals = [cells[c].final20_accuracy for c in mb if c in cells]
            row.append(fmt(max(vals)) if vals else "")
        lines.append(row)
    widths = [max(len(str(l[j])) for l in lines) for j in range(len(header))]
    out = []
    for n, l in enumerate(lines):
        out.append("| " + " | ".join(str(v).ljust(wd) for v, wd in zip(l, widths)) + " |")
        if n == 0:
            out.append("|" + "|".join("-" * (wd + 2) for wd in widths) + "|")
    if any(r.partial for r in results):
        out.append("")
        out.append("\\* partial result; the run aborted early.")
    return "\n".join(out) + "\n"


SIM_COLUMNS = ["k", "gamma", "S", "N", "T", "mode", "seed", "metric", "value"]


def emit_simulation(rep: SimulationReport, outdir) -> tuple[Path, Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    base = [rep.k, f"{rep.gamma:g}", f"{rep.S:g}", rep.N, rep.T, rep.mode]
    rows = []
    for j, sd in enumerate(rep.seeds):
        rows.append(base + [sd, "error_rate", fmt(rep.errors[j])])
        rows.append(base + [sd, "strict_error_rate", fmt(rep.strict_errors[j])])
        if rep.noise_mistakes:
            rows.append(base + [sd, "noise_phase_mistakes", str(rep.noise_mistakes[j])])
    summary = [("mean_error_rate", fmt(rep.mean_error))]
    if rep.exact_error is not None:
        summary += [("exact_error_rate", fmt(rep.exact_error)),
                    ("pooled_standard_error", fmt(rep.pooled_se)),
                    ("within_3_se", str(int(rep.within_3se)))]
    if rep.T0 is not None:
        summary += [("T0", fmt(rep.T0)),
                    ("mean_noise_phase_mistakes", fmt(sum(rep.noise_mistakes) / len(rep.noise_mistakes)))]
    rows += [base + ["all", m, v] for m, v in summary]
    csv_path = outdir / "results.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SIM_COLUMNS)
        w.writerows(rows)
    md = ["| metric | value |", "|---|---|"] + [f"| {m} | {v} |" for m, v in summary]
    md_path = outdir / "results.md"
    md_path.write_text(
        f"k={rep.k}, gamma={rep.gamma:g}, S={rep.S:g}, N={rep.N}, T={rep.T}, mode={rep.mode}, "
        f"seeds={len(rep.seeds)}\n\n" + "\n".join(md) + "\n", encoding="utf-8")
    return csv_path, md_path
