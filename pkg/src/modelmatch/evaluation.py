"""Benchmark evaluation: group tasks into requirements, identify, score.

Multi-example requirements are formed by grouping single-example tasks by
(true model, ground-truth prompt) and chunking each group's seeds into
disjoint runs of ``n_examples`` (remainders are dropped). The true model's
rank for each requirement feeds top-k accuracy and average rank; when a
fixture can re-render images, the identified model regenerates each
requirement's ground-truth prompt and the Frechet distance between query
and regenerated embeddings scores generation quality.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .encoders import stable_seed
from .errors import InsufficientExamples, InvalidInput
from .identifier import ModelIdentifier
from .kernels import DEFAULT_GAMMA
from .matching import ALL_METHODS
from .metrics import EvalReport, frechet_distance
from .types import COMPUTE_DTYPE

DEFAULT_KS = (1, 2, 3, 4, 5)


@dataclass(frozen=True)
class RequirementGroup:
    true_model_id: str
    prompt: str
    start: int
    end: int  # exclusive row range into the stacked example matrices


def group_tasks(tasks, n_examples: int):
    """Stack task examples and produce contiguous requirement groups.

    Returns (image matrix, caption matrix, groups). Tasks must carry one
    pre-encoded example each; grouping preserves task order within each
    (true model, prompt) group.
    """
    if n_examples < 1:
        raise InvalidInput("n_examples must be >= 1")
    by_key: dict[tuple[str, str], list] = {}
    order: list[tuple[str, str]] = []
    for task in tasks:
        if task.image_embeddings is None or task.image_embeddings.shape[0] != 1:
            raise InvalidInput("evaluation tasks must carry exactly one pre-encoded example")
        key = (task.true_model_id, task.ground_truth_prompt)
        if key not in by_key:
            by_key[key] = []
            order.append(key)
        by_key[key].append(task)

    min_group = min(len(v) for v in by_key.values())
    if n_examples > min_group:
        raise InsufficientExamples(
            f"n_examples={n_examples} exceeds smallest group size {min_group}"
        )

    image_rows, caption_rows, groups = [], [], []
    cursor = 0
    for key in order:
        members = by_key[key]
        for start in range(0, len(members) - n_examples + 1, n_examples):
            chunk = members[start : start + n_examples]
            for t in chunk:
                image_rows.append(t.image_embeddings[0])
                caption_rows.append(t.caption_embeddings[0])
            groups.append(
                RequirementGroup(
                    true_model_id=key[0], prompt=key[1], start=cursor, end=cursor + n_examples
                )
            )
            cursor += n_examples
    images = np.asarray(image_rows, dtype=COMPUTE_DTYPE)
    captions = np.asarray(caption_rows, dtype=COMPUTE_DTYPE)
    return images, captions, groups


def run_evaluation(
    hub,
    tasks,
    methods,
    n_examples_list,
    *,
    gamma: float = DEFAULT_GAMMA,
    reduced_set_size: int = 1,
    ks=DEFAULT_KS,
    fid_generator=None,
) -> dict[tuple[str, int], EvalReport]:
    """Evaluate each (method, n_examples) cell over the task list.

    ``fid_generator(model_id, prompt, salt) -> embedding`` enables the
    generation-quality column; omit it to skip FID.
    """
    methods = list(methods)
    for m in methods:
        if m not in ALL_METHODS:
            raise InvalidInput(f"unknown method {m!r}; choose from {ALL_METHODS}")
    records = sorted(hub.records() if hasattr(hub, "records") else hub, key=lambda r: r.model_id)
    ident = ModelIdentifier(gamma=gamma, reduced_set_size=reduced_set_size).fit(records)
    id_to_index = {r.model_id: i for i, r in enumerate(records)}

    reports: dict[tuple[str, int], EvalReport] = {}
    for n in n_examples_list:
        images, captions, groups = group_tasks(tasks, n)
        bounds = [(g.start, g.end) for g in groups]
        true_idx = np.asarray([id_to_index[g.true_model_id] for g in groups])
        cols = np.arange(len(groups))
        for method in methods:
            dist = ident.batch_group_distances(images, captions, bounds, method)
            d_true = dist[true_idx, cols]
            ranks = 1 + np.sum(dist < d_true[None, :], axis=0)
            top_idx = np.argmin(dist, axis=0)  # ties: first index = lowest model_id
            fid = None
            if fid_generator is not None:
                gen_rows = [
                    fid_generator(
                        records[top_idx[gi]].model_id,
                        g.prompt,
                        stable_seed("regen", records[top_idx[gi]].model_id, g.prompt, row),
                    )
                    for gi, g in enumerate(groups)
                    for row in range(g.start, g.end)
                ]
                fid = frechet_distance(images, np.asarray(gen_rows, dtype=COMPUTE_DTYPE))
            reports[(method, n)] = EvalReport(
                method=method,
                n_examples=n,
                task_count=len(groups),
                topk_accuracy={int(k): float(np.mean(ranks <= k)) for k in ks},
                average_rank=float(np.mean(ranks)),
                fid=fid,
            )
    return reports


def save_reports(reports: dict[tuple[str, int], EvalReport], out_dir) -> list[Path]:
    """One JSON per cell plus a combined CSV table."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for (method, n), report in sorted(reports.items()):
        path = out / f"report_{method}_n{n}.json"
        path.write_text(json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n")
        written.append(path)
    combined = out / "combined.csv"
    ks = sorted({k for r in reports.values() for k in r.topk_accuracy})
    with combined.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["method", "n_examples", "task_count"]
            + [f"top{k}_accuracy" for k in ks]
            + ["average_rank", "fid"]
        )
        for (method, n), report in sorted(reports.items()):
            writer.writerow(
                [method, n, report.task_count]
                + [f"{report.topk_accuracy.get(k, float('nan')):.6f}" for k in ks]
                + [
                    f"{report.average_rank:.6f}",
                    "" if report.fid is None else f"{report.fid:.6f}",
                ]
            )
    written.append(combined)
    return written


def load_reports(path) -> dict[tuple[str, int], EvalReport]:
    """Read back the per-cell JSON reports from a directory."""
    reports = {}
    for file in sorted(Path(path).glob("report_*_n*.json")):
        data = json.loads(file.read_text())
        reports[(data["method"], int(data["n_examples"]))] = EvalReport(
            method=data["method"],
            n_examples=int(data["n_examples"]),
            task_count=int(data["task_count"]),
            topk_accuracy={int(k): float(v) for k, v in data["topk_accuracy"].items()},
            average_rank=float(data["average_rank"]),
            fid=data.get("fid"),
        )
    return reports


def format_report_table(reports: dict[tuple[str, int], EvalReport]) -> str:
    """Human-readable summary, one row per (method, n_examples)."""
    if not reports:
        return "(no reports)"
    ks = sorted({k for r in reports.values() for k in r.topk_accuracy})
    header = ["method", "n", "tasks"] + [f"top-{k}" for k in ks] + ["avg rank", "fid"]
    rows = [header]
    for (method, n), r in sorted(reports.items()):
        rows.append(
            [method, str(n), str(r.task_count)]
            + [f"{100 * r.topk_accuracy.get(k, float('nan')):.1f}%" for k in ks]
            + [f"{r.average_rank:.3f}", "-" if r.fid is None else f"{r.fid:.4f}"]
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    return "\n".join(lines)
