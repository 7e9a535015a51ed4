"""The cross-generator train/test matrix experiment.

For every AI source, a detector is tuned by stratified cross-validation on
that source's training essays (plus the shared human training pool), refit,
and evaluated against every source's balanced test set (its AI test essays
plus the universal human test set). A final pooled row trains one detector
on the union of all sources' training sets.

Output: a train x test grid of AUC values, written as CSV with a metadata
sidecar and an optional SVG heatmap with per-cell labels.
"""

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .corpus import HUMAN_SOURCE
from .errors import InvalidInputError, ToolkitError
from .evaluation import auc
from .features import features_for
from .fileio import make_meta, write_csv, write_json
from .gbm import DEFAULT_GRID, _fit, raw_scores, stratified_folds, to_matrix
from .reflm import NGramModel, score_essay
from .rng import derive_seed

POOLED_ROW = "all"


@dataclass(frozen=True)
class AucMatrix:
    train_sources: tuple  # AI sources plus the pooled row label
    test_sources: tuple
    cells: tuple  # cells[i][j] = AUC of detector trained on i, tested on j
    metadata: dict


def _scored_for(backend, essay):
    if isinstance(backend, NGramModel):
        return score_essay(backend, essay)
    try:
        return backend[essay.id]
    except KeyError:
        raise InvalidInputError(f"no scored tokens for essay \"{essay.id}\" in backend") from None


def backend_descriptor(backend):
    if isinstance(backend, NGramModel):
        return backend.descriptor
    return f"scored-tokens({len(backend)} essays)"


def _train_row(args):
    """Tune by CV and refit one matrix row; top-level so process pools can pickle it."""
    X, y, grid, folds, row_seed = args
    assign = stratified_folds(y, folds, row_seed)
    report = []
    for hp in grid:
        fold_aucs = []
        for f in range(folds):
            tr = assign != f
            model = _fit(X[tr], y[tr], hp, row_seed)
            fold_aucs.append(auc(raw_scores(model, X[~tr]), y[~tr]))
        report.append(
            {"hyperparams": hp.to_dict(), "fold_aucs": fold_aucs, "mean_auc": float(np.mean(fold_aucs))}
        )
    best_i = min(
        range(len(grid)),
        key=lambda i: (-report[i]["mean_auc"], grid[i].n_rounds, grid[i].max_depth, i),
    )
    model = _fit(X, y, grid[best_i], row_seed)
    model.cv_report = report
    return model


def cross_matrix(essays, plan, backend, grid=DEFAULT_GRID, folds=4, seed=0, jobs=1):
    """Run the full matrix experiment. Deterministic for a fixed seed and
    independent of the worker count: each row draws from its own derived seed
    and rows are assembled in fixed order."""
    sources = sorted(plan.per_source)
    if len(sources) < 2:
        raise InvalidInputError(f"matrix needs >= 2 AI sources, got {len(sources)}")
    by_id = {e.id: e for e in essays}

    feature_cache = {}

    def fv(essay_id):
        got = feature_cache.get(essay_id)
        if got is None:
            essay = by_id.get(essay_id)
            if essay is None:
                raise InvalidInputError(f"split references unknown essay id \"{essay_id}\"")
            label = 0 if essay.source == HUMAN_SOURCE else 1
            got = features_for(_scored_for(backend, essay), label=label)
            feature_cache[essay_id] = got
        return got

    train_ids = {}
    for src in sources:
        s = plan.per_source[src]
        train_ids[src] = list(s.train_ai) + list(s.train_human)
    pooled = []
    seen = set()
    for src in sources:
        for eid in train_ids[src]:
            if eid not in seen:
                seen.add(eid)
                pooled.append(eid)
    train_ids[POOLED_ROW] = pooled
    row_names = sources + [POOLED_ROW]

    tasks = []
    for name in row_names:
        vectors = [fv(eid) for eid in train_ids[name]]
        X, y, _ = to_matrix(vectors)
        tasks.append((X, y, tuple(grid), folds, derive_seed(seed, f"matrix-row:{name}")))

    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            models = list(pool.map(_train_row, tasks))
    else:
        models = []
        for name, task in zip(row_names, tasks):
            try:
                models.append(_train_row(task))
            except ToolkitError as exc:
                raise type(exc)(f"matrix row (train={name}): {exc}") from exc

    test_vectors = {}
    for src in sources:
        ids = list(plan.per_source[src].test_ai) + list(plan.universal_human_test)
        vecs = [fv(eid) for eid in ids]
        test_vectors[src] = to_matrix(vecs)

    cells = []
    for name, model in zip(row_names, models):
        row = []
        for src in sources:
            X, y, _ = test_vectors[src]
            try:
                row.append(auc(raw_scores(model, X), y))
            except ToolkitError as exc:
                raise type(exc)(f"matrix cell (train={name}, test={src}): {exc}") from exc
        cells.append(tuple(row))

    counts = plan.counts
    metadata = make_meta(
        seed=seed,
        params={
            "folds": folds,
            "grid": [hp.to_dict() for hp in grid],
            "lm": backend_descriptor(backend),
            "counts": {
                "n_human_test": counts.n_human_test,
                "n_ai_test": counts.n_ai_test,
                "n_ai_train": counts.n_ai_train,
                "n_human_train": counts.n_human_train,
            },
        },
    )
    return AucMatrix(
        train_sources=tuple(row_names),
        test_sources=tuple(sources),
        cells=tuple(cells),
        metadata=metadata,
    )


def save_matrix_csv(path, m):
    header = ["train\\test", *m.test_sources]
    rows = [[name, *row] for name, row in zip(m.train_sources, m.cells)]
    write_csv(path, header, rows, meta=m.metadata)


def save_matrix_meta(path, m):
    write_json(path, {"meta": m.metadata, "train_sources": list(m.train_sources), "test_sources": list(m.test_sources)})


# ---------------------------------------------------------------------------
# SVG heatmap (no plotting dependency; deterministic bytes)

_RAMP = ((68, 1, 84), (59, 82, 139), (33, 145, 140), (94, 201, 98), (253, 231, 37))


def _ramp_color(v):
    v = min(max(float(v), 0.0), 1.0)
    pos = v * (len(_RAMP) - 1)
    i = min(int(pos), len(_RAMP) - 2)
    t = pos - i
    c0, c1 = _RAMP[i], _RAMP[i + 1]
    return tuple(round(a + t * (b - a)) for a, b in zip(c0, c1))


def write_heatmap_svg(path, m, title="Detection AUC by train/test source"):
    cell_w, cell_h = 86, 46
    left, top = 150, 70
    width = left + cell_w * len(m.test_sources) + 20
    height = top + cell_h * len(m.train_sources) + 30
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="Helvetica, Arial, sans-serif">',
        f"<metadata>{json.dumps(m.metadata, sort_keys=True)}</metadata>",
        f'<text x="{left}" y="24" font-size="15" font-weight="bold">{title}</text>',
        f'<text x="{left}" y="44" font-size="11" fill="#555">rows: training source, columns: test source</text>',
    ]
    for j, name in enumerate(m.test_sources):
        x = left + j * cell_w + cell_w / 2
        out.append(f'<text x="{x}" y="{top - 8}" font-size="11" text-anchor="middle">{name}</text>')
    for i, name in enumerate(m.train_sources):
        y = top + i * cell_h + cell_h / 2 + 4
        out.append(f'<text x="{left - 8}" y="{y}" font-size="11" text-anchor="end">{name}</text>')
        for j, v in enumerate(m.cells[i]):
            cx = left + j * cell_w
            cy = top + i * cell_h
            r, g, b = _ramp_color(v)
            text_fill = "#000" if v >= 0.6 else "#fff"
            out.append(
                f'<rect x="{cx}" y="{cy}" width="{cell_w - 2}" height="{cell_h - 2}" '
                f'fill="rgb({r},{g},{b})"/>'
            )
            out.append(
                f'<text x="{cx + (cell_w - 2) / 2}" y="{cy + cell_h / 2 + 4}" font-size="12" '
                f'text-anchor="middle" fill="{text_fill}">{v:.3f}</text>'
            )
    out.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(out) + "\n")
