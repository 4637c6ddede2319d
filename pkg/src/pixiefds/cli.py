"""Command-line orchestration of the full pipeline.

Every subcommand writes its artifacts atomically (temp file + rename)
plus a JSON run manifest recording the config hash, seed and package
version. Exit codes: 0 ok, 2 config error, 3 data error, 4 numerical
failure. ``FDS_DATA_DIR`` provides the default root for relative input
paths.
"""

import functools
import hashlib
import json
import os
import sys
import tempfile

import click
import numpy as np

from . import __version__, formats
from .data import (
    FilterMode,
    FilterPolicy,
    Vocabulary,
    build_vocabulary,
    load_raw_triples,
    load_triples,
    save_triples,
)
from .datasets import load_gs2011, load_men, load_relpron, load_simlex
from .errors import ConfigError, DataError, NumericalError, PixieFdsError
from .evaluation import (
    eval_relpron,
    eval_triple_pairs,
    eval_word_pairs,
    filter_dataset,
)
from .inference import (
    InferenceConfig,
    ObservationPattern,
    infer_posterior,
    node_truths,
)
from .lexicon import (
    Lexicon,
    LexiconTrainConfig,
    LexiconTrainer,
    auc_roc,
    pair_training_set,
    total_truth_audit,
    truth_coverage,
)
from .pca import PixiePca
from .world import SituationGaussian


def _data_path(path):
    root = os.environ.get("FDS_DATA_DIR")
    if root and not os.path.isabs(path) and not os.path.exists(path):
        candidate = os.path.join(root, path)
        if os.path.exists(candidate):
            return candidate
    return path


def atomic_write(path, write_fn):
    """Write via a temp file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    os.close(fd)
    try:
        write_fn(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def config_hash(config: dict):
    payload = json.dumps(config, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()[:16]


def write_manifest(artifact_path, config: dict, seed):
    manifest = {
        "artifact": os.path.basename(artifact_path),
        "config": config,
        "config_hash": config_hash(config),
        "seed": seed,
        "version": __version__,
    }
    atomic_write(
        artifact_path + ".manifest.json",
        lambda tmp: _dump_json(tmp, manifest),
    )
    return manifest


def _dump_json(path, obj):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


def read_manifest(artifact_path):
    path = artifact_path + ".manifest.json"
    if not os.path.exists(path):
        return None
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def load_config_file(path):
    """Flat key=value config file; '#' starts a comment line."""
    config = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            config[key.strip()] = value.strip()
    return config


def _fail(code, kind, message):
    click.echo(json.dumps({"error": kind, "message": message}), err=True)
    sys.exit(code)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            _fail(2, "config", str(exc))
        except NumericalError as exc:
            _fail(4, "numerical", str(exc))
        except (DataError, PixieFdsError, OSError) as exc:
            _fail(3, "data", str(exc))

    return wrapper


def _merge_config(config_file, overrides):
    config = load_config_file(config_file) if config_file else {}
    for key, value in overrides.items():
        if value is not None:
            config[key] = value
    return config


@click.group()
def main():
    """Grounded functional distributional semantics pipeline."""


@main.command()
@click.option("--triples", required=True, help="Raw triple TSV.")
@click.option("--mode", type=click.Choice(["strict", "loose"]), default="strict")
@click.option("--strict-threshold", type=int, default=100, show_default=True)
@click.option("--loose-threshold", type=int, default=10, show_default=True)
@click.option("--out", required=True, help="Output directory.")
@handle_errors
def prepare(triples, mode, strict_threshold, loose_threshold, out):
    """Build the filtered vocabulary and triple set."""
    raw = load_raw_triples(_data_path(triples))
    policy = FilterPolicy(FilterMode(mode.upper()), strict_threshold, loose_threshold)
    vocab = build_vocabulary(raw, policy)
    kept = [
        t
        for t in raw
        if t.arg1_lemma in vocab and t.event_lemma in vocab and t.arg2_lemma in vocab
    ]
    cfg = {
        "command": "prepare",
        "triples": triples,
        "mode": mode,
        "strict_threshold": strict_threshold,
        "loose_threshold": loose_threshold,
    }
    vocab_path = os.path.join(out, "vocab.tsv")
    triples_path = os.path.join(out, "triples.tsv")
    atomic_write(vocab_path, vocab.save)
    atomic_write(triples_path, lambda tmp: save_triples(tmp, kept))
    write_manifest(vocab_path, cfg, seed=None)
    write_manifest(triples_path, cfg, seed=None)
    click.echo(
        json.dumps(
            {"vocabulary_size": len(vocab), "triples_kept": len(kept),
             "triples_total": len(raw)}
        )
    )


@main.command("fit-pca")
@click.option("--features", required=True, help="Raw fdsf v1 feature file.")
@click.option("--output-dim", type=int, default=100, show_default=True)
@click.option("--scale", type=float, default=1.15, show_default=True)
@click.option("--out", required=True)
@handle_errors
def fit_pca(features, output_dim, scale, out):
    """Fit whitening PCA on a raw feature file (streaming)."""
    model = PixiePca(output_dim=output_dim, scale=scale)
    model.fit_file(_data_path(features))
    cfg = {
        "command": "fit-pca",
        "features": features,
        "output_dim": output_dim,
        "scale": scale,
    }
    path = os.path.join(out, "pca.fdsp")
    atomic_write(path, model.save)
    write_manifest(path, cfg, seed=None)
    click.echo(
        json.dumps(
            {
                "input_dim": model.input_dim_,
                "output_dim": output_dim,
                "explained_variance_ratio": model.explained_variance_ratio_,
            }
        )
    )


def _load_pixie_triples(triples_path, vocab_path, features_path, pca_path):
    vocab = Vocabulary.load(_data_path(vocab_path))
    triples, rejected = load_triples(_data_path(triples_path), vocab)
    if not triples:
        raise DataError("no usable triples after vocabulary resolution")
    feats = formats.read_features(_data_path(features_path))
    pca = PixiePca.load(_data_path(pca_path))
    pixies = pca.transform(feats.rows)
    return vocab, triples, pixies, rejected


@main.command("train-world")
@click.option("--triples", required=True)
@click.option("--vocab", required=True)
@click.option("--features", required=True)
@click.option("--pca", "pca_path", required=True)
@click.option("--ci/--no-ci", default=False, help="Conditional-independence constraint.")
@click.option("--out", required=True)
@handle_errors
def train_world(triples, vocab, features, pca_path, ci, out):
    """Fit the joint Gaussian over situations."""
    _, trips, pixies, _ = _load_pixie_triples(triples, vocab, features, pca_path)
    S = np.hstack(
        [
            pixies[[t.arg1_feat for t in trips]],
            pixies[[t.event_feat for t in trips]],
            pixies[[t.arg2_feat for t in trips]],
        ]
    )
    model = SituationGaussian(ci_constrained=ci).fit(S)
    cfg = {
        "command": "train-world",
        "triples": triples,
        "vocab": vocab,
        "features": features,
        "pca": pca_path,
        "ci": ci,
    }
    path = os.path.join(out, "world.fdsw")
    atomic_write(path, model.save)
    write_manifest(path, cfg, seed=None)
    click.echo(
        json.dumps(
            {
                "n": model.n_,
                "samples": S.shape[0],
                "log_det_sigma": float(np.linalg.slogdet(model.sigma_)[1]),
            }
        )
    )


@main.command("train-lexicon")
@click.option("--triples", required=True)
@click.option("--vocab", required=True)
@click.option("--features", required=True)
@click.option("--pca", "pca_path", required=True)
@click.option("--config", "config_file", default=None, help="key=value config file.")
@click.option("--epochs", type=int, default=None)
@click.option("--lr", type=float, default=None)
@click.option("--alpha", type=float, default=None)
@click.option("--l2-weight", type=float, default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", required=True)
@handle_errors
def train_lexicon(
    triples, vocab, features, pca_path, config_file, epochs, lr, alpha,
    l2_weight, batch_size, seed, out,
):
    """Train the per-predicate semantic functions."""
    merged = _merge_config(
        config_file,
        {
            "epochs": epochs,
            "lr": lr,
            "alpha": alpha,
            "l2_weight": l2_weight,
            "batch_size": batch_size,
            "seed": seed,
        },
    )
    train_cfg = LexiconTrainConfig(
        l2_weight=float(merged.get("l2_weight", 5e-8)),
        epochs=int(merged.get("epochs", 40)),
        lr=float(merged.get("lr", 0.01)),
        lr_decay=float(merged.get("lr_decay", 0.4)),
        lr_step_epochs=int(merged.get("lr_step_epochs", 5)),
        alpha=float(merged.get("alpha", 0.0)),
        batch_size=int(merged.get("batch_size", 1024)),
        seed=int(merged.get("seed", 0)),
    )
    voc, trips, pixies, _ = _load_pixie_triples(triples, vocab, features, pca_path)
    X, y = pair_training_set(trips, pixies)
    trainer = LexiconTrainer(voc, train_cfg).fit(X, y)
    lex = trainer.lexicon_
    cfg = {
        "command": "train-lexicon",
        "triples": triples,
        "vocab": vocab,
        "features": features,
        "pca": pca_path,
        **{k: getattr(train_cfg, k) for k in LexiconTrainConfig.__dataclass_fields__},
    }
    path = os.path.join(out, "lexicon.fdsl")
    atomic_write(path, lex.save)
    write_manifest(path, cfg, seed=train_cfg.seed)
    log_path = os.path.join(out, "lexicon_training_log.tsv")
    atomic_write(
        log_path,
        lambda tmp: _write_lines(
            tmp, ["epoch\tloss\tlr"] + trainer.training_log_.to_tsv_lines()
        ),
    )
    click.echo(
        json.dumps(
            {
                "vocabulary_size": len(voc),
                "pairs": int(X.shape[0]),
                "final_loss": trainer.training_log_.losses[-1],
                "truth_coverage_0.1": truth_coverage(lex, X, y),
            }
        )
    )


def _write_lines(path, lines):
    with open(path, "w", encoding="utf-8") as f:
        for line in lines:
            f.write(line + "\n")


@main.command()
@click.option("--triples", required=True)
@click.option("--vocab", required=True)
@click.option("--features", required=True)
@click.option("--pca", "pca_path", required=True)
@click.option("--world", "world_path", required=True)
@click.option("--lexicon", "lexicon_path", required=True)
@click.option("--bins", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True)
@handle_errors
def diagnose(triples, vocab, features, pca_path, world_path, lexicon_path,
             bins, seed, out):
    """World-model fit diagnostics and per-predicate AUC-ROC."""
    voc, trips, pixies, _ = _load_pixie_triples(triples, vocab, features, pca_path)
    world = SituationGaussian.load(_data_path(world_path))
    lex = Lexicon.load(_data_path(lexicon_path))
    S = np.hstack(
        [
            pixies[[t.arg1_feat for t in trips]],
            pixies[[t.event_feat for t in trips]],
            pixies[[t.arg2_feat for t in trips]],
        ]
    )
    report = world.fit_diagnostics(S, bins=bins)
    fit_path = os.path.join(out, "world_fit.tsv")
    atomic_write(
        fit_path,
        lambda tmp: _write_lines(
            tmp, ["dim\tmissing_area\tskewness\tkurtosis"] + report.to_tsv_lines()
        ),
    )

    X, y = pair_training_set(trips, pixies)
    auc_lines = ["predicate\tpos\tn_pos\tauc"]
    aucs = {"NOUN": [], "EVENT": []}
    for pred in voc:
        pos_rows = X[y == pred.id]
        neg_rows = X[y != pred.id]
        if pos_rows.shape[0] < 2 or neg_rows.shape[0] < pos_rows.shape[0]:
            continue
        a = auc_roc(lex, pred.id, pos_rows, neg_rows, seed=seed)
        aucs[pred.pos.value].append(a)
        auc_lines.append(f"{pred.lemma}\t{pred.pos.value}\t{pos_rows.shape[0]}\t{a:.4f}")
    auc_path = os.path.join(out, "lexicon_auc.tsv")
    atomic_write(auc_path, lambda tmp: _write_lines(tmp, auc_lines))

    cfg = {"command": "diagnose", "world": world_path, "lexicon": lexicon_path}
    write_manifest(fit_path, cfg, seed=seed)
    write_manifest(auc_path, cfg, seed=seed)
    click.echo(
        json.dumps(
            {
                "mean_missing_area": report.mean_missing,
                "var_missing_area": report.var_missing,
                "mean_auc_objects": float(np.mean(aucs["NOUN"])) if aucs["NOUN"] else None,
                "mean_auc_events": float(np.mean(aucs["EVENT"])) if aucs["EVENT"] else None,
            }
        )
    )


def _check_hashes(paths, force):
    hashes = {}
    for p in paths:
        manifest = read_manifest(_data_path(p))
        if manifest is not None:
            hashes[p] = manifest["config_hash"]
    # Artifacts produced by the same experiment share the data inputs in
    # their configs; refuse mixed provenance unless forced.
    inputs = set()
    for p in paths:
        manifest = read_manifest(_data_path(p))
        if manifest is None:
            continue
        cfg = manifest.get("config", {})
        inputs.add(
            (cfg.get("triples"), cfg.get("vocab"), cfg.get("features"), cfg.get("pca"))
        )
    inputs.discard((None, None, None, None))
    if len(inputs) > 1 and not force:
        raise ConfigError(
            f"artifact manifests disagree on their data inputs: {sorted(inputs)}; "
            "rerun the pipeline or pass --force"
        )


@main.command()
@click.option("--world", "world_path", required=True)
@click.option("--lexicon", "lexicon_path", required=True)
@click.option("--x", "x_lemma", default=None)
@click.option("--y", "y_lemma", default=None)
@click.option("--z", "z_lemma", default=None)
@click.option("--beta", type=float, default=0.1, show_default=True)
@click.option("--epochs", type=int, default=800, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--topk", type=int, default=0, help="Report top-k truths per node.")
@click.option("--force", is_flag=True)
@handle_errors
def infer(world_path, lexicon_path, x_lemma, y_lemma, z_lemma, beta, epochs,
          seed, topk, force):
    """Infer a latent-situation posterior from observed predicates."""
    _check_hashes([world_path, lexicon_path], force)
    world = SituationGaussian.load(_data_path(world_path))
    lex = Lexicon.load(_data_path(lexicon_path))
    observed = {}
    for node, lemma in (("X", x_lemma), ("Y", y_lemma), ("Z", z_lemma)):
        if lemma is not None:
            observed[node] = lex.vocab.id_of(lemma)
    if not observed:
        raise ConfigError("at least one of --x/--y/--z must be given")
    config = InferenceConfig(beta=beta, epochs=epochs, seed=seed)
    q, trace = infer_posterior(ObservationPattern(observed), lex, world, config)

    result = {
        "observed": {n: lex.vocab.lemma_of(r) for n, r in observed.items()},
        "beta": beta,
        "seed": seed,
        "final_elbo": trace[-1],
        "posterior": {},
    }
    for node in ("X", "Y", "Z"):
        mean, var = q.node_params(node, world.n_)
        entry = {"mean": mean.tolist(), "var": var.tolist()}
        if topk > 0:
            truths = node_truths(q, node, lex)
            top = np.argsort(-truths)[:topk]
            entry["top_truths"] = [
                {"lemma": lex.vocab.lemma_of(int(i)), "truth": float(truths[i])}
                for i in top
            ]
        result["posterior"][node] = entry
    click.echo(json.dumps(result))


_DATASET_LOADERS = {
    "men": (load_men, "word-pairs"),
    "simlex": (load_simlex, "word-pairs"),
    "gs2011": (load_gs2011, "triple-pairs"),
    "relpron": (load_relpron, "relpron"),
}


@main.command()
@click.option("--dataset", type=click.Choice(sorted(_DATASET_LOADERS)), required=True)
@click.option("--data", "data_path", required=True, help="Dataset file.")
@click.option("--world", "world_path", required=True)
@click.option("--lexicon", "lexicon_path", required=True)
@click.option("--filter-mode", type=click.Choice(["strict", "loose"]), default="loose",
              show_default=True)
@click.option("--beta", type=float, default=0.1, show_default=True)
@click.option("--epochs", type=int, default=800, show_default=True)
@click.option("--seeds", default="0,1,2,3,4", show_default=True,
              help="Comma-separated seed list; the metric is averaged.")
@click.option("--force", is_flag=True)
@click.option("--out", default=None, help="Also write the result JSON here.")
@handle_errors
def evaluate(dataset, data_path, world_path, lexicon_path, filter_mode, beta,
             epochs, seeds, force, out):
    """Evaluate on a similarity benchmark; reports the mean over seeds."""
    _check_hashes([world_path, lexicon_path], force)
    world = SituationGaussian.load(_data_path(world_path))
    lex = Lexicon.load(_data_path(lexicon_path))
    loader, kind = _DATASET_LOADERS[dataset]
    items = loader(_data_path(data_path))
    filtered, kept, total = filter_dataset(items, lex.vocab, filter_mode)
    if not filtered:
        raise DataError("no dataset items survive vocabulary filtering")

    seed_list = [int(s) for s in seeds.split(",") if s.strip()]
    if not seed_list:
        raise ConfigError("at least one seed is required")
    values = []
    for seed in seed_list:
        config = InferenceConfig(beta=beta, epochs=epochs, seed=seed)
        if kind == "word-pairs":
            res = eval_word_pairs(filtered, lex, world, config)
        elif kind == "triple-pairs":
            res = eval_triple_pairs(filtered, lex, world, config)
        else:
            res = eval_relpron(filtered, lex, world, config)
        values.append(res.value)

    result = {
        "dataset": dataset,
        "filter_mode": filter_mode,
        "beta": beta,
        "metric": res.metric,
        "value": float(np.mean(values)),
        "values_per_seed": values,
        "n_items": kept,
        "n_total": total,
        "seed": seed_list,
    }
    if out:
        path = os.path.join(out, f"eval_{dataset}.json")
        atomic_write(path, lambda tmp: _dump_json(tmp, result))
        write_manifest(path, {k: v for k, v in result.items() if k != "values_per_seed"},
                       seed=seed_list)
    click.echo(json.dumps(result))


@main.command("audit-truth")
@click.option("--lexicon", "lexicon_path", required=True)
@click.option("--features", required=True)
@click.option("--pca", "pca_path", required=True)
@click.option("--sample-size", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@handle_errors
def audit_truth(lexicon_path, features, pca_path, sample_size, seed):
    """Mean total truth of all predicates over sampled pixies."""
    lex = Lexicon.load(_data_path(lexicon_path))
    feats = formats.read_features(_data_path(features))
    pca = PixiePca.load(_data_path(pca_path))
    rng = np.random.default_rng(seed)
    take = min(sample_size, feats.count)
    rows = rng.choice(feats.count, size=take, replace=False)
    pixies = pca.transform(feats.rows[rows])
    click.echo(
        json.dumps(
            {"mean_total_truth": total_truth_audit(lex, pixies), "sample_size": take,
             "seed": seed}
        )
    )


if __name__ == "__main__":
    main()
