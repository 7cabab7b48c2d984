"""End-to-end glue: train any classifier kind on records, apply a trained
model to records, and assemble evaluation reports.
"""
from __future__ import annotations

import hashlib
import json
import logging
import random
import time
from typing import Sequence

import numpy as np

from . import bayes as bayes_mod
from . import dtree as dtree_mod
from . import mlp as mlp_mod
from .encoding import (
    BAYES,
    CATEGORY,
    MLP,
    TREE,
    EncodedDataset,
    encode,
    fit_encoder,
)
from .modelstore import KIND_BAYES, KIND_MLP, KIND_TREE, TrainedModel
from .report import EvaluationReport, build_report
from .rng import derive_seed
from .schema import ERROR_POLICY, FeatureSchema, KddRecord, UnknownLabelPolicy

logger = logging.getLogger(__name__)

_MODE_FOR_KIND = {KIND_TREE: TREE, KIND_MLP: MLP, KIND_BAYES: BAYES}


class ExperimentError(ValueError):
    pass


class SchemaMismatch(ExperimentError):
    pass


def config_hash(doc: dict) -> str:
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def train_model(
    kind: str,
    records: Sequence[KddRecord],
    schema: FeatureSchema,
    seed: int,
    target: str = CATEGORY,
    policy: UnknownLabelPolicy = ERROR_POLICY,
    tree_config: dtree_mod.GrowConfig | None = None,
    mlp_config: mlp_mod.TrainConfig | None = None,
    hidden_widths: tuple[int, ...] | None = None,
    bayes_config: bayes_mod.SmoothingConfig | None = None,
    n_bins: int = 10,
    max_instances: int | None = None,
) -> tuple[TrainedModel, float]:
    """Fit the encoder and train one classifier; returns (model, seconds).

    ``max_instances`` subsamples the training records (seeded) before the
    encoder is fitted, so every fitted statistic stays train-only.
    """
    if kind not in _MODE_FOR_KIND:
        raise ExperimentError(f"unknown classifier kind {kind!r}")
    records = list(records)
    if not records:
        raise ExperimentError("no training records")

    notes: list[str] = []
    if max_instances is not None and len(records) > max_instances:
        rnd = random.Random(derive_seed(seed, "train.subsample"))
        keep = sorted(rnd.sample(range(len(records)), max_instances))
        records = [records[i] for i in keep]
        notes.append(
            f"training subsampled to {max_instances} of the curated set"
        )
        logger.info("subsampled training set to %d records", max_instances)

    started = time.perf_counter()
    spec = fit_encoder(records, _MODE_FOR_KIND[kind], schema,
                       target=target, n_bins=n_bins)
    dataset = encode(records, spec, policy)

    cfg_doc: dict = {"kind": kind, "seed": seed, "target": target,
                     "n_records": len(records)}
    if kind == KIND_TREE:
        cfg = tree_config or dtree_mod.GrowConfig()
        model = dtree_mod.build_tree(dataset, cfg)
        cfg_doc["tree"] = {
            "criterion": cfg.criterion, "min_leaf": cfg.min_leaf,
            "max_depth": cfg.max_depth, "pruning": cfg.pruning,
            "confidence": cfg.confidence,
        }
        notes.append(f"split criterion: {cfg.criterion}; pruning: {cfg.pruning}")
    elif kind == KIND_MLP:
        cfg = mlp_config or mlp_mod.TrainConfig(seed=derive_seed(seed, "mlp.init"))
        hidden = hidden_widths or (
            mlp_mod.default_hidden_width(spec.width, len(spec.class_order)),
        )
        topology = mlp_mod.MlpTopology(
            input_width=spec.width,
            hidden_widths=tuple(hidden),
            output_width=len(spec.class_order),
        )
        model = mlp_mod.train(mlp_mod.init_model(topology, cfg.seed), dataset, cfg)
        cfg_doc["mlp"] = {
            "hidden": list(hidden), "learning_rate": cfg.learning_rate,
            "momentum": cfg.momentum, "epochs": cfg.epochs,
            "init_scale": cfg.init_scale,
        }
        notes.append(
            f"mlp: hidden={list(hidden)} lr={cfg.learning_rate} "
            f"momentum={cfg.momentum} epochs={cfg.epochs}"
        )
    else:
        cfg = bayes_config or bayes_mod.SmoothingConfig()
        model = bayes_mod.fit(dataset, cfg)
        cfg_doc["bayes"] = {"alpha": cfg.alpha, "n_bins": n_bins}
        notes.append(
            f"bayes: independence structure, alpha={cfg.alpha}, {n_bins} bins"
        )
    seconds = time.perf_counter() - started

    trained = TrainedModel(
        kind=kind,
        model=model,
        encoder_spec=spec,
        schema_fingerprint=schema.fingerprint(),
        seeds={"train": seed},
        config_hash=config_hash(cfg_doc),
        notes=tuple(notes),
    )
    logger.info("trained %s on %d records in %.1f s", kind, len(records), seconds)
    return trained, seconds


def check_schema(trained: TrainedModel, schema: FeatureSchema) -> None:
    """Fail fast when a model is applied under a different feature schema."""
    if trained.schema_fingerprint != schema.fingerprint():
        raise SchemaMismatch(
            "model was trained under a different feature schema "
            f"({trained.schema_fingerprint} != {schema.fingerprint()})"
        )


def predict_proba(
    trained: TrainedModel,
    records: Sequence[KddRecord],
    schema: FeatureSchema,
    policy: UnknownLabelPolicy = ERROR_POLICY,
) -> tuple[np.ndarray, np.ndarray]:
    """(probability matrix, truth class indices) for a record sequence."""
    check_schema(trained, schema)
    dataset = encode(records, trained.encoder_spec, policy)
    if trained.kind == KIND_TREE:
        probs = dtree_mod.predict_proba(trained.model, dataset)
    elif trained.kind == KIND_MLP:
        probs = mlp_mod.predict_proba(trained.model, dataset)
    else:
        probs = bayes_mod.predict_proba(trained.model, dataset)
    return probs, dataset.y


def evaluate_model(
    trained: TrainedModel,
    records: Sequence[KddRecord],
    schema: FeatureSchema,
    model_name: str = "",
    policy: UnknownLabelPolicy = ERROR_POLICY,
    train_seconds: float | None = None,
) -> EvaluationReport:
    started = time.perf_counter()
    probs, truth = predict_proba(trained, records, schema, policy)
    eval_seconds = time.perf_counter() - started
    report = build_report(
        model_name=model_name or trained.kind,
        model_kind=trained.kind,
        probs=probs,
        truth=truth,
        class_order=trained.class_order,
        seeds=trained.seeds,
        config_hash=trained.config_hash,
        train_seconds=train_seconds,
        eval_seconds=eval_seconds,
        notes=trained.notes,
    )
    logger.info(
        "evaluated %s on %d records: accuracy=%.4f kappa=%.4f",
        report.display_name, len(records), report.accuracy, report.kappa,
    )
    return report
