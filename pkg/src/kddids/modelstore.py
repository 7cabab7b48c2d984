"""Versioned on-disk model envelope shared by all three classifier kinds.

Layout: magic ``KDDM``, u16 format version, length-prefixed kind tag,
sha256 of the payload, then the zlib-compressed JSON payload (class order,
encoder spec, seeds, and the kind-specific parameters).
"""
from __future__ import annotations

import hashlib
import json
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import bayes as bayes_mod
from . import dtree as dtree_mod
from . import mlp as mlp_mod
from .encoding import EncoderSpec

MAGIC = b"KDDM"
FORMAT_VERSION = 1

KIND_TREE = "j48"
KIND_MLP = "mlp"
KIND_BAYES = "bayes"
KINDS = (KIND_TREE, KIND_MLP, KIND_BAYES)


class ModelStoreError(ValueError):
    pass


class IntegrityError(ModelStoreError):
    pass


class VersionError(ModelStoreError):
    pass


class KindMismatch(ModelStoreError):
    pass


@dataclass
class TrainedModel:
    """A classifier plus everything needed to apply it to new records."""

    kind: str
    model: object
    encoder_spec: EncoderSpec
    schema_fingerprint: str
    seeds: dict = field(default_factory=dict)
    config_hash: str = ""
    notes: tuple[str, ...] = ()

    @property
    def class_order(self) -> tuple[str, ...]:
        return self.encoder_spec.class_order


def _tree_node_to_doc(node) -> dict:
    if isinstance(node, dtree_mod.Leaf):
        return {"leaf": node.counts.tolist()}
    split = node.split
    if isinstance(split, dtree_mod.ContinuousSplit):
        split_doc = {"kind": "continuous", "feature": split.feature,
                     "threshold": split.threshold}
    else:
        split_doc = {"kind": "nominal", "feature": split.feature,
                     "values": list(split.values)}
    return {
        "split": split_doc,
        "fallback": node.fallback,
        "counts": node.counts.tolist(),
        "children": [_tree_node_to_doc(c) for c in node.children],
    }


def _tree_node_from_doc(doc: dict):
    if "leaf" in doc:
        return dtree_mod.Leaf(np.asarray(doc["leaf"], dtype=np.float64))
    sd = doc["split"]
    if sd["kind"] == "continuous":
        split = dtree_mod.ContinuousSplit(int(sd["feature"]), float(sd["threshold"]))
    else:
        split = dtree_mod.NominalSplit(int(sd["feature"]), tuple(sd["values"]))
    return dtree_mod.Internal(
        split=split,
        children=[_tree_node_from_doc(c) for c in doc["children"]],
        fallback=int(doc["fallback"]),
        counts=np.asarray(doc["counts"], dtype=np.float64),
    )


def _tree_payload(model: dtree_mod.DecisionTreeModel) -> dict:
    cfg = model.config
    return {
        "root": _tree_node_to_doc(model.root),
        "n_features": model.n_features,
        "config": {
            "criterion": cfg.criterion,
            "min_leaf": cfg.min_leaf,
            "max_depth": cfg.max_depth,
            "pruning": cfg.pruning,
            "confidence": cfg.confidence,
        },
    }


def _tree_from_payload(doc: dict, spec: EncoderSpec) -> dtree_mod.DecisionTreeModel:
    cfg = doc["config"]
    return dtree_mod.DecisionTreeModel(
        root=_tree_node_from_doc(doc["root"]),
        class_order=spec.class_order,
        n_features=int(doc["n_features"]),
        encoder_fingerprint=spec.fingerprint(),
        config=dtree_mod.GrowConfig(
            criterion=cfg["criterion"],
            min_leaf=int(cfg["min_leaf"]),
            max_depth=cfg["max_depth"],
            pruning=cfg["pruning"],
            confidence=float(cfg["confidence"]),
        ),
    )


def _mlp_payload(model: mlp_mod.MlpModel) -> dict:
    topo = model.topology
    return {
        "input_width": topo.input_width,
        "hidden_widths": list(topo.hidden_widths),
        "output_width": topo.output_width,
        "transfers": [t.value for t in topo.transfers],
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
        "seed": model.seed,
        "epochs_run": model.epochs_run,
        "final_error": model.final_error,
    }


def _mlp_from_payload(doc: dict, spec: EncoderSpec) -> mlp_mod.MlpModel:
    topo = mlp_mod.MlpTopology(
        input_width=int(doc["input_width"]),
        hidden_widths=tuple(int(w) for w in doc["hidden_widths"]),
        output_width=int(doc["output_width"]),
        transfers=tuple(mlp_mod.TransferKind(t) for t in doc["transfers"]),
    )
    return mlp_mod.MlpModel(
        topology=topo,
        weights=[np.asarray(w, dtype=np.float64) for w in doc["weights"]],
        biases=[np.asarray(b, dtype=np.float64) for b in doc["biases"]],
        seed=int(doc["seed"]),
        epochs_run=int(doc["epochs_run"]),
        final_error=float(doc["final_error"]),
        class_order=spec.class_order,
        encoder_fingerprint=spec.fingerprint(),
    )


def _bayes_payload(model: bayes_mod.BayesModel) -> dict:
    return {
        "log_priors": model.log_priors.tolist(),
        "cond_log": [t.tolist() for t in model.cond_log],
        "n_categories": list(model.n_categories),
        "alpha": model.alpha,
    }


def _bayes_from_payload(doc: dict, spec: EncoderSpec) -> bayes_mod.BayesModel:
    return bayes_mod.BayesModel(
        log_priors=np.asarray(doc["log_priors"], dtype=np.float64),
        cond_log=[np.asarray(t, dtype=np.float64) for t in doc["cond_log"]],
        n_categories=tuple(int(v) for v in doc["n_categories"]),
        alpha=float(doc["alpha"]),
        class_order=spec.class_order,
        encoder_fingerprint=spec.fingerprint(),
    )


_TO_PAYLOAD = {KIND_TREE: _tree_payload, KIND_MLP: _mlp_payload,
               KIND_BAYES: _bayes_payload}
_FROM_PAYLOAD = {KIND_TREE: _tree_from_payload, KIND_MLP: _mlp_from_payload,
                 KIND_BAYES: _bayes_from_payload}


def save_model(trained: TrainedModel, path) -> None:
    """Write the envelope; loading it back reproduces predictions exactly."""
    if trained.kind not in KINDS:
        raise ModelStoreError(f"unknown model kind {trained.kind!r}")
    doc = {
        "kind": trained.kind,
        "encoder_spec": trained.encoder_spec.describe(),
        "schema_fingerprint": trained.schema_fingerprint,
        "seeds": {k: int(v) for k, v in sorted(trained.seeds.items())},
        "config_hash": trained.config_hash,
        "notes": list(trained.notes),
        "model": _TO_PAYLOAD[trained.kind](trained.model),
    }
    payload = zlib.compress(
        json.dumps(doc, sort_keys=True, separators=(",", ":")).encode(), 6
    )
    digest = hashlib.sha256(payload).digest()
    kind_b = trained.kind.encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack(">H", FORMAT_VERSION))
        fh.write(struct.pack(">B", len(kind_b)))
        fh.write(kind_b)
        fh.write(digest)
        fh.write(payload)


def load_model(path, expect_kind: str | None = None) -> TrainedModel:
    """Read an envelope back, verifying magic, version, kind, and checksum."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 7 or blob[:4] != MAGIC:
        raise ModelStoreError(f"{path}: not a model envelope")
    (version,) = struct.unpack(">H", blob[4:6])
    if version > FORMAT_VERSION or version < 1:
        raise VersionError(f"{path}: unsupported format version {version}")
    klen = blob[6]
    kind = blob[7:7 + klen].decode()
    if kind not in KINDS:
        raise ModelStoreError(f"{path}: unknown model kind {kind!r}")
    if expect_kind is not None and kind != expect_kind:
        raise KindMismatch(f"{path}: contains {kind!r}, expected {expect_kind!r}")
    rest = blob[7 + klen:]
    digest, payload = rest[:32], rest[32:]
    if hashlib.sha256(payload).digest() != digest:
        raise IntegrityError(f"{path}: payload checksum mismatch")
    doc = json.loads(zlib.decompress(payload).decode())
    spec = EncoderSpec.from_description(doc["encoder_spec"])
    model = _FROM_PAYLOAD[kind](doc["model"], spec)
    return TrainedModel(
        kind=kind,
        model=model,
        encoder_spec=spec,
        schema_fingerprint=doc["schema_fingerprint"],
        seeds={k: int(v) for k, v in doc.get("seeds", {}).items()},
        config_hash=doc.get("config_hash", ""),
        notes=tuple(doc.get("notes", ())),
    )
