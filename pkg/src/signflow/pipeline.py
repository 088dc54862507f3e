"""End-to-end orchestration: train, predict, evaluate.

Training fits the gesture codebook and per-class HMMs plus the posture
codebook/classifier on the train split, then fits both fusion rules on
the validation split's coupled responses. Prediction runs one sequence
through whichever branches the requested fusion mode needs. Evaluation
tallies a confusion matrix and per-stage mean wall-clock times over six
stages (posture/gesture/combination, description/classification each).

All randomness flows from one seed through sha256-derived child seeds,
so results are a pure function of (inputs, config, seed).
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .bundle import ModelBundle
from .codebook import Codebook, build_codebook, encode_sequence, fit_kmeans
from .dataset import DatasetManifest, load_mask_archive, parse_skeleton_csv
from .descriptors import DescriptorVariant, describe_sequence
from .fusion import (
    DEFAULT_FUSION_COST,
    CoupledResponse,
    couple,
    predict_kde,
    predict_linear,
    train_kde_fusion,
    train_linear_fusion,
)
from .hmm import GestureResponse, baum_welch, classify_gesture, init_left_right
from .metrics import ConfusionMatrix, MetricsReport, confusion, precision_recall_fscore
from .posture import (
    CONTOUR_POINTS,
    DEFAULT_POSTURE_COST,
    DegenerateContour,
    PostureBoW,
    encode_video_bow,
    frame_shape_contexts,
    posture_response,
    sample_contour,
    train_posture_classifier,
)
from .skeleton import EmptyInputError, SkeletonSequence

FUSION_MODES = ("linear", "kde", "gesture-only", "posture-only")

TIMING_STAGES = (
    "posture_description",
    "posture_classification",
    "gesture_description",
    "gesture_classification",
    "combination_description",
    "combination_classification",
)

DEFAULT_CONFIG = {
    "descriptor": DescriptorVariant.RBPD_T.value,
    "fusion": "kde",
    "gesture_k": 100,
    "posture_k": 100,
    "hmm_states": 8,
    "hmm_iters": 30,
    "hmm_tol": 1e-4,
    "epochs": 60,
    "posture_cost": DEFAULT_POSTURE_COST,
    "fusion_cost": DEFAULT_FUSION_COST,
    "sc_sample_cap": 20000,
    "seed": 0,
}


def make_config(**overrides) -> dict:
    """DEFAULT_CONFIG with validated overrides."""
    config = dict(DEFAULT_CONFIG)
    for key, value in overrides.items():
        if key not in DEFAULT_CONFIG:
            raise ValueError(f"unknown config key {key!r}")
        config[key] = value
    DescriptorVariant(config["descriptor"])
    if config["fusion"] not in FUSION_MODES:
        raise ValueError(f"unknown fusion mode {config['fusion']!r}")
    for key in ("gesture_k", "posture_k", "hmm_states", "hmm_iters", "epochs"):
        config[key] = int(config[key])
        if config[key] < 1 and key != "hmm_iters":
            raise ValueError(f"{key} must be >= 1")
    config["seed"] = int(config["seed"])
    return config


def derive_seed(seed: int, *tags) -> int:
    """Stable 31-bit child seed for a named training stage."""
    text = "/".join([str(int(seed)), *map(str, tags)])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big") % (2 ** 31)


@dataclass
class CorpusItem:
    """One recording ready for the pipeline."""

    sequence: SkeletonSequence
    label: int
    subject: str
    split: str
    masks: Optional[list] = None  # per frame: {HandSide: HandRegion}


def items_from_corpus(corpus) -> list:
    """Adapt an in-memory SyntheticCorpus."""
    items = []
    for i, (seq, entry) in enumerate(zip(corpus.sequences,
                                         corpus.manifest.entries)):
        masks = corpus.masks[i] if corpus.masks is not None else None
        items.append(CorpusItem(sequence=seq, label=entry.label,
                                subject=entry.subject, split=entry.split,
                                masks=masks))
    return items


def load_items(manifest: DatasetManifest, root, splits=None,
               with_masks: bool = True) -> list:
    """Read manifest entries (optionally only some splits) from disk."""
    root = Path(root)
    wanted = set(splits) if splits is not None else None
    items = []
    for entry in manifest.entries:
        if wanted is not None and entry.split not in wanted:
            continue
        seq = parse_skeleton_csv(root / entry.sequence_path)
        masks = None
        if with_masks and entry.mask_dir is not None:
            masks = load_mask_archive(root / entry.mask_dir)
        items.append(CorpusItem(sequence=seq, label=entry.label,
                                subject=entry.subject, split=entry.split,
                                masks=masks))
    return items


def _video_regions(masks: list) -> list:
    return [list(frame.values()) for frame in masks]


def _collect_shape_contexts(items, cap: int) -> np.ndarray:
    rows = []
    for item in items:
        for frame in item.masks:
            for region in frame.values():
                if not region.present:
                    continue
                try:
                    contour = sample_contour(region, CONTOUR_POINTS)
                except DegenerateContour:
                    continue
                rows.append(frame_shape_contexts(contour))
    if not rows:
        raise EmptyInputError("no usable hand contours in the training split")
    data = np.concatenate(rows, axis=0)
    if cap and data.shape[0] > cap:
        step = -(-data.shape[0] // cap)  # ceil division
        data = data[::step]
    return data


def _gesture_symbols(cb: Codebook, seq: SkeletonSequence):
    descriptors = describe_sequence(seq, cb.variant)
    return encode_sequence(cb, descriptors, source=seq.source)


def train_pipeline(items, config: Optional[dict] = None) -> ModelBundle:
    """Fit every member on the train split, fusion on validation."""
    config = make_config(**(config or {}))
    seed = config["seed"]
    items = list(items)
    train = [i for i in items if i.split == "train"]
    val = [i for i in items if i.split == "validation"]
    if not train:
        raise EmptyInputError("no training items")
    n_classes = max(i.label for i in items) + 1
    covered = {i.label for i in train}
    if covered != set(range(n_classes)):
        raise ValueError(f"train split covers classes {sorted(covered)}, "
                         f"need 0..{n_classes - 1}")

    # gesture branch
    variant = DescriptorVariant(config["descriptor"])
    per_seq = [describe_sequence(i.sequence, variant) for i in train]
    flat = [d for ds in per_seq for d in ds]
    gesture_k = min(config["gesture_k"], len(flat))
    gesture_cb = build_codebook(flat, k=gesture_k,
                                seed=derive_seed(seed, "gesture-cb"))
    symbol_seqs = [encode_sequence(gesture_cb, ds) for ds in per_seq]
    hmms = []
    for c in range(n_classes):
        seqs_c = [s for s, item in zip(symbol_seqs, train) if item.label == c]
        init = init_left_right(config["hmm_states"], gesture_k)
        hmm, _ = baum_welch(init, seqs_c, max_iter=config["hmm_iters"],
                            tol=config["hmm_tol"])
        hmms.append(hmm)

    # posture branch, when the training split carries masks
    posture_model = None
    if all(i.masks is not None for i in train):
        sc_data = _collect_shape_contexts(train, config["sc_sample_cap"])
        posture_k = min(config["posture_k"], sc_data.shape[0])
        posture_cb = fit_kmeans(sc_data, k=posture_k,
                                seed=derive_seed(seed, "posture-cb"))
        bows = [encode_video_bow(_video_regions(i.masks), posture_cb,
                                 video_id=i.sequence.source) for i in train]
        posture_model = train_posture_classifier(
            list(zip(bows, (i.label for i in train))), posture_cb,
            cost=config["posture_cost"], seed=derive_seed(seed, "posture-clf"),
            epochs=config["epochs"])

    # fusion stage, on validation responses only
    fusion_linear = None
    fusion_kde = None
    if val and posture_model is not None and \
            all(i.masks is not None for i in val) and \
            {i.label for i in val} == set(range(n_classes)):
        pairs = []
        for item in val:
            rg = classify_gesture(hmms, _gesture_symbols(gesture_cb,
                                                         item.sequence))
            bow = encode_video_bow(_video_regions(item.masks), posture_model.codebook,
                                   video_id=item.sequence.source)
            rp = posture_response(posture_model, bow)
            pairs.append((couple(rp, rg, true_class=item.label), item.label))
        fusion_linear = train_linear_fusion(
            pairs, cost=config["fusion_cost"],
            seed=derive_seed(seed, "fusion-linear"), epochs=config["epochs"])
        fusion_kde = train_kde_fusion(pairs)

    echo = dict(config)
    echo["n_classes"] = n_classes
    echo["gesture_k_effective"] = gesture_k
    echo["posture_k_effective"] = \
        posture_model.codebook.k if posture_model is not None else None
    return ModelBundle(gesture_codebook=gesture_cb, hmms=hmms,
                       posture_model=posture_model,
                       fusion_linear=fusion_linear, fusion_kde=fusion_kde,
                       config=echo)


@dataclass
class Prediction:
    """Per-branch responses and the final decision for one sequence."""

    gesture: GestureResponse
    posture: Optional[np.ndarray]
    coupled: Optional[CoupledResponse]
    fused_class: int
    mode: str
    timings: dict = field(default_factory=dict, repr=False)


def _check_mode(bundle: ModelBundle, mode: Optional[str], has_masks: bool) -> str:
    mode = mode or bundle.config.get("fusion", "kde")
    if mode not in FUSION_MODES:
        raise ValueError(f"unknown fusion mode {mode!r}")
    needs_posture = mode != "gesture-only"
    if needs_posture and bundle.posture_model is None:
        raise ValueError(f"fusion mode {mode!r} needs a posture model, "
                         "but the bundle was trained without masks")
    if needs_posture and not has_masks:
        raise ValueError(f"fusion mode {mode!r} needs hand masks for the "
                         "sequence")
    if mode == "linear" and bundle.fusion_linear is None:
        raise ValueError("bundle has no linear fusion model (no validation "
                         "split at training time)")
    if mode == "kde" and bundle.fusion_kde is None:
        raise ValueError("bundle has no KDE fusion model (no validation "
                         "split at training time)")
    return mode


def predict_item(bundle: ModelBundle, sequence: SkeletonSequence,
                 masks: Optional[list] = None,
                 mode: Optional[str] = None) -> Prediction:
    """Classify one sequence; timings cover the six pipeline stages."""
    mode = _check_mode(bundle, mode, masks is not None)
    timings = dict.fromkeys(TIMING_STAGES, 0.0)

    t0 = time.perf_counter()
    symbols = _gesture_symbols(bundle.gesture_codebook, sequence)
    timings["gesture_description"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    rg = classify_gesture(bundle.hmms, symbols)
    timings["gesture_classification"] = time.perf_counter() - t0

    rp = None
    bow: Optional[PostureBoW] = None
    if mode != "gesture-only":
        t0 = time.perf_counter()
        bow = encode_video_bow(_video_regions(masks),
                               bundle.posture_model.codebook,
                               video_id=sequence.source)
        timings["posture_description"] = time.perf_counter() - t0
        t0 = time.perf_counter()
        rp = posture_response(bundle.posture_model, bow)
        timings["posture_classification"] = time.perf_counter() - t0

    coupled = None
    if mode == "gesture-only":
        t0 = time.perf_counter()
        fused = rg.best_class
        timings["combination_classification"] = time.perf_counter() - t0
    elif mode == "posture-only":
        t0 = time.perf_counter()
        fused = int(rp.argmax())
        timings["combination_classification"] = time.perf_counter() - t0
    else:
        t0 = time.perf_counter()
        coupled = couple(rp, rg)
        timings["combination_description"] = time.perf_counter() - t0
        t0 = time.perf_counter()
        if mode == "linear":
            fused = predict_linear(bundle.fusion_linear, coupled)
        else:
            fused = predict_kde(bundle.fusion_kde, coupled)
        timings["combination_classification"] = time.perf_counter() - t0

    return Prediction(gesture=rg, posture=rp, coupled=coupled,
                      fused_class=int(fused), mode=mode, timings=timings)


@dataclass
class EvalResult:
    """Metrics, confusion counts, and mean per-sequence stage timings."""

    report: MetricsReport
    confusion: ConfusionMatrix
    timings: dict
    predictions: list


def evaluate_pipeline(bundle: ModelBundle, items,
                      mode: Optional[str] = None) -> EvalResult:
    """Predict every item, tally metrics, average the stage timings."""
    items = list(items)
    if not items:
        raise EmptyInputError("no items to evaluate")
    totals = dict.fromkeys(TIMING_STAGES, 0.0)
    predictions = []
    for item in items:
        pred = predict_item(bundle, item.sequence, masks=item.masks, mode=mode)
        predictions.append(pred)
        for stage in TIMING_STAGES:
            totals[stage] += pred.timings[stage]
    n = len(items)
    timings = {stage: totals[stage] / n for stage in TIMING_STAGES}
    timings["total"] = sum(timings[stage] for stage in TIMING_STAGES)
    cm = confusion([p.fused_class for p in predictions],
                   [i.label for i in items], bundle.n_classes)
    report = precision_recall_fscore(cm)
    return EvalResult(report=report, confusion=cm, timings=timings,
                      predictions=predictions)
