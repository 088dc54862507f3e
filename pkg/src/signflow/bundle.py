"""Trained-model persistence.

A bundle holds everything predict/eval needs: the gesture codebook, one
left-right HMM per class, the posture model (codebook + linear weights)
when masks were available, the fusion models fit on the validation split,
and a config echo. Serialized as indented JSON with a format version;
floats go through repr, so a load reproduces the saved model bit for bit.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .codebook import Codebook
from .dataset import CorruptFileError
from .descriptors import DescriptorVariant, ZNormStats
from .fusion import KdeFusionModel, LinearFusionModel
from .hmm import DiscreteHMM
from .linear_model import MulticlassLinearModel
from .posture import PostureModel
from .skeleton import SignflowError

FORMAT_VERSION = 1
FORMAT_NAME = "signflow-bundle"


class BundleVersionError(SignflowError):
    """The file's format version does not match this code."""


def config_hash(config: dict) -> str:
    """Stable short digest of a JSON-serializable config dict."""
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


@dataclass
class ModelBundle:
    """All trained members of one pipeline run."""

    gesture_codebook: Codebook
    hmms: list
    posture_model: Optional[PostureModel] = None
    fusion_linear: Optional[LinearFusionModel] = None
    fusion_kde: Optional[KdeFusionModel] = None
    config: dict = field(default_factory=dict)
    version: int = FORMAT_VERSION

    def __post_init__(self):
        if not self.hmms:
            raise ValueError("bundle needs at least one class HMM")
        c = len(self.hmms)
        k = self.gesture_codebook.k
        for i, hmm in enumerate(self.hmms):
            if hmm.B.shape[1] != k:
                raise ValueError(f"HMM {i} expects {hmm.B.shape[1]} symbols, "
                                 f"codebook has {k}")
        if self.posture_model is not None:
            pm = self.posture_model
            if pm.model.n_classes != c:
                raise ValueError("posture class count != gesture class count")
            if pm.model.dimension != 2 * pm.codebook.k:
                raise ValueError("posture weights do not match its codebook")
        for name, fm in (("linear", self.fusion_linear),
                         ("kde", self.fusion_kde)):
            if fm is None:
                continue
            n = fm.model.n_classes if name == "linear" else fm.n_classes
            d = fm.model.dimension if name == "linear" else fm.dimension
            if n != c or d != 2 * c:
                raise ValueError(f"fusion {name} model shape mismatch")

    @property
    def n_classes(self) -> int:
        return len(self.hmms)

    @property
    def n_symbols(self) -> int:
        return self.gesture_codebook.k


def _codebook_doc(cb: Codebook) -> dict:
    return {
        "centers": cb.centers.tolist(),
        "k": cb.k,
        "seed": cb.seed,
        "variant": cb.variant.value if cb.variant is not None else None,
        "znorm": {"mean": cb.znorm.mean.tolist(),
                  "stddev": cb.znorm.stddev.tolist()},
        "wcss_history": list(cb.wcss_history),
    }


def _codebook_from(doc: dict) -> Codebook:
    variant = doc.get("variant")
    return Codebook(
        centers=np.array(doc["centers"], dtype=np.float64),
        k=int(doc["k"]),
        znorm=ZNormStats(mean=np.array(doc["znorm"]["mean"]),
                         stddev=np.array(doc["znorm"]["stddev"])),
        seed=int(doc["seed"]),
        variant=DescriptorVariant(variant) if variant is not None else None,
        wcss_history=list(doc.get("wcss_history", [])),
    )


def _linear_doc(m: MulticlassLinearModel) -> dict:
    return {"weights": m.weights.tolist(), "n_classes": m.n_classes,
            "config": m.config}


def _linear_from(doc: dict) -> MulticlassLinearModel:
    return MulticlassLinearModel(
        weights=np.array(doc["weights"], dtype=np.float64),
        n_classes=int(doc["n_classes"]),
        config=dict(doc.get("config", {})),
    )


def save_bundle(bundle: ModelBundle, path) -> None:
    doc = {
        "format": FORMAT_NAME,
        "version": bundle.version,
        "tool_version": __version__,
        "config_hash": config_hash(bundle.config),
        "config": bundle.config,
        "gesture_codebook": _codebook_doc(bundle.gesture_codebook),
        "hmms": [{"pi": h.pi.tolist(), "A": h.A.tolist(), "B": h.B.tolist()}
                 for h in bundle.hmms],
        "posture": None,
        "fusion_linear": None,
        "fusion_kde": None,
    }
    if bundle.posture_model is not None:
        pm = bundle.posture_model
        doc["posture"] = {
            "codebook": _codebook_doc(pm.codebook),
            "model": _linear_doc(pm.model),
            "config": pm.config,
        }
    if bundle.fusion_linear is not None:
        doc["fusion_linear"] = {
            "model": _linear_doc(bundle.fusion_linear.model),
            "config": bundle.fusion_linear.config,
        }
    if bundle.fusion_kde is not None:
        fk = bundle.fusion_kde
        doc["fusion_kde"] = {
            "class_points": [p.tolist() for p in fk.class_points],
            "bandwidths": fk.bandwidths.tolist(),
            "priors": fk.priors.tolist(),
        }
    Path(path).write_text(json.dumps(doc, indent=2, allow_nan=False) + "\n")


def _require(doc: dict, key: str, path) -> object:
    try:
        return doc[key]
    except KeyError:
        raise CorruptFileError(f"{path}: missing key {key!r}") from None


def load_bundle(path) -> ModelBundle:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise CorruptFileError(f"{path}: line {exc.lineno} col {exc.colno}: "
                               f"{exc.msg}") from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise CorruptFileError(f"{path}: not a {FORMAT_NAME} file")
    version = _require(doc, "version", path)
    if version != FORMAT_VERSION:
        raise BundleVersionError(
            f"{path}: format version {version}, this build reads "
            f"{FORMAT_VERSION}")
    try:
        hmms = []
        for h in _require(doc, "hmms", path):
            b_mat = np.array(h["B"], dtype=np.float64)
            hmms.append(DiscreteHMM(n_states=b_mat.shape[0],
                                    n_symbols=b_mat.shape[1],
                                    pi=np.array(h["pi"], dtype=np.float64),
                                    A=np.array(h["A"], dtype=np.float64),
                                    B=b_mat))
        posture_model = None
        posture = doc.get("posture")
        if posture is not None:
            posture_model = PostureModel(
                model=_linear_from(posture["model"]),
                codebook=_codebook_from(posture["codebook"]),
                config=dict(posture.get("config", {})),
            )
        fusion_linear = None
        fl = doc.get("fusion_linear")
        if fl is not None:
            fusion_linear = LinearFusionModel(
                model=_linear_from(fl["model"]),
                config=dict(fl.get("config", {})),
            )
        fusion_kde = None
        fk = doc.get("fusion_kde")
        if fk is not None:
            fusion_kde = KdeFusionModel(
                class_points=[np.array(p, dtype=np.float64)
                              for p in fk["class_points"]],
                bandwidths=np.array(fk["bandwidths"], dtype=np.float64),
                priors=np.array(fk["priors"], dtype=np.float64),
            )
        return ModelBundle(
            gesture_codebook=_codebook_from(_require(doc, "gesture_codebook",
                                                     path)),
            hmms=hmms,
            posture_model=posture_model,
            fusion_linear=fusion_linear,
            fusion_kde=fusion_kde,
            config=dict(_require(doc, "config", path)),
            version=int(version),
        )
    except CorruptFileError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptFileError(f"{path}: {exc}") from None
