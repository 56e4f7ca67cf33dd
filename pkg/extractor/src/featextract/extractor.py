"""AlexNet-backbone feature extraction over a directory of images.

The final convolutional block has 256 channels; global average pooling
over its spatial positions yields one 256-dimensional vector per image.
Images are resized straight to the canonical 224x224 input (no
letterboxing), grayscale is replicated to 3 channels, and the published
ImageNet normalization statistics are applied.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from PIL import Image, UnidentifiedImageError
from torchvision import models

from .featfile import write_feat

logger = logging.getLogger(__name__)

INPUT_SIZE = 224
FEATURE_DIMS = 256
IMAGENET_MEAN = np.array([0.485, 0.456, 0.406], dtype=np.float32)
IMAGENET_STD = np.array([0.229, 0.224, 0.225], dtype=np.float32)

# Fixed seed for the random-init fallback keeps runs reproducible.
_RANDOM_INIT_SEED = 0


@dataclass
class ExtractSpec:
    image_dir: Path
    output: Path
    weights: str = "auto"  # auto | pretrained | random | path to a state dict
    batch_size: int = 16
    errors_path: Path | None = None

    def __post_init__(self) -> None:
        self.image_dir = Path(self.image_dir)
        self.output = Path(self.output)
        if self.errors_path is None:
            self.errors_path = self.output.with_name(self.output.name + ".errors.txt")
        if self.batch_size < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch_size}")


@dataclass
class ExtractResult:
    output: Path
    count: int
    failures: list[str] = field(default_factory=list)
    weights_used: str = "pretrained"


def load_backbone(weights: str = "auto") -> tuple[torch.nn.Module, str]:
    """Build the convolutional backbone and report which weights were used."""
    if weights not in ("auto", "pretrained", "random") and Path(weights).exists():
        net = models.alexnet()
        state = torch.load(weights, map_location="cpu", weights_only=True)
        net.load_state_dict(state)
        used = weights
    elif weights in ("auto", "pretrained"):
        try:
            net = models.alexnet(weights=models.AlexNet_Weights.IMAGENET1K_V1)
            used = "pretrained"
        except Exception as exc:
            if weights == "pretrained":
                raise RuntimeError(f"pretrained weights unavailable: {exc}") from exc
            logger.warning("pretrained weights unavailable (%s); using seeded random init", exc)
            net, used = _random_backbone(), "random"
    elif weights == "random":
        net, used = _random_backbone(), "random"
    else:
        raise ValueError(f"weights file not found: {weights}")
    backbone = net.features
    backbone.eval()
    for p in backbone.parameters():
        p.requires_grad_(False)
    return backbone, used


def _random_backbone() -> torch.nn.Module:
    gen_state = torch.random.get_rng_state()
    try:
        torch.manual_seed(_RANDOM_INIT_SEED)
        return models.alexnet()
    finally:
        torch.random.set_rng_state(gen_state)


def preprocess(image: Image.Image) -> np.ndarray:
    """Resize, replicate channels if needed, normalize; returns CHW float32."""
    rgb = image.convert("RGB")  # grayscale sources replicate to 3 channels
    rgb = rgb.resize((INPUT_SIZE, INPUT_SIZE), Image.BILINEAR)
    arr = np.asarray(rgb, dtype=np.float32) / 255.0
    arr = (arr - IMAGENET_MEAN) / IMAGENET_STD
    return arr.transpose(2, 0, 1)


def list_images(image_dir: Path) -> list[Path]:
    return sorted(p for p in image_dir.iterdir() if p.is_file())


def extract(spec: ExtractSpec) -> ExtractResult:
    """Extract features for every decodable image; write FEAT + error sidecar.

    Rows follow sorted filename order so cross-run joins are stable; ids are
    the filenames. Undecodable files are listed in the sidecar, never
    silently skipped. Zero decodable images is a hard failure.
    """
    if not spec.image_dir.is_dir():
        raise FileNotFoundError(f"input not found: {spec.image_dir}")
    backbone, weights_used = load_backbone(spec.weights)

    ids: list[str] = []
    batches: list[np.ndarray] = []
    failures: list[str] = []
    for path in list_images(spec.image_dir):
        try:
            with Image.open(path) as img:
                batches.append(preprocess(img))
            ids.append(path.name)
        except (UnidentifiedImageError, OSError) as exc:
            logger.warning("skipping %s: %s", path.name, exc)
            failures.append(path.name)

    with open(spec.errors_path, "w") as fh:
        for name in failures:
            fh.write(name + "\n")
    if not ids:
        raise RuntimeError(f"no decodable images in {spec.image_dir}")

    features = np.empty((len(ids), FEATURE_DIMS), dtype=np.float32)
    with torch.no_grad():
        for start in range(0, len(ids), spec.batch_size):
            chunk = np.stack(batches[start : start + spec.batch_size])
            activations = backbone(torch.from_numpy(chunk))
            pooled = activations.mean(dim=(2, 3))  # global average pool
            features[start : start + pooled.shape[0]] = pooled.numpy()

    write_feat(spec.output, ids, features)
    return ExtractResult(
        output=spec.output, count=len(ids), failures=failures, weights_used=weights_used
    )
