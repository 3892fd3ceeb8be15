"""
Dataset ingestion: image files to flat vectors, class directories to manifests,
stratified splits, CSV vector fixtures and synthetic two-class data.

An image becomes a vector of length width * height * 3, RGB channels
interleaved, rows in order (the layout of an H x W x 3 array flattened in C
order). Inputs are expected to be pre-cropped faces; no detection or
alignment happens here.
"""
import csv
import logging
from pathlib import Path

import cv2
import numpy as np
from pydantic import ValidationError

from core.exceptions import DatasetError, ImageLoadError, ParameterError, UnsupportedFormatError
from core.schemas import DatasetManifest, Label, ManifestEntry, PreprocessSpec, SyntheticSpec
from core.services.linalg import Mat, Vec, as_vec
from core.utils import map_ordered

logger = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")

MEAN_IMAGE_NAMES = {
    Label.NORMAL: "normal_mean.png",
    Label.ROSACEA: "rosacea_mean.png",
}


def is_image_path(path: Path) -> bool:
    return path.suffix.lower() in IMAGE_SUFFIXES


def load_image_vector(path, spec: PreprocessSpec) -> Vec:
    path = Path(path)
    if not is_image_path(path):
        raise UnsupportedFormatError(path, f"unsupported image format {path.suffix or '(none)'}; expected PNG or JPEG")
    if not path.is_file():
        raise ImageLoadError(path, "file not found")
    try:
        data = np.fromfile(path, dtype=np.uint8)
    except OSError as exc:
        raise ImageLoadError(path, f"cannot read file: {exc}") from exc
    # IMREAD_COLOR drops alpha and replicates grayscale to three channels
    image = cv2.imdecode(data, cv2.IMREAD_COLOR) if data.size else None
    if image is None:
        raise ImageLoadError(path, "cannot decode image")

    pixels = cv2.cvtColor(image, cv2.COLOR_BGR2RGB).astype(np.float64)
    if pixels.shape[:2] != (spec.height, spec.width):
        pixels = cv2.resize(pixels, (spec.width, spec.height), interpolation=cv2.INTER_LINEAR)
    if spec.pixel_scale == "unit":
        pixels /= 255.0
    return np.ascontiguousarray(pixels).reshape(-1)


def load_image_matrix(paths, spec: PreprocessSpec) -> Mat:
    """Load every path into one column of a d x c matrix; any failure is fatal."""
    paths = list(paths)
    out = np.empty((spec.dimension, len(paths)), dtype=np.float64, order="F")

    def load_into(index):
        out[:, index] = load_image_vector(paths[index], spec)

    map_ordered(load_into, range(len(paths)))
    return out


def vector_to_image(vec: Vec, spec: PreprocessSpec) -> np.ndarray:
    """Inverse of the flattening in load_image_vector, as an H x W x 3 uint8 RGB array."""
    vec = as_vec(vec)
    if vec.shape[0] != spec.dimension:
        raise ParameterError(f"vector of length {vec.shape[0]} does not match {spec.width}x{spec.height}x3")
    pixels = vec.reshape(spec.height, spec.width, spec.channels)
    if spec.pixel_scale == "unit":
        pixels = pixels * 255.0
    return np.clip(np.rint(pixels), 0, 255).astype(np.uint8)


def save_image(path, image: np.ndarray) -> Path:
    path = Path(path)
    if not cv2.imwrite(str(path), cv2.cvtColor(image, cv2.COLOR_RGB2BGR)):
        raise ImageLoadError(path, "cannot write image")
    return path


def save_mean_images(mean_normal: Vec, mean_rosacea: Vec, spec: PreprocessSpec, out_dir) -> tuple[Path, Path]:
    """Write each class mean as a PNG so a reader can see what the detector compares against."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    normal_path = save_image(out_dir / MEAN_IMAGE_NAMES[Label.NORMAL], vector_to_image(mean_normal, spec))
    rosacea_path = save_image(out_dir / MEAN_IMAGE_NAMES[Label.ROSACEA], vector_to_image(mean_rosacea, spec))
    return normal_path, rosacea_path


def _scan_class(directory, label: Label) -> list[ManifestEntry]:
    directory = Path(directory)
    if not directory.is_dir():
        raise DatasetError(f"not a directory: {directory}")
    entries = []
    for path in sorted(directory.iterdir(), key=lambda p: p.name):
        if not path.is_file():
            continue
        if not is_image_path(path):
            logger.warning(f"Skipping non-image file {path}")
            continue
        entries.append(ManifestEntry(path=path, label=label))
    if not entries:
        raise DatasetError(f"no {label} images in {directory}")
    return entries


def _manifest(entries, **fields) -> DatasetManifest:
    try:
        return DatasetManifest(entries=entries, **fields)
    except ValidationError as exc:
        raise DatasetError(f"invalid dataset manifest: {exc.errors()[0]['msg']}") from exc


def scan_directories(normal_dir, rosacea_dir) -> DatasetManifest:
    """Normal entries first, then rosacea; each class sorted by file name."""
    if Path(normal_dir).resolve() == Path(rosacea_dir).resolve():
        raise DatasetError(f"normal and rosacea images come from the same directory {normal_dir}")
    entries = _scan_class(normal_dir, Label.NORMAL) + _scan_class(rosacea_dir, Label.ROSACEA)
    logger.info(f"Scanned {len(entries)} images from {normal_dir} and {rosacea_dir}")
    return _manifest(entries)


def split_indices(labels, ratio: float, seed: int) -> tuple[list[int], list[int]]:
    """
    Per-class split: round(ratio * class size) items of each class go to the
    training part, chosen by a permutation seeded with `seed`. Both index lists
    are ascending.
    """
    if not 0.0 < ratio < 1.0:
        raise ParameterError(f"split ratio must be strictly between 0 and 1, got {ratio}")
    labels = [Label(label) for label in labels]
    rng = np.random.default_rng(seed)
    train = set()
    for label in Label:
        indices = [i for i, item in enumerate(labels) if item == label]
        if not indices:
            continue
        n_train = round(ratio * len(indices))
        if n_train < 1 or n_train >= len(indices):
            raise DatasetError(f"{label} class with {len(indices)} entries is too small to split at ratio {ratio:.4f}")
        chosen = rng.permutation(len(indices))[:n_train]
        train.update(indices[j] for j in chosen)
    validation = [i for i in range(len(labels)) if i not in train]
    return sorted(train), validation


def split(manifest: DatasetManifest, ratio: float, seed: int) -> tuple[DatasetManifest, DatasetManifest]:
    """Stratified train/validation split; 5/6 turns classes of 300 and 600 into 250/50 and 500/100."""
    train, validation = split_indices([entry.label for entry in manifest.entries], ratio, seed)
    return (
        _manifest([manifest.entries[i] for i in train], split_seed=seed, split_ratio=ratio),
        _manifest([manifest.entries[i] for i in validation], split_seed=seed, split_ratio=ratio),
    )


def generate_synthetic(spec: SyntheticSpec) -> tuple[Mat, Mat, list[Label]]:
    """
    Two isotropic Gaussian clouds with standard deviation sigma, centred at
    -separation/2 and +separation/2 along a random unit direction. Identical
    seeds give identical matrices; draw held-out data by generating more columns
    and slicing.
    """
    mean_normal, mean_rosacea = synthetic_class_means(spec)
    rng = np.random.default_rng([spec.seed, 1])
    x_normal = mean_normal[:, np.newaxis] + spec.sigma * rng.standard_normal((spec.d, spec.n))
    x_rosacea = mean_rosacea[:, np.newaxis] + spec.sigma * rng.standard_normal((spec.d, spec.m))
    labels = [Label.NORMAL] * spec.n + [Label.ROSACEA] * spec.m
    return x_normal, x_rosacea, labels


def synthetic_class_means(spec: SyntheticSpec) -> tuple[Vec, Vec]:
    rng = np.random.default_rng([spec.seed, 0])
    direction = rng.standard_normal(spec.d)
    direction /= np.linalg.norm(direction)
    offset = 0.5 * spec.separation * direction
    return -offset, offset


def _decoded_lines(handle):
    for line, raw in enumerate(handle, start=1):
        try:
            yield raw.decode("utf-8")
        except UnicodeDecodeError:
            raise DatasetError("not valid UTF-8 text", line=line) from None


def load_csv_vectors(path, labeled: bool = True) -> tuple[Mat, list]:
    """
    Rows are `label,v1,...,vd` with a constant d; columns of the result follow file order.
    With labeled=False the first cell is returned as written instead of being
    checked against the two classes.
    """
    path = Path(path)
    columns = []
    labels = []
    width = None
    try:
        with path.open("rb") as handle:
            for line, row in enumerate(csv.reader(_decoded_lines(handle)), start=1):
                if not row or all(not cell.strip() for cell in row):
                    continue
                label_cell, *cells = row
                if labeled:
                    try:
                        label = Label(label_cell.strip().lower())
                    except ValueError:
                        raise DatasetError(f"unknown label {label_cell!r}", line=line) from None
                else:
                    label = label_cell.strip()
                if not cells:
                    raise DatasetError("row has no values", line=line)
                try:
                    values = [float(cell) for cell in cells]
                except ValueError:
                    raise DatasetError("non-numeric cell", line=line) from None
                if not np.all(np.isfinite(values)):
                    raise DatasetError("non-finite value", line=line)
                if width is None:
                    width = len(values)
                elif len(values) != width:
                    raise DatasetError(f"ragged row: expected {width} values, got {len(values)}", line=line)
                columns.append(values)
                labels.append(label)
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc
    if not columns:
        raise DatasetError(f"{path} contains no vectors")
    return np.array(columns, dtype=np.float64).T, labels


def save_csv_vectors(path, x: Mat, labels) -> Path:
    path = Path(path)
    x = np.asarray(x, dtype=np.float64)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        for column, label in zip(x.T, labels):
            writer.writerow([Label(label).value] + [repr(float(value)) for value in column])
    return path


def split_by_label(x: Mat, labels) -> tuple[Mat, Mat]:
    """Columns of x grouped into (normal, rosacea), order preserved within each class."""
    labels = [Label(label) for label in labels]
    normal = [i for i, label in enumerate(labels) if label == Label.NORMAL]
    rosacea = [i for i, label in enumerate(labels) if label == Label.ROSACEA]
    return x[:, normal], x[:, rosacea]
