"""
Binary model files. All integers and floats are little-endian.

Common header:
    magic        4 bytes   b"WCS1"
    version      uint32    FORMAT_VERSION
    kind         uint32    1 whitened-cosine, 2 knn, 3 pca-pipeline
    width        uint32    image width (0 when trained on plain vectors)
    height       uint32    image height (0 when trained on plain vectors)
    channels     uint32
    pixel_scale  uint32    0 unit, 1 raw
    d            uint64    vector dimension
    k            uint64    retained rank / stored sample count / components

whitened-cosine payload:
    n, m         uint64 x 2
    M0, mean_normal, mean_rosacea   float64[d] each
    eigenvalues  float64[k]
    W            float64[d*k], column-major

knn payload (k = number of stored samples):
    neighbours   uint64
    metric       uint32    0 l1, 1 l2, 2 cosine
    labels       uint8[k]  0 normal, 1 rosacea
    columns      float64[d*k], column-major

pca-pipeline payload (k = components):
    head         uint32    0 knn-l2, 1 nearest-mean
    M0           float64[d]
    eigenvalues  float64[k]
    projection   float64[d*k], column-major
    then for knn-l2: the knn payload with d = k and its own sample count
        (sample count uint64 first), for nearest-mean: mean_normal and
        mean_rosacea as float64[k] each.
"""
import struct
from pathlib import Path

import numpy as np

from core.exceptions import ModelFormatError
from core.schemas import Label, PreprocessSpec
from core.services.classifiers import (
    KnnMetric,
    KnnModel,
    NearestMeanModel,
    PcaHead,
    PcaPipelineModel,
    WhitenedCosineModel,
)
from core.services.linalg import WhiteningMatrix

MAGIC = b"WCS1"
FORMAT_VERSION = 1

KIND_WHITENED_COSINE = 1
KIND_KNN = 2
KIND_PCA_PIPELINE = 3

HEADER = struct.Struct("<4sIIIIIIQQ")

PIXEL_SCALES = ("unit", "raw")
METRICS = (KnnMetric.L1, KnnMetric.L2, KnnMetric.COSINE)
HEADS = (PcaHead.KNN_L2, PcaHead.NEAREST_MEAN)
LABELS = (Label.NORMAL, Label.ROSACEA)

FLOAT = np.dtype("<f8")


class _Writer:
    def __init__(self):
        self.parts = []

    def pack(self, fmt, *values):
        self.parts.append(struct.pack("<" + fmt, *values))

    def floats(self, array, column_major=False):
        array = np.asarray(array, dtype=np.float64)
        flat = array.ravel(order="F" if column_major else "C")
        self.parts.append(flat.astype(FLOAT, copy=False).tobytes())

    def labels(self, labels):
        self.parts.append(bytes(LABELS.index(Label(label)) for label in labels))

    def getvalue(self) -> bytes:
        return b"".join(self.parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = memoryview(data)
        self.offset = 0

    def _take(self, size):
        if self.offset + size > len(self.data):
            raise ModelFormatError(
                f"model file truncated: need {size} bytes at offset {self.offset}, have {len(self.data) - self.offset}"
            )
        chunk = self.data[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt):
        layout = struct.Struct("<" + fmt)
        return layout.unpack(self._take(layout.size))

    def floats(self, count):
        return np.frombuffer(self._take(count * FLOAT.itemsize), dtype=FLOAT).astype(np.float64)

    def matrix(self, rows, cols):
        return np.ascontiguousarray(self.floats(rows * cols).reshape((rows, cols), order="F"))

    def labels(self, count):
        codes = bytes(self._take(count))
        try:
            return tuple(LABELS[code] for code in codes)
        except IndexError:
            raise ModelFormatError("unknown label code in model file") from None

    def finish(self):
        if self.offset != len(self.data):
            raise ModelFormatError(f"model file has {len(self.data) - self.offset} unexpected trailing bytes")


def _code(table, value, what):
    try:
        return table[value]
    except IndexError:
        raise ModelFormatError(f"unknown {what} code {value}") from None


def _write_header(writer, kind, preprocess, d, k):
    if preprocess is None:
        geometry = (0, 0, 3, 0)
    else:
        geometry = (preprocess.width, preprocess.height, preprocess.channels, PIXEL_SCALES.index(preprocess.pixel_scale))
    writer.parts.append(HEADER.pack(MAGIC, FORMAT_VERSION, kind, *geometry, d, k))


def _write_knn(writer, model: KnnModel, with_count=False):
    if with_count:
        writer.pack("Q", model.training_columns.shape[1])
    writer.pack("QI", model.k, METRICS.index(model.metric))
    writer.labels(model.labels)
    writer.floats(model.training_columns, column_major=True)


def _read_knn(reader, d, count=None, preprocess=None) -> KnnModel:
    if count is None:
        (count,) = reader.unpack("Q")
    neighbours, metric_code = reader.unpack("QI")
    labels = reader.labels(count)
    columns = reader.matrix(d, count)
    if not 1 <= neighbours <= count:
        raise ModelFormatError(f"stored k={neighbours} is invalid for {count} samples")
    return KnnModel(
        training_columns=columns,
        labels=labels,
        k=neighbours,
        metric=_code(METRICS, metric_code, "metric"),
        preprocess=preprocess,
    )


def dumps(model) -> bytes:
    writer = _Writer()
    if isinstance(model, WhitenedCosineModel):
        _write_header(writer, KIND_WHITENED_COSINE, model.preprocess, model.dimension, model.whitening.retained_rank)
        writer.pack("QQ", *model.train_counts)
        writer.floats(model.grand_mean)
        writer.floats(model.mean_normal)
        writer.floats(model.mean_rosacea)
        writer.floats(model.whitening.eigenvalues)
        writer.floats(model.whitening.w, column_major=True)
    elif isinstance(model, KnnModel):
        _write_header(writer, KIND_KNN, model.preprocess, model.dimension, model.training_columns.shape[1])
        _write_knn(writer, model)
    elif isinstance(model, PcaPipelineModel):
        _write_header(writer, KIND_PCA_PIPELINE, model.preprocess, model.dimension, model.components)
        writer.pack("I", HEADS.index(model.head))
        writer.floats(model.grand_mean)
        writer.floats(model.eigenvalues)
        writer.floats(model.projection, column_major=True)
        if model.head == PcaHead.KNN_L2:
            _write_knn(writer, model.inner, with_count=True)
        else:
            writer.floats(model.inner.mean_normal)
            writer.floats(model.inner.mean_rosacea)
    else:
        raise ModelFormatError(f"cannot serialize {type(model).__name__}")
    return writer.getvalue()


def loads(data: bytes):
    reader = _Reader(data)
    if len(data) < HEADER.size:
        raise ModelFormatError("model file too short for its header")
    magic, version, kind, width, height, channels, scale_code, d, k = HEADER.unpack(reader._take(HEADER.size))
    if magic != MAGIC:
        raise ModelFormatError(f"not a model file (magic {bytes(magic)!r})")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version {version}; this reader understands {FORMAT_VERSION}")
    if d < 1:
        raise ModelFormatError("model dimension is zero")

    preprocess = None
    if width or height:
        try:
            preprocess = PreprocessSpec(
                width=width, height=height, channels=channels,
                pixel_scale=_code(PIXEL_SCALES, scale_code, "pixel scale"),
            )
        except ValueError as exc:
            raise ModelFormatError(f"invalid image geometry in model file: {exc}") from exc
        if preprocess.dimension != d:
            raise ModelFormatError(f"image geometry {width}x{height}x{channels} does not match dimension {d}")

    if kind == KIND_WHITENED_COSINE:
        n, m = reader.unpack("QQ")
        grand_mean = reader.floats(d)
        mean_normal = reader.floats(d)
        mean_rosacea = reader.floats(d)
        eigenvalues = reader.floats(k)
        w = reader.matrix(d, k)
        reader.finish()
        if n < 1 or m < 1 or k < 1 or k > n + m - 1:
            raise ModelFormatError(f"inconsistent model counts n={n}, m={m}, rank={k}")
        return WhitenedCosineModel(
            grand_mean=grand_mean,
            mean_normal=mean_normal,
            mean_rosacea=mean_rosacea,
            whitening=WhiteningMatrix(w=w, eigenvalues=eigenvalues),
            train_counts=(n, m),
            preprocess=preprocess,
        )
    if kind == KIND_KNN:
        model = _read_knn(reader, d, count=k, preprocess=preprocess)
        reader.finish()
        return model
    if kind == KIND_PCA_PIPELINE:
        (head_code,) = reader.unpack("I")
        head = _code(HEADS, head_code, "pca head")
        grand_mean = reader.floats(d)
        eigenvalues = reader.floats(k)
        projection = reader.matrix(d, k)
        if head == PcaHead.KNN_L2:
            inner = _read_knn(reader, k)
        else:
            inner = NearestMeanModel(mean_normal=reader.floats(k), mean_rosacea=reader.floats(k))
        reader.finish()
        return PcaPipelineModel(
            projection=projection,
            grand_mean=grand_mean,
            eigenvalues=eigenvalues,
            head=head,
            inner=inner,
            preprocess=preprocess,
        )
    raise ModelFormatError(f"unknown model kind {kind}")


def save_model(model, path) -> Path:
    path = Path(path)
    path.write_bytes(dumps(model))
    return path


def load_model(path):
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise ModelFormatError(f"cannot read model file {path}: {exc}") from exc
    return loads(data)
