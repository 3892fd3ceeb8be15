import tempfile
from pathlib import Path

import cv2
import numpy as np
from django.test import SimpleTestCase

from core.exceptions import DatasetError, ImageLoadError, ParameterError, UnsupportedFormatError
from core.schemas import DatasetManifest, Label, ManifestEntry, PreprocessSpec, SyntheticSpec
from core.services.dataset import (
    generate_synthetic,
    load_csv_vectors,
    load_image_matrix,
    load_image_vector,
    save_csv_vectors,
    save_mean_images,
    scan_directories,
    split,
    split_by_label,
    split_indices,
    synthetic_class_means,
    vector_to_image,
)

SPEC_8 = PreprocessSpec(width=8, height=8)


def write_rgb(path, rgb):
    """Write an H x W x 3 RGB uint8 array."""
    assert cv2.imwrite(str(path), cv2.cvtColor(np.asarray(rgb, dtype=np.uint8), cv2.COLOR_RGB2BGR))
    return Path(path)


def solid(value, size=8):
    return np.full((size, size, 3), value, dtype=np.uint8)


class TempDirTestCase(SimpleTestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()


class LoadImageTests(TempDirTestCase):
    def test_white_image_is_ones(self):
        vec = load_image_vector(write_rgb(self.tmp / "white.png", solid(255)), SPEC_8)
        self.assertEqual(vec.shape, (192,))
        np.testing.assert_array_equal(vec, 1.0)

    def test_black_image_is_zeros(self):
        vec = load_image_vector(write_rgb(self.tmp / "black.png", solid(0)), SPEC_8)
        np.testing.assert_array_equal(vec, 0.0)

    def test_checkerboard_downsizes_to_mid_gray(self):
        board = (np.indices((16, 16)).sum(axis=0) % 2 * 255).astype(np.uint8)
        path = write_rgb(self.tmp / "board.png", np.repeat(board[:, :, np.newaxis], 3, axis=2))
        vec = load_image_vector(path, SPEC_8)
        np.testing.assert_allclose(vec, 0.5, atol=1 / 255)

    def test_channels_are_rgb_interleaved(self):
        image = np.zeros((8, 8, 3), dtype=np.uint8)
        image[..., 0] = 255
        image[0, 1] = (0, 0, 255)
        vec = load_image_vector(write_rgb(self.tmp / "red.png", image), SPEC_8)
        np.testing.assert_array_equal(vec[:6], [1, 0, 0, 0, 0, 1])

    def test_raw_scale_keeps_pixel_values(self):
        spec = PreprocessSpec(width=8, height=8, pixel_scale="raw")
        vec = load_image_vector(write_rgb(self.tmp / "gray.png", solid(51)), spec)
        np.testing.assert_array_equal(vec, 51.0)

    def test_grayscale_is_replicated(self):
        path = self.tmp / "gray.png"
        cv2.imwrite(str(path), np.full((8, 8), 102, dtype=np.uint8))
        vec = load_image_vector(path, SPEC_8)
        np.testing.assert_allclose(vec, 0.4)

    def test_jpeg(self):
        vec = load_image_vector(write_rgb(self.tmp / "white.jpg", solid(255)), SPEC_8)
        np.testing.assert_allclose(vec, 1.0, atol=2 / 255)

    def test_deterministic(self):
        rng = np.random.default_rng(0)
        path = write_rgb(self.tmp / "noise.png", rng.integers(0, 256, size=(13, 11, 3)))
        first = load_image_vector(path, SPEC_8)
        second = load_image_vector(path, SPEC_8)
        self.assertEqual(first.tobytes(), second.tobytes())

    def test_unsupported_format(self):
        path = self.tmp / "face.gif"
        path.write_bytes(b"GIF89a")
        with self.assertRaises(UnsupportedFormatError):
            load_image_vector(path, SPEC_8)

    def test_corrupt_file_names_path(self):
        path = self.tmp / "broken.png"
        path.write_bytes(b"not an image at all")
        with self.assertRaisesMessage(ImageLoadError, str(path)):
            load_image_vector(path, SPEC_8)

    def test_missing_file(self):
        with self.assertRaisesMessage(ImageLoadError, "file not found"):
            load_image_vector(self.tmp / "missing.png", SPEC_8)

    def test_matrix_keeps_path_order(self):
        paths = [write_rgb(self.tmp / f"{i}.png", solid(i * 50)) for i in range(4)]
        x = load_image_matrix(reversed(paths), SPEC_8)
        self.assertEqual(x.shape, (192, 4))
        np.testing.assert_allclose(x[0], [150 / 255, 100 / 255, 50 / 255, 0.0])

    def test_geometry_is_validated(self):
        with self.assertRaises(ValueError):
            PreprocessSpec(width=4, height=8)


class MeanImageTests(TempDirTestCase):
    def test_vector_to_image_inverts_flattening(self):
        rng = np.random.default_rng(1)
        image = rng.integers(0, 256, size=(8, 8, 3)).astype(np.uint8)
        vec = load_image_vector(write_rgb(self.tmp / "img.png", image), SPEC_8)
        np.testing.assert_array_equal(vector_to_image(vec, SPEC_8), image)

    def test_values_are_clipped(self):
        vec = np.full(SPEC_8.dimension, 2.0)
        vec[0] = -1.0
        image = vector_to_image(vec, SPEC_8)
        self.assertEqual(image[0, 0, 0], 0)
        self.assertEqual(image[0, 0, 1], 255)

    def test_wrong_length(self):
        with self.assertRaises(ParameterError):
            vector_to_image(np.ones(10), SPEC_8)

    def test_save_mean_images(self):
        normal_path, rosacea_path = save_mean_images(
            np.full(SPEC_8.dimension, 0.2), np.full(SPEC_8.dimension, 0.8), SPEC_8, self.tmp / "means",
        )
        self.assertEqual(normal_path.name, "normal_mean.png")
        self.assertEqual(rosacea_path.name, "rosacea_mean.png")
        np.testing.assert_array_equal(load_image_vector(normal_path, SPEC_8), 51 / 255)
        np.testing.assert_array_equal(load_image_vector(rosacea_path, SPEC_8), 204 / 255)


class ScanDirectoriesTests(TempDirTestCase):
    def make_class(self, name, files):
        directory = self.tmp / name
        directory.mkdir()
        for file_name in files:
            write_rgb(directory / file_name, solid(10))
        return directory

    def test_sorted_normal_first(self):
        normal = self.make_class("normal", ["c.png", "a.png", "b.jpg"])
        rosacea = self.make_class("rosacea", ["z.png", "y.jpeg"])
        manifest = scan_directories(normal, rosacea)
        self.assertEqual(
            [(entry.path.name, entry.label) for entry in manifest.entries],
            [("a.png", Label.NORMAL), ("b.jpg", Label.NORMAL), ("c.png", Label.NORMAL),
             ("y.jpeg", Label.ROSACEA), ("z.png", Label.ROSACEA)],
        )

    def test_non_images_are_skipped_with_warning(self):
        normal = self.make_class("normal", ["a.png"])
        (normal / "notes.txt").write_text("ignore me")
        rosacea = self.make_class("rosacea", ["b.png"])
        with self.assertLogs("core.services.dataset", level="WARNING") as logs:
            manifest = scan_directories(normal, rosacea)
        self.assertEqual(len(manifest.entries), 2)
        self.assertIn("notes.txt", logs.output[0])

    def test_empty_class(self):
        normal = self.make_class("normal", ["a.png"])
        rosacea = self.make_class("rosacea", [])
        with self.assertRaisesMessage(DatasetError, "no rosacea images"):
            scan_directories(normal, rosacea)

    def test_one_directory_for_both_classes(self):
        normal = self.make_class("normal", ["a.png", "b.png"])
        with self.assertRaisesMessage(DatasetError, "same directory"):
            scan_directories(normal, normal)
        with self.assertRaisesMessage(DatasetError, "same directory"):
            scan_directories(normal, self.tmp / "normal" / ".." / "normal")

    def test_same_file_name_in_both_classes(self):
        normal = self.make_class("normal", ["face.png"])
        rosacea = self.make_class("rosacea", ["face.png"])
        self.assertEqual(len(scan_directories(normal, rosacea).entries), 2)


class SplitTests(SimpleTestCase):
    def manifest(self, normal, rosacea):
        entries = [ManifestEntry(path=Path(f"normal/{i:04d}.png"), label=Label.NORMAL) for i in range(normal)]
        entries += [ManifestEntry(path=Path(f"rosacea/{i:04d}.png"), label=Label.ROSACEA) for i in range(rosacea)]
        return DatasetManifest(entries=entries)

    def test_published_split_sizes(self):
        train, val = split(self.manifest(600, 300), 5 / 6, seed=0)
        self.assertEqual((train.count(Label.NORMAL), val.count(Label.NORMAL)), (500, 100))
        self.assertEqual((train.count(Label.ROSACEA), val.count(Label.ROSACEA)), (250, 50))
        self.assertEqual(train.split_ratio, 5 / 6)

    def test_partition(self):
        manifest = self.manifest(40, 25)
        train, val = split(manifest, 0.7, seed=3)
        train_paths = {entry.path for entry in train.entries}
        val_paths = {entry.path for entry in val.entries}
        self.assertFalse(train_paths & val_paths)
        self.assertEqual(train_paths | val_paths, {entry.path for entry in manifest.entries})

    def test_same_seed_same_partition(self):
        manifest = self.manifest(30, 30)
        self.assertEqual(split(manifest, 0.5, seed=9), split(manifest, 0.5, seed=9))
        self.assertNotEqual(split(manifest, 0.5, seed=9)[0], split(manifest, 0.5, seed=10)[0])

    def test_class_too_small(self):
        with self.assertRaises(DatasetError):
            split(self.manifest(10, 1), 0.5, seed=0)

    def test_ratio_bounds(self):
        for ratio in (0.0, 1.0, 1.5):
            with self.assertRaises(ParameterError):
                split_indices([Label.NORMAL] * 4, ratio, seed=0)

    def test_duplicate_paths_rejected(self):
        entry = ManifestEntry(path=Path("a.png"), label=Label.NORMAL)
        with self.assertRaises(ValueError):
            DatasetManifest(entries=[entry, entry])


class SyntheticTests(SimpleTestCase):
    def test_shapes_and_labels(self):
        x_normal, x_rosacea, labels = generate_synthetic(SyntheticSpec(d=5, n=3, m=2, separation=1.0))
        self.assertEqual(x_normal.shape, (5, 3))
        self.assertEqual(x_rosacea.shape, (5, 2))
        self.assertEqual(labels, [Label.NORMAL] * 3 + [Label.ROSACEA] * 2)

    def test_bit_identical_for_fixed_seed(self):
        spec = SyntheticSpec(d=16, n=10, m=7, separation=3.0, seed=42)
        first, second = generate_synthetic(spec), generate_synthetic(spec)
        self.assertEqual(first[0].tobytes(), second[0].tobytes())
        self.assertEqual(first[1].tobytes(), second[1].tobytes())

    def test_means_are_separated(self):
        mean_normal, mean_rosacea = synthetic_class_means(SyntheticSpec(d=16, n=1, m=1, separation=10.0, seed=4))
        self.assertAlmostEqual(np.linalg.norm(mean_rosacea - mean_normal), 10.0)

    def test_sample_means_converge(self):
        spec = SyntheticSpec(d=8, n=400, m=400, separation=6.0, sigma=2.0, seed=5)
        x_normal, x_rosacea, _ = generate_synthetic(spec)
        mean_normal, mean_rosacea = synthetic_class_means(spec)
        bound = 5 * spec.sigma / np.sqrt(400)
        self.assertLess(np.max(np.abs(x_normal.mean(axis=1) - mean_normal)), bound)
        self.assertLess(np.max(np.abs(x_rosacea.mean(axis=1) - mean_rosacea)), bound)


class CsvVectorTests(TempDirTestCase):
    def write(self, text):
        path = self.tmp / "vectors.csv"
        path.write_text(text)
        return path

    def test_rows_become_columns(self):
        x, labels = load_csv_vectors(self.write("normal,1,2,3\nRosacea,4,5,6\n"))
        np.testing.assert_array_equal(x, [[1, 4], [2, 5], [3, 6]])
        self.assertEqual(labels, [Label.NORMAL, Label.ROSACEA])

    def test_empty_file(self):
        with self.assertRaises(DatasetError):
            load_csv_vectors(self.write(""))

    def test_header_row_names_line_one(self):
        with self.assertRaisesMessage(DatasetError, "line 1"):
            load_csv_vectors(self.write("label,v1,v2\nnormal,1,2\n"))

    def test_ragged_row(self):
        with self.assertRaisesMessage(DatasetError, "line 2: ragged row"):
            load_csv_vectors(self.write("normal,1,2\nrosacea,1\n"))

    def test_non_numeric_cell(self):
        with self.assertRaisesMessage(DatasetError, "line 3: non-numeric cell"):
            load_csv_vectors(self.write("normal,1,2\nrosacea,1,2\nnormal,x,2\n"))

    def test_non_finite_cell(self):
        with self.assertRaisesMessage(DatasetError, "line 1: non-finite value"):
            load_csv_vectors(self.write("normal,nan,2\n"))

    def test_invalid_utf8_names_line(self):
        path = self.tmp / "vectors.csv"
        path.write_bytes(b"normal,1,2\nrosacea,\xff\xfe,3\n")
        with self.assertRaisesMessage(DatasetError, "line 2: not valid UTF-8") as ctx:
            load_csv_vectors(path)
        self.assertEqual(ctx.exception.line, 2)

    def test_unlabeled_rows_keep_first_cell(self):
        x, labels = load_csv_vectors(self.write("face-1,1,2\n?,3,4\n"), labeled=False)
        np.testing.assert_array_equal(x, [[1, 3], [2, 4]])
        self.assertEqual(labels, ["face-1", "?"])

    def test_labeled_rows_reject_unknown_label(self):
        with self.assertRaisesMessage(DatasetError, "line 1: unknown label"):
            load_csv_vectors(self.write("face-1,1,2\n"))

    def test_written_vectors_read_back(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal((4, 5))
        labels = [Label.NORMAL, Label.ROSACEA, Label.NORMAL, Label.NORMAL, Label.ROSACEA]
        path = save_csv_vectors(self.tmp / "out.csv", x, labels)
        loaded, loaded_labels = load_csv_vectors(path)
        np.testing.assert_array_equal(loaded, x)
        self.assertEqual(loaded_labels, labels)

    def test_split_by_label_keeps_order(self):
        x = np.arange(10.0).reshape(2, 5)
        normal, rosacea = split_by_label(x, ["rosacea", "normal", "rosacea", "normal", "normal"])
        np.testing.assert_array_equal(normal, [[1, 3, 4], [6, 8, 9]])
        np.testing.assert_array_equal(rosacea, [[0, 2], [5, 7]])
