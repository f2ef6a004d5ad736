"""Corpus ingestion and persistence.

File formats owned by this module:

* COCO keypoints JSON -- the view/rostrum variant travels in the category
  name (``lateral-23``, ``lateral-22``, ``dorsal-23``, ``dorsal-22``) since
  COCO has no native field for it. Coordinates survive a write/load
  round-trip exactly.
* Measurement CSV -- header ``sample_id,<variable>,...``, decimal point,
  UTF-8, LF line endings. Blank cells mean "not measured".
* RGB-D raster -- self-describing binary: 8-byte magic ``SMRGBD1\\n``,
  little-endian uint32 width and height, one descriptor byte (4 = RGB +
  depth), then the RGB plane row-major as 8-bit triples followed by the
  depth plane as little-endian float32 millimeters (0 = no reading).
"""

from __future__ import annotations

import csv
import io
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyCorpus, FormatError, ParseError, SchemaError, UnknownVariable
from .skeleton import (
    Keypoint,
    MeasurementSet,
    RostrumState,
    Unit,
    VARIABLE_NAMES,
    View,
    VirtualSkeleton,
)

RASTER_MAGIC = b"SMRGBD1\n"

CATEGORY_NAMES = ("lateral-23", "lateral-22", "dorsal-23", "dorsal-22")


@dataclass
class RgbdRaster:
    width: int
    height: int
    rgb: np.ndarray  # (height, width, 3) uint8
    depth: np.ndarray  # (height, width) float32, millimeters, 0 = no reading

    def validate(self) -> None:
        if self.rgb.shape != (self.height, self.width, 3) or self.rgb.dtype != np.uint8:
            raise FormatError(f"rgb plane has shape {self.rgb.shape}, dtype {self.rgb.dtype}")
        if self.depth.shape != (self.height, self.width) or self.depth.dtype != np.float32:
            raise FormatError(f"depth plane has shape {self.depth.shape}, dtype {self.depth.dtype}")
        if np.any(self.depth < 0):
            raise FormatError("depth plane contains negative readings")


@dataclass
class SampleRecord:
    sample_id: str
    specimen_id: str
    rotation_deg: int
    raster: RgbdRaster
    human_view: View
    human_rostrum: RostrumState
    gt_view: View
    gt_rostrum: RostrumState
    gt_skeleton: VirtualSkeleton | None = None
    gt_measurements_cm: MeasurementSet | None = None


@dataclass
class CorpusSplit:
    train_ids: frozenset[str]
    val_ids: frozenset[str]
    test_ids: frozenset[str]
    seed: int


def variant_name(view: View, rostrum: RostrumState) -> str:
    n = 23 if rostrum is RostrumState.INTACT else 22
    return f"{view.value}-{n}"


def parse_variant(name: str) -> tuple[View, RostrumState]:
    try:
        view_part, count_part = name.split("-")
        view = View(view_part)
        count = int(count_part)
    except ValueError as e:
        raise SchemaError(f"unknown category name {name!r}") from e
    if count not in (22, 23):
        raise SchemaError(f"unknown category name {name!r}")
    return view, RostrumState.INTACT if count == 23 else RostrumState.BROKEN


# --- COCO keypoints ---------------------------------------------------------


def load_coco_keypoints(path) -> list[tuple[str, VirtualSkeleton]]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ParseError(f"cannot parse COCO file {path}: {e}") from e
    try:
        images = {img["id"]: img["file_name"] for img in doc["images"]}
        categories = {cat["id"]: cat["name"] for cat in doc["categories"]}
        annotations = doc["annotations"]
    except (KeyError, TypeError) as e:
        raise ParseError(f"COCO file {path} is missing required sections: {e}") from e

    out: list[tuple[str, VirtualSkeleton]] = []
    for ann in annotations:
        ann_id = ann.get("id")
        view, rostrum = parse_variant(categories[ann["category_id"]])
        flat = ann["keypoints"]
        if len(flat) % 3 != 0 or len(flat) // 3 not in (22, 23):
            raise SchemaError(
                f"annotation {ann_id}: {len(flat)} values is not a 22- or "
                f"23-keypoint triplet list"
            )
        n = len(flat) // 3
        expected = 23 if rostrum is RostrumState.INTACT else 22
        if n != expected:
            raise SchemaError(
                f"annotation {ann_id}: {n} keypoints but category says {expected}"
            )
        start = 1 if n == 23 else 2
        kps = tuple(
            Keypoint(index=start + i, x=flat[3 * i], y=flat[3 * i + 1], visible=flat[3 * i + 2] != 0)
            for i in range(n)
        )
        sample_id = Path(images[ann["image_id"]]).stem
        out.append((sample_id, VirtualSkeleton(view=view, rostrum=rostrum, keypoints=kps)))
    return out


def write_coco_keypoints(entries: list[tuple[str, VirtualSkeleton]], path) -> None:
    cat_ids = {name: i + 1 for i, name in enumerate(CATEGORY_NAMES)}
    images = []
    annotations = []
    for i, (sample_id, skel) in enumerate(entries):
        image_id = i + 1
        images.append({"id": image_id, "file_name": f"{sample_id}.rgbd"})
        flat: list[float] = []
        for kp in sorted(skel.keypoints, key=lambda k: k.index):
            flat.extend([kp.x, kp.y, 2 if kp.visible else 0])
        annotations.append(
            {
                "id": image_id,
                "image_id": image_id,
                "category_id": cat_ids[skel.variant],
                "keypoints": flat,
                "num_keypoints": len(skel.keypoints),
            }
        )
    doc = {
        "images": images,
        "annotations": annotations,
        "categories": [{"id": cid, "name": name} for name, cid in cat_ids.items()],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(doc, f)


# --- measurement CSV --------------------------------------------------------


def load_measurement_csv(path) -> dict[str, MeasurementSet]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        if not header or header[0] != "sample_id":
            raise ParseError(f"{path}: first column must be sample_id")
        for col in header[1:]:
            if col not in VARIABLE_NAMES:
                raise UnknownVariable(f"{path}: unknown variable column {col!r}")
        out: dict[str, MeasurementSet] = {}
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}: row for {row[0]!r} has {len(row)} cells")
            values = {
                col: float(cell)
                for col, cell in zip(header[1:], row[1:])
                if cell.strip() != ""
            }
            out[row[0]] = MeasurementSet(unit=Unit.CENTIMETERS, values=values)
    return out


def write_measurement_csv(measurements: dict[str, MeasurementSet], path) -> None:
    columns = [v for v in VARIABLE_NAMES if any(v in m.values for m in measurements.values())]
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["sample_id"] + columns)
        for sample_id in sorted(measurements):
            m = measurements[sample_id]
            writer.writerow(
                [sample_id] + [repr(m.values[c]) if c in m.values else "" for c in columns]
            )


# --- raster format ----------------------------------------------------------


def write_raster(raster: RgbdRaster, path) -> None:
    raster.validate()
    with open(path, "wb") as f:
        f.write(RASTER_MAGIC)
        f.write(struct.pack("<IIB", raster.width, raster.height, 4))
        f.write(np.ascontiguousarray(raster.rgb).tobytes())
        f.write(np.ascontiguousarray(raster.depth.astype("<f4")).tobytes())


def read_raster(path) -> RgbdRaster:
    with open(path, "rb") as f:
        data = f.read()
    return raster_from_bytes(data, name=str(path))


def raster_from_bytes(data: bytes, name: str = "<bytes>") -> RgbdRaster:
    header_len = len(RASTER_MAGIC) + struct.calcsize("<IIB")
    if len(data) < header_len or data[: len(RASTER_MAGIC)] != RASTER_MAGIC:
        raise FormatError(f"{name}: bad magic or truncated header")
    width, height, channels = struct.unpack_from("<IIB", data, len(RASTER_MAGIC))
    if channels != 4:
        raise FormatError(f"{name}: unsupported channel descriptor {channels}")
    rgb_len = height * width * 3
    depth_len = height * width * 4
    if len(data) != header_len + rgb_len + depth_len:
        raise FormatError(f"{name}: truncated raster payload")
    rgb = np.frombuffer(data, dtype=np.uint8, count=rgb_len, offset=header_len)
    depth = np.frombuffer(data, dtype="<f4", count=height * width, offset=header_len + rgb_len)
    return RgbdRaster(
        width=width,
        height=height,
        rgb=rgb.reshape(height, width, 3).copy(),
        depth=depth.reshape(height, width).astype(np.float32),
    )


# --- splits -----------------------------------------------------------------


def make_split(
    corpus: list[SampleRecord], fractions: tuple[float, float, float], seed: int
) -> CorpusSplit:
    """Specimen-exclusive train/val/test split, deterministic per seed."""
    if not corpus:
        raise EmptyCorpus("cannot split an empty corpus")
    if any(f <= 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must be positive and sum to 1, got {fractions}")
    by_specimen: dict[str, list[str]] = {}
    for rec in corpus:
        by_specimen.setdefault(rec.specimen_id, []).append(rec.sample_id)
    specimens = sorted(by_specimen)
    rng = np.random.default_rng(seed)
    rng.shuffle(specimens)
    n = len(specimens)
    n_train = round(fractions[0] * n)
    n_val = round(fractions[1] * n)
    n_train = min(n_train, n)
    n_val = min(n_val, n - n_train)
    groups = (specimens[:n_train], specimens[n_train : n_train + n_val], specimens[n_train + n_val :])
    ids = [frozenset(sid for spec in g for sid in by_specimen[spec]) for g in groups]
    return CorpusSplit(train_ids=ids[0], val_ids=ids[1], test_ids=ids[2], seed=seed)


# --- corpus directory layout ------------------------------------------------
#
# corpus_dir/
#   rasters/<sample_id>.rgbd
#   annotations.json          COCO keypoints
#   measurements.csv          ground-truth centimeters
#   meta.csv                  ids, rotation, human + ground-truth labels


def save_corpus(corpus: list[SampleRecord], directory) -> None:
    directory = Path(directory)
    (directory / "rasters").mkdir(parents=True, exist_ok=True)
    entries = []
    measurements = {}
    with open(directory / "meta.csv", "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(
            [
                "sample_id",
                "specimen_id",
                "rotation_deg",
                "human_view",
                "human_rostrum",
                "gt_view",
                "gt_rostrum",
            ]
        )
        for rec in corpus:
            write_raster(rec.raster, directory / "rasters" / f"{rec.sample_id}.rgbd")
            writer.writerow(
                [
                    rec.sample_id,
                    rec.specimen_id,
                    rec.rotation_deg,
                    rec.human_view.value,
                    rec.human_rostrum.value,
                    rec.gt_view.value,
                    rec.gt_rostrum.value,
                ]
            )
            if rec.gt_skeleton is not None:
                entries.append((rec.sample_id, rec.gt_skeleton))
            if rec.gt_measurements_cm is not None:
                measurements[rec.sample_id] = rec.gt_measurements_cm
    write_coco_keypoints(entries, directory / "annotations.json")
    write_measurement_csv(measurements, directory / "measurements.csv")


def load_corpus(directory) -> list[SampleRecord]:
    directory = Path(directory)
    skeletons = dict(load_coco_keypoints(directory / "annotations.json"))
    measurements = load_measurement_csv(directory / "measurements.csv")
    records = []
    with open(directory / "meta.csv", "r", encoding="utf-8", newline="") as f:
        for row in csv.DictReader(f):
            sample_id = row["sample_id"]
            records.append(
                SampleRecord(
                    sample_id=sample_id,
                    specimen_id=row["specimen_id"],
                    rotation_deg=int(row["rotation_deg"]),
                    raster=read_raster(directory / "rasters" / f"{sample_id}.rgbd"),
                    human_view=View(row["human_view"]),
                    human_rostrum=RostrumState(row["human_rostrum"]),
                    gt_view=View(row["gt_view"]),
                    gt_rostrum=RostrumState(row["gt_rostrum"]),
                    gt_skeleton=skeletons.get(sample_id),
                    gt_measurements_cm=measurements.get(sample_id),
                )
            )
    return records


def rgb_to_ppm(rgb: np.ndarray) -> bytes:
    """Encode an (H, W, 3) uint8 array as binary PPM (P6)."""
    h, w, _ = rgb.shape
    buf = io.BytesIO()
    buf.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
    buf.write(np.ascontiguousarray(rgb).tobytes())
    return buf.getvalue()
