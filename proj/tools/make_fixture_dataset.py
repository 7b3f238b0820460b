#!/usr/bin/env python3
"""Regenerate the test fixture dataset under tests/fixtures/dataset.

Three tiny videos with analytically known masks:
  vid_a  5 frames, 32x32, an 8x8 square sliding right 2 px per frame
  vid_b  4 frames, 24x24, a static 6x6 square and a drifting 5x5 square
  img_c  1 frame, 16x16, a single 6x6 patch (the image path)
"""

import argparse
import json
import pathlib
import shutil


def rle_encode(bits):
    runs = [0]
    current = 0
    for b in bits:
        if b == current:
            runs[-1] += 1
        else:
            runs.append(1)
            current = b
    if len(runs) > 1 and runs[-1] == 0:
        runs.pop()
    return runs


def square_bits(h, w, x0, y0, side):
    bits = [0] * (h * w)
    for y in range(y0, y0 + side):
        for x in range(x0, x0 + side):
            bits[y * w + x] = 1
    return bits


def write_mask(path, h, w, bits):
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"height": h, "width": w, "runs": rle_encode(bits)}
    path.write_text(json.dumps(doc, separators=(",", ":")) + "\n")


def write_pgm(path, h, w):
    path.parent.mkdir(parents=True, exist_ok=True)
    header = f"P5\n{w} {h}\n255\n".encode()
    path.write_bytes(header + bytes([128] * (h * w)))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--out",
        type=pathlib.Path,
        default=pathlib.Path(__file__).resolve().parent.parent / "tests/fixtures/dataset",
    )
    args = parser.parse_args()
    root = args.out
    if root.exists():
        shutil.rmtree(root)
    root.mkdir(parents=True)

    manifest = {
        "videos": {
            "vid_a": {"num_frames": 5, "height": 32, "width": 32},
            "vid_b": {"num_frames": 4, "height": 24, "width": 24},
            "img_c": {"num_frames": 1, "height": 16, "width": 16, "fps": 1.0},
        }
    }
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")

    for t in range(5):
        write_mask(
            root / f"vid_a/masks/obj1/{t:05d}.mask.json",
            32, 32, square_bits(32, 32, 4 + 2 * t, 4, 8),
        )
    for t in range(4):
        write_mask(
            root / f"vid_b/masks/obj1/{t:05d}.mask.json",
            24, 24, square_bits(24, 24, 2, 2, 6),
        )
        write_mask(
            root / f"vid_b/masks/obj2/{t:05d}.mask.json",
            24, 24, square_bits(24, 24, 10 + t, 12, 5),
        )
    write_mask(root / "img_c/masks/obj1/00000.mask.json", 16, 16,
               square_bits(16, 16, 5, 5, 6))
    write_pgm(root / "img_c/frames/00000.pgm", 16, 16)

    queries = [
        {"id": "q1", "video_id": "vid_a", "expression": "the square moving right",
         "gt_object_ids": ["obj1"], "target_frame": 2},
        {"id": "q2", "video_id": "vid_b", "expression": "both shapes",
         "gt_object_ids": ["obj1", "obj2"], "target_frame": 1},
        {"id": "q3", "video_id": "vid_b", "expression": "the small drifting block",
         "gt_object_ids": ["obj2"], "target_frame": 3},
        {"id": "q4", "video_id": "img_c", "expression": "the centered patch",
         "gt_object_ids": ["obj1"]},
        {"id": "q5", "video_id": "vid_a", "expression": "the square near the left edge",
         "gt_object_ids": ["obj1"]},
    ]
    with open(root / "queries.jsonl", "w") as f:
        for q in queries:
            f.write(json.dumps(q) + "\n")

    difficulty = [
        {"query_id": "q1", "scene": 4, "segmentation": 6, "temporal": 5, "motion": 3,
         "language": 7},
        {"query_id": "q2", "scene": 3, "segmentation": 3, "temporal": 3, "motion": 3,
         "language": 3},
        {"query_id": "q3", "scene": 10, "segmentation": 10, "temporal": 10, "motion": 10,
         "language": 2},
    ]
    with open(root / "difficulty.jsonl", "w") as f:
        for d in difficulty:
            f.write(json.dumps(d) + "\n")

    print(f"wrote {root}")


if __name__ == "__main__":
    main()
