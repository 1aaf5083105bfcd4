#!/usr/bin/env python3
# Copyright 2026 The shuffledet Authors
# SPDX-License-Identifier: Apache-2.0
"""Generate the bundled synthetic defect set.

Writes 12 grayscale PGM images of textured steel with painted defects,
YOLO-format labels, two detection sets (an oracle that reproduces the
labels and a corrupted one), and expected.json holding the mAP of each
set as scored by the evaluator in this file.

Usage: make_synthetic_set.py OUT_DIR
"""

import json
import sys
from pathlib import Path

import numpy as np

SIZE = 256
CLASSES = ["rolled_in_scale", "patches", "crazing", "inclusion", "pitted_surface", "scratches"]
IMAGES = 12


def paint(img, rng, cls, box):
    x1, y1, x2, y2 = box
    region = img[y1:y2, x1:x2]
    h, w = region.shape
    if cls == 0:  # rolled-in scale: dark speckle
        region -= 40 * (rng.random((h, w)) < 0.35)
    elif cls == 1:  # patches: bright blob
        yy, xx = np.mgrid[0:h, 0:w]
        region += 50 * np.exp(-(((yy - h / 2) / (h / 3)) ** 2 + ((xx - w / 2) / (w / 3)) ** 2))
    elif cls == 2:  # crazing: crack lines
        for k in range(0, h, 6):
            region[k, :] -= 35
    elif cls == 3:  # inclusion: dark streak along the long side
        if w >= h:
            region[h // 2 - 1:h // 2 + 2, :] -= 60
        else:
            region[:, w // 2 - 1:w // 2 + 2] -= 60
    elif cls == 4:  # pitted surface: dark dots
        for _ in range(max(3, h * w // 80)):
            cy, cx = rng.integers(0, h), rng.integers(0, w)
            region[max(0, cy - 1):cy + 2, max(0, cx - 1):cx + 2] -= 45
    else:  # scratches: bright diagonal
        n = min(h, w)
        idx = np.arange(n)
        region[idx, (idx * (w - 1)) // max(1, n - 1)] += 70


def random_box(rng, taken):
    for _ in range(200):
        w = 2 * int(rng.integers(12, 40))
        h = 2 * int(rng.integers(12, 40))
        x1 = 2 * int(rng.integers(0, (SIZE - w) // 2))
        y1 = 2 * int(rng.integers(0, (SIZE - h) // 2))
        box = (x1, y1, x1 + w, y1 + h)
        if all(iou(box, t) == 0.0 for t in taken):
            return box
    raise RuntimeError("could not place box")


def iou(a, b):
    iw = max(0.0, min(a[2], b[2]) - max(a[0], b[0]))
    ih = max(0.0, min(a[3], b[3]) - max(a[1], b[1]))
    inter = iw * ih
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return inter / union if union > 0 else 0.0


def voc_ap(scored, gt_count):
    """All-point AP with the classic mrec/mpre sentinels."""
    if gt_count == 0:
        return 0.0
    scored = sorted(scored, key=lambda s: -s[0])
    tp = fp = 0
    mrec, mpre = [0.0], [0.0]
    for _, hit in scored:
        tp += hit
        fp += not hit
        mrec.append(tp / gt_count)
        mpre.append(tp / (tp + fp))
    mrec.append(1.0)
    mpre.append(0.0)
    for i in range(len(mpre) - 2, -1, -1):
        mpre[i] = max(mpre[i], mpre[i + 1])
    return sum((mrec[i] - mrec[i - 1]) * mpre[i] for i in range(1, len(mrec)) if mrec[i] != mrec[i - 1])


def evaluate(dets, gts, nc, thr=0.5):
    """dets: {image: [(cls, score, box)]}, gts: {image: [(cls, box)]}."""
    aps, recalls = [], []
    hits = {}
    for c in range(nc):
        scored = []
        gt_total = 0
        tp_total = 0
        for image in sorted(gts):
            g = [b for (k, b) in gts[image] if k == c]
            gt_total += len(g)
            used = [False] * len(g)
            mine = [(s, i, b) for i, (k, s, b) in enumerate(dets.get(image, [])) if k == c]
            mine.sort(key=lambda t: (-t[0], t[1]))
            for s, _, b in mine:
                best, best_iou = -1, thr
                for j, gb in enumerate(g):
                    v = iou(b, gb)
                    if not used[j] and v >= best_iou and (best < 0 or v > best_iou):
                        best, best_iou = j, v
                if best >= 0:
                    used[best] = True
                    hits.setdefault(image, set()).add(c)
                    tp_total += 1
                scored.append((s, best >= 0))
        aps.append(voc_ap(scored, gt_total))
        recalls.append(tp_total / gt_total if gt_total else 0.0)
    present = {image: {k for (k, _) in g} for image, g in gts.items() if g}
    ok = sum(1 for image, cls in present.items() if cls <= hits.get(image, set()))
    return {"map50": sum(aps) / nc, "ap": aps, "recall": recalls, "image_recall": ok / len(present)}


def corrupt(rng, image_index, gts):
    """Deterministic degradation of the oracle detections for one image."""
    out = []
    for n, (cls, box) in enumerate(gts):
        x1, y1, x2, y2 = box
        w = x2 - x1
        mode = (image_index + n) % 5
        score = round(0.95 - 0.03 * ((image_index * 7 + n * 3) % 11), 4)
        if mode == 0:
            out.append((cls, score, box))
        elif mode == 1:  # shifted by 60% of the width: IoU well below 0.5
            dx = int(0.6 * w)
            out.append((cls, score, (x1 + dx, y1, x2 + dx, y2)))
        elif mode == 2:  # right box, wrong class
            out.append(((cls + 1) % len(CLASSES), score, box))
        elif mode == 3:  # missed entirely, plus a confident false alarm elsewhere
            out.append((cls, 0.99 - 0.01 * image_index, (0, 0, 10, 10)))
        else:  # slightly loose box (IoU ~0.8) with a low score
            out.append((cls, round(score / 3, 4), (x1 - 2, y1 - 2, x2 + 2, y2 + 2)))
    return out


def write_detections(path, image_name, dets):
    rows = [{"box": [float(v) for v in box], "class_id": cls, "class_name": CLASSES[cls], "score": score}
            for cls, score, box in sorted(dets, key=lambda d: -d[1])]
    path.write_text(json.dumps({"detections": rows, "image": image_name}, indent=2, sort_keys=True) + "\n")


def main():
    out = Path(sys.argv[1])
    for sub in ("images", "labels", "oracle", "corrupted"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(20260517)
    all_gts, oracle, degraded = {}, {}, {}
    for i in range(IMAGES):
        name = f"defect_{i:02d}"
        img = 128 + 12 * rng.standard_normal((SIZE, SIZE))
        img += 10 * np.sin(np.arange(SIZE) / 9.0)[None, :]  # rolling marks
        boxes = []
        gts = []
        for n in range(1 + i % 3):
            cls = (i + 2 * n) % len(CLASSES)
            box = random_box(rng, boxes)
            boxes.append(box)
            paint(img, rng, cls, box)
            gts.append((cls, box))
        pixels = np.clip(np.rint(img), 0, 255).astype(np.uint8)
        (out / "images" / f"{name}.pgm").write_bytes(f"P5\n{SIZE} {SIZE}\n255\n".encode() + pixels.tobytes())
        lines = []
        for cls, (x1, y1, x2, y2) in gts:
            cx, cy, w, h = (x1 + x2) / 2 / SIZE, (y1 + y2) / 2 / SIZE, (x2 - x1) / SIZE, (y2 - y1) / SIZE
            lines.append(f"{cls} {cx:.8f} {cy:.8f} {w:.8f} {h:.8f}")
        (out / "labels" / f"{name}.txt").write_text("\n".join(lines) + "\n")
        all_gts[name] = gts
        oracle[name] = [(cls, 1.0, box) for cls, box in gts]
        degraded[name] = corrupt(rng, i, gts)
        write_detections(out / "oracle" / f"{name}.json", f"{name}.pgm", oracle[name])
        write_detections(out / "corrupted" / f"{name}.json", f"{name}.pgm", degraded[name])

    expected = {"oracle": evaluate(oracle, all_gts, len(CLASSES)),
                "corrupted": evaluate(degraded, all_gts, len(CLASSES))}
    (out / "expected.json").write_text(json.dumps(expected, indent=2, sort_keys=True) + "\n")
    print(json.dumps({k: v["map50"] for k, v in expected.items()}))


if __name__ == "__main__":
    main()
