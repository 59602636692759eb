#!/usr/bin/env python3
"""Writes the diacritic-rich synthetic scoring corpus under data/sensitivity/.

Every image has a run of three short, lightly marked syllables plus one
long, heavily marked syllable. The two references keep the short run in
order and move the long syllable around. The candidate reproduces the short
run and gets the long syllable wrong (a different heavily marked one).
"""
import json
import random
from pathlib import Path

SHORT = "a ba ca da ga ha la ma na ta va xa an ban can".split()
LONG = ("nguyễn khuỷu ngoằng nghiệng thuyền trường khuyến nghiêng người luyện "
        "chuyện huyền quyển nguyện xuyến khoảng ngoặt thuở giường dưỡng phượng "
        "tưởng nướng hưởng khuếch ngoẹo quẹo").split()
IMAGES = 60


def main():
    rng = random.Random(1)
    root = Path(__file__).resolve().parent.parent / "data" / "sensitivity"
    root.mkdir(parents=True, exist_ok=True)
    entries, lines = [], []
    for i in range(1, IMAGES + 1):
        image_id = f"syn{i:03d}"
        run = rng.sample(SHORT, 3)
        right, wrong = rng.sample(LONG, 2)
        refs = [" ".join(run + [right]), " ".join([right] + run)]
        entries.append({
            "image_id": image_id,
            "file_name": f"{image_id}.jpg",
            "captions": [{"id": k + 1, "caption": c} for k, c in enumerate(refs)],
        })
        lines.append(f"{image_id}\t{' '.join(run + [wrong])}")
    (root / "references.json").write_text(
        json.dumps(entries, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    (root / "candidates.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
