#!/usr/bin/env python3
"""Download the GoEmotions train/dev/test TSV splits.

Usage: python3 scripts/fetch_goemotions.py [target_dir]

Writes train.tsv, dev.tsv, and test.tsv (each row: text, comma-joined
label ids, example id) into target_dir (default: data/goemotions/).
Needs outbound HTTPS access to github.com.
"""

import sys
import urllib.request
from pathlib import Path

BASE = (
    "https://raw.githubusercontent.com/google-research/google-research/"
    "master/goemotions/data/{split}.tsv"
)
SPLITS = ("train", "dev", "test")


def main() -> int:
    target = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("data/goemotions")
    target.mkdir(parents=True, exist_ok=True)
    for split in SPLITS:
        url = BASE.format(split=split)
        path = target / f"{split}.tsv"
        print(f"fetching {url}")
        with urllib.request.urlopen(url) as response:
            path.write_bytes(response.read())
        lines = path.read_text(encoding="utf-8").count("\n")
        print(f"  wrote {path} ({lines} rows)")
    print("done")
    return 0


if __name__ == "__main__":
    sys.exit(main())
