#!/usr/bin/env python3
"""Download the CoNLL-2000 chunking shared-task data into data/conll2000/.

The corpus is freely available; this script tries the shared-task site
first and a well-known mirror second. Run it from the repository root on
a machine with outbound network access, then run the acceptance suite.
"""

import gzip
import io
import os
import sys
import urllib.request
import zipfile

SOURCES = {
    "gz": [
        ("https://www.clips.uantwerpen.be/conll2000/chunking/train.txt.gz", "train.txt"),
        ("https://www.clips.uantwerpen.be/conll2000/chunking/test.txt.gz", "test.txt"),
    ],
    "zip": "https://raw.githubusercontent.com/nltk/nltk_data/gh-pages/packages/corpora/conll2000.zip",
}

OUT_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "data", "conll2000")


def fetch(url):
    print(f"fetching {url}")
    with urllib.request.urlopen(url, timeout=60) as resp:
        return resp.read()


def main():
    os.makedirs(OUT_DIR, exist_ok=True)
    try:
        for url, name in SOURCES["gz"]:
            data = gzip.decompress(fetch(url))
            with open(os.path.join(OUT_DIR, name), "wb") as fh:
                fh.write(data)
        print(f"done: {OUT_DIR}")
        return 0
    except OSError as exc:
        print(f"shared-task site failed ({exc}); trying the corpus mirror")
    try:
        archive = zipfile.ZipFile(io.BytesIO(fetch(SOURCES["zip"])))
        for name in ("train.txt", "test.txt"):
            with archive.open(f"conll2000/{name}") as src:
                with open(os.path.join(OUT_DIR, name), "wb") as fh:
                    fh.write(src.read())
        print(f"done: {OUT_DIR}")
        return 0
    except OSError as exc:
        print(f"mirror failed too ({exc}); fetch the files manually and place\n"
              f"train.txt and test.txt under {OUT_DIR}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
