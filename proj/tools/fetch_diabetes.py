#!/usr/bin/env python3
"""Write the diabetes data of Efron, Hastie, Johnstone and Tibshirani (2004,
"Least Angle Regression") as a CSV with columns AGE..GLU and response Y.

Sources, in order: the copy bundled with scikit-learn (raw, unscaled values),
then the public tab-separated file from the LARS paper's web page. The CSV is
written in a canonical format and verified against a SHA-256 checksum.
"""
import argparse
import gzip
import hashlib
import io
import os
import sys
import urllib.request

COLUMNS = ["AGE", "SEX", "BMI", "MAP", "TC", "LDL", "HDL", "TCH", "LTG", "GLU", "Y"]
URL = "https://www4.stat.ncsu.edu/~boos/var.select/diabetes.tab.txt"
SHA256 = "f6756388233d8eb0db2d0eaa215943574da39c2b45fa216ba09e48fc44db75a6"


def fmt(v):
    s = repr(float(v))
    return s[:-2] if s.endswith(".0") else s


def from_sklearn():
    import sklearn  # noqa: F401

    base = os.path.join(os.path.dirname(sklearn.__file__), "datasets", "data")
    with gzip.open(os.path.join(base, "diabetes_data_raw.csv.gz"), "rt") as f:
        X = [[float(t) for t in line.split()] for line in f if line.strip()]
    with gzip.open(os.path.join(base, "diabetes_target.csv.gz"), "rt") as f:
        y = [float(line) for line in f if line.strip()]
    return [row + [t] for row, t in zip(X, y)]


def from_url():
    with urllib.request.urlopen(URL, timeout=30) as r:
        text = r.read().decode("utf-8")
    rows = []
    for line in io.StringIO(text).read().splitlines()[1:]:
        if line.strip():
            rows.append([float(t) for t in line.split()])
    return rows


def render(rows):
    out = io.StringIO()
    out.write(",".join(COLUMNS) + "\n")
    for r in rows:
        out.write(",".join(fmt(v) for v in r) + "\n")
    return out.getvalue().encode("utf-8")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data", "diabetes.csv"))
    ap.add_argument("--print-checksum", action="store_true")
    args = ap.parse_args()

    blob = None
    for source in (from_sklearn, from_url):
        try:
            rows = source()
        except Exception as e:  # try the next source
            print(f"{source.__name__}: {e}", file=sys.stderr)
            continue
        if len(rows) == 442 and all(len(r) == 11 for r in rows):
            blob = render(rows)
            break
    if blob is None:
        print("could not obtain the diabetes data", file=sys.stderr)
        return 1
    digest = hashlib.sha256(blob).hexdigest()
    if args.print_checksum:
        print(digest)
        return 0
    if digest != SHA256:
        print(f"checksum mismatch: {digest}", file=sys.stderr)
        return 2
    os.makedirs(os.path.dirname(os.path.abspath(args.out)), exist_ok=True)
    with open(args.out, "wb") as f:
        f.write(blob)
    print(f"wrote {args.out} ({digest})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
