"""Write the digit 0/1 MNIST images bundled with mlxtend as IDX files.

mlxtend ships 5000 MNIST images (500 per digit) as ``mnist_5k.csv.gz``.
This pulls the 0s and 1s out of a downloaded wheel and writes the standard
IDX containers into ``data/``:

    pip download mlxtend --no-deps -d /tmp/mlx
    python scripts/make_mnist_fixture.py /tmp/mlx/mlxtend-*.whl
"""
import argparse
import gzip
import io
import struct
import zipfile
from pathlib import Path

import numpy as np

CSV_MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("wheel", type=Path)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[1] / "data")
    args = ap.parse_args()

    with zipfile.ZipFile(args.wheel) as zf:
        raw = gzip.decompress(zf.read(CSV_MEMBER))
    table = np.loadtxt(io.BytesIO(raw), delimiter=",").astype(np.uint8)
    pixels, labels = table[:, :-1], table[:, -1]
    keep = np.isin(labels, (0, 1))
    pixels, labels = pixels[keep], labels[keep]

    args.out.mkdir(parents=True, exist_ok=True)
    n = len(labels)
    img = struct.pack(">IIII", 0x803, n, 28, 28) + pixels.tobytes()
    lab = struct.pack(">II", 0x801, n) + labels.tobytes()
    # mtime=0 keeps the gzip bytes reproducible
    for name, payload in (("mnist01-images-idx3-ubyte.gz", img), ("mnist01-labels-idx1-ubyte.gz", lab)):
        with open(args.out / name, "wb") as fh:
            with gzip.GzipFile(fileobj=fh, mode="wb", mtime=0) as gz:
                gz.write(payload)
    print(f"wrote {n} images ({np.bincount(labels).tolist()} per digit) to {args.out}")


if __name__ == "__main__":
    main()
