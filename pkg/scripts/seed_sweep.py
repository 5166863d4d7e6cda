"""Run the MNIST 0/1 pipeline over several master seeds and print a table.

    python3 scripts/seed_sweep.py --seeds 0 1 2 3 4

Columns: NQE final loss per pair, final training-set L_PQC for the NQE and raw
ZZ embeddings, the risk lower bound under the NQE embedding, and accuracy on
all 500 images for both embeddings.
"""
import argparse
from pathlib import Path

from nqe_dqc1 import data, metrics, nqe, pqc
from nqe_dqc1.featuremap import FeatureMapConfig

DATA = Path(__file__).resolve().parents[1] / "data"


def run(seed, fmap):
    raw = data.read_idx_files(DATA / "mnist01-images-idx3-ubyte.gz", DATA / "mnist01-labels-idx1-ubyte.gz")
    chosen = data.select_binary_subset(raw, (0, 1), 500, seed)
    full = data.build_dataset(chosen, data.fit_pca(chosen, 5))
    train, _ = data.split(full, 0.8, seed)
    params, trace = nqe.train_nqe(train, nqe.NqeTrainConfig(seed=seed))
    row = [trace.records[-1].loss_per_pair]
    accs = []
    for p in (params, None):
        states = metrics.embedded_states(p, train.features, fmap)
        theta, _ = pqc.train_pqc(states, train.labels, pqc.PqcTrainConfig(seed=seed))
        row.append(pqc.pqc_loss(theta, states, train.labels))
        accs.append(pqc.evaluate_accuracy(theta, metrics.embedded_states(p, full.features, fmap), full.labels))
    row.append(metrics.risk_lower_bound(metrics.build_ensembles(params, train, fmap)))
    return row + accs


def main():
    ap = argparse.ArgumentParser(description="seed sweep of the MNIST pipeline")
    ap.add_argument("--seeds", type=int, nargs="+", default=list(range(5)))
    args = ap.parse_args()
    fmap = FeatureMapConfig()
    print("seed  nqe_loss  lpqc_nqe  lpqc_raw  risk_lb  acc_nqe  acc_raw")
    for s in args.seeds:
        vals = run(s, fmap)
        print(f"{s:4d}  " + "  ".join(f"{v:8.4f}" for v in vals))


if __name__ == "__main__":
    main()
