"""Command-line experiment runner.

Every stage reads and writes files in one output directory:

    prepare-data       dataset.json
    train-nqe          nqe_params.json, nqe_loss.csv, checkpoints/nqe_ckpt_XXX.json
    eval-separability  trace_distance.csv
    train-pqc          pqc_loss_<mode>.csv, pqc_theta_<mode>.json
    classify           predictions_<mode>.csv, summary_<mode>.json
    reproduce          all of the above, then manifest.json

``<mode>`` is ``nqe`` or ``raw-zz``. CSV files open with a ``#`` comment line
carrying the master seed and config digest; JSON files carry them under
``meta``. Wall-clock times go to ``run.log`` only, so reruns with the same
seed reproduce every CSV and JSON byte for byte.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import data as data_mod
from . import embedder, metrics, nqe, pqc
from .errors import ConfigError, DomainError, FormatError, NqeError, NumericError, SchemaError, ShapeError
from .featuremap import FeatureMapConfig

__version__ = "0.1.0"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

MODES = ("nqe", "raw-zz")
STAGE_ORDER = ("prepare-data", "train-nqe", "eval-separability", "train-pqc", "classify")

log = logging.getLogger("nqe_dqc1")


@dataclass
class DataConfig:
    images: str | None = "data/mnist01-images-idx3-ubyte.gz"
    labels: str | None = "data/mnist01-labels-idx1-ubyte.gz"
    digits: tuple[int, int] = (0, 1)
    count: int = 500
    pca_components: int = 5
    train_fraction: float = 0.8
    # {"n_per_class": int, "separation": float}; replaces the IDX files when set
    synthetic: dict | None = None


@dataclass
class NqeSection:
    iterations: int = 15
    batch_pairs: int = 10
    learning_rate: float = 0.02
    optimizer: str = "adam"
    beta1: float = 0.0
    beta2: float = 0.999
    adam_eps: float = 1e-8
    sampled_gradient: bool = False
    layer_sizes: tuple[int, ...] = embedder.DEFAULT_LAYER_SIZES
    init_output_gain: float = 0.3


@dataclass
class PqcSection:
    iterations: int = 30
    batch_size: int = 10
    learning_rate: float = 0.5


@dataclass
class ExperimentConfig:
    data: DataConfig = field(default_factory=DataConfig)
    feature_map: FeatureMapConfig = field(default_factory=FeatureMapConfig)
    nqe: NqeSection = field(default_factory=NqeSection)
    pqc: PqcSection = field(default_factory=PqcSection)
    estimator: str = "exact"
    shots: int | None = None
    eval_pairs: int = 20
    seed: int = 0
    out: str = "runs/default"
    base_dir: str = "."  # relative data paths resolve against this

    def snapshot(self) -> dict:
        """Config as a JSON-ready dict; the output location is not part of the experiment."""
        doc = dataclasses.asdict(self)
        doc.pop("base_dir")
        doc.pop("out")
        return doc

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.snapshot(), sort_keys=True).encode()).hexdigest()

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def nqe_config(self) -> nqe.NqeTrainConfig:
        return nqe.NqeTrainConfig(
            **{k: v for k, v in dataclasses.asdict(self.nqe).items()},
            estimator=self.estimator, shots=self.shots, seed=self.seed, feature_map=self.feature_map,
        )

    def pqc_config(self) -> pqc.PqcTrainConfig:
        return pqc.PqcTrainConfig(**dataclasses.asdict(self.pqc), estimator=self.estimator,
                                  shots=self.shots, seed=self.seed)

    def validate(self, need_files: bool = True) -> None:
        if self.estimator not in ("exact", "sampled"):
            raise ConfigError(f"estimator must be 'exact' or 'sampled', got {self.estimator!r}")
        if self.estimator == "sampled" and (self.shots is None or self.shots < 1):
            raise ConfigError("--estimator sampled needs --shots >= 1")
        if self.eval_pairs < 1:
            raise ConfigError("eval_pairs must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be >= 0")
        try:
            self.nqe_config()
            self.pqc_config()
        except (DomainError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        if self.data.synthetic is None and need_files:
            for key in ("images", "labels"):
                path = getattr(self.data, key)
                if path is None:
                    raise ConfigError(f"data.{key} is not set (use --{key} or set data.synthetic)")
                if not self.resolve(path).is_file():
                    raise FileNotFoundError(f"--{key}: file not found: {self.resolve(path)}")


def _build(cls, doc: dict, where: str):
    if not isinstance(doc, dict):
        raise ConfigError(f"{where} must be a JSON object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(doc) - names
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    kwargs = dict(doc)
    for key in ("digits", "layer_sizes"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def config_from_dict(doc: dict, base_dir: str = ".") -> ExperimentConfig:
    doc = dict(doc)
    sections = {
        "data": DataConfig,
        "feature_map": FeatureMapConfig,
        "nqe": NqeSection,
        "pqc": PqcSection,
    }
    kwargs = {name: _build(cls, doc.pop(name, {}), name) for name, cls in sections.items()}
    cfg = _build(ExperimentConfig, {**doc, **kwargs}, "config")
    cfg.base_dir = base_dir
    return cfg


def load_config(path: str | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"--config: file not found: {p}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--config: {p} is not valid JSON ({exc})") from exc
    return config_from_dict(doc, str(p.parent))


# --- output helpers ---------------------------------------------------------

class Run:
    """Output directory bound to a config."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.out = Path(cfg.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.meta = {"seed": cfg.seed, "config_sha256": cfg.digest(), "version": __version__}

    def path(self, name: str) -> Path:
        return self.out / name

    def write_json(self, name: str, doc: dict) -> Path:
        doc = {**doc, "meta": self.meta}
        p = self.path(name)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(json.dumps(doc, sort_keys=True) + "\n")
        return p

    def read_json(self, name: str) -> dict:
        p = self.path(name)
        if not p.is_file():
            raise FileNotFoundError(f"{p} is missing; run the earlier stage first")
        try:
            return json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{p}: not valid JSON ({exc})") from exc

    def write_csv(self, name: str, header: str, rows) -> Path:
        lines = [f"# seed={self.meta['seed']} config_sha256={self.meta['config_sha256']}", header]
        lines += [",".join(_fmt(v) for v in row) for row in rows]
        p = self.path(name)
        p.write_text("\n".join(lines) + "\n")
        return p

    def log_time(self, stage: str, seconds: float) -> None:
        stamp = time.strftime("%Y-%m-%dT%H:%M:%S%z")
        with open(self.path("run.log"), "a") as fh:
            fh.write(f"{stamp} {stage} {seconds:.3f}s\n")


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def read_csv(path) -> list[dict]:
    """Parse a CSV written by ``Run.write_csv`` (skips the ``#`` line)."""
    lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    header = lines[0].split(",")
    return [dict(zip(header, ln.split(","))) for ln in lines[1:]]


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# --- stages -----------------------------------------------------------------

def _load_run_dataset(run: Run) -> data_mod.Dataset:
    p = run.path("dataset.json")
    if not p.is_file():
        raise FileNotFoundError(f"{p} is missing; run prepare-data first")
    return data_mod.load_dataset(p)


def _splits(run: Run, ds: data_mod.Dataset):
    return data_mod.split(ds, run.cfg.data.train_fraction, run.cfg.seed)


def cmd_prepare_data(run: Run) -> list[Path]:
    cfg = run.cfg
    dc = cfg.data
    if dc.synthetic is not None:
        try:
            ds = data_mod.synthetic_dataset(int(dc.synthetic["n_per_class"]), float(dc.synthetic["separation"]),
                                            cfg.seed, dim=cfg.feature_map.n_angles)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"data.synthetic needs n_per_class and separation ({exc})") from exc
    else:
        images = data_mod.read_idx_files(cfg.resolve(dc.images), cfg.resolve(dc.labels))
        chosen = data_mod.select_binary_subset(images, dc.digits, dc.count, cfg.seed)
        pca = data_mod.fit_pca(chosen, dc.pca_components)
        prov = {"source": "idx", "images": dc.images, "labels": dc.labels, "digits": list(dc.digits),
                "count": dc.count, "seed": cfg.seed}
        ds = data_mod.build_dataset(chosen, pca, dc.digits, prov)
    if ds.features.shape[1] != cfg.feature_map.n_angles:
        raise ConfigError(f"features have {ds.features.shape[1]} columns but the feature map takes "
                          f"{cfg.feature_map.n_angles} angles")
    log.info("prepared %d samples", len(ds))
    doc = json.loads(data_mod.dataset_to_json(ds))
    return [run.write_json("dataset.json", doc)]


def cmd_train_nqe(run: Run) -> list[Path]:
    ds = _load_run_dataset(run)
    train, _ = _splits(run, ds)
    params, trace = nqe.train_nqe(train, run.cfg.nqe_config())
    for r in trace.records:
        log.info("nqe iteration %d loss/pair %.5f", r.iteration, r.loss_per_pair)
    rows = [(r.iteration, r.loss_per_pair, r.mean_hs_same, r.mean_hs_diff) for r in trace.records]
    out = [
        run.write_json("nqe_params.json", params.to_dict()),
        run.write_csv("nqe_loss.csv", "iteration,loss,mean_hs_same,mean_hs_diff", rows),
    ]
    for k, ckpt in enumerate(trace.checkpoints):
        out.append(run.write_json(f"checkpoints/nqe_ckpt_{k:03d}.json", {**ckpt.to_dict(), "iteration": k}))
    return out


def _checkpoints(run: Run) -> list[embedder.MlpParams]:
    files = sorted(run.path("checkpoints").glob("nqe_ckpt_*.json"))
    if not files:
        raise FileNotFoundError(f"no checkpoints under {run.path('checkpoints')}; run train-nqe first")
    return [embedder.MlpParams.from_dict(json.loads(f.read_text())) for f in files]


def _load_embedding(run: Run, mode: str) -> embedder.MlpParams | None:
    if mode == "raw-zz":
        return None
    return embedder.MlpParams.from_dict(run.read_json("nqe_params.json"))


def cmd_eval_separability(run: Run) -> list[Path]:
    ds = _load_run_dataset(run)
    ckpts = _checkpoints(run)
    fmap = run.cfg.feature_map
    rows = []
    for part in _splits(run, ds):
        pairs = metrics.sample_cross_pairs(part, run.cfg.eval_pairs, run.cfg.seed)
        raw_mean, raw_std = metrics.eval_trace_distance_over_training([None], pairs, fmap)[0]
        rows.append((0, raw_mean, raw_std, part.split_tag, "raw-zz"))
        for k, (mean, std) in enumerate(metrics.eval_trace_distance_over_training(ckpts, pairs, fmap)):
            rows.append((k, mean, std, part.split_tag, "nqe"))
        log.info("%s trace distance %.4f -> %.4f", part.split_tag, rows[-len(ckpts)][1], rows[-1][1])
    header = "iteration,mean_trace_distance,std_trace_distance,split,embedding"
    return [run.write_csv("trace_distance.csv", header, rows)]


def _modes(mode: str) -> tuple[str, ...]:
    return MODES if mode == "both" else (mode,)


def cmd_train_pqc(run: Run, mode: str = "both") -> list[Path]:
    ds = _load_run_dataset(run)
    train, _ = _splits(run, ds)
    fmap = run.cfg.feature_map
    out = []
    for m in _modes(mode):
        params = _load_embedding(run, m)
        states = metrics.embedded_states(params, train.features, fmap)
        theta, losses = pqc.train_pqc(states, train.labels, run.cfg.pqc_config())
        final = pqc.pqc_loss(theta, states, train.labels)
        bound = metrics.risk_lower_bound(metrics.build_ensembles(params, train, fmap))
        if not np.all(np.isfinite(theta)):
            raise NumericError(f"PQC training diverged in mode {m}")
        log.info("pqc %s final training loss %.4f (risk lower bound %.4f)", m, final, bound)
        rows = [(k + 1, v, m) for k, v in enumerate(losses)]
        out.append(run.write_csv(f"pqc_loss_{m}.csv", "iteration,loss,embedding_mode", rows))
        out.append(run.write_json(f"pqc_theta_{m}.json", {
            "embedding_mode": m,
            "theta": theta.tolist(),
            "final_train_loss": final,
            "risk_lower_bound": bound,
        }))
    return out


def cmd_classify(run: Run, mode: str = "both") -> list[Path]:
    ds = _load_run_dataset(run)
    _, test = _splits(run, ds)
    test_ids = set(test.ids.tolist())
    fmap = run.cfg.feature_map
    out = []
    for m in _modes(mode):
        theta = np.asarray(run.read_json(f"pqc_theta_{m}.json")["theta"], dtype=float)
        states = metrics.embedded_states(_load_embedding(run, m), ds.features, fmap)
        f, pred = pqc.predict(theta, states)
        in_test = np.array([i in test_ids for i in ds.ids.tolist()])
        rows = [(int(i), fv, int(p), int(y), "test" if t else "train")
                for i, fv, p, y, t in zip(ds.ids, f, pred, ds.labels, in_test)]
        correct = pred == ds.labels
        confusion = {
            f"true_{a}_pred_{b}": int(np.sum((ds.labels == ta) & (pred == tb)))
            for a, ta in (("pos", 1), ("neg", -1)) for b, tb in (("pos", 1), ("neg", -1))
        }
        summary = {
            "embedding_mode": m,
            "n_samples": len(ds),
            "accuracy": float(correct.mean()),
            "test_accuracy": float(correct[in_test].mean()) if in_test.any() else None,
            "confusion": confusion,
        }
        log.info("classify %s accuracy %.4f", m, summary["accuracy"])
        out.append(run.write_csv(f"predictions_{m}.csv", "id,f,predicted_label,true_label,split", rows))
        out.append(run.write_json(f"summary_{m}.json", summary))
    return out


def write_manifest(run: Run, files: list[Path]) -> Path:
    digests = {str(p.relative_to(run.out)): sha256_file(p) for p in sorted(set(files))}
    doc = {
        "config": run.cfg.snapshot(),
        "tool_version": __version__,
        "stages": list(STAGE_ORDER),
        "files": digests,
        "timestamps": "run.log",
    }
    return run.write_json("manifest.json", doc)


def verify_manifest(out_dir) -> list[str]:
    """Names of files whose digest no longer matches the manifest."""
    out_dir = Path(out_dir)
    doc = json.loads((out_dir / "manifest.json").read_text())
    return [name for name, digest in doc["files"].items()
            if not (out_dir / name).is_file() or sha256_file(out_dir / name) != digest]


def cmd_reproduce(run: Run) -> list[Path]:
    files = []
    for stage, fn in (
        ("prepare-data", cmd_prepare_data),
        ("train-nqe", cmd_train_nqe),
        ("eval-separability", cmd_eval_separability),
        ("train-pqc", cmd_train_pqc),
        ("classify", cmd_classify),
    ):
        start = time.perf_counter()
        files += fn(run)
        run.log_time(stage, time.perf_counter() - start)
    files.append(write_manifest(run, files))
    return files


# --- entry point ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nqe-dqc1", description="Neural quantum embedding experiments.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--out", help="output directory")
    common.add_argument("--estimator", choices=("exact", "sampled"))
    common.add_argument("--shots", type=int)
    common.add_argument("--images", help="IDX image file (overrides data.images)")
    common.add_argument("--labels", help="IDX label file (overrides data.labels)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("prepare-data", "train-nqe", "eval-separability", "reproduce"):
        sub.add_parser(name, parents=[common])
    for name in ("train-pqc", "classify"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--embedding", choices=(*MODES, "both"), default="both")
    return parser


def config_from_args(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    for key in ("seed", "out", "estimator", "shots"):
        value = getattr(args, key)
        if value is not None:
            setattr(cfg, key, value)
    for key in ("images", "labels"):
        value = getattr(args, key)
        if value is not None:
            setattr(cfg.data, key, str(Path(value).resolve()))
    cfg.validate(need_files=args.command in ("prepare-data", "reproduce"))
    return cfg


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, (NumericError, FloatingPointError)):
        return EXIT_NUMERIC
    if isinstance(exc, (FormatError, SchemaError, FileNotFoundError, ShapeError, DomainError, NqeError)):
        return EXIT_DATA
    raise exc


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("NQE_DQC1_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        run = Run(cfg)
        start = time.perf_counter()
        if args.command == "reproduce":
            cmd_reproduce(run)
        else:
            fn = {
                "prepare-data": cmd_prepare_data,
                "train-nqe": cmd_train_nqe,
                "eval-separability": cmd_eval_separability,
                "train-pqc": lambda r: cmd_train_pqc(r, args.embedding),
                "classify": lambda r: cmd_classify(r, args.embedding),
            }[args.command]
            fn(run)
            run.log_time(args.command, time.perf_counter() - start)
    except (NqeError, FileNotFoundError, FloatingPointError) as exc:
        code = _exit_code(exc)
        print(f"error: {exc}", file=sys.stderr)
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
