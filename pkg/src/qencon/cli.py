"""Config-driven experiment runner.

Subcommands: sweep-divergence, train, discriminate, bounds, mnist-prep.
Each takes --config (JSON), --out, and --seed; there is no implicit entropy,
and re-running with the same config and seed reproduces output files byte for
byte.  Sweeps emit RFC-4180-style CSV (9 significant digits) plus a
<out>.meta.json sidecar; single runs emit a JSON report whose first block is
the metadata (seed, config hash, and every defaulted decision).

Exit codes: 0 success, 1 config error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import (
    BoundQuery,
    analytic_average_state,
    bound_general,
    bound_ry_layered,
    bound_warmup,
    depth_threshold,
)
from .datasets import (
    IdxFormatError,
    SyntheticTaskSpec,
    generate_dataset,
    load_mnist_idx,
    preprocess_mnist,
    synthetic_spec,
    tile_features,
)
from .discriminate import class_average_states, discriminate_ensemble
from .encoding import FAMILIES, monte_carlo_average, substream
from .learn import LabeledDataset, TrainConfig, evaluate, random_theta, standard_qnn, train
from .metrics import renyi2_vs_mixed


class ConfigError(ValueError):
    pass


KIND_BY_COMMAND = {
    "sweep-divergence": "divergence-sweep",
    "train": "train",
    "discriminate": "discriminate",
    "bounds": "bound",
    "mnist-prep": "mnist-prep",
}


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def _check_keys(cfg: dict, required: set[str], optional: set[str], where: str) -> None:
    if not isinstance(cfg, dict):
        raise ConfigError(f"{where} must be a JSON object")
    unknown = set(cfg) - required - optional
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    missing = required - set(cfg)
    if missing:
        raise ConfigError(f"missing keys in {where}: {sorted(missing)}")


def _config_hash(cfg: dict) -> str:
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _metadata(cfg: dict, seed: int, defaults: dict) -> dict:
    return {
        "tool": "qencon",
        "version": __version__,
        "seed": seed,
        "config_sha256": _config_hash(cfg),
        "defaults_applied": defaults,
        "config": cfg,
    }


def _write_csv(path: str, header: list[str], rows: list[list], metadata: dict) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows([[_fmt(v) for v in row] for row in rows])
    with open(str(path) + ".meta.json", "w") as fh:
        json.dump(metadata, fh, indent=2)
        fh.write("\n")


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _derived_seeds(seed: int, names: list[str]) -> dict[str, int]:
    gen = substream(seed, 0)
    return {name: int(gen.integers(1 << 62)) for name in names}


def _family(cfg: dict, defaults: dict) -> str:
    family = cfg.get("family")
    if family is None:
        family = "StronglyEntanglingRy"
        defaults["family"] = family
    if family not in FAMILIES:
        raise ConfigError(f"unknown family {family!r}; choose from {list(FAMILIES)}")
    return family


def _int_list(cfg: dict, key: str) -> list[int]:
    value = cfg[key]
    if (not isinstance(value, list) or not value
            or any(not isinstance(v, int) or v < 1 for v in value)):
        raise ConfigError(f"{key} must be a non-empty list of positive integers")
    return value


def _sigma(cfg: dict, defaults: dict) -> float:
    sigma = cfg.get("sigma")
    if sigma is None:
        sigma = 0.8
        defaults["sigma"] = sigma
    if not (isinstance(sigma, (int, float)) and sigma > 0):
        raise ConfigError("sigma must be a positive number")
    return float(sigma)


# ---------------------------------------------------------------------------
# Subcommand implementations


def run_divergence_sweep(cfg: dict, seed: int, out: str) -> None:
    defaults: dict = {}
    _check_keys(cfg, {"kind", "qubits", "depths"},
                {"family", "sigma", "mc_samples", "class_id"}, "config")
    family = _family(cfg, defaults)
    sigma = _sigma(cfg, defaults)
    qubits = cfg["qubits"]
    depths = cfg["depths"]
    if not qubits or not depths:
        raise ConfigError("qubits and depths must be non-empty lists")
    mc_samples = cfg.get("mc_samples")
    if mc_samples is None:
        mc_samples = 200_000
        defaults["mc_samples"] = mc_samples
    class_id = cfg.get("class_id")
    if class_id is None:
        class_id = 0
        defaults["class_id"] = class_id

    header = ["n", "D", "d2_analytic", "d2_monte_carlo",
              "bound_warmup", "bound_general", "bound_ry_layered", "M"]
    rows = []
    grid_index = 0
    for n in qubits:
        for depth in depths:
            task = SyntheticTaskSpec(int(n), int(depth), family, sigma)
            circuit = task.circuit()
            g = synthetic_spec(task, class_id)
            d2_analytic = renyi2_vs_mixed(analytic_average_state(circuit, g))
            rho_mc = monte_carlo_average(circuit, g, int(mc_samples), seed + grid_index)
            d2_mc = renyi2_vs_mixed(rho_mc)
            q = BoundQuery(n=int(n), sigma=sigma, depth=int(depth))
            rows.append([int(n), int(depth), d2_analytic, d2_mc,
                         bound_warmup(q), bound_general(q), bound_ry_layered(q),
                         int(mc_samples)])
            grid_index += 1
    _write_csv(out, header, rows, _metadata(cfg, seed, defaults))


def _train_defaults(cfg: dict, n: int, defaults: dict) -> dict:
    values = {
        "l_qnn": n + 2,
        "epochs": 8,
        "batch_size": 200,
        "learning_rate": 0.02,
        "beta1": 0.9,
        "beta2": 0.999,
        "eps_adam": 1e-8,
    }
    for key, default in values.items():
        if key in cfg:
            values[key] = cfg[key]
        else:
            defaults[key] = default
    return values


def _load_feature_csv(path: str) -> tuple[np.ndarray, np.ndarray]:
    table = np.loadtxt(path, delimiter=",", skiprows=1)
    if table.ndim == 1:
        table = table[None, :]
    feats, raw_labels = table[:, :-1], table[:, -1].astype(int)
    labels = np.zeros((raw_labels.size, 2))
    labels[np.arange(raw_labels.size), raw_labels] = 1.0
    return feats, labels


def _resolve_dataset(cfg: dict, seed: int, defaults: dict
                     ) -> tuple[LabeledDataset, LabeledDataset, int]:
    ds = cfg["dataset"]
    source = ds.get("source") if isinstance(ds, dict) else None
    if source == "synthetic":
        _check_keys(ds, {"source", "qubits", "depth", "train_per_class", "test_per_class"},
                    {"family", "sigma"}, "dataset")
        family = _family(ds, defaults)
        sigma = _sigma(ds, defaults)
        task = SyntheticTaskSpec(int(ds["qubits"]), int(ds["depth"]), family, sigma)
        seeds = _derived_seeds(seed, ["train_data", "test_data"])
        train_data = generate_dataset(task, int(ds["train_per_class"]), seeds["train_data"])
        test_data = generate_dataset(task, int(ds["test_per_class"]), seeds["test_data"])
        return train_data, test_data, task.n
    if source == "features-csv":
        _check_keys(ds, {"source", "train_csv", "test_csv", "qubits", "depth"},
                    {"family"}, "dataset")
        family = _family(ds, defaults)
        task = SyntheticTaskSpec(int(ds["qubits"]), int(ds["depth"]), family, 0.8)
        circuit = task.circuit()
        out = []
        for path_key in ("train_csv", "test_csv"):
            feats, labels = _load_feature_csv(ds[path_key])
            out.append(LabeledDataset(tile_features(feats, circuit.feature_count),
                                      labels, circuit))
        return out[0], out[1], task.n
    raise ConfigError("dataset.source must be 'synthetic' or 'features-csv'")


def run_training_experiment(cfg: dict, seed: int, out: str) -> None:
    defaults: dict = {}
    _check_keys(cfg, {"kind", "dataset"},
                {"l_qnn", "epochs", "batch_size", "learning_rate",
                 "beta1", "beta2", "eps_adam"}, "config")
    train_data, test_data, n = _resolve_dataset(cfg, seed, defaults)
    knobs = _train_defaults(cfg, n, defaults)
    seeds = _derived_seeds(seed, ["train_data", "test_data", "theta", "train_loop"])
    qnn = standard_qnn(n, int(knobs["l_qnn"]))
    qnn = qnn.with_theta(random_theta(qnn.param_count, seeds["theta"]))
    tc = TrainConfig(
        batch_size=int(knobs["batch_size"]),
        learning_rate=float(knobs["learning_rate"]),
        epochs=int(knobs["epochs"]),
        seed=seeds["train_loop"],
        beta1=float(knobs["beta1"]),
        beta2=float(knobs["beta2"]),
        eps_adam=float(knobs["eps_adam"]),
    )
    report = train(train_data, qnn, tc, test_data=test_data)

    loss_path = str(out) + ".loss.csv"
    with open(loss_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "loss"])
        writer.writerows([[i + 1, _fmt(float(v))] for i, v in enumerate(report.loss_trace)])
    payload = {
        "metadata": _metadata(cfg, seed, defaults),
        "results": {
            "steps": int(report.loss_trace.size),
            "final_train_loss": float(report.final_train_loss),
            "test_accuracy": float(report.test_accuracy),
            "train_samples": len(train_data),
            "test_samples": len(test_data),
            "loss_trace_csv": Path(loss_path).name,
        },
    }
    _write_json(out, payload)


def run_discrimination_sweep(cfg: dict, seed: int, out: str) -> None:
    defaults: dict = {}
    _check_keys(cfg, {"kind", "qubits", "depths"},
                {"family", "sigma", "samples_per_class"}, "config")
    family = _family(cfg, defaults)
    sigma = _sigma(cfg, defaults)
    samples = cfg.get("samples_per_class")
    if samples is None:
        samples = 2000
        defaults["samples_per_class"] = samples
    qubits, depths = cfg["qubits"], cfg["depths"]
    if not qubits or not depths:
        raise ConfigError("qubits and depths must be non-empty lists")
    rows = []
    grid_index = 0
    for n in qubits:
        for depth in depths:
            task = SyntheticTaskSpec(int(n), int(depth), family, sigma)
            data = generate_dataset(task, int(samples), seed + grid_index)
            p_succ, _ = discriminate_ensemble(class_average_states(data))
            rows.append([int(n), int(depth), p_succ])
            grid_index += 1
    _write_csv(out, ["n", "D", "p_succ"], rows, _metadata(cfg, seed, defaults))


def run_bounds(cfg: dict, seed: int, out: str) -> None:
    _check_keys(cfg, {"kind", "rows"}, set(), "config")
    rows_out = []
    for i, row in enumerate(cfg["rows"]):
        _check_keys(row, {"n", "sigma"}, {"depth", "eps"}, f"rows[{i}]")
        record: list = [row["n"], row.get("depth"), row["sigma"], row.get("eps"),
                        "", "", "", "", ""]
        try:
            q = BoundQuery(n=int(row["n"]), sigma=float(row["sigma"]),
                           depth=row.get("depth"), eps=row.get("eps"))
            if q.depth is not None:
                record[4] = bound_warmup(q)
                record[5] = bound_general(q)
                record[6] = bound_ry_layered(q)
            if q.eps is not None:
                record[7] = depth_threshold(q)
        except ValueError as exc:
            record[8] = str(exc)
        rows_out.append([v if v is not None else "" for v in record])
    header = ["n", "D", "sigma", "eps", "bound_warmup", "bound_general",
              "bound_ry_layered", "depth_threshold", "error"]
    _write_csv(out, header, rows_out, _metadata(cfg, seed, {}))


def run_mnist_prep(cfg: dict, seed: int, out: str) -> None:
    _check_keys(cfg, {"kind", "images", "labels", "digits"}, set(), "config")
    digits = cfg["digits"]
    if not (isinstance(digits, list) and len(digits) == 2):
        raise ConfigError("digits must be a two-element list")
    raw = load_mnist_idx(cfg["images"], cfg["labels"])
    data = preprocess_mnist(raw, (int(digits[0]), int(digits[1])))
    feats = data.features[:, :16]  # default encoder consumes exactly the 16 pixels
    labels = np.argmax(data.labels, axis=1)
    header = [f"f{i:02d}" for i in range(16)] + ["label"]
    rows = [[*(float(v) for v in feats[r]), int(labels[r])] for r in range(feats.shape[0])]
    meta = _metadata(cfg, seed, {"resize": "7x7 block average", "pixel_range": "[0, pi]",
                                 "class0_digit": int(digits[0])})
    meta["counts"] = {"total": int(feats.shape[0]),
                      "class0": int(np.sum(labels == 0)),
                      "class1": int(np.sum(labels == 1))}
    _write_csv(out, header, rows, meta)


# ---------------------------------------------------------------------------


RUNNERS = {
    "sweep-divergence": run_divergence_sweep,
    "train": run_training_experiment,
    "discriminate": run_discrimination_sweep,
    "bounds": run_bounds,
    "mnist-prep": run_mnist_prep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qencon",
                                     description="encoding-concentration experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in RUNNERS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", required=True, help="output file path")
        p.add_argument("--seed", required=True, type=int, help="master seed")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        if not isinstance(cfg, dict) or cfg.get("kind") != KIND_BY_COMMAND[args.command]:
            raise ConfigError(
                f"config kind {cfg.get('kind')!r} does not match "
                f"command {args.command!r} (expected {KIND_BY_COMMAND[args.command]!r})"
            )
        if args.seed < 0:
            raise ConfigError("seed must be non-negative")
        RUNNERS[args.command](cfg, args.seed, args.out)
    except IdxFormatError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, ValueError) as exc:
        # invalid values reaching domain constructors are config mistakes
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - boundary: report and signal failure
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
