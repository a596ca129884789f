"""Data generation, training and the perturbation sweep."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..dataset import Dataset, read_csv, write_csv
from ..linalg import mean_rows
from ..metric_space import identity
from ..models import MlpOneHidden, fit_mlp, load_model, perturb_weights, save_model
from ..synthdata import make_mixture, make_target, sample_dataset, save_target
from ..transfer import (
    ModelProbe,
    knowledge_dist,
    probe_alpha1_rows,
    probe_alpha2,
    probe_grad_match,
)
from .config import SweepConfig, derive_seed
from .svg import emit_svg

DATASET_FILE = "dataset.csv"
TARGET_FILE = "target.json"
MODEL_TARGET_FILE = "model_target.json"
MODEL_REFERENCE_FILE = "model_reference.json"
SWEEP_FILE = "sweep.csv"
SVG_FILE = "sweep.svg"

COLUMNS = ("t", "alpha1_ts", "alpha1_st", "alpha2_ts", "alpha2_st", "grad_match", "knowledge_dist")


@dataclass
class SweepResult:
    rows: list[dict]

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows])

    def to_csv(self) -> str:
        lines = [",".join(COLUMNS)]
        for r in self.rows:
            lines.append(",".join(repr(float(r[c])) for c in COLUMNS))
        return "\n".join(lines) + "\n"


def generate(cfg: SweepConfig) -> tuple[Dataset, object]:
    target = make_target(cfg.n, cfg.m_rbf, cfg.d, derive_seed(cfg.seed, "target"), cfg.sigma_sq_floor)
    mix = make_mixture(cfg.n, cfg.k_components, derive_seed(cfg.seed, "mixture"))
    data = sample_dataset(target, mix, cfg.n_samples, derive_seed(cfg.seed, "samples"), cfg.workers)
    return data, target


def train_target(cfg: SweepConfig, data: Dataset) -> MlpOneHidden:
    return fit_mlp(data, cfg.target_width, derive_seed(cfg.seed, "init-target"), cfg.lr, cfg.epochs)


def train_reference(cfg: SweepConfig, data: Dataset) -> MlpOneHidden:
    return fit_mlp(data, cfg.source_width, derive_seed(cfg.seed, "init-reference"), cfg.lr, cfg.epochs)


def sweep(cfg: SweepConfig, data: Dataset, target: MlpOneHidden, reference: MlpOneHidden) -> SweepResult:
    """Perturb ``reference`` along one fixed random direction and track the six quantities.

    The target's Jacobians and spectra are computed once and reused for
    every t. Gradient matching is in the (T, S) direction; the knowledge
    distance fits the labels from the perturbed source.
    """
    ms_t = identity(target.out_dim)
    probe_t = ModelProbe(target, ms_t, data)
    direction_seed = derive_seed(cfg.seed, "perturb")
    order = cfg.attack_order
    rows = []
    for t in cfg.t_grid:
        source = perturb_weights(reference, t, direction_seed)
        probe_s = ModelProbe(source, identity(source.out_dim), data)
        rows.append(
            {
                "t": t,
                "alpha1_ts": float(mean_rows(probe_alpha1_rows(probe_t, probe_s, order))),
                "alpha1_st": float(mean_rows(probe_alpha1_rows(probe_s, probe_t, order))),
                "alpha2_ts": probe_alpha2(probe_t, probe_s, order),
                "alpha2_st": probe_alpha2(probe_s, probe_t, order),
                "grad_match": probe_grad_match(probe_t, probe_s),
                "knowledge_dist": knowledge_dist(source, data, ms_t),
            }
        )
    return SweepResult(rows=rows)


def run_pipeline(cfg: SweepConfig) -> SweepResult:
    """Everything in memory, no files: generate, train, sweep."""
    data, _ = generate(cfg)
    target = train_target(cfg, data)
    reference = target if cfg.same_width else train_reference(cfg, data)
    return sweep(cfg, data, target, reference)


# -- file-backed stages ------------------------------------------------------


def out_path(cfg: SweepConfig, name: str) -> Path:
    return Path(cfg.out_dir) / name


def _require(path: Path) -> Path:
    if not path.is_file():
        raise FileNotFoundError(f"missing input file {path}; run the earlier stage first")
    return path


def cmd_gen(cfg: SweepConfig) -> list[Path]:
    Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
    data, target = generate(cfg)
    write_csv(data, out_path(cfg, DATASET_FILE))
    save_target(target, out_path(cfg, TARGET_FILE))
    return [out_path(cfg, DATASET_FILE), out_path(cfg, TARGET_FILE)]


def load_data(cfg: SweepConfig) -> Dataset:
    data = read_csv(_require(out_path(cfg, DATASET_FILE)))
    if data.in_dim != cfg.n or data.y is None or data.y.shape[1] != cfg.d:
        raise ValueError(f"{out_path(cfg, DATASET_FILE)} does not match the configured n and d")
    return data


def cmd_train(cfg: SweepConfig) -> list[Path]:
    data = load_data(cfg)
    target = train_target(cfg, data)
    save_model(target, out_path(cfg, MODEL_TARGET_FILE))
    written = [out_path(cfg, MODEL_TARGET_FILE)]
    if not cfg.same_width:
        save_model(train_reference(cfg, data), out_path(cfg, MODEL_REFERENCE_FILE))
        written.append(out_path(cfg, MODEL_REFERENCE_FILE))
    return written


def cmd_sweep(cfg: SweepConfig) -> tuple[SweepResult, list[Path]]:
    data = load_data(cfg)
    target = load_model(_require(out_path(cfg, MODEL_TARGET_FILE)))
    if cfg.same_width:
        reference = target
    else:
        reference = load_model(_require(out_path(cfg, MODEL_REFERENCE_FILE)))
    result = sweep(cfg, data, target, reference)
    csv_path = out_path(cfg, SWEEP_FILE)
    csv_path.write_text(result.to_csv())
    written = [csv_path]
    if cfg.svg:
        emit_svg(result.rows, out_path(cfg, SVG_FILE))
        written.append(out_path(cfg, SVG_FILE))
    return result, written

