"""Evaluation harness: run configuration, attack orchestration and sweeps,
report emission, the leaky synthesizer, and the linearity validation
experiment. Also hosts the command line interface.
"""

from __future__ import annotations

import argparse
import csv as csv_module
import dataclasses
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import jsonschema
import numpy as np

from . import inference as inference_mod
from . import linkability as linkability_mod
from . import singling_out as singling_out_mod
from .distance import worker_count
from .predicates import matches
from .singling_out import SinglingOutConfig, SinglingOutMode
from .stats import (
    RiskEstimate,
    fit_correction_model,
    quality_cut,
    risk,
    scale_control_successes,
    strength,
    wilson,
)
from .tabular import (
    ColumnKind,
    Dataset,
    DatasetRole,
    SplitSpec,
    TabularError,
    align,
    load_csv,
    split,
    write_csv,
)
from .utility import utility_score

logger = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1
_CORRECTION_MIN_SIZE = 1000
_CORRECTION_N_SIZES = 10
_CORRECTION_N_REPS = 5
_BOOTSTRAP_RESAMPLES = 1000


class ConfigError(ValueError):
    """Raised for invalid or inconsistent run configuration."""


# ---------------------------------------------------------------------------
# leaky synthesizer
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LeakyConfig:
    """Reference synthesizer that discloses a known fraction of training rows."""

    leak_fraction: float
    size: int
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.leak_fraction <= 1.0:
            raise ConfigError("leak_fraction must be in [0, 1]")
        if self.size < 1:
            raise ConfigError("size must be >= 1")


def leaky_synthesize(
    train: Dataset,
    release: Dataset,
    cfg: LeakyConfig,
    rng: np.random.Generator | None = None,
) -> Dataset:
    """Emit `size` rows: round(size * leak_fraction) sampled without
    replacement from the training set, the rest from the release set,
    shuffled together.

    With leak_fraction 0 the output is pure release data (no interference
    with the training records); with 1 it consists solely of training rows.
    """
    if train.schema != release.schema:
        raise TabularError("train and release schemas differ")
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    n_leak = round(cfg.size * cfg.leak_fraction)
    n_release = cfg.size - n_leak
    if n_leak > train.n_rows:
        raise TabularError(
            f"cannot draw {n_leak} rows from a training set of {train.n_rows}"
        )
    if n_release > release.n_rows:
        raise TabularError(
            f"cannot draw {n_release} rows from a release set of"
            f" {release.n_rows}"
        )
    parts = []
    if n_leak:
        parts.append(
            train.select_rows(
                rng.choice(train.n_rows, size=n_leak, replace=False)
            )
        )
    if n_release:
        parts.append(
            release.select_rows(
                rng.choice(release.n_rows, size=n_release, replace=False)
            )
        )
    out = parts[0] if len(parts) == 1 else parts[0].concat(parts[1])
    out = out.select_rows(rng.permutation(out.n_rows))
    out.role = DatasetRole.SYNTHETIC
    return out


# ---------------------------------------------------------------------------
# run configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SinglingOutBlock:
    modes: tuple[SinglingOutMode, ...] = (
        SinglingOutMode.UNIVARIATE,
        SinglingOutMode.MULTIVARIATE,
    )
    n_attrs: tuple[int, ...] = (3,)
    n_attacks: int | None = None
    max_generation_factor: int = 50


@dataclass(frozen=True)
class LinkabilityBlock:
    aux_split: tuple[tuple[str, ...], tuple[str, ...]]
    k_values: tuple[int, ...] = (1,)
    aux_sizes: tuple[int, ...] | None = None
    n_attacks: int | None = None


@dataclass(frozen=True)
class InferenceBlock:
    secrets: tuple[str, ...] | None = None  # None means every column
    aux_cols: tuple[str, ...] | None = None  # None means all other columns
    aux_sizes: tuple[int, ...] | None = None
    tolerance: float = 0.05
    n_attacks: int | None = None


@dataclass(frozen=True)
class UtilityBlock:
    enabled: bool = True
    n_queries: int = 500


@dataclass(frozen=True)
class RunConfig:
    train_path: str
    control_path: str
    synthetic_path: str
    schema_path: str | None = None
    alpha: float = 0.95
    seed: int = 0
    n_attacks: int = 2000
    repetitions: int = 1
    control_rate_threshold: float = 0.9
    output_path: str | None = None
    singling_out: SinglingOutBlock | None = None
    linkability: LinkabilityBlock | None = None
    inference: InferenceBlock | None = None
    utility: UtilityBlock | None = None

    def __post_init__(self):
        if not (self.singling_out or self.linkability or self.inference):
            raise ConfigError("at least one attack block must be configured")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must be in (0, 1)")
        if self.n_attacks < 1:
            raise ConfigError("n_attacks must be >= 1")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")


def load_schema_file(path: str | Path) -> dict[str, ColumnKind]:
    with Path(path).open(encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ConfigError("schema file must map column names to kinds")
    out = {}
    for name, kind in raw.items():
        try:
            out[name] = ColumnKind(kind)
        except ValueError:
            raise ConfigError(
                f"schema file: column {name!r} has unknown kind {kind!r}"
            ) from None
    return out


def _parse_singling_out(raw: dict) -> SinglingOutBlock:
    modes = raw.get("modes", ["univariate", "multivariate"])
    try:
        mode_values = tuple(SinglingOutMode(m) for m in modes)
    except ValueError:
        raise ConfigError(f"unknown singling-out mode in {modes!r}") from None
    n_attrs = raw.get("n_attrs", [3])
    if isinstance(n_attrs, int):
        n_attrs = [n_attrs]
    return SinglingOutBlock(
        modes=mode_values,
        n_attrs=tuple(int(v) for v in n_attrs),
        n_attacks=raw.get("n_attacks"),
        max_generation_factor=int(raw.get("max_generation_factor", 50)),
    )


def _parse_linkability(raw: dict) -> LinkabilityBlock:
    aux = raw.get("aux_split")
    if aux == "halves":
        aux_split = ("halves", ())  # resolved once the schema is known
    elif (
        isinstance(aux, (list, tuple))
        and len(aux) == 2
        and all(isinstance(side, (list, tuple)) for side in aux)
    ):
        aux_split = (tuple(aux[0]), tuple(aux[1]))
    else:
        raise ConfigError(
            "linkability.aux_split must be two column-name lists or 'halves'"
        )
    k_values = raw.get("k", [1])
    if isinstance(k_values, int):
        k_values = [k_values]
    aux_sizes = raw.get("aux_sizes")
    return LinkabilityBlock(
        aux_split=aux_split,  # type: ignore[arg-type]
        k_values=tuple(int(k) for k in k_values),
        aux_sizes=tuple(int(s) for s in aux_sizes) if aux_sizes else None,
        n_attacks=raw.get("n_attacks"),
    )


def _parse_inference(raw: dict) -> InferenceBlock:
    secrets = raw.get("secrets", "all")
    aux_cols = raw.get("aux_cols")
    aux_sizes = raw.get("aux_sizes")
    return InferenceBlock(
        secrets=None if secrets == "all" else tuple(secrets),
        aux_cols=tuple(aux_cols) if aux_cols else None,
        aux_sizes=tuple(int(s) for s in aux_sizes) if aux_sizes else None,
        tolerance=float(raw.get("tolerance", 0.05)),
        n_attacks=raw.get("n_attacks"),
    )


def load_run_config(path: str | Path) -> RunConfig:
    """Parse a JSON run-configuration file."""
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        raw = json.load(fh)
    for key in ("train", "control", "synthetic"):
        if key not in raw:
            raise ConfigError(f"config is missing the {key!r} dataset path")
    base = path.parent

    def resolve(p):
        return str((base / p) if not Path(p).is_absolute() else Path(p))

    return RunConfig(
        train_path=resolve(raw["train"]),
        control_path=resolve(raw["control"]),
        synthetic_path=resolve(raw["synthetic"]),
        schema_path=resolve(raw["schema"]) if raw.get("schema") else None,
        alpha=float(raw.get("alpha", 0.95)),
        seed=int(raw.get("seed", 0)),
        n_attacks=int(raw.get("n_attacks", 2000)),
        repetitions=int(raw.get("repetitions", 1)),
        control_rate_threshold=float(raw.get("control_rate_threshold", 0.9)),
        output_path=resolve(raw["output"]) if raw.get("output") else None,
        singling_out=(
            _parse_singling_out(raw["singling_out"])
            if "singling_out" in raw
            else None
        ),
        linkability=(
            _parse_linkability(raw["linkability"])
            if "linkability" in raw
            else None
        ),
        inference=(
            _parse_inference(raw["inference"]) if "inference" in raw else None
        ),
        utility=(
            UtilityBlock(
                enabled=bool(raw["utility"].get("enabled", True)),
                n_queries=int(raw["utility"].get("n_queries", 500)),
            )
            if "utility" in raw
            else None
        ),
    )


# ---------------------------------------------------------------------------
# per-setting execution
# ---------------------------------------------------------------------------

def _estimate_dict(est: RiskEstimate) -> dict[str, Any]:
    return {
        "rate": est.rate,
        "delta": est.delta,
        "ci": list(est.ci),
        "n_success": est.n_success,
        "n_attacks": est.n_attacks,
    }


def _summarize(
    train_counts: tuple[float, float],
    naive_counts: tuple[float, float],
    control_counts: tuple[float, float],
    alpha: float,
    control_rate_threshold: float,
) -> dict[str, Any]:
    """Wilson rates, strength, risk, and exclusion flags for one setting."""
    est_train = wilson(*train_counts, alpha)
    est_naive = wilson(*naive_counts, alpha)
    est_control = wilson(*control_counts, alpha)
    st = strength(est_train, est_naive)
    pr = risk(est_train, est_control)
    cut = quality_cut(est_control, control_rate_threshold)
    if st.failed:
        reason = "failed_attack"
    elif cut:
        reason = "control_rate_cut"
    else:
        reason = None
    return {
        "rates": {
            "train": _estimate_dict(est_train),
            "naive": _estimate_dict(est_naive),
            "control": _estimate_dict(est_control),
        },
        "strength": {"value": st.value, "delta": st.delta, "failed": st.failed},
        "risk": {
            "value": pr.value,
            "raw": pr.raw,
            "delta": pr.delta,
            "ci": list(pr.ci),
        },
        "failed": st.failed,
        "excluded": reason is not None,
        "exclusion_reason": reason,
        "warnings": [],
    }


def correction_samples(
    predicates: Sequence,
    control: Dataset,
    rng: np.random.Generator,
    n_sizes: int = _CORRECTION_N_SIZES,
    n_reps: int = _CORRECTION_N_REPS,
    min_size: int = _CORRECTION_MIN_SIZE,
) -> list[tuple[int, float]]:
    """Singling-out success counts on random control subsets of varied size.

    Samples `n_sizes` population sizes spanning [min_size, |control|]
    (shrunk when the control set is small), with `n_reps` random
    without-replacement subsets each.
    """
    n_control = control.n_rows
    lo = min_size if n_control > min_size else max(2, n_control // 2)
    sizes = np.unique(
        np.round(np.linspace(lo, n_control, n_sizes)).astype(int)
    )
    mask_matrix = np.stack([matches(p, control) for p in predicates])
    samples = []
    for n in sizes:
        for _ in range(n_reps):
            idx = rng.choice(n_control, size=int(n), replace=False)
            counts = mask_matrix[:, idx].sum(axis=1)
            samples.append((int(n), float((counts == 1).sum())))
    return samples


def _scaled_control(
    result: singling_out_mod.SinglingOutResult,
    train: Dataset,
    control: Dataset,
    rng: np.random.Generator,
) -> tuple[float, dict[str, Any]]:
    """Rescale raw control successes when the control set is smaller than the
    training set, fitting the size-correction model on control subsamples."""
    info: dict[str, Any] = {"applied": False, "factor": None, "model": None}
    if control.n_rows >= train.n_rows:
        return float(result.m_control), info
    if result.m_control == 0:
        info.update(applied=True, factor=None)
        return 0.0, info
    samples = correction_samples(result.predicates, control, rng)
    if len({n for n, _ in samples}) < 2:
        logger.warning(
            "control set too small for the size-correction protocol;"
            " using raw control successes"
        )
        return float(result.m_control), info
    model = fit_correction_model(samples)
    if model.degenerate:
        logger.warning(
            "size-correction fit degenerate; using raw control successes"
        )
        info.update(
            applied=False,
            model={"amplitude": model.amplitude,
                   "effective_weight": model.effective_weight,
                   "fit_residual": model.fit_residual,
                   "degenerate": True},
        )
        return float(result.m_control), info
    scaled = scale_control_successes(
        result.m_control, model, train.n_rows, control.n_rows
    )
    scaled = min(scaled, float(len(result.predicates)))
    info.update(
        applied=True,
        factor=scaled / result.m_control,
        model={
            "amplitude": model.amplitude,
            "effective_weight": model.effective_weight,
            "fit_residual": model.fit_residual,
            "degenerate": False,
        },
    )
    return scaled, info


def _run_singling_out_setting(
    setting: dict[str, Any],
    syn: Dataset,
    train: Dataset,
    control: Dataset,
    alpha: float,
    control_rate_threshold: float,
    rng: np.random.Generator,
) -> dict[str, Any]:
    cfg = SinglingOutConfig(
        n_attacks=setting["n_attacks"],
        mode=SinglingOutMode(setting["mode"]),
        n_attrs=setting.get("n_attrs", 1),
        seed=int(rng.integers(2**63)),
        max_generation_factor=setting.get("max_generation_factor", 50),
    )
    result = singling_out_mod.run(syn, train, control, cfg)
    n_guesses = result.n_guesses
    if n_guesses == 0:
        raise TabularError("singling-out generation produced no guesses")
    m_control_eff, scaling = _scaled_control(result, train, control, rng)
    summary = _summarize(
        (result.m_train, n_guesses),
        (result.m_naive, cfg.n_attacks),
        (m_control_eff, n_guesses),
        alpha,
        control_rate_threshold,
    )
    summary["control_scaling"] = scaling
    summary["example_guesses"] = [
        p.to_text() for p in result.predicates[:3]
    ]
    if result.exhausted:
        summary["warnings"].append(
            f"guess generation exhausted: {n_guesses} of"
            f" {cfg.n_attacks} guesses"
        )
    return summary


def _run_linkability_setting(
    setting: dict[str, Any],
    syn: Dataset,
    train: Dataset,
    control: Dataset,
    alpha: float,
    control_rate_threshold: float,
    rng: np.random.Generator,
) -> dict[str, Any]:
    cfg = linkability_mod.LinkabilityConfig(
        aux_split=(tuple(setting["aux_a"]), tuple(setting["aux_b"])),
        n_attacks=setting["n_attacks"],
        k=setting["k"],
        seed=int(rng.integers(2**63)),
    )
    result = linkability_mod.run(syn, train, control, cfg)
    n = cfg.n_attacks
    return _summarize(
        (int(result.outcomes_main.sum()), n),
        (int(result.outcomes_naive.sum()), n),
        (int(result.outcomes_control.sum()), n),
        alpha,
        control_rate_threshold,
    )


def _run_inference_setting(
    setting: dict[str, Any],
    syn: Dataset,
    train: Dataset,
    control: Dataset,
    alpha: float,
    control_rate_threshold: float,
    rng: np.random.Generator,
) -> dict[str, Any]:
    cfg = inference_mod.InferenceConfig(
        aux_cols=tuple(setting["aux_cols"]),
        secret=setting["secret"],
        n_attacks=setting["n_attacks"],
        tolerance=setting["tolerance"],
        seed=int(rng.integers(2**63)),
    )
    result = inference_mod.run(syn, train, control, cfg)
    n_main = len(result.outcomes_main)
    n_naive = len(result.outcomes_naive)
    n_control = len(result.outcomes_control)
    if min(n_main, n_naive, n_control) == 0:
        raise TabularError(
            f"no scorable targets for secret {cfg.secret!r}"
            " (all true values missing)"
        )
    summary = _summarize(
        (int(result.outcomes_main.sum()), n_main),
        (int(result.outcomes_naive.sum()), n_naive),
        (int(result.outcomes_control.sum()), n_control),
        alpha,
        control_rate_threshold,
    )
    if result.n_unscored_main or result.n_unscored_control:
        summary["warnings"].append(
            f"unscored targets (missing true secret):"
            f" {result.n_unscored_main} main,"
            f" {result.n_unscored_control} control"
        )
    return summary


_SETTING_RUNNERS = {
    "singling_out": _run_singling_out_setting,
    "linkability": _run_linkability_setting,
    "inference": _run_inference_setting,
}


def _enumerate_settings(
    cfg: RunConfig, columns: Sequence[str]
) -> list[tuple[str, dict[str, Any]]]:
    """Expand the configured attack blocks into concrete settings."""
    settings: list[tuple[str, dict[str, Any]]] = []
    if cfg.singling_out:
        block = cfg.singling_out
        n_attacks = block.n_attacks or cfg.n_attacks
        for mode in block.modes:
            if mode is SinglingOutMode.UNIVARIATE:
                settings.append(
                    (
                        "singling_out",
                        {
                            "mode": mode.value,
                            "n_attacks": n_attacks,
                            "n_attrs": 1,
                            "aux": 1,
                            "max_generation_factor":
                                block.max_generation_factor,
                        },
                    )
                )
            else:
                for n_attrs in block.n_attrs:
                    settings.append(
                        (
                            "singling_out",
                            {
                                "mode": mode.value,
                                "n_attacks": n_attacks,
                                "n_attrs": n_attrs,
                                "aux": n_attrs,
                                "max_generation_factor":
                                    block.max_generation_factor,
                            },
                        )
                    )
    if cfg.linkability:
        block = cfg.linkability
        n_attacks = block.n_attacks or cfg.n_attacks
        side_a, side_b = block.aux_split
        if side_a == "halves":
            half = len(columns) // 2
            side_a = tuple(columns[:half])
            side_b = tuple(columns[half:])
        sizes = block.aux_sizes or [len(side_a) + len(side_b)]
        for total in sizes:
            n_a = min(len(side_a), (total + 1) // 2)
            n_b = min(len(side_b), total - n_a)
            if n_a < 1 or n_b < 1:
                raise ConfigError(
                    f"linkability aux size {total} leaves an empty side"
                )
            for k in block.k_values:
                settings.append(
                    (
                        "linkability",
                        {
                            "aux_a": list(side_a[:n_a]),
                            "aux_b": list(side_b[:n_b]),
                            "k": k,
                            "n_attacks": n_attacks,
                            "aux": n_a + n_b,
                        },
                    )
                )
    if cfg.inference:
        block = cfg.inference
        n_attacks = block.n_attacks or cfg.n_attacks
        secrets = block.secrets or tuple(columns)
        for secret in secrets:
            if secret not in columns:
                raise ConfigError(f"inference secret {secret!r} not in schema")
            aux_full = block.aux_cols or tuple(
                c for c in columns if c != secret
            )
            if secret in aux_full:
                raise ConfigError(
                    f"inference secret {secret!r} appears in aux_cols"
                )
            sizes = block.aux_sizes or [len(aux_full)]
            for size in sizes:
                if not 1 <= size <= len(aux_full):
                    raise ConfigError(
                        f"inference aux size {size} out of range"
                        f" [1, {len(aux_full)}]"
                    )
                settings.append(
                    (
                        "inference",
                        {
                            "secret": secret,
                            "aux_cols": list(aux_full[:size]),
                            "tolerance": block.tolerance,
                            "n_attacks": n_attacks,
                            "aux": size,
                        },
                    )
                )
    return settings


# ---------------------------------------------------------------------------
# full evaluation
# ---------------------------------------------------------------------------

def _bootstrap_ci(
    values: Sequence[float],
    rng: np.random.Generator,
    alpha: float,
    n_resamples: int = _BOOTSTRAP_RESAMPLES,
) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    picks = rng.integers(len(arr), size=(n_resamples, len(arr)))
    means = arr[picks].mean(axis=1)
    lo = float(np.percentile(means, 100.0 * (1.0 - alpha) / 2.0))
    hi = float(np.percentile(means, 100.0 * (1.0 + alpha) / 2.0))
    return lo, hi


def _aggregate(
    results: list[dict[str, Any]], rng: np.random.Generator, alpha: float
) -> dict[str, Any]:
    """Mean risk over valid settings per attack, with a bootstrap CI."""
    out: dict[str, Any] = {}
    for attack in ("singling_out", "linkability", "inference"):
        entries = [r for r in results if r["attack"] == attack]
        if not entries:
            continue
        valid = [r for r in entries if not r["excluded"]]
        risks = [r["risk"]["value"] for r in valid]
        agg: dict[str, Any] = {
            "n_settings": len(entries),
            "n_valid": len(valid),
        }
        if risks:
            agg["risk_mean"] = float(np.mean(risks))
            agg["ci"] = (
                list(_bootstrap_ci(risks, rng, alpha))
                if len(risks) > 1
                else [risks[0], risks[0]]
            )
        else:
            agg["risk_mean"] = None
            agg["ci"] = None
        if attack == "singling_out":
            # the headline estimate takes the best-performing attack mode,
            # which is the more conservative privacy assessment
            agg["risk_best"] = max(risks) if risks else None
        out[attack] = agg
    return out


def report_schema() -> dict[str, Any]:
    """The JSON schema that emitted reports validate against."""
    text = (
        resources.files("synthrisk").joinpath("report_schema.json").read_text()
    )
    return json.loads(text)


def validate_report(report: dict[str, Any]) -> None:
    jsonschema.validate(report, report_schema())


def run_evaluation(cfg: RunConfig) -> dict[str, Any]:
    """Execute every configured attack setting and assemble the JSON report.

    Per-setting failures are recorded under "errors" and do not abort the
    remaining settings. The report is validated against the published schema
    and written to `cfg.output_path` when set.
    """
    started = time.time()
    overrides = (
        load_schema_file(cfg.schema_path) if cfg.schema_path else None
    )
    train = load_csv(cfg.train_path, overrides, role=DatasetRole.TRAIN)
    control = load_csv(cfg.control_path, overrides, role=DatasetRole.CONTROL)
    syn = load_csv(cfg.synthetic_path, overrides, role=DatasetRole.SYNTHETIC)
    report = evaluate_datasets(cfg, syn, train, control)
    report["datasets"] = {
        "train": {"path": cfg.train_path, "n_rows": train.n_rows},
        "control": {"path": cfg.control_path, "n_rows": control.n_rows},
        "synthetic": {"path": cfg.synthetic_path, "n_rows": syn.n_rows},
    }
    report["timing"] = {
        "started_at": datetime.fromtimestamp(
            started, tz=timezone.utc
        ).isoformat(),
        "elapsed_seconds": time.time() - started,
    }
    validate_report(report)
    if cfg.output_path:
        with Path(cfg.output_path).open("w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return report


def evaluate_datasets(
    cfg: RunConfig, syn: Dataset, train: Dataset, control: Dataset
) -> dict[str, Any]:
    """Core of :func:`run_evaluation` for in-memory datasets."""
    common = align(syn, train)
    common = [c for c in common if c in align(syn, control)]
    if not common:
        raise TabularError("datasets share no attributes")
    syn = syn.select_columns(common)
    train = train.select_columns(common)
    control = control.select_columns(common)

    settings = _enumerate_settings(cfg, common)
    jobs = [
        (index, rep, attack, setting)
        for index, (rep, (attack, setting)) in enumerate(
            (rep, entry)
            for rep in range(cfg.repetitions)
            for entry in settings
        )
    ]

    def execute(job):
        index, rep, attack, setting = job
        # every setting owns an rng stream derived from (seed, index), so
        # the outcome does not depend on scheduling
        rng = np.random.default_rng([cfg.seed, index])
        try:
            summary = _SETTING_RUNNERS[attack](
                setting, syn, train, control,
                cfg.alpha, cfg.control_rate_threshold, rng,
            )
            summary.update(attack=attack, setting=setting, repetition=rep)
            return index, summary, None
        except (TabularError, ValueError) as exc:
            logger.error("setting failed: %s %s: %s", attack, setting, exc)
            return index, None, {
                "attack": attack, "setting": setting, "error": str(exc)
            }

    budget = min(worker_count(), len(jobs)) if jobs else 1
    if budget > 1:
        with ThreadPoolExecutor(max_workers=budget) as pool:
            outcomes = list(pool.map(execute, jobs))  # keeps job order
    else:
        outcomes = [execute(job) for job in jobs]
    results = [summary for _, summary, _ in outcomes if summary is not None]
    errors = [error for _, _, error in outcomes if error is not None]

    agg_rng = np.random.default_rng([cfg.seed, 0x0B00])
    report: dict[str, Any] = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "seed": cfg.seed,
        "alpha": cfg.alpha,
        "n_attacks_default": cfg.n_attacks,
        "workers": worker_count(),
        "results": results,
        "errors": errors,
        "aggregates": _aggregate(results, agg_rng, cfg.alpha),
        "utility": None,
    }
    if cfg.utility and cfg.utility.enabled:
        util_rng = np.random.default_rng([cfg.seed, 0x07EE])
        score = utility_score(
            train, syn, n_queries=cfg.utility.n_queries, rng=util_rng
        )
        report["utility"] = {
            "marginal": score.marginal,
            "pairwise": score.pairwise,
            "query": score.query,
            "total": score.total,
        }
    return report


# ---------------------------------------------------------------------------
# linearity experiment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearityConfig:
    original_path: str
    schema_path: str | None
    leak_fractions: tuple[float, ...]
    control_fraction: float = 0.2
    release_fraction: float = 0.4  # fraction of the non-control remainder
    syn_size: int | None = None  # default: the training-set size
    alpha: float = 0.95
    seed: int = 0
    n_attacks: int = 2000
    control_rate_threshold: float = 0.9
    output_path: str | None = None
    singling_out: SinglingOutBlock | None = None
    linkability: LinkabilityBlock | None = None
    inference: InferenceBlock | None = None

    def __post_init__(self):
        if not self.leak_fractions:
            raise ConfigError("leak_fractions must be non-empty")
        if not (self.singling_out or self.linkability or self.inference):
            raise ConfigError("at least one attack block must be configured")


def load_linearity_config(path: str | Path) -> LinearityConfig:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        raw = json.load(fh)
    if "original" not in raw:
        raise ConfigError("config is missing the 'original' dataset path")
    base = path.parent

    def resolve(p):
        return str((base / p) if not Path(p).is_absolute() else Path(p))

    split_raw = raw.get("split", {})
    return LinearityConfig(
        original_path=resolve(raw["original"]),
        schema_path=resolve(raw["schema"]) if raw.get("schema") else None,
        leak_fractions=tuple(float(f) for f in raw.get(
            "leak_fractions", [0.0, 0.25, 0.5, 0.75, 1.0]
        )),
        control_fraction=float(split_raw.get("control_fraction", 0.2)),
        release_fraction=float(split_raw.get("release_fraction", 0.4)),
        syn_size=int(raw["syn_size"]) if raw.get("syn_size") else None,
        alpha=float(raw.get("alpha", 0.95)),
        seed=int(raw.get("seed", 0)),
        n_attacks=int(raw.get("n_attacks", 2000)),
        control_rate_threshold=float(raw.get("control_rate_threshold", 0.9)),
        output_path=resolve(raw["output"]) if raw.get("output") else None,
        singling_out=(
            _parse_singling_out(raw["singling_out"])
            if "singling_out" in raw
            else None
        ),
        linkability=(
            _parse_linkability(raw["linkability"])
            if "linkability" in raw
            else None
        ),
        inference=(
            _parse_inference(raw["inference"]) if "inference" in raw else None
        ),
    )


def three_way_split(
    original: Dataset, cfg: LinearityConfig
) -> tuple[Dataset, Dataset, Dataset]:
    """Split the original data into disjoint (train, control, release) parts."""
    seed_rng = np.random.default_rng([cfg.seed, 0x5711])
    rest, control = split(
        original,
        SplitSpec(cfg.control_fraction, int(seed_rng.integers(2**63))),
    )
    train, release = split(
        rest,
        SplitSpec(cfg.release_fraction, int(seed_rng.integers(2**63))),
    )
    release.role = DatasetRole.RELEASE
    return train, control, release


def linearity_experiment(
    original: Dataset, cfg: LinearityConfig
) -> list[dict[str, Any]]:
    """Leaky-synthesizer sweep: measured risk versus the implanted leak
    fraction, across the configured attack settings.

    Returns one row per (leak fraction, attack setting) with the risk and its
    confidence interval; rows are also written as CSV when an output path is
    configured.
    """
    train, control, release = three_way_split(original, cfg)
    run_cfg_fields = dict(
        train_path="-", control_path="-", synthetic_path="-",
        alpha=cfg.alpha,
        n_attacks=cfg.n_attacks,
        control_rate_threshold=cfg.control_rate_threshold,
        singling_out=cfg.singling_out,
        linkability=cfg.linkability,
        inference=cfg.inference,
    )
    rows: list[dict[str, Any]] = []
    m = cfg.syn_size or train.n_rows
    for i, f_l in enumerate(cfg.leak_fractions):
        leak_rng = np.random.default_rng([cfg.seed, 0x1EA4, i])
        syn = leaky_synthesize(
            train, release, LeakyConfig(f_l, m), rng=leak_rng
        )
        run_cfg = RunConfig(
            seed=int(np.random.default_rng([cfg.seed, 0xF00, i]).integers(2**63)),
            **run_cfg_fields,
        )
        report = evaluate_datasets(run_cfg, syn, train, control)
        for res in report["results"]:
            rows.append(
                {
                    "attack": res["attack"],
                    "setting": _setting_label(res["setting"]),
                    "f_l": f_l,
                    "aux": res["setting"]["aux"],
                    "risk": res["risk"]["value"],
                    "risk_raw": res["risk"]["raw"],
                    "risk_delta": res["risk"]["delta"],
                    "ci_low": res["risk"]["ci"][0],
                    "ci_high": res["risk"]["ci"][1],
                    "failed": res["failed"],
                    "excluded": res["excluded"],
                }
            )
        for err in report["errors"]:
            logger.error(
                "linearity setting failed at f_l=%s: %s", f_l, err["error"]
            )
    if cfg.output_path:
        _write_experiment_csv(rows, cfg.output_path)
    return rows


def _setting_label(setting: dict[str, Any]) -> str:
    if "mode" in setting:
        return f"mode={setting['mode']}|n_attrs={setting['n_attrs']}"
    if "k" in setting:
        return f"k={setting['k']}|aux={setting['aux']}"
    return f"secret={setting['secret']}|aux={setting['aux']}"


def _write_experiment_csv(rows: list[dict[str, Any]], path: str) -> None:
    fields = [
        "attack", "setting", "f_l", "aux", "risk", "risk_raw",
        "risk_delta", "ci_low", "ci_high", "failed", "excluded",
    ]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv_module.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# command line interface
# ---------------------------------------------------------------------------

def _cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = load_run_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if args.output is not None:
        cfg = dataclasses.replace(cfg, output_path=args.output)
    report = run_evaluation(cfg)
    if not cfg.output_path:
        json.dump(report, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    n_errors = len(report["errors"])
    if n_errors:
        print(
            f"{n_errors} setting(s) failed; report is partial",
            file=sys.stderr,
        )
        return 1
    return 0


def _cmd_leaky(args: argparse.Namespace) -> int:
    overrides = load_schema_file(args.schema) if args.schema else None
    train = load_csv(args.train, overrides, role=DatasetRole.TRAIN)
    release = load_csv(args.release, overrides, role=DatasetRole.RELEASE)
    if train.schema != release.schema:
        raise TabularError(
            "train and release schemas differ; use --schema to pin kinds"
        )
    size = args.m if args.m is not None else train.n_rows
    syn = leaky_synthesize(
        train, release, LeakyConfig(args.f_l, size, args.seed)
    )
    write_csv(syn, args.out)
    print(f"wrote {syn.n_rows} rows to {args.out}")
    return 0


def _cmd_experiment_linearity(args: argparse.Namespace) -> int:
    cfg = load_linearity_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if args.output is not None:
        cfg = dataclasses.replace(cfg, output_path=args.output)
    overrides = load_schema_file(cfg.schema_path) if cfg.schema_path else None
    original = load_csv(cfg.original_path, overrides)
    rows = linearity_experiment(original, cfg)
    if not cfg.output_path:
        _write_experiment_csv(rows, "/dev/stdout")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="synthrisk",
        description=(
            "Attack-based privacy risk evaluation for synthetic tabular data"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser(
        "evaluate", help="run the configured privacy attacks and write a report"
    )
    p_eval.add_argument("--config", required=True, help="JSON run config")
    p_eval.add_argument("--seed", type=int, help="override the config seed")
    p_eval.add_argument("--output", help="override the report output path")
    p_eval.set_defaults(func=_cmd_evaluate)

    p_leaky = sub.add_parser(
        "leaky", help="emit a leaky-synthesizer dataset for calibration"
    )
    p_leaky.add_argument("--train", required=True)
    p_leaky.add_argument("--release", required=True)
    p_leaky.add_argument(
        "--f-l", dest="f_l", type=float, required=True,
        help="fraction of output rows leaked from the training set",
    )
    p_leaky.add_argument(
        "--m", type=int, help="output size (default: training-set size)"
    )
    p_leaky.add_argument("--seed", type=int, default=0)
    p_leaky.add_argument("--out", required=True)
    p_leaky.add_argument("--schema", help="schema override JSON")
    p_leaky.set_defaults(func=_cmd_leaky)

    p_exp = sub.add_parser("experiment", help="validation experiments")
    exp_sub = p_exp.add_subparsers(dest="experiment", required=True)
    p_lin = exp_sub.add_parser(
        "linearity", help="risk vs implanted leak fraction sweep"
    )
    p_lin.add_argument("--config", required=True)
    p_lin.add_argument("--seed", type=int, help="override the config seed")
    p_lin.add_argument("--output", help="override the CSV output path")
    p_lin.set_defaults(func=_cmd_experiment_linearity)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, TabularError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
