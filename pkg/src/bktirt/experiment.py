"""Population-scale convergence experiment.

Simulates a population of learners crossed with an item bank, one two-state
mastery chain per (person, item) pair started unmastered, and pools the
noisy responses after a configurable number of chain steps into bins of the
advantage log(p_learn) - log(p_forget). As the step count grows the binned
proportions approach the discrimination-1 4PL curve with asymptotes p_guess
and 1 - p_slip.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientData, OutOfRange
from .irt import irf_4pl
from .params import Irf4pl
from .rng import DEFAULT_SEED, RngKey

# Uniform draws for the learning/forgetting rates are confined to the open
# interval (EDGE, 1 - EDGE) so their logs are finite.
_EDGE = 1e-12

# Advantage axis covered by the bin grid; pairs outside are pooled into the
# extreme bins.
_BIN_SPAN = 8.0

# Stream layout: child(0) draws the population, child(1, person, item) draws
# one block of shape (replications, steps + checkpoints) per pair.
_POPULATION_STREAM = 0
_PAIR_STREAM = 1


@dataclass(frozen=True)
class SimConfig:
    """Scale, noise and binning knobs for one experiment run."""

    n_people: int = 1000
    n_items: int = 100
    replications: int = 1000
    iteration_counts: tuple[int, ...] = (2, 5, 50)
    p_slip: float = 0.1
    p_guess: float = 0.1
    seed: int = DEFAULT_SEED
    bin_width: float = 0.25

    def __post_init__(self) -> None:
        object.__setattr__(self, "iteration_counts", tuple(self.iteration_counts))
        if min(self.n_people, self.n_items, self.replications) < 1:
            raise OutOfRange("population, item and replication counts must be >= 1")
        if not self.iteration_counts or min(self.iteration_counts) < 1:
            raise OutOfRange("iteration_counts must be non-empty with entries >= 1")
        if not self.bin_width > 0:
            raise OutOfRange(f"bin_width must be > 0, got {self.bin_width}")
        for name in ("p_slip", "p_guess"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0 or math.isnan(value):
                raise OutOfRange(f"{name} must lie in [0, 1], got {value}")

    @classmethod
    def desk(cls, **overrides) -> "SimConfig":
        """Reduced-scale preset that runs in seconds (for CI and smoke runs)."""
        base = dict(n_people=200, n_items=50, replications=200)
        base.update(overrides)
        return cls(**base)

    def irf(self) -> Irf4pl:
        """The equilibrium curve the binned proportions converge to."""
        return Irf4pl(a=1.0, b=0.0, c=self.p_guess, d=1.0 - self.p_slip)


@dataclass(frozen=True)
class Population:
    """Per-person learning rates and per-item forgetting rates, with logs."""

    p_learn: np.ndarray
    p_forget: np.ndarray
    theta: np.ndarray
    b: np.ndarray


def draw_population(config: SimConfig, key: RngKey) -> Population:
    """Draw i.i.d. uniform learning/forgetting rates and their log scores.

    Rates are uniform on (1e-12, 1 - 1e-12) (people first, then items, from
    one stream), so theta = log p_learn and b = log p_forget are finite and
    nonpositive.
    """
    gen = key.generator()
    span = 1.0 - 2.0 * _EDGE
    p_learn = _EDGE + span * gen.random(config.n_people)
    p_forget = _EDGE + span * gen.random(config.n_items)
    return Population(
        p_learn=p_learn,
        p_forget=p_forget,
        theta=np.log(p_learn),
        b=np.log(p_forget),
    )


@dataclass(frozen=True)
class BinnedCurve:
    """Pooled correct proportions by advantage bin for one step count.

    Bins are centered on multiples of the bin width, ordered ascending;
    only bins that received observations are kept.
    """

    iterations: int
    bin_centers: np.ndarray
    prop_correct: np.ndarray
    n_obs: np.ndarray

    def rows(self) -> list[tuple[float, int, float, int]]:
        return [
            (float(c), self.iterations, float(p), int(n))
            for c, p, n in zip(self.bin_centers, self.prop_correct, self.n_obs)
        ]


def _bin_index(advantage: np.ndarray, width: float) -> tuple[np.ndarray, np.ndarray]:
    k_max = int(math.floor(_BIN_SPAN / width))
    idx = np.clip(np.rint(advantage / width).astype(np.int64), -k_max, k_max) + k_max
    centers = (np.arange(2 * k_max + 1) - k_max) * width
    return idx, centers


def _simulate_person_block(
    people: range,
    config: SimConfig,
    pop: Population,
    key: RngKey,
    checkpoints: list[int],
    pair_bin: np.ndarray,
    n_bins: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Accumulate correct/observation counts for a contiguous person range.

    Each (person, item) pair consumes one uniform block of shape
    (replications, T_max + n_checkpoints): the first T_max columns drive the
    latent transitions, the rest drive one response emission per checkpoint.
    """
    t_max = checkpoints[-1]
    n_check = len(checkpoints)
    reps = config.replications
    p_correct_mastered = 1.0 - config.p_slip
    p_correct_unmastered = config.p_guess
    correct = np.zeros((n_check, n_bins), dtype=np.int64)
    observed = np.zeros((n_check, n_bins), dtype=np.int64)
    check_at = {t: i for i, t in enumerate(checkpoints)}
    for person in people:
        p_learn = pop.p_learn[person]
        for item in range(config.n_items):
            p_keep = 1.0 - pop.p_forget[item]
            draws = key.child(_PAIR_STREAM, person, item).generator().random(
                (reps, t_max + n_check)
            )
            z = np.zeros(reps, dtype=bool)
            k = pair_bin[person, item]
            for t in range(1, t_max + 1):
                u = draws[:, t - 1]
                z = np.where(z, u < p_keep, u < p_learn)
                ci = check_at.get(t)
                if ci is not None:
                    responses = draws[:, t_max + ci] < np.where(
                        z, p_correct_mastered, p_correct_unmastered
                    )
                    correct[ci, k] += int(np.count_nonzero(responses))
                    observed[ci, k] += reps
    return correct, observed


def run_equilibrium_experiment(
    config: SimConfig, threads: int = 1
) -> dict[int, BinnedCurve]:
    """Run the full population x item bank simulation; one curve per count.

    Latent chains are simulated once to the largest iteration count and read
    at every requested count, with an independent emission per checkpoint.
    Results are bit-identical for a given config regardless of thread count:
    every pair owns its key-derived stream and all pooling is integer
    summation.
    """
    key = RngKey(config.seed)
    pop = draw_population(config, key.child(_POPULATION_STREAM))
    checkpoints = sorted(set(config.iteration_counts))
    advantage = pop.theta[:, None] - pop.b[None, :]
    pair_bin, centers = _bin_index(advantage, config.bin_width)
    n_bins = centers.size

    threads = max(1, int(threads))
    block_size = max(1, -(-config.n_people // threads))
    blocks = [
        range(start, min(start + block_size, config.n_people))
        for start in range(0, config.n_people, block_size)
    ]
    correct = np.zeros((len(checkpoints), n_bins), dtype=np.int64)
    observed = np.zeros_like(correct)
    if threads == 1:
        partials = [
            _simulate_person_block(
                block, config, pop, key, checkpoints, pair_bin, n_bins
            )
            for block in blocks
        ]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(
                pool.map(
                    lambda block: _simulate_person_block(
                        block, config, pop, key, checkpoints, pair_bin, n_bins
                    ),
                    blocks,
                )
            )
    for part_correct, part_observed in partials:
        correct += part_correct
        observed += part_observed

    curves: dict[int, BinnedCurve] = {}
    for ci, t in enumerate(checkpoints):
        mask = observed[ci] > 0
        curves[t] = BinnedCurve(
            iterations=t,
            bin_centers=centers[mask],
            prop_correct=correct[ci, mask] / observed[ci, mask],
            n_obs=observed[ci, mask].copy(),
        )
    return curves


def compare_to_irf(
    curve: BinnedCurve, item: Irf4pl, min_count: int = 1
) -> tuple[float, float]:
    """(max absolute deviation, count-weighted RMSE) against a 4PL curve,
    over bins holding at least min_count observations."""
    mask = curve.n_obs >= min_count
    if not np.any(mask):
        raise InsufficientData(
            f"no bins with at least {min_count} observations"
        )
    expected = irf_4pl(curve.bin_centers[mask], item)
    dev = np.abs(curve.prop_correct[mask] - expected)
    weights = curve.n_obs[mask]
    max_abs = float(dev.max())
    rmse = float(np.sqrt(np.sum(weights * dev**2) / np.sum(weights)))
    return max_abs, rmse


CURVE_CSV_HEADER = ["bin_center", "iterations", "prop_correct", "n_obs", "irf_value"]


def write_curves_csv(
    curves: dict[int, BinnedCurve], item: Irf4pl, path: str
) -> None:
    """Plot-ready CSV: one row per (bin, iteration count) with the
    superimposable equilibrium curve value."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        handle.write("# format_version=1\n")
        writer = csv.writer(handle)
        writer.writerow(CURVE_CSV_HEADER)
        for t in sorted(curves):
            curve = curves[t]
            irf_values = irf_4pl(curve.bin_centers, item)
            for (center, iterations, prop, n_obs), irf_value in zip(
                curve.rows(), irf_values
            ):
                writer.writerow(
                    [repr(center), iterations, repr(prop), n_obs, repr(float(irf_value))]
                )


def summarize_curves(
    curves: dict[int, BinnedCurve], item: Irf4pl, min_count: int
) -> dict:
    """Deviation summary per iteration count, as written beside the CSV."""
    summary: dict = {"format_version": 1, "min_count": min_count, "max_abs_dev": {}, "weighted_rmse": {}}
    for t in sorted(curves):
        max_abs, rmse = compare_to_irf(curves[t], item, min_count)
        summary["max_abs_dev"][str(t)] = max_abs
        summary["weighted_rmse"][str(t)] = rmse
    return summary


def write_summary_json(summary: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(summary, handle, indent=2)
        handle.write("\n")
