"""Out-of-index simulation: encode, corrupt, round, decode, tally.

Stands in for an imperfect generator without training one.  A true index is
drawn, encoded under a scheme, perturbed by a :class:`NoiseModel`, rounded
back to bits and decoded.  Plain binary can land on values ``>= M``; one-hot
can come out with zero or several set bits; ResBit always decodes.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import product
from typing import Sequence

import numpy as np

from . import codecs
from .exceptions import DomainError

NOISE_KINDS = ("gaussian-on-bits", "uniform-random-bits", "bitflip")

REPORT_COLUMNS = ("scheme", "M", "noise_kind", "param", "trials", "ooi_rate",
                  "malformed_rate", "coverage_ratio")


@dataclass(frozen=True)
class NoiseModel:
    """How a simulated generator corrupts an encoded vector.

    ``param`` is the Gaussian standard deviation for ``gaussian-on-bits`` and
    the flip probability for ``bitflip``; ``uniform-random-bits`` ignores it.
    """

    kind: str
    param: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise DomainError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if self.param < 0:
            raise DomainError("noise parameter must be non-negative")
        if self.kind == "bitflip" and self.param > 0.5:
            raise DomainError("flip probability must lie in [0, 0.5]")

    def corrupt(self, bits: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Noisy copy of ``bits`` rounded back to {0, 1}."""
        if self.kind == "uniform-random-bits":
            return rng.integers(0, 2, size=bits.shape, dtype=np.uint8)
        if self.kind == "bitflip":
            flips = rng.random(bits.shape) < self.param
            return bits ^ flips.astype(np.uint8)
        noisy = bits + self.param * rng.standard_normal(bits.shape)
        return (noisy >= 0.5).astype(np.uint8)


@dataclass
class SimulationReport:
    scheme: str
    M: int
    noise: NoiseModel
    trials: int
    out_of_index_count: int
    malformed_count: int
    exact_count: int
    histogram: np.ndarray = field(repr=False)

    @property
    def out_of_index_rate(self) -> float:
        return self.out_of_index_count / self.trials

    @property
    def malformed_rate(self) -> float:
        return self.malformed_count / self.trials

    @property
    def exact_rate(self) -> float:
        return self.exact_count / self.trials

    @property
    def coverage_ratio(self) -> float:
        """Share of the ``M`` classes that were decoded at least once."""
        return int(np.count_nonzero(self.histogram)) / self.M

    def row(self) -> dict:
        return {
            "scheme": self.scheme,
            "M": self.M,
            "noise_kind": self.noise.kind,
            "param": self.noise.param,
            "trials": self.trials,
            "ooi_rate": self.out_of_index_rate,
            "malformed_rate": self.malformed_rate,
            "coverage_ratio": self.coverage_ratio,
        }

    def to_dict(self) -> dict:
        d = self.row()
        d.update(
            seed=self.noise.seed,
            out_of_index_count=self.out_of_index_count,
            malformed_count=self.malformed_count,
            exact_rate=self.exact_rate,
            histogram=self.histogram.tolist(),
        )
        return d


def _index_probs(M: int, index_dist: str, zipf_s: float):
    if index_dist == "uniform":
        return None
    if index_dist == "zipf":
        w = 1.0 / np.arange(1, M + 1, dtype=np.float64) ** zipf_s
        return w / w.sum()
    raise DomainError(f"unknown index distribution {index_dist!r}")


def run_ooi_sim(M: int, scheme: str, noise: NoiseModel, trials: int,
                index_dist: str = "uniform", zipf_s: float = 1.0,
                batch_size: int = 1 << 16) -> SimulationReport:
    """Simulate ``trials`` noisy round trips of uniformly (or Zipf) drawn indices."""
    if trials < 1:
        raise DomainError("trials must be >= 1")
    codecs.dims(M, scheme)
    rng = np.random.default_rng(noise.seed)
    probs = _index_probs(M, index_dist, zipf_s)
    histogram = np.zeros(M, dtype=np.int64)
    ooi = malformed = exact = 0
    done = 0
    while done < trials:
        n = min(batch_size, trials - done)
        if probs is None:
            truth = rng.integers(0, M, size=n)
        else:
            truth = rng.choice(M, size=n, p=probs)
        bits = noise.corrupt(codecs.encode_array(truth, M, scheme), rng)
        decoded = codecs.decode_array(bits, M, scheme)
        ooi += int(np.count_nonzero(decoded == codecs.OUT_OF_INDEX))
        malformed += int(np.count_nonzero(decoded == codecs.MALFORMED))
        exact += int(np.count_nonzero(decoded == truth))
        histogram += np.bincount(decoded[decoded >= 0], minlength=M)
        done += n
    return SimulationReport(scheme, int(M), noise, int(trials), ooi, malformed, exact, histogram)


def cell_seeds(master_seed: int, n_cells: int) -> list[int]:
    """Independent 64-bit seeds for each sweep cell, fixed by the master seed."""
    children = np.random.SeedSequence(master_seed).spawn(n_cells)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def sweep(M_list: Sequence[int], schemes: Sequence[str], noise_grid: Sequence[NoiseModel],
          trials: int, master_seed: int = 0, threads: int = 1,
          index_dist: str = "uniform", zipf_s: float = 1.0) -> list[SimulationReport]:
    """Run :func:`run_ooi_sim` over the product ``M x scheme x noise``.

    Cell seeds come from the master seed and the cell's position, so results
    do not depend on ``threads``.
    """
    cells = list(product(M_list, schemes, noise_grid))
    seeds = cell_seeds(master_seed, len(cells))
    jobs = [(M, scheme, replace(noise, seed=seed)) for (M, scheme, noise), seed in zip(cells, seeds)]

    def run(job):
        M, scheme, noise = job
        return run_ooi_sim(M, scheme, noise, trials, index_dist, zipf_s)

    if threads <= 1:
        return [run(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run, jobs))


def reports_csv(reports: Sequence[SimulationReport]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in reports:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.row().items()})
    return buf.getvalue()


def reports_json(reports: Sequence[SimulationReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], sort_keys=True, indent=1) + "\n"


def onehot_malformed_probability(M: int, p: float) -> float:
    """Exact chance that flipping each bit of a one-hot code with probability
    ``p`` leaves a code that is not one-hot.

    Valid outcomes: nothing flips, or the hot bit and exactly one cold bit
    flip together.
    """
    valid = (1 - p) ** M + (M - 1) * p * p * (1 - p) ** (M - 2) if M >= 2 else 1 - p
    return 1.0 - valid


def binary_ooi_probability(M: int) -> float:
    """Out-of-index chance of a uniformly random binary pattern."""
    w = codecs.binary_width(M)
    return ((1 << w) - M) / (1 << w)
