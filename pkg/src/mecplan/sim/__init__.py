"""Discrete-event simulation of local and MEC queues.

Produces empirical delay CCDFs under three service disciplines
(per-source FCFS, multiplexed FCFS, egalitarian processor sharing) to
validate the closed-form models. All delays are in slots.

Randomness: NumPy Philox4x64-10 counter-based generators, one independent
child stream per traffic source via ``SeedSequence(seed).spawn``. The same
seed reproduces every sample bit-for-bit, on either kernel backend.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ..queueing import ParetoWorkload
from ._backend import backend_name, kernels

__all__ = [
    "ArrivalSpec",
    "JobClass",
    "Discipline",
    "EmpiricalCcdf",
    "SimResult",
    "PsCheckRow",
    "PsValidationReport",
    "UnstableConfigError",
    "backend_name",
    "pareto_sample",
    "simulate",
    "run_queue_sim",
    "validate_ps_approximation",
    "write_ccdf_csv",
]


class UnstableConfigError(ValueError):
    """Offered load >= 1 and transient runs were not requested."""


@dataclass(frozen=True)
class ArrivalSpec:
    """Per-source arrival processes; rates in packets/slot.

    ``bernoulli`` sources emit at integer slot boundaries with at most one
    packet per slot; ``poisson`` sources emit in continuous time.
    """

    kind: str
    rates: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in ("bernoulli", "poisson"):
            raise ValueError(f"unknown arrival kind {self.kind!r}")
        if not self.rates:
            raise ValueError("need at least one source")
        for r in self.rates:
            if self.kind == "bernoulli" and not 0.0 < r < 1.0:
                raise ValueError("bernoulli rate must be in (0, 1)")
            if self.kind == "poisson" and r <= 0.0:
                raise ValueError("poisson rate must be positive")

    @property
    def total_rate(self) -> float:
        return float(sum(self.rates))


@dataclass(frozen=True)
class JobClass:
    """Work requirement of one source's packets, in CPU cycles."""

    label: str
    work_kind: str  # "deterministic" | "pareto"
    c: float = 1.0  # deterministic cycles
    c0: float = 1.0  # pareto minimum cycles
    v: float = 1.5  # pareto tail exponent

    @classmethod
    def deterministic(cls, c: float, label: str = "short") -> "JobClass":
        if c <= 0:
            raise ValueError("work must be positive")
        return cls(label=label, work_kind="deterministic", c=c)

    @classmethod
    def pareto(cls, c0: float, v: float, label: str = "long") -> "JobClass":
        if c0 <= 0:
            raise ValueError("c0 must be positive")
        if not 1.0 < v < 2.0:
            raise ValueError("v must be in (1, 2)")
        return cls(label=label, work_kind="pareto", c0=c0, v=v)

    @property
    def mean_work(self) -> float:
        if self.work_kind == "deterministic":
            return self.c
        return self.v * self.c0 / (self.v - 1.0)


@dataclass(frozen=True)
class Discipline:
    """Service order at the server.

    ``fcfs_individual`` statically splits the service rate per source
    (splits must sum to the total rate), ``fcfs_mux`` runs one shared FCFS
    queue, ``ps`` shares the rate equally over all resident jobs.
    """

    kind: str
    rate_split: tuple[float, ...] | None = None

    @classmethod
    def ps(cls) -> "Discipline":
        return cls(kind="ps")

    @classmethod
    def fcfs_mux(cls) -> "Discipline":
        return cls(kind="fcfs_mux")

    @classmethod
    def fcfs_individual(cls, rate_split) -> "Discipline":
        split = tuple(float(s) for s in rate_split)
        if any(s <= 0 for s in split):
            raise ValueError("all rate splits must be positive")
        return cls(kind="fcfs_individual", rate_split=split)


def pareto_sample(pw: ParetoWorkload, u):
    """Inverse-CDF draw of the long/short cycle ratio from uniform ``u``."""
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0) or np.any(u >= 1.0):
        raise ValueError("u must lie in (0, 1)")
    out = pw.c0_ratio * u ** (-1.0 / pw.v)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class EmpiricalCcdf:
    """Sorted post-warmup delay samples of one packet class."""

    samples: np.ndarray
    seed: tuple[int, ...]
    label: str = ""

    def __post_init__(self):
        if len(self.samples) == 0:
            raise ValueError("empty sample set")

    @property
    def count(self) -> int:
        return len(self.samples)

    def query(self, t: float) -> float:
        """Fraction of samples strictly greater than ``t``."""
        idx = np.searchsorted(self.samples, t, side="right")
        return 1.0 - idx / len(self.samples)

    def query_geq(self, t: float) -> float:
        """Fraction of samples >= ``t`` (distinguishes atoms)."""
        idx = np.searchsorted(self.samples, t, side="left")
        return 1.0 - idx / len(self.samples)

    def stderr(self, t: float) -> float:
        """Binomial standard error of query(t)."""
        p = self.query(t)
        return float(np.sqrt(max(p * (1.0 - p), 0.0) / len(self.samples)))

    def merge(self, other: "EmpiricalCcdf") -> "EmpiricalCcdf":
        if other.label != self.label:
            raise ValueError("cannot merge CCDFs of different classes")
        samples = np.sort(np.concatenate([self.samples, other.samples]))
        seed = tuple(sorted(self.seed + other.seed))
        return EmpiricalCcdf(samples=samples, seed=seed, label=self.label)


@dataclass
class SimResult:
    """Raw per-packet record of one run, in global arrival order."""

    times: np.ndarray
    works: np.ndarray
    source: np.ndarray
    labels: list[str]  # per-source class label
    sojourn: np.ndarray
    seen: np.ndarray | None  # resident jobs found on arrival (ps only)
    warmup: int
    seed: int

    def warm_mask(self) -> np.ndarray:
        mask = np.zeros(len(self.times), dtype=bool)
        mask[self.warmup :] = True
        return mask


def _generate_arrivals(rng, kind, rate, horizon):
    """Arrival times of one source on [0, horizon), extending until covered."""
    chunks = []
    # slotted sources may fire at slot 0, so the first geometric gap counts
    # from -1; continuous sources count from 0
    t_last = -1.0 if kind == "bernoulli" else 0.0
    expect = int(rate * horizon * 1.2) + 64
    while t_last < horizon:
        if kind == "bernoulli":
            gaps = rng.geometric(rate, size=expect).astype(np.float64)
        else:
            gaps = rng.exponential(1.0 / rate, size=expect)
        tt = t_last + np.cumsum(gaps)
        chunks.append(tt)
        t_last = tt[-1]
        expect = max(expect // 4, 64)
    times = np.concatenate(chunks) if len(chunks) > 1 else chunks[0]
    return times[times < horizon]


def _generate_works(rng, job, count):
    if job.work_kind == "deterministic":
        return np.full(count, job.c, dtype=np.float64)
    u = 1.0 - rng.random(count)  # (0, 1]
    return job.c0 * u ** (-1.0 / job.v)


def simulate(
    arrivals: ArrivalSpec,
    classes,
    disc: Discipline,
    total_rate: float,
    n_packets: int,
    seed: int,
    allow_unstable: bool = False,
) -> SimResult:
    """Run one queue to roughly ``n_packets`` arrivals and record sojourns."""
    if n_packets < 1:
        raise ValueError("n_packets must be >= 1")
    classes = list(classes)
    if len(classes) != len(arrivals.rates):
        raise ValueError("need one JobClass per source")
    if total_rate <= 0:
        raise ValueError("total_rate must be positive")
    load = sum(r * j.mean_work for r, j in zip(arrivals.rates, classes)) / total_rate
    if load >= 1.0 and not allow_unstable:
        raise UnstableConfigError(
            f"offered load {load:.3f} >= 1; pass allow_unstable=True for a "
            "transient run"
        )
    if disc.kind == "fcfs_individual":
        if disc.rate_split is None or len(disc.rate_split) != len(classes):
            raise ValueError("fcfs_individual needs one rate split per source")
        if abs(sum(disc.rate_split) - total_rate) > 1e-9 * total_rate:
            raise ValueError("rate splits must sum to the total rate")

    horizon = n_packets / arrivals.total_rate
    streams = np.random.SeedSequence(seed).spawn(len(classes))
    per_times = []
    per_works = []
    for k, (job, child) in enumerate(zip(classes, streams)):
        rng = np.random.Generator(np.random.Philox(child))
        tt = _generate_arrivals(rng, arrivals.kind, arrivals.rates[k], horizon)
        per_times.append(tt)
        per_works.append(_generate_works(rng, job, len(tt)))

    times = np.concatenate(per_times)
    works = np.concatenate(per_works)
    source = np.concatenate(
        [np.full(len(tt), k, dtype=np.int64) for k, tt in enumerate(per_times)]
    )
    order = np.argsort(times, kind="stable")
    times, works, source = times[order], works[order], source[order]

    seen = None
    if disc.kind == "ps":
        sojourn, seen = kernels.ps_sojourn(times, works, total_rate)
    elif disc.kind == "fcfs_mux":
        sojourn = kernels.lindley_fcfs(times, works / total_rate)
    else:
        sojourn = np.empty(len(times), dtype=np.float64)
        for k, split in enumerate(disc.rate_split):
            idx = np.nonzero(source == k)[0]
            sojourn[idx] = kernels.lindley_fcfs(
                np.ascontiguousarray(times[idx]),
                np.ascontiguousarray(works[idx] / split),
            )

    n = len(times)
    warmup = min(max(10_000, n // 100), n // 2)
    return SimResult(
        times=times,
        works=works,
        source=source,
        labels=[j.label for j in classes],
        sojourn=sojourn,
        seen=seen,
        warmup=warmup,
        seed=seed,
    )


def run_queue_sim(
    arrivals: ArrivalSpec,
    classes,
    disc: Discipline,
    total_rate: float,
    n_packets: int,
    seed: int,
    allow_unstable: bool = False,
) -> dict[str, EmpiricalCcdf]:
    """Simulate and fold the post-warmup sojourns into per-class CCDFs."""
    res = simulate(arrivals, classes, disc, total_rate, n_packets, seed, allow_unstable)
    uniq = list(dict.fromkeys(res.labels))  # stable unique order
    label_id = np.array([uniq.index(lab) for lab in res.labels], dtype=np.int64)
    packet_label = label_id[res.source]
    out = {}
    warm = res.warm_mask()
    for li, label in enumerate(uniq):
        mask = warm & (packet_label == li)
        if not mask.any():
            continue
        out[label] = EmpiricalCcdf(
            samples=np.sort(res.sojourn[mask]), seed=(seed,), label=label
        )
    return out


@dataclass(frozen=True)
class PsCheckRow:
    q: int
    t_slots: float
    model: float
    empirical: float
    stderr: float
    flagged: bool


@dataclass
class PsValidationReport:
    rho: float
    rows: list[PsCheckRow] = field(default_factory=list)
    passed: bool = True

    def flagged(self) -> list[PsCheckRow]:
        return [r for r in self.rows if r.flagged]


def validate_ps_approximation(
    arrivals: ArrivalSpec,
    classes,
    total_rate: float,
    n_packets: int,
    seed: int,
    short_label: str = "short",
    min_prob: float = 1e-3,
    rel_slack: float = 0.2,
) -> PsValidationReport:
    """Compare the simulated short-packet CCDF against the rho^q model.

    Probes every q while the empirical probability stays >= ``min_prob``;
    a point is flagged when |model - empirical| > 3 stderr + rel_slack *
    model. The empirical CCDF is evaluated with weak inequality since the
    delay grid points are exactly the model's atoms.
    """
    classes = list(classes)
    shorts = [j for j in classes if j.label == short_label]
    if not shorts or any(j.work_kind != "deterministic" for j in shorts):
        raise ValueError("short class must be deterministic work")
    c_s = shorts[0].c
    rho = sum(r * j.mean_work for r, j in zip(arrivals.rates, classes)) / total_rate

    ccdfs = run_queue_sim(arrivals, classes, Discipline.ps(), total_rate, n_packets, seed)
    ccdf = ccdfs[short_label]

    report = PsValidationReport(rho=rho)
    q = 0
    while True:
        t_q = c_s * (q + 1) / total_rate
        # tiny relative fuzz keeps the delay atoms (exact multiples of the
        # service quantum) on the >= side despite float accumulation
        emp = ccdf.query_geq(t_q * (1.0 - 1e-9))
        if q > 0 and emp < min_prob:
            break
        model = rho**q
        se = float(np.sqrt(max(emp * (1.0 - emp), 1e-12) / ccdf.count))
        bad = abs(model - emp) > 3.0 * se + rel_slack * model
        report.rows.append(
            PsCheckRow(q=q, t_slots=t_q, model=model, empirical=emp, stderr=se, flagged=bad)
        )
        if bad:
            report.passed = False
        q += 1
        if q > 10_000:
            break
    return report


def write_ccdf_csv(path, entries):
    """Write CCDF rows: ``(label, t, empirical, stderr, model|None, reliable)``.

    Column layout is part of the CLI contract; floats are rendered with
    repr-stable %.12g formatting.
    """

    def fmt(x):
        return "" if x is None else f"{x:.12g}"

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["class", "t_slots", "prob_empirical", "stderr", "prob_model", "reliable"]
        )
        for label, t, emp, se, model, reliable in entries:
            writer.writerow(
                [label, fmt(t), fmt(emp), fmt(se), fmt(model), int(reliable)]
            )
