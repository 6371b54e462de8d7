"""Per-iteration wall-time benchmarks with a linear cost fit.

Two phases are measured: a full training iteration (forward, backprop,
every update rule) and a forward-only iteration. Times are medians of
several repetitions, each repetition long enough to swamp timer
resolution, reported in milliseconds per iteration. Across architectures
the per-iteration cost is summarized by a least-squares line
a + b * connections.

Absolute numbers are hardware-bound; only orderings and ratios are
meaningful across machines.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .core import Network, forward_network, init_network
from .hyper import Hyperparameters, KINDS, default_hyperparameters
from .train import Trainer

__all__ = [
    "BenchFit",
    "BenchRow",
    "BenchReport",
    "bench_dataset",
    "time_train_ms",
    "time_forward_ms",
    "bench_iterations",
]

# each timed repetition aims for this many seconds of work
_WINDOW = 0.05


@dataclass(frozen=True)
class BenchFit:
    """Linear model a + b*n of per-iteration milliseconds vs connections."""

    a: float
    b: float

    def at(self, n: int) -> float:
        return self.a + self.b * n


@dataclass(frozen=True)
class BenchRow:
    kind: str
    arch: tuple[int, ...]
    connections: int
    r_res: int
    phase: str                      # "train" or "forward"
    ms_per_iter: float


@dataclass
class BenchReport:
    kind: str
    rows: list[BenchRow]
    train_fit: BenchFit
    forward_fit: BenchFit
    rres_rows: list[BenchRow]       # r_res sweep at a fixed architecture

    def csv_rows(self) -> list[tuple]:
        out = []
        for r in self.rows + self.rres_rows:
            arch = "-".join(str(s) for s in r.arch)
            out.append((r.kind, arch, r.connections, r.r_res, r.phase, r.ms_per_iter))
        return out


def bench_dataset(n_inputs: int, n_outputs: int, count: int = 64, seed: int = 0):
    """Synthetic (args, vals) pair; content is irrelevant to timing."""
    rng = np.random.default_rng(seed)
    args = rng.random((count, n_inputs)) - 0.5
    vals = np.where(rng.random((count, n_outputs)) < 0.5, -0.5, 0.5)
    return args, vals


def _median_ms(run, reps: int) -> float:
    """Median ms/iteration of run(k), sizing k to fill the time window."""
    run(8)                                      # warm-up, also JITs caches
    t0 = time.perf_counter()
    run(8)
    probe = max((time.perf_counter() - t0) / 8, 1e-9)
    inner = int(min(max(_WINDOW / probe, 8), 200_000))
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        run(inner)
        times.append((time.perf_counter() - t0) / inner)
    return float(np.median(times)) * 1000.0


def time_train_ms(net: Network, args, vals, reps: int = 5, seed: int = 0) -> float:
    """Median wall milliseconds per training iteration on a cloned net."""
    trainer = Trainer(net.clone(), np.asarray(args, float), np.asarray(vals, float), seed=seed)
    return _median_ms(lambda k: trainer.run(k, log_every=0), reps)


def time_forward_ms(net: Network, args, reps: int = 5) -> float:
    """Median wall milliseconds per forward-only iteration (one sample each)."""
    rows = [np.array(row) for row in np.asarray(args, float)]
    n = len(rows)

    def run(k: int) -> None:
        for i in range(k):
            forward_network(net, rows[i % n])

    return _median_ms(run, reps)


def bench_iterations(
    archs,
    kind: str,
    hp: Hyperparameters | None = None,
    reps: int = 5,
    rres_values: tuple[int, ...] = (),
    rres_arch: tuple[int, ...] | None = None,
    seed: int = 0,
) -> BenchReport:
    """Time both phases across architectures and fit cost vs connections.

    ``archs`` is a sequence of layer-size tuples covering at least four
    distinct connection counts. When ``rres_values`` is given the first
    architecture (or ``rres_arch``) is re-timed at each table length,
    holding everything else fixed.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}")
    if hp is None:
        hp = default_hyperparameters(kind)
    archs = [tuple(int(s) for s in a) for a in archs]

    rows: list[BenchRow] = []
    counts: set[int] = set()
    ns, train_ms, fwd_ms = [], [], []
    for arch in archs:
        net = init_network(arch, kind, hp, np.random.default_rng(seed))
        args, vals = bench_dataset(arch[0], arch[-1], seed=seed)
        t_train = time_train_ms(net, args, vals, reps=reps, seed=seed)
        t_fwd = time_forward_ms(net, args, reps=reps)
        n = net.connection_count()
        counts.add(n)
        ns.append(n)
        train_ms.append(t_train)
        fwd_ms.append(t_fwd)
        rows.append(BenchRow(kind, arch, n, hp.r_res, "train", t_train))
        rows.append(BenchRow(kind, arch, n, hp.r_res, "forward", t_fwd))
    if len(counts) < 4:
        raise ValueError(
            f"need >= 4 distinct connection counts for the fit, got {sorted(counts)}"
        )

    train_b, train_a = np.polyfit(ns, train_ms, 1)
    fwd_b, fwd_a = np.polyfit(ns, fwd_ms, 1)

    rres_rows: list[BenchRow] = []
    sweep_arch = rres_arch or archs[0]
    for r_res in rres_values:
        hp_r = hp.replace(r_res=int(r_res))
        net = init_network(sweep_arch, kind, hp_r, np.random.default_rng(seed))
        args, vals = bench_dataset(sweep_arch[0], sweep_arch[-1], seed=seed)
        n = net.connection_count()
        rres_rows.append(BenchRow(
            kind, sweep_arch, n, int(r_res), "train",
            time_train_ms(net, args, vals, reps=reps, seed=seed),
        ))
        rres_rows.append(BenchRow(
            kind, sweep_arch, n, int(r_res), "forward",
            time_forward_ms(net, args, reps=reps),
        ))

    return BenchReport(
        kind=kind,
        rows=rows,
        train_fit=BenchFit(float(train_a), float(train_b)),
        forward_fit=BenchFit(float(fwd_a), float(fwd_b)),
        rres_rows=rres_rows,
    )
