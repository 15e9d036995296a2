"""Post-processing pipeline for event streams.

Ingests simulated (or recorded) per-setting event files, undoes the basis
variant inversions, clusters events into groups of n, bins, estimates the
CHSH value with shuffle-bootstrap error bars, and extracts the largest
cluster size that still shows a violation.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .binning import BinningStrategy, ChshEstimate, chsh_value, sign_vector
from .errors import (IngestionError, InsufficientDataError,
                     InvalidArgumentError)
from .pairstats import SETTING_PAIRS
from .simulate import EventStream, variant_inversions


@dataclass(frozen=True)
class ClusteredOutcomes:
    """Count pairs for one setting pair, clustered into windows of n."""

    n: int
    a_counts: np.ndarray
    b_counts: np.ndarray
    discarded: int

    @property
    def clusters(self) -> int:
        return len(self.a_counts)


@dataclass(frozen=True)
class PointEstimate:
    """Violation criterion: the point estimate itself exceeds 2."""


@dataclass(frozen=True)
class MinusKSigma:
    """Violation criterion: s - k*sigma exceeds 2."""

    k: float = 1.0


@dataclass(frozen=True)
class SnCurve:
    """S_n estimates over a (beta, n) grid and the extracted n_critical."""

    strategy: BinningStrategy
    entries: tuple  # (beta, n, s, sigma), sorted by (n, beta)
    n_critical: int
    criterion: object
    note: str | None = None


def read_jsonl(path) -> list[EventStream]:
    """Parse a JSON-lines event file into streams (physical bits)."""
    path = Path(path)
    streams: list[EventStream] = []
    header = None
    a_bits: list[int] = []
    b_bits: list[int] = []

    def flush():
        if header is None:
            return
        streams.append(EventStream(
            setting_pair=tuple(header["settingPair"]),
            basis_variant=int(header["basisVariant"]),
            a=np.array(a_bits, dtype=np.uint8),
            b=np.array(b_bits, dtype=np.uint8),
            meta={k: v for k, v in header.items()
                  if k not in ("settingPair", "basisVariant")}))

    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestionError(f"{path}:{lineno}: bad JSON ({exc})")
            if "settingPair" in obj:
                flush()
                header = obj
                a_bits, b_bits = [], []
                if int(obj.get("basisVariant", -1)) not in (0, 1, 2, 3):
                    raise IngestionError(
                        f"{path}:{lineno}: basis variant outside 0..3")
            elif "a" in obj and "b" in obj:
                if header is None:
                    raise IngestionError(
                        f"{path}:{lineno}: event record before any header")
                if obj["a"] not in (0, 1) or obj["b"] not in (0, 1):
                    raise IngestionError(
                        f"{path}:{lineno}: outcomes must be bits")
                a_bits.append(obj["a"])
                b_bits.append(obj["b"])
            else:
                raise IngestionError(
                    f"{path}:{lineno}: unrecognized record {obj!r}")
    flush()
    return streams


def read_csv(path) -> list[EventStream]:
    """Parse the compact CSV form (x, y, variant, a, b) into streams."""
    path = Path(path)
    chunks: dict[tuple, list] = {}
    order: list[tuple] = []
    with path.open() as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(reader.fieldnames) != {
                "x", "y", "variant", "a", "b"}:
            raise IngestionError(
                f"{path}:1: expected columns x,y,variant,a,b")
        for lineno, row in enumerate(reader, start=2):
            try:
                x, y = int(row["x"]), int(row["y"])
                v = int(row["variant"])
                a, b = int(row["a"]), int(row["b"])
            except (TypeError, ValueError):
                raise IngestionError(f"{path}:{lineno}: malformed row {row!r}")
            if v not in (0, 1, 2, 3):
                raise IngestionError(
                    f"{path}:{lineno}: basis variant outside 0..3")
            if a not in (0, 1) or b not in (0, 1):
                raise IngestionError(f"{path}:{lineno}: outcomes must be bits")
            key = ((x, y), v)
            if key not in chunks:
                chunks[key] = []
                order.append(key)
            chunks[key].append((a, b))
    streams = []
    for key in order:
        pairs = np.array(chunks[key], dtype=np.uint8)
        streams.append(EventStream(setting_pair=key[0], basis_variant=key[1],
                                   a=pairs[:, 0], b=pairs[:, 1], meta={}))
    return streams


def read_streams(path) -> list[EventStream]:
    path = Path(path)
    if path.suffix == ".csv":
        return read_csv(path)
    return read_jsonl(path)


def logical_bits(stream: EventStream) -> tuple[np.ndarray, np.ndarray]:
    """Undo the stream's basis-variant inversion on the physical bits."""
    inv_a, inv_b = variant_inversions(stream.basis_variant)
    return stream.a ^ np.uint8(inv_a), stream.b ^ np.uint8(inv_b)


def sequences_from_streams(streams) -> dict:
    """Concatenate logical bit sequences per setting pair, in stream order."""
    seqs = {key: ([], []) for key in SETTING_PAIRS}
    for stream in streams:
        if stream.setting_pair not in seqs:
            raise IngestionError(
                f"unknown setting pair {stream.setting_pair!r}")
        a, b = logical_bits(stream)
        seqs[stream.setting_pair][0].append(a)
        seqs[stream.setting_pair][1].append(b)
    out = {}
    for key in SETTING_PAIRS:
        a_parts, b_parts = seqs[key]
        if not a_parts:
            raise IngestionError(f"no events for setting pair {key}")
        out[key] = (np.concatenate(a_parts), np.concatenate(b_parts))
    return out


def ingest(paths) -> dict:
    """Read event files and return logical sequences keyed by setting pair."""
    streams = []
    for path in paths:
        streams.extend(read_streams(path))
    return sequences_from_streams(streams)


def cluster_events(sequence: tuple[np.ndarray, np.ndarray],
                   n: int) -> ClusteredOutcomes:
    """Sum bits over sequential non-overlapping windows of n events."""
    if n < 1:
        raise InvalidArgumentError(f"cluster size must be >= 1, got {n!r}")
    a, b = sequence
    m = len(a) // n
    a_counts = a[:m * n].reshape(m, n).sum(axis=1).astype(np.int64)
    b_counts = b[:m * n].reshape(m, n).sum(axis=1).astype(np.int64)
    return ClusteredOutcomes(n=int(n), a_counts=a_counts, b_counts=b_counts,
                             discarded=int(len(a) - m * n))


def _binned_signs(counts: np.ndarray, n: int, strategy: BinningStrategy,
                  rng: np.random.Generator | None) -> np.ndarray:
    s = sign_vector(n, strategy)[counts]
    ties = s == 0.0
    if np.any(ties):
        if rng is None:
            raise InvalidArgumentError(
                "randomized ties present but no rng supplied")
        s = s.copy()
        s[ties] = rng.choice([-1.0, 1.0], size=int(ties.sum()))
    return s


def estimate_sn(clustered: dict, strategy: BinningStrategy,
                rng: np.random.Generator | None = None) -> ChshEstimate:
    """Empirical binned correlators and CHSH value from clustered counts."""
    es = []
    n = None
    for key in SETTING_PAIRS:
        c = clustered[key]
        if c.clusters < 1:
            raise InsufficientDataError(
                f"no clusters for setting pair {key} (n={c.n})")
        if n is None:
            n = c.n
        elif c.n != n:
            raise InvalidArgumentError("inconsistent cluster sizes")
        sa = _binned_signs(c.a_counts, c.n, strategy, rng)
        sb = _binned_signs(c.b_counts, c.n, strategy, rng)
        es.append(float(np.mean(sa * sb)))
    return chsh_value((es[0], es[1], es[2], es[3]), n=n)


def bootstrap_sn(sequences: dict, n: int, strategy: BinningStrategy,
                 resamples: int = 1000, seed: int = 0,
                 threads: int = 1) -> tuple[float, float]:
    """Shuffle-recluster bootstrap of S_n: (sample mean, sample std).

    Each iteration permutes every setting pair's event order with its own
    generator (spawned deterministically from the seed), re-clusters and
    re-estimates.  Results are reduced in iteration order, so serial and
    threaded runs agree bit for bit.
    """
    if resamples < 2:
        raise InvalidArgumentError(f"resamples must be >= 2, got {resamples}")
    children = np.random.SeedSequence(seed).spawn(resamples)
    # pack each pair's (a, b) bits into one code array so a resample is a
    # single in-C shuffle instead of an index permutation plus two gathers
    packed = {key: (sequences[key][0] | (sequences[key][1] << np.uint8(1)))
              for key in SETTING_PAIRS}

    def one(i: int) -> float:
        rng = np.random.default_rng(children[i])
        clustered = {}
        for key in SETTING_PAIRS:
            codes = rng.permuted(packed[key])
            clustered[key] = cluster_events(
                (codes & np.uint8(1), codes >> np.uint8(1)), n)
        return estimate_sn(clustered, strategy, rng=rng).s

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(one, range(resamples)))
    else:
        values = [one(i) for i in range(resamples)]
    arr = np.array(values)
    return float(arr.mean()), float(arr.std(ddof=1))


def find_nc(sequences_per_beta: dict, strategy: BinningStrategy, n_values,
            criterion=PointEstimate(), resamples: int = 1000, seed: int = 0,
            threads: int = 1) -> SnCurve:
    """S_n with error bars over a (beta, n) grid, plus the largest violating n.

    The point estimate comes from the unshuffled ordering; sigma from the
    bootstrap.  n_critical is the largest n at which any beta meets the
    criterion (0, with a note, when none does).
    """
    if not sequences_per_beta:
        raise InvalidArgumentError("need data for at least one beta")
    n_values = sorted({int(n) for n in n_values})
    entries = []
    n_critical = 0
    betas = sorted(sequences_per_beta)
    for n in n_values:
        for bi, beta in enumerate(betas):
            sequences = sequences_per_beta[beta]
            tie_rng = np.random.default_rng(
                np.random.SeedSequence([int(seed), bi, int(n)]))
            clustered = {key: cluster_events(sequences[key], n)
                         for key in SETTING_PAIRS}
            s = estimate_sn(clustered, strategy, rng=tie_rng).s
            _, sigma = bootstrap_sn(sequences, n, strategy,
                                    resamples=resamples,
                                    seed=int(seed) + 7919 * (bi + 1) + n,
                                    threads=threads)
            entries.append((float(beta), int(n), float(s), float(sigma)))
            if isinstance(criterion, MinusKSigma):
                violated = s - criterion.k * sigma > 2.0
            else:
                violated = s > 2.0
            if violated:
                n_critical = max(n_critical, n)
    note = None if n_critical > 0 else "no n satisfied the criterion"
    return SnCurve(strategy=strategy, entries=tuple(entries),
                   n_critical=n_critical, criterion=criterion, note=note)
