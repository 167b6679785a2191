"""K-means on day vectors: the plain Lloyd variant and the two-stage variant.

The two-stage variant clusters the days into ``k1`` groups and then splits
every group into ``k2`` sub-clusters, so extreme days that the first pass
lumps together with ordinary ones get a centroid of their own.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .timeseries import HOURS, FeatureLayout, HourlyRecordSet, ObservationSet, ScalingParams, denormalize

TKM = "tkm"
MKM = "mkm"
HISTORY = "history"


class ClusteringError(ValueError):
    pass


class MkmPreconditionError(ClusteringError):
    """A first-stage cluster is smaller than the requested split."""

    def __init__(self, cluster: int, size: int, k2: int):
        self.cluster, self.size, self.k2 = cluster, size, k2
        super().__init__(f"first-stage cluster {cluster + 1} has {size} member(s), fewer than k2={k2}")


@dataclass
class ClusteringResult:
    centroids: np.ndarray
    assignment: np.ndarray
    counts: np.ndarray
    sse: float
    iterations: int
    seed: int
    converged: bool = True
    sse_trace: List[float] = field(default_factory=list)

    @property
    def k(self) -> int:
        return int(self.centroids.shape[0])


def _as_matrix(observations) -> np.ndarray:
    if isinstance(observations, ObservationSet):
        return observations.matrix
    return np.atleast_2d(np.asarray(observations, dtype=float))


def _sq_dist(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - C[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def assign(observations, centroids) -> np.ndarray:
    """Nearest centroid by squared Euclidean distance, lowest index on ties."""
    X = _as_matrix(observations)
    C = np.atleast_2d(np.asarray(centroids, dtype=float))
    if C.shape[0] < 1:
        raise ClusteringError("need at least one centroid")
    return np.argmin(_sq_dist(X, C), axis=1)


def recompute_centroids(observations, assignment, k: int,
                        previous: Optional[np.ndarray] = None) -> np.ndarray:
    """Member means; an empty cluster keeps ``previous`` (or NaN without one)."""
    X = _as_matrix(observations)
    a = np.asarray(assignment)
    C = np.full((k, X.shape[1]), np.nan)
    for j in range(k):
        members = X[a == j]
        if len(members):
            C[j] = members.mean(axis=0)
        elif previous is not None:
            C[j] = previous[j]
    return C


def _sse(X: np.ndarray, C: np.ndarray, a: np.ndarray) -> float:
    d = X - C[a]
    return float(np.einsum("nd,nd->", d, d))


def _repair_empty(X, C, a, k):
    """Move the point farthest from its centroid into each empty cluster."""
    a = a.copy()
    for j in range(k):
        if np.any(a == j):
            continue
        counts = np.bincount(a, minlength=k)
        dist = np.einsum("nd,nd->n", X - C[a], X - C[a])
        dist[counts[a] <= 1] = -1.0  # never empty another cluster
        far = int(np.argmax(dist))
        a[far] = j
        C = recompute_centroids(X, a, k, previous=C)
    return C, a


def tkm(observations, k: int, seed: int = 0, max_iter: int = 300) -> ClusteringResult:
    """Lloyd iterations from ``k`` randomly drawn days until assignments settle."""
    X = _as_matrix(observations)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ClusteringError(f"k must lie in [1, {n}], got {k}")
    rng = np.random.default_rng(seed)
    start = rng.choice(n, size=k, replace=False)
    C = X[start].copy()
    a = assign(X, C)
    C = recompute_centroids(X, a, k, previous=C)
    C, a = _repair_empty(X, C, a, k)
    trace = [_sse(X, C, a)]
    converged = False
    it = 1
    while it < max_iter:
        new = assign(X, C)
        if np.array_equal(new, a):
            converged = True
            break
        a = new
        C = recompute_centroids(X, a, k, previous=C)
        C, a = _repair_empty(X, C, a, k)
        trace.append(_sse(X, C, a))
        it += 1
    counts = np.bincount(a, minlength=k)
    return ClusteringResult(C, a, counts, trace[-1], it, seed, converged, trace)


def derive_seed(seed: int, index: int) -> int:
    """Seed for the second-stage run on first-stage cluster ``index``."""
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1)[0])


def mkm(observations, k1: int, k2: int, seed: int = 0, max_iter: int = 300) -> ClusteringResult:
    X = _as_matrix(observations)
    n = X.shape[0]
    if k2 < 1:
        raise ClusteringError(f"k2 must be at least 1, got {k2}")
    first = tkm(X, k1, seed, max_iter)
    k = k1 * k2
    C = np.zeros((k, X.shape[1]))
    a = np.empty(n, dtype=int)
    iterations = first.iterations
    converged = first.converged
    for c in range(k1):
        members = np.flatnonzero(first.assignment == c)
        if members.size < k2:
            raise MkmPreconditionError(c, int(members.size), k2)
        sub = tkm(X[members], k2, derive_seed(seed, c), max_iter)
        C[c * k2:(c + 1) * k2] = sub.centroids
        a[members] = c * k2 + sub.assignment
        iterations += sub.iterations
        converged = converged and sub.converged
    counts = np.bincount(a, minlength=k)
    return ClusteringResult(C, a, counts, _sse(X, C, a), iterations, seed, converged,
                            [first.sse, _sse(X, C, a)])


def factor_k(k: int) -> Tuple[int, int]:
    """Default (k1, k2) for a total of ``k`` days: k2 is the smallest prime factor."""
    if k < 1:
        raise ClusteringError("k must be positive")
    for p in range(2, k + 1):
        if k % p == 0:
            return k // p, p
    return 1, 1


# -- representative days --------------------------------------------------

@dataclass
class RepresentativeDay:
    weight: int
    beta: Dict[str, np.ndarray]
    alpha: Dict[str, np.ndarray]


@dataclass
class RepresentativeDaySet:
    days: List[RepresentativeDay]
    source_method: str
    parameters: Dict[str, int] = field(default_factory=dict)
    assignment: Optional[np.ndarray] = None

    @property
    def total_weight(self) -> int:
        return int(sum(d.weight for d in self.days))

    @property
    def load_zones(self) -> List[str]:
        return list(self.days[0].beta) if self.days else []

    @property
    def wind_zones(self) -> List[str]:
        return list(self.days[0].alpha) if self.days else []

    def __len__(self) -> int:
        return len(self.days)


def _per_unit(profile: np.ndarray, peak: float) -> np.ndarray:
    return profile / peak if peak > 0 else np.zeros_like(profile)


def to_representative_days(result: ClusteringResult, scaling: ScalingParams, layout: FeatureLayout,
                           method: str = TKM, parameters: Optional[Dict[str, int]] = None) -> RepresentativeDaySet:
    """Denormalise centroids and cut them into per-zone, per-unit profiles."""
    if np.any(result.counts == 0):
        raise ClusteringError("result contains an empty cluster")
    raw = denormalize(result.centroids, scaling)
    days = []
    for r in range(result.k):
        beta = {z: _per_unit(raw[r, layout.block("load", z)], p)
                for z, p in zip(layout.load_zones, layout.load_peaks)}
        alpha = {z: _per_unit(raw[r, layout.block("wind", z)], p)
                 for z, p in zip(layout.wind_zones, layout.wind_peaks)}
        days.append(RepresentativeDay(int(result.counts[r]), beta, alpha))
    return RepresentativeDaySet(days, method, dict(parameters or {}), result.assignment.copy())


def history_days(records: HourlyRecordSet) -> RepresentativeDaySet:
    """Every historical day as its own unit-weight profile, in calendar order."""
    lp, wp = records.peaks()
    days = []
    for d in range(records.n_days):
        beta = {z: _per_unit(records.load[d, :, k], lp[z]) for k, z in enumerate(records.load_zones)}
        alpha = {z: _per_unit(records.wind[d, :, k], wp[z]) for k, z in enumerate(records.wind_zones)}
        days.append(RepresentativeDay(1, beta, alpha))
    return RepresentativeDaySet(days, HISTORY, {"days": records.n_days})


def cluster_days(obs: ObservationSet, method: str, k: Optional[int] = None,
                 k1: Optional[int] = None, k2: Optional[int] = None,
                 seed: int = 0, max_iter: int = 300) -> Tuple[ClusteringResult, RepresentativeDaySet]:
    method = method.lower()
    if method == TKM:
        if k is None:
            raise ClusteringError("tkm needs k")
        res = tkm(obs, k, seed, max_iter)
        params = {"k": k}
    elif method == MKM:
        if k1 is None or k2 is None:
            if k is None:
                raise ClusteringError("mkm needs k1 and k2 (or k to factor)")
            k1, k2 = factor_k(k)
        res = mkm(obs, k1, k2, seed, max_iter)
        params = {"k": k1 * k2, "k1": k1, "k2": k2}
    else:
        raise ClusteringError(f"unknown method {method!r}")
    return res, to_representative_days(res, obs.scaling, obs.layout, method, params)


def write_repdays_csv(repdays: RepresentativeDaySet, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rep_day", "weight", "zone", "feature", "hour", "value_pu"])
        for r, day in enumerate(repdays.days, start=1):
            for feature, profiles in (("load", day.beta), ("wind", day.alpha)):
                for zone, prof in profiles.items():
                    for h in range(HOURS):
                        w.writerow([r, day.weight, zone, feature, h + 1, f"{prof[h]:.9g}"])


def read_repdays_csv(path: str, method: str = "file") -> RepresentativeDaySet:
    table: Dict[int, dict] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        need = {"rep_day", "weight", "zone", "feature", "hour", "value_pu"}
        if not reader.fieldnames or not need <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected columns {sorted(need)}")
        for lineno, row in enumerate(reader, start=2):
            r = int(row["rep_day"])
            entry = table.setdefault(r, {"weight": int(row["weight"]), "load": {}, "wind": {}})
            if entry["weight"] != int(row["weight"]):
                raise ValueError(f"{path}:{lineno}: inconsistent weight for day {r}")
            feat = row["feature"]
            if feat not in ("load", "wind"):
                raise ValueError(f"{path}:{lineno}: feature must be load or wind")
            prof = entry[feat].setdefault(row["zone"], np.full(HOURS, np.nan))
            h = int(row["hour"])
            if not 1 <= h <= HOURS:
                raise ValueError(f"{path}:{lineno}: hour out of range")
            prof[h - 1] = float(row["value_pu"])
    days = []
    for r in sorted(table):
        e = table[r]
        for feat in ("load", "wind"):
            for z, prof in e[feat].items():
                if np.isnan(prof).any():
                    raise ValueError(f"{path}: day {r} {feat} zone {z} is missing hours")
        days.append(RepresentativeDay(e["weight"], e["load"], e["wind"]))
    return RepresentativeDaySet(days, method, {"k": len(days)})
