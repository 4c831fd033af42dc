"""Hard partitions, cuts, and regularized-cut objectives.

Set-form quantities iterate the edge list once. The quadratic forms in the
bisection indicator ``h`` are kept separate so that the two routes can be
checked against each other.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable

import numpy as np

from .diffusion import Prior
from .errors import (
    DegenerateBisection,
    EmptyCluster,
    InvalidInput,
    OutOfRangeNode,
    SizeMismatch,
    ZeroVolumeCluster,
)
from .graph import Graph, laplacian


@dataclass(frozen=True, eq=False)
class Partition:
    """Hard assignment of n nodes to k clusters labelled 0..k-1."""

    k: int
    assignment: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=np.int64)
        if a.ndim != 1:
            raise InvalidInput("assignment must be one-dimensional")
        if self.k < 1:
            raise InvalidInput(f"k must be positive, got {self.k}")
        if a.size and (a.min() < 0 or a.max() >= self.k):
            raise InvalidInput(f"cluster labels must lie in [0, {self.k})")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "assignment", a)

    @property
    def n(self) -> int:
        return self.assignment.size

    @cached_property
    def counts(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.k)

    @property
    def Q(self) -> np.ndarray:
        """k x n indicator with Q[z, x] = 1 iff node x is in cluster z."""
        q = np.zeros((self.k, self.n))
        q[self.assignment, np.arange(self.n)] = 1.0
        return q

    def require_nonempty(self) -> None:
        empty = np.flatnonzero(self.counts == 0)
        if empty.size:
            raise EmptyCluster(f"clusters {empty.tolist()} are empty")

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return self.k == other.k and np.array_equal(self.assignment, other.assignment)


@dataclass(frozen=True, eq=False)
class Bisection:
    """Signed indicator h in {+1, -1}^n. Cluster 0 maps to +1."""

    h: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h, dtype=np.int64)
        if h.ndim != 1 or not np.all(np.abs(h) == 1):
            raise InvalidInput("h must be a vector of +1/-1 entries")
        h = h.copy()
        h.setflags(write=False)
        object.__setattr__(self, "h", h)

    @property
    def n(self) -> int:
        return self.h.size

    @property
    def mean(self) -> float:
        """Uniform-prior average of h."""
        return float(self.h.sum()) / self.n

    def degree_mean(self, g: Graph) -> float:
        """Degree-weighted average of h."""
        return float(g.degrees @ self.h) / (2 * g.m)

    def prior_mean(self, p: np.ndarray) -> float:
        return float(p @ self.h)

    def flip(self, x: int) -> "Bisection":
        h = np.array(self.h)
        h[x] = -h[x]
        return Bisection(h)

    def to_partition(self) -> Partition:
        return Partition(2, (self.h < 0).astype(np.int64))

    @classmethod
    def from_partition(cls, p: Partition) -> "Bisection":
        if p.k != 2:
            raise InvalidInput(f"a bisection needs k=2, got k={p.k}")
        return cls(1 - 2 * p.assignment)

    @classmethod
    def from_labels(cls, labels) -> "Bisection":
        return cls(1 - 2 * np.asarray(labels, dtype=np.int64))

    def is_one_sided(self) -> bool:
        return abs(int(self.h.sum())) == self.n

    def __eq__(self, other):
        if not isinstance(other, Bisection):
            return NotImplemented
        return np.array_equal(self.h, other.h)


def _check_size(g: Graph, n: int) -> None:
    if n != g.n:
        raise SizeMismatch(f"partition covers {n} nodes, graph has {g.n}")


def association(g: Graph, s_plus: Iterable[int], s_minus: Iterable[int]) -> int:
    """Sum of A[x, y] over ordered pairs x in s_plus, y in s_minus."""
    a = np.fromiter(s_plus, dtype=np.int64)
    b = np.fromiter(s_minus, dtype=np.int64)
    for s in (a, b):
        if s.size and (s.min() < 0 or s.max() >= g.n):
            raise OutOfRangeNode(f"node set contains indices outside [0, {g.n})")
    return int(g.adjacency[np.ix_(a, b)].sum())


def cluster_cuts(g: Graph, p: Partition) -> np.ndarray:
    """W(V_j, V minus V_j) for each cluster j."""
    _check_size(g, p.n)
    e = g.edge_array
    out = np.zeros(p.k, dtype=np.int64)
    if e.size:
        lu, lv = p.assignment[e[:, 0]], p.assignment[e[:, 1]]
        crossing = lu != lv
        np.add.at(out, lu[crossing], 1)
        np.add.at(out, lv[crossing], 1)
    return out


def cut(g: Graph, p: Partition) -> tuple[np.ndarray, int]:
    """Per-cluster cuts and the number of crossing edges.

    For k=2 both per-cluster entries equal the bisection cut.
    """
    per = cluster_cuts(g, p)
    return per, int(per.sum()) // 2


def set_sizes(g: Graph, p: Partition) -> tuple[np.ndarray, np.ndarray]:
    """Node counts and degree sums (volumes) per cluster."""
    _check_size(g, p.n)
    omega = p.counts.copy()
    big_omega = np.bincount(p.assignment, weights=g.degrees, minlength=p.k).astype(np.int64)
    return omega, big_omega


def average_cut(g: Graph, p: Partition) -> float:
    p.require_nonempty()
    omega, _ = set_sizes(g, p)
    return float(np.sum(cluster_cuts(g, p) / omega))


def normalized_cut(g: Graph, p: Partition) -> float:
    p.require_nonempty()
    _, vol = set_sizes(g, p)
    if np.any(vol == 0):
        raise ZeroVolumeCluster(f"clusters {np.flatnonzero(vol == 0).tolist()} have no edges")
    return float(np.sum(cluster_cuts(g, p) / vol))


def regularized_cut(g: Graph, p: Partition, prior: Prior) -> float:
    """Sum over clusters of cut_j / p(z=j) with p(z) the prior mass of the cluster.

    This is the diagonal ratio diag(Q L Q^T) / diag(Q P Q^T). Under the
    uniform prior it equals n times the average cut; under the degree prior it
    equals 2m times the normalized cut.
    """
    _check_size(g, p.n)
    p.require_nonempty()
    pz = np.bincount(p.assignment, weights=prior.p, minlength=p.k)
    return float(np.sum(cluster_cuts(g, p) / pz))


@dataclass(frozen=True)
class QuadraticForms:
    hLh: int
    c: float
    average_cut: float
    normalized_cut: float


def quadratic_forms(g: Graph, b: Bisection) -> QuadraticForms:
    """Cut, average cut, and normalized cut written through h^T L h."""
    _check_size(g, b.n)
    hLh = int(b.h @ (np.diag(g.degrees) - g.adjacency) @ b.h)
    hbar = b.mean
    if hbar**2 >= 1:
        raise DegenerateBisection("all nodes lie on one side")
    if g.m == 0:
        raise DegenerateBisection("graph has no edges")
    hdeg = b.degree_mean(g)
    if hdeg**2 >= 1:
        raise DegenerateBisection("one side carries no edge endpoints")
    return QuadraticForms(
        hLh=hLh,
        c=hLh / 4,
        average_cut=hLh / (g.n * (1 - hbar**2)),
        normalized_cut=hLh / (2 * g.m * (1 - hdeg**2)),
    )


def laplacian_quadratic(g: Graph, f) -> float:
    """f^T L f for an arbitrary real vector."""
    f = np.asarray(f, dtype=float)
    return float(f @ laplacian(g) @ f)


def parse_partition_json(obj) -> Partition:
    if not isinstance(obj, dict) or "k" not in obj or "assignment" not in obj:
        raise InvalidInput('partition JSON needs "k" and "assignment"')
    k, a = obj["k"], obj["assignment"]
    if not isinstance(k, int) or not isinstance(a, list) or not all(isinstance(x, int) for x in a):
        raise InvalidInput("partition k and assignment must be integers")
    return Partition(k, np.array(a, dtype=np.int64))


def load_partition(path) -> Partition:
    try:
        obj = json.loads(Path(path).read_text())
    except OSError as exc:
        raise InvalidInput(f"cannot read partition file {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path}: invalid JSON ({exc.msg})") from None
    return parse_partition_json(obj)
