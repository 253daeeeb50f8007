"""Random network instances: a unit-intensity Poisson point process on a
square of area n, plus a source-to-destination derangement."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


class InvalidParameterError(ValueError):
    pass


class InsufficientNodesError(ValueError):
    pass


def _rng(seed, *stream) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), *stream]))


@dataclass(frozen=True)
class NetworkInstance:
    n: float
    nodes: np.ndarray  # (K, 2)
    matching: np.ndarray  # (K,) destination index of each source
    seed: int = 0
    side: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "side", float(np.sqrt(self.n)))
        self.nodes.setflags(write=False)
        self.matching.setflags(write=False)

    @property
    def num_nodes(self) -> int:
        return int(self.nodes.shape[0])

    def pair_distances(self) -> np.ndarray:
        if self.matching.size == 0:
            return np.zeros(0)
        return np.linalg.norm(self.nodes - self.nodes[self.matching], axis=1)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "seed": int(self.seed),
            "nodes": self.nodes.tolist(),
            "matching": self.matching.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkInstance":
        nodes = np.asarray(d["nodes"], dtype=float).reshape(-1, 2)
        return cls(float(d["n"]), nodes, np.asarray(d["matching"], dtype=np.int64), int(d["seed"]))


def random_derangement(k: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform permutation of range(k) with no fixed points (rejection sampling)."""
    if k < 2:
        raise InsufficientNodesError(f"a derangement needs at least 2 elements, got {k}")
    idx = np.arange(k)
    while True:
        perm = rng.permutation(k)
        if not np.any(perm == idx):
            return perm


def draw_matching(instance: NetworkInstance, seed: int) -> np.ndarray:
    return random_derangement(instance.num_nodes, _rng(seed, 1))


def generate_network(n: float, seed: int) -> NetworkInstance:
    """Sample K ~ Poisson(n) points uniformly on [0, sqrt(n)]^2 and a derangement.

    Instances with fewer than two nodes get an empty matching.
    """
    if not np.isfinite(n) or n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")
    rng = _rng(seed, 0)
    k = int(rng.poisson(n))
    side = np.sqrt(n)
    nodes = rng.uniform(0.0, side, size=(k, 2))
    matching = random_derangement(k, _rng(seed, 1)) if k >= 2 else np.zeros(0, dtype=np.int64)
    return NetworkInstance(float(n), nodes, matching.astype(np.int64), int(seed))
