from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .exceptions import WEFairError


@dataclass(frozen=True, eq=False)
class Classifier:
    """Per-cell loan probabilities ``c(x, a)`` aligned with a population's cells."""

    keys: tuple[tuple[str, int], ...]
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (len(self.keys),):
            raise WEFairError(f"expected {len(self.keys)} values, got shape {v.shape}")
        if np.any(~np.isfinite(v)) or np.any(v < -1e-12) or np.any(v > 1 + 1e-12):
            raise WEFairError("classifier values must lie in [0, 1]")
        v = np.clip(v, 0.0, 1.0)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "keys", tuple((str(x), int(a)) for x, a in self.keys))

    @classmethod
    def constant(cls, pop, value: float) -> "Classifier":
        return cls(pop.keys, np.full(len(pop), float(value)))

    @classmethod
    def from_mapping(cls, pop, mapping: Mapping) -> "Classifier":
        try:
            return cls(pop.keys, np.array([mapping[k] for k in pop.keys], dtype=float))
        except KeyError as exc:
            raise WEFairError(f"classifier has no entry for cell {exc.args[0]!r}") from None

    def __getitem__(self, key) -> float:
        return float(self.values[self.keys.index(tuple(key))])

    def __len__(self) -> int:
        return len(self.keys)

    def __repr__(self) -> str:
        body = ", ".join(f"({x!r},{a}): {v:.6g}" for (x, a), v in zip(self.keys, self.values))
        return f"Classifier({{{body}}})"

    def as_dict(self) -> dict[tuple[str, int], float]:
        return {k: float(v) for k, v in zip(self.keys, self.values)}

    def to_records(self) -> list[dict]:
        return [{"x": x, "a": a, "c": float(v)} for (x, a), v in zip(self.keys, self.values)]

    def allclose(self, other: "Classifier", atol: float = 1e-9) -> bool:
        return self.keys == other.keys and bool(np.allclose(self.values, other.values, rtol=0, atol=atol))
