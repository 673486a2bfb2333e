"""Run configuration shared by the pipeline, benchmark and CLI."""

import math
from dataclasses import asdict, dataclass

from .dissim import MEASURES

__all__ = ["RunConfig", "resolve_mtry"]


@dataclass(frozen=True)
class RunConfig:
    measure: str = "plain"
    p_trees: int = 512
    mtry: object = "sqrt"  # "sqrt" or a positive int, capped at the view width
    k: int = 5
    w: float = 1.0
    train_frac: float = 0.5
    repeats: int = 10
    seed: int = 0
    n_jobs: int = 1

    def validate(self):
        if self.measure not in MEASURES:
            raise ValueError(
                f"unknown measure {self.measure!r}; choose one of {', '.join(MEASURES)}"
            )
        if self.p_trees < 1:
            raise ValueError(f"p_trees must be >= 1, got {self.p_trees}")
        if self.mtry != "sqrt" and not (isinstance(self.mtry, int) and self.mtry >= 1):
            raise ValueError(f"mtry must be 'sqrt' or a positive int, got {self.mtry!r}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.w <= 0:
            raise ValueError(f"w must be positive, got {self.w}")
        if not 0.0 < self.train_frac < 1.0:
            raise ValueError(f"train_frac must be in (0, 1), got {self.train_frac}")
        if self.repeats < 1:
            raise ValueError(f"repeats must be >= 1, got {self.repeats}")
        if self.n_jobs < 1:
            raise ValueError(f"n_jobs must be >= 1, got {self.n_jobs}")
        return self

    def to_dict(self):
        d = asdict(self)
        del d["n_jobs"]  # execution detail; results never depend on it
        return d


def resolve_mtry(n_features, policy):
    """Features drawn per split: floor(sqrt(m)) for "sqrt", otherwise the
    given int capped to [1, m]."""
    if n_features < 1:
        raise ValueError(f"n_features must be >= 1, got {n_features}")
    if policy == "sqrt":
        return max(1, int(math.floor(math.sqrt(n_features))))
    return min(max(1, int(policy)), n_features)
