from __future__ import annotations

from dataclasses import asdict, dataclass, field


@dataclass
class RunReport:
    """Outcome of one seeded solver run."""

    engine: str
    instance: str
    seed: int
    best_length: int
    wall_time: float
    best_order: tuple[int, ...] = ()
    trace: list[tuple[int, int]] = field(default_factory=list)
    iterations: int = 0
    tours_built: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["best_order"] = list(self.best_order)
        d["trace"] = [list(p) for p in self.trace]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        d = dict(d)
        d["best_order"] = tuple(d.get("best_order", ()))
        d["trace"] = [tuple(p) for p in d.get("trace", [])]
        return cls(**d)
