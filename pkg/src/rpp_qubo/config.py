"""Dataclass configs shared by the builders, solvers and CLI."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional


@dataclass(frozen=True)
class PenaltyConfig:
    """Scalar weights for each constraint family.

    ``lambda_incentive`` is the magnitude of the causality terms in both
    causality modes (negative incentives or positive penalties).
    """

    lambda_location: float = 1.0
    lambda_step: float = 1.0
    lambda_incentive: float = 1.0
    lambda_capacity: float = 1.0
    lambda_nonedge: float = 1.0

    def __post_init__(self) -> None:
        for name, value in asdict(self).items():
            if not value > 0:
                raise ValueError(f"{name} must be strictly positive, got {value!r}")

    @classmethod
    def for_path_length(cls, path_length: int) -> "PenaltyConfig":
        """Defaults for a model whose longest vehicle path has ``path_length`` steps.

        Normalized edge weights are < 1 and a feasible fleet uses fewer than
        ``2 * path_length`` weighted transitions, so a causality violation
        priced at ``2 * path_length`` always outweighs the achievable distance.
        Duplicate visits can harvest at most ``1.5 * lambda_incentive`` per
        unit of squared location error, hence the location/step weights of
        ``5 * path_length``.
        """
        s = max(int(path_length), 1)
        hard = 5.0 * s
        soft = 2.0 * s
        return cls(
            lambda_location=hard,
            lambda_step=hard,
            lambda_incentive=soft,
            lambda_capacity=hard,
            lambda_nonedge=soft,
        )

    def replace(self, **changes: Optional[float]) -> "PenaltyConfig":
        values = asdict(self)
        values.update({k: v for k, v in changes.items() if v is not None})
        return PenaltyConfig(**values)


CAUSALITY_MODES = ("incentive", "penalty")


@dataclass(frozen=True)
class BuildOptions:
    with_capacity: bool = False
    with_presolve: bool = True
    causality_mode: str = "incentive"
    # None -> PenaltyConfig.for_path_length(S) of the instance being built
    penalty: Optional[PenaltyConfig] = None

    def __post_init__(self) -> None:
        if self.causality_mode not in CAUSALITY_MODES:
            raise ValueError(
                f"causality_mode must be one of {CAUSALITY_MODES}, got {self.causality_mode!r}"
            )


@dataclass(frozen=True)
class SaSchedule:
    """Simulated annealing schedule: a geometric inverse-temperature ramp."""

    sweeps: int = 50000
    beta_initial: float = 0.01
    beta_final: float = 10.0
    restarts: int = 50
    seed: int = 0

    def __post_init__(self) -> None:
        if self.sweeps < 0 or self.restarts < 1:
            raise ValueError("sweeps must be >= 0 and restarts >= 1")
        if not (self.beta_final >= self.beta_initial > 0):
            raise ValueError("need beta_final >= beta_initial > 0")

    @classmethod
    def default(cls, path_length: int, seed: int = 0, **overrides) -> "SaSchedule":
        """Default ramp 0.01 -> 10*S over 50000 sweeps with 50 restarts.

        The low starting inverse temperature lets chains cross the one-hot
        barriers early; shorter ramps left several (A=2, C=3) instances
        infeasible.  About 8 s per instance of that size.
        """
        params = dict(beta_final=10.0 * max(path_length, 1), seed=seed)
        params.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**params)


@dataclass
class RunParameters:
    """Everything needed to rerun a CLI solve; echoed into the run report."""

    formulation: str = "node"
    solver: str = "exhaustive"
    with_capacity: bool = False
    with_presolve: bool = True
    causality_mode: str = "incentive"
    seed: int = 0
    sweeps: Optional[int] = None
    restarts: Optional[int] = None
    penalty: dict = field(default_factory=dict)
    # the resolved annealing schedule (SA runs only)
    schedule: Optional[dict] = None
