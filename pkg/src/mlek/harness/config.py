"""Experiment configuration, read from TOML."""
import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import tomli

from mlek.engine import StepSchedule
from mlek.problems import PROBLEMS

SINGLE_LEVEL = "single_level"
MULTILEVEL = "multilevel"


class ConfigError(ValueError):
    pass


def _check_keys(section, table, allowed):
    if not isinstance(table, dict):
        raise ConfigError(f"[{section}] must be a table")
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in [{section}]: {', '.join(sorted(unknown))}")


@dataclass
class ExperimentConfig:
    problem: str
    algorithm: str
    epsilon_sweep: list
    replications: int = 10
    seed: int = 1
    output: str = "mlek-out"
    J_const: float = None
    tau0: float = None
    steps: StepSchedule = None
    slope_window: int = 4
    gold_seed: int = 12345
    gold_particles: int = 10_000
    gold_replications: int = 10
    problem_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}; choose from {', '.join(PROBLEMS)}")
        if self.algorithm not in (SINGLE_LEVEL, MULTILEVEL):
            raise ConfigError(f"algorithm must be {SINGLE_LEVEL!r} or {MULTILEVEL!r}")
        eps = [float(e) for e in self.epsilon_sweep]
        if any(not 0 < e < 1 for e in eps):
            raise ConfigError("epsilon values must lie in (0, 1)")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ConfigError("epsilon_sweep must be strictly decreasing")
        self.epsilon_sweep = eps
        if self.replications < 2:
            raise ConfigError("replications must be at least 2")
        if self.slope_window < 2:
            raise ConfigError("slope_window must be at least 2")

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        constants = d.pop("constants", {})
        steps = d.pop("steps", None)
        gold = d.pop("gold", {})
        _check_keys("constants", constants, {"J_const", "tau0"})
        _check_keys("gold", gold, {"seed", "particles", "replications"})
        if steps is not None:
            _check_keys("steps", steps, {"kind", "n_steps", "delta", "n_const"})
        kwargs = {
            "J_const": constants.get("J_const"),
            "tau0": constants.get("tau0"),
            "gold_seed": gold.get("seed", 12345),
            "gold_particles": gold.get("particles", 10_000),
            "gold_replications": gold.get("replications", 10),
        }
        if steps is not None:
            try:
                kwargs["steps"] = StepSchedule(**steps)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        known = {"problem", "algorithm", "epsilon_sweep", "replications", "seed", "output",
                 "slope_window", "problem_params"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        missing = {"problem", "algorithm", "epsilon_sweep"} - set(d)
        if missing:
            raise ConfigError(f"missing config keys: {', '.join(sorted(missing))}")
        return cls(**d, **kwargs)

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            with path.open("rb") as fh:
                data = tomli.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def from_flat(cls, d):
        """Inverse of :meth:`to_dict`."""
        d = dict(d)
        if d.get("steps") is not None:
            d["steps"] = StepSchedule(**d["steps"])
        return cls(**d)

    def to_dict(self):
        d = asdict(self)
        if self.steps is not None:
            d["steps"] = asdict(self.steps)
        return d

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]
