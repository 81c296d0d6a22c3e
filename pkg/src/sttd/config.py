"""Flat ``key = value`` configuration files and the effective run configuration."""

import dataclasses
from dataclasses import dataclass, field

from .solver import SolverParams

__all__ = ["ConfigError", "RunConfig", "parse_kv", "load_config"]


class ConfigError(ValueError):
    pass


def parse_kv(text):
    """Parse ``key = value`` lines; ``#`` starts a comment.  Keys are normalized to snake_case."""
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {n}: empty key")
        out[key.replace("-", "_")] = val
    return out


_SOLVER_FIELDS = {f.name: f.type for f in dataclasses.fields(SolverParams)}


@dataclass
class RunConfig:
    solver: SolverParams = field(default_factory=SolverParams)
    k: float = 3.0
    vmin: float = 0.85
    d: int = 40
    a: int = 9
    b: int = 9
    match_radius: float = 4.0
    n_points: int = 101
    threads: int = 0
    seed: int = 0

    def to_dict(self):
        doc = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)
               if f.name not in ("solver", "threads")}
        doc["solver"] = self.solver.to_dict()
        return doc

    def with_overrides(self, values):
        """Return a copy with ``values`` (strings or typed) applied to solver and run fields."""
        solver_kw, run_kw = {}, {}
        run_types = {f.name: f.type for f in dataclasses.fields(self) if f.name != "solver"}
        for key, val in values.items():
            if val is None:
                continue
            if key in _SOLVER_FIELDS:
                solver_kw[key] = _coerce(key, val, getattr(self.solver, key))
            elif key in run_types:
                run_kw[key] = _coerce(key, val, getattr(self, key))
            else:
                raise ConfigError(f"unknown configuration key {key!r}")
        try:
            solver = dataclasses.replace(self.solver, **solver_kw)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return dataclasses.replace(self, solver=solver, **run_kw)


def _coerce(key, val, current):
    if not isinstance(val, str):
        return val
    try:
        if isinstance(current, bool):
            return val.lower() in ("1", "true", "yes", "on")
        if isinstance(current, int):
            return int(val)
        if isinstance(current, float):
            return float(val)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {val!r}") from exc
    return val


def load_config(path=None, overrides=None):
    """Defaults, then the file at ``path``, then ``overrides`` (flags win)."""
    cfg = RunConfig()
    if path:
        try:
            with open(path) as fh:
                cfg = cfg.with_overrides(parse_kv(fh.read()))
        except OSError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    if overrides:
        cfg = cfg.with_overrides(overrides)
    return cfg
