"""Experiment specifications as plain-text ``key = value`` blocks.

A spec file has a top-level ``name`` and four sections::

    name = table2
    [target]
    kind = rwm_osc
    a = 0.25
    ...
    [chain]
    algo = rwm
    ...
    [sweep]
    ell_list = 0.5, 0.65, 1.5
    [output]
    out_dir = results

``#`` starts a comment.  Floats are written with ``repr`` so a spec survives
``to_text``/``from_text`` unchanged.
"""
from __future__ import annotations

import dataclasses
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .mh_core import ChainConfig

__all__ = [
    "SpecError",
    "TargetSpec",
    "ChainSpec",
    "SweepSpec",
    "OutputSpec",
    "ExperimentSpec",
    "TARGET_KINDS",
]

TARGET_KINDS = ("rwm_rough", "mala_rough", "rwm_osc", "mala_osc", "gaussian")


class SpecError(ValueError):
    """Malformed experiment specification."""


@dataclass
class TargetSpec:
    """Target kind and parameters, including the random-environment grid and seed."""

    kind: str = "rwm_osc"
    hurst: float = 0.5
    c: float = 0.1
    a: float = 0.25
    b: float = 30.0
    env_seed: int = 1
    x_min: float = -9.0
    x_max: float = 9.0
    grid_points: int = 200_001
    path_file: str = ""
    method: str = "circulant"

    def __post_init__(self):
        if self.kind not in TARGET_KINDS:
            raise SpecError(f"unknown target kind {self.kind!r}")
        if self.method not in ("circulant", "cholesky"):
            raise SpecError("method must be circulant or cholesky")

    @property
    def rough(self) -> bool:
        return self.kind.endswith("_rough")

    def default_algo(self) -> str:
        return "mala" if self.kind.startswith("mala") else "rwm"

    def default_beta(self, algo: str) -> float:
        """Scaling exponent: H or 2 + H on rough targets, 1 or 3 on smooth ones."""
        if self.rough:
            return self.hurst if algo == "rwm" else 2.0 + self.hurst
        return 1.0 if algo == "rwm" else 3.0


@dataclass
class ChainSpec:
    """Chain settings; ``algo`` and ``beta`` default from the target when empty."""

    algo: str = ""
    n: int = 100
    ell: float = 1.0
    beta: Optional[float] = None
    sigma_override: Optional[float] = None
    convention: str = "ell2"
    steps: int = 100_000
    burn_in: int = 0
    seed: int = 7
    init: str = "stationary_table"
    init_point: float = 0.0
    trace_thin: int = 1
    acf_max_lag: int = 200

    def to_config(self, target: TargetSpec, **overrides) -> ChainConfig:
        algo = self.algo or target.default_algo()
        beta = self.beta if self.beta is not None else target.default_beta(algo)
        kw = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}
        kw.update(algo=algo, beta=beta)
        kw.update(overrides)
        return ChainConfig(**kw)


@dataclass
class SweepSpec:
    ell_list: tuple[float, ...] = ()
    replicas: int = 1
    workers: int = 0


@dataclass
class OutputSpec:
    out_dir: str = "results"
    emit_traces: bool = False


@dataclass
class ExperimentSpec:
    name: str = "experiment"
    target: TargetSpec = field(default_factory=TargetSpec)
    chain: ChainSpec = field(default_factory=ChainSpec)
    sweep: SweepSpec = field(default_factory=SweepSpec)
    output: OutputSpec = field(default_factory=OutputSpec)

    def to_text(self) -> str:
        lines = [f"name = {self.name}"]
        for section in ("target", "chain", "sweep", "output"):
            block = getattr(self, section)
            lines.append(f"[{section}]")
            for f in dataclasses.fields(block):
                lines.append(f"{f.name} = {_format(getattr(block, f.name))}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ExperimentSpec":
        """Parse a spec; missing keys take their defaults.

        Raises:
            SpecError: unknown section or key, or a value of the wrong type.
        """
        name = "experiment"
        raw: dict[str, dict[str, str]] = {"target": {}, "chain": {}, "sweep": {}, "output": {}}
        section = None
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1].strip()
                if section not in raw:
                    raise SpecError(f"line {lineno}: unknown section [{section}]")
                continue
            if "=" not in line:
                raise SpecError(f"line {lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            if section is None:
                if key != "name":
                    raise SpecError(f"line {lineno}: only 'name' may precede a section")
                name = value
            else:
                raw[section][key] = value
        blocks = {}
        for section, typ in (("target", TargetSpec), ("chain", ChainSpec),
                             ("sweep", SweepSpec), ("output", OutputSpec)):
            blocks[section] = _build(typ, raw[section], section)
        return cls(name=name, **blocks)

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> "ExperimentSpec":
        p = Path(path)
        if not p.is_file():
            raise SpecError(f"spec file not found: {p}")
        return cls.from_text(p.read_text())


def _format(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(_format(x) for x in v)
    return str(v)


def _parse(text: str, typ):
    origin = typing.get_origin(typ)
    args = typing.get_args(typ)
    if origin is typing.Union and type(None) in args:
        if text == "":
            return None
        inner = next(a for a in args if a is not type(None))
        return _parse(text, inner)
    if origin is tuple:
        if not text:
            return ()
        return tuple(_parse(t.strip(), args[0]) for t in text.split(","))
    if typ is bool:
        low = text.lower()
        if low not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"not a boolean: {text!r}")
        return low in ("true", "1", "yes")
    if typ is int:
        return int(text)
    if typ is float:
        return float(text)
    return text


def _build(typ, values: dict[str, str], section: str):
    hints = typing.get_type_hints(typ)
    known = {f.name for f in dataclasses.fields(typ)}
    kwargs = {}
    for key, text in values.items():
        if key not in known:
            raise SpecError(f"unknown key {key!r} in [{section}]")
        try:
            kwargs[key] = _parse(text, hints[key])
        except ValueError as exc:
            raise SpecError(f"[{section}] {key}: {exc}") from None
    return typ(**kwargs)
