"""Experiment configuration files.

A configuration is a single plain-text file of ``key = value`` lines:

  - one pair per line; whitespace around key and value is ignored
  - blank lines and lines starting with ``#`` are ignored
  - keys are dotted names (``schedule.kind``, ``init.S0``); unknown or
    duplicate keys are errors, not warnings
  - list values are comma separated (``init.vector``, ``output.formats``)

Recognized keys:

  schedule.kind            fully_synthetic | partially_synthetic |
                           most_recent | randomly_sampled
  schedule.n               per-generation synthetic sample budget (int >= 1)
  schedule.N               real-corpus size, partially_synthetic only
  schedule.K               window size, most_recent only
  schedule.real_data_mode  fresh | fixed_corpus, randomly_sampled only
  init.vector              explicit probability vector, XOR the triple below
  init.s                   alphabet size
  init.s_tilde             support size of the initial distribution
  init.S0                  target sum of squared probabilities
  max_generations          chain length (int >= 1)
  replicates               ensemble size (int >= 1)
  seed                     base seed (int >= 0)
  output.directory         output directory (default "out")
  output.formats           subset of csv,json,svg (default csv)

The resolved configuration has a canonical text rendering
(:func:`resolved_text`) whose SHA-256 digest (:func:`config_hash`) is
embedded in every output file.  Output keys name a destination, not an
experiment, so they are excluded from the hash.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from ..dist_core import ProbVec, validate
from ..errors import InfeasibleTarget, ParseError, ValidationError
from ..schedules import RealDataMode, Schedule, ScheduleKind

__all__ = [
    "InitSpec",
    "ExperimentConfig",
    "parse_config",
    "parse_config_text",
    "make_initial_distribution",
    "resolved_items",
    "resolved_text",
    "config_hash",
    "OUTPUT_FORMATS",
]

OUTPUT_FORMATS = ("csv", "json", "svg")

SIGMA_TARGET_TOLERANCE = 1e-6


@dataclass(frozen=True)
class InitSpec:
    """Initial-distribution request: an explicit vector, a two-level
    profile hitting (s, s_tilde, S0) exactly, or a symmetric Dirichlet(1)
    draw (programmatic only; figure reproduction uses it where the source
    distribution is unspecified).
    """

    vector: Optional[tuple] = None
    s: Optional[int] = None
    s_tilde: Optional[int] = None
    s0: Optional[float] = None
    dirichlet_s: Optional[int] = None

    def __post_init__(self) -> None:
        modes = [
            self.vector is not None,
            self.s is not None or self.s_tilde is not None or self.s0 is not None,
            self.dirichlet_s is not None,
        ]
        if sum(modes) != 1:
            raise ValidationError(
                "init must be exactly one of: an explicit vector, "
                "the (s, s_tilde, S0) triple, or a dirichlet draw"
            )
        if modes[1] and None in (self.s, self.s_tilde, self.s0):
            raise ValidationError(
                "parametric init requires all of init.s, init.s_tilde, init.S0"
            )


@dataclass(frozen=True)
class ExperimentConfig:
    schedule: Schedule
    init: InitSpec
    max_generations: int
    replicates: int
    seed: int
    out_dir: str = "out"
    formats: tuple = ("csv",)

    def __post_init__(self) -> None:
        if self.max_generations < 1:
            raise ValidationError(
                f"max_generations must be >= 1, got {self.max_generations}"
            )
        if self.replicates < 1:
            raise ValidationError(f"replicates must be >= 1, got {self.replicates}")
        if self.seed < 0:
            raise ValidationError(f"seed must be >= 0, got {self.seed}")
        bad = [f for f in self.formats if f not in OUTPUT_FORMATS]
        if bad:
            raise ValidationError(
                f"unknown output formats {bad}; valid: {list(OUTPUT_FORMATS)}"
            )
        if not self.formats:
            raise ValidationError("output.formats must not be empty")

    def override(self, seed=None, replicates=None, out_dir=None, formats=None):
        """Copy with command-line overrides applied."""
        cfg = self
        if seed is not None:
            cfg = replace(cfg, seed=seed)
        if replicates is not None:
            cfg = replace(cfg, replicates=replicates)
        if out_dir is not None:
            cfg = replace(cfg, out_dir=str(out_dir))
        if formats is not None:
            cfg = replace(cfg, formats=tuple(formats))
        return cfg


_KNOWN_KEYS = (
    "schedule.kind",
    "schedule.n",
    "schedule.N",
    "schedule.K",
    "schedule.real_data_mode",
    "init.vector",
    "init.s",
    "init.s_tilde",
    "init.S0",
    "max_generations",
    "replicates",
    "seed",
    "output.directory",
    "output.formats",
)


def _parse_lines(text: str) -> dict:
    pairs = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(f"line {ln}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ParseError(f"line {ln}: empty key")
        if key not in _KNOWN_KEYS:
            raise ValidationError(f"line {ln}: unknown key {key!r}")
        if key in pairs:
            raise ValidationError(
                f"line {ln}: duplicate key {key!r} (first set on line {pairs[key][1]})"
            )
        pairs[key] = (value, ln)
    return pairs


def _take_int(pairs: dict, key: str, minimum: int) -> Optional[int]:
    if key not in pairs:
        return None
    value, ln = pairs.pop(key)
    try:
        parsed = int(value)
    except ValueError:
        raise ValidationError(f"line {ln}: {key} must be an integer, got {value!r}")
    if parsed < minimum:
        raise ValidationError(f"line {ln}: {key} must be >= {minimum}, got {parsed}")
    return parsed


def _take_float(pairs: dict, key: str) -> Optional[float]:
    if key not in pairs:
        return None
    value, ln = pairs.pop(key)
    try:
        parsed = float(value)
    except ValueError:
        raise ValidationError(f"line {ln}: {key} must be a number, got {value!r}")
    if not math.isfinite(parsed):
        raise ValidationError(f"line {ln}: {key} must be finite, got {value!r}")
    return parsed


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse configuration text; errors carry the offending line number."""
    pairs = _parse_lines(text)
    lines = {key: ln for key, (_, ln) in pairs.items()}

    if "schedule.kind" not in pairs:
        raise ValidationError("missing required key 'schedule.kind'")
    kind_str, kind_ln = pairs.pop("schedule.kind")
    try:
        kind = ScheduleKind(kind_str)
    except ValueError:
        raise ValidationError(
            f"line {kind_ln}: unknown schedule.kind {kind_str!r}; valid: "
            + ", ".join(k.value for k in ScheduleKind)
        )

    n = _take_int(pairs, "schedule.n", 1)
    if n is None:
        raise ValidationError("missing required key 'schedule.n'")
    corpus = _take_int(pairs, "schedule.N", 1)
    window = _take_int(pairs, "schedule.K", 1)
    mode = None
    if "schedule.real_data_mode" in pairs:
        mode_str, mode_ln = pairs.pop("schedule.real_data_mode")
        try:
            mode = RealDataMode(mode_str)
        except ValueError:
            raise ValidationError(
                f"line {mode_ln}: unknown schedule.real_data_mode {mode_str!r}; "
                "valid: fresh, fixed_corpus"
            )

    if kind is ScheduleKind.PARTIALLY_SYNTHETIC and corpus is None:
        raise ValidationError("schedule.kind partially_synthetic requires schedule.N")
    if kind is ScheduleKind.MOST_RECENT and window is None:
        raise ValidationError("schedule.kind most_recent requires schedule.K")
    if kind is not ScheduleKind.PARTIALLY_SYNTHETIC and corpus is not None:
        raise ValidationError(
            f"line {lines['schedule.N']}: schedule.N only applies to "
            "partially_synthetic"
        )
    if kind is not ScheduleKind.MOST_RECENT and window is not None:
        raise ValidationError(
            f"line {lines['schedule.K']}: schedule.K only applies to most_recent"
        )
    if kind is not ScheduleKind.RANDOMLY_SAMPLED and mode is not None:
        raise ValidationError(
            f"line {lines['schedule.real_data_mode']}: schedule.real_data_mode "
            "only applies to randomly_sampled"
        )
    schedule = Schedule(
        kind=kind,
        n=n,
        corpus_size=corpus,
        window=window,
        real_data_mode=mode if mode is not None else RealDataMode.FRESH,
    )

    if "init.vector" in pairs:
        vec_str, vec_ln = pairs.pop("init.vector")
        for key in ("init.s", "init.s_tilde", "init.S0"):
            if key in pairs:
                raise ValidationError(
                    f"line {pairs[key][1]}: {key} conflicts with init.vector "
                    f"(line {vec_ln})"
                )
        try:
            entries = tuple(float(part) for part in vec_str.split(","))
        except ValueError:
            raise ValidationError(
                f"line {vec_ln}: init.vector must be comma-separated numbers"
            )
        init = InitSpec(vector=entries)
    else:
        s = _take_int(pairs, "init.s", 2)
        s_tilde = _take_int(pairs, "init.s_tilde", 1)
        s0 = _take_float(pairs, "init.S0")
        if None in (s, s_tilde, s0):
            raise ValidationError(
                "init requires either init.vector or all of "
                "init.s, init.s_tilde, init.S0"
            )
        init = InitSpec(s=s, s_tilde=s_tilde, s0=s0)

    max_generations = _take_int(pairs, "max_generations", 1)
    if max_generations is None:
        raise ValidationError("missing required key 'max_generations'")
    replicates = _take_int(pairs, "replicates", 1)
    if replicates is None:
        raise ValidationError("missing required key 'replicates'")
    seed = _take_int(pairs, "seed", 0)
    if seed is None:
        raise ValidationError("missing required key 'seed'")

    out_dir = "out"
    if "output.directory" in pairs:
        out_dir, _ = pairs.pop("output.directory")
    formats = ("csv",)
    if "output.formats" in pairs:
        fmt_str, fmt_ln = pairs.pop("output.formats")
        formats = tuple(part.strip() for part in fmt_str.split(",") if part.strip())
        for fmt in formats:
            if fmt not in OUTPUT_FORMATS:
                raise ValidationError(
                    f"line {fmt_ln}: unknown output format {fmt!r}; "
                    f"valid: {', '.join(OUTPUT_FORMATS)}"
                )

    return ExperimentConfig(
        schedule=schedule,
        init=init,
        max_generations=max_generations,
        replicates=replicates,
        seed=seed,
        out_dir=out_dir,
        formats=formats,
    )


def parse_config(path) -> ExperimentConfig:
    """Parse a configuration file; see module docstring for the schema."""
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"config file not found: {p}")
    return parse_config_text(p.read_text(encoding="utf-8"))


def make_initial_distribution(
    init: InitSpec, rng: Optional[np.random.Generator] = None
) -> ProbVec:
    """Build the initial distribution from an :class:`InitSpec`.

    The parametric form is a deterministic two-level profile: one heavy
    atom at index 0 plus a uniform layer over indices 1..s_tilde-1, zeros
    elsewhere.  The atom mass solves a*a + (1-a)^2/(s_tilde-1) = S0, so
    the sum of squared probabilities hits the target exactly (up to float
    rounding, far inside the 1e-6 contract).  Feasible targets satisfy
    1/s_tilde <= S0 < 1.
    """
    if init.vector is not None:
        return validate(np.asarray(init.vector, dtype=np.float64))
    if init.dirichlet_s is not None:
        if rng is None:
            raise ValidationError("dirichlet init requires an rng")
        raw = rng.dirichlet(np.ones(init.dirichlet_s))
        return validate(raw / raw.sum())

    s, s_tilde, s0 = init.s, init.s_tilde, init.s0
    if s_tilde > s:
        raise ValidationError(f"init.s_tilde {s_tilde} exceeds init.s {s}")
    if s_tilde == 1:
        raise InfeasibleTarget(
            "init.s_tilde = 1 forces S0 = 1, outside the feasible range [1/s_tilde, 1)"
        )
    if not (1.0 / s_tilde <= s0 < 1.0):
        raise InfeasibleTarget(
            f"init.S0 {s0} outside [1/s_tilde, 1) = [{1.0 / s_tilde}, 1)"
        )
    u = 1.0 / (s_tilde - 1)
    disc = s0 * (1.0 + u) - u
    atom = (u + math.sqrt(max(disc, 0.0))) / (1.0 + u)
    probs = np.zeros(s, dtype=np.float64)
    probs[0] = atom
    probs[1:s_tilde] = (1.0 - atom) / (s_tilde - 1)
    # exact-sum cleanup: put the float residual on the heavy atom
    probs[0] += 1.0 - probs.sum()
    vec = validate(probs)
    achieved = float(vec.probs @ vec.probs)
    if abs(achieved - s0) > SIGMA_TARGET_TOLERANCE:
        raise InfeasibleTarget(
            f"two-level profile missed S0 target: {achieved} vs {s0}"
        )
    return vec


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def resolved_items(cfg: ExperimentConfig) -> list:
    """Canonical (key, value-string) pairs of the resolved config, sorted."""
    sched = cfg.schedule
    items = {
        "schedule.kind": sched.kind.value,
        "schedule.n": sched.n,
        "max_generations": cfg.max_generations,
        "replicates": cfg.replicates,
        "seed": cfg.seed,
        "output.directory": cfg.out_dir,
        "output.formats": ",".join(cfg.formats),
    }
    if sched.corpus_size is not None:
        items["schedule.N"] = sched.corpus_size
    if sched.window is not None:
        items["schedule.K"] = sched.window
    if sched.kind is ScheduleKind.RANDOMLY_SAMPLED:
        items["schedule.real_data_mode"] = sched.real_data_mode.value
    if cfg.init.vector is not None:
        items["init.vector"] = ",".join(repr(float(v)) for v in cfg.init.vector)
    elif cfg.init.dirichlet_s is not None:
        items["init.dirichlet_s"] = cfg.init.dirichlet_s
    else:
        items["init.s"] = cfg.init.s
        items["init.s_tilde"] = cfg.init.s_tilde
        items["init.S0"] = cfg.init.s0
    return sorted((k, _fmt(v)) for k, v in items.items())


def resolved_text(cfg: ExperimentConfig) -> str:
    return "".join(f"{k} = {v}\n" for k, v in resolved_items(cfg))


def config_hash(cfg: ExperimentConfig) -> str:
    """SHA-256 of the canonical resolved text, output.* keys excluded."""
    data = "".join(
        f"{k} = {v}\n"
        for k, v in resolved_items(cfg)
        if not k.startswith("output.")
    )
    return hashlib.sha256(data.encode("utf-8")).hexdigest()
