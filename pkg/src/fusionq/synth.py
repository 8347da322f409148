"""Synthetic multimodal score tables.

Generator, for voter ``i`` and example ``j``::

    latent_ij = y_j                    (pattern "linear")
              = u_j[i % 2]             (pattern "xor", y_j = sign(u_j[0] u_j[1]))
    eps_ij    = sqrt(1 - w_i^2) e_ij + w_i g_{group(i), j}
    score_ij  = s_i * clip(quality_i * latent_ij + noise_i * eps_ij, -clamp, clamp)

with independent standard normals ``e`` and shared normals ``g`` per noise
group, ``w_i`` the mixing weight and ``s_i = -1`` for flipped voters. Exactly
``round(m * positive_ratio)`` labels are positive, in shuffled order. In the
xor pattern ``|u_j|`` is half-normal and the signs of ``u_j`` are drawn to
agree for positives and disagree for negatives. Everything is drawn from one
``numpy.random.default_rng(seed)`` stream in the order: labels, latent
values, shared noise, independent noise.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from .exceptions import DataError
from .types import ScoreMatrix


@dataclass(frozen=True)
class SynthSpec:
    m: int
    quality: tuple
    noise: tuple
    positive_ratio: float = 0.5
    flipped: tuple = None
    noise_group: tuple = None  # -1: independent noise
    mixing: tuple = None
    pattern: str = "linear"
    clamp: float = 3.0
    voter_names: tuple = field(default=None)

    def __post_init__(self):
        n = len(self.quality)
        defaults = {"flipped": (False,) * n, "noise_group": (-1,) * n, "mixing": (0.0,) * n,
                    "voter_names": tuple(f"h{i}" for i in range(n))}
        for key, value in defaults.items():
            if getattr(self, key) is None:
                object.__setattr__(self, key, value)
        object.__setattr__(self, "quality", tuple(float(v) for v in self.quality))
        object.__setattr__(self, "noise", tuple(float(v) for v in self.noise))
        object.__setattr__(self, "flipped", tuple(bool(int(v)) if isinstance(v, str) else bool(v)
                                                  for v in self.flipped))
        object.__setattr__(self, "noise_group", tuple(int(v) for v in self.noise_group))
        object.__setattr__(self, "mixing", tuple(float(v) for v in self.mixing))
        object.__setattr__(self, "voter_names", tuple(str(v) for v in self.voter_names))
        self.validate()

    @property
    def n(self) -> int:
        return len(self.quality)

    def validate(self):
        n = self.n
        if n < 1:
            raise DataError("at least one voter is required")
        if self.m < 2:
            raise DataError("at least two examples are required")
        if not 0 < self.positive_ratio < 1:
            raise DataError("positive_ratio must lie in (0, 1)")
        for name in ("noise", "flipped", "noise_group", "mixing", "voter_names"):
            if len(getattr(self, name)) != n:
                raise DataError(f"{name} must list {n} values")
        if any(s < 0 for s in self.noise):
            raise DataError("noise levels must be non-negative")
        if any(not 0 <= w <= 1 for w in self.mixing):
            raise DataError("mixing weights must lie in [0, 1]")
        if self.pattern not in ("linear", "xor"):
            raise DataError(f"unknown pattern {self.pattern!r}")
        if self.pattern == "xor" and n < 2:
            raise DataError("the xor pattern needs at least two voters")
        if not self.clamp > 0:
            raise DataError("clamp must be positive")


def generate(spec: SynthSpec, seed: int) -> ScoreMatrix:
    rng = np.random.default_rng(seed)
    m, n = spec.m, spec.n
    n_pos = int(round(m * spec.positive_ratio))
    y = np.where(np.arange(m) < n_pos, 1, -1)
    y = y[rng.permutation(m)]

    if spec.pattern == "linear":
        latent = np.repeat(y[:, None].astype(float), n, axis=1)
    else:
        mag = np.abs(rng.standard_normal((m, 2)))
        first = rng.choice([-1.0, 1.0], size=m)
        u = mag * np.column_stack([first, first * y])
        latent = u[:, np.arange(n) % 2]

    groups = np.asarray(spec.noise_group)
    group_ids = sorted(set(groups[groups >= 0].tolist()))
    shared = {g: rng.standard_normal(m) for g in group_ids}
    indep = rng.standard_normal((m, n))
    w = np.asarray(spec.mixing)
    eps = np.sqrt(1.0 - w**2) * indep
    for i, g in enumerate(groups):
        if g >= 0:
            eps[:, i] += w[i] * shared[g]

    scores = np.asarray(spec.quality) * latent + np.asarray(spec.noise) * eps
    scores = np.clip(scores, -spec.clamp, spec.clamp)
    scores *= np.where(spec.flipped, -1.0, 1.0)
    ids = tuple(f"x{j}" for j in range(m))
    return ScoreMatrix(scores, y, spec.voter_names, ids)


def parse_spec(text: str) -> SynthSpec:
    """Read a flat ``key = value`` config; list values are comma separated."""
    known = {f.name for f in fields(SynthSpec)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise DataError(f"line {lineno}: unknown key {key!r}")
        values[key] = value
    try:
        kwargs = {}
        for key, value in values.items():
            if key == "m":
                kwargs[key] = int(value)
            elif key in ("positive_ratio", "clamp"):
                kwargs[key] = float(value)
            elif key == "pattern":
                kwargs[key] = value
            else:
                kwargs[key] = tuple(v.strip() for v in value.split(","))
        return SynthSpec(**kwargs)
    except (TypeError, ValueError) as exc:
        raise DataError(f"invalid synth config: {exc}") from exc


def format_spec(spec: SynthSpec) -> str:
    lines = []
    for f in fields(SynthSpec):
        value = getattr(spec, f.name)
        if isinstance(value, tuple):
            value = ", ".join(str(int(v)) if isinstance(v, bool) else str(v) for v in value)
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"
