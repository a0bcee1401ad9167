"""Flat key=value run configuration with dotted section keys.

Example::

    kernel.shape=exponential
    kernel.beta=1.0
    regime.T=2000
    regime.lambda=1.0
    regime.mu=1.0

Lines starting with ``#`` and blank lines are ignored; flags override file
values.  The config hash is over the sorted canonical ``key=value`` lines, so
key order never matters.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

from .errors import ValidationError
from .kernels import Exponential, KernelSpec, PowerLaw, RegimeSpec, SumOfExponentials


def load_config(path) -> dict:
    cfg = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        cfg[key.strip()] = value.strip()
    return cfg


def config_hash(cfg: dict) -> str:
    canon = "\n".join(f"{k}={cfg[k]}" for k in sorted(cfg))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def get_float(cfg: dict, key: str, default: float = None) -> float:
    if key not in cfg:
        if default is None:
            raise ValidationError(f"missing config key {key}")
        return default
    try:
        return float(cfg[key])
    except ValueError as exc:
        raise ValidationError(f"config key {key}={cfg[key]!r} is not a number") from exc


def get_int(cfg: dict, key: str, default: int = None) -> int:
    if key not in cfg:
        if default is None:
            raise ValidationError(f"missing config key {key}")
        return default
    try:
        return int(cfg[key])
    except ValueError as exc:
        raise ValidationError(f"config key {key}={cfg[key]!r} is not an integer") from exc


def build_regime(cfg: dict) -> RegimeSpec:
    return RegimeSpec(
        T=get_float(cfg, "regime.T", 1000.0),
        lam=get_float(cfg, "regime.lambda", 1.0),
        mu=get_float(cfg, "regime.mu", 1.0),
        tail_exponent=get_float(cfg, "regime.tail_exponent", 1.0),
    )


def build_shape(cfg: dict):
    shape = cfg.get("kernel.shape", "exponential").lower()
    if shape == "exponential":
        return Exponential(get_float(cfg, "kernel.beta", 1.0))
    if shape == "powerlaw":
        return PowerLaw(
            get_float(cfg, "kernel.alpha", 0.5), get_float(cfg, "kernel.x0", 1.0)
        )
    if shape in ("sumexp", "sumofexponentials"):
        spec = cfg.get("kernel.components", "")
        comps = []
        for item in spec.split(","):
            item = item.strip()
            if not item:
                continue
            try:
                w, b = item.split(":")
                comps.append((float(w), float(b)))
            except ValueError as exc:
                raise ValidationError(
                    f"kernel.components entry {item!r} is not weight:rate"
                ) from exc
        if not comps:
            raise ValidationError("kernel.components must list weight:rate pairs")
        return SumOfExponentials(tuple(comps))
    raise ValidationError(f"unknown kernel.shape {shape!r}")


def build_kernel(cfg: dict, regime: RegimeSpec) -> KernelSpec:
    kernel = regime.kernel(build_shape(cfg))
    if "kernel.truncation_horizon" in cfg:
        kernel = KernelSpec(
            kernel.shape, kernel.a_T, get_float(cfg, "kernel.truncation_horizon")
        )
    return kernel
