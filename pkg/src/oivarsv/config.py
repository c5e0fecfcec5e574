"""Run configuration: a plain key = value file with [run], [priors] and
[forecast] sections, every default overridable and echoed back into the run
metadata for reproducibility.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields
from pathlib import Path


@dataclass
class RunConfig:
    # [run]
    model: str = "oi"
    ordering: str = "as-given"
    lags: int = 4
    burn: int = 1000
    draws: int = 2000
    thin: int = 1
    seed: int = 0
    an_backend: str = "mh"
    chains: int = 1
    # [priors]
    intercept_var: float = 100.0
    b0_diag_mean: float = 1.0
    b0_diag_var: float = 1.0
    b0_offdiag_mean: float = 0.0
    b0_offdiag_var: float = 1.0
    phi0: float = 0.95
    v_phi: float = 0.01
    nu: float = 3.0
    s: float = 0.2
    log_sq_offset: float = 1e-4
    # [forecast]
    horizons: tuple[int, ...] = (1, 6, 12)
    origin_start: int = 0
    origin_end: int = 0
    origin_stride: int = 1
    n_paths: int = 1
    refit_every: int = 1
    n_forecast_draws: int = 200
    benchmark: str = ""

    _SECTIONS = {
        "run": ("model", "ordering", "lags", "burn", "draws", "thin", "seed",
                "an_backend", "chains"),
        "priors": ("intercept_var", "b0_diag_mean", "b0_diag_var",
                   "b0_offdiag_mean", "b0_offdiag_var", "phi0", "v_phi",
                   "nu", "s", "log_sq_offset"),
        "forecast": ("horizons", "origin_start", "origin_end", "origin_stride",
                     "n_paths", "refit_every", "n_forecast_draws", "benchmark"),
    }

    def validate(self) -> None:
        if self.model not in ("oi", "cs"):
            raise ValueError(f"model must be 'oi' or 'cs', got {self.model!r}")
        if self.an_backend not in ("mh", "approx"):
            raise ValueError(f"an_backend must be 'mh' or 'approx', got {self.an_backend!r}")
        if self.lags < 1:
            raise ValueError("lags must be >= 1")
        if self.burn < 0 or self.draws < 0 or self.thin < 1 or self.chains < 1:
            raise ValueError("invalid sampler settings")
        if any(h < 1 for h in self.horizons):
            raise ValueError("horizons must be >= 1")

    def prior_kwargs(self) -> dict:
        return dict(
            intercept_var=self.intercept_var,
            b0_diag_mean=self.b0_diag_mean, b0_diag_var=self.b0_diag_var,
            b0_offdiag_mean=self.b0_offdiag_mean, b0_offdiag_var=self.b0_offdiag_var,
            phi0=self.phi0, vphi=self.v_phi, nu=self.nu, s=self.s,
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        cfg = cls()
        cfg.update_from_file(path)
        return cfg

    def update_from_file(self, path: str | Path) -> None:
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        read = parser.read(str(path))
        if not read:
            raise FileNotFoundError(f"config file not found: {path}")
        known = {f.name: f for f in fields(self) if not f.name.startswith("_")}
        for section in parser.sections():
            if section not in self._SECTIONS:
                raise ValueError(f"unknown config section [{section}]")
            for key, value in parser.items(section):
                if key not in self._SECTIONS[section]:
                    raise ValueError(f"unknown key {key!r} in section [{section}]")
                setattr(self, key, _parse_value(known[key].type, value, getattr(self, key)))
        self.validate()

    def write(self, path: str | Path) -> None:
        """Echo the resolved configuration, including every default."""
        parser = configparser.ConfigParser()
        for section, keys in self._SECTIONS.items():
            parser[section] = {}
            for key in keys:
                value = getattr(self, key)
                if isinstance(value, tuple):
                    value = ",".join(str(v) for v in value)
                parser[section][key] = str(value)
        with open(path, "w") as f:
            parser.write(f)


def _parse_value(annotation, raw: str, default):
    raw = raw.strip()
    if isinstance(default, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if isinstance(default, tuple):
        return tuple(int(tok) for tok in raw.replace(" ", "").split(",") if tok)
    return raw
