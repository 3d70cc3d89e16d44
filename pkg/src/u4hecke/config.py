"""Session configuration and the shared computation context."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, asdict

from .arith import ResidueField, LocalElem, _is_prime


class ConfigError(Exception):
    pass


_FIELDS = {
    "p": 3,
    "f": 1,
    "eps": None,          # None = first non-square unit of k0
    "prec": 48,           # absolute series precision
    "hot_prec": 16,       # truncation depth for bulk coset representatives
    "m": 1,               # the level parameter used by the half-integral suites
    "max_quotient_log": 8,  # refuse to materialize transversals above q^this
    "samples": 200,
    "seed": 20240801,
}


@dataclass
class SessionConfig:
    p: int = _FIELDS["p"]
    f: int = _FIELDS["f"]
    eps: int | None = _FIELDS["eps"]
    prec: int = _FIELDS["prec"]
    hot_prec: int = _FIELDS["hot_prec"]
    m: int = _FIELDS["m"]
    max_quotient_log: int = _FIELDS["max_quotient_log"]
    samples: int = _FIELDS["samples"]
    seed: int = _FIELDS["seed"]

    def validate(self):
        if not _is_prime(self.p) or self.p == 2:
            raise ConfigError(f"p must be an odd prime (got {self.p})")
        if self.f < 1:
            raise ConfigError("f must be >= 1")
        if self.m < 1:
            raise ConfigError("m must be >= 1")
        if self.prec < 4 * (6 * self.m - 3) + 8:
            raise ConfigError(
                f"prec={self.prec} too small for m={self.m}; need >= {4 * (6 * self.m - 3) + 8}")
        return self

    @staticmethod
    def from_dict(d):
        unknown = set(d) - set(_FIELDS)
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        cfg = SessionConfig(**{**_FIELDS, **d})
        return cfg.validate()

    @staticmethod
    def load(path):
        with open(path) as fh:
            return SessionConfig.from_dict(json.load(fh))

    def to_dict(self):
        return asdict(self)


class Context:
    """Field objects, precision and the seeded RNG for one session."""

    def __init__(self, cfg: SessionConfig | None = None, **overrides):
        if cfg is None:
            cfg = SessionConfig()
        if overrides:
            d = cfg.to_dict()
            d.update(overrides)
            cfg = SessionConfig.from_dict(d)
        cfg.validate()
        self.cfg = cfg
        self.K = ResidueField(cfg.p, cfg.f, cfg.eps, series_prec=cfg.prec)
        self.rng = random.Random(cfg.seed)

    # -- element sugar -------------------------------------------------------
    @property
    def q(self):
        return self.K.q

    @property
    def p(self):
        return self.K.p

    def zero(self):
        return LocalElem.zero(self.K)

    def one(self):
        return LocalElem.integer(self.K, 1)

    def num(self, n):
        return LocalElem.integer(self.K, n)

    def pi(self, k=1):
        return LocalElem.pi(self.K, k)

    def se(self):
        return LocalElem.sqrt_eps(self.K)

    def kf(self, code, shift=0):
        return LocalElem.const(self.K, code, shift)

    def eps_elem(self):
        return LocalElem.const(self.K, self.K.eps)

    # -- random draws --------------------------------------------------------
    def rand_kf(self, nonzero=False):
        lo = 1 if nonzero else 0
        return self.rng.randrange(lo, self.q * self.q)

    def rand_k0(self, nonzero=False):
        lo = 1 if nonzero else 0
        return self.rng.randrange(lo, self.q)

    def rand_local(self, vmin, vmax, k0_only=False):
        """Random element with digits in pi^[vmin, vmax)."""
        co = []
        for _ in range(vmax - vmin):
            co.append(self.rand_k0() if k0_only else self.rand_kf())
        return LocalElem.make(self.K, vmin, co)

    def reseed(self, seed):
        self.rng = random.Random(seed)
