"""Weakly coupled spin-1/2 system: rotating-frame offsets and scalar couplings."""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence


@dataclass(frozen=True)
class SpinSystem:
    """Offsets and couplings in Hz.

    Offsets are measured from each channel's carrier, so every spin precesses
    at its offset in the simulation frame. Decoupled spins stay in the register
    but lose their Zeeman and coupling terms.
    """

    labels: tuple[str, ...]
    offsets: tuple[float, ...]
    couplings: tuple[tuple[float, ...], ...]
    decoupled: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        n = len(self.labels)
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))
        object.__setattr__(self, "offsets", tuple(float(x) for x in self.offsets))
        object.__setattr__(self, "couplings", tuple(tuple(float(x) for x in row) for row in self.couplings))
        object.__setattr__(self, "decoupled", frozenset(int(k) for k in self.decoupled))
        if n == 0:
            raise ValueError("a spin system needs at least one spin")
        if len(set(self.labels)) != n:
            raise ValueError(f"duplicate spin labels in {self.labels}")
        if len(self.offsets) != n or len(self.couplings) != n or any(len(r) != n for r in self.couplings):
            raise ValueError("offsets and couplings must match the number of labels")
        for i in range(n):
            if not math.isfinite(self.offsets[i]):
                raise ValueError(f"offset of {self.labels[i]} is not finite")
            if self.couplings[i][i] != 0:
                raise ValueError("couplings must have a zero diagonal")
            for j in range(n):
                if not math.isfinite(self.couplings[i][j]) or self.couplings[i][j] != self.couplings[j][i]:
                    raise ValueError("couplings must be finite and symmetric")
        if any(not 0 <= k < n for k in self.decoupled):
            raise ValueError(f"decoupled spin index out of range: {sorted(self.decoupled)}")

    @classmethod
    def from_pairs(cls, spins: Mapping[str, float], couplings: Mapping[tuple[str, str], float],
                   decoupled: Sequence[str] = ()) -> "SpinSystem":
        labels = tuple(spins)
        n = len(labels)
        table = [[0.0] * n for _ in range(n)]
        for (a, b), j in couplings.items():
            i, k = labels.index(a), labels.index(b)
            if i == k:
                raise ValueError(f"self-coupling {a}-{b}")
            table[i][k] = table[k][i] = float(j)
        return cls(labels, tuple(spins.values()), tuple(map(tuple, table)),
                   frozenset(labels.index(d) for d in decoupled))

    @property
    def n_spins(self) -> int:
        return len(self.labels)

    def index(self, spin) -> int:
        if isinstance(spin, str):
            try:
                return self.labels.index(spin)
            except ValueError:
                raise ValueError(f"unknown spin {spin!r}; have {self.labels}") from None
        k = int(spin)
        if not 0 <= k < self.n_spins:
            raise ValueError(f"spin index {k} out of range")
        return k

    @property
    def active(self) -> tuple[int, ...]:
        return tuple(k for k in range(self.n_spins) if k not in self.decoupled)

    def is_active(self, spin) -> bool:
        return self.index(spin) not in self.decoupled

    def coupling(self, a, b) -> float:
        """Effective J in Hz; zero when either spin is decoupled."""
        i, j = self.index(a), self.index(b)
        if i in self.decoupled or j in self.decoupled:
            return 0.0
        return self.couplings[i][j]

    def offset(self, spin) -> float:
        k = self.index(spin)
        return 0.0 if k in self.decoupled else self.offsets[k]

    def decouple(self, *spins) -> "SpinSystem":
        return SpinSystem(self.labels, self.offsets, self.couplings,
                          self.decoupled | {self.index(s) for s in spins})

    def recouple(self) -> "SpinSystem":
        return SpinSystem(self.labels, self.offsets, self.couplings)

    def active_subsystem(self) -> "SpinSystem":
        """Drop decoupled spins from the register altogether."""
        keep = self.active
        return SpinSystem(
            tuple(self.labels[k] for k in keep),
            tuple(self.offsets[k] for k in keep),
            tuple(tuple(self.couplings[i][j] for j in keep) for i in keep),
        )

    # -- config files --------------------------------------------------------

    @classmethod
    def loads(cls, text: str) -> "SpinSystem":
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        parser.optionxform = str
        parser.read_string(text)
        if not parser.has_section("spins"):
            raise ValueError("spin-system config needs a [spins] section")
        spins = {label: float(v) for label, v in parser.items("spins")}
        couplings = {}
        if parser.has_section("couplings"):
            for pair, v in parser.items("couplings"):
                a, sep, b = pair.partition("-")
                if not sep:
                    raise ValueError(f"coupling key {pair!r} must look like A-B")
                couplings[(a.strip(), b.strip())] = float(v)
        decoupled = []
        if parser.has_section("decoupled"):
            decoupled = [s.strip() for s in parser.get("decoupled", "spins", fallback="").split(",") if s.strip()]
        return cls.from_pairs(spins, couplings, decoupled)

    @classmethod
    def load(cls, path) -> "SpinSystem":
        return cls.loads(Path(path).read_text())

    def dumps(self) -> str:
        parser = configparser.ConfigParser()
        parser.optionxform = str
        parser["spins"] = {label: repr(nu) for label, nu in zip(self.labels, self.offsets)}
        parser["couplings"] = {
            f"{self.labels[i]}-{self.labels[j]}": repr(self.couplings[i][j])
            for i in range(self.n_spins) for j in range(i + 1, self.n_spins) if self.couplings[i][j]
        }
        if self.decoupled:
            parser["decoupled"] = {"spins": ",".join(self.labels[k] for k in sorted(self.decoupled))}
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    @classmethod
    def tce(cls) -> "SpinSystem":
        """The 13C-labelled trichloroethylene system shipped with the package."""
        return cls.loads(resources.files("mcphase.data").joinpath("tce.ini").read_text())
