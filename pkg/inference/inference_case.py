# inference/inference_case.py
# Data kasus (trace, ladder, profil) + hipotesis kontributor.

from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from core.errors import ValidationError
from mixture.mixture_ladder import AlleleLadder


@dataclass(frozen=True)
class Contributor:
    tag: str
    known: bool


@dataclass
class TraceData:
    name: str
    threshold: float
    # marker -> tinggi per alel ladder (0 = tidak teramati)
    heights: Dict[str, np.ndarray] = field(default_factory=dict)

    def observed_heights(self) -> np.ndarray:
        if not self.heights:
            return np.zeros(0)
        allz = np.concatenate([h for h in self.heights.values()])
        return allz[allz > 0]


@dataclass
class CaseData:
    ladders: Dict[str, AlleleLadder]
    traces: Dict[str, TraceData]
    profiles: Dict[str, Dict[str, np.ndarray]] = field(default_factory=dict)

    @property
    def markers(self) -> Tuple[str, ...]:
        return tuple(self.ladders)

    def heights(self, trace: str, marker: str) -> np.ndarray:
        data = self.traces[trace].heights.get(marker)
        if data is None:
            return np.zeros(self.ladders[marker].size)
        return data

    def validate(self) -> None:
        for tname, trace in self.traces.items():
            if not trace.threshold > 0:
                raise ValidationError(f"trace {tname}: threshold C harus > 0")
            for marker, h in trace.heights.items():
                if marker not in self.ladders:
                    raise ValidationError(f"trace {tname}: marker {marker} tidak ada di tabel frekuensi")
                if np.shape(h) != (self.ladders[marker].size,):
                    raise ValidationError(f"trace {tname}/{marker}: panjang tinggi puncak salah")
                bad = (h > 0) & (h < trace.threshold)
                if np.any(bad) or np.any(h < 0):
                    raise ValidationError(f"trace {tname}/{marker}: tinggi puncak di (0, C)")
        for ind, markers in self.profiles.items():
            for marker, counts in markers.items():
                if marker not in self.ladders:
                    raise ValidationError(f"profil {ind}: marker {marker} tidak ada di tabel frekuensi")
                if np.shape(counts) != (self.ladders[marker].size,) or int(np.sum(counts)) != 2 or np.any(counts < 0):
                    raise ValidationError(f"profil {ind}/{marker}: jumlah alel harus 2")


@dataclass
class Hypothesis:
    name: str
    contributors: Tuple[Contributor, ...]
    # trace -> tag kontributor yang ikut di trace itu
    traces: Dict[str, Tuple[str, ...]] = field(default_factory=dict)

    @property
    def knowns(self) -> Tuple[str, ...]:
        return tuple(c.tag for c in self.contributors if c.known)

    @property
    def unknowns(self) -> Tuple[str, ...]:
        return tuple(c.tag for c in self.contributors if not c.known)

    @property
    def tags(self) -> Tuple[str, ...]:
        return tuple(c.tag for c in self.contributors)

    def included(self, trace: str) -> Tuple[str, ...]:
        return self.traces[trace]

    def validate(self, case: CaseData) -> None:
        tags = self.tags
        if len(set(tags)) != len(tags):
            raise ValidationError(f"hipotesis {self.name}: tag kontributor ganda")
        if not self.traces:
            raise ValidationError(f"hipotesis {self.name}: tidak ada trace")
        for trace, members in self.traces.items():
            if trace not in case.traces:
                raise ValidationError(f"hipotesis {self.name}: trace {trace} tidak ada di data")
            if not members:
                raise ValidationError(f"hipotesis {self.name}: trace {trace} tanpa kontributor")
            for tag in members:
                if tag not in tags:
                    raise ValidationError(f"hipotesis {self.name}: {tag} di trace {trace} tidak ada di roster")
        for tag in self.knowns:
            if tag not in case.profiles:
                raise ValidationError(f"hipotesis {self.name}: profil {tag} tidak ditemukan")
            for marker in case.markers:
                if marker not in case.profiles[tag]:
                    raise ValidationError(f"hipotesis {self.name}: profil {tag} tidak punya marker {marker}")

    @classmethod
    def build(
        cls,
        name: str,
        known: Sequence[str],
        unknowns,
        traces: Sequence[str],
        inclusion: Optional[Mapping[str, Sequence[str]]] = None,
    ) -> "Hypothesis":
        """`unknowns` = jumlah (tag U1..Uk) atau daftar tag."""
        if isinstance(unknowns, int):
            unknowns = [f"U{i + 1}" for i in range(unknowns)]
        roster = tuple(Contributor(t, True) for t in known) + tuple(Contributor(t, False) for t in unknowns)
        all_tags = tuple(c.tag for c in roster)
        per_trace = {}
        for t in traces:
            members = (inclusion or {}).get(t)
            per_trace[t] = tuple(members) if members is not None else all_tags
        return cls(name, roster, per_trace)

    def relabeled(self, mapping: Mapping[str, str]) -> "Hypothesis":
        roster = tuple(Contributor(mapping.get(c.tag, c.tag), c.known) for c in self.contributors)
        traces = {t: tuple(mapping.get(x, x) for x in m) for t, m in self.traces.items()}
        return Hypothesis(self.name, roster, traces)
