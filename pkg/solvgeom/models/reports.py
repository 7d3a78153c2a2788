from dataclasses import dataclass, field
from typing import Optional

from ..exceptions import ConfigHashMismatch

# Bound kind of checks that only report a measured quantity
INFO = 'info'


@dataclass
class CheckStat:
    """
    Aggregate of one asserted (or reported) quantity over a campaign sample.

    The statistic is a commutative monoid: counts and failures add, extremes
    combine, witnesses are pooled and capped.
    """

    name: str
    count: int = 0
    failures: int = 0
    minimum: Optional[float] = None
    maximum: Optional[float] = None
    bound: Optional[float] = None
    # 'max' bounds the maximum, 'min' bounds the minimum, 'info' only reports
    bound_kind: str = INFO
    witnesses: list = field(default_factory=list)

    @property
    def passed(self):
        return self.failures == 0

    def observe(self, values, violations=None, witnesses=(), limit=8):
        """Fold a batch of measured values into the statistic."""
        values = [float(v) for v in values]
        if not values:
            return self
        self.count += len(values)
        low, high = min(values), max(values)
        self.minimum = low if self.minimum is None else min(self.minimum, low)
        self.maximum = high if self.maximum is None else max(self.maximum, high)
        if violations is None:
            violations = self._violations(values)
        self.failures += int(violations)
        self.witnesses = _cap(self.witnesses + list(witnesses), limit)
        return self

    def _violations(self, values):
        if self.bound is None or self.bound_kind == INFO:
            return 0
        if self.bound_kind == 'max':
            return sum(1 for v in values if not v <= self.bound)
        return sum(1 for v in values if not v >= self.bound)

    def merge(self, other, limit=8):
        def _combine(a, b, pick):
            values = [v for v in (a, b) if v is not None]
            return pick(values) if values else None

        return CheckStat(
            name=self.name,
            count=self.count + other.count,
            failures=self.failures + other.failures,
            minimum=_combine(self.minimum, other.minimum, min),
            maximum=_combine(self.maximum, other.maximum, max),
            bound=self.bound if self.bound is not None else other.bound,
            bound_kind=self.bound_kind,
            witnesses=_cap(self.witnesses + other.witnesses, limit),
        )

    def as_dict(self):
        return {
            'name': self.name,
            'count': self.count,
            'failures': self.failures,
            'minimum': self.minimum,
            'maximum': self.maximum,
            'bound': self.bound,
            'bound_kind': self.bound_kind,
            'passed': self.passed,
            'witnesses': self.witnesses,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            name=data['name'],
            count=data['count'],
            failures=data['failures'],
            minimum=data.get('minimum'),
            maximum=data.get('maximum'),
            bound=data.get('bound'),
            bound_kind=data.get('bound_kind', INFO),
            witnesses=list(data.get('witnesses', [])),
        )


def shard_label(shard, jobs, seed, spectra=''):
    """``k/jobs@seed[:spectra]``: a shard is only the same shard under the same seed and spectra."""
    label = f'{shard}/{jobs}@{seed}'
    return f'{label}:{spectra}' if spectra else label


def _qualified(label, seed):
    return label if '@' in label else f'{label}@{seed}'


def _partition(label):
    """(seed and spectra part, jobs) of a qualified shard label."""
    position, _, run = label.partition('@')
    return run, position.split('/')[1]


def _cap(witnesses, limit):
    # Witnesses are JSON-like; a canonical sort keeps merges order-independent
    unique = {repr(w): w for w in witnesses}
    return [unique[key] for key in sorted(unique)][:limit]


@dataclass
class CampaignReport:
    """Checks of one campaign run, possibly merged from several shards."""

    subcommand: str
    config_hash: str
    seed: int
    shards: frozenset = frozenset()
    checks: dict = field(default_factory=dict)

    def __post_init__(self):
        self.shards = frozenset(_qualified(label, self.seed) for label in self.shards)

    @property
    def seeds(self):
        return sorted({int(_partition(label)[0].split(':')[0]) for label in self.shards} or {self.seed})

    def add(self, stat):
        if stat.name in self.checks:
            self.checks[stat.name] = self.checks[stat.name].merge(stat)
        else:
            self.checks[stat.name] = stat
        return stat

    @property
    def passed(self):
        return all(stat.passed for stat in self.checks.values())

    @property
    def failing(self):
        return sorted(name for name, stat in self.checks.items() if not stat.passed)

    def merge(self, other):
        if other.config_hash != self.config_hash or other.subcommand != self.subcommand:
            raise ConfigHashMismatch(
                f'cannot merge {other.subcommand}/{other.config_hash} '
                f'into {self.subcommand}/{self.config_hash}'
            )
        if other.shards and other.shards <= self.shards:
            return self
        if self.shards and self.shards <= other.shards:
            return other
        overlap = self.shards & other.shards
        if overlap:
            raise ConfigHashMismatch(f'shards {sorted(overlap)} appear in both reports')
        # Shards of one seed and spectra cut with different --jobs cover overlapping samples
        jobs = {}
        for label in self.shards | other.shards:
            run, count = _partition(label)
            if jobs.setdefault(run, count) != count:
                raise ConfigHashMismatch(f'run {run} is split into {jobs[run]} and {count} shards')
        merged = CampaignReport(
            subcommand=self.subcommand,
            config_hash=self.config_hash,
            seed=min(self.seed, other.seed),
            shards=self.shards | other.shards,
            checks=dict(self.checks),
        )
        for stat in other.checks.values():
            merged.add(stat)
        return merged

    def as_dict(self, include_shards=True):
        data = {
            'subcommand': self.subcommand,
            'config_hash': self.config_hash,
            'seed': self.seed,
            'passed': self.passed,
            'checks': [self.checks[name].as_dict() for name in sorted(self.checks)],
        }
        if include_shards:
            data['shards'] = sorted(self.shards)
        return data

    @classmethod
    def from_dict(cls, data):
        report = cls(
            subcommand=data['subcommand'],
            config_hash=data['config_hash'],
            seed=data['seed'],
            shards=frozenset(data.get('shards', [])),
        )
        for item in data.get('checks', []):
            report.add(CheckStat.from_dict(item))
        return report
