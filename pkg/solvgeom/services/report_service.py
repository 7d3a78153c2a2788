# solvgeom/services/report_service.py

# =============================================================================
# REPORT SERVICE
# =============================================================================
# Config hashing, report files (JSON lines plus a fixed-width text summary)
# and the monoidal merge of shard reports.
# =============================================================================

import functools
import hashlib
import json
import logging
import math
from pathlib import Path

import numpy as np
from rest_framework.utils.encoders import JSONEncoder

from ..exceptions import ConfigHashMismatch, ConfigInvalid
from ..serializers.reports import CampaignReportSerializer

logger = logging.getLogger('solvgeom')

# Config keys that may differ between shards of one campaign
UNHASHED_KEYS = ('seed', 'output_dir', 'spectra', 'shard', 'jobs')


def json_safe(value):
    """Recursively convert numpy values and non-finite floats into JSON-safe data."""
    if isinstance(value, dict):
        return {str(key): json_safe(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(item) for item in value]
    if isinstance(value, np.ndarray):
        return json_safe(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


def dumps(data):
    return json.dumps(json_safe(data), cls=JSONEncoder, sort_keys=True, separators=(',', ':'))


def config_hash(config):
    """Hash of a validated config, ignoring the seed and the output location."""
    hashed = {key: value for key, value in config.items() if key not in UNHASHED_KEYS}
    return hashlib.sha256(dumps(hashed).encode()).hexdigest()[:16]


def spectra_digest(spectra):
    """Short digest of the spectrum labels; seed and spectra tell shards of different runs apart."""
    return hashlib.sha256(';'.join(spec.label for spec in spectra).encode()).hexdigest()[:8]


# =============================================================================
# WRITING
# =============================================================================

def summary_text(report):
    """Fixed-width human-readable summary, one line per check."""
    lines = [
        f'campaign   {report.subcommand}',
        f'config     {report.config_hash}',
        f'seed       {",".join(str(seed) for seed in report.seeds)}',
        f'status     {"PASS" if report.passed else "FAIL"}',
        '',
        f'{"check":<56} {"count":>8} {"fail":>6} {"min":>14} {"max":>14} {"bound":>14}',
        '-' * 116,
    ]

    def fmt(value):
        return f'{value:>14.6g}' if isinstance(value, (int, float)) else f'{"-":>14}'

    for name in sorted(report.checks):
        stat = report.checks[name]
        bound = f'{stat.bound_kind}:{stat.bound:.4g}' if stat.bound is not None else stat.bound_kind
        lines.append(f'{name:<56} {stat.count:>8} {stat.failures:>6} '
                     f'{fmt(stat.minimum)} {fmt(stat.maximum)} {bound:>14}')
    return '\n'.join(lines) + '\n'


def report_lines(report, include_shards=True):
    data = report.as_dict(include_shards=include_shards)
    checks = data.pop('checks')
    return [dumps(data)] + [dumps(check) for check in checks]


def write_report(report, out_dir, include_shards=True, stem=None):
    """
    Write ``<stem>.jsonl`` (header line, then one line per check) and
    ``<stem>.txt`` into ``out_dir``.

    Returns:
        (jsonl path, summary path)
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = stem or report.subcommand
    jsonl_path = out_dir / f'{stem}.jsonl'
    text_path = out_dir / f'{stem}.txt'
    jsonl_path.write_text('\n'.join(report_lines(report, include_shards)) + '\n')
    text_path.write_text(summary_text(report))
    logger.info(f'Report written: {jsonl_path}')
    return jsonl_path, text_path


# =============================================================================
# READING AND MERGING
# =============================================================================

def report_from_dict(data):
    serializer = CampaignReportSerializer(data=data)
    if not serializer.is_valid():
        raise ConfigInvalid('malformed report', errors=serializer.errors)
    return serializer.save()


def read_report(path):
    lines = [line for line in Path(path).read_text().splitlines() if line.strip()]
    if not lines:
        raise ConfigInvalid(f'{path}: empty report file')
    header = json.loads(lines[0])
    header['checks'] = [json.loads(line) for line in lines[1:]]
    return report_from_dict(header)


def merge_reports(reports):
    """
    Merge shard reports. The merge is associative, commutative and
    idempotent on repeated shards; reports are folded in a canonical order
    so witnesses do not depend on the input order.
    """
    reports = list(reports)
    if not reports:
        raise ConfigHashMismatch('nothing to merge')
    reports.sort(key=lambda report: sorted(report.shards))
    merged = functools.reduce(lambda left, right: left.merge(right), reports)
    logger.info(f'Merged {len(reports)} reports into shards {sorted(merged.shards)}')
    return merged
