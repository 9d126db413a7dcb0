#!/usr/bin/env python3

import csv
import datetime
import logging
import math
import os
import random
import statistics

import attr

from odiprobe import store


logger = logging.getLogger('odiprobe.corpus')

REPLACEMENT_CHAR = '�'
REQUIRED_FIELDS = ('id', 'narrative', 'component_description', 'source')


def normalize_text(raw):
    """ Lower-cases and trims. Nothing else is touched """
    if raw is None:
        return ''
    return raw.lower().strip()


def _non_empty(instance, attribute, value):
    if not value:
        raise ValueError('{} must not be empty'.format(attribute.name))


@attr.s(frozen=True)
class ComplaintRecord:
    record_id = attr.ib(validator=_non_empty)
    narrative = attr.ib(validator=_non_empty)
    component_description = attr.ib(default='')
    source_channel = attr.ib(default='')
    received_date = attr.ib(default=None)

    def serialize(self):
        data = attr.asdict(self)
        if self.received_date is not None:
            data['received_date'] = self.received_date.isoformat()
        return data

    @classmethod
    def from_data(cls, data):
        received = data.get('received_date')
        if received:
            received = datetime.date.fromisoformat(received)
        return cls(
            record_id=data['record_id'],
            narrative=data['narrative'],
            component_description=data.get('component_description', ''),
            source_channel=data.get('source_channel', ''),
            received_date=received or None,
        )


@attr.s(frozen=True)
class CorpusSplit:
    train = attr.ib(converter=tuple)
    heldout = attr.ib(converter=tuple)
    split_seed = attr.ib()
    ratio = attr.ib()

    def manifest(self):
        return {
            'seed': self.split_seed,
            'ratio': self.ratio,
            'train': [record.record_id for record in self.train],
            'heldout': [record.record_id for record in self.heldout],
        }


@attr.s(frozen=True)
class LengthDescriptives:
    mean = attr.ib()
    minimum = attr.ib()
    q25 = attr.ib()
    median = attr.ib()
    q75 = attr.ib()
    maximum = attr.ib()
    unit_label = attr.ib(default='words')

    def row(self):
        return [self.unit_label, '{:.2f}'.format(self.mean), self.minimum, self.q25, self.median, self.q75, self.maximum]


@attr.s
class ParseReport:
    rows_read = attr.ib(default=0)
    malformed = attr.ib(default=0)
    empty_narrative = attr.ib(default=0)
    duplicate_id = attr.ib(default=0)
    replaced_bytes = attr.ib(default=0)

    def log(self):
        logger.info('Read {} rows from the complaints file'.format(self.rows_read))
        for name in ('malformed', 'empty_narrative', 'duplicate_id', 'replaced_bytes'):
            count = getattr(self, name)
            if count:
                logger.warning('{}: {}'.format(name.replace('_', ' '), count))


def _parse_date(value):
    value = value.strip()
    if not value:
        return None
    for fmt in ('%Y%m%d', '%Y-%m-%d', '%m/%d/%Y'):
        try:
            return datetime.datetime.strptime(value, fmt).date()
        except ValueError:
            continue
    return None


def _resolve_columns(schema, header_row):
    """ Maps every logical field to a column index. Schema values are column
    positions, or column names when the file carries a header row """
    for field in REQUIRED_FIELDS:
        if field not in schema:
            raise ValueError('Schema is missing the required field "{}"'.format(field))

    columns = {}
    for field, column in schema.items():
        if isinstance(column, int):
            columns[field] = column
            continue
        if header_row is None:
            raise ValueError('Schema field "{}" names column "{}" but the file has no header row'.format(field, column))
        try:
            columns[field] = header_row.index(column)
        except ValueError:
            raise ValueError('Schema field "{}" names column "{}" which is absent from the header'.format(field, column))
    return columns


def _decoded_lines(handle, report):
    for raw in handle:
        line = raw.decode('utf-8', errors='replace')
        report.replaced_bytes += line.count(REPLACEMENT_CHAR)
        yield line.rstrip('\r\n')


def parse_odi_flatfile(path, schema, delimiter='\t', header=False, report=None):
    if not os.path.exists(path):
        raise FileNotFoundError('Complaints file not found: {}'.format(path))

    report = report if report is not None else ParseReport()
    records = []
    seen_ids = set()

    with open(path, 'rb') as handle:
        reader = csv.reader(_decoded_lines(handle, report), delimiter=delimiter, quoting=csv.QUOTE_NONE)
        header_row = None
        if header:
            header_row = [name.strip() for name in next(reader, [])]
        columns = _resolve_columns(schema, header_row)
        width = max(columns.values()) + 1

        for row in reader:
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            report.rows_read += 1

            if len(row) < width:
                report.malformed += 1
                continue

            record_id = row[columns['id']].strip()
            narrative = row[columns['narrative']].strip()
            if not record_id:
                report.malformed += 1
                continue
            if not narrative:
                report.empty_narrative += 1
                continue
            if record_id in seen_ids:
                report.duplicate_id += 1
                continue
            seen_ids.add(record_id)

            received = None
            if 'received_date' in columns:
                received = _parse_date(row[columns['received_date']])

            records.append(ComplaintRecord(
                record_id=record_id,
                narrative=narrative,
                component_description=row[columns['component_description']].strip(),
                source_channel=row[columns['source']].strip(),
                received_date=received,
            ))

    report.log()
    return records


def normalize_records(records):
    out = []
    dropped = 0
    for record in records:
        narrative = normalize_text(record.narrative)
        if not narrative:
            dropped += 1
            continue
        out.append(attr.evolve(record, narrative=narrative, component_description=normalize_text(record.component_description)))

    if dropped:
        logger.warning('Dropped {} records whose narrative is empty after normalization'.format(dropped))
    return out


def filter_consumer_complaints(records, keep_sources):
    """ Keeps records filed through one of keep_sources, then drops repeated
    narratives (first occurrence wins) """
    keep = set(keep_sources)
    out = []
    seen = set()
    duplicates = 0

    for record in records:
        if record.source_channel not in keep:
            continue
        key = normalize_text(record.narrative)
        if key in seen:
            duplicates += 1
            continue
        seen.add(key)
        out.append(record)

    logger.info('Kept {} of {} records ({} duplicate narratives removed)'.format(len(out), len(records), duplicates))
    if not out:
        logger.warning('No records matched the source channels {}'.format(sorted(keep)))
    return out


def train_size(n, ratio):
    # round() absorbs float noise such as 0.29 * 100 = 28.999999999999996
    return int(math.floor(round(ratio * n, 9)))


def split_corpus(records, ratio, seed):
    if not records:
        raise ValueError('Cannot split an empty corpus')
    if not 0 < ratio < 1:
        raise ValueError('Split ratio must be in (0, 1), got {}'.format(ratio))

    ordered = sorted(records, key=lambda record: record.record_id)
    random.Random(seed).shuffle(ordered)
    cut = train_size(len(ordered), ratio)

    split = CorpusSplit(train=ordered[:cut], heldout=ordered[cut:], split_seed=seed, ratio=ratio)
    logger.info('Split {} records into {} train and {} held-out'.format(len(ordered), len(split.train), len(split.heldout)))
    return split


def nearest_rank(ordered, q):
    """ Nearest-rank quantile of an already sorted list """
    index = max(int(math.ceil(q * len(ordered))), 1) - 1
    return ordered[index]


def corpus_stats(texts, unit_label='words'):
    """ Length descriptives over token sequences. Quantiles use the
    nearest-rank method """
    lengths = sorted(len(text) for text in texts)
    if not lengths:
        raise ValueError('Cannot compute descriptives of an empty corpus')

    return LengthDescriptives(
        mean=statistics.fmean(lengths),
        minimum=lengths[0],
        q25=nearest_rank(lengths, 0.25),
        median=nearest_rank(lengths, 0.5),
        q75=nearest_rank(lengths, 0.75),
        maximum=lengths[-1],
        unit_label=unit_label,
    )


STATS_COLUMNS = ['', 'avg. length', 'min', '25%', '50%', '75%', 'max']


def format_stats_table(rows, fmt='md', config_hash=None):
    """ Markdown or CSV table. A config_hash adds a leading `# config_hash=` line """
    stamp = ['# config_hash={}'.format(config_hash)] if config_hash is not None else []
    if fmt == 'csv':
        lines = stamp + [','.join(STATS_COLUMNS)]
        lines += [','.join(str(value) for value in row.row()) for row in rows]
        return '\n'.join(lines) + '\n'

    lines = stamp + ['| ' + ' | '.join(STATS_COLUMNS) + ' |', '|' + '---|' * len(STATS_COLUMNS)]
    lines += ['| ' + ' | '.join(str(value) for value in row.row()) + ' |' for row in rows]
    return '\n'.join(lines) + '\n'


def write_corpus(path, split, config_hash):
    records = []
    for tag, part in (('train', split.train), ('heldout', split.heldout)):
        for record in part:
            data = record.serialize()
            data['split_tag'] = tag
            records.append(data)
    return store.write_jsonl(path, 'corpus', config_hash, records)


def read_corpus(path, split_tag=None, expected_hash=None):
    header, rows = store.read_jsonl(path, 'corpus', expected_hash)
    return [ComplaintRecord.from_data(row) for row in rows if split_tag is None or row['split_tag'] == split_tag]


def write_split_manifest(path, split, config_hash):
    data = split.manifest()
    data['config_hash'] = config_hash
    store.write_json(path, data)
    return path
