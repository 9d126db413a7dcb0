import logging
import random

from hypothesis import given, strategies as st
import pytest

from odiprobe import corpus
from odiprobe.defaults import DEFAULTS

from conftest import odi_row


SCHEMA = DEFAULTS['input']['schema']


def test_parse_three_rows(write_odi):
    path = write_odi([
        odi_row(1, 'ENGINE STALLED ON THE HIGHWAY.'),
        odi_row(2, 'BRAKES FAILED.', component='SERVICE BRAKES, HYDRAULIC'),
        odi_row(3, 'GEAR SHIFT CABLE FAILURE IN AUTO TRANSMISSION', component='POWER TRAIN'),
    ])

    records = corpus.parse_odi_flatfile(path, SCHEMA)

    assert [r.narrative for r in records] == ['ENGINE STALLED ON THE HIGHWAY.', 'BRAKES FAILED.', 'GEAR SHIFT CABLE FAILURE IN AUTO TRANSMISSION']
    assert records[1].component_description == 'SERVICE BRAKES, HYDRAULIC'
    assert records[0].source_channel == 'IVOQ'
    assert records[0].received_date.isoformat() == '2019-01-31'


def test_parse_counts_empty_narrative(write_odi):
    path = write_odi([odi_row(1, 'ENGINE STALLED'), odi_row(2, '  ')])
    report = corpus.ParseReport()

    records = corpus.parse_odi_flatfile(path, SCHEMA, report=report)

    assert len(records) == 1
    assert report.empty_narrative == 1


def test_parse_counts_malformed_and_duplicates(write_odi):
    path = write_odi([odi_row(1, 'ENGINE STALLED'), 'only\tthree\tcolumns', odi_row(1, 'AGAIN')])
    report = corpus.ParseReport()

    records = corpus.parse_odi_flatfile(path, SCHEMA, report=report)

    assert len(records) == 1
    assert report.malformed == 1
    assert report.duplicate_id == 1
    assert report.rows_read == 3


def test_parse_replaces_invalid_bytes(tmp_path):
    path = tmp_path / 'bad.txt'
    path.write_bytes(odi_row(1, 'ENGINE X STALLED').replace('X', '\udcff', 1).encode('utf-8', 'surrogateescape') + b'\n')
    report = corpus.ParseReport()

    records = corpus.parse_odi_flatfile(str(path), SCHEMA, report=report)

    assert report.replaced_bytes == 1
    assert corpus.REPLACEMENT_CHAR in records[0].narrative


def test_parse_missing_file():
    with pytest.raises(FileNotFoundError):
        corpus.parse_odi_flatfile('/nonexistent/FLAT_CMPL.txt', SCHEMA)


def test_parse_schema_missing_field(write_odi):
    path = write_odi([odi_row(1, 'ENGINE STALLED')])
    schema = dict(SCHEMA)
    del schema['narrative']

    with pytest.raises(ValueError, match='narrative'):
        corpus.parse_odi_flatfile(path, schema)


def test_parse_named_columns(write_odi):
    path = write_odi(['ID,TEXT,PART,TYPE', '7,ENGINE STALLED,ENGINE,IVOQ'])
    schema = {'id': 'ID', 'narrative': 'TEXT', 'component_description': 'PART', 'source': 'TYPE'}

    records = corpus.parse_odi_flatfile(path, schema, delimiter=',', header=True)

    assert records[0].record_id == '7'
    assert records[0].narrative == 'ENGINE STALLED'


def test_parse_named_column_absent(write_odi):
    path = write_odi(['ID,TEXT,PART', '7,ENGINE STALLED,ENGINE'])
    schema = {'id': 'ID', 'narrative': 'TEXT', 'component_description': 'PART', 'source': 'TYPE'}

    with pytest.raises(ValueError, match='source'):
        corpus.parse_odi_flatfile(path, schema, delimiter=',', header=True)


@pytest.mark.parametrize('raw,expected', [
    ('GEAR SHIFT CABLE FAILURE', 'gear shift cable failure'),
    ('abc', 'abc'),
    ('  MiXeD Case  ', 'mixed case'),
    ('BRAKES, HYDRAULIC!', 'brakes, hydraulic!'),
])
def test_normalize_text(raw, expected):
    assert corpus.normalize_text(raw) == expected


@given(st.text())
def test_normalize_text_idempotent(text):
    once = corpus.normalize_text(text)
    assert corpus.normalize_text(once) == once


def test_filter_keeps_configured_channels(make_records):
    records = make_records(['a', 'b', 'c'], sources=['consumer', 'insurer', 'consumer'])

    kept = corpus.filter_consumer_complaints(records, {'consumer'})

    assert [r.narrative for r in kept] == ['a', 'c']


def test_filter_removes_duplicate_narratives(make_records):
    records = make_records(['engine stalled', 'engine stalled', 'brakes failed'])

    kept = corpus.filter_consumer_complaints(records, {'IVOQ'})

    assert [r.record_id for r in kept] == ['r00000', 'r00002']


def test_filter_empty_result_warns(make_records, caplog):
    records = make_records(['a', 'b'])

    with caplog.at_level(logging.WARNING, logger='odiprobe.corpus'):
        kept = corpus.filter_consumer_complaints(records, {'nobody'})

    assert kept == []
    assert 'No records matched' in caplog.text


def test_normalize_records_drops_empty(make_records):
    records = make_records(['ENGINE', 'x'])
    records[1] = records[1].__class__(record_id='r9', narrative=' \t ', component_description='X')

    out = corpus.normalize_records(records)

    assert [r.narrative for r in out] == ['engine']


def test_split_ten_records(make_records):
    split = corpus.split_corpus(make_records([str(i) for i in range(10)]), 0.9, seed=3)

    assert len(split.train) == 9
    assert len(split.heldout) == 1


def test_split_is_deterministic(make_records):
    records = make_records([str(i) for i in range(50)])

    first = corpus.split_corpus(records, 0.9, seed=11)
    second = corpus.split_corpus(list(reversed(records)), 0.9, seed=11)

    assert first.manifest() == second.manifest()


def test_split_partition_of_synthetic_corpus(make_records):
    records = make_records(['complaint {}'.format(i) for i in range(10000)])

    split = corpus.split_corpus(records, 0.9, seed=5)
    train_ids = {r.record_id for r in split.train}
    heldout_ids = {r.record_id for r in split.heldout}

    assert len(split.train) == 9000
    assert not train_ids & heldout_ids
    assert train_ids | heldout_ids == {r.record_id for r in records}


def test_filter_then_split_partitions_input(make_records):
    records = make_records(['n{}'.format(i % 40) for i in range(60)], sources=['IVOQ' if i % 3 else 'INS' for i in range(60)])

    kept = corpus.filter_consumer_complaints(records, {'IVOQ'})
    split = corpus.split_corpus(kept, 0.9, seed=1)
    dropped = {r.record_id for r in records} - {r.record_id for r in kept}

    parts = [dropped, {r.record_id for r in split.train}, {r.record_id for r in split.heldout}]
    assert sum(len(p) for p in parts) == len(records)
    assert set().union(*parts) == {r.record_id for r in records}


@pytest.mark.parametrize('n,ratio,expected', [
    (10, 0.9, 9),
    (502445, 0.9, 452200),
    (100, 0.29, 29),
    (3, 0.5, 1),
])
def test_train_size_floors(n, ratio, expected):
    assert corpus.train_size(n, ratio) == expected


def test_split_rejects_empty():
    with pytest.raises(ValueError):
        corpus.split_corpus([], 0.9, seed=1)


def test_split_rejects_bad_ratio(make_records):
    with pytest.raises(ValueError):
        corpus.split_corpus(make_records(['a']), 1.0, seed=1)


def test_stats_fixed_lengths():
    stats = corpus.corpus_stats([['w'] * n for n in [1, 30, 41, 43, 71]])

    assert stats.minimum == 1
    assert stats.maximum == 71
    assert stats.mean == pytest.approx(37.2)
    assert (stats.q25, stats.median, stats.q75) == (30, 41, 43)


def test_stats_constant():
    stats = corpus.corpus_stats([['a'] * 5] * 3)

    assert stats.mean == 5
    assert stats.minimum == stats.q25 == stats.median == stats.q75 == stats.maximum == 5


def test_stats_order_invariant():
    rng = random.Random(2)
    texts = [['x'] * rng.randint(1, 90) for _ in range(200)]
    shuffled = list(texts)
    rng.shuffle(shuffled)

    assert corpus.corpus_stats(texts) == corpus.corpus_stats(shuffled)


@given(st.lists(st.integers(min_value=0, max_value=200), min_size=1))
def test_stats_ordering(lengths):
    stats = corpus.corpus_stats([['t'] * n for n in lengths])

    assert stats.minimum <= stats.q25 <= stats.median <= stats.q75 <= stats.maximum
    assert stats.minimum <= stats.mean <= stats.maximum


def test_stats_rejects_empty():
    with pytest.raises(ValueError):
        corpus.corpus_stats([])


def test_stats_table_layout():
    stats = corpus.corpus_stats([['w'] * n for n in [1, 30, 41, 43, 71]], 'raw data')

    table = corpus.format_stats_table([stats], 'csv')

    assert table.splitlines() == [',avg. length,min,25%,50%,75%,max', 'raw data,37.20,1,30,41,43,71']


def test_corpus_file_keeps_split_tags(tmp_path, make_records):
    split = corpus.split_corpus(make_records(['n{}'.format(i) for i in range(20)]), 0.9, seed=4)
    path = str(tmp_path / 'corpus.jsonl')

    corpus.write_corpus(path, split, 'abc')

    assert corpus.read_corpus(path, 'heldout', 'abc') == list(split.heldout)
    assert len(corpus.read_corpus(path)) == 20
