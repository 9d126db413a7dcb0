#!/usr/bin/env python3

import logging
import re

import attr

from odiprobe import store
from odiprobe.backends.base import CLS_MARKER, SEP_MARKER, MASK_MARKER, SequenceTooLong


logger = logging.getLogger('odiprobe.probes')

SENTENCE_END = re.compile(r'(?<=[.!?])(?:\s+|$)')
TRAILING_PUNCTUATION = '.!?'


def render(words, index):
    masked = list(words)
    masked[index] = MASK_MARKER
    return ' '.join([CLS_MARKER] + masked + [SEP_MARKER])


def unmask(rendered, ground_truth):
    """ Inverse of render: the original sentence as a string """
    words = rendered.split(' ')
    if words[:1] == [CLS_MARKER]:
        words = words[1:]
    if words[-1:] == [SEP_MARKER]:
        words = words[:-1]
    return ' '.join(ground_truth if word == MASK_MARKER else word for word in words)


@attr.s(frozen=True)
class Probe:
    probe_id = attr.ib()
    source_record_id = attr.ib()
    sentence = attr.ib(converter=tuple, repr=False)
    mask_word_index = attr.ib()
    ground_truth = attr.ib()
    rendered = attr.ib()

    def __attrs_post_init__(self):
        if self.sentence[self.mask_word_index] != self.ground_truth:
            raise ValueError('Probe {} masks {!r} but claims {!r}'.format(self.probe_id, self.sentence[self.mask_word_index], self.ground_truth))
        if self.rendered.count(MASK_MARKER) != 1:
            raise ValueError('Probe {} must render exactly one {}'.format(self.probe_id, MASK_MARKER))

    @classmethod
    def build(cls, probe_id, source_record_id, words, index):
        return cls(probe_id=probe_id, source_record_id=source_record_id, sentence=words, mask_word_index=index, ground_truth=words[index], rendered=render(words, index))

    def serialize(self):
        return {
            'probe_id': self.probe_id,
            'source_record_id': self.source_record_id,
            'rendered': self.rendered,
            'ground_truth': self.ground_truth,
            'mask_word_index': self.mask_word_index,
        }

    @classmethod
    def from_data(cls, data):
        sentence = unmask(data['rendered'], data['ground_truth']).split(' ')
        return cls(
            probe_id=data['probe_id'],
            source_record_id=data['source_record_id'],
            sentence=sentence,
            mask_word_index=data['mask_word_index'],
            ground_truth=data['ground_truth'],
            rendered=data['rendered'],
        )


@attr.s(frozen=True)
class ProbeSet:
    probes = attr.ib(converter=tuple)
    generator_config_hash = attr.ib(default='')
    source_split = attr.ib(default='heldout')

    @probes.validator
    def _unique_ids(self, attribute, value):
        ids = [probe.probe_id for probe in value]
        if len(ids) != len(set(ids)):
            raise ValueError('Probe ids must be unique')

    def __len__(self):
        return len(self.probes)

    def __iter__(self):
        return iter(self.probes)

    @property
    def content_hash(self):
        return store.content_hash(store.dumps(probe.serialize()) for probe in self.probes)

    def subset(self, probes):
        return attr.evolve(self, probes=probes)


@attr.s
class FilterReport:
    backend_id = attr.ib()
    total = attr.ib(default=0)
    kept = attr.ib(default=0)
    dropped_multi_token = attr.ib(default=0)
    dropped_too_long = attr.ib(default=0)

    @property
    def retention(self):
        return self.kept / self.total if self.total else 0.0

    def serialize(self):
        data = attr.asdict(self)
        data['retention'] = self.retention
        return data


def segment_sentences(narrative):
    sentences = []
    for chunk in SENTENCE_END.split(narrative):
        words = chunk.rstrip(TRAILING_PUNCTUATION).split()
        if words:
            sentences.append(words)
    return sentences


def record_probes(record, dictionary):
    for s, words in enumerate(segment_sentences(record.narrative)):
        for i, word in enumerate(words):
            if word in dictionary:
                yield Probe.build('{}-{}-{}'.format(record.record_id, s, i), record.record_id, words, i)


def generate_probes(heldout, dictionary, deduplicate=True, config_hash=''):
    """ One probe per dictionary word occurrence, in (record, sentence,
    position) order """
    if not len(dictionary):
        raise ValueError('Cannot generate probes from an empty dictionary')

    probes = []
    seen = set()
    duplicates = 0
    for record in heldout:
        for probe in record_probes(record, dictionary):
            key = (probe.rendered, probe.ground_truth)
            if deduplicate and key in seen:
                duplicates += 1
                continue
            seen.add(key)
            probes.append(probe)

    if not probes:
        raise ValueError('No probes generated from {} held-out records with {} dictionary terms, do the dictionary and corpus match?'.format(len(heldout), len(dictionary)))

    logger.info('Generated {} probes ({} duplicates removed)'.format(len(probes), duplicates))
    return ProbeSet(probes=probes, generator_config_hash=config_hash)


def filter_single_token(probes, backend):
    """ Keeps the probes whose ground truth is one token in context under
    backend's tokenizer and which fit its maximum length. Returns the
    filtered set and a FilterReport """
    report = FilterReport(backend_id=backend.backend_id, total=len(probes))
    kept = []

    for probe in probes:
        if backend.truth_token(probe) is None:
            report.dropped_multi_token += 1
            continue
        try:
            backend.check_length(probe.rendered)
        except SequenceTooLong:
            report.dropped_too_long += 1
            continue
        kept.append(probe)

    report.kept = len(kept)
    if not kept:
        raise ValueError('No probe survived single token filtering for {}, is the tokenizer right?'.format(backend.backend_id))

    logger.info('{}: kept {} of {} probes ({:.1%})'.format(backend.backend_id, report.kept, report.total, report.retention))
    if report.dropped_too_long:
        logger.warning('{}: dropped {} probes longer than {} tokens'.format(backend.backend_id, report.dropped_too_long, backend.max_sequence_length))
    return probes.subset(kept), report


def write_probes(path, probes, config_hash, **extra):
    return store.write_jsonl(path, 'probes', config_hash, [probe.serialize() for probe in probes], source_split=probes.source_split, **extra)


def read_probes(path, expected_hash=None):
    header, rows = store.read_jsonl(path, 'probes', expected_hash)
    return ProbeSet(probes=[Probe.from_data(row) for row in rows], generator_config_hash=header['config_hash'], source_split=header.get('source_split', 'heldout'))
