#!/usr/bin/env python3

from collections import Counter
import csv
import logging
import re

import attr

from odiprobe import store


logger = logging.getLogger('odiprobe.terms')

SEPARATOR = re.compile(r'[^a-z0-9]+')
WORD = re.compile(r'[a-z0-9]+')
DEFAULT_BLOCKLIST = ('and', 'or', 'of', 'the')


def _valid_terms(instance, attribute, value):
    for term in value:
        if not term or term != term.lower() or any(c.isspace() for c in term):
            raise ValueError('Invalid dictionary term: {!r}'.format(term))


@attr.s(frozen=True)
class TermDictionary:
    terms = attr.ib(converter=frozenset, validator=_valid_terms)
    frequencies = attr.ib(factory=dict, converter=dict)

    def __attrs_post_init__(self):
        # every term gets an entry, unseen terms count 0
        for term in self.terms:
            self.frequencies.setdefault(term, 0)

    def __contains__(self, word):
        return word in self.terms

    def __len__(self):
        return len(self.terms)

    def frequency(self, term):
        return self.frequencies.get(term, 0)


def split_description(description):
    return [word for word in SEPARATOR.split(description.lower()) if word]


def build_dictionary(descriptions, blocklist=DEFAULT_BLOCKLIST):
    """ Splits compound component descriptions into single lowercase words.
    Accepts records (their component_description is used) or plain strings """
    blocked = set(blocklist)
    terms = set()
    non_empty = 0

    for item in descriptions:
        description = getattr(item, 'component_description', item) or ''
        words = split_description(description)
        if words:
            non_empty += 1
        terms.update(word for word in words if word not in blocked)

    if not non_empty:
        raise ValueError('Every component description is empty, cannot build a dictionary')

    logger.info('Built a dictionary of {} distinct terms from {} descriptions'.format(len(terms), non_empty))
    return TermDictionary(terms=terms)


def count_words(narratives):
    """ Whole-word counts over a shard of narratives. Shard counts add up """
    counts = Counter()
    for narrative in narratives:
        counts.update(WORD.findall(narrative))
    return counts


def count_term_frequencies(dictionary, corpus):
    counts = count_words(corpus)
    frequencies = {term: counts.get(term, 0) for term in dictionary.terms}
    return TermDictionary(terms=dictionary.terms, frequencies=frequencies)


def top(dictionary, n=None):
    ranked = sorted(dictionary.frequencies.items(), key=lambda item: (-item[1], item[0]))
    return ranked if n is None else ranked[:n]


def write_dictionary(path, dictionary, config_hash):
    store.ensure_parent(path)
    with open(path, 'w', encoding='utf-8', newline='') as handle:
        handle.write('# config_hash={}\n'.format(config_hash))
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(['term', 'frequency'])
        for term, frequency in top(dictionary):
            writer.writerow([term, frequency])
    return path


def read_dictionary(path, expected_hash=None):
    store.require(path, 'dictionary')

    with open(path, encoding='utf-8', newline='') as handle:
        lines = handle.read().splitlines()

    config_hash = None
    if lines and lines[0].startswith('# config_hash='):
        config_hash = lines[0].split('=', 1)[1].strip()
        lines = lines[1:]
    store.check_hash({'config_hash': config_hash}, expected_hash, path)

    frequencies = {}
    for row in csv.DictReader(lines):
        frequencies[row['term']] = int(row['frequency'])
    return TermDictionary(terms=frequencies.keys(), frequencies=frequencies)


def format_top_table(rows, fmt='md'):
    if fmt == 'csv':
        lines = ['rank,term,frequency'] + ['{},{},{}'.format(i, term, freq) for i, (term, freq) in enumerate(rows, 1)]
        return '\n'.join(lines) + '\n'

    lines = ['| # | term | frequency |', '|---|---|---|']
    lines += ['| {} | {} | {} |'.format(i, term, freq) for i, (term, freq) in enumerate(rows, 1)]
    return '\n'.join(lines) + '\n'
