#!/usr/bin/env python3

import json
import logging
import os

import yaml

from odiprobe.backends import register
from odiprobe.backends.base import MaskedLMBackend, MASK_MARKER, check_single_mask, plain_text
from odiprobe import store


logger = logging.getLogger('odiprobe.backends.mock')

DEFAULT_TABLE = '_default'


@register('mock')
class MockBackend(MaskedLMBackend):
    """ Table driven backend. Scores come verbatim from a mapping
    probe_id -> {token: score}; a '_default' table serves any other probe.
    Tokens absent from a table score `floor`. Words listed in `splits` tokenize
    into several pieces, every other word is one token. A word split into
    just `unknown_token` is out of vocabulary """

    read_safe = True

    def __init__(self, tables, vocabulary=None, splits=None, floor=0.0, max_sequence_length=512, backend_id='mock', unknown_token=None):
        super().__init__(backend_id)
        self.unknown_token = unknown_token
        self.tables = {str(key): dict(table) for key, table in tables.items()}
        self.splits = {word: list(pieces) for word, pieces in (splits or {}).items()}
        self.floor = float(floor)
        self._max_sequence_length = max_sequence_length

        known = set()
        for table in self.tables.values():
            known.update(table)

        if vocabulary is None:
            vocabulary = sorted(known)
        else:
            missing = known.difference(vocabulary)
            if missing:
                raise ValueError('Score tables use tokens outside the vocabulary: {}'.format(sorted(missing)))
        if not vocabulary:
            raise ValueError('Mock backend needs a non-empty vocabulary')
        self._candidates = tuple(vocabulary)

    @classmethod
    def from_file(cls, path, backend_id='mock'):
        store.require(path, 'mock score tables')
        with open(path, encoding='utf-8') as handle:
            data = yaml.safe_load(handle) or {}

        if 'tables' not in data:
            data = {'tables': data}
        return cls(
            tables=data['tables'],
            vocabulary=data.get('vocabulary'),
            splits=data.get('splits'),
            floor=data.get('floor', 0.0),
            max_sequence_length=data.get('max_sequence_length', 512),
            backend_id=backend_id,
            unknown_token=data.get('unknown_token'),
        )

    @classmethod
    def create(cls, backend_id, options=None, texts=None, seed=None):
        options = options or {}
        if not options.get('tables'):
            raise ValueError('The mock backend needs backend_options.mock.tables pointing to a score table file')
        return cls.from_file(options['tables'], backend_id=backend_id)

    @property
    def candidates(self):
        return self._candidates

    @property
    def max_sequence_length(self):
        return self._max_sequence_length

    def pieces(self, word):
        return self.splits.get(word, [word])

    def tokenize(self, text):
        return [piece for word in text.split() for piece in self.pieces(word)]

    def word_tokens(self, words, index):
        return list(self.pieces(words[index]))

    def probe_length(self, rendered):
        return len(self.tokenize(plain_text(rendered))) + 2

    def table_for(self, rendered, probe_id):
        for key in (probe_id, rendered, DEFAULT_TABLE):
            if key is not None and key in self.tables:
                return self.tables[key]
        raise KeyError('No score table for probe {!r}'.format(probe_id or rendered))

    def predict_masked(self, rendered, probe_id=None):
        check_single_mask(rendered)
        self.check_length(rendered)
        table = self.table_for(rendered, probe_id)
        return self.vector([table.get(token, self.floor) for token in self._candidates], probe_id)

    def train_mlm_step(self, batch, masking_config=None):
        if not batch:
            raise ValueError('Cannot train on an empty batch')
        self.seen_examples += len(batch)
        return 0.0

    def save_checkpoint(self, tag, root):
        path = os.path.join(root, tag)
        os.makedirs(path, exist_ok=True)
        store.write_json(os.path.join(path, 'backend_state.json'), {
            'backend_id': self.backend_id,
            'seen_examples': self.seen_examples,
            'tables': self.tables,
            'vocabulary': list(self._candidates),
        })
        return path

    def load_checkpoint(self, handle):
        state_path = os.path.join(handle, 'backend_state.json')
        if not os.path.exists(state_path):
            raise FileNotFoundError('Checkpoint not found: {}'.format(handle))
        try:
            with open(state_path, encoding='utf-8') as source:
                state = json.load(source)
        except ValueError as e:
            raise ValueError('Corrupt checkpoint {}: {}'.format(handle, e))

        self.tables = state['tables']
        self._candidates = tuple(state['vocabulary'])
        self._index = None
        self.seen_examples = state['seen_examples']
        return self
