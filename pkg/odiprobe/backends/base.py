#!/usr/bin/env python3

import attr
import numpy as np


CLS_MARKER = '[CLS]'
SEP_MARKER = '[SEP]'
MASK_MARKER = '[MASK]'

TOKENIZER_FAMILIES = ('word-piece', 'sentence-piece', 'byte-pair', 'whitespace')


class SequenceTooLong(ValueError):
    pass


def plain_text(rendered):
    """ Strips the portable [CLS]/[SEP] markers of a rendered probe """
    text = rendered.strip()
    if text.startswith(CLS_MARKER):
        text = text[len(CLS_MARKER):]
    if text.endswith(SEP_MARKER):
        text = text[:-len(SEP_MARKER)]
    return text.strip()


def check_single_mask(rendered):
    count = rendered.count(MASK_MARKER)
    if count != 1:
        raise ValueError('Probe must contain exactly one {} marker, found {}: {!r}'.format(MASK_MARKER, count, rendered))
    return rendered


@attr.s(frozen=True)
class BackendDescriptor:
    backend_id = attr.ib()
    tokenizer_family = attr.ib(validator=attr.validators.in_(TOKENIZER_FAMILIES))
    candidate_vocabulary = attr.ib(converter=tuple, repr=False)
    max_sequence_length = attr.ib()
    parameter_count = attr.ib(default=0)

    @candidate_vocabulary.validator
    def _check_vocabulary(self, attribute, value):
        if not value:
            raise ValueError('Candidate vocabulary of {} is empty'.format(self.backend_id))

    def serialize(self):
        data = attr.asdict(self, filter=attr.filters.exclude(attr.fields(BackendDescriptor).candidate_vocabulary))
        data['vocabulary_size'] = len(self.candidate_vocabulary)
        return data


@attr.s(frozen=True, eq=False)
class MaskScoreVector:
    """ Raw scores at the mask position, one per candidate token, aligned with
    the backend's candidate vocabulary """
    candidates = attr.ib(converter=tuple, repr=False)
    values = attr.ib(converter=lambda v: np.asarray(v, dtype=np.float64), repr=False)
    probe_id = attr.ib(default=None)
    index = attr.ib(default=None, repr=False)

    def __attrs_post_init__(self):
        if len(self.candidates) != len(self.values):
            raise ValueError('Got {} scores for {} candidates'.format(len(self.values), len(self.candidates)))
        if not np.all(np.isfinite(self.values)):
            raise ValueError('Scores for probe {} are not all finite'.format(self.probe_id))
        if self.index is None:
            object.__setattr__(self, 'index', {token: i for i, token in enumerate(self.candidates)})

    def __len__(self):
        return len(self.candidates)

    def __contains__(self, token):
        return token in self.index

    def score(self, token):
        return float(self.values[self.index[token]])

    @property
    def scores(self):
        return dict(zip(self.candidates, self.values.tolist()))

    def top(self, k):
        # stable sort keeps vocabulary order among equal scores
        order = np.argsort(-self.values, kind='stable')[:k]
        return [self.candidates[i] for i in order]


class MaskedLMBackend:
    """ Contract every masked language model adapter fulfils. Instances are
    single writer; read_safe backends may serve concurrent inference """

    read_safe = False
    tokenizer_family = 'whitespace'
    unknown_token = None

    def __init__(self, backend_id):
        self.backend_id = backend_id
        self.seen_examples = 0
        self._index = None

    @classmethod
    def create(cls, backend_id, options=None, texts=None, seed=None):
        raise NotImplementedError

    @property
    def candidates(self):
        raise NotImplementedError

    @property
    def candidate_index(self):
        if self._index is None:
            self._index = {token: i for i, token in enumerate(self.candidates)}
        return self._index

    @property
    def max_sequence_length(self):
        raise NotImplementedError

    @property
    def parameter_count(self):
        return 0

    @property
    def descriptor(self):
        return BackendDescriptor(
            backend_id=self.backend_id,
            tokenizer_family=self.tokenizer_family,
            candidate_vocabulary=self.candidates,
            max_sequence_length=self.max_sequence_length,
            parameter_count=self.parameter_count,
        )

    def tokenize(self, text):
        raise NotImplementedError

    def word_tokens(self, words, index):
        """ Tokens covering words[index] when the whole sentence is tokenized """
        raise NotImplementedError

    def truth_token(self, probe):
        """ The single token the ground truth encodes to, None when it takes
        several tokens or only the unknown token """
        tokens = self.word_tokens(probe.sentence, probe.mask_word_index)
        if len(tokens) != 1 or tokens[0] == self.unknown_token:
            return None
        return tokens[0]

    def probe_length(self, rendered):
        raise NotImplementedError

    def check_length(self, rendered):
        length = self.probe_length(rendered)
        if length > self.max_sequence_length:
            raise SequenceTooLong('Probe is {} tokens long, {} accepts at most {}'.format(length, self.backend_id, self.max_sequence_length))
        return length

    def predict_masked(self, rendered, probe_id=None):
        raise NotImplementedError

    def predict_batch(self, items):
        """ items are (rendered, probe_id) pairs """
        return [self.predict_masked(rendered, probe_id) for rendered, probe_id in items]

    def train_mlm_step(self, batch, masking_config=None):
        raise NotImplementedError

    def save_checkpoint(self, tag, root):
        raise NotImplementedError

    def load_checkpoint(self, handle):
        raise NotImplementedError

    def vector(self, values, probe_id):
        return MaskScoreVector(candidates=self.candidates, values=values, probe_id=probe_id, index=self.candidate_index)
