#!/usr/bin/env python3

import logging

import attr
import numpy as np

from odiprobe import store
from odiprobe.backends.base import SequenceTooLong


logger = logging.getLogger('odiprobe.evaluator')

DEFAULT_KS = (1, 5, 10)
TIE_RULE = 'optimistic'


@attr.s(frozen=True)
class RankResult:
    probe_id = attr.ib()
    rank = attr.ib()
    top_k_tokens = attr.ib(converter=tuple, default=())
    ground_truth = attr.ib(default=None)

    @rank.validator
    def _positive(self, attribute, value):
        if value < 1:
            raise ValueError('Rank must be positive, got {}'.format(value))

    def serialize(self):
        return {'probe_id': self.probe_id, 'rank': self.rank, 'ground_truth': self.ground_truth, 'top': list(self.top_k_tokens)}


@attr.s
class ExclusionCounters:
    not_single_token = attr.ib(default=0)
    truth_not_in_candidates = attr.ib(default=0)
    too_long = attr.ib(default=0)

    @property
    def total(self):
        return self.not_single_token + self.truth_not_in_candidates + self.too_long

    def serialize(self):
        return attr.asdict(self)


@attr.s(frozen=True)
class PrecisionResult:
    """ Hit counts per k over n_probes scored probes. Fractions are derived
    with a single division so the result does not depend on probe order """
    hits = attr.ib(converter=lambda h: {int(k): int(v) for k, v in h.items()})
    n_probes = attr.ib()
    backend_id = attr.ib()
    checkpoint_tag = attr.ib()
    excluded = attr.ib(factory=dict)
    tie_rule = attr.ib(default=TIE_RULE)

    @n_probes.validator
    def _at_least_one(self, attribute, value):
        if value < 1:
            raise ValueError('A precision result needs at least one scored probe')

    @property
    def ks(self):
        return tuple(sorted(self.hits))

    @property
    def p_at(self):
        return {k: self.hits[k] / self.n_probes for k in self.ks}

    def serialize(self):
        return {
            'backend_id': self.backend_id,
            'checkpoint_tag': self.checkpoint_tag,
            'n_probes': self.n_probes,
            'hits': {str(k): v for k, v in sorted(self.hits.items())},
            'p_at': {str(k): v for k, v in sorted(self.p_at.items())},
            'excluded': dict(self.excluded),
            'tie_rule': self.tie_rule,
        }

    @classmethod
    def from_data(cls, data):
        return cls(
            hits=data['hits'],
            n_probes=data['n_probes'],
            backend_id=data['backend_id'],
            checkpoint_tag=data['checkpoint_tag'],
            excluded=data.get('excluded', {}),
            tie_rule=data.get('tie_rule', TIE_RULE),
        )


def rank_of_truth(scores, truth):
    """ 1 + number of other candidates scored strictly above the truth, so
    ties never push the truth down """
    if truth not in scores:
        raise KeyError('Ground truth {!r} is not a candidate'.format(truth))
    target = scores.score(truth)
    return 1 + int(np.count_nonzero(scores.values > target))


def precision_at_k(ranks, k):
    if not ranks:
        raise ValueError('Cannot compute precision over no ranks')
    if k < 1:
        raise ValueError('k must be positive, got {}'.format(k))
    return sum(1 for rank in ranks if rank <= k) / len(ranks)


def rank_probes(backend, probes, batch_size=1, top=10, counters=None):
    """ Ranks every scorable probe. Returns RankResults in probe order and
    the exclusion counters """
    counters = counters if counters is not None else ExclusionCounters()
    scorable = []

    for probe in probes:
        truth = backend.truth_token(probe)
        if truth is None:
            counters.not_single_token += 1
            continue
        if truth not in backend.candidate_index:
            counters.truth_not_in_candidates += 1
            continue
        try:
            backend.check_length(probe.rendered)
        except SequenceTooLong:
            counters.too_long += 1
            continue
        scorable.append((probe, truth))

    results = []
    batch_size = max(int(batch_size), 1)
    for start in range(0, len(scorable), batch_size):
        chunk = scorable[start:start + batch_size]
        vectors = backend.predict_batch([(probe.rendered, probe.probe_id) for probe, _ in chunk])
        for (probe, truth), vector in zip(chunk, vectors):
            results.append(RankResult(probe_id=probe.probe_id, rank=rank_of_truth(vector, truth), top_k_tokens=vector.top(top), ground_truth=probe.ground_truth))

    return results, counters


def aggregate(ranks, ks, backend_id, checkpoint_tag, excluded=None):
    if not ranks:
        raise ValueError('Every probe was excluded for {} at {}'.format(backend_id, checkpoint_tag))
    hits = {int(k): sum(1 for rank in ranks if rank <= k) for k in ks}
    return PrecisionResult(hits=hits, n_probes=len(ranks), backend_id=backend_id, checkpoint_tag=checkpoint_tag, excluded=excluded or {})


def evaluate(backend, probes, ks=DEFAULT_KS, checkpoint_tag='ckpt-0', batch_size=1, audit_path=None, audit_top=10, config_hash=''):
    results, counters = rank_probes(backend, probes, batch_size=batch_size, top=max(audit_top, 1))

    if counters.total:
        logger.warning('{} at {}: excluded {} probes {}'.format(backend.backend_id, checkpoint_tag, counters.total, counters.serialize()))

    result = aggregate([r.rank for r in results], ks, backend.backend_id, checkpoint_tag, counters.serialize())
    if audit_path is not None:
        write_audit_log(audit_path, results, config_hash, backend_id=backend.backend_id, checkpoint_tag=checkpoint_tag)

    logger.info('{} at {}: {}'.format(backend.backend_id, checkpoint_tag, format_cell(result)))
    return result


def write_audit_log(path, results, config_hash, **extra):
    return store.write_jsonl(path, 'audit', config_hash, [r.serialize() for r in results], **extra)


def format_cell(result):
    """ 'P@1 (P@5/ P@10)' in percent, or the three smallest ks when those
    are not configured """
    p_at = result.p_at
    ks = list(DEFAULT_KS) if set(DEFAULT_KS) <= set(p_at) else list(result.ks)[:3]
    values = ['{:.1f}'.format(100 * p_at[k]) for k in ks]
    if len(values) == 1:
        return values[0]
    return '{} ({})'.format(values[0], '/ '.join(values[1:]))
