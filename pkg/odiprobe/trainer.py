#!/usr/bin/env python3

import logging
import os
import random
import statistics

import attr

from odiprobe import store
from odiprobe.evaluator import DEFAULT_KS, TIE_RULE, PrecisionResult, evaluate, format_cell


logger = logging.getLogger('odiprobe.trainer')

MANIFEST = 'manifest.json'
GRID = 'grid.json'
CHECKPOINTS = 'checkpoints'
AUDIT = 'audit'
PLACEHOLDER = '—'

CROSS_MODEL_NOTE = 'Each model ranks against its own full token vocabulary and is scored on the probes that are single tokens for it.'


def checkpoint_tag(point):
    return 'ckpt-{}'.format(point)


def column_label(point):
    if point == 0:
        return 'out-of-the-box'
    if point % 1000 == 0:
        return '{}k'.format(point // 1000)
    return str(point)


@attr.s(frozen=True)
class CheckpointPlan:
    interval_examples = attr.ib(default=100000)
    total_examples = attr.ib(default=400000)

    @property
    def eval_points(self):
        return tuple(range(0, self.total_examples + 1, self.interval_examples))

    def serialize(self):
        return {'total': self.total_examples, 'interval': self.interval_examples}


def make_schedule(total, interval):
    if total <= 0 or interval <= 0:
        raise ValueError('Plan total and interval must be positive, got {}:{}'.format(total, interval))
    if total % interval:
        raise ValueError('Plan interval {} does not divide total {}'.format(interval, total))
    return CheckpointPlan(interval_examples=interval, total_examples=total)


def parse_plan(text):
    """ 'total:interval', e.g. 400000:100000 """
    try:
        total, interval = (int(part) for part in text.split(':'))
    except ValueError:
        raise ValueError('Plan must look like TOTAL:INTERVAL, got {!r}'.format(text))
    return make_schedule(total, interval)


@attr.s
class RunManifest:
    backend_id = attr.ib()
    config_hash = attr.ib()
    seed = attr.ib()
    plan = attr.ib()
    probe_source_hash = attr.ib()
    ks = attr.ib(converter=lambda ks: sorted(int(k) for k in ks))
    retention = attr.ib(default=None)
    seen_examples = attr.ib(default=0)
    completed = attr.ib(factory=list)
    segment_losses = attr.ib(factory=dict)
    status = attr.ib(default='running')
    error = attr.ib(default=None)

    @property
    def completed_points(self):
        return [entry['point'] for entry in self.completed]

    def serialize(self):
        data = attr.asdict(self)
        data['plan'] = self.plan.serialize()
        return data

    @classmethod
    def from_data(cls, data):
        data = dict(data)
        data['plan'] = make_schedule(data['plan']['total'], data['plan']['interval'])
        return cls(**data)

    def save(self, run_dir):
        store.write_json(os.path.join(run_dir, MANIFEST), self.serialize())

    @classmethod
    def load(cls, run_dir):
        return cls.from_data(store.read_json(os.path.join(run_dir, MANIFEST), 'manifest'))


@attr.s
class EvaluationReport:
    grid = attr.ib(factory=dict)
    eval_points = attr.ib(factory=list)
    backend_ids = attr.ib(factory=list)
    run_config_hash = attr.ib(default='')
    probe_retention = attr.ib(factory=dict)
    probe_hashes = attr.ib(factory=dict)

    def cell(self, backend_id, point):
        return self.grid.get((backend_id, point))

    @property
    def ks(self):
        found = {result.ks for result in self.grid.values()}
        if len(found) > 1:
            raise ValueError('Report cells carry different k sets: {}'.format(sorted(found)))
        return found.pop() if found else tuple(DEFAULT_KS)


def shuffled(texts, seed):
    order = list(texts)
    random.Random(seed).shuffle(order)
    return order


def train_epoch(backend, texts, batch_size, masking_config=None):
    """ One sequential pass over texts, returns the mean batch loss """
    losses = []
    for start in range(0, len(texts), batch_size):
        losses.append(backend.train_mlm_step(texts[start:start + batch_size], masking_config))
    return statistics.fmean(losses)


def _start_or_resume(backend, run_dir, manifest, resume):
    path = os.path.join(run_dir, MANIFEST)
    if not (resume and os.path.exists(path)):
        return manifest, store.ResultsStore(config_hash=manifest.config_hash)

    previous = RunManifest.load(run_dir)
    for field in ('backend_id', 'config_hash', 'probe_source_hash', 'seed', 'plan', 'ks'):
        if getattr(previous, field) != getattr(manifest, field):
            raise store.ConfigMismatch('Cannot resume {}: {} was {!r}, now {!r}'.format(run_dir, field, getattr(previous, field), getattr(manifest, field)))

    grid = store.ResultsStore.load(os.path.join(run_dir, GRID), 'grid', expected_hash=previous.config_hash)
    if previous.completed:
        last = previous.completed[-1]
        backend.load_checkpoint(os.path.join(run_dir, CHECKPOINTS, last['tag']))
        logger.info('Resuming {} from {} ({} examples seen)'.format(run_dir, last['tag'], backend.seen_examples))

    previous.status = 'running'
    previous.error = None
    return previous, grid


def run(backend, train_set, plan, probes, run_dir, ks=DEFAULT_KS, batch_size=32, masking_config=None,
        seed=0, cycle=False, config_hash='', resume=True, eval_batch_size=1, retention=None, probe_source_hash=None):
    """ Continual MLM training of backend on train_set, evaluating probes
    before any update and whenever the seen example count reaches a point
    of plan. Evaluation points are hit exactly, the batch crossing a point is
    shortened. Progress is persisted after each point so an interrupted run
    can resume """
    if not train_set:
        raise ValueError('Cannot train on an empty train set')
    if not cycle and len(train_set) < plan.total_examples:
        raise ValueError('The train set has {} examples, the plan needs {} (enable cycling to repeat examples)'.format(len(train_set), plan.total_examples))
    if batch_size < 1:
        raise ValueError('Batch size must be positive, got {}'.format(batch_size))

    os.makedirs(run_dir, exist_ok=True)
    order = shuffled(train_set, seed)
    manifest = RunManifest(
        backend_id=backend.backend_id,
        config_hash=config_hash,
        seed=seed,
        plan=plan,
        probe_source_hash=probe_source_hash or probes.content_hash,
        ks=ks,
        retention=retention,
    )
    manifest, grid = _start_or_resume(backend, run_dir, manifest, resume)
    checkpoint_root = os.path.join(run_dir, CHECKPOINTS)

    try:
        for point in plan.eval_points:
            if point in manifest.completed_points:
                continue

            losses = []
            while backend.seen_examples < point:
                seen = backend.seen_examples
                take = min(batch_size, point - seen)
                batch = [order[(seen + i) % len(order)] for i in range(take)]
                losses.append(backend.train_mlm_step(batch, masking_config))

            if backend.seen_examples != point:
                raise RuntimeError('{} has seen {} examples at evaluation point {}'.format(backend.backend_id, backend.seen_examples, point))

            tag = checkpoint_tag(point)
            backend.save_checkpoint(tag, checkpoint_root)
            result = evaluate(
                backend, probes, ks=ks, checkpoint_tag=tag, batch_size=eval_batch_size,
                audit_path=os.path.join(run_dir, AUDIT, '{}.jsonl'.format(tag)), config_hash=config_hash,
            )

            grid.commit_result(result)
            grid.save(os.path.join(run_dir, GRID))

            if losses:
                manifest.segment_losses[tag] = statistics.fmean(losses)
                logger.info('{}: mean training loss {:.4f} up to {} examples'.format(backend.backend_id, manifest.segment_losses[tag], point))
            manifest.completed.append({'point': point, 'tag': tag})
            manifest.seen_examples = backend.seen_examples
            manifest.save(run_dir)
    except Exception as e:
        manifest.status = 'failed'
        manifest.error = '{}: {}'.format(e.__class__.__name__, e)
        manifest.save(run_dir)
        logger.error('Run {} failed after {} examples, resume to continue'.format(run_dir, manifest.seen_examples))
        raise

    manifest.status = 'complete'
    manifest.save(run_dir)
    return load_run(run_dir)


def load_run(run_dir):
    manifest = RunManifest.load(run_dir)
    grid = store.ResultsStore.load(os.path.join(run_dir, GRID), 'grid')

    cells = {}
    for point in manifest.plan.eval_points:
        data = grid.cell(manifest.backend_id, checkpoint_tag(point))
        if data is not None:
            cells[(manifest.backend_id, point)] = PrecisionResult.from_data(data)

    return EvaluationReport(
        grid=cells,
        eval_points=list(manifest.plan.eval_points),
        backend_ids=[manifest.backend_id],
        run_config_hash=manifest.config_hash,
        probe_retention={manifest.backend_id: manifest.retention},
        probe_hashes={manifest.backend_id: manifest.probe_source_hash},
    )


def merge_reports(reports, force=False):
    hashes = {h for report in reports for h in report.probe_hashes.values()}
    if len(hashes) > 1 and not force:
        raise store.ConfigMismatch('Runs were evaluated on different probe sets ({}), pass --force to merge anyway'.format(', '.join(sorted(hashes))))

    merged = EvaluationReport()
    for report in reports:
        merged.grid.update(report.grid)
        merged.probe_retention.update(report.probe_retention)
        merged.probe_hashes.update(report.probe_hashes)
        merged.backend_ids += [b for b in report.backend_ids if b not in merged.backend_ids]
        merged.eval_points = sorted(set(merged.eval_points) | set(report.eval_points))

    merged.run_config_hash = ','.join(sorted({r.run_config_hash for r in reports if r.run_config_hash}))
    return merged


def best_per_column(report):
    best = {}
    for point in report.eval_points:
        cells = [(b, report.cell(b, point)) for b in report.backend_ids if report.cell(b, point) is not None]
        if not cells:
            continue
        top = max(cell.p_at[min(cell.ks)] for _, cell in cells)
        best[point] = {b for b, cell in cells if cell.p_at[min(cell.ks)] == top}
    return best


def render_report(report, fmt='md'):
    best = best_per_column(report)

    if fmt == 'csv':
        ks = report.ks
        lines = [','.join(['backend_id', 'checkpoint', 'examples', 'n_probes'] + ['p_at_{}'.format(k) for k in ks] + ['best_p_at_{}'.format(ks[0])])]
        for backend_id in report.backend_ids:
            for point in report.eval_points:
                cell = report.cell(backend_id, point)
                if cell is None:
                    values = [''] * (len(ks) + 1)
                else:
                    values = ['{:.1f}'.format(100 * cell.p_at[k]) for k in ks] + [str(int(backend_id in best.get(point, ())))]
                lines.append(','.join([backend_id, checkpoint_tag(point), str(point), str(cell.n_probes if cell else '')] + values))
        return '\n'.join(lines) + '\n'

    header = ['model'] + [column_label(point) for point in report.eval_points]
    lines = ['| ' + ' | '.join(header) + ' |', '|' + '---|' * len(header)]
    for backend_id in report.backend_ids:
        row = [backend_id]
        for point in report.eval_points:
            cell = report.cell(backend_id, point)
            if cell is None:
                row.append(PLACEHOLDER)
                continue
            text = format_cell(cell)
            row.append('**{}**'.format(text) if backend_id in best.get(point, ()) else text)
        lines.append('| ' + ' | '.join(row) + ' |')

    lines.append('')
    lines.append('Cells: P@1 (P@5/ P@10) in percent, best P@1 per column in bold. Ties ranked {}.'.format(TIE_RULE))
    lines.append(CROSS_MODEL_NOTE)
    retention = ['{} {:.1%}'.format(b, r) for b, r in sorted(report.probe_retention.items()) if r is not None]
    if retention:
        lines.append('Probe retention: {}.'.format(', '.join(retention)))
    return '\n'.join(lines) + '\n'


def directional_checks(report):
    """ Checks the trends expected from continual pre-training: P@k does not
    drop from out-of-the-box to the first interval, and larger models beat
    the base model out-of-the-box. Returns (description, passed) pairs """
    checks = []
    points = sorted(report.eval_points)

    if len(points) > 1:
        for backend_id in report.backend_ids:
            before, after = report.cell(backend_id, points[0]), report.cell(backend_id, points[1])
            if before is None or after is None:
                continue
            passed = all(after.p_at[k] >= before.p_at[k] for k in before.ks)
            checks.append(('{} P@k non-decreasing {} -> {}'.format(backend_id, column_label(points[0]), column_label(points[1])), passed))

    base = [b for b in report.backend_ids if 'base' in b and report.cell(b, 0) is not None]
    large = [b for b in report.backend_ids if 'large' in b and report.cell(b, 0) is not None]
    for base_id in base:
        for large_id in large:
            passed = report.cell(large_id, 0).p_at[1] >= report.cell(base_id, 0).p_at[1]
            checks.append(('{} >= {} out-of-the-box P@1'.format(large_id, base_id), passed))

    for description, passed in checks:
        (logger.info if passed else logger.warning)('{}: {}'.format(description, 'ok' if passed else 'violated'))
    return checks
