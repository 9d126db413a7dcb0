#!/usr/bin/env python3

import argparse
import logging
import os
import sys

import attr

import odiprobe
from odiprobe import backends, config, corpus, evaluator, probes, store, terms, trainer


logger = logging.getLogger('odiprobe.cli')


def artifact(cfg, *parts):
    return os.path.join(cfg.output.root, *parts)


def expected(cfg, args, stage):
    """ Stage hash an upstream artifact must carry, None when --force """
    if getattr(args, 'force', False):
        return None
    return config.stage_hash(cfg, stage)


def safe_name(backend_id):
    return backend_id.strip('/').replace('/', '__')


def parse_ks(text):
    return sorted({int(k) for k in text.split(',')})


def make_backend(cfg, backend_id, texts=None, tables=None):
    options = {key: dict(value or {}) for key, value in cfg.backend_options.items()}
    if tables:
        options.setdefault('mock', {})['tables'] = tables
    return backends.create_backend(backend_id, options, texts=texts, seed=cfg.training.seed)


def toy_texts(cfg, args, probe_set):
    """ Texts a backend that builds its vocabulary on the fly needs to see """
    path = artifact(cfg, 'corpus.jsonl')
    texts = []
    if os.path.exists(path):
        texts = [record.narrative for record in corpus.read_corpus(path, 'train', expected(cfg, args, 'ingest'))]
    return texts + [' '.join(probe.sentence) for probe in probe_set]


def cmd_ingest(cfg, args):
    source = config.require_path(args.input or cfg.input.odi_file, 'ODI complaints file')

    report = corpus.ParseReport()
    records = corpus.parse_odi_flatfile(source, dict(cfg.input.schema), delimiter=cfg.input.delimiter, header=cfg.input.header, report=report)
    records = corpus.normalize_records(records)
    records = corpus.filter_consumer_complaints(records, cfg.filter.keep_sources)
    split = corpus.split_corpus(records, cfg.split.ratio, cfg.split.seed)

    stage = config.stage_hash(cfg, 'ingest')
    corpus.write_corpus(artifact(cfg, 'corpus.jsonl'), split, stage)
    corpus.write_split_manifest(artifact(cfg, 'split_manifest.json'), split, stage)
    store.write_json(artifact(cfg, 'parse_report.json'), dict(attr.asdict(report), config_hash=stage))

    stats = corpus.corpus_stats([record.narrative.split() for record in split.train], 'raw data')
    for fmt in ('md', 'csv'):
        with open(artifact(cfg, 'stats.{}'.format(fmt)), 'w', encoding='utf-8') as handle:
            handle.write(corpus.format_stats_table([stats], fmt, config_hash=stage))

    print(corpus.format_stats_table([stats], 'md'), end='')
    return 0


def cmd_stats(cfg, args):
    train = corpus.read_corpus(artifact(cfg, 'corpus.jsonl'), 'train', expected(cfg, args, 'ingest'))
    texts = [record.narrative for record in train]

    rows = [corpus.corpus_stats([text.split() for text in texts], 'raw data')]
    for backend_id in args.backend or []:
        backend = make_backend(cfg, backend_id, texts=texts)
        rows.append(corpus.corpus_stats([backend.tokenize(text) for text in texts], 'tokenized ({})'.format(backend_id)))

    print(corpus.format_stats_table(rows, args.format), end='')
    return 0


def cmd_dict_build(cfg, args):
    path = artifact(cfg, 'corpus.jsonl')
    train = corpus.read_corpus(path, 'train', expected(cfg, args, 'ingest'))
    heldout = corpus.read_corpus(path, 'heldout')

    dictionary = terms.build_dictionary(train + heldout, cfg.dictionary.blocklist)
    dictionary = terms.count_term_frequencies(dictionary, [record.narrative for record in train])
    terms.write_dictionary(artifact(cfg, 'dictionary.csv'), dictionary, config.stage_hash(cfg, 'dict'))
    print(terms.format_top_table(terms.top(dictionary, 10)), end='')
    return 0


def cmd_dict_top(cfg, args):
    dictionary = terms.read_dictionary(args.dict or artifact(cfg, 'dictionary.csv'), expected(cfg, args, 'dict'))
    print(terms.format_top_table(terms.top(dictionary, args.n), args.format), end='')
    return 0


def cmd_probes_generate(cfg, args):
    dictionary = terms.read_dictionary(args.dict or artifact(cfg, 'dictionary.csv'), expected(cfg, args, 'dict'))
    heldout = corpus.read_corpus(args.heldout or artifact(cfg, 'corpus.jsonl'), 'heldout', expected(cfg, args, 'ingest'))

    stage = config.stage_hash(cfg, 'probes')
    probe_set = probes.generate_probes(heldout, dictionary, deduplicate=cfg.probes.deduplicate, config_hash=stage)
    probes.write_probes(args.out or artifact(cfg, 'probes.jsonl'), probe_set, stage)
    print('{} probes'.format(len(probe_set)))
    return 0


def load_filtered(cfg, args, backend_id, probe_path):
    probe_set = probes.read_probes(probe_path, expected(cfg, args, 'probes'))
    texts = toy_texts(cfg, args, probe_set) if backends.prefix_for(backend_id) == 'toy-mlm' else None
    backend = make_backend(cfg, backend_id, texts=texts, tables=getattr(args, 'tables', None))
    filtered, report = probes.filter_single_token(probe_set, backend)
    return backend, probe_set, filtered, report


def cmd_probes_filter(cfg, args):
    probe_path = args.probes or artifact(cfg, 'probes.jsonl')
    backend, probe_set, filtered, report = load_filtered(cfg, args, args.model, probe_path)

    out = args.out or artifact(cfg, 'probes.{}.jsonl'.format(safe_name(args.model)))
    probes.write_probes(out, filtered, probe_set.generator_config_hash, backend_id=args.model, filter_report=report.serialize())
    print('{}: kept {} of {} probes ({:.1%})'.format(args.model, report.kept, report.total, report.retention))
    return 0


def cmd_eval(cfg, args):
    for backend_id in ([args.backend] if args.backend else cfg.backends):
        eval_one(cfg, args, backend_id)
    return 0


def eval_one(cfg, args, backend_id):
    probe_path = args.probes or artifact(cfg, 'probes.jsonl')
    backend, probe_set, filtered, report = load_filtered(cfg, args, backend_id, probe_path)

    tag = 'ckpt-0'
    if args.checkpoint:
        backend.load_checkpoint(args.checkpoint)
        tag = os.path.basename(os.path.normpath(args.checkpoint))

    ks = parse_ks(args.ks) if args.ks else cfg.evaluation.ks
    out_dir = artifact(cfg, 'eval', safe_name(backend_id), tag)
    result = evaluator.evaluate(
        backend, filtered, ks=ks, checkpoint_tag=tag, batch_size=cfg.evaluation.batch_size,
        audit_path=os.path.join(out_dir, 'audit.jsonl'), audit_top=cfg.evaluation.audit_top,
        config_hash=probe_set.generator_config_hash,
    )

    data = result.serialize()
    data.update(config_hash=probe_set.generator_config_hash, probe_source_hash=probe_set.content_hash, retention=report.retention)
    store.write_json(os.path.join(out_dir, 'result.json'), data)

    results = store.ResultsStore.load(artifact(cfg, 'results.json'))
    results.config_hash = probe_set.generator_config_hash
    results.commit_result(result)
    results.save(artifact(cfg, 'results.json'))

    print('{} {}: {}'.format(backend_id, tag, evaluator.format_cell(result)))
    return result


def cmd_train(cfg, args):
    plan = trainer.parse_plan(args.plan) if args.plan else trainer.make_schedule(cfg.plan.total, cfg.plan.interval)
    # --plan takes part in the run hash and the config snapshot
    cfg.plan.total, cfg.plan.interval = plan.total_examples, plan.interval_examples
    probe_path = args.probes or artifact(cfg, 'probes.jsonl')

    train = corpus.read_corpus(artifact(cfg, 'corpus.jsonl'), 'train', expected(cfg, args, 'ingest'))
    backend, probe_set, filtered, report = load_filtered(cfg, args, args.backend, probe_path)

    run_dir = args.out or artifact(cfg, 'runs', safe_name(args.backend))
    os.makedirs(run_dir, exist_ok=True)
    if args.no_resume or not os.path.exists(os.path.join(run_dir, trainer.MANIFEST)):
        with open(os.path.join(run_dir, 'config.yaml'), 'w', encoding='utf-8') as handle:
            handle.write(config.to_yaml(cfg))

    result = trainer.run(
        backend, [record.narrative for record in train], plan, filtered, run_dir,
        ks=cfg.evaluation.ks, batch_size=cfg.training.batch_size,
        masking_config={'mlm_probability': cfg.training.mlm_probability},
        seed=cfg.training.seed, cycle=cfg.training.cycle, config_hash=config.stage_hash(cfg, 'train'),
        resume=not args.no_resume, eval_batch_size=cfg.evaluation.batch_size,
        retention=report.retention, probe_source_hash=probe_set.content_hash,
    )
    print(trainer.render_report(result), end='')
    return 0


def cmd_report(cfg, args):
    run_dirs = [path for path in args.runs.split(',') if path]
    reports = [trainer.load_run(path) for path in run_dirs]
    merged = trainer.merge_reports(reports, force=args.force)

    if args.check:
        trainer.directional_checks(merged)
    print(trainer.render_report(merged, args.format), end='')
    return 0


def build_parser():
    parser = argparse.ArgumentParser(description='Cloze probing of masked language models on vehicle complaints', prog='odiprobe')

    parser.add_argument('--version', action='version', version=odiprobe.__version__)
    parser.add_argument('--config', required=False, default=None, help='YAML pipeline configuration')
    parser.add_argument('--seed', type=int, required=False, default=None, help='Overrides the split and training seeds')
    parser.add_argument('--verbose', required=False, default=False, action='store_true')

    commands = parser.add_subparsers(dest='command', required=True)

    ingest = commands.add_parser('ingest', help='Parse, filter, normalize and split the ODI complaints file')
    ingest.add_argument('--input', required=False, default=None, help='Complaints file (input.odi_file)')
    ingest.set_defaults(handler=cmd_ingest)

    stats = commands.add_parser('stats', help='Length descriptives of the train split, raw and tokenized')
    stats.add_argument('--backend', action='append', help='Backend whose tokenizer to describe, repeatable')
    stats.add_argument('--format', default='md', choices=['md', 'csv'])
    stats.add_argument('--force', action='store_true', help='Skip the config hash check')
    stats.set_defaults(handler=cmd_stats)

    dictionary = commands.add_parser('dict', help='Technical term dictionary').add_subparsers(dest='dict_command', required=True)
    build = dictionary.add_parser('build', help='Build the dictionary and count term frequencies')
    build.add_argument('--force', action='store_true', help='Skip the config hash check')
    build.set_defaults(handler=cmd_dict_build)
    top = dictionary.add_parser('top', help='Most frequent terms')
    top.add_argument('n', type=int, nargs='?', default=10)
    top.add_argument('--dict', default=None, help='Dictionary CSV')
    top.add_argument('--format', default='md', choices=['md', 'csv'])
    top.add_argument('--force', action='store_true', help='Skip the config hash check')
    top.set_defaults(handler=cmd_dict_top)

    probe = commands.add_parser('probes', help='Cloze probes').add_subparsers(dest='probes_command', required=True)
    generate = probe.add_parser('generate', help='Generate probes from the held-out split')
    generate.add_argument('--dict', default=None, help='Dictionary CSV')
    generate.add_argument('--heldout', default=None, help='Corpus JSON lines holding the held-out split')
    generate.add_argument('--out', default=None, help='Probe file to write')
    generate.add_argument('--force', action='store_true', help='Skip the config hash check')
    generate.set_defaults(handler=cmd_probes_generate)
    single = probe.add_parser('filter', help='Keep probes whose ground truth is a single token for a model')
    single.add_argument('--model', required=True, help='Backend id')
    single.add_argument('--probes', default=None, help='Probe file to filter')
    single.add_argument('--tables', default=None, help='Score tables for the mock backend')
    single.add_argument('--out', default=None, help='Filtered probe file to write')
    single.add_argument('--force', action='store_true', help='Skip the config hash check')
    single.set_defaults(handler=cmd_probes_filter)

    evaluate = commands.add_parser('eval', help='Precision@k of one backend on the probes')
    evaluate.add_argument('--backend', default=None, help='Backend id, default: every backend of the config')
    evaluate.add_argument('--probes', default=None, help='Probe file')
    evaluate.add_argument('--tables', default=None, help='Score tables for the mock backend')
    evaluate.add_argument('--checkpoint', default=None, help='Checkpoint directory to evaluate')
    evaluate.add_argument('--ks', default=None, help='Comma separated k values, e.g. 1,5,10')
    evaluate.add_argument('--force', action='store_true', help='Skip the config hash check')
    evaluate.set_defaults(handler=cmd_eval)

    train = commands.add_parser('train', help='Continual MLM pre-training with evaluations at fixed example counts')
    train.add_argument('--backend', required=True, help='Backend id')
    train.add_argument('--plan', default=None, help='TOTAL:INTERVAL in examples, e.g. 400000:100000')
    train.add_argument('--probes', default=None, help='Probe file')
    train.add_argument('--tables', default=None, help='Score tables for the mock backend')
    train.add_argument('--out', default=None, help='Run directory')
    train.add_argument('--no-resume', action='store_true', help='Start over even if the run directory holds a manifest')
    train.add_argument('--force', action='store_true', help='Skip the config hash check')
    train.set_defaults(handler=cmd_train)

    report = commands.add_parser('report', help='Merge run directories into one results table')
    report.add_argument('--runs', required=True, help='Comma separated run directories')
    report.add_argument('--format', default='md', choices=['md', 'csv'])
    report.add_argument('--force', action='store_true', help='Merge runs evaluated on different probe sets')
    report.add_argument('--check', action='store_true', help='Log the directional checks of continual pre-training')
    report.set_defaults(handler=cmd_report)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)

    logging.basicConfig(format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    logging.getLogger('odiprobe').setLevel(logging.DEBUG if args.verbose else logging.INFO)

    overrides = {}
    if args.seed is not None:
        overrides = {'split': {'seed': args.seed}, 'training': {'seed': args.seed}}

    try:
        cfg = config.load_config(args.config, overrides)
        return args.handler(cfg, args)
    except (ValueError, KeyError, OSError) as e:
        logger.error('{}'.format(e))
        return 1


if __name__ == '__main__':
    sys.exit(main())
