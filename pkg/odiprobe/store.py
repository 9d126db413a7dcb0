#!/usr/bin/env python3

from collections import defaultdict
import hashlib
import json
import logging
import os


logger = logging.getLogger('odiprobe.store')


# Which command produces every artifact kind, used to name the prerequisite
PRODUCERS = {
    'corpus': 'ingest',
    'split_manifest': 'ingest',
    'dictionary': 'dict build',
    'probes': 'probes generate',
    'filtered_probes': 'probes filter',
    'results': 'eval',
    'audit': 'eval',
    'manifest': 'train',
    'grid': 'train',
}


class MissingArtifact(FileNotFoundError):
    def __init__(self, path, kind):
        self.path = path
        self.kind = kind
        super().__init__('Missing {} artifact {}: run "{}" first'.format(kind, path, PRODUCERS.get(kind, '?')))


class ConfigMismatch(ValueError):
    pass


def ensure_parent(path):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    return path


def require(path, kind):
    if not os.path.exists(path):
        raise MissingArtifact(path, kind)
    return path


def dumps(record):
    return json.dumps(record, sort_keys=True, ensure_ascii=False)


def content_hash(lines):
    digest = hashlib.sha256()
    for line in lines:
        digest.update(line.encode('utf-8'))
        digest.update(b'\n')
    return digest.hexdigest()[:16]


def make_header(kind, config_hash, **extra):
    header = {'kind': 'header', 'artifact': kind, 'config_hash': config_hash}
    header.update(extra)
    return header


def write_jsonl(path, kind, config_hash, records, **extra):
    """ Writes records as JSON lines preceded by a header line that stamps the
    producing config hash and the content hash of the records """
    lines = [dumps(record) for record in records]
    header = make_header(kind, config_hash, content_hash=content_hash(lines), **extra)

    ensure_parent(path)
    with open(path, 'w', encoding='utf-8', newline='\n') as handle:
        handle.write(dumps(header) + '\n')
        for line in lines:
            handle.write(line + '\n')

    logger.debug('Wrote {} {} records to {}'.format(len(lines), kind, path))
    return header


def read_jsonl(path, kind, expected_hash=None):
    """ Returns (header, records). Raises ConfigMismatch if the header was
    stamped by a different config than expected_hash """
    require(path, kind)

    with open(path, encoding='utf-8') as handle:
        lines = [line for line in handle if line.strip()]

    if not lines:
        raise ValueError('Artifact {} is empty'.format(path))

    header = json.loads(lines[0])
    if header.get('kind') != 'header' or header.get('artifact') != kind:
        raise ValueError('Artifact {} is not a {} file'.format(path, kind))

    check_hash(header, expected_hash, path)
    return header, [json.loads(line) for line in lines[1:]]


def check_hash(header, expected_hash, path):
    if expected_hash is None:
        return
    found = header.get('config_hash')
    if found != expected_hash:
        raise ConfigMismatch('Artifact {} was produced with config {} but the current config is {}'.format(path, found, expected_hash))


def write_json(path, data):
    ensure_parent(path)
    tmp = path + '.tmp'
    with open(tmp, 'w', encoding='utf-8') as handle:
        json.dump(data, handle, indent=2, sort_keys=True)
        handle.write('\n')
    os.replace(tmp, path)


def read_json(path, kind):
    require(path, kind)
    with open(path, encoding='utf-8') as handle:
        return json.load(handle)


class ResultsStore(defaultdict):
    """ Precision results keyed by backend_id and checkpoint tag. Writers only
    ever replace whole cells, last writer wins. config_hash stamps the file """

    def __init__(self, *args, config_hash='', **kwargs):
        super().__init__(dict, *args, **kwargs)
        self.config_hash = config_hash

    def commit_result(self, result):
        self[result.backend_id][result.checkpoint_tag] = result.serialize()
        return result

    def cell(self, backend_id, checkpoint_tag):
        return self.get(backend_id, {}).get(checkpoint_tag)

    def save(self, path):
        write_json(path, {
            'config_hash': self.config_hash,
            'cells': {backend_id: dict(cells) for backend_id, cells in self.items()},
        })
        return path

    @classmethod
    def load(cls, path, kind='results', expected_hash=None):
        store = cls(config_hash=expected_hash or '')
        if os.path.exists(path):
            data = read_json(path, kind)
            check_hash(data, expected_hash, path)
            store.config_hash = data.get('config_hash', '')
            for backend_id, cells in data['cells'].items():
                store[backend_id].update(cells)
        return store
