#!/usr/bin/env python3

import hashlib
import json
import logging
import os

import munch
import yaml

from odiprobe import defaults as config_defaults


logger = logging.getLogger('odiprobe.config')

OUTPUT_ROOT_ENV = 'ODIPROBE_OUTPUT_ROOT'


def merge(base, override):
    """ Recursively merges override into base. Mappings are merged, anything
    else (lists included) is replaced """
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            merge(base[key], value)
        else:
            base[key] = value
    return base


def load_config(path=None, overrides=None):
    data = config_defaults.defaults()

    if path is not None:
        if not os.path.exists(path):
            raise FileNotFoundError('Config file not found: {}'.format(path))
        with open(path, encoding='utf-8') as handle:
            loaded = yaml.safe_load(handle) or {}
        if not isinstance(loaded, dict):
            raise ValueError('Config file {} must contain a mapping'.format(path))
        merge(data, loaded)

    if os.environ.get(OUTPUT_ROOT_ENV):
        data['output']['root'] = os.environ[OUTPUT_ROOT_ENV]

    if overrides:
        merge(data, overrides)

    validate(data)
    return munch.munchify(data)


def validate(data):
    ratio = data['split']['ratio']
    if not 0 < ratio < 1:
        raise ValueError('split.ratio must be in (0, 1), got {}'.format(ratio))

    plan = data['plan']
    if plan['interval'] <= 0 or plan['total'] <= 0:
        raise ValueError('plan.total and plan.interval must be positive')

    ks = data['evaluation']['ks']
    if not ks or any(int(k) < 1 for k in ks):
        raise ValueError('evaluation.ks must be a non-empty set of positive integers, got {}'.format(ks))

    schema = data['input']['schema']
    for field in ('id', 'narrative', 'component_description', 'source'):
        if field not in schema:
            raise ValueError('input.schema is missing the required field "{}"'.format(field))

    return data


def require_path(path, what):
    if not os.path.exists(path):
        raise FileNotFoundError('{} not found: {}'.format(what, path))
    return path


def canonical(data):
    return json.dumps(munch.unmunchify(data), sort_keys=True, separators=(',', ':'), default=str)


def hash_of(data):
    return hashlib.sha256(canonical(data).encode('utf-8')).hexdigest()[:16]


def config_hash(cfg):
    return hash_of(cfg)


def stage_hash(cfg, stage):
    try:
        sections = config_defaults.STAGE_SECTIONS[stage]
    except KeyError:
        raise KeyError('Unknown pipeline stage: {}'.format(stage))
    return hash_of({section: cfg.get(section) for section in sections})


def to_yaml(cfg):
    return yaml.safe_dump(munch.unmunchify(cfg), sort_keys=True)
