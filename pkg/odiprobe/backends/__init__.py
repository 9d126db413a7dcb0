import importlib
import os


BACKENDS = {}


def register(prefix, target=None):
    """ Maps a backend id prefix to its adapter. target may be a class or a
    'module:Class' string, resolved on first use so that torch is only
    imported by the adapters that need it """
    def check_unique(key):
        if key in BACKENDS:
            raise ValueError('Backend prefix {} already registered'.format(key))

    if target is not None:
        check_unique(prefix)
        BACKENDS[prefix] = target
        return target

    def __inner(cls):
        check_unique(prefix)
        BACKENDS[prefix] = cls
        return cls
    return __inner


def resolve(target):
    if isinstance(target, str):
        module_name, class_name = target.split(':')
        return getattr(importlib.import_module(module_name), class_name)
    return target


def prefix_for(backend_id):
    name = backend_id.rstrip('/').split('/')[-1]
    for prefix in sorted(BACKENDS, key=len, reverse=True):
        if name == prefix or name.startswith(prefix + '-'):
            return prefix
    if os.path.isdir(backend_id):
        return 'local'
    raise KeyError('Backend not found for id: {}'.format(backend_id))


def for_id(backend_id):
    return resolve(BACKENDS[prefix_for(backend_id)])


def options_for(backend_id, backend_options):
    prefix = prefix_for(backend_id)
    backend_options = backend_options or {}
    if prefix in backend_options:
        return dict(backend_options[prefix] or {})
    return dict(backend_options.get('hf') or {})


def create_backend(backend_id, backend_options=None, texts=None, seed=None):
    cls = for_id(backend_id)
    return cls.create(backend_id, options_for(backend_id, backend_options), texts=texts, seed=seed)


from odiprobe.backends import mock  # noqa: E402,F401

for _family in ('bert', 'roberta', 'distilbert', 'albert', 'local'):
    register(_family, 'odiprobe.backends.hf:TransformersBackend')

register('toy-mlm', 'odiprobe.backends.toy:ToyBackend')
