import copy


# Sections each pipeline stage depends on. Stage hashes are cumulative so a
# change in a downstream-only section (ks, plan) keeps upstream artifacts valid.
STAGE_SECTIONS = {}


def add_stage(stage, sections, after=None):
    if stage in STAGE_SECTIONS:
        raise ValueError('Stage {} already has its sections defined'.format(stage))
    inherited = list(STAGE_SECTIONS[after]) if after else []
    STAGE_SECTIONS[stage] = inherited + [s for s in sections if s not in inherited]


DEFAULTS = {
    'input': {
        'odi_file': 'data/FLAT_CMPL.txt',
        'delimiter': '\t',
        'header': False,
        # 0-based columns of the public tab separated ODI complaints file
        'schema': {
            'id': 0,
            'component_description': 11,
            'received_date': 15,
            'narrative': 19,
            'source': 20,
        },
    },
    'filter': {
        # Owner-filed channels. The exact values used to select "direct
        # customer complaints" are not published, this set is a guess.
        'keep_sources': ['IVOQ', 'EVOQ', 'MIVQ', 'TOLL', 'MAIL'],
    },
    'split': {
        'ratio': 0.9,
        'seed': 42,
    },
    'dictionary': {
        'blocklist': ['and', 'or', 'of', 'the'],
    },
    'probes': {
        'deduplicate': True,
    },
    'backends': ['bert-base-uncased'],
    'backend_options': {
        'mock': {
            'tables': None,
        },
        'toy-mlm': {
            'hidden_size': 64,
            'num_hidden_layers': 2,
            'num_attention_heads': 2,
            'intermediate_size': 128,
            'max_sequence_length': 128,
            'learning_rate': 0.001,
        },
        'hf': {
            'learning_rate': 0.00005,
            'device': 'cpu',
        },
    },
    'training': {
        'seed': 1234,
        'batch_size': 32,
        'mlm_probability': 0.15,
        'cycle': False,
    },
    'plan': {
        'total': 400000,
        'interval': 100000,
    },
    'evaluation': {
        'ks': [1, 5, 10],
        'batch_size': 1,
        'audit_top': 10,
    },
    'output': {
        'root': 'runs',
    },
}


add_stage('ingest', ['input', 'filter', 'split'])
add_stage('dict', ['dictionary'], after='ingest')
add_stage('probes', ['probes'], after='dict')
add_stage('train', ['backend_options', 'training', 'plan', 'evaluation'], after='probes')


def defaults():
    return copy.deepcopy(DEFAULTS)
