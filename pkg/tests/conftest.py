import random

import pytest
import yaml

from odiprobe.backends.mock import MockBackend
from odiprobe.corpus import ComplaintRecord


ODI_WIDTH = 21

COMPONENTS = [
    'ENGINE', 'SERVICE BRAKES, HYDRAULIC', 'POWER TRAIN:AUTOMATIC TRANSMISSION', 'AIR BAGS', 'STEERING',
    'FUEL SYSTEM, GASOLINE', 'ELECTRICAL SYSTEM', 'STRUCTURE', 'SEATS', 'WHEELS',
]

TEMPLATES = [
    'THE {part} FAILED WHILE DRIVING ON THE HIGHWAY.',
    'DEALER REPLACED THE {part} AFTER IT STOPPED WORKING.',
    'WHILE STOPPED AT A LIGHT THE {part} MADE A LOUD NOISE. THE CONTACT WAS NOT INJURED.',
    'GEAR SHIFT CABLE FAILURE IN AUTO TRANSMISSION. THE {part} WAS ALSO INSPECTED.',
    'VEHICLE LOST POWER AND THE {part} WARNING LIGHT CAME ON!',
]

PARTS = ['engine', 'brakes', 'transmission', 'steering', 'fuel', 'airbag', 'seat', 'wheel', 'pump', 'axle']


def odi_row(record_id, narrative, component='ENGINE', source='IVOQ', date='20190131'):
    row = [''] * ODI_WIDTH
    row[0] = str(record_id)
    row[11] = component
    row[15] = date
    row[19] = narrative
    row[20] = source
    return '\t'.join(row)


def synthetic_narratives(n, seed=0):
    rng = random.Random(seed)
    return [rng.choice(TEMPLATES).format(part=rng.choice(PARTS).upper()) + ' REF {}.'.format(i) for i in range(n)]


@pytest.fixture
def write_odi(tmp_path):
    def _write(rows, name='FLAT_CMPL.txt'):
        path = tmp_path / name
        path.write_bytes(('\n'.join(rows) + '\n').encode('utf-8'))
        return str(path)
    return _write


@pytest.fixture
def odi_fixture(write_odi):
    """ 100 complaints, a few filed by insurers, a few empty or repeated """
    rng = random.Random(7)
    narratives = synthetic_narratives(100, seed=3)
    rows = []
    for i, narrative in enumerate(narratives):
        source = 'INS' if i % 17 == 0 else 'IVOQ'
        rows.append(odi_row(1000 + i, narrative, component=rng.choice(COMPONENTS), source=source))
    rows.append(odi_row(2000, '   '))
    rows.append(odi_row(2001, narratives[1]))
    return write_odi(rows)


@pytest.fixture
def make_records():
    def _make(narratives, components=None, sources=None):
        out = []
        for i, narrative in enumerate(narratives):
            out.append(ComplaintRecord(
                record_id='r{:05d}'.format(i),
                narrative=narrative,
                component_description=(components[i] if components else 'engine'),
                source_channel=(sources[i] if sources else 'IVOQ'),
            ))
        return out
    return _make


@pytest.fixture
def mock_tables(tmp_path):
    def _write(data, name='tables.yaml'):
        path = tmp_path / name
        path.write_text(yaml.safe_dump(data), encoding='utf-8')
        return str(path)
    return _write


@pytest.fixture
def mock_backend():
    def _make(tables, **kwargs):
        return MockBackend(tables=tables, **kwargs)
    return _make
