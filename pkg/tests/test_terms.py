import re

from hypothesis import given, strategies as st
import pytest

from odiprobe import terms


def test_build_splits_compounds():
    dictionary = terms.build_dictionary(['SERVICE BRAKES, HYDRAULIC'])

    assert dictionary.terms == {'service', 'brakes', 'hydraulic'}
    # independent reading of the same rule
    assert dictionary.terms == set(re.findall(r'[a-z0-9]+', 'service brakes, hydraulic'))


def test_build_deduplicates():
    dictionary = terms.build_dictionary(['ENGINE', 'ENGINE'])

    assert dictionary.terms == {'engine'}
    assert len(dictionary) == 1


def test_build_drops_blocklisted_connectives():
    dictionary = terms.build_dictionary(['ENGINE AND ENGINE COOLING', 'POWER TRAIN:AUTOMATIC TRANSMISSION'])

    assert dictionary.terms == {'engine', 'cooling', 'power', 'train', 'automatic', 'transmission'}


def test_build_uses_record_descriptions(make_records):
    records = make_records(['a', 'b'], components=['air bags', 'vehicle speed control'])

    assert terms.build_dictionary(records).terms == {'air', 'bags', 'vehicle', 'speed', 'control'}


def test_build_rejects_all_empty():
    with pytest.raises(ValueError):
        terms.build_dictionary(['', '  ', ', '])


def test_build_is_idempotent_over_its_terms():
    dictionary = terms.build_dictionary(['SERVICE BRAKES, HYDRAULIC', 'EQUIPMENT:OTHER:LABELS'])

    assert terms.build_dictionary(sorted(dictionary.terms)).terms == dictionary.terms


def test_terms_are_validated():
    with pytest.raises(ValueError):
        terms.TermDictionary(terms={'Engine'})
    with pytest.raises(ValueError):
        terms.TermDictionary(terms={'fuel pump'})


def test_frequency_counts_every_occurrence():
    dictionary = terms.TermDictionary(terms={'engine'})

    counted = terms.count_term_frequencies(dictionary, ['engine stalls', 'the engine engine'])

    assert counted.frequency('engine') == 3


def test_frequency_whole_words_only():
    dictionary = terms.TermDictionary(terms={'brake'})

    counted = terms.count_term_frequencies(dictionary, ['brakes failed', 'handbrake stuck'])

    assert counted.frequency('brake') == 0


def test_frequency_punctuation_is_a_boundary():
    dictionary = terms.TermDictionary(terms={'brakes', 'hydraulic'})

    counted = terms.count_term_frequencies(dictionary, ['service brakes, hydraulic.'])

    assert counted.frequencies == {'brakes': 1, 'hydraulic': 1}


def test_every_term_has_a_frequency():
    dictionary = terms.count_term_frequencies(terms.TermDictionary(terms={'engine', 'axle'}), ['engine'])

    assert dictionary.frequencies == {'engine': 1, 'axle': 0}


WORDS = st.sampled_from(['engine', 'brakes', 'the', 'axle', 'hydraulic', 'gear', 'shift'])
NARRATIVES = st.lists(st.lists(WORDS, max_size=8).map(' '.join), max_size=10)


@given(NARRATIVES, NARRATIVES)
def test_frequencies_add_over_shards(first, second):
    dictionary = terms.TermDictionary(terms={'engine', 'brakes', 'axle', 'gear'})

    whole = terms.count_term_frequencies(dictionary, first + second)
    a = terms.count_term_frequencies(dictionary, first)
    b = terms.count_term_frequencies(dictionary, second)

    assert whole.frequencies == {t: a.frequency(t) + b.frequency(t) for t in dictionary.terms}


@given(NARRATIVES, st.randoms())
def test_frequencies_order_invariant(narratives, rng):
    dictionary = terms.TermDictionary(terms={'engine', 'shift'})
    shuffled = list(narratives)
    rng.shuffle(shuffled)

    assert terms.count_term_frequencies(dictionary, narratives) == terms.count_term_frequencies(dictionary, shuffled)


def test_top_breaks_ties_lexicographically():
    dictionary = terms.TermDictionary(terms={'service', 'brakes', 'engine', 'axle'}, frequencies={'service': 5, 'brakes': 5, 'engine': 9, 'axle': 1})

    assert terms.top(dictionary, 3) == [('engine', 9), ('brakes', 5), ('service', 5)]


def test_dictionary_csv_round_trip(tmp_path):
    dictionary = terms.TermDictionary(terms={'engine', 'hydraulic'}, frequencies={'engine': 42903, 'hydraulic': 31861})
    path = str(tmp_path / 'dictionary.csv')

    terms.write_dictionary(path, dictionary, 'feed')

    assert open(path, encoding='utf-8').read().splitlines()[:3] == ['# config_hash=feed', 'term,frequency', 'engine,42903']
    assert terms.read_dictionary(path, 'feed') == dictionary


def test_dictionary_hash_mismatch(tmp_path):
    from odiprobe.store import ConfigMismatch

    path = str(tmp_path / 'dictionary.csv')
    terms.write_dictionary(path, terms.TermDictionary(terms={'engine'}), 'aaaa')

    with pytest.raises(ConfigMismatch):
        terms.read_dictionary(path, 'bbbb')


def test_top_table_layout():
    table = terms.format_top_table([('engine', 42903), ('hydraulic', 31861)])

    assert table.splitlines()[2] == '| 1 | engine | 42903 |'
