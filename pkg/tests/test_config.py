import pytest
import yaml

from odiprobe import config, defaults


def write(tmp_path, data):
    path = tmp_path / 'config.yaml'
    path.write_text(yaml.safe_dump(data), encoding='utf-8')
    return str(path)


def test_defaults_without_file(monkeypatch):
    monkeypatch.delenv(config.OUTPUT_ROOT_ENV, raising=False)

    cfg = config.load_config()

    assert cfg.split.ratio == 0.9
    assert cfg.evaluation.ks == [1, 5, 10]
    assert cfg.plan.total == 400000
    assert cfg.output.root == 'runs'


def test_file_is_merged_over_defaults(tmp_path, monkeypatch):
    monkeypatch.delenv(config.OUTPUT_ROOT_ENV, raising=False)

    cfg = config.load_config(write(tmp_path, {'split': {'seed': 7}, 'filter': {'keep_sources': ['IVOQ']}}))

    assert cfg.split.seed == 7
    assert cfg.split.ratio == 0.9
    assert cfg.filter.keep_sources == ['IVOQ']


def test_environment_sets_the_output_root(tmp_path, monkeypatch):
    monkeypatch.setenv(config.OUTPUT_ROOT_ENV, str(tmp_path / 'elsewhere'))

    cfg = config.load_config(write(tmp_path, {'output': {'root': 'mine'}}))

    assert cfg.output.root == str(tmp_path / 'elsewhere')


def test_overrides_win(tmp_path):
    cfg = config.load_config(write(tmp_path, {'training': {'seed': 1}}), {'training': {'seed': 2}})

    assert cfg.training.seed == 2


def test_missing_file():
    with pytest.raises(FileNotFoundError):
        config.load_config('/nonexistent/config.yaml')


@pytest.mark.parametrize('data,message', [
    ({'split': {'ratio': 1.0}}, 'split.ratio'),
    ({'evaluation': {'ks': []}}, 'evaluation.ks'),
    ({'plan': {'interval': 0}}, 'plan'),
])
def test_invalid_values(tmp_path, data, message):
    with pytest.raises(ValueError, match=message):
        config.load_config(write(tmp_path, data))


def test_schema_needs_every_field():
    data = defaults.defaults()
    del data['input']['schema']['component_description']

    with pytest.raises(ValueError, match='component_description'):
        config.validate(data)


def test_stage_hash_ignores_downstream_sections():
    base = config.load_config()
    edited = config.load_config(overrides={'evaluation': {'ks': [1, 3]}, 'plan': {'total': 800, 'interval': 200}})

    for stage in ('ingest', 'dict', 'probes'):
        assert config.stage_hash(base, stage) == config.stage_hash(edited, stage)
    assert config.stage_hash(base, 'train') != config.stage_hash(edited, 'train')


def test_stage_hash_follows_upstream_sections():
    base = config.load_config()
    edited = config.load_config(overrides={'split': {'seed': 43}})

    for stage in ('ingest', 'dict', 'probes', 'train'):
        assert config.stage_hash(base, stage) != config.stage_hash(edited, stage)


def test_stage_hash_is_stable():
    assert config.stage_hash(config.load_config(), 'dict') == config.stage_hash(config.load_config(), 'dict')
    assert len(config.stage_hash(config.load_config(), 'dict')) == 16


def test_unknown_stage():
    with pytest.raises(KeyError):
        config.stage_hash(config.load_config(), 'deploy')


def test_yaml_snapshot_reloads(tmp_path):
    cfg = config.load_config(overrides={'split': {'seed': 5}})
    path = tmp_path / 'snapshot.yaml'
    path.write_text(config.to_yaml(cfg), encoding='utf-8')

    assert config.config_hash(config.load_config(str(path))) == config.config_hash(cfg)


def test_config_printer(capsys):
    from odiprobe.utils import config as printer

    assert printer.main(['--format', 'json', '--indent', '2']) == 0

    out = capsys.readouterr().out
    assert '"ratio": 0.9' in out
    assert out.splitlines()[-1] == '# config_hash: {}'.format(config.config_hash(config.load_config()))
