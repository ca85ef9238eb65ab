import json
import os

import pytest
from pydantic import ValidationError

from src.core.channels import ChannelFile
from src.core.config import AUTO_ADMM_THRESHOLD, RunConfig, config_errors, load_config_file
from src.core.errors import DomainError
from src.core.records import BlockRecord, SolveRecord, SuiteRecord, VerifyRecord

SCHEMA_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'schemas')


def _schema(name: str) -> dict:
    with open(os.path.join(SCHEMA_DIR, name), encoding='utf-8') as f:
        return json.load(f)


def test_defaults():
    config = RunConfig()
    assert config.solver == 'auto'
    assert config.level == 1
    assert config.M == 2
    assert config.threads >= 1
    assert config.seed is None


def test_layering_order():
    """Test flags override the file, which overrides defaults."""
    config = RunConfig.layered({'M': 3, 'tol': 1e-6, 'channel': 'dephasing'},
                               {'M': 2, 'tol': None, 'level': 2})
    assert config.M == 2
    assert config.tol == 1e-6
    assert config.channel == 'dephasing'
    assert config.level == 2
    assert config.param == 0.0


def test_unknown_and_invalid_keys():
    with pytest.raises(ValidationError):
        RunConfig.layered({'levle': 2})
    with pytest.raises(ValidationError) as info:
        RunConfig.layered({}, {'solver': 'simplex', 'M': 0})
    message = config_errors(info.value)
    assert 'solver' in message and 'M' in message


def test_level_is_validated():
    with pytest.raises(ValidationError) as info:
        RunConfig.layered({'level': 2}, {'level': 0})
    assert config_errors(info.value).startswith('level:')
    with pytest.raises(ValidationError):
        RunConfig(level=-1)


def test_solver_for():
    auto = RunConfig()
    assert auto.solver_for(256) == 'ipm'
    assert auto.solver_for(2176) == 'ipm'
    assert auto.solver_for(AUTO_ADMM_THRESHOLD + 1) == 'admm'
    assert RunConfig(solver='admm').solver_for(10) == 'admm'
    assert RunConfig(solver='ipm').solver_for(10 ** 6) == 'ipm'


def test_load_config_file(tmp_path):
    path = tmp_path / 'run.json'
    path.write_text(json.dumps({'channel': 'identity', 'level': 2}))
    assert load_config_file(str(path)) == {'channel': 'identity', 'level': 2}

    bad = tmp_path / 'bad.json'
    bad.write_text('{not json')
    with pytest.raises(DomainError):
        load_config_file(str(bad))
    listed = tmp_path / 'list.json'
    listed.write_text('[1, 2]')
    with pytest.raises(DomainError):
        load_config_file(str(listed))


def test_solve_record_round_trip():
    record = SolveRecord(channel='identity', param=0.0, value=1.0, level=1, M=2, status='optimal', gap=1e-9,
                         solver='ipm', iterations=12, eq_residual=0.0, min_block_eig=1e-9,
                         blocks=[BlockRecord(partition=[1], tableaux=4, side=16)], timings_ms={'total': 5.0})
    payload = json.loads(record.model_dump_json())
    assert SolveRecord.model_validate(payload) == record
    assert payload['seesaw'] is None
    with pytest.raises(ValidationError):
        SolveRecord.model_validate({**payload, 'level': 0})
    with pytest.raises(ValidationError):
        SolveRecord.model_validate({**payload, 'extra': 1})


@pytest.mark.parametrize('filename,model', [
    ('channel.schema.json', ChannelFile),
    ('solve_result.schema.json', SolveRecord),
    ('verify_result.schema.json', VerifyRecord),
])
def test_published_schema_matches_model(filename, model):
    """Test the schema files list exactly the model fields."""
    schema = _schema(filename)
    assert schema['title'] == model.__name__
    assert schema['additionalProperties'] is False
    assert set(schema['properties']) == set(model.model_fields)
    required = {name for name, field in model.model_fields.items() if field.is_required()}
    assert set(schema['required']) == required


def test_nested_schemas_match_models():
    solve = _schema('solve_result.schema.json')
    assert set(solve['properties']['blocks']['items']['properties']) == set(BlockRecord.model_fields)
    verify = _schema('verify_result.schema.json')
    assert set(verify['properties']['suites']['additionalProperties']['properties']) == set(SuiteRecord.model_fields)
