"""Tests for experiment configuration parsing and validation."""

from pathlib import Path
import json
import sys

import pytest

sys.path.append(str(Path(__file__).resolve().parents[2]))

from app.config.experiment_config import (
    ConfigurationError,
    config_to_dict,
    parse_config,
    parse_config_dict,
    snake_case,
)
from app.dtos.experiment_dto import Predictor, Strategy
from app.dtos.memory_dto import BudgetMode
from app.dtos.model_dto import HeadKind
from app.dtos.scenario_dto import ScenarioKind
from app.dtos.training_dto import AuxKind


def test_empty_document_takes_every_default() -> None:
    """An empty object yields the documented defaults with a linear head."""

    config = parse_config_dict({})
    assert config.dataset.numClasses == 20
    assert config.scenario.kind is ScenarioKind.SHUFFLED
    assert config.memory.mode is BudgetMode.PER_CLASS
    assert config.train.milestones == [20, 25]
    assert config.train.epochsStage2 == 30
    assert config.strategy is Strategy.REPLAY
    assert config.predictor is Predictor.SCALED
    assert config.model.headKind is HeadKind.LINEAR
    assert config.seeds == [0]


def test_snake_case_keys_map_to_nested_fields() -> None:
    """Nested snake_case keys reach the camelCase dataclass fields."""

    config = parse_config_dict(
        {
            "dataset": {"num_classes": 6, "per_class": 30, "test_per_class": 5},
            "scenario": {"kind": "ordered", "rho": 0.1, "num_tasks": 3, "base_classes": 2},
            "train": {"epochs_stage1": 4, "milestones": [2], "aux": {"temperature": 3}},
            "seeds": [1, 2],
            "two_stage": False,
        }
    )
    assert config.dataset.perClass == 30
    assert config.scenario.baseClasses == 2
    assert config.train.aux.temperature == 3.0
    assert isinstance(config.train.aux.temperature, float)
    assert config.twoStage is False
    assert snake_case("lambdaBase") == "lambda_base"


@pytest.mark.parametrize(
    "payload, key_path",
    [
        ({"dataset": {"colour": 1}}, "dataset.colour"),
        ({"scenario": {"rho": 0.0}}, "scenario.rho"),
        ({"scenario": {"rho": 1.5}}, "scenario.rho"),
        ({"scenario": {"kind": "conventional", "rho": 0.5}}, "scenario.rho"),
        ({"train": {"epochs_stage1": 10, "milestones": [5, 3]}}, "train.milestones"),
        ({"train": {"epochs_stage1": 10, "milestones": [10]}}, "train.milestones"),
        ({"train": {"momentum": 1.0}}, "train.momentum"),
        ({"train": {"batch_size": 0}}, "train.batch_size"),
        ({"train": {"aux": {"temperature": 0}}}, "train.aux.temperature"),
        ({"seeds": [1, 1]}, "seeds"),
        ({"seeds": []}, "seeds"),
        ({"seeds": [3, -1]}, "seeds[1]"),
        ({"dataset": {"kind": "csv"}}, "dataset.csv_path"),
        ({"strategy": "ewc"}, "strategy"),
        ({"two_stage": "yes"}, "two_stage"),
        ({"train": {"batch_size": 3.5}}, "train.batch_size"),
    ],
)
def test_invalid_documents_name_the_offending_key(payload: dict, key_path: str) -> None:
    """Every rejected document reports the dotted path of the bad key."""

    with pytest.raises(ConfigurationError) as error:
        parse_config_dict(payload)
    assert error.value.keyPath == key_path


def test_strategies_resolve_loss_and_head() -> None:
    """lwf implies logit distillation; lucir implies a cosine head with feature distillation."""

    lwf = parse_config_dict({"strategy": "lwf"})
    assert lwf.train.aux.kind is AuxKind.LOGIT_DISTILL
    assert lwf.model.headKind is HeadKind.LINEAR
    lucir = parse_config_dict({"strategy": "lucir"})
    assert lucir.train.aux.kind is AuxKind.FEATURE_DISTILL
    assert lucir.model.headKind is HeadKind.COSINE


def test_conflicting_strategy_settings_are_rejected() -> None:
    """An explicit value contradicting the strategy is a configuration error."""

    with pytest.raises(ConfigurationError) as error:
        parse_config_dict({"strategy": "lucir", "model": {"head_kind": "linear"}})
    assert error.value.keyPath == "model.head_kind"
    with pytest.raises(ConfigurationError):
        parse_config_dict({"strategy": "lwf", "train": {"aux": {"kind": "feature_distill"}}})


def test_config_to_dict_round_trips() -> None:
    """Serializing a parsed configuration and parsing it again is stable."""

    config = parse_config_dict({"strategy": "lucir", "scenario": {"rho": 0.05}, "seeds": [3, 4]})
    document = config_to_dict(config)
    assert document["scenario"]["rho"] == 0.05
    assert document["model"]["head_kind"] == "cosine"
    assert config_to_dict(parse_config_dict(json.loads(json.dumps(document)))) == document


def test_parse_config_reads_json_and_yaml(tmp_path: Path) -> None:
    """Both file formats are accepted; unreadable files raise configuration errors."""

    json_path = tmp_path / "exp.json"
    json_path.write_text(json.dumps({"scenario": {"rho": 0.2}}), encoding="utf-8")
    assert parse_config(json_path).scenario.rho == 0.2
    yaml_path = tmp_path / "exp.yaml"
    yaml_path.write_text("scenario:\n  rho: 0.3\nseeds: [5]\n", encoding="utf-8")
    config = parse_config(yaml_path)
    assert config.scenario.rho == 0.3
    assert config.seeds == [5]
    broken = tmp_path / "broken.json"
    broken.write_text("{", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        parse_config(broken)
    with pytest.raises(ConfigurationError):
        parse_config(tmp_path / "missing.json")


def test_non_object_root_is_rejected(tmp_path: Path) -> None:
    """A list at the top level is reported against the root."""

    path = tmp_path / "lista.json"
    path.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigurationError) as error:
        parse_config(path)
    assert error.value.keyPath == "<raíz>"


def test_non_utf8_file_is_a_configuration_error(tmp_path: Path) -> None:
    """Undecodable bytes are reported as a configuration error, not a decoding traceback."""

    path = tmp_path / "latin.json"
    path.write_bytes(b'{"seeds": [1], "output_dir": "\xff\xfe"}')
    with pytest.raises(ConfigurationError):
        parse_config(path)


def test_conventional_scenario_needs_rho_one() -> None:
    """The long-tailed default rho is rejected for a conventional scenario until rho is 1."""

    with pytest.raises(ConfigurationError):
        parse_config_dict({"scenario": {"kind": "conventional"}})
    config = parse_config_dict({"scenario": {"kind": "conventional", "rho": 1}})
    assert config.scenario.kind is ScenarioKind.CONVENTIONAL
