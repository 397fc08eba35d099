"""The JSON schemas shipped in docs/ agree with what the code reads and writes."""

import json
from pathlib import Path

import pytest

from fvimex import harness
from fvimex.cli import RunConfig, parse_config

jsonschema = pytest.importorskip("jsonschema")

DOCS = Path(__file__).resolve().parents[1] / "docs"


def load(name):
    schema = json.loads((DOCS / name).read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    return jsonschema.Draft202012Validator(schema)


def test_default_config_validates():
    load("config.schema.json").validate(RunConfig().to_dict())


def test_schema_defaults_match_code():
    props = json.loads((DOCS / "config.schema.json").read_text())["properties"]
    cfg = RunConfig()
    for key in ("model", "scheme", "resolutions", "cfl", "out", "explicit_max_n"):
        assert props[key]["default"] == getattr(cfg, key), key


def test_schema_keys_are_exactly_the_accepted_keys():
    props = set(json.loads((DOCS / "config.schema.json").read_text())["properties"])
    for key in props:
        value = {"model": "xva_call", "scheme": "imex", "resolutions": [10], "cfl": 0.3,
                 "out": None, "explicit_max_n": None}.get(key, 0.1)
        parse_config(json.dumps({key: value}))


@pytest.mark.parametrize("text", ['{"cfl": 1.5}', '{"sigam": 0.2}', '{"model": "asian"}', '{"resolutions": [2]}'])
def test_schema_and_parser_both_reject(text):
    validator = load("config.schema.json")
    assert not validator.is_valid(json.loads(text))
    with pytest.raises(ValueError):
        parse_config(text)


@pytest.mark.parametrize("model", sorted(harness.MODELS))
def test_sidecar_validates(model, tmp_path):
    rep = harness.compare_schemes(model, [20, 40], explicit_max_n=20)
    harness.emit_report(rep, tmp_path / "r.csv")
    meta = json.loads((tmp_path / "r.csv.json").read_text())
    load("report-metadata.schema.json").validate(meta)
