import json
import os
import pathlib

import pytest

ROOT = pathlib.Path(__file__).resolve().parents[2]
DATA = ROOT / "tests" / "data"
SCHEMA_DIR = pathlib.Path(os.environ.get("NLCT_SCHEMA_DIR", ROOT / "schema"))


@pytest.fixture(scope="session")
def ct_binary():
    path = os.environ.get("NLCT_CT")
    if not path or not pathlib.Path(path).exists():
        pytest.skip("NLCT_CT does not point at a built ct binary")
    return path


@pytest.fixture(scope="session")
def config_schema():
    return json.loads((SCHEMA_DIR / "experiment_config.schema.json").read_text())


@pytest.fixture(scope="session")
def summary_schema():
    return json.loads((SCHEMA_DIR / "verify_summary.schema.json").read_text())


@pytest.fixture(scope="session")
def nlct():
    return pytest.importorskip("nlct")
