from __future__ import annotations

import json
from pathlib import Path

import pytest

from zsbench.dataset import LabelSchema

DATA_DIR = Path(__file__).parent / "data"

ECOMMERCE_LABELS = ["Household", "Books", "Clothing & Accessories", "Electronics"]

FIXTURE_RULES = {
    "Household": ["kitchen", "furniture", "curtain"],
    "Books": ["novel", "paperback", "author"],
    "Clothing & Accessories": ["cotton", "sleeve", "denim"],
    "Electronics": ["battery", "wireless", "usb"],
}
FIXTURE_DEFAULT_LABEL = "Household"


@pytest.fixture
def ecommerce_schema() -> LabelSchema:
    return LabelSchema("e-commerce", ECOMMERCE_LABELS)


@pytest.fixture
def spam_schema() -> LabelSchema:
    return LabelSchema("sms spam", ["ham", "spam"])


@pytest.fixture
def fixture_corpus_path() -> Path:
    return DATA_DIR / "fixture_corpus.csv"


def fixture_experiment_config(
    corpus_path: Path,
    output_dir: Path,
    predictors: list[dict],
    **overrides,
) -> str:
    """Config JSON for experiments over the bundled fixture corpus."""
    config = {
        "dataset": {
            "path": str(corpus_path),
            "format": "csv",
            "text_field": "text",
            "label_field": "category",
            "schema": {"task_name": "e-commerce", "labels": ECOMMERCE_LABELS},
        },
        "split": {"test_size": 150, "seed": 42},
        "predictors": predictors,
        "output_dir": str(output_dir),
    }
    config.update(overrides)
    return json.dumps(config)


def mock_llm_predictor(name: str = "mock-llm", **overrides) -> dict:
    entry = {
        "name": name,
        "type": "llm",
        "model": "mock-model",
        "provider": {
            "type": "mock",
            "rules": FIXTURE_RULES,
            "default_label": FIXTURE_DEFAULT_LABEL,
        },
    }
    entry.update(overrides)
    return entry
