import json
import random
from pathlib import Path

import pytest

from cxrstudy.taxonomy import DEFAULT_TAXONOMY, AssertionLabel, LabelVector

DATA_DIR = Path(__file__).parent / "data"

LABELS = (AssertionLabel.POSITIVE, AssertionLabel.UNCERTAIN,
          AssertionLabel.NEGATIVE, AssertionLabel.NOT_MENTIONED)


def random_vector(rng: random.Random) -> LabelVector:
    return LabelVector(
        labels=tuple(rng.choice(LABELS) for _ in DEFAULT_TAXONOMY.findings),
        taxonomy=DEFAULT_TAXONOMY,
    )


def random_corpus(rng: random.Random, n: int) -> list[LabelVector]:
    return [random_vector(rng) for _ in range(n)]


@pytest.fixture(scope="session")
def segmentation_cases() -> list[dict]:
    with open(DATA_DIR / "segmentation_cases.json", encoding="utf-8") as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def regression_records() -> list[dict]:
    records = []
    with open(DATA_DIR / "labeler_regression.jsonl", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records
