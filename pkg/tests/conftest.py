import random
from pathlib import Path

import pytest

from reqcomplete.mlm import StubBackend
from reqcomplete.text_pipeline import RuleBasedPipeline, Wordlists, data_path

DEMO = Path(data_path("demo"))

_SUBJECTS = ["system", "operator", "user", "server", "controller", "application", "administrator", "device"]
_VERBS = ["store", "encrypt", "display", "validate", "transmit", "record", "export", "monitor", "archive", "update"]
_OBJECTS = ["data", "message", "report", "password", "transaction", "log", "configuration", "alarm", "sensor",
            "account", "invoice", "schedule", "backup", "certificate", "request"]
_ADJS = ["secure", "daily", "remote", "encrypted", "local", "external", "new", "critical"]


def synthetic_text(seed: int, n_sentences: int = 6) -> str:
    """Small seeded requirements-like document built from a fixed grammar."""
    rng = random.Random(seed)
    sentences = []
    for _ in range(n_sentences):
        s = f"The {rng.choice(_SUBJECTS)} shall {rng.choice(_VERBS)} the {rng.choice(_ADJS)} {rng.choice(_OBJECTS)}"
        if rng.random() < 0.5:
            s += f" of the {rng.choice(_OBJECTS)}"
        sentences.append(s + ".")
    return " ".join(sentences)


@pytest.fixture(scope="session")
def pipeline():
    return RuleBasedPipeline()


@pytest.fixture(scope="session")
def wordlists():
    return Wordlists.default()


@pytest.fixture(scope="session")
def stub():
    return StubBackend(seed=0)


@pytest.fixture(scope="session")
def demo_dir():
    return DEMO
