import pathlib

import pytest

from sill.parser import parse_program

ROOT = pathlib.Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"

CORPUS_FILES = sorted(CORPUS.glob("*.sill"))


@pytest.fixture(scope="session")
def corpus():
    """Parsed corpus programs keyed by stem."""
    return {p.stem: parse_program(p.read_text()) for p in CORPUS_FILES}


@pytest.fixture(scope="session")
def queue_env(corpus):
    return corpus["queue"].types


@pytest.fixture(scope="session")
def auction_env(corpus):
    return corpus["auction"].types
