from __future__ import annotations

from pathlib import Path

import pytest

from charon.frontend import parse_source

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"
GOLDEN = Path(__file__).resolve().parent / "golden"


def corpus_files() -> list[Path]:
    return sorted(CORPUS.glob("*.ch"))


@pytest.fixture(scope="session")
def corpus() -> list[tuple[str, str]]:
    return [(f.name, f.read_text()) for f in corpus_files()]


@pytest.fixture(scope="session")
def corpus_programs(corpus):
    return [(name, parse_source(text)) for name, text in corpus]


@pytest.fixture(scope="session")
def gcd_source() -> str:
    return (CORPUS / "gcd.ch").read_text()
