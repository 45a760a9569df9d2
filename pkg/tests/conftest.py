import numpy as np
import pytest

from streamitn.datagen import GenConfig, generate
from streamitn.tokenizer import build_vocab


@pytest.fixture(scope="session")
def corpus():
    return generate(GenConfig(sentences=400, seed=3))


@pytest.fixture(scope="session")
def vocab(corpus):
    return build_vocab([ex.spoken for ex in corpus], 120)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_DETAILS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_DETAILS] = {}


@pytest.fixture
def measured(request):
    """Record the measured value behind an acceptance verdict, shown in the terminal summary."""
    details = request.config.stash[ACCEPTANCE_DETAILS]

    def note(text):
        details[request.node.nodeid] = text
        print(text)
    return note


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            name = rep.nodeid.rsplit("::", 1)[-1]
            if "test_acceptance.py" in rep.nodeid and name.startswith("test_criterion_") and rep.when == "call" \
                    or (outcome == "error" and "test_criterion_" in name):
                rows.append((int(name.split("_")[2]), name, "PASS" if outcome == "passed" else "FAIL", rep.nodeid))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    details = config.stash[ACCEPTANCE_DETAILS]
    for number, name, verdict, nodeid in sorted(rows):
        extra = details.get(nodeid, "")
        terminalreporter.write_line(f"criterion {number:2d} {verdict}  {name}" + (f"  [{extra}]" if extra else ""))
