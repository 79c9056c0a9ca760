import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

# acceptance verdict lines, filled by tests/test_acceptance.py
CRITERIA = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        terminalreporter.write_line(CRITERIA[n])


@pytest.fixture(scope="session")
def glyph_dir(tmp_path_factory):
    from signsynth.glyphs import write_canonicals

    return write_canonicals(tmp_path_factory.mktemp("canon"))


@pytest.fixture(scope="session")
def background_dir(tmp_path_factory):
    from signsynth.glyphs import write_backgrounds

    return write_backgrounds(tmp_path_factory.mktemp("bg"), seed=5, count=6, size=48)
