import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hamse.audio import render_audio, write_wav  # noqa: E402
from hamse.hts import parse_hts  # noqa: E402

from helpers import CHORALE_HTS  # noqa: E402


def render_chorale(directory: Path) -> Path:
    """Write the chorale's additive-sine rendering as ``take1.wav``."""
    score = parse_hts(CHORALE_HTS.read_text(encoding="utf-8"))
    path = directory / "take1.wav"
    path.write_bytes(write_wav(render_audio(score, score.tempo_bpm)))
    return path


@pytest.fixture(scope="session")
def chorale_wav(tmp_path_factory):
    return render_chorale(tmp_path_factory.mktemp("audio"))


# acceptance criteria report: (number, title, passed, seconds, limit)
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n, title, passed, seconds, limit in sorted(ACCEPTANCE):
        budget = f" (limit {limit:g} s)" if limit else ""
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if passed else 'FAIL'} "
                                    f"{seconds:6.2f} s{budget}  {title}")
