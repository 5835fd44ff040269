import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from weibosent import _purepy  # noqa: E402

try:
    from weibosent import _speedups
except ImportError:  # extension not built
    _speedups = None

BACKENDS = [pytest.param(_purepy, id="python")]
if _speedups is not None:
    BACKENDS.append(pytest.param(_speedups, id="cython"))


@pytest.fixture(params=BACKENDS, scope="session")
def backend(request):
    return request.param


@pytest.fixture
def write_lines(tmp_path):
    def _write(lines, name="corpus.ndjson"):
        path = tmp_path / name
        path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        return path

    return _write


def pytest_terminal_summary(terminalreporter):
    import sys

    for module in list(sys.modules.values()):
        lines = getattr(module, "ACCEPTANCE_RESULTS", None)
        if lines:
            terminalreporter.section("acceptance criteria")
            for line in lines:
                terminalreporter.write_line(line)
            return
