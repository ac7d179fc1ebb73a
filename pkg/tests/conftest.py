import os
import time
from pathlib import Path

import pytest

from mdnlab import config, pipeline

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def desk_run(tmp_path_factory):
    """The default-configuration pipeline (200 episodes, 2 models, 10 x 500 dreams) and its wall time.

    Set MDNLAB_DESK_RUN to a folder to reuse an earlier run: it is created on
    first use and its timing is kept in ``<folder>.elapsed``.
    """
    reuse = os.environ.get("MDNLAB_DESK_RUN")
    out = Path(reuse) if reuse else tmp_path_factory.mktemp("desk") / "run"
    stamp = out.with_name(out.name + ".elapsed")
    if reuse and stamp.exists() and (out / "analysis" / "report.json").exists():
        return out, float(stamp.read_text())
    cfg = config.load(None, environ={})
    t0 = time.perf_counter()
    pipeline.run_all(cfg, out, render=True, progress=lambda s: None)
    elapsed = time.perf_counter() - t0
    stamp.write_text(repr(elapsed))
    return out, elapsed


@pytest.fixture
def record_criterion():
    def record(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
