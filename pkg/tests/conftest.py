import pytest

from motbench import io


@pytest.fixture
def entry():
    """Shorthand MotEntry factory with sane defaults."""
    def make(frame, id=1, left=100.0, top=100.0, w=10.0, h=10.0, conf=1.0,
             x=-1.0, y=-1.0, z=-1.0):
        return io.MotEntry(frame=frame, id=id, bb_left=left, bb_top=top,
                           bb_width=w, bb_height=h, conf=conf, x=x, y=y, z=z)
    return make


def pytest_runtest_logreport(report):
    # one visible pass/fail line per acceptance criterion
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        outcome = "PASS" if report.passed else "FAIL"
        print(f"\n[acceptance] {name}: {outcome}", flush=True)
