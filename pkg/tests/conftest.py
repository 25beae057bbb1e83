import numpy as np
import pytest

from skipflow.imaging import smooth

# criterion number -> (passed, description, detail)
_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when not in ("setup", "call"):
        return
    if rep.when == "setup" and rep.passed:
        return
    n, title = marker.args
    detail = dict(item.user_properties).get("detail", "")
    if rep.failed and not detail:
        detail = str(call.excinfo.value).splitlines()[0] if call.excinfo else "error"
    _ACCEPTANCE[n] = (rep.passed, title, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        passed, title, detail = _ACCEPTANCE[n]
        line = f"criterion {n:2d} {'PASS' if passed else 'FAIL'}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))


def textured(rng, h=128, w=128, lo=30.0, hi=220.0):
    """Band-limited random texture: uniform noise with one binomial blur."""
    img = smooth(rng.uniform(0.0, 1.0, (h, w)))
    img = (img - img.min()) / (img.max() - img.min())
    return lo + (hi - lo) * img


def shift_image(img, dx, dy):
    """Content moves by (+dx, +dy): out[y, x] = img[y - dy, x - dx], wrapping."""
    return np.roll(np.roll(img, dy, axis=0), dx, axis=1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
