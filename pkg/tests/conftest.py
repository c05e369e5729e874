import numpy as np
import pytest

from fokkerlab.worldline import SwitchingProfile, Worldline

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    number, title = mark.args
    ok, _ = _CRITERIA.get(number, (True, title))
    if rep.failed or (rep.when == "call" and not rep.passed):
        ok = False
    _CRITERIA[number] = (ok, title)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        ok, title = _CRITERIA[number]
        terminalreporter.write_line("criterion %2d %-45s %s" % (number, title, "PASS" if ok else "FAIL"))


def curved_worldline(K, T=10.0, amp=(0.3, 0.1, 0.0), offset=(0.0, 0.0, 0.0), mass=1.0,
                     profile=None, lapse_mod=0.0):
    tau = np.linspace(0.0, 1.0, K)
    pts = np.column_stack([
        T * tau,
        offset[0] + amp[0] * np.sin(np.pi * tau),
        offset[1] + amp[1] * np.sin(2 * np.pi * tau),
        offset[2] + amp[2] * tau,
    ])
    N = T * (1.0 + lapse_mod * np.sin(np.pi * tau))
    return Worldline(pts, N, mass, profile or SwitchingProfile.off())


@pytest.fixture
def charged_pair():
    K = 65
    w1 = curved_worldline(K, profile=SwitchingProfile(0.2, 2.0, 8.0, 1.5), lapse_mod=0.1)
    w2 = curved_worldline(K, amp=(0.2, 0.0, 0.1), offset=(1.0, 0.0, 0.0), mass=1.3,
                          profile=SwitchingProfile(-0.2, 1.0, 9.0, 1.0))
    return w1, w2
