import pytest

from cutplate import _kernels_py, kernels

try:
    from cutplate import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    BACKENDS["cython"] = _compiled


@pytest.fixture(params=sorted(BACKENDS))
def backend(request, monkeypatch):
    """Run the test once per available kernel backend."""
    monkeypatch.setattr(kernels, "_impl", BACKENDS[request.param])
    return request.param


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")
    config._acceptance = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    store = item.config._acceptance
    num, title = marker.args
    entry = store.setdefault(num, {"title": title, "ok": True, "seen": False, "detail": []})
    if call.when == "call" or call.excinfo is not None:
        entry["seen"] = True
        if call.excinfo is not None and not call.excinfo.errisinstance(pytest.skip.Exception):
            entry["ok"] = False
        detail = getattr(item, "acceptance_detail", None)
        if call.when == "call" and detail:
            entry["detail"].append(detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = getattr(config, "_acceptance", {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(store):
        e = store[num]
        status = "PASS" if (e["ok"] and e["seen"]) else "FAIL"
        detail = "; ".join(e["detail"])
        terminalreporter.write_line(f"criterion {num} {status}: {e['title']}" + (f" [{detail}]" if detail else ""))
