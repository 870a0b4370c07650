import pytest

_verdicts: dict[str, tuple[str, str, str]] = {}


@pytest.fixture
def note(request):
    """Attach a measured-value summary to the acceptance verdict line."""
    def add(text):
        request.node.user_properties.append(("detail", text))
    return add


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    rep = (yield).get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or not mark.args:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        detail = "; ".join(v for k, v in item.user_properties if k == "detail")
        _verdicts[mark.args[0]] = ("PASS" if rep.passed else "FAIL", mark.args[1], detail)


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_verdicts, key=lambda k: int(k[1:])):
        verdict, title, detail = _verdicts[key]
        line = f"{key:<4}{verdict}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
