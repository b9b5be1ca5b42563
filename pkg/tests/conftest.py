import pytest

from dsee_anypath import bundled_topology, parse_topology


@pytest.fixture
def three_node():
    return bundled_topology("three_node")


@pytest.fixture
def seven_node():
    return bundled_topology("seven_node")


@pytest.fixture
def chain3():
    return parse_topology("nodes 3\nsource 1\ndest 3\nlink 1 2 1.0\nlink 2 3 1.0\n")



def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")
    config._acceptance_results = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None and rep.when == "call":
        number, title = marker.args
        item.config._acceptance_results.append(
            (number, title, rep.passed, getattr(item, "acceptance_detail", ""))
        )


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = sorted(getattr(config, "_acceptance_results", []))
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in results:
        status = "PASS" if passed else "FAIL"
        line = f"criterion {number:>2}: {status}  {title}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)


@pytest.fixture
def detail(request):
    """Attach measured values to the acceptance summary line."""

    def record(text):
        request.node.acceptance_detail = text
        print(f"{request.node.name}: {text}")

    return record
