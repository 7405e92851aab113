import pytest

from franson_qkd.qber_model import LinkBudget, SourceParams

_CRITERIA: list[tuple[str, bool, str]] = []


class _Recorder:
    def __call__(self, name: str, ok: bool, detail: str = "") -> bool:
        _CRITERIA.append((name, bool(ok), detail))
        return bool(ok)


@pytest.fixture
def criterion():
    return _Recorder()


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _CRITERIA:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")


@pytest.fixture
def lab_budget():
    # p_cs is the average of the two detectors, nu the value measured during the run
    return LinkBudget(
        source=SourceParams(mu=0.64, nu=0.011, f_alice=1e5),
        link_loss_db=0.0,
        bob_loss_db=5.2,
        eta_d=0.084,
        p_cs=3.9e-5,
        visibility=0.918,
    )


@pytest.fixture
def ideal_budget():
    return LinkBudget(
        source=SourceParams(mu=1.0, nu=0.0, f_alice=1e5),
        bob_loss_db=0.0,
        eta_d=1.0,
        p_cs=0.0,
        visibility=1.0,
    )
