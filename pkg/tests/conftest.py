from __future__ import annotations

import pytest

from predterms import compute_terms, complete_cases, fit
from predterms.datasets import load_dataset

GERMAN_FORMULA = "credit ~ months + purpose + amount + rate + age + sex + nclients"
NEW_CREDIT_CASE = {
    "purpose": "u.car", "months": 36, "rate": 2, "amount": 6000, "age": 55, "sex": "F", "nclients": 1,
}

# acceptance results collected by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


@pytest.fixture(scope="session")
def topgear():
    return load_dataset("topgear")


@pytest.fixture(scope="session")
def german():
    return load_dataset("germancredit")


@pytest.fixture(scope="session")
def titanic():
    return load_dataset("titanic")


@pytest.fixture(scope="session")
def gpm(topgear):
    m, _ = fit(topgear, "1/MPG ~ accel + weight + fuel + drive")
    data, _ = complete_cases(topgear, m.plan.columns)
    return m, data, compute_terms(m, data)


@pytest.fixture(scope="session")
def credit(german):
    m, _ = fit(german, GERMAN_FORMULA, "binomial")
    return m, german, compute_terms(m, german)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {title}  {detail}")
