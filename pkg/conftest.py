from __future__ import annotations

import pytest


@pytest.fixture(autouse=True)
def quiet_logs(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv('SQUID_FANIN_VERBOSE', '0')
