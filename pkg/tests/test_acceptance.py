"""Acceptance gate at baseline size (unit cube, m=31, p=2.5).

Each criterion prints one PASS/FAIL line; the lines are also repeated in the
terminal summary. Run directly with ``python tests/test_acceptance.py``.
"""

import os
import subprocess
import sys
import time

import pytest

from nehari_flow import acceptance

LINES = []

# stated runtime budgets in seconds
BUDGET = {1: 30, 2: 10, 3: 10, 4: 20, 5: 60, 6: 120, 7: 300, 8: 300, 9: 600, 10: 300, 11: 600, 12: 600,
          13: 1200, 14: 60}


@pytest.fixture(scope="module")
def ctx():
    os.environ.setdefault("NEHARI_FLOW_THREADS", "4")
    return acceptance.Context(acceptance.BASELINE, seed=0)


def _record(res, elapsed):
    line = f"{res.line()} [{elapsed:.1f}s]"
    LINES.append(line)
    print(line)


@pytest.mark.slow
@pytest.mark.parametrize("k", range(1, 14))
def test_criterion(ctx, k):
    func = acceptance.CRITERIA[k - 1]
    t0 = time.perf_counter()
    res = func(ctx)
    elapsed = time.perf_counter() - t0
    _record(res, elapsed)
    assert res.passed, res.detail
    assert elapsed <= BUDGET[k]


def _selftest_json(out):
    env = dict(os.environ)
    subprocess.run([sys.executable, "-m", "nehari_flow.cli", "selftest", "--seed", "0", "--out", str(out)],
                   env=env, capture_output=True, text=True, check=False)
    return (out / "selftest.json").read_bytes()


@pytest.mark.slow
def test_criterion_14_determinism(tmp_path):
    t0 = time.perf_counter()
    a = _selftest_json(tmp_path / "a")
    b = _selftest_json(tmp_path / "b")
    elapsed = time.perf_counter() - t0
    ok = a == b
    res = acceptance.CriterionResult(14, "selftest determinism", ok, {}, "summary JSON byte-identical" if ok
                                     else "summary JSON differs between runs")
    _record(res, elapsed)
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
