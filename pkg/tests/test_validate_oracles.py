import threading
import time

import pytest

from shock_ad.core.errors import HarnessIOError
from shock_ad.scripts import validate_oracles
from shock_ad.scripts.validate_oracles import CHECKS, OracleRunner


def test_shared_cases_are_built_once_under_concurrent_requests(mocker):
    mocker.patch.object(validate_oracles, "_cases", {})
    calls = []

    def build():
        calls.append(1)
        time.sleep(0.05)
        return object()

    seen = []
    threads = [threading.Thread(target=lambda: seen.append(validate_oracles._shared("slow", build))) for _ in range(4)]
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join()
    assert len(calls) == 1
    assert all(item is seen[0] for item in seen)


def test_quick_runner_skips_simulations():
    runner = OracleRunner(quick=True)
    assert runner.checks
    assert not any(check.simulation for check in runner.checks)
    assert len(runner.checks) < len(CHECKS)


def test_closure_checks_pass(tmp_path):
    runner = OracleRunner(output_dir=str(tmp_path), quick=True)
    runner.run_checks(max_workers=2)
    failed = [r.name for r in runner.results if not r.passed]
    assert failed == []
    runner.save_results()
    assert len(list(tmp_path.iterdir())) == 3


def test_unwritable_output_is_a_harness_io_error(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    runner = OracleRunner(output_dir=str(blocker / "out"), quick=True)
    with pytest.raises(HarnessIOError) as err:
        runner.save_results()
    assert err.value.path.startswith(str(blocker / "out"))
