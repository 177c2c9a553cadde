import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make `oracles` importable

from s3i_pointhop.geometry import PointCloud
from s3i_pointhop.synthetic import generic_blob


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def make_generic_cloud(seed, n=200) -> PointCloud:
    """A cloud with distinct pairwise distances, a well-separated covariance
    spectrum, and clear per-axis skew: the regime where canonicalization and
    kNN results are stable under rotation."""
    return PointCloud(generic_blob(n, np.random.default_rng(seed)))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one PASS/FAIL line per acceptance criterion at the end of a run."""
    lines = []
    for status in ("passed", "failed", "error", "skipped"):
        for report in terminalreporter.stats.get(status, []):
            if getattr(report, "when", "call") != "call" and status != "error":
                continue
            if "test_acceptance.py" not in str(getattr(report, "nodeid", "")):
                continue
            name = report.nodeid.split("::")[-1]
            lines.append((name, status.upper()))
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for name, status in sorted(set(lines)):
            terminalreporter.write_line(f"{status:>7}  {name}")
