import numpy as np
import pytest

from posepool.data_io import write_features, write_poses
from posepool.pose_select import PoseSet

_acceptance = []


def pytest_runtest_makereport(item, call):
    if call.when != "call" or item.module.__name__.split(".")[-1] != "test_acceptance":
        return
    doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
    _acceptance.append(("PASS" if call.excinfo is None else "FAIL", doc))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for status, doc in _acceptance:
        terminalreporter.write_line(f"{status}  {doc}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def write_video(tmp_path):
    def _write(video_id, poses, feats, root=None):
        root = root or tmp_path
        write_poses(root / f"{video_id}.pose.csv", PoseSet(video_id, poses))
        write_features(root / f"{video_id}.feat.bin", feats)
        return root / video_id

    return _write
