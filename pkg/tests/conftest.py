import sys

import numpy as np
import pytest

from depthboot.geometry import CameraModel, mount_extrinsic


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_cam():
    # 40x30 camera at 0.45 m, looking straight down the corridor
    return CameraModel(30.0, 30.0, 20.0, 15.0, 40, 30, mount_extrinsic(0.0, 0.0, 0.45))


@pytest.fixture(scope="session")
def preset_run(tmp_path_factory):
    """Generate and replay a bundled preset once per session: ``preset_run(name) -> (bundle, result)``."""
    from depthboot.replay import generate_sequence, load_scenario, run_replay

    cache = {}

    def run(name):
        if name not in cache:
            root = tmp_path_factory.mktemp(name)
            scenario = load_scenario(name)
            b = generate_sequence(scenario, root / "bundle")
            cache[name] = (b, run_replay(b, scenario.configurations, root / "report"))
        return cache[name]

    return run


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("[")[1].split("]")[0])):
            terminalreporter.write_line(line)
