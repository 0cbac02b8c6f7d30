import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from solidopt import _kernels_py  # noqa: E402
from solidopt.gp import GpParams, build_surface  # noqa: E402

try:
    from solidopt import _kernels_c
except ImportError:
    _kernels_c = None

BACKENDS = [pytest.param(_kernels_py, id="python")]
BACKENDS.append(pytest.param(_kernels_c, id="cython", marks=pytest.mark.skipif(_kernels_c is None,
                                                                                reason="extension not built")))


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_params(rng, p, b=None):
    return GpParams(
        mu=float(rng.normal()),
        eta=float(rng.uniform(0.5, 3.0)),
        r=float(rng.uniform(0.5, 0.98)),
        u=rng.gamma(2.0, 2.0, size=p),
        b=np.ones(p, dtype=np.int8) if b is None else b,
        theta=0.5,
    )


def random_surface(rng, n=12, p=3):
    X = rng.random((n, p))
    y = np.sin(3 * X[:, 0]) + X[:, -1] ** 2 + 0.1 * rng.normal(size=n)
    return build_surface(random_params(rng, p), X, y)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = [mod.RESULTS[k] for k in sorted(mod.RESULTS)] if mod is not None else []
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
