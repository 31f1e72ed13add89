import json

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def random_table(S, k, seed, floor=0.0):
    rng = np.random.default_rng(seed)
    t = rng.dirichlet(np.ones(S), size=S**k) + floor
    return t / t.sum(axis=1, keepdims=True)


@pytest.fixture
def table_file(tmp_path):
    def make(rows, S=2, k=1, name="m.json"):
        path = tmp_path / name
        path.write_text(json.dumps({"alphabet_size": S, "depth": k, "probs": np.asarray(rows).tolist()}))
        return path

    return make


# acceptance results, printed as one line per criterion at the end of the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split("-")[1])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key} {'PASS' if ok else 'FAIL'}: {detail}")
