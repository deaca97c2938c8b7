"""Smoke test for the Python bindings: node tables, index plans, a small
study and the exactness suite."""

import json
import math

import sparsecoll_py as sc

CONFIG = """
[model]
psi = { kind = "constant-one-term", sigma = 0.5 }
dims = 1

[study]
mode = "quadrature"
budgets = [4, 8, 16, 32]
max_level = 10
reference_level = 12
"""


def check_nodes():
    points, weights = sc.nodes("gauss-hermite", 2)
    root3 = math.sqrt(3.0)
    assert all(abs(p - e) < 1e-14 for p, e in zip(points, [-root3, 0.0, root3])), points
    assert all(abs(w - e) < 1e-14 for w, e in zip(weights, [1 / 6, 2 / 3, 1 / 6])), weights
    try:
        sc.nodes("chebyshev", 3)
    except ValueError:
        pass
    else:
        raise AssertionError("unknown family accepted")


def check_plan():
    report = json.loads(sc.index_plan(CONFIG, budget=16))
    stats = report["stats"]
    assert stats["cardinality"] >= 1
    assert stats["max_level"] <= 10


def check_study():
    summary = json.loads(sc.study(CONFIG))
    errors = [row["error"] for row in summary["rows"]]
    assert len(errors) == 4
    assert errors[-1] < errors[0], errors
    print(f"study: errors {', '.join(f'{e:.3e}' for e in errors)}, fitted rate {summary['fitted_rate']:.3f}")


def check_exactness():
    failures = [name for name, passed, _ in sc.exactness() if not passed]
    assert not failures, failures


if __name__ == "__main__":
    check_nodes()
    check_plan()
    check_study()
    check_exactness()
    print("smoke test passed")
