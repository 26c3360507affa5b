"""Smoke test of the pyelabc extension module.

Build and install first:
    maturin build --release -m crates/python/Cargo.toml
    pip install target/wheels/pyelabc-*.whl
"""

import json
import math

import pyelabc


def check_solver():
    sol = pyelabc.solve_el([[-1.0], [2.0]])
    assert sol.status == "interior", sol
    assert abs(sol.weights[0] - 2.0 / 3.0) < 1e-10
    assert abs(sol.log_el - 0.5 * (math.log(2.0 / 3.0) + math.log(1.0 / 3.0))) < 1e-10

    sol = pyelabc.solve_el([[1.0], [2.0], [3.0]])
    assert sol.status == "infeasible"
    assert sol.log_el == float("-inf")
    assert pyelabc.definitely_infeasible([[1.0, -1.0], [2.0, -2.0]])


def check_estimators():
    assert abs(pyelabc.el_loglik([[-1.0], [1.0]], [0.0]) + math.log(2.0)) < 1e-12
    a = math.sqrt(1.5)
    value = pyelabc.synthetic_loglik([[-a], [0.0], [a], [0.0]], [2.0])
    assert abs(value - (-0.5 * math.log(2.0 * math.pi) - 2.0)) < 1e-12


def check_sampling():
    data = pyelabc.simulate("normal", [0.0], 100, 7)
    assert len(data) == 100
    values, labels = pyelabc.summarize("normal", data, "mean_median")
    assert labels == ["mean", "median"]

    post = pyelabc.Posterior("normal", data, summaries="mean", m=25)
    assert math.isfinite(post.log_kernel([0.0], 1))
    chain = post.sample(iterations=2000, burnin=2000, seed=3)
    assert len(chain) == 2000
    mean = sum(d[0] for d in chain.draws) / len(chain)
    exact = sum(data) / 101.0
    assert abs(mean - exact) < 0.1, (mean, exact)
    summary = json.loads(chain.summary_json())
    assert summary[0]["name"] == "mu"

    rows = pyelabc.density(chain.param_names, chain.draws, 64)
    assert len(rows) == 64


def check_validation():
    try:
        pyelabc.run(json.dumps({"example": "poisson"}))
    except ValueError as e:
        assert "poisson" in str(e)
    else:
        raise AssertionError("unknown example accepted")


def check_run():
    config = {"example": "normal", "iterations": 1000, "burnin": 1000, "seed": 5}
    first = json.loads(pyelabc.run(json.dumps(config)))
    second = json.loads(pyelabc.run(json.dumps(config)))
    assert first == second
    assert first["posterior"][0]["name"] == "mu"


if __name__ == "__main__":
    check_solver()
    check_estimators()
    check_sampling()
    check_validation()
    check_run()
    print("pyelabc smoke test passed")
