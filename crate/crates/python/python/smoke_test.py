"""Smoke test for the dpdtol extension module.

Build and run from the workspace root:

    cargo build --release -p dpdtol-py --features extension-module
    cp target/release/libdpdtol_py.so crates/python/python/dpdtol.so
    python3 crates/python/python/smoke_test.py
"""

import json
import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import dpdtol  # noqa: E402


def main():
    assert dpdtol.eta_from_epsilon(0.1) == 0.05
    assert dpdtol.eta_from_epsilon(4.0) == 0.125

    tight, relaxed = dpdtol.theorem_bound(2, 1.0, 2.0)
    assert tight == 1.0 + 4.0 * dpdtol.master_bound_value(2, 1.0, 0.125)
    assert abs(relaxed - 1500.0 * math.log(2)) < 1e-9

    assert dpdtol.block_of(7) == 2
    assert dpdtol.prefix_window(3) == (5, 8)
    w = dpdtol.softmax_weights([0.0, 1.0], 0.125)
    assert abs(sum(w) - 1.0) < 1e-12 and w[0] > w[1]

    env = dpdtol.Environment.bernoulli([0.2, 0.8])
    assert env.k == 2 and env.gap_profile()["best_action"] == 0
    rows = env.sample(5, seed=1)
    assert len(rows) == 5 and all(x in (0.0, 1.0) for r in rows for x in r)

    policy = dpdtol.RpSoftmax(2, 0.25, seed=3)
    for t in range(1, 20):
        a = policy.choose(t)
        assert a in (0, 1)
        policy.observe(t, [0.0, 1.0])
    assert policy.current_block == 4

    trace = dpdtol.run_episode(env, "rp_softmax", 1.0, 256, seed=9)
    assert trace[-1][0] == 256 and trace[-1][1] >= 0.0
    assert trace == dpdtol.run_episode(env, "rp_softmax", 1.0, 256, seed=9)

    report = dpdtol.audit(2, 7, 0.25)
    assert report["pass"] and report["max_ratio"] <= math.exp(0.25)
    assert report["current_block_max_ratio"] == 1.0

    exact, _ = dpdtol.fm(env, 4, 0.125)
    mc, ci = dpdtol.fm(env, 4, 0.125, samples=100_000, seed=1)
    assert abs(exact - mc) <= ci

    config = {
        "environment": {"kind": "bernoulli", "means": [0.3, 0.6]},
        "epsilon": 0.5,
        "horizon": 64,
        "algorithms": [{"kind": "rp_softmax"}, {"kind": "ftl"}],
        "trials": 4,
        "master_seed": 11,
    }
    csv, summary = dpdtol.simulate(json.dumps(config))
    assert csv.startswith("algorithm,trial,t,pseudoregret\n")
    assert json.loads(summary)["version"] == dpdtol.__version__
    assert csv == dpdtol.simulate(json.dumps(config), threads=1)[0]

    try:
        dpdtol.Environment.bernoulli([0.5, 0.5]).gap_profile()
    except ValueError:
        pass
    else:
        raise AssertionError("tied means should be rejected")

    assert dpdtol.selftest()
    print("smoke test passed")


if __name__ == "__main__":
    main()
