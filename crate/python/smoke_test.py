"""Smoke test for the blowup_lab extension module.

Build it with
    cargo build --release -p blowup-python --features extension-module
    cp target/release/libblowup_lab.so python/blowup_lab.so
and run from the repository root.
"""

import math
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent))

import blowup_lab as bl

ROOT = pathlib.Path(__file__).resolve().parent.parent


def main():
    assert math.isclose(bl.ode_blowup_time(10.0, 1.0, 1.0, 2.0), 0.1)
    assert math.isclose(bl.k_of_a(1.0, 3.0), 2 ** -0.5)
    assert math.isclose(bl.rate_constant(1.0, 3.0), 1.0)
    assert bl.gamma_exponent(2.0) == 0.25

    problem = bl.Problem.reference(40.0)
    ok, worst = problem.initial_condition(0.0125)
    assert not ok and worst < 0

    traj = bl.simulate(problem, 0.0125, eta=0.002)
    assert traj.stop_reason == "threshold-reached"
    est = traj.analyze()
    print(f"M=40: T_est*M = {est['t_est'] * 40:.5f}, rate = {est['rate_exponent']:.4f}")
    assert abs(est["rate_exponent"] + 1.0) < 0.05

    try:
        problem.upper_bound(0.0125)
    except ValueError as e:
        print(f"no upper bound at M=40: {e}")
    bound = problem.with_amplitude(4000.0).upper_bound(0.0125)
    assert bound["t_upper"] > 1 / 4000

    exp = bl.Experiment(str(ROOT / "configs" / "reference.ini"))
    rows, summary = exp.sweep(jobs=2)
    assert [r["m"] for r in rows] == exp.m_values
    for check in summary["checks"]:
        print(f"  {check['name']}: {'PASS' if check['passed'] else 'FAIL'}")
    assert all(c["passed"] for c in summary["checks"])

    try:
        bl.Experiment.from_str("[domain]\ndimension = 4\n")
    except ValueError:
        pass
    else:
        raise AssertionError("bad config accepted")
    print("smoke test passed")


if __name__ == "__main__":
    main()
