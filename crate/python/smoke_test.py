#!/usr/bin/env python3
"""Smoke test for the sansolve_py extension module.

Builds nothing itself: it looks for the compiled extension next to this
script or under ../target/{release,debug}. Build it first with

    cargo build --release -p sansolve-python
"""

import math
import pathlib
import shutil
import sys
import tempfile

HERE = pathlib.Path(__file__).resolve().parent


def load_module():
    candidates = [
        HERE / "sansolve_py.so",
        HERE.parent / "target" / "release" / "libsansolve_py.so",
        HERE.parent / "target" / "debug" / "libsansolve_py.so",
    ]
    for cand in candidates:
        if cand.is_file():
            if cand.name.startswith("lib"):
                staged = HERE / "sansolve_py.so"
                if staged != cand:
                    shutil.copyfile(cand, staged)
            sys.path.insert(0, str(HERE))
            import sansolve_py

            return sansolve_py
    sys.exit(
        "sansolve_py extension not found; run `cargo build --release -p sansolve-python` first"
    )


def main():
    sp = load_module()

    # scalar calculus
    v, d1, d2 = sp.loss_eval("logistic", 0.0, 1.0)
    assert abs(v - math.log(2.0)) < 1e-12
    assert abs(d1 + 0.5) < 1e-12 and abs(d2 - 0.25) < 1e-12

    # synthetic problem: determinism and metadata
    prob = sp.synth_problem(300, 8, seed=7)
    again = sp.synth_problem(300, 8, seed=7)
    assert prob.n == 300 and prob.d == 8
    assert prob.lmax() == again.lmax()
    f0, g0 = prob.objective([0.0] * prob.d)
    assert abs(f0 - math.log(2.0)) < 1e-12  # zero margins everywhere

    # a solver run reaches the tolerance and reports a sane trace
    result = sp.run_solver(prob, solver="san", seed=1, grad_tol=1e-6, max_passes=50.0)
    assert result.status == "grad_tol", result
    passes = [row[0] for row in result.rows]
    assert passes == sorted(passes) and passes[0] == 0.0
    assert result.final_grad_norm() <= 1e-6
    assert prob.grad_norm(result.w) <= 1e-6

    # same seed, same trace
    result2 = sp.run_solver(prob, solver="san", seed=1, grad_tol=1e-6, max_passes=50.0)
    assert [r[:3] for r in result.rows] == [r[:3] for r in result2.rows]

    # baselines agree on the minimizer location
    sag = sp.run_solver(prob, solver="sag", seed=1, grad_tol=1e-6, max_passes=80.0)
    assert sag.status == "grad_tol"
    gap = max(abs(a - b) for a, b in zip(sag.w, result.w))
    assert gap < 1e-3, gap

    # LibSVM loading end to end
    with tempfile.TemporaryDirectory() as tmp:
        path = pathlib.Path(tmp) / "tiny.libsvm"
        lines = []
        for i in range(40):
            y = i % 2
            x = 1.0 + 0.01 * i if y else -1.0 - 0.01 * i
            lines.append(f"{y} 1:{x:.3f} 3:{0.05 * (i % 4):.2f}")
        path.write_text("\n".join(lines) + "\n")
        data = sp.load_libsvm(str(path))
        assert data.n == 40 and data.d == 4  # 3 features + intercept
        run = sp.run_solver(data, solver="svrg", seed=3, grad_tol=1e-5, max_passes=60.0)
        assert run.status == "grad_tol", run

    # bad input surfaces as ValueError
    try:
        sp.run_solver(prob, solver="adam")
    except ValueError:
        pass
    else:
        sys.exit("expected ValueError for an unknown solver")

    print("smoke test passed")


if __name__ == "__main__":
    main()
