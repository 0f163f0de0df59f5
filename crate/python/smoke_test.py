# SPDX-License-Identifier: Apache-2.0
"""Smoke test for the `qng` extension module.

Uses an installed `qng` when importable, otherwise loads the library built
by `cargo build -p qng-python` from target/{release,debug}.
"""

import importlib.machinery
import importlib.util
import math
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    try:
        import qng

        return qng
    except ImportError:
        pass
    for profile in ("release", "debug"):
        lib = ROOT / "target" / profile / "libqng.so"
        if lib.exists():
            loader = importlib.machinery.ExtensionFileLoader("qng", str(lib))
            spec = importlib.util.spec_from_file_location("qng", lib, loader=loader)
            module = importlib.util.module_from_spec(spec)
            loader.exec_module(module)
            return module
    sys.exit("qng not installed and no target/*/libqng.so; run `cargo build -p qng-python`")


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b}"


def main():
    qng = load()
    print("qng", qng.__version__, "kinds:", ", ".join(qng.THRESHOLD_KINDS))

    # classical bound for (0,1): best coherent state, |α|² = 1/2
    close(qng.threshold_value("classical", 0, 1), math.sqrt(2) * math.exp(-0.5), 1e-6)
    genuine = qng.threshold("genuine-n", 0, 2)
    close(genuine["value"], 0.86, 0.01)
    assert set(genuine["argmax"]) == {"xi_mag", "xi_phase", "alpha_mag", "alpha_phase"}

    report = qng.certify(0, 4, 0.84, 0.04)
    verdicts = {a["kind"]: a["verdict"] for a in report["assessments"]}
    assert verdicts["genuine-n"], report
    close(qng.depth(0.84, 0, 4)["depth"], 0.01, 0.005)

    # vacuum column of D(α) is a coherent state
    alpha = 0.7
    amp = qng.sdf_amplitude(1, 0, 0.0, 0.0, alpha, 0.0)
    close(abs(amp - alpha * math.exp(-alpha**2 / 2)), 0.0, 1e-12)

    rho = [[0.5, 0.5j], [-0.5j, 0.5]]
    close(qng.coherence(rho, 0, 1), 1.0, 1e-12)

    mc = qng.mc_verify("classical", 0, 1, samples=2000, seed=3)
    assert mc["violations"] == 0 and mc["samples"] == 2000

    points = qng.decay_scan(0, 2, [0.0, 0.002], dephasing_rate=50.0, phases=8)
    close(points[0]["contrast"], 1.0, 1e-6)
    assert points[1]["contrast"] < points[0]["contrast"]
    limit = qng.thermal_depth_limit(0, 2, 3.2, [0.0, 0.01])
    close(limit[0][1], 0.0764, 1e-3)

    for bad in (lambda: qng.threshold_value("genuine-n", 2, 2), lambda: qng.certify(0, 1, 1.5)):
        try:
            bad()
        except ValueError as e:
            print("rejected:", e)
        else:
            raise AssertionError("domain error not raised")

    print("smoke test passed")


if __name__ == "__main__":
    main()
