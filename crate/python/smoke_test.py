"""Smoke test of the `eckart` Python module.

Install first with `pip install --no-build-isolation ./crates/py` (needs maturin),
or build with `cargo build --release -p eckart-py`; in the latter case the
shared library is picked up from target/release.
"""

import cmath
import importlib
import math
import os
import shutil
import sys
import tempfile


def load():
    try:
        return importlib.import_module("eckart")
    except ImportError:
        pass
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    for profile in ("release", "debug"):
        lib = os.path.join(root, "target", profile, "libeckart.so")
        if os.path.exists(lib):
            tmp = tempfile.mkdtemp()
            shutil.copy(lib, os.path.join(tmp, "eckart.so"))
            sys.path.insert(0, tmp)
            return importlib.import_module("eckart")
    sys.exit("eckart module not found: install it or run cargo build --release -p eckart-py")


def close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    ek = load()
    well = ek.Potential(-15.0)
    assert well.s() == 5, well.s()
    assert close(ek.Potential(1.0).s(), complex(-0.5, math.sqrt(7) / 2), 1e-12)

    # reflectionless well: |T| = 1
    for p in (0.1, 0.7, 3.0):
        assert close(abs(well.transmission(p)), 1.0, 1e-10)

    # T(-p*) = T(p)*
    barrier = ek.Potential(5.0)
    p = complex(1.3, 0.2)
    assert close(barrier.transmission(-p.conjugate()), barrier.transmission(p).conjugate(), 1e-12)

    log_mag, _ = ek.Potential(1e4).log_transmission(50.0)
    assert close(log_mag / math.log(10), -124.7319, 1e-6), log_mag

    poles = ek.poles(well, 8)
    assert len(poles) == 5 and all(q.class_ == "bound" for q in poles)

    xs = [-5 + 0.05 * i for i in range(201)]
    a = ek.eta(barrier, 1.5, xs)
    b = ek.eta(barrier, 1.5, xs, method="poles", n_max=64)
    err = math.sqrt(sum(abs(u - v) ** 2 for u, v in zip(a, b)) / sum(abs(v) ** 2 for v in a))
    assert err < 1e-3, err

    total = ek.sum_rule(barrier, 1.5, 70.0)
    assert close(total, barrier.transmission(1.5), 1e-6)

    pk = ek.Packet(0.5, 0.1, -100.0)
    grid = pk.grid(650.0, widths=10.0, n=4001)
    d = ek.com_delay(well, pk, grid, 650.0)
    assert abs(d - 4.0768) < 0.01, d

    values, log_scale = ek.transmitted(well, pk, grid, 650.0)
    exact, exact_scale = ek.transmitted(well, pk, grid, 650.0, n_poles=8)
    ratio = cmath.exp(exact_scale - log_scale)
    worst = max(abs(u - v * ratio) for u, v in zip(values, exact))
    assert worst < 1e-6, worst

    info = ek.phase_time(well, pk, 650.0)
    assert set(info) == {"tau_phase", "com_prediction", "velocity_shift", "broadness"}

    for bad in (lambda: ek.Packet(-1.0, 0.1, 0.0), lambda: ek.eta(well, 0.5, xs, method="fft")):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
