//! The module as seen from an embedded interpreter.

use std::ffi::CStr;
use std::sync::Once;

use eckart::eckart as bindings;
use pyo3::prelude::*;

static INIT: Once = Once::new();

fn run(code: &CStr) -> PyResult<()> {
    INIT.call_once(|| {
        pyo3::append_to_inittab!(bindings);
        Python::initialize();
    });
    Python::attach(|py| py.run(code, None, None))
}

#[test]
fn shape_parameters_and_transparency() {
    run(c"
import eckart
assert eckart.Potential(-861.0).s() == 41
assert abs(eckart.Potential(2485.0).s().imag - 70.5) < 0.05
well = eckart.Potential(-15.0)
assert all(abs(abs(well.transmission(p)) - 1) < 1e-10 for p in (0.2, 1.0, 4.0))
")
    .unwrap();
}

#[test]
fn errors_map_to_python_exceptions() {
    run(c"
import eckart
try:
    eckart.Packet(0.5, -0.1, 0.0)
except ValueError as e:
    assert 'dp' in str(e) or 'width' in str(e) or 'positive' in str(e), str(e)
else:
    raise AssertionError('no ValueError')
")
    .unwrap();
}

#[test]
fn packet_round_trip() {
    run(c"
import eckart
pk = eckart.Packet(1.5, 0.1, -100.0)
grid = pk.grid(500.0, n=401)
vals, scale = eckart.transmitted(eckart.Potential(0.0), pk, grid, 500.0)
free = eckart.free(pk, grid, 500.0)
import cmath
assert max(abs(v * cmath.exp(scale) - f) for v, f in zip(vals, free)) < 1e-8
")
    .unwrap();
}
