//! Python bindings: potentials, packets, transmission, poles, delay
//! distributions and transmitted packets.

use eckart_core::delay::{self, SpectralOptions};
use eckart_core::poles::{PoleClass, PoleKind, PoleOptions, PoleSet};
use eckart_core::potential::EckartPotential;
use eckart_core::transmission::transmission_exact;
use eckart_core::wavepacket::{self, GaussianPacket};
use eckart_core::{Complex, Error};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Domain(_) => PyValueError::new_err(e.to_string()),
        _ => PyArithmeticError::new_err(e.to_string()),
    }
}

/// Eckart potential `U0 / cosh^2(alpha x)` for a particle of mass `mu`.
#[pyclass(name = "Potential", frozen, from_py_object)]
#[derive(Clone)]
struct PyPotential {
    inner: EckartPotential,
}

#[pymethods]
impl PyPotential {
    /// Dimensionless potential (`alpha = mu = 1`) of strength `u0_bar`.
    #[new]
    fn new(u0_bar: f64) -> PyResult<Self> {
        if !u0_bar.is_finite() {
            return Err(PyValueError::new_err("u0_bar must be finite"));
        }
        Ok(PyPotential { inner: EckartPotential::dimensionless(u0_bar) })
    }

    #[staticmethod]
    fn dimensional(u0: f64, alpha: f64, mu: f64) -> PyResult<Self> {
        Ok(PyPotential { inner: EckartPotential::new(u0, alpha, mu).map_err(to_py)? })
    }

    #[getter]
    fn u0(&self) -> f64 {
        self.inner.u0
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu
    }

    /// Dimensionless strength `mu U0 / alpha^2`.
    fn strength(&self) -> f64 {
        self.inner.strength()
    }

    fn s(&self) -> Complex {
        self.inner.s()
    }

    fn classical_shift(&self, p0: f64) -> PyResult<Complex> {
        self.inner.classical_shift(p0).map_err(to_py)
    }

    /// `T(p)`; underflows to zero in deep tunnelling, see `log_transmission`.
    fn transmission(&self, p: Complex) -> PyResult<Complex> {
        Ok(transmission_exact(&self.inner, p).map_err(to_py)?.to_complex())
    }

    /// `(ln|T|, arg T)` at complex momentum `p`.
    fn log_transmission(&self, p: Complex) -> PyResult<(f64, f64)> {
        let v = transmission_exact(&self.inner, p).map_err(to_py)?;
        Ok((v.log_mag, v.phase))
    }

    fn __repr__(&self) -> String {
        format!("Potential(u0={}, alpha={}, mu={})", self.inner.u0, self.inner.alpha, self.inner.mu)
    }
}

/// Gaussian packet with mean momentum `p0`, momentum width `dp`, starting at `x0`.
#[pyclass(name = "Packet", frozen, from_py_object)]
#[derive(Clone)]
struct PyPacket {
    inner: GaussianPacket,
}

#[pymethods]
impl PyPacket {
    #[new]
    #[pyo3(signature = (p0, dp, x0, mu = 1.0))]
    fn new(p0: f64, dp: f64, x0: f64, mu: f64) -> PyResult<Self> {
        Ok(PyPacket { inner: GaussianPacket::with_mass(p0, dp, x0, mu).map_err(to_py)? })
    }

    #[getter]
    fn p0(&self) -> f64 {
        self.inner.p0
    }

    #[getter]
    fn dp(&self) -> f64 {
        self.inner.dp
    }

    #[getter]
    fn x0(&self) -> f64 {
        self.inner.x0
    }

    fn dx(&self) -> f64 {
        self.inner.dx()
    }

    fn velocity(&self) -> f64 {
        self.inner.velocity()
    }

    /// Uniform grid around the freely moving packet at time `t`.
    #[pyo3(signature = (t, shift = 0.0, widths = 8.0, n = 1001))]
    fn grid(&self, t: f64, shift: f64, widths: f64, n: usize) -> Vec<f64> {
        self.inner.grid(t, shift, widths, n)
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!("Packet(p0={}, dp={}, x0={}, mu={})", p.p0, p.dp, p.x0, p.mu)
    }
}

/// One singularity of `T(k)`.
#[pyclass(name = "Pole", frozen, get_all)]
struct PyPole {
    position: Complex,
    residue: Complex,
    /// `log10 |residue|`, finite when `residue` overflows.
    log10_residue: f64,
    order: u8,
    kind: &'static str,
    class_: &'static str,
    index: usize,
}

#[pymethods]
impl PyPole {
    fn __repr__(&self) -> String {
        format!("Pole(k={}, residue={}, kind={}, order={})", self.position, self.residue, self.kind, self.order)
    }
}

/// Every pole with index below `n_max` in both families.
#[pyfunction]
#[pyo3(signature = (potential, n_max = 64))]
fn poles(potential: &PyPotential, n_max: usize) -> PyResult<Vec<PyPole>> {
    let set = PoleSet::build(&potential.inner, n_max, &PoleOptions::default()).map_err(to_py)?;
    Ok(set
        .poles
        .iter()
        .map(|p| PyPole {
            position: p.position,
            residue: p.residue,
            log10_residue: p.ln_residue.log10_mag(),
            order: p.order,
            kind: match p.kind {
                PoleKind::I => "I",
                PoleKind::II => "II",
            },
            class_: match p.class {
                PoleClass::Bound => "bound",
                PoleClass::Resonance => "resonance",
                PoleClass::Threshold => "threshold",
            },
            index: p.index,
        })
        .collect())
}

/// Smooth part of the delay distribution `eta~(p0, x')` on `x_grid`.
///
/// `method` is `"spectral"` (contour integral of `T`) or `"poles"` (residue sum with `n_max` poles).
#[pyfunction]
#[pyo3(signature = (potential, p0, x_grid, method = "spectral", n_max = 64))]
fn eta(potential: &PyPotential, p0: f64, x_grid: Vec<f64>, method: &str, n_max: usize) -> PyResult<Vec<Complex>> {
    let dist = match method {
        "spectral" => delay::eta_spectral(&potential.inner, p0, &x_grid, &SpectralOptions::default()),
        "poles" => delay::eta_pole(&potential.inner, p0, &x_grid, n_max),
        other => return Err(PyValueError::new_err(format!("unknown method {other:?}; use 'spectral' or 'poles'"))),
    };
    Ok(dist.map_err(to_py)?.eta_smooth)
}

/// `delta_weight + \int eta~ dx'` by Gauss panels out to `reach`; reproduces `T(p0)`.
#[pyfunction]
fn sum_rule(potential: &PyPotential, p0: f64, reach: f64) -> PyResult<Complex> {
    delay::sum_rule_quadrature(&potential.inner, p0, reach).map_err(to_py)
}

/// Transmitted packet at time `t` as `(values, log_scale)`; `psi = values * exp(log_scale)`.
#[pyfunction]
#[pyo3(signature = (potential, packet, x_grid, t, n_poles = None))]
fn transmitted(
    py: Python<'_>,
    potential: &PyPotential,
    packet: &PyPacket,
    x_grid: Vec<f64>,
    t: f64,
    n_poles: Option<usize>,
) -> PyResult<(Vec<Complex>, f64)> {
    let (pot, pk) = (potential.inner, packet.inner);
    let field = py
        .detach(|| match n_poles {
            None => wavepacket::transmitted_quadrature(&pot, &pk, &x_grid, t),
            Some(n) => wavepacket::transmitted_pole_form(&pot, &pk, &x_grid, t, n),
        })
        .map_err(to_py)?;
    Ok((field.values, field.log_scale))
}

/// Freely propagating packet at time `t` on `x_grid`.
#[pyfunction]
fn free(packet: &PyPacket, x_grid: Vec<f64>, t: f64) -> Vec<Complex> {
    wavepacket::free_packet(&packet.inner, &x_grid, t).physical()
}

/// `x_COM` of the transmitted packet minus that of the free one.
#[pyfunction]
fn com_delay(py: Python<'_>, potential: &PyPotential, packet: &PyPacket, x_grid: Vec<f64>, t: f64) -> PyResult<f64> {
    let (pot, pk) = (potential.inner, packet.inner);
    py.detach(|| wavepacket::com_delay(&pot, &pk, &x_grid, t)).map_err(to_py)
}

/// Phase time, broad-packet COM prediction and velocity shift, as a dict.
#[pyfunction]
fn phase_time(py: Python<'_>, potential: &PyPotential, packet: &PyPacket, t: f64) -> PyResult<Py<pyo3::types::PyDict>> {
    let r = wavepacket::phase_time_and_broad_com(&potential.inner, &packet.inner, t).map_err(to_py)?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("tau_phase", r.tau_phase)?;
    d.set_item("com_prediction", r.com_prediction)?;
    d.set_item("velocity_shift", r.velocity_shift)?;
    d.set_item("broadness", r.broadness)?;
    Ok(d.unbind())
}

/// `sqrt(|T''/T|)` at `p0`.
#[pyfunction]
fn effective_range(potential: &PyPotential, p0: f64) -> PyResult<f64> {
    delay::effective_range(&potential.inner, p0).map_err(to_py)
}

#[pymodule]
pub fn eckart(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPotential>()?;
    m.add_class::<PyPacket>()?;
    m.add_class::<PyPole>()?;
    m.add_function(wrap_pyfunction!(poles, m)?)?;
    m.add_function(wrap_pyfunction!(eta, m)?)?;
    m.add_function(wrap_pyfunction!(sum_rule, m)?)?;
    m.add_function(wrap_pyfunction!(transmitted, m)?)?;
    m.add_function(wrap_pyfunction!(free, m)?)?;
    m.add_function(wrap_pyfunction!(com_delay, m)?)?;
    m.add_function(wrap_pyfunction!(phase_time, m)?)?;
    m.add_function(wrap_pyfunction!(effective_range, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_well_lists_its_bound_poles() {
        let well = PyPotential::new(-15.0).unwrap();
        let list = poles(&well, 8).unwrap();
        assert_eq!(list.len(), 5);
        assert!(list.iter().all(|p| p.class_ == "bound" && p.kind == "I"));
        assert_eq!(list[0].position, Complex::new(0.0, 5.0));
    }

    #[test]
    fn eta_routes_agree_and_reject_unknown_methods() {
        let barrier = PyPotential::new(1.0).unwrap();
        let xs: Vec<f64> = (0..101).map(|i| -5.0 + 0.1 * i as f64).collect();
        let a = eta(&barrier, 1.5, xs.clone(), "spectral", 64).unwrap();
        let b = eta(&barrier, 1.5, xs.clone(), "poles", 64).unwrap();
        assert!(delay::relative_l2(&b, &a) < 1e-3);
        assert!(eta(&barrier, 1.5, xs, "fft", 64).is_err());
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        assert!(PyPotential::new(f64::NAN).is_err());
        assert!(PyPotential::dimensional(1.0, -1.0, 1.0).is_err());
        assert!(PyPacket::new(0.5, 0.0, 0.0, 1.0).is_err());
    }
}
