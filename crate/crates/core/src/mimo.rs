//! Uniform linear arrays and narrowband MIMO channel synthesis.
//!
//! The channel is the plane-wave sum over paths
//! `H = Σ_p α_p · a_rx(arr_p) · a_tx(dep_p)^H`, with `H[i][j]` the coefficient
//! from transmit element `j` to receive element `i`. No noise term is modeled.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::geometry::Vec3;
use crate::propagation::PathSet;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArrayConfig {
    pub n_elements: usize,
    /// Element spacing in wavelengths.
    pub spacing_wl: f64,
    /// Unit vector along the array.
    pub axis: Vec3,
    /// Position of element 0.
    pub reference: Vec3,
}

impl ArrayConfig {
    pub fn new(n_elements: usize, spacing_wl: f64, axis: Vec3, reference: Vec3) -> Result<Self> {
        if n_elements == 0 {
            return Err(Error::Domain("array needs at least one element".into()));
        }
        if !(spacing_wl > 0.0) || !spacing_wl.is_finite() {
            return Err(Error::Domain(format!("element spacing must be > 0, got {spacing_wl}")));
        }
        let norm = axis.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Domain(format!("array axis must be non-zero, got {axis:?}")));
        }
        Ok(ArrayConfig {
            n_elements,
            spacing_wl,
            axis: axis / norm,
            reference,
        })
    }

    /// Plane-wave response for propagation direction `direction`:
    /// element `k` gets `exp(−j·2π·spacing·k·(axis·direction))`.
    pub fn steering_vector(&self, direction: &Vec3) -> DVector<Complex64> {
        let step = -2.0 * std::f64::consts::PI * self.spacing_wl * self.axis.dot(direction);
        DVector::from_iterator(
            self.n_elements,
            (0..self.n_elements).map(|k| Complex64::from_polar(1.0, step * k as f64)),
        )
    }

    pub fn element_positions(&self, wavelength: f64) -> Vec<Vec3> {
        (0..self.n_elements)
            .map(|k| self.reference + self.axis * (k as f64 * self.spacing_wl * wavelength))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub h: DMatrix<Complex64>,
}

impl Channel {
    pub fn zeros(n_rx: usize, n_tx: usize) -> Self {
        Channel {
            h: DMatrix::zeros(n_rx, n_tx),
        }
    }

    pub fn n_rx(&self) -> usize {
        self.h.nrows()
    }

    pub fn n_tx(&self) -> usize {
        self.h.ncols()
    }

    pub fn frobenius_sqr(&self) -> f64 {
        self.h.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.h.iter().all(|z| *z == Complex64::new(0.0, 0.0))
    }
}

/// Narrowband channel matrix from a path set; paths are summed in path-set order.
pub fn synthesize_channel(pathset: &PathSet, tx_array: &ArrayConfig, rx_array: &ArrayConfig) -> Channel {
    let mut ch = Channel::zeros(rx_array.n_elements, tx_array.n_elements);
    for path in &pathset.paths {
        let a_rx = rx_array.steering_vector(&path.arr_dir) * path.amplitude;
        let a_tx = tx_array.steering_vector(&path.dep_dir);
        ch.h += a_rx * a_tx.adjoint();
    }
    ch
}
