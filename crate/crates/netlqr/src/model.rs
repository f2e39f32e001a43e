//! Per-subsystem model matrices, shared by every node of the network.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Dynamics and cost matrices of one subsystem.
///
/// Every node evolves as
/// `dx_i = A x_i + B u_i + D x_i^G + E u_i^G (+ F dw_i)`
/// where the superscript `G` fields are the `M`-weighted neighbor aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub e: DMatrix<f64>,
    /// Noise input matrix; all-zero for deterministic models.
    pub f: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub q_t: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

impl SystemModel {
    /// Deterministic model (`F = 0`, `d_w = d_x`).
    pub fn deterministic(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        d: DMatrix<f64>,
        e: DMatrix<f64>,
        q: DMatrix<f64>,
        q_t: DMatrix<f64>,
        r: DMatrix<f64>,
    ) -> Result<Self> {
        let f = DMatrix::zeros(a.nrows(), a.nrows());
        Self::new(a, b, d, e, f, q, q_t, r)
    }

    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        d: DMatrix<f64>,
        e: DMatrix<f64>,
        f: DMatrix<f64>,
        q: DMatrix<f64>,
        q_t: DMatrix<f64>,
        r: DMatrix<f64>,
    ) -> Result<Self> {
        let model = Self {
            a,
            b,
            d,
            e,
            f,
            q,
            q_t,
            r,
        };
        model.check_dims()?;
        Ok(model)
    }

    pub fn d_x(&self) -> usize {
        self.a.nrows()
    }

    pub fn d_u(&self) -> usize {
        self.b.ncols()
    }

    pub fn d_w(&self) -> usize {
        self.f.ncols()
    }

    /// Whether the noise channel is identically zero.
    pub fn is_deterministic(&self) -> bool {
        self.f.iter().all(|&x| x == 0.0)
    }

    fn check_dims(&self) -> Result<()> {
        let d_x = self.a.nrows();
        let d_u = self.b.ncols();
        let checks = [
            ("A", self.a.shape(), (d_x, d_x)),
            ("B", self.b.shape(), (d_x, d_u)),
            ("D", self.d.shape(), (d_x, d_x)),
            ("E", self.e.shape(), (d_x, d_u)),
            ("F", self.f.shape(), (d_x, self.f.ncols())),
            ("Q", self.q.shape(), (d_x, d_x)),
            ("Q_T", self.q_t.shape(), (d_x, d_x)),
            ("R", self.r.shape(), (d_u, d_u)),
        ];
        for (name, got, want) in checks {
            if got != want {
                return Err(Error::DimensionMismatch(format!(
                    "{name} is {}x{}, expected {}x{}",
                    got.0, got.1, want.0, want.1
                )));
            }
        }
        Ok(())
    }
}
