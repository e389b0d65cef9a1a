use std::io::Write;

use super::{DiscreteOperator, Grid1D};
use crate::error::{Error, Result};
use crate::io::fmt_f64;

/// Interior nodal values of a grid function; the Dirichlet boundary values
/// are implicitly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub values: Vec<f64>,
    pub grid: Grid1D,
}

impl Field {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_interior() {
            return Err(Error::GridMismatch {
                expected: grid.n_interior(),
                found: values.len(),
            });
        }
        Ok(Self { values, grid })
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Self {
            values: vec![0.0; grid.n_interior()],
            grid,
        }
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: grid.nodes().map(f).collect(),
            grid,
        }
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.grid.check_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(Field {
            values,
            grid: self.grid,
        })
    }

    pub fn scaled(&self, factor: f64) -> Field {
        Field {
            values: self.values.iter().map(|v| v * factor).collect(),
            grid: self.grid,
        }
    }

    /// Rows `x,value` from x = 0 to x = ℓ, boundary zeros included.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "x,value")?;
        writeln!(out, "{},{}", fmt_f64(0.0), fmt_f64(0.0))?;
        for (x, v) in self.grid.nodes().zip(&self.values) {
            writeln!(out, "{},{}", fmt_f64(x), fmt_f64(*v))?;
        }
        writeln!(out, "{},{}", fmt_f64(self.grid.length()), fmt_f64(0.0))
    }
}

/// (u, v)_h = h Σ uᵢvᵢ
pub fn inner_h(u: &Field, v: &Field) -> Result<f64> {
    u.grid.check_same(&v.grid)?;
    Ok(u.grid.spacing() * u.values.iter().zip(&v.values).map(|(a, b)| a * b).sum::<f64>())
}

pub fn norm_h(v: &Field) -> f64 {
    (v.grid.spacing() * v.values.iter().map(|a| a * a).sum::<f64>()).sqrt()
}

/// ‖v‖_h + ‖A₀v‖_h
pub fn graph_norm_h2(op: &DiscreteOperator, v: &Field) -> Result<f64> {
    op.grid.check_same(&v.grid)?;
    let av = Field {
        values: op.a0.apply(&v.values),
        grid: v.grid,
    };
    Ok(norm_h(v) + norm_h(&av))
}
