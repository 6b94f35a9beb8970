#![allow(dead_code)]

use qafem::{DomainSpec, FESpace, Mesh64, Space64};

pub fn square_mesh(uniform_levels: usize) -> Mesh64 {
    let mut m = Mesh64::from_domain(&DomainSpec::unit_square()).unwrap();
    for _ in 0..uniform_levels {
        m = m.refine_uniform().unwrap();
    }
    m
}

pub fn square_space(uniform_levels: usize, degree: usize) -> Space64 {
    FESpace::new(&square_mesh(uniform_levels), degree).unwrap()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
