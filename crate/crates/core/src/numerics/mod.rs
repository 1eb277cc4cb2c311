//! Shared numerical kernel.

pub mod interp;
pub mod minimize;
pub mod quadrature;
pub mod roots;
pub mod student_like;

pub use interp::Pchip;
pub use minimize::{minimize_scalar, minimize_with, Minimum};
pub use quadrature::{
    integrate_1d, integrate_2d_halfplane, integrate_nested, integrate_pieces, integrate_split,
    split_pieces, Integral, Piece, QuadratureSpec,
};
pub use roots::{find_root, find_root_with, Expand, RootOptions};
pub use student_like::{student_like_cdf, student_like_quantile, trunc_mean, StudentLike};

/// `n` points spaced evenly in log scale over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// `n` evenly spaced points over `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}
