//! Small fixed-size vector helpers for nodal states `[f64; M]` and
//! flux arrays `[[f64; D]; M]` (one spatial row per conserved variable).

#[inline]
pub fn add<const M: usize>(a: &[f64; M], b: &[f64; M]) -> [f64; M] {
    std::array::from_fn(|k| a[k] + b[k])
}

#[inline]
pub fn sub<const M: usize>(a: &[f64; M], b: &[f64; M]) -> [f64; M] {
    std::array::from_fn(|k| a[k] - b[k])
}

#[inline]
pub fn scale<const M: usize>(a: &[f64; M], s: f64) -> [f64; M] {
    std::array::from_fn(|k| a[k] * s)
}

#[inline]
pub fn axpy<const M: usize>(y: &mut [f64; M], alpha: f64, x: &[f64; M]) {
    for k in 0..M {
        y[k] += alpha * x[k];
    }
}

#[inline]
pub fn dot<const M: usize>(a: &[f64; M], b: &[f64; M]) -> f64 {
    let mut s = 0.0;
    for k in 0..M {
        s += a[k] * b[k];
    }
    s
}

#[inline]
pub fn norm<const M: usize>(a: &[f64; M]) -> f64 {
    dot(a, a).sqrt()
}

/// Average of two states.
#[inline]
pub fn mid<const M: usize>(a: &[f64; M], b: &[f64; M]) -> [f64; M] {
    std::array::from_fn(|k| 0.5 * (a[k] + b[k]))
}

/// Difference of two flux arrays.
#[inline]
pub fn flux_sub<const M: usize, const D: usize>(
    a: &[[f64; D]; M],
    b: &[[f64; D]; M],
) -> [[f64; D]; M] {
    std::array::from_fn(|k| std::array::from_fn(|d| a[k][d] - b[k][d]))
}

/// Contract a flux array with a direction vector: `(f · c)_k = Σ_d f[k][d] c[d]`.
#[inline]
pub fn flux_dot<const M: usize, const D: usize>(f: &[[f64; D]; M], c: &[f64; D]) -> [f64; M] {
    std::array::from_fn(|k| {
        let mut s = 0.0;
        for d in 0..D {
            s += f[k][d] * c[d];
        }
        s
    })
}

/// Contract a 1×D row (entropy flux / potential) with a direction vector.
#[inline]
pub fn row_dot<const D: usize>(q: &[f64; D], c: &[f64; D]) -> f64 {
    let mut s = 0.0;
    for d in 0..D {
        s += q[d] * c[d];
    }
    s
}

#[inline]
pub fn dir_norm<const D: usize>(c: &[f64; D]) -> f64 {
    row_dot(c, c).sqrt()
}
