use nalgebra::{Complex, Matrix3};

/// Relative discriminant threshold below which the characteristic cubic has
/// nearly repeated roots. Closed-form root extraction loses roughly half its
/// significant digits at a repeated root, while an iterative Schur reduction
/// of the (diagonalizable) matrix keeps near-machine accuracy there, so we
/// switch methods around the cross-over.
const DISC_FALLBACK_TOL: f64 = 1e-12;

/// Relative deflation tolerance for the Schur reduction. At machine epsilon
/// the QR iteration stalls on matrices whose three eigenvalues (nearly)
/// coincide — subdiagonals stagnate a few ulps above the deflation cut-off —
/// so a slightly looser threshold is used; it perturbs each eigenvalue by at
/// most ~1e-13 relative, far below anything the gap score resolves.
const SCHUR_DEFLATION_EPS: f64 = 1e-13;

/// The three eigenvalues of a real 3x3 matrix, sorted by real part then
/// imaginary part. Complex values always occur in conjugate pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenTriple {
    values: [Complex<f64>; 3],
}

impl EigenTriple {
    fn new(mut values: [Complex<f64>; 3]) -> Self {
        values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        Self { values }
    }

    pub fn values(&self) -> &[Complex<f64>; 3] {
        &self.values
    }

    /// The two eigenvalues with the smallest mutual modulus distance. Ties
    /// are broken by fixed pair order (0,1), (0,2), (1,2).
    pub fn closest_pair(&self) -> (Complex<f64>, Complex<f64>) {
        let v = &self.values;
        let pairs = [(0usize, 1usize), (0, 2), (1, 2)];
        let mut best = pairs[0];
        let mut best_gap = (v[0] - v[1]).norm();
        for &(i, j) in &pairs[1..] {
            let gap = (v[i] - v[j]).norm();
            if gap < best_gap {
                best_gap = gap;
                best = (i, j);
            }
        }
        (v[best.0], v[best.1])
    }

    /// Smallest modulus distance between any two eigenvalues.
    pub fn min_gap(&self) -> f64 {
        let (a, b) = self.closest_pair();
        (a - b).norm()
    }
}

/// Eigenvalues of a real 3x3 matrix.
///
/// The characteristic polynomial is solved in closed form (trigonometric for
/// three real roots, Cardano for a real root plus a conjugate pair). When the
/// scale-invariant discriminant indicates a nearly repeated root the routine
/// falls back to an iterative Schur decomposition, which does not suffer the
/// square-root error amplification of the closed form there.
pub fn eigenvalues_3x3(m: &Matrix3<f64>) -> EigenTriple {
    let scale = m.norm();
    if scale == 0.0 {
        return EigenTriple::new([Complex::new(0.0, 0.0); 3]);
    }

    // Characteristic polynomial: l^3 - c2 l^2 + c1 l - c0.
    let c2 = m.trace();
    let c1 = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
        + m[(0, 0)] * m[(2, 2)]
        - m[(0, 2)] * m[(2, 0)]
        + m[(1, 1)] * m[(2, 2)]
        - m[(1, 2)] * m[(2, 1)];
    let c0 = m.determinant();

    // Depressed form via l = t + c2/3: t^3 + p t + q.
    let shift = c2 / 3.0;
    let p = c1 - c2 * c2 / 3.0;
    let q = c2 * c1 / 3.0 - 2.0 * c2.powi(3) / 27.0 - c0;

    let disc = -4.0 * p.powi(3) - 27.0 * q * q;
    if (disc / scale.powi(6)).abs() < DISC_FALLBACK_TOL {
        if let Some(t) = schur_eigenvalues(m) {
            return t;
        }
    }

    let roots = if disc >= 0.0 {
        three_real_roots(p, q)
    } else {
        real_plus_conjugate_pair(p, q)
    };
    EigenTriple::new(roots.map(|r| r + Complex::new(shift, 0.0)))
}

/// Three real roots of `t^3 + p t + q` (requires a non-negative discriminant,
/// which forces `p <= 0`), via the trigonometric method.
fn three_real_roots(p: f64, q: f64) -> [Complex<f64>; 3] {
    let r = (-p / 3.0).max(0.0).sqrt();
    if r == 0.0 {
        return [Complex::new(0.0, 0.0); 3];
    }
    let cos_arg = (-q / (2.0 * r.powi(3))).clamp(-1.0, 1.0);
    let theta = cos_arg.acos();
    let tau = 2.0 * std::f64::consts::PI;
    std::array::from_fn(|k| Complex::new(2.0 * r * ((theta + tau * k as f64) / 3.0).cos(), 0.0))
}

/// One real root and a conjugate pair of `t^3 + p t + q` (negative
/// discriminant), via Cardano's formula. The cube root with the larger
/// magnitude is extracted first and its partner recovered from the product
/// identity `u * v = -p / 3`, which avoids catastrophic cancellation.
fn real_plus_conjugate_pair(p: f64, q: f64) -> [Complex<f64>; 3] {
    let half_q = q / 2.0;
    let s = (half_q * half_q + p.powi(3) / 27.0).max(0.0).sqrt();
    let (u, v) = if -half_q >= 0.0 {
        let u = (-half_q + s).cbrt();
        let v = if u == 0.0 { 0.0 } else { -p / (3.0 * u) };
        (u, v)
    } else {
        let v = (-half_q - s).cbrt();
        let u = if v == 0.0 { 0.0 } else { -p / (3.0 * v) };
        (u, v)
    };
    let real = u + v;
    let re = -real / 2.0;
    let im = (3.0f64.sqrt() / 2.0) * (u - v);
    [
        Complex::new(real, 0.0),
        Complex::new(re, im.abs()),
        Complex::new(re, -im.abs()),
    ]
}

fn schur_eigenvalues(m: &Matrix3<f64>) -> Option<EigenTriple> {
    let schur = nalgebra::linalg::Schur::try_new(*m, SCHUR_DEFLATION_EPS, 10_000)?;
    let (_, t) = schur.unpack();
    // Read the eigenvalues off the quasi-triangular factor directly. The
    // built-in extraction assumes every surviving 2x2 block has a complex
    // pair; with the loosened deflation threshold a block whose discriminant
    // is a tiny *positive* number can survive, and that assumption then turns
    // a nearly repeated real pair into NaN.
    let mut values = [Complex::new(0.0, 0.0); 3];
    let mut i = 0;
    while i < 3 {
        if i == 2 || t[(i + 1, i)] == 0.0 {
            values[i] = Complex::new(t[(i, i)], 0.0);
            i += 1;
        } else {
            let (a, b) = (t[(i, i)], t[(i, i + 1)]);
            let (c, d) = (t[(i + 1, i)], t[(i + 1, i + 1)]);
            let mid = 0.5 * (a + d);
            let off = 0.5 * (a - d);
            let discr = off * off + b * c;
            if discr >= 0.0 {
                let root = discr.sqrt();
                values[i] = Complex::new(mid + root, 0.0);
                values[i + 1] = Complex::new(mid - root, 0.0);
            } else {
                let root = (-discr).sqrt();
                values[i] = Complex::new(mid, root);
                values[i + 1] = Complex::new(mid, -root);
            }
            i += 2;
        }
    }
    Some(EigenTriple::new(values))
}
