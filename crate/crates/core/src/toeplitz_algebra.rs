//! Symmetric Toeplitz products through circulant embedding, and the Strang
//! circulant preconditioner P = shift·I + κ̄·s(A).

use num_complex::Complex64;

use crate::error::{check_len, invalid, Error, Result};
use crate::fft::Fft;
use crate::ifl::IflDiscretization;
use crate::linalg::DenseMatrix;

/// Caller-owned buffers for transforms of one fixed length.
#[derive(Debug, Clone)]
pub struct SpectralWorkspace {
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl SpectralWorkspace {
    fn for_fft(fft: &Fft) -> Self {
        Self {
            buf: vec![Complex64::default(); fft.len()],
            scratch: vec![Complex64::default(); fft.scratch_len()],
        }
    }
}

/// Symmetric Toeplitz operator applied through a circulant embedding of
/// power-of-two length L. The embedded column is real and even, so its
/// spectrum is real and each product needs two complex transforms of
/// length L/2 (even and odd samples packed into one complex signal).
#[derive(Debug, Clone)]
pub struct ToeplitzOperator {
    first_col: Vec<f64>,
    embed_len: usize,
    half: Option<Fft>,
    /// Real spectrum S_k, k = 0..=L/2.
    spectrum: Vec<f64>,
    /// e^{-2πik/L}, k = 0..=L/2.
    twiddles: Vec<Complex64>,
}

#[derive(Debug, Clone)]
pub struct ToeplitzWorkspace {
    packed: Vec<Complex64>,
    product: Vec<Complex64>,
}

impl ToeplitzOperator {
    pub fn new(first_col: &[f64]) -> Result<Self> {
        let n = first_col.len();
        if n == 0 {
            return Err(invalid("empty first column"));
        }
        let len = (2 * n - 1).next_power_of_two();
        let mut embedded = vec![Complex64::default(); len];
        embedded[0] = first_col[0].into();
        for k in 1..n {
            embedded[k] = first_col[k].into();
            embedded[len - k] = first_col[k].into();
        }
        Fft::new(len).forward(&mut embedded);
        let spectrum = embedded[..=len / 2].iter().map(|z| z.re).collect();
        let twiddles = (0..=len / 2)
            .map(|k| {
                Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * k as f64 / len as f64)
            })
            .collect();
        let half = (len >= 2).then(|| Fft::new(len / 2));
        Ok(Self {
            first_col: first_col.to_vec(),
            embed_len: len,
            half,
            spectrum,
            twiddles,
        })
    }

    pub fn dim(&self) -> usize {
        self.first_col.len()
    }

    pub fn first_col(&self) -> &[f64] {
        &self.first_col
    }

    pub fn embed_len(&self) -> usize {
        self.embed_len
    }

    pub fn workspace(&self) -> ToeplitzWorkspace {
        let k = self.embed_len / 2;
        ToeplitzWorkspace {
            packed: vec![Complex64::default(); k.max(1)],
            product: vec![Complex64::default(); k + 1],
        }
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.matvec_into(v, &mut out, &mut self.workspace())?;
        Ok(out)
    }

    pub fn matvec_into(
        &self,
        v: &[f64],
        out: &mut [f64],
        ws: &mut ToeplitzWorkspace,
    ) -> Result<()> {
        let n = self.dim();
        check_len(n, v.len())?;
        check_len(n, out.len())?;
        let Some(fft) = &self.half else {
            out[0] = self.first_col[0] * v[0];
            return Ok(());
        };
        let k_half = self.embed_len / 2;
        let z = &mut ws.packed;
        for (j, zj) in z.iter_mut().enumerate() {
            let re = v.get(2 * j).copied().unwrap_or(0.0);
            let im = v.get(2 * j + 1).copied().unwrap_or(0.0);
            *zj = Complex64::new(re, im);
        }
        fft.forward(z);
        // unpack X_k = E_k + W^k O_k and scale by the real spectrum
        let y = &mut ws.product;
        for k in 0..=k_half {
            let zk = z[k % k_half];
            let zc = z[(k_half - k) % k_half].conj();
            let even = (zk + zc) * 0.5;
            let odd = (zk - zc) * Complex64::new(0.0, -0.5);
            y[k] = (even + self.twiddles[k] * odd) * self.spectrum[k];
        }
        // repack even/odd outputs into one half-length inverse
        for k in 0..k_half {
            let mirror = y[k_half - k].conj();
            let a = y[k] + mirror;
            let b = (y[k] - mirror) * self.twiddles[k].conj();
            z[k] = a + Complex64::new(0.0, 1.0) * b;
        }
        fft.inverse(z);
        for (j, o) in out.iter_mut().enumerate() {
            let c = z[j / 2];
            *o = 0.5 * if j % 2 == 0 { c.re } else { c.im };
        }
        Ok(())
    }
}

/// First column of the Strang circulant s(A) for a symmetric Toeplitz A of
/// size n: keep a_1..a_{⌊(n+2)/2⌋}, then mirror a_{⌊(n+1)/2⌋} down to a_2.
pub fn strang_first_column(first_col: &[f64]) -> Result<Vec<f64>> {
    let n = first_col.len();
    if n == 0 {
        return Err(invalid("Strang circulant of an empty column"));
    }
    let big_n = n + 1;
    let head = big_n.div_ceil(2);
    let mut c: Vec<f64> = first_col[..head].to_vec();
    c.extend((2..=big_n / 2).rev().map(|k| first_col[k - 1]));
    debug_assert_eq!(c.len(), n);
    Ok(c)
}

/// Eigenvalues of the circulant with the given first column, assuming the
/// column is symmetric (c_k = c_{n-k}) so the spectrum is real.
pub fn circulant_eigenvalues(first_col: &[f64]) -> Vec<f64> {
    let fft = Fft::new(first_col.len());
    let mut buf: Vec<Complex64> = first_col.iter().map(|&x| x.into()).collect();
    fft.forward(&mut buf);
    let scale = buf
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    debug_assert!(buf.iter().all(|z| z.im.abs() <= 1e-10 * scale));
    buf.iter().map(|z| z.re).collect()
}

#[derive(Debug, Clone)]
pub struct CirculantPreconditioner {
    shift: f64,
    kappa_bar: f64,
    lambda: Vec<f64>,
    total: Vec<f64>,
    fft: Fft,
}

pub fn build_preconditioner(
    d: &IflDiscretization,
    shift: f64,
    kappa_bar: f64,
) -> Result<CirculantPreconditioner> {
    CirculantPreconditioner::new(d.first_col(), shift, kappa_bar)
}

impl CirculantPreconditioner {
    /// Preconditioner for shift·I + κ̄·A with A the symmetric Toeplitz matrix of `first_col`.
    pub fn new(first_col: &[f64], shift: f64, kappa_bar: f64) -> Result<Self> {
        if !(shift > 0.0) || !(kappa_bar > 0.0) {
            return Err(invalid(
                "preconditioner shift and coefficient must be positive",
            ));
        }
        let lambda = circulant_eigenvalues(&strang_first_column(first_col)?);
        let total: Vec<f64> = lambda.iter().map(|l| shift + kappa_bar * l).collect();
        if let Some(bad) = total.iter().find(|&&e| !(e > 0.0)) {
            return Err(Error::Construction(format!(
                "non-positive preconditioner eigenvalue {bad:e}"
            )));
        }
        let fft = Fft::new(first_col.len());
        Ok(Self {
            shift,
            kappa_bar,
            lambda,
            total,
            fft,
        })
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn kappa_bar(&self) -> f64 {
        self.kappa_bar
    }

    /// Eigenvalues of s(A).
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// Eigenvalues of P.
    pub fn total_eigs(&self) -> &[f64] {
        &self.total
    }

    pub fn workspace(&self) -> SpectralWorkspace {
        SpectralWorkspace::for_fft(&self.fft)
    }

    /// z = P⁻¹ v.
    pub fn solve(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.solve_into(v, &mut out, &mut self.workspace())?;
        Ok(out)
    }

    pub fn solve_into(&self, v: &[f64], out: &mut [f64], ws: &mut SpectralWorkspace) -> Result<()> {
        self.apply_spectral(v, out, ws, |e| 1.0 / e)
    }

    /// P v.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.apply_spectral(v, &mut out, &mut self.workspace(), |e| e)?;
        Ok(out)
    }

    /// P^{-1/2} v, with the principal square root.
    pub fn apply_inverse_sqrt(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.apply_spectral(v, &mut out, &mut self.workspace(), |e| 1.0 / e.sqrt())?;
        Ok(out)
    }

    fn apply_spectral(
        &self,
        v: &[f64],
        out: &mut [f64],
        ws: &mut SpectralWorkspace,
        f: impl Fn(f64) -> f64,
    ) -> Result<()> {
        check_len(self.dim(), v.len())?;
        check_len(self.dim(), out.len())?;
        for (b, x) in ws.buf.iter_mut().zip(v) {
            *b = (*x).into();
        }
        self.fft.forward_with_scratch(&mut ws.buf, &mut ws.scratch);
        for (b, e) in ws.buf.iter_mut().zip(&self.total) {
            *b *= f(*e);
        }
        self.fft.inverse_with_scratch(&mut ws.buf, &mut ws.scratch);
        for (o, b) in out.iter_mut().zip(&ws.buf) {
            *o = b.re;
        }
        Ok(())
    }
}

pub fn precond_solve(p: &CirculantPreconditioner, v: &[f64]) -> Result<Vec<f64>> {
    p.solve(v)
}

pub fn toeplitz_matvec(op: &ToeplitzOperator, v: &[f64]) -> Result<Vec<f64>> {
    op.matvec(v)
}

/// P^{-1/2} M P^{-1/2} as a dense matrix (congruence, so symmetric when M is).
pub fn preconditioned_dense(m: &DenseMatrix, p: &CirculantPreconditioner) -> Result<DenseMatrix> {
    let n = m.dim();
    check_len(n, p.dim())?;
    let mut left = DenseMatrix::zeros(n);
    let mt = m.transpose();
    // columns of P^{-1/2} M are P^{-1/2} applied to columns of M
    for j in 0..n {
        let col = p.apply_inverse_sqrt(mt.row(j))?;
        for i in 0..n {
            left[(i, j)] = col[i];
        }
    }
    let mut out = DenseMatrix::zeros(n);
    // (P^{-1/2} M) P^{-1/2}: rows times a symmetric operator
    for i in 0..n {
        let row = p.apply_inverse_sqrt(left.row(i))?;
        for j in 0..n {
            out[(i, j)] = row[j];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifl::{build_ifl, default_mu};
    use crate::linalg::{jacobi_eigen, solve_dense};
    use rand::{Rng, SeedableRng};

    fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt();
        let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
        num / den
    }

    #[test]
    fn tridiagonal_by_hand() {
        let op = ToeplitzOperator::new(&[2.0, -1.0, 0.0]).unwrap();
        let out = op.matvec(&[1.0, 1.0, 1.0]).unwrap();
        for (o, e) in out.iter().zip([1.0, 0.0, 1.0]) {
            assert!((o - e).abs() < 1e-14);
        }
        assert_eq!(op.embed_len(), 8);
    }

    #[test]
    fn unit_vector_returns_first_column() {
        let col: Vec<f64> = (0..37).map(|k| 1.0 / (1.0 + k as f64)).collect();
        let op = ToeplitzOperator::new(&col).unwrap();
        let mut e1 = vec![0.0; 37];
        e1[0] = 1.0;
        assert!(rel_diff(&op.matvec(&e1).unwrap(), &col) < 1e-12);
    }

    #[test]
    fn matvec_matches_dense() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for n in [1usize, 2, 5, 64, 200, 511, 512] {
            let col: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let op = ToeplitzOperator::new(&col).unwrap();
            let dense = DenseMatrix::symmetric_toeplitz(&col).matvec(&v);
            assert!(rel_diff(&op.matvec(&v).unwrap(), &dense) < 1e-11, "n={n}");
        }
    }

    #[test]
    fn matvec_rejects_wrong_length() {
        let op = ToeplitzOperator::new(&[1.0, 0.5]).unwrap();
        assert!(matches!(
            op.matvec(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn strang_index_pattern() {
        assert_eq!(
            strang_first_column(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap(),
            vec![1.0, 2.0, 3.0, 3.0, 2.0]
        );
        assert_eq!(
            strang_first_column(&[1.0, 2.0, 3.0, 4.0]).unwrap(),
            vec![1.0, 2.0, 3.0, 2.0]
        );
        assert_eq!(
            strang_first_column(&[1.0, 2.0, 3.0]).unwrap(),
            vec![1.0, 2.0, 2.0]
        );
        assert_eq!(strang_first_column(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
        assert_eq!(strang_first_column(&[1.0]).unwrap(), vec![1.0]);
        assert!(strang_first_column(&[]).is_err());
    }

    #[test]
    fn identity_preconditioner() {
        let mut col = vec![0.0; 9];
        col[0] = 1.0;
        let p = CirculantPreconditioner::new(&col, 1.0, 1.0).unwrap();
        assert!(p.total_eigs().iter().all(|e| (e - 2.0).abs() < 1e-14));
        let q = CirculantPreconditioner::new(&col, 0.5, 0.5).unwrap();
        let v: Vec<f64> = (0..9).map(|i| i as f64 - 3.0).collect();
        assert!(rel_diff(&q.solve(&v).unwrap(), &v) < 1e-14);
    }

    #[test]
    fn preconditioner_rejects_bad_inputs() {
        assert!(CirculantPreconditioner::new(&[1.0, 0.1], 0.0, 1.0).is_err());
        assert!(CirculantPreconditioner::new(&[1.0, 0.1], 1.0, -1.0).is_err());
        // indefinite circulant driven negative
        assert!(matches!(
            CirculantPreconditioner::new(&[1.0, -3.0, -3.0], 1e-3, 1.0),
            Err(Error::Construction(_))
        ));
    }

    #[test]
    fn strang_spectrum_inside_gershgorin_disc() {
        for &alpha in &[0.4, 1.1, 1.5, 1.9] {
            for mu in [default_mu(alpha), 2.0] {
                let d = build_ifl(alpha, mu, 1.0, 32).unwrap();
                let p = build_preconditioner(&d, 1.0, 1.0).unwrap();
                let a11 = d.first_col()[0];
                assert!(p.lambda().iter().all(|&l| l > 0.0 && (l - a11).abs() < a11));
                let dense = jacobi_eigen(&DenseMatrix::circulant(
                    &strang_first_column(d.first_col()).unwrap(),
                ));
                let mut fast = p.lambda().to_vec();
                fast.sort_by(f64::total_cmp);
                for (x, y) in fast.iter().zip(&dense.values) {
                    assert!((x - y).abs() < 1e-10 * a11);
                }
            }
        }
    }

    #[test]
    fn inverse_round_trip_and_dense_oracle() {
        let d = build_ifl(1.5, 1.75, 1.0, 101).unwrap();
        let p = build_preconditioner(&d, 3.0, 0.7).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let v: Vec<f64> = (0..100).map(|_| rng.gen_range(-1.0..1.0)).collect();
        assert!(rel_diff(&p.solve(&p.apply(&v).unwrap()).unwrap(), &v) < 1e-12);
        let c = strang_first_column(d.first_col()).unwrap();
        let dense = DenseMatrix::from_fn(100, |i, j| {
            (if i == j { 3.0 } else { 0.0 }) + 0.7 * c[(i + 100 - j) % 100]
        });
        let oracle = solve_dense(&dense, &v).unwrap();
        assert!(rel_diff(&p.solve(&v).unwrap(), &oracle) < 1e-11);
    }

    #[test]
    fn inverse_norm_bound() {
        let d = build_ifl(0.5, 1.25, 1.0, 64).unwrap();
        let p = build_preconditioner(&d, 0.2, 2.0).unwrap();
        let lmin = p.lambda().iter().cloned().fold(f64::INFINITY, f64::min);
        let bound = 1.0 / (0.2 + 2.0 * lmin);
        let mut rng = rand::rngs::StdRng::seed_from_u64(8);
        for _ in 0..20 {
            let v: Vec<f64> = (0..63).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let z = p.solve(&v).unwrap();
            let ratio = z.iter().map(|x| x * x).sum::<f64>().sqrt()
                / v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(ratio <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn constant_coefficient_spectrum_clusters() {
        let alpha = 1.5;
        let mut outliers = Vec::new();
        for n in [32usize, 64, 128] {
            let d = build_ifl(alpha, default_mu(alpha), 1.0, n).unwrap();
            let shift = 50.0;
            let m = DenseMatrix::from_fn(n - 1, |i, j| {
                let base = d.first_col()[i.abs_diff(j)];
                if i == j {
                    shift + base
                } else {
                    base
                }
            });
            let p = build_preconditioner(&d, shift, 1.0).unwrap();
            let sym = preconditioned_dense(&m, &p).unwrap();
            assert!(sym.is_symmetric(1e-12));
            let eig = jacobi_eigen(&sym);
            outliers.push(
                eig.values
                    .iter()
                    .filter(|&&v| (v - 1.0).abs() >= 0.1)
                    .count(),
            );
        }
        let (lo, hi) = (
            *outliers.iter().min().unwrap(),
            *outliers.iter().max().unwrap(),
        );
        assert!(hi - lo <= 2, "outlier counts {outliers:?}");
    }

    #[test]
    fn preconditioned_identity_is_identity() {
        let mut col = vec![0.0; 16];
        col[0] = 1.0;
        let p = CirculantPreconditioner::new(&col, 1.0, 1.0).unwrap();
        let m = DenseMatrix::from_fn(16, |i, j| if i == j { 2.0 } else { 0.0 });
        let sym = preconditioned_dense(&m, &p).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((sym[(i, j)] - e).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn generating_coefficients_are_summable() {
        // Unscaled off-diagonal law g_k = ((k+1)^ν - (k-1)^ν) / (2k^μ) ~ ν k^{-1-α}.
        for &alpha in &[0.5, 1.0, 1.5] {
            let mu = default_mu(alpha);
            let nu = mu - alpha;
            let g = |k: f64| ((k + 1.0).powf(nu) - (k - 1.0).powf(nu)) / (2.0 * k.powf(mu));
            let tail: f64 = (100_001..=1_000_000).map(|k| g(k as f64)).sum();
            let bound = nu / alpha * (1e5f64.powf(-alpha) - 1e6f64.powf(-alpha));
            assert!(
                (tail - bound).abs() < 1e-3 * bound,
                "α={alpha}: {tail} vs {bound}"
            );
            let head: f64 = (2..=100_000).map(|k| g(k as f64)).sum();
            assert!(tail < head);
        }
    }
}
