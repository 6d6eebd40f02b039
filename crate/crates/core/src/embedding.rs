//! Distortion certificates for an embedding basis: the codeword-witness
//! lower bound and triangle-inequality upper bound bracketing the norm of
//! every signed combination, plus the dimension and code-length calculators
//! that chain the distortion through the random-matrix bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{sign_message, witness, EmbeddingBasis, SparseForm};
use crate::hypercube::choose_sum;
use crate::norms::{injective_lower, operator_norm, BRACKET_TOL};
use crate::par;

/// Witness lower bound on the norm of `sum_i alpha_i A_i`: evaluate at the
/// sign vector of the codeword for `x = sign(alpha)` and normalize by the
/// relaxed factor `N |B|`, which dominates `(N |B|)^(sum 1/p_j)`. When the
/// smooth-decoder bias floor holds, the result is at least `l1(alpha)`.
pub fn lower_certificate(basis: &EmbeddingBasis, alpha: &[f64]) -> Result<f64> {
    if alpha.len() != basis.forms.len() {
        return Err(Error::Dimension(format!(
            "alpha of length {} against {} forms",
            alpha.len(),
            basis.forms.len()
        )));
    }
    if alpha.iter().all(|&a| a == 0.0) {
        return Err(Error::Contract("lower certificate needs a nonzero alpha".into()));
    }
    let msg = sign_message(&basis.code, alpha);
    let w = witness(&basis.code, msg, &basis.ball);
    let slices: Vec<&[f64]> = (0..basis.params.q).map(|_| w.0.as_slice()).collect();
    let value: f64 = alpha
        .iter()
        .zip(&basis.forms)
        .map(|(&a, form)| a * form.evaluate(&slices))
        .sum();
    Ok(value / (basis.params.code_len as f64 * basis.params.ball_len as f64))
}

/// Triangle upper bound: `l1(alpha)` times the declared distortion.
pub fn upper_certificate(basis: &EmbeddingBasis, alpha: &[f64]) -> f64 {
    let l1: f64 = alpha.iter().map(|a| a.abs()).sum();
    l1 * basis.k_bound
}

#[derive(Debug, Clone)]
pub enum AlphaStrategy {
    BasisVectors,
    RandomSigns { count: usize, seed: u64 },
    RandomGaussian { count: usize, seed: u64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DistortionRow {
    pub alpha_id: String,
    pub l1: f64,
    pub lower_cert: f64,
    pub measured_lower: f64,
    pub measured_upper: f64,
    pub upper_cert: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DistortionReport {
    pub rows: Vec<DistortionRow>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub k_declared: f64,
    pub pass: bool,
}

fn strategy_alphas(k: usize, strategy: &AlphaStrategy) -> Vec<(String, Vec<f64>)> {
    match strategy {
        AlphaStrategy::BasisVectors => (0..k)
            .map(|i| {
                let mut a = vec![0.0; k];
                a[i] = 1.0;
                (format!("e{}", i + 1), a)
            })
            .collect(),
        AlphaStrategy::RandomSigns { count, seed } => (0..*count)
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(par::derive_seed(*seed, c as u64));
                let a = (0..k)
                    .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
                    .collect();
                (format!("sign-{c:04}"), a)
            })
            .collect(),
        AlphaStrategy::RandomGaussian { count, seed } => (0..*count)
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(par::derive_seed(*seed, c as u64));
                let a = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
                (format!("gauss-{c:04}"), a)
            })
            .collect(),
    }
}

/// Per-vector sandwich report. The measured bracket uses exact singular
/// values at q = 2 with p = (2,2); otherwise the lower side is the better of
/// the alternating estimate and the witness certificate, and the upper side
/// is the triangle sum of per-form upper bounds.
pub fn distortion_report(basis: &EmbeddingBasis, strategy: AlphaStrategy) -> Result<DistortionReport> {
    let k = basis.forms.len();
    let p = &basis.params.p;
    let exact_spectral =
        basis.params.q == 2 && p.iter().all(|&pj| (pj - 2.0).abs() < 1e-15);
    let form_uppers: Vec<f64> = if exact_spectral {
        basis
            .forms
            .iter()
            .map(|f| operator_norm(f).map(|e| e.upper))
            .collect::<Result<Vec<_>>>()?
    } else {
        basis.forms.iter().map(|f| f.abs_sum()).collect()
    };

    let alphas = strategy_alphas(k, &strategy);
    let rows = par::map_indexed(alphas.len(), |j| -> Result<DistortionRow> {
        let (id, alpha) = &alphas[j];
        let l1: f64 = alpha.iter().map(|a| a.abs()).sum();
        let lower_cert = lower_certificate(basis, alpha)?;
        let upper_cert = upper_certificate(basis, alpha);
        let mut combined = SparseForm::new(basis.params.q, basis.params.dim);
        for (a, form) in alpha.iter().zip(&basis.forms) {
            combined.add_scaled(form, *a);
        }
        let (measured_lower, measured_upper) = if exact_spectral {
            let est = operator_norm(&combined)?;
            (est.lower, est.upper)
        } else {
            let est = injective_lower(&combined, p, 16, par::derive_seed(0xd15, j as u64))?;
            let triangle: f64 = alpha
                .iter()
                .zip(&form_uppers)
                .map(|(a, u)| a.abs() * u)
                .sum();
            (est.lower.max(lower_cert), triangle)
        };
        let pass = lower_cert >= l1 - BRACKET_TOL
            && upper_cert <= basis.k_bound * l1 + BRACKET_TOL
            && measured_lower <= measured_upper + BRACKET_TOL;
        Ok(DistortionRow {
            alpha_id: id.clone(),
            l1,
            lower_cert,
            measured_lower,
            measured_upper,
            upper_cert,
            pass,
        })
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let min_ratio = rows
        .iter()
        .map(|r| r.measured_lower / r.l1)
        .fold(f64::INFINITY, f64::min);
    let max_ratio = rows
        .iter()
        .map(|r| r.measured_upper / r.l1)
        .fold(0.0f64, f64::max);
    let pass = rows.iter().all(|r| r.pass);
    Ok(DistortionReport { rows, min_ratio, max_ratio, k_declared: basis.k_bound, pass })
}

/// CSV summary of a distortion report, one row per test vector.
pub fn distortion_csv(report: &DistortionReport) -> String {
    let mut out = String::from("alpha_id,l1,lowerCert,measuredLower,measuredUpper,upperCert,pass\n");
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.alpha_id, r.l1, r.lower_cert, r.measured_lower, r.measured_upper, r.upper_cert, r.pass
        ));
    }
    out
}

/// Largest dimension k admitted by the random-matrix bound: floor of
/// `C * K^2 * ln(2N)`. Natural logarithm; C absorbs base changes.
pub fn dimension_bound(distortion: f64, n_dim: u64, c: f64) -> u64 {
    let v = c * distortion * distortion * (2.0 * n_dim as f64).ln();
    if v >= u64::MAX as f64 {
        u64::MAX
    } else {
        v.floor().max(0.0) as u64
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LengthBound {
    /// Distortion of the two-query basis used in the chain.
    pub distortion: f64,
    /// Smallest admissible codeword length (at least 1; may overflow to inf).
    pub min_len: f64,
    /// Base-2 logarithm of the bound, stable for huge values.
    pub log2_min_len: f64,
}

/// Minimal length of a two-query code with the given parameters, by running
/// the dimension bound backwards: a code of length N yields a basis of
/// distortion K in dimension N' = |B| N, so k <= C K^2 ln(2 N') forces
/// N >= exp(k / (C K^2)) / (2 |B|). With `sharp` the distortion uses the
/// tighter Parseval bound available when the reciprocals of the exponents
/// sum to one, turning the cube of |B| in the final inequality into a square.
/// All constants are this artifact's, labeled by the caller, never quoted.
pub fn ldc_length_bound(
    delta: f64,
    eps: f64,
    k: u64,
    n: u64,
    m: u64,
    c: f64,
    sharp: bool,
) -> Result<LengthBound> {
    if !(0.0 < delta && delta <= 0.5) || !(0.0 < eps && eps <= 0.5) {
        return Err(Error::Parameter("delta and eps must lie in (0, 1/2]".into()));
    }
    if c <= 0.0 || m > n || n == 0 {
        return Err(Error::Parameter("need c > 0 and 0 <= m <= n".into()));
    }
    let q = 2.0f64;
    let ball = choose_sum(n, m);
    let exponent = if sharp { q / 2.0 } else { (q + 2.0) / 2.0 };
    let distortion = q * ball.powf(exponent) / (2.0 * delta * eps);
    let log_n = k as f64 / (c * distortion * distortion) - (2.0 * ball).ln();
    let min_len = log_n.exp().max(1.0);
    Ok(LengthBound {
        distortion,
        min_len,
        log2_min_len: (log_n / std::f64::consts::LN_2).max(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::hadamard_code;
    use crate::forms::embedding_basis;
    use crate::smoothing::smooth_decoder;

    fn hadamard_basis(k: usize) -> EmbeddingBasis {
        let (code, decoder) = hadamard_code(k).unwrap();
        let smooth = smooth_decoder(&decoder, 0.125).unwrap();
        embedding_basis(&code, &smooth, 0.25, &[2.0, 2.0]).unwrap()
    }

    #[test]
    fn lower_certificate_on_basis_vectors_doubles_the_floor() {
        // exact bias 1 = 4 eps gives a factor 2 over the guaranteed floor
        let basis = hadamard_basis(3);
        let cert = lower_certificate(&basis, &[1.0, 0.0, 0.0]).unwrap();
        assert!((cert - 2.0).abs() < 1e-12);
        let cert = lower_certificate(&basis, &[1.0, 1.0, 1.0]).unwrap();
        assert!((cert - 6.0).abs() < 1e-12);
    }

    #[test]
    fn lower_certificate_rejects_zero_alpha() {
        let basis = hadamard_basis(2);
        assert!(matches!(
            lower_certificate(&basis, &[0.0, 0.0]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn certificates_never_drop_below_the_l1_floor() {
        let basis = hadamard_basis(3);
        for alpha in [
            vec![1.0f64, -2.0, 0.5],
            vec![-1.0, -1.0, -1.0],
            vec![0.0, 3.0, 0.0],
            vec![1e-3, -1e-3, 1e-3],
        ] {
            let l1: f64 = alpha.iter().map(|a| a.abs()).sum();
            let cert = lower_certificate(&basis, &alpha).unwrap();
            assert!(cert >= l1 - 1e-9, "{alpha:?}: {cert} < {l1}");
        }
    }

    #[test]
    fn upper_certificate_carries_the_declared_distortion() {
        let basis = hadamard_basis(3);
        assert!((upper_certificate(&basis, &[1.0, 0.0, 0.0]) - 128.0).abs() < 1e-9);
        assert_eq!(upper_certificate(&basis, &[0.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn certificates_are_homogeneous() {
        let basis = hadamard_basis(3);
        let alpha = [0.7, -1.3, 0.2];
        let base_lower = lower_certificate(&basis, &alpha).unwrap();
        let base_upper = upper_certificate(&basis, &alpha);
        for c in [2.0, -1.0, 1e-3] {
            let scaled: Vec<f64> = alpha.iter().map(|a| c * a).collect();
            let lower = lower_certificate(&basis, &scaled).unwrap();
            let upper = upper_certificate(&basis, &scaled);
            assert!((lower - c.abs() * base_lower).abs() < 1e-9);
            assert!((upper - c.abs() * base_upper).abs() < 1e-9);
        }
    }

    #[test]
    fn basis_vector_report_measures_the_exact_ratio() {
        let basis = hadamard_basis(3);
        let report = distortion_report(&basis, AlphaStrategy::BasisVectors).unwrap();
        assert!(report.pass);
        assert!((report.min_ratio - 4.0).abs() < 1e-8);
        assert!((report.max_ratio - 4.0).abs() < 1e-8);
    }

    #[test]
    fn random_sign_report_keeps_the_eigenvalue_identity() {
        let basis = hadamard_basis(3);
        let report = distortion_report(
            &basis,
            AlphaStrategy::RandomSigns { count: 25, seed: 42 },
        )
        .unwrap();
        assert!(report.pass);
        for row in &report.rows {
            assert!((row.measured_lower - 4.0 * row.l1).abs() < 1e-6, "{row:?}");
        }
    }

    #[test]
    fn gaussian_report_passes_the_sandwich() {
        let basis = hadamard_basis(3);
        let report = distortion_report(
            &basis,
            AlphaStrategy::RandomGaussian { count: 10, seed: 7 },
        )
        .unwrap();
        assert!(report.pass);
        for row in &report.rows {
            assert!((row.measured_lower - 4.0 * row.l1).abs() < 1e-6);
        }
    }

    #[test]
    fn zeroed_form_is_flagged() {
        let mut basis = hadamard_basis(3);
        basis.forms[0] = SparseForm::new(2, basis.params.dim);
        let report = distortion_report(&basis, AlphaStrategy::BasisVectors).unwrap();
        assert!(!report.pass);
        let bad = &report.rows[0];
        assert!(bad.lower_cert < 1.0);
        assert!(!bad.pass);
    }

    #[test]
    fn triangle_consistency_of_measured_norms() {
        let basis = hadamard_basis(3);
        let form_norms: Vec<f64> = basis
            .forms
            .iter()
            .map(|f| operator_norm(f).unwrap().lower)
            .collect();
        let alpha = [1.5, -0.5, 2.0];
        let mut combined = SparseForm::new(2, basis.params.dim);
        for (a, f) in alpha.iter().zip(&basis.forms) {
            combined.add_scaled(f, *a);
        }
        let measured = operator_norm(&combined).unwrap().lower;
        let triangle: f64 = alpha.iter().zip(&form_norms).map(|(a, n)| a.abs() * n).sum();
        assert!(measured <= triangle + 1e-9);
    }

    #[test]
    fn dimension_bound_arithmetic() {
        assert_eq!(dimension_bound(2.0, 8, 1.0), 11);
        assert_eq!(dimension_bound(1.0, 1, 1.0), 0);
        assert_eq!(dimension_bound(1.0, 1, 3.0), (3.0 * 2.0f64.ln()).floor() as u64);
    }

    #[test]
    fn length_bound_matches_its_closed_form() {
        // K = 2 * 2^2 / (2 * 1/4 * 1/4) = 64 at n = m = 1
        let b = ldc_length_bound(0.25, 0.25, 40960, 1, 1, 1.0, false).unwrap();
        assert!((b.distortion - 64.0).abs() < 1e-12);
        // exp(k / K^2) / (2 |B|) with k / K^2 = 10
        let expect = 10.0f64.exp() / 4.0;
        assert!((b.min_len - expect).abs() < 1e-6 * expect);
        assert!((b.log2_min_len - expect.log2()).abs() < 1e-9);
    }

    #[test]
    fn length_bound_is_vacuous_below_threshold_and_monotone() {
        let small = ldc_length_bound(0.25, 0.25, 8, 1, 1, 1.0, false).unwrap();
        assert_eq!(small.min_len, 1.0);
        let mut last = 0.0;
        for k in [1u64, 10_000, 50_000, 200_000] {
            let b = ldc_length_bound(0.25, 0.25, k, 1, 1, 1.0, false).unwrap();
            assert!(b.min_len >= last);
            last = b.min_len;
        }
    }

    #[test]
    fn sharp_flag_squares_the_ball_dependence() {
        let crude = ldc_length_bound(0.25, 0.25, 100, 4, 2, 1.0, false).unwrap();
        let sharp = ldc_length_bound(0.25, 0.25, 100, 4, 2, 1.0, true).unwrap();
        let ball = choose_sum(4, 2);
        assert!((crude.distortion / sharp.distortion - ball).abs() < 1e-9);
        assert!(sharp.min_len >= crude.min_len);
    }

    #[test]
    fn csv_summary_has_one_row_per_vector() {
        let basis = hadamard_basis(2);
        let report = distortion_report(&basis, AlphaStrategy::BasisVectors).unwrap();
        let csv = distortion_csv(&report);
        assert_eq!(csv.lines().count(), 1 + report.rows.len());
        assert!(csv.starts_with("alpha_id,"));
    }
}
