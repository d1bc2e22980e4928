use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::detectors::{Constellation, DetectError, DetectionProblem};
use crate::linalg::ComplexMatrix;

/// Stream bit reserved for the channels used to confirm worst-case counts.
const WORST_CASE_STREAM_FLAG: u64 = 1 << 63;

/// `M x N` matrix of i.i.d. CN(0, 1) entries (real and imaginary parts each
/// N(0, 1/2)).
pub fn random_channel<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(m, n, |_, _| cn01(rng))
}

fn cn01<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Independent generator for one `(size, trial)` cell of a sweep.
///
/// The key stream is chosen from the size and trial index, so a trial's
/// channel does not depend on which worker runs it or in what order.
pub fn trial_rng(seed: u64, n: usize, m: usize, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((n as u64) << 48) ^ ((m as u64) << 32));
    rng.set_stream(trial);
    rng
}

pub(crate) fn worst_case_rng(seed: u64, n: usize, m: usize, index: u64) -> ChaCha8Rng {
    trial_rng(seed, n, m, WORST_CASE_STREAM_FLAG | index)
}

/// A transmitted symbol vector and the resulting detection problem.
#[derive(Debug, Clone)]
pub struct RandomProblem {
    pub problem: DetectionProblem,
    pub transmitted: Vec<Complex64>,
}

/// `y = H s + w` with uniformly drawn symbols and white CN(0, σ²) noise,
/// where `σ² = N / 10^(snr_db/10)` (per receive antenna SNR with unit
/// symbol energy). `snr_db = +inf` gives a noiseless channel.
pub fn random_problem<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    snr_db: f64,
    alpha: f64,
    constellation: &Constellation,
    rng: &mut R,
) -> Result<RandomProblem, DetectError> {
    let h = random_channel(m, n, rng);
    let transmitted: Vec<Complex64> = (0..n)
        .map(|_| constellation.points()[rng.gen_range(0..constellation.len())])
        .collect();
    let mut y = h.mul_vec(&transmitted)?;
    let noise_var = n as f64 / 10f64.powf(snr_db / 10.0);
    if noise_var > 0.0 {
        let sigma = noise_var.sqrt();
        for v in y.iter_mut() {
            *v += cn01(rng) * sigma;
        }
    }
    let problem = DetectionProblem::new(h, y, constellation.clone(), alpha)?;
    Ok(RandomProblem { problem, transmitted })
}
