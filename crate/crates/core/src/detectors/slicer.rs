use num_complex::Complex64;

/// Finite symbol alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
}

impl Constellation {
    /// Returns `None` for an empty or non-finite alphabet.
    pub fn new(points: Vec<Complex64>) -> Option<Self> {
        let ok = !points.is_empty() && points.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        ok.then_some(Self { points })
    }

    /// Unit-energy QPSK in the order `(1+i), (−1+i), (−1−i), (1−i)`, all over √2.
    pub fn qpsk() -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            points: vec![
                Complex64::new(a, a),
                Complex64::new(-a, a),
                Complex64::new(-a, -a),
                Complex64::new(a, -a),
            ],
        }
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.points.contains(&z)
    }

    /// Nearest point to `z`; ties go to the lowest index.
    pub fn slice(&self, z: Complex64) -> Complex64 {
        slicer(z, self)
    }
}

impl Default for Constellation {
    fn default() -> Self {
        Self::qpsk()
    }
}

pub fn slicer(z: Complex64, constellation: &Constellation) -> Complex64 {
    let mut best = constellation.points[0];
    let mut best_dist = (z - best).norm_sqr();
    for &p in &constellation.points[1..] {
        let d = (z - p).norm_sqr();
        if d < best_dist {
            best = p;
            best_dist = d;
        }
    }
    best
}
