// Published rule constants are kept at full printed precision.
#![allow(clippy::excessive_precision)]

/// Symmetric quadrature rule on the reference triangle `(0,0),(1,0),(0,1)`.
///
/// Points are barycentric; weights include the reference area, so they
/// sum to 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
    degree: usize,
}

impl QuadratureRule {
    /// Three-point vertex rule, exact for degree 1.
    pub fn vertex() -> Self {
        Self {
            points: vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            weights: vec![1.0 / 6.0; 3],
            degree: 1,
        }
    }

    /// Six-point Dunavant rule, exact for degree 4.
    pub fn degree4() -> Self {
        let mut rule = Self::empty(4);
        rule.push_orbit3(
            0.445_948_490_915_964_886_318_329_253_883_05,
            0.223_381_589_678_011_465_695_007_008_433_12,
        );
        rule.push_orbit3(
            0.091_576_213_509_770_743_459_571_463_402_202,
            0.109_951_743_655_321_867_638_326_324_900_21,
        );
        rule
    }

    /// Twelve-point Dunavant rule, exact for degree 6.
    ///
    /// Degree 6 covers every integrand the solver forms: `P2 * P2 * P2`
    /// (quadratic Brinkman weight against the velocity mass) and
    /// `|u|^2 * P1 * P1` with `u` quadratic.
    pub fn degree6() -> Self {
        let mut rule = Self::empty(6);
        rule.push_orbit3(
            0.249_286_745_170_910_421_291_638_553_107_02,
            0.116_786_275_726_379_366_025_289_611_385_58,
        );
        rule.push_orbit3(
            0.063_089_014_491_502_228_340_331_602_870_819,
            0.050_844_906_370_206_816_920_936_809_106_869,
        );
        rule.push_orbit6(
            0.053_145_049_844_816_947_353_249_671_631_398,
            0.310_352_451_033_784_405_416_607_733_956_55,
            0.082_851_075_618_373_575_193_553_456_420_442,
        );
        rule
    }

    fn empty(degree: usize) -> Self {
        Self {
            points: Vec::new(),
            weights: Vec::new(),
            degree,
        }
    }

    /// Points `(1-2a, a, a)` and rotations; `w` is the normalized weight.
    fn push_orbit3(&mut self, a: f64, w: f64) {
        let b = 1.0 - 2.0 * a;
        for p in [[b, a, a], [a, b, a], [a, a, b]] {
            self.points.push(p);
            self.weights.push(0.5 * w);
        }
    }

    /// All six permutations of `(a, b, 1-a-b)`.
    fn push_orbit6(&mut self, a: f64, b: f64, w: f64) {
        let c = 1.0 - a - b;
        for p in [
            [a, b, c],
            [a, c, b],
            [b, a, c],
            [b, c, a],
            [c, a, b],
            [c, b, a],
        ] {
            self.points.push(p);
            self.weights.push(0.5 * w);
        }
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self::degree6()
    }
}
