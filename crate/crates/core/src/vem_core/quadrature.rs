use crate::polymesh::Point2;

/// Symmetric triangle rule: barycentric points and weights summing to one.
#[derive(Clone, Copy, Debug)]
pub struct TriangleRule {
    pub points: &'static [[f64; 3]],
    pub weights: &'static [f64],
    pub degree: usize,
}

const MID: [[f64; 3]; 3] = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];
const MID_W: [f64; 3] = [1.0 / 3.0; 3];

const A4: f64 = 0.108_103_018_168_070;
const B4: f64 = 0.445_948_490_915_965;
const C4: f64 = 0.816_847_572_980_459;
const D4: f64 = 0.091_576_213_509_771;
const D6: [[f64; 3]; 6] = [
    [A4, B4, B4],
    [B4, A4, B4],
    [B4, B4, A4],
    [C4, D4, D4],
    [D4, C4, D4],
    [D4, D4, C4],
];
const D6_W: [f64; 6] = [
    0.223_381_589_678_011,
    0.223_381_589_678_011,
    0.223_381_589_678_011,
    0.109_951_743_655_322,
    0.109_951_743_655_322,
    0.109_951_743_655_322,
];

const A5: f64 = 0.059_715_871_789_770;
const B5: f64 = 0.470_142_064_105_115;
const C5: f64 = 0.797_426_985_353_087;
const D5: f64 = 0.101_286_507_323_456;
const D7: [[f64; 3]; 7] = [
    [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
    [A5, B5, B5],
    [B5, A5, B5],
    [B5, B5, A5],
    [C5, D5, D5],
    [D5, C5, D5],
    [D5, D5, C5],
];
const D7_W: [f64; 7] = [
    0.225,
    0.132_394_152_788_506,
    0.132_394_152_788_506,
    0.132_394_152_788_506,
    0.125_939_180_544_827,
    0.125_939_180_544_827,
    0.125_939_180_544_827,
];

/// Edge-midpoint rule, exact for quadratics.
pub const DEGREE2: TriangleRule = TriangleRule {
    points: &MID,
    weights: &MID_W,
    degree: 2,
};

pub const DEGREE4: TriangleRule = TriangleRule {
    points: &D6,
    weights: &D6_W,
    degree: 4,
};

pub const DEGREE5: TriangleRule = TriangleRule {
    points: &D7,
    weights: &D7_W,
    degree: 5,
};

impl TriangleRule {
    /// Physical points and weights (already multiplied by the area).
    pub fn map(&self, t: [Point2; 3]) -> impl Iterator<Item = (Point2, [f64; 3], f64)> + '_ {
        let area = 0.5 * (t[1] - t[0]).cross(t[2] - t[0]);
        self.points.iter().zip(self.weights).map(move |(l, w)| {
            let p = Point2::new(
                l[0] * t[0].x + l[1] * t[1].x + l[2] * t[2].x,
                l[0] * t[0].y + l[1] * t[1].y + l[2] * t[2].y,
            );
            (p, *l, w * area)
        })
    }

    pub fn integrate(&self, t: [Point2; 3], f: impl Fn(Point2) -> f64) -> f64 {
        self.map(t).map(|(p, _, w)| w * f(p)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_monomials_up_to_degree() {
        // ∫_T x^a y^b over the unit triangle is a! b! / (a + b + 2)!
        let fact = |k: u32| (1..=k).map(f64::from).product::<f64>();
        let t = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)];
        for rule in [DEGREE2, DEGREE4, DEGREE5] {
            assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for a in 0..=rule.degree as u32 {
                for b in 0..=(rule.degree as u32 - a) {
                    let exact = fact(a) * fact(b) / fact(a + b + 2);
                    let q = rule.integrate(t, |p| p.x.powi(a as i32) * p.y.powi(b as i32));
                    assert!((q - exact).abs() < 1e-14, "degree {} x^{a} y^{b}", rule.degree);
                }
            }
        }
    }
}
