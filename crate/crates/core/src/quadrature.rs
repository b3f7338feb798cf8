//! Symmetric Gauss rules on triangles, in barycentric coordinates with
//! weights normalized to sum to one.

#[derive(Debug, Clone, Copy)]
pub struct TriangleRule {
    pub degree: usize,
    pub points: &'static [([f64; 3], f64)],
}

const THIRD: f64 = 1.0 / 3.0;
const SIXTH: f64 = 1.0 / 6.0;

static DEGREE2: [([f64; 3], f64); 3] = [
    ([2.0 / 3.0, SIXTH, SIXTH], THIRD),
    ([SIXTH, 2.0 / 3.0, SIXTH], THIRD),
    ([SIXTH, SIXTH, 2.0 / 3.0], THIRD),
];

// sqrt(15) = 3.872983346207417
const A1: f64 = (6.0 - 3.872_983_346_207_417) / 21.0;
const B1: f64 = (9.0 + 2.0 * 3.872_983_346_207_417) / 21.0;
const A2: f64 = (6.0 + 3.872_983_346_207_417) / 21.0;
const B2: f64 = (9.0 - 2.0 * 3.872_983_346_207_417) / 21.0;
const W1: f64 = (155.0 - 3.872_983_346_207_417) / 1200.0;
const W2: f64 = (155.0 + 3.872_983_346_207_417) / 1200.0;

static DEGREE5: [([f64; 3], f64); 7] = [
    ([THIRD, THIRD, THIRD], 9.0 / 40.0),
    ([A1, A1, B1], W1),
    ([A1, B1, A1], W1),
    ([B1, A1, A1], W1),
    ([A2, A2, B2], W2),
    ([A2, B2, A2], W2),
    ([B2, A2, A2], W2),
];

pub const DEGREE_2: TriangleRule = TriangleRule {
    degree: 2,
    points: &DEGREE2,
};

pub const DEGREE_5: TriangleRule = TriangleRule {
    degree: 5,
    points: &DEGREE5,
};

/// Rule exact to the requested polynomial degree; only 2 and 5 are provided.
pub fn rule(degree: usize) -> Option<TriangleRule> {
    match degree {
        2 => Some(DEGREE_2),
        5 => Some(DEGREE_5),
        _ => None,
    }
}
