//! Globally adaptive Gauss-Kronrod (7/15) quadrature.

// Nodes and weights are kept at their published precision.
#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the odd Kronrod nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature<S> {
    pub value: S,
    /// Sum over subintervals of `|K15 - G7|`.
    pub error: S,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Piece<S> {
    lo: S,
    hi: S,
    value: S,
    error: S,
}

fn kronrod<S: Scalar, F: Fn(S) -> S>(f: &F, lo: S, hi: S) -> Piece<S> {
    let half = S::lit(0.5);
    let center = half * (lo + hi);
    let radius = half * (hi - lo);
    let fc = f(center);
    let mut k15 = fc * S::lit(WGK[7]);
    let mut g7 = fc * S::lit(WG[3]);
    for j in 0..7 {
        let dx = radius * S::lit(XGK[j]);
        let pair = f(center - dx) + f(center + dx);
        k15 = k15 + pair * S::lit(WGK[j]);
        if j % 2 == 1 {
            g7 = g7 + pair * S::lit(WG[j / 2]);
        }
    }
    Piece { lo, hi, value: k15 * radius, error: ((k15 - g7) * radius).abs() }
}

/// Integrates `f` over `[points[0], points[last]]`, seeding the subdivision
/// with every interior point (kinks, peaks). Bisects the worst subinterval
/// until the summed error estimate is at most `tolerance`.
pub fn integrate<S, F>(f: F, points: &[S], tolerance: S, max_intervals: usize) -> Result<Quadrature<S>>
where
    S: Scalar,
    F: Fn(S) -> S,
{
    let mut pieces: Vec<Piece<S>> =
        points.windows(2).filter(|w| w[1] > w[0]).map(|w| kronrod(&f, w[0], w[1])).collect();
    if pieces.is_empty() {
        return Ok(Quadrature { value: S::zero(), error: S::zero(), intervals: 0 });
    }
    loop {
        let error: S = pieces.iter().map(|p| p.error).sum();
        if error <= tolerance {
            let value = pieces.iter().map(|p| p.value).sum();
            return Ok(Quadrature { value, error, intervals: pieces.len() });
        }
        let (worst, _) =
            pieces
                .iter()
                .enumerate()
                .fold((0, S::neg_infinity()), |acc, (i, p)| if p.error > acc.1 { (i, p.error) } else { acc });
        let p = pieces[worst];
        let mid = S::lit(0.5) * (p.lo + p.hi);
        if pieces.len() >= max_intervals || !(mid > p.lo && mid < p.hi) {
            return Err(Error::QuadratureDiverged {
                tolerance: tolerance.to_f64_lossy(),
                estimate: error.to_f64_lossy(),
            });
        }
        pieces[worst] = kronrod(&f, p.lo, mid);
        pieces.push(kronrod(&f, mid, p.hi));
    }
}
