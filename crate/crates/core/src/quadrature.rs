//! Globally adaptive 15-point Gauss–Kronrod quadrature on `[0, ∞)`.
//!
//! The half line is mapped onto `(0, 1)` by `t = u / (1 - u)` with Jacobian
//! `1 / (1 - u)^2`; the interval with the largest error estimate is bisected
//! until the summed estimate meets the absolute tolerance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Default cap on the number of subintervals.
pub const MAX_SUBDIVISIONS: usize = 1 << 16;

#[allow(clippy::excessive_precision)]
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

#[allow(clippy::excessive_precision)]
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

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5] and the centre.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Clone, Copy, Debug)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn kronrod15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Segment {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut gauss = fc * WG[3];
    let mut kronrod = fc * WGK[7];
    let mut abs_sum = kronrod.abs();
    let mut values = [0.0; 15];
    values[7] = fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(centre - dx);
        let f2 = f(centre + dx);
        values[j] = f1;
        values[14 - j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((values[j] - mean).abs() + (values[14 - j] - mean).abs());
    }
    let value = kronrod * half;
    let res_abs = abs_sum * half.abs();
    let res_asc = asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Segment { a, b, value, error }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub subdivisions: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NotConverged {
    pub best: Estimate,
}

/// Integrates `f` over `[0, ∞)` to absolute tolerance `tol`.
///
/// `breakpoints` are points of `[0, ∞)` where `f` is not smooth; they become
/// initial interval boundaries.
pub fn integrate_half_line(
    f: impl Fn(f64) -> f64,
    breakpoints: &[f64],
    tol: f64,
    max_subdivisions: usize,
) -> Result<Estimate, NotConverged> {
    let g = |u: f64| {
        let v = 1.0 - u;
        let t = u / v;
        let y = f(t);
        if y == 0.0 {
            0.0
        } else {
            y / (v * v)
        }
    };
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .filter(|t| t.is_finite() && **t > 0.0)
        .map(|&t| t / (1.0 + t))
        .collect();
    cuts.push(0.0);
    cuts.push(1.0);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut heap: BinaryHeap<Segment> = cuts.windows(2).map(|w| kronrod15(&g, w[0], w[1])).collect();
    // Segments too narrow to bisect further; their error stays in the total.
    let mut frozen: Vec<Segment> = Vec::new();
    let mut count = heap.len();
    let mut running_error: f64 = heap.iter().map(|s| s.error).sum();
    loop {
        if running_error <= tol {
            // confirm against an exact re-summation
            let (value, error) = totals(&heap, &frozen);
            if error <= tol {
                return Ok(Estimate {
                    value,
                    error,
                    subdivisions: count,
                });
            }
            running_error = error;
        }
        let worst = match heap.pop() {
            Some(s) => s,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if count >= max_subdivisions {
            heap.push(worst);
            break;
        }
        if !(worst.a < mid && mid < worst.b) {
            frozen.push(worst);
            continue;
        }
        let left = kronrod15(&g, worst.a, mid);
        let right = kronrod15(&g, mid, worst.b);
        running_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        count += 1;
    }
    let (value, error) = totals(&heap, &frozen);
    if error <= tol {
        return Ok(Estimate {
            value,
            error,
            subdivisions: count,
        });
    }
    Err(NotConverged {
        best: Estimate {
            value,
            error,
            subdivisions: count,
        },
    })
}

fn totals(heap: &BinaryHeap<Segment>, frozen: &[Segment]) -> (f64, f64) {
    let mut segments: Vec<&Segment> = heap.iter().chain(frozen.iter()).collect();
    // fixed left-to-right order so the value does not depend on heap layout
    segments.sort_by(|x, y| x.a.total_cmp(&y.a));
    segments
        .iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error))
}
